#pragma once

#include <cortexforge/bvh.hpp>
#include <cortexforge/intersection.hpp>
#include <cortexforge/mesh.hpp>

#include <algorithm>
#include <utility>
#include <vector>

namespace cortexforge {

using FacePair = std::pair<int, int>;

inline std::vector<Aabb> face_boxes(const TriangleMesh& mesh) {
  std::vector<Aabb> boxes(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    for (int v : mesh.faces[f]) boxes[f].expand(mesh.vertices[v]);
  }
  return boxes;
}

inline bool faces_share_vertex(const Face& a, const Face& b) {
  for (int x : a)
    for (int y : b)
      if (x == y) return true;
  return false;
}

/// True when faces i and j share no vertex and their closed triangles meet.
inline bool faces_intersect(const TriangleMesh& mesh, int i, int j) {
  const Face& a = mesh.faces[i];
  const Face& b = mesh.faces[j];
  if (faces_share_vertex(a, b)) return false;
  return triangles_intersect({mesh.vertices[a[0]], mesh.vertices[a[1]], mesh.vertices[a[2]]},
                             {mesh.vertices[b[0]], mesh.vertices[b[1]], mesh.vertices[b[2]]});
}

/// All intersecting pairs of vertex-disjoint faces, (i < j), sorted.
inline std::vector<FacePair> detect_self_intersections(const TriangleMesh& mesh) {
  const Bvh bvh(face_boxes(mesh));
  std::vector<FacePair> hits;
  bvh.overlapping_pairs([&](int i, int j) {
    if (faces_intersect(mesh, i, j)) hits.emplace_back(i, j);
  });
  std::sort(hits.begin(), hits.end());
  return hits;
}

/// Yes/no form of detect_self_intersections.
inline bool has_self_intersections(const TriangleMesh& mesh) {
  return !detect_self_intersections(mesh).empty();
}

}  // namespace cortexforge
