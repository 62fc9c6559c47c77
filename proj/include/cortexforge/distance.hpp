#pragma once

#include <cortexforge/bvh.hpp>
#include <cortexforge/mesh.hpp>

#include <cmath>
#include <unordered_map>

namespace cortexforge {

/// Which part of a triangle a closest point lies on.
struct TriangleFeature {
  enum Kind { vertex, edge, face } kind = face;
  int local = 0;  // vertex 0..2, or edge 0 = (0,1), 1 = (1,2), 2 = (2,0)
};

/// Closest point on triangle abc to p (Ericson, Real-Time Collision
/// Detection, 5.1.5), with the Voronoi feature it falls on.
inline Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                                      TriangleFeature& feature) {
  const Vec3 ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    feature = {TriangleFeature::vertex, 0};
    return a;
  }
  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    feature = {TriangleFeature::vertex, 1};
    return b;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    feature = {TriangleFeature::edge, 0};
    return a + (d1 / (d1 - d3)) * ab;
  }
  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    feature = {TriangleFeature::vertex, 2};
    return c;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    feature = {TriangleFeature::edge, 2};
    return a + (d2 / (d2 - d6)) * ac;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    feature = {TriangleFeature::edge, 1};
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  feature = {TriangleFeature::face, 0};
  return a + ab * (vb * denom) + ac * (vc * denom);
}

/// Point-to-surface distance queries against a fixed triangle mesh. Signs
/// come from angle-weighted pseudonormals at the closest feature and are
/// meaningful for closed, consistently oriented meshes (negative inside).
class MeshDistanceField {
 public:
  struct Hit {
    double distance = 0.0;
    Vec3 point = Vec3::Zero();
    int face = -1;
    TriangleFeature feature;
  };

  explicit MeshDistanceField(TriangleMesh mesh) : mesh_(std::move(mesh)) {
    std::vector<Aabb> boxes(mesh_.faces.size());
    face_normals_.resize(mesh_.faces.size());
    vertex_normals_.assign(mesh_.vertices.size(), Vec3::Zero());
    for (std::size_t f = 0; f < mesh_.faces.size(); ++f) {
      const auto& t = mesh_.faces[f];
      for (int v : t) boxes[f].expand(mesh_.vertices[v]);
      const Vec3 n = mesh_.face_normal_scaled(f);
      face_normals_[f] = n.norm() > 0.0 ? Vec3(n.normalized()) : Vec3::Zero();
      for (int e = 0; e < 3; ++e) {
        const Vec3& p = mesh_.vertices[t[e]];
        const Vec3 u = mesh_.vertices[t[(e + 1) % 3]] - p;
        const Vec3 w = mesh_.vertices[t[(e + 2) % 3]] - p;
        const double angle = std::atan2(u.cross(w).norm(), u.dot(w));
        vertex_normals_[t[e]] += angle * face_normals_[f];
        edge_normals_.try_emplace(detail::edge_key(t[e], t[(e + 1) % 3]), Vec3::Zero())
            .first->second += face_normals_[f];
      }
    }
    bvh_ = Bvh(std::move(boxes));
  }

  const TriangleMesh& mesh() const { return mesh_; }

  Hit closest(const Vec3& p) const {
    Hit hit;
    auto [face, d2] = bvh_.nearest(p, [&](int f) {
      const auto& t = mesh_.faces[f];
      TriangleFeature feature;
      const Vec3 q = closest_point_on_triangle(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]],
                                               mesh_.vertices[t[2]], feature);
      return (q - p).squaredNorm();
    });
    if (face < 0) throw EmptySurfaceError("distance query against an empty mesh");
    const auto& t = mesh_.faces[face];
    hit.face = face;
    hit.point = closest_point_on_triangle(p, mesh_.vertices[t[0]], mesh_.vertices[t[1]], mesh_.vertices[t[2]],
                                          hit.feature);
    hit.distance = std::sqrt(d2);
    return hit;
  }

  double unsigned_distance(const Vec3& p) const { return closest(p).distance; }

  /// Negative inside, positive outside.
  double signed_distance(const Vec3& p) const {
    const Hit hit = closest(p);
    if (hit.distance == 0.0) return 0.0;
    return (p - hit.point).dot(pseudonormal(hit)) < 0.0 ? -hit.distance : hit.distance;
  }

  Vec3 pseudonormal(const Hit& hit) const {
    const auto& t = mesh_.faces[hit.face];
    switch (hit.feature.kind) {
      case TriangleFeature::vertex: return vertex_normals_[t[hit.feature.local]];
      case TriangleFeature::edge: {
        const int a = t[hit.feature.local], b = t[(hit.feature.local + 1) % 3];
        return edge_normals_.at(detail::edge_key(a, b));
      }
      case TriangleFeature::face: break;
    }
    return face_normals_[hit.face];
  }

 private:
  TriangleMesh mesh_;
  Bvh bvh_;
  std::vector<Vec3> face_normals_;
  std::vector<Vec3> vertex_normals_;
  std::unordered_map<std::uint64_t, Vec3> edge_normals_;
};

}  // namespace cortexforge
