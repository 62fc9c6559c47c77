#pragma once

#include <cortexforge/common.hpp>
#include <cortexforge/errors.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <unordered_map>
#include <vector>

namespace cortexforge {

using Face = std::array<int, 3>;

/// Triangle surface: world-mm vertex positions plus faces wound
/// counter-clockwise when seen from outside.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Face> faces;

  std::size_t vertex_count() const { return vertices.size(); }
  std::size_t face_count() const { return faces.size(); }
  bool empty() const { return faces.empty(); }

  Vec3 face_normal_scaled(std::size_t f) const {
    const auto& t = faces[f];
    return (vertices[t[1]] - vertices[t[0]]).cross(vertices[t[2]] - vertices[t[0]]);
  }
  double face_area(std::size_t f) const { return 0.5 * face_normal_scaled(f).norm(); }
};

struct MeshDiagnostics {
  bool manifold = false;
  bool oriented = false;
  int components = 0;
  int euler_characteristic = 0;
  int genus = 0;
  std::size_t vertices = 0;
  std::size_t edges = 0;
  std::size_t faces = 0;
  std::size_t boundary_edges = 0;
  std::size_t nonmanifold_edges = 0;
  std::size_t nonmanifold_vertices = 0;
  std::size_t degenerate_faces = 0;
};

namespace detail {

inline std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint32_t>(std::min(a, b));
  const auto hi = static_cast<std::uint32_t>(std::max(a, b));
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Component label per face (faces sharing a vertex are connected). Labels are
/// the smallest vertex index in the component.
inline std::vector<std::size_t> face_components(const TriangleMesh& mesh) {
  DisjointSets sets(mesh.vertices.size());
  for (const auto& f : mesh.faces) {
    sets.unite(f[0], f[1]);
    sets.unite(f[0], f[2]);
  }
  std::vector<std::size_t> label(mesh.faces.size());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) label[f] = sets.find(mesh.faces[f][0]);
  return label;
}

}  // namespace detail

/// Topology report. Never throws: malformed meshes come back with the
/// relevant flags cleared.
inline MeshDiagnostics validate(const TriangleMesh& mesh) {
  MeshDiagnostics d;
  d.vertices = mesh.vertices.size();
  d.faces = mesh.faces.size();

  // Per undirected edge: number of uses and net orientation.
  struct EdgeUse {
    int count = 0;
    int forward = 0;
  };
  std::unordered_map<std::uint64_t, EdgeUse> edges;
  edges.reserve(mesh.faces.size() * 2);
  bool indices_ok = true;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const auto& t = mesh.faces[f];
    for (int v : t) {
      if (v < 0 || static_cast<std::size_t>(v) >= mesh.vertices.size()) indices_ok = false;
    }
    if (!indices_ok) break;
    if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2] || mesh.face_area(f) <= 1e-12) ++d.degenerate_faces;
    for (int e = 0; e < 3; ++e) {
      const int a = t[e], b = t[(e + 1) % 3];
      auto& use = edges[detail::edge_key(a, b)];
      ++use.count;
      use.forward += a < b ? 1 : -1;
    }
  }
  if (!indices_ok) return d;

  d.edges = edges.size();
  bool consistent = true;
  for (const auto& [key, use] : edges) {
    if (use.count == 1) ++d.boundary_edges;
    if (use.count > 2) ++d.nonmanifold_edges;
    if (use.count != 2 || use.forward != 0) consistent = false;
  }

  // Vertex manifoldness: the link of each vertex must be a single cycle or path.
  std::vector<std::vector<std::pair<int, int>>> links(mesh.vertices.size());
  for (const auto& t : mesh.faces) {
    for (int e = 0; e < 3; ++e) links[t[e]].emplace_back(t[(e + 1) % 3], t[(e + 2) % 3]);
  }
  for (const auto& link : links) {
    if (link.empty()) continue;
    std::map<int, std::vector<int>> adj;
    for (auto [a, b] : link) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    }
    int ends = 0;
    bool ok = true;
    for (const auto& [node, nbrs] : adj) {
      if (nbrs.size() > 2) ok = false;
      if (nbrs.size() == 1) ++ends;
    }
    if (ends != 0 && ends != 2) ok = false;
    if (ok) {
      // Connectedness of the link graph.
      std::vector<int> stack{adj.begin()->first};
      std::map<int, bool> seen{{adj.begin()->first, true}};
      while (!stack.empty()) {
        const int n = stack.back();
        stack.pop_back();
        for (int m : adj[n]) {
          if (!seen[m]) {
            seen[m] = true;
            stack.push_back(m);
          }
        }
      }
      ok = std::all_of(adj.begin(), adj.end(), [&](const auto& kv) { return seen[kv.first]; });
    }
    if (!ok) ++d.nonmanifold_vertices;
  }

  d.manifold = d.boundary_edges == 0 && d.nonmanifold_edges == 0 && d.nonmanifold_vertices == 0 &&
               d.degenerate_faces == 0;
  d.oriented = consistent;
  const auto labels = detail::face_components(mesh);
  std::vector<std::size_t> unique_labels(labels);
  std::sort(unique_labels.begin(), unique_labels.end());
  d.components = static_cast<int>(std::unique(unique_labels.begin(), unique_labels.end()) - unique_labels.begin());
  d.euler_characteristic = static_cast<int>(d.vertices) - static_cast<int>(d.edges) + static_cast<int>(d.faces);
  d.genus = (2 * d.components - d.euler_characteristic) / 2;
  return d;
}

/// Drops vertices no face references and renumbers faces, preserving order.
inline TriangleMesh compact(const TriangleMesh& mesh) {
  std::vector<int> remap(mesh.vertices.size(), -1);
  TriangleMesh out;
  out.faces.reserve(mesh.faces.size());
  for (const auto& f : mesh.faces) {
    for (int v : f) {
      if (remap[v] < 0) remap[v] = 0;
    }
  }
  int next = 0;
  for (std::size_t v = 0; v < remap.size(); ++v) {
    if (remap[v] == 0) {
      remap[v] = next++;
      out.vertices.push_back(mesh.vertices[v]);
    }
  }
  for (const auto& f : mesh.faces) out.faces.push_back({remap[f[0]], remap[f[1]], remap[f[2]]});
  return out;
}

/// Connected component with the most faces. Ties go to the component holding
/// the lowest original vertex index.
inline TriangleMesh largest_component(const TriangleMesh& mesh) {
  if (mesh.faces.empty()) throw EmptySurfaceError("largest_component of an empty mesh");
  const auto labels = detail::face_components(mesh);
  std::map<std::size_t, std::size_t> counts;
  for (auto l : labels) ++counts[l];
  std::size_t best = counts.begin()->first;
  for (const auto& [label, count] : counts) {
    if (count > counts[best]) best = label;
  }
  TriangleMesh kept;
  kept.vertices = mesh.vertices;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    if (labels[f] == best) kept.faces.push_back(mesh.faces[f]);
  }
  return compact(kept);
}

/// Sorted 1-ring neighbour lists.
inline std::vector<std::vector<int>> one_rings(const TriangleMesh& mesh) {
  std::vector<std::vector<int>> rings(mesh.vertices.size());
  for (const auto& f : mesh.faces) {
    for (int e = 0; e < 3; ++e) {
      rings[f[e]].push_back(f[(e + 1) % 3]);
      rings[f[e]].push_back(f[(e + 2) % 3]);
    }
  }
  for (auto& r : rings) {
    std::sort(r.begin(), r.end());
    r.erase(std::unique(r.begin(), r.end()), r.end());
  }
  return rings;
}

/// Vertices incident to an edge used by only one face.
inline std::vector<bool> boundary_vertices(const TriangleMesh& mesh) {
  std::unordered_map<std::uint64_t, int> uses;
  for (const auto& f : mesh.faces)
    for (int e = 0; e < 3; ++e) ++uses[detail::edge_key(f[e], f[(e + 1) % 3])];
  std::vector<bool> on_boundary(mesh.vertices.size(), false);
  for (const auto& [key, count] : uses) {
    if (count == 1) {
      on_boundary[key >> 32] = true;
      on_boundary[key & 0xffffffffu] = true;
    }
  }
  return on_boundary;
}

/// Orthonormal frame at a vertex: surface normal plus two tangent directions.
struct VertexFrame {
  Vec3 normal;
  Vec3 tangent1;
  Vec3 tangent2;
};

/// Normal = normalized area-weighted mean of incident face normals.
/// tangent1 = the coordinate axis least aligned with the normal, projected
/// onto the tangent plane; tangent2 = normal x tangent1.
inline std::vector<VertexFrame> vertex_frames(const TriangleMesh& mesh) {
  std::vector<Vec3> accum(mesh.vertices.size(), Vec3::Zero());
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    const Vec3 n = mesh.face_normal_scaled(f);
    for (int v : mesh.faces[f]) accum[v] += n;
  }
  std::vector<VertexFrame> frames(mesh.vertices.size());
  for (std::size_t v = 0; v < accum.size(); ++v) {
    const double len = accum[v].norm();
    if (!(len > 1e-300)) {
      throw DegenerateVertexError("vertex " + std::to_string(v) + " has a zero-area umbrella");
    }
    const Vec3 n = accum[v] / len;
    int axis = 0;
    for (int a = 1; a < 3; ++a) {
      if (std::abs(n[a]) < std::abs(n[axis])) axis = a;
    }
    Vec3 t = Vec3::Unit(axis) - n[axis] * n;
    t.normalize();
    // One re-orthogonalization pass keeps |n.t| at rounding level.
    t -= n.dot(t) * n;
    t.normalize();
    frames[v] = {n, t, n.cross(t).normalized()};
  }
  return frames;
}

/// Uniform-umbrella Laplacian smoothing. Each iteration applies a `lambda`
/// step and, when `mu` is non-zero, a following `mu` step (Taubin). Vertices
/// on open boundaries stay fixed.
inline TriangleMesh smooth(const TriangleMesh& mesh, int iterations, double lambda, double mu) {
  if (iterations < 0) throw PreconditionError("smoothing iterations must be >= 0");
  TriangleMesh out = mesh;
  if (iterations == 0) return out;
  const auto rings = one_rings(mesh);
  const auto pinned = boundary_vertices(mesh);
  std::vector<Vec3> next(out.vertices.size());
  auto step = [&](double factor) {
    for (std::size_t v = 0; v < out.vertices.size(); ++v) {
      if (pinned[v] || rings[v].empty()) {
        next[v] = out.vertices[v];
        continue;
      }
      Vec3 mean = Vec3::Zero();
      for (int u : rings[v]) mean += out.vertices[u];
      mean /= static_cast<double>(rings[v].size());
      next[v] = out.vertices[v] + factor * (mean - out.vertices[v]);
    }
    out.vertices.swap(next);
  };
  for (int it = 0; it < iterations; ++it) {
    step(lambda);
    if (mu != 0.0) step(mu);
  }
  return out;
}

/// Signed enclosed volume (positive for outward-oriented closed meshes).
inline double signed_volume(const TriangleMesh& mesh) {
  double vol = 0.0;
  for (const auto& f : mesh.faces) {
    vol += mesh.vertices[f[0]].dot(mesh.vertices[f[1]].cross(mesh.vertices[f[2]]));
  }
  return vol / 6.0;
}

inline double surface_area(const TriangleMesh& mesh) {
  double area = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) area += mesh.face_area(f);
  return area;
}

}  // namespace cortexforge
