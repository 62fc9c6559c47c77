#pragma once

#include <cortexforge/mc_tables.hpp>
#include <cortexforge/mesh.hpp>
#include <cortexforge/volume.hpp>

#include <unordered_map>

namespace cortexforge {

/// Marching-cubes isosurface in world coordinates.
///
/// For sdf grids the inside is where values fall below `iso`; for every other
/// kind the inside is where values exceed it. Faces are wound so that normals
/// point outward. Vertices are shared through the identity of the grid edge
/// they lie on, so the surface is watertight wherever it stays clear of the
/// grid boundary.
inline TriangleMesh extract_isosurface(const VoxelGrid& grid, double iso) {
  const auto [nx, ny, nz] = grid.shape;
  if (nx < 2 || ny < 2 || nz < 2) throw PreconditionError("isosurface extraction needs >= 2 voxels per axis");

  // Table triangles face the below-iso side; flip when that side is the inside.
  bool flip = grid.kind == GridKind::sdf;
  if (grid.affine.linear().determinant() < 0.0) flip = !flip;

  TriangleMesh mesh;
  std::unordered_map<std::uint64_t, int> edge_vertex;
  auto vertex_on_edge = [&](int i, int j, int k, int edge, const double* values) {
    const auto& corners = mc::kEdgeCorners[edge];
    const auto& oa = mc::kCornerOffsets[corners[0]];
    const auto& ob = mc::kCornerOffsets[corners[1]];
    const int axis = oa[0] != ob[0] ? 0 : (oa[1] != ob[1] ? 1 : 2);
    // Orient the edge from its lower corner.
    const bool a_low = oa[axis] < ob[axis];
    const auto& lo = a_low ? oa : ob;
    const double v_lo = values[a_low ? corners[0] : corners[1]];
    const double v_hi = values[a_low ? corners[1] : corners[0]];
    const std::uint64_t key = static_cast<std::uint64_t>(grid.index(i + lo[0], j + lo[1], k + lo[2])) * 3 + axis;
    auto [it, inserted] = edge_vertex.try_emplace(key, static_cast<int>(mesh.vertices.size()));
    if (inserted) {
      double t = (iso - v_lo) / (v_hi - v_lo);
      t = std::clamp(t, 1e-6, 1.0 - 1e-6);
      Vec3 idx(i + lo[0], j + lo[1], k + lo[2]);
      idx[axis] += t;
      mesh.vertices.push_back(grid.affine.to_world(idx));
    }
    return it->second;
  };

  double values[8];
  int edge_ids[12];
  for (int k = 0; k < nz - 1; ++k) {
    for (int j = 0; j < ny - 1; ++j) {
      for (int i = 0; i < nx - 1; ++i) {
        int cube = 0;
        for (int c = 0; c < 8; ++c) {
          const auto& o = mc::kCornerOffsets[c];
          values[c] = grid.at(i + o[0], j + o[1], k + o[2]);
          if (values[c] < iso) cube |= 1 << c;
        }
        const int edges = mc::kEdgeTable[cube];
        if (edges == 0) continue;
        for (int e = 0; e < 12; ++e) {
          if (edges & (1 << e)) edge_ids[e] = vertex_on_edge(i, j, k, e, values);
        }
        for (const int* t = mc::kTriTable[cube]; *t != -1; t += 3) {
          const int a = edge_ids[t[0]], b = edge_ids[t[1]], c = edge_ids[t[2]];
          mesh.faces.push_back(flip ? Face{a, c, b} : Face{a, b, c});
        }
      }
    }
  }
  if (mesh.faces.empty()) throw EmptySurfaceError("isosurface is empty at level " + std::to_string(iso));
  return mesh;
}

}  // namespace cortexforge
