#pragma once

// Analytic phantoms: sphere SDFs and a two-hemisphere label volume with
// matching targets. Used for tests, benchmarks and smoke runs.

#include <cortexforge/sdf.hpp>
#include <cortexforge/volume.hpp>

#include <array>

namespace cortexforge {

/// 1mm grid of n^3 voxels with voxel (0,0,0) at `origin`.
inline VoxelGrid cube_grid(int n, GridKind kind, const Vec3& origin = Vec3::Zero()) {
  return VoxelGrid({n, n, n}, Affine::from_spacing(Vec3::Ones(), origin), kind);
}

/// Exact clipped distance to a sphere, sampled at voxel centres.
inline SdfGrid sphere_sdf(const VoxelGrid& geometry, const Vec3& centre, double radius,
                          double clip_mm = kDefaultClipMm) {
  VoxelGrid g(geometry.shape, geometry.affine, GridKind::sdf);
  const auto [nx, ny, nz] = g.shape;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) g.at(i, j, k) = static_cast<float>((g.center(i, j, k) - centre).norm() - radius);
  return SdfGrid(std::move(g), clip_mm);
}

/// Mask of voxel centres strictly inside the sphere.
inline VoxelGrid sphere_mask(const VoxelGrid& geometry, const Vec3& centre, double radius) {
  VoxelGrid g(geometry.shape, geometry.affine, GridKind::mask);
  const auto [nx, ny, nz] = g.shape;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) g.at(i, j, k) = (g.center(i, j, k) - centre).norm() < radius ? 1.0f : 0.0f;
  return g;
}

struct HemispherePhantom {
  VoxelGrid labels;                // 0 background, 2/3 left WM/cortex, 41/42 right WM/cortex
  std::array<SdfGrid, 4> sdfs;     // lw, lp, rw, rp
  std::array<Vec3, 2> centres;     // left, right
  double wm_radius = 0.0;
  double pial_radius = 0.0;
};

/// Two concentric-sphere "hemispheres" side by side along x. Labels follow
/// the FreeSurfer lookup-table numbering for cerebral WM and cortex.
inline HemispherePhantom hemisphere_phantom(int n = 64, double wm_radius = 10.0, double pial_radius = 12.5) {
  HemispherePhantom p;
  p.wm_radius = wm_radius;
  p.pial_radius = pial_radius;
  const VoxelGrid geometry = cube_grid(n, GridKind::label);
  const double c = 0.5 * (n - 1);
  const double offset = 0.25 * n;
  p.centres = {Vec3(c - offset, c, c), Vec3(c + offset, c, c)};
  p.labels = geometry;
  const auto [nx, ny, nz] = geometry.shape;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const Vec3 x = geometry.center(i, j, k);
        for (int h = 0; h < 2; ++h) {
          const double r = (x - p.centres[h]).norm();
          if (r < wm_radius) p.labels.at(i, j, k) = h == 0 ? 2.0f : 41.0f;
          else if (r < pial_radius) p.labels.at(i, j, k) = h == 0 ? 3.0f : 42.0f;
        }
      }
  p.sdfs = {sphere_sdf(geometry, p.centres[0], wm_radius), sphere_sdf(geometry, p.centres[0], pial_radius),
            sphere_sdf(geometry, p.centres[1], wm_radius), sphere_sdf(geometry, p.centres[1], pial_radius)};
  return p;
}

}  // namespace cortexforge
