#pragma once

#include <cortexforge/distance.hpp>
#include <cortexforge/nifti.hpp>
#include <cortexforge/self_intersection.hpp>
#include <cortexforge/volume.hpp>

#include <charconv>
#include <cstdio>
#include <string>

namespace cortexforge {

inline constexpr double kDefaultClipMm = 5.0;

inline double clip(double value, double clip_mm) {
  if (!(clip_mm > 0.0)) throw PreconditionError("clip must be positive");
  return std::max(-clip_mm, std::min(clip_mm, value));
}

/// Signed distance volume in millimetres, negative inside, saturated at
/// +-clip_mm.
struct SdfGrid {
  VoxelGrid grid;
  double clip_mm = kDefaultClipMm;

  SdfGrid() = default;
  SdfGrid(VoxelGrid g, double clip_value) : grid(std::move(g)), clip_mm(clip_value) {
    if (!(clip_mm > 0.0)) throw PreconditionError("clip must be positive");
    grid.kind = GridKind::sdf;
    for (float& v : grid.data) v = static_cast<float>(clip(v, clip_mm));
  }
};

/// Samples the signed distance of a closed mesh at every voxel centre of
/// `geometry`, clipped to +-clip_mm. Throws PreconditionError for open,
/// non-oriented or self-intersecting meshes (the sign is undefined there).
inline SdfGrid mesh_to_sdf(const TriangleMesh& mesh, const VoxelGrid& geometry, double clip_mm = kDefaultClipMm) {
  if (!(clip_mm > 0.0)) throw PreconditionError("clip must be positive");
  const auto diag = validate(mesh);
  if (mesh.faces.empty() || !diag.manifold || !diag.oriented) {
    throw PreconditionError("mesh_to_sdf requires a closed, consistently oriented manifold mesh");
  }
  if (has_self_intersections(mesh)) throw PreconditionError("mesh_to_sdf requires a self-intersection-free mesh");

  const MeshDistanceField field(mesh);
  VoxelGrid out(geometry.shape, geometry.affine, GridKind::sdf);
  const auto [nx, ny, nz] = geometry.shape;
  parallel_for(static_cast<std::size_t>(nz), [&](std::size_t k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const double d = field.signed_distance(geometry.center(i, j, static_cast<int>(k)));
        out.at(i, j, static_cast<int>(k)) = static_cast<float>(clip(d, clip_mm));
      }
    }
  });
  return SdfGrid(std::move(out), clip_mm);
}

/// Trilinear value at a world point; +clip_mm outside the field of view.
inline double sample(const SdfGrid& sdf, const Vec3& point) {
  const Vec3 idx = sdf.grid.affine.to_index(point);
  return detail::trilinear_at(sdf.grid, idx, sdf.clip_mm);
}

/// Cache of the inverse affine for repeated sampling.
class SdfSampler {
 public:
  explicit SdfSampler(const SdfGrid& sdf)
      : sdf_(sdf), to_index_(sdf.grid.affine.inverse()),
        index_to_world_gradient_(sdf.grid.affine.linear().inverse().transpose()) {}

  double value(const Vec3& p) const { return detail::trilinear_at(sdf_.grid, to_index_.to_world(p), sdf_.clip_mm); }

  /// Analytic gradient of the trilinear interpolant in world units. Zero
  /// unless the point lies at least one voxel inside the grid. On a cell
  /// boundary the lower cell's polynomial is used.
  Vec3 gradient(const Vec3& p) const {
    const VoxelGrid& g = sdf_.grid;
    const Vec3 idx = to_index_.to_world(p);
    int base[3];
    double frac[3];
    for (int a = 0; a < 3; ++a) {
      if (!(idx[a] >= 1.0 && idx[a] <= g.shape[a] - 2.0)) return Vec3::Zero();
      const int c = std::clamp(static_cast<int>(std::ceil(idx[a])) - 1, 0, g.shape[a] - 2);
      base[a] = c;
      frac[a] = idx[a] - c;
    }
    auto v = [&](int a, int b, int c) { return static_cast<double>(g.at(base[0] + a, base[1] + b, base[2] + c)); };
    const double fx = frac[0], fy = frac[1], fz = frac[2];
    Vec3 grad_index;
    grad_index.x() = (1 - fy) * (1 - fz) * (v(1, 0, 0) - v(0, 0, 0)) + fy * (1 - fz) * (v(1, 1, 0) - v(0, 1, 0)) +
                     (1 - fy) * fz * (v(1, 0, 1) - v(0, 0, 1)) + fy * fz * (v(1, 1, 1) - v(0, 1, 1));
    grad_index.y() = (1 - fx) * (1 - fz) * (v(0, 1, 0) - v(0, 0, 0)) + fx * (1 - fz) * (v(1, 1, 0) - v(1, 0, 0)) +
                     (1 - fx) * fz * (v(0, 1, 1) - v(0, 0, 1)) + fx * fz * (v(1, 1, 1) - v(1, 0, 1));
    grad_index.z() = (1 - fx) * (1 - fy) * (v(0, 0, 1) - v(0, 0, 0)) + fx * (1 - fy) * (v(1, 0, 1) - v(1, 0, 0)) +
                     (1 - fx) * fy * (v(0, 1, 1) - v(0, 1, 0)) + fx * fy * (v(1, 1, 1) - v(1, 1, 0));
    return index_to_world_gradient_ * grad_index;
  }

 private:
  const SdfGrid& sdf_;
  Affine to_index_;
  Mat3 index_to_world_gradient_;
};

inline Vec3 sample_gradient(const SdfGrid& sdf, const Vec3& point) { return SdfSampler(sdf).gradient(point); }

/// Resamples an SDF onto new geometry; points outside map to +clip_mm.
inline SdfGrid resample(const SdfGrid& sdf, const Affine& target_affine, Index3 target_shape) {
  return SdfGrid(resample(sdf.grid, target_affine, target_shape, Interpolation::trilinear, sdf.clip_mm), sdf.clip_mm);
}

inline std::string sdf_description(double clip_mm) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "sdf:clip=%g", clip_mm);
  return buf;
}

/// Parses "sdf:clip=<mm>"; returns false for any other description.
inline bool parse_sdf_description(const std::string& text, double& clip_mm) {
  const std::string prefix = "sdf:clip=";
  if (text.rfind(prefix, 0) != 0) return false;
  try {
    std::size_t used = 0;
    const double v = std::stod(text.substr(prefix.size()), &used);
    if (!(v > 0.0)) return false;
    clip_mm = v;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

inline void save_sdf(const SdfGrid& sdf, const std::string& path) {
  save_nifti(sdf.grid, path, sdf_description(sdf.clip_mm));
}

/// Loads an SDF volume, taking the clip from the header description when
/// present (else `default_clip_mm`) and clipping every value on load.
inline SdfGrid load_sdf(const std::string& path, double default_clip_mm = kDefaultClipMm) {
  NiftiImage image = read_nifti(path);
  double clip_mm = default_clip_mm;
  parse_sdf_description(image.description, clip_mm);
  return SdfGrid(std::move(image.grid), clip_mm);
}

}  // namespace cortexforge
