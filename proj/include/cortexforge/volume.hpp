#pragma once

#include <cortexforge/common.hpp>
#include <cortexforge/errors.hpp>

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <utility>
#include <string>
#include <string_view>
#include <vector>

namespace cortexforge {

/// Voxel-index to world-millimetre transform. The linear part must be
/// invertible and the last row must be (0, 0, 0, 1).
class Affine {
 public:
  Affine() : matrix_(Mat4::Identity()) {}

  explicit Affine(const Mat4& m) : matrix_(m) {
    if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
      throw GeometryError("affine last row must be (0,0,0,1)");
    }
    if (!(std::abs(m.topLeftCorner<3, 3>().determinant()) > 1e-9)) {
      throw GeometryError("affine linear part is not invertible");
    }
  }

  static Affine from_spacing(const Vec3& spacing, const Vec3& origin = Vec3::Zero()) {
    Mat4 m = Mat4::Identity();
    m(0, 0) = spacing.x();
    m(1, 1) = spacing.y();
    m(2, 2) = spacing.z();
    m.block<3, 1>(0, 3) = origin;
    return Affine(m);
  }

  const Mat4& matrix() const { return matrix_; }
  Mat3 linear() const { return matrix_.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return matrix_.block<3, 1>(0, 3); }

  Vec3 to_world(const Vec3& index) const { return linear() * index + translation(); }
  Vec3 to_index(const Vec3& world) const { return inverse().to_world(world); }

  Affine inverse() const {
    const Mat3 inv = linear().inverse();
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = inv;
    m.block<3, 1>(0, 3) = -inv * translation();
    return Affine(m);
  }

  /// this ∘ other (apply `other` first).
  Affine compose(const Affine& other) const { return Affine(matrix_ * other.matrix_); }

  /// Voxel size along each index axis (column norms of the linear part).
  Vec3 spacing() const { return linear().colwise().norm().transpose(); }

  bool operator==(const Affine& o) const { return matrix_ == o.matrix_; }

 private:
  Mat4 matrix_;
};

enum class GridKind { intensity, label, mask, sdf };

inline std::string_view to_string(GridKind k) {
  switch (k) {
    case GridKind::intensity: return "intensity";
    case GridKind::label: return "label";
    case GridKind::mask: return "mask";
    case GridKind::sdf: return "sdf";
  }
  return "unknown";
}

/// Dense 3D array in x-fastest order with its voxel-to-world geometry.
struct VoxelGrid {
  Index3 shape{0, 0, 0};
  std::vector<float> data;
  Affine affine;
  GridKind kind = GridKind::intensity;

  VoxelGrid() = default;
  VoxelGrid(Index3 shape_, Affine affine_, GridKind kind_, float fill = 0.0f)
      : shape(shape_), affine(std::move(affine_)), kind(kind_) {
    if (shape[0] <= 0 || shape[1] <= 0 || shape[2] <= 0) {
      throw DimensionalityError("grid shape must be positive");
    }
    data.assign(voxel_count(), fill);
  }

  std::size_t voxel_count() const {
    return static_cast<std::size_t>(shape[0]) * shape[1] * shape[2];
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(shape[0]) * (j + static_cast<std::size_t>(shape[1]) * k);
  }
  Index3 unravel(std::size_t n) const {
    const int i = static_cast<int>(n % shape[0]);
    const int j = static_cast<int>((n / shape[0]) % shape[1]);
    const int k = static_cast<int>(n / (static_cast<std::size_t>(shape[0]) * shape[1]));
    return {i, j, k};
  }
  bool contains(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < shape[0] && j < shape[1] && k < shape[2];
  }
  float& at(int i, int j, int k) { return data[index(i, j, k)]; }
  float at(int i, int j, int k) const { return data[index(i, j, k)]; }
  Vec3 center(int i, int j, int k) const { return affine.to_world(Vec3(i, j, k)); }

  bool same_geometry(const VoxelGrid& o) const {
    return shape == o.shape && affine == o.affine;
  }

  /// Throws when the storage or value-set invariants of `kind` are violated.
  void validate() const {
    if (shape[0] <= 0 || shape[1] <= 0 || shape[2] <= 0) {
      throw DimensionalityError("grid shape must be positive");
    }
    if (data.size() != voxel_count()) throw FormatError("grid data length does not match shape");
    for (float v : data) {
      if (kind == GridKind::mask && v != 0.0f && v != 1.0f) {
        throw KindError("mask grid holds a value outside {0,1}");
      }
      if (kind == GridKind::label && (v < 0.0f || v != std::floor(v))) {
        throw KindError("label grid holds a non-integer or negative value");
      }
      if (!std::isfinite(v)) throw FormatError("grid holds a non-finite value");
    }
  }
};

enum class Interpolation { trilinear, nearest };

namespace detail {

inline bool index_in_domain(double x, int n) { return x >= -0.5 - 1e-9 && x <= n - 0.5 + 1e-9; }

/// Trilinear interpolation at a continuous voxel index. Indices within the
/// half-voxel rim of the outermost centres are clamped onto them.
inline double trilinear_at(const VoxelGrid& g, const Vec3& idx, double outside) {
  int base[3];
  double frac[3];
  for (int a = 0; a < 3; ++a) {
    const int n = g.shape[a];
    if (!index_in_domain(idx[a], n)) return outside;
    const double x = std::clamp(idx[a], 0.0, static_cast<double>(n - 1));
    if (n == 1) {
      base[a] = 0;
      frac[a] = 0.0;
      continue;
    }
    int c = static_cast<int>(std::floor(x));
    c = std::min(c, n - 2);
    base[a] = c;
    frac[a] = x - c;
  }
  const int di = g.shape[0] > 1 ? 1 : 0;
  const int dj = g.shape[1] > 1 ? 1 : 0;
  const int dk = g.shape[2] > 1 ? 1 : 0;
  const double fx = frac[0], fy = frac[1], fz = frac[2];
  auto v = [&](int a, int b, int c) {
    return static_cast<double>(g.at(base[0] + a * di, base[1] + b * dj, base[2] + c * dk));
  };
  const double c00 = v(0, 0, 0) * (1 - fx) + v(1, 0, 0) * fx;
  const double c10 = v(0, 1, 0) * (1 - fx) + v(1, 1, 0) * fx;
  const double c01 = v(0, 0, 1) * (1 - fx) + v(1, 0, 1) * fx;
  const double c11 = v(0, 1, 1) * (1 - fx) + v(1, 1, 1) * fx;
  const double c0 = c00 * (1 - fy) + c10 * fy;
  const double c1 = c01 * (1 - fy) + c11 * fy;
  return c0 * (1 - fz) + c1 * fz;
}

inline double nearest_at(const VoxelGrid& g, const Vec3& idx, double outside) {
  int n[3];
  for (int a = 0; a < 3; ++a) {
    if (!index_in_domain(idx[a], g.shape[a])) return outside;
    n[a] = std::clamp(static_cast<int>(std::floor(idx[a] + 0.5)), 0, g.shape[a] - 1);
  }
  return g.at(n[0], n[1], n[2]);
}

}  // namespace detail

/// Samples `grid` at every voxel centre of the target geometry.
///
/// Points outside the source field of view (beyond the half-voxel rim of its
/// outermost centres) take `outside`. Label and mask grids must use nearest
/// interpolation.
inline VoxelGrid resample(const VoxelGrid& grid, const Affine& target_affine, Index3 target_shape,
                          Interpolation method, double outside = 0.0) {
  if (method == Interpolation::trilinear &&
      (grid.kind == GridKind::label || grid.kind == GridKind::mask)) {
    throw KindError("label and mask grids must be resampled with nearest interpolation");
  }
  const Mat4 to_source = grid.affine.inverse().matrix() * target_affine.matrix();
  VoxelGrid out(target_shape, target_affine, grid.kind);
  const std::size_t plane = static_cast<std::size_t>(target_shape[0]) * target_shape[1];
  parallel_for(static_cast<std::size_t>(target_shape[2]), [&](std::size_t k) {
    for (int j = 0; j < target_shape[1]; ++j) {
      for (int i = 0; i < target_shape[0]; ++i) {
        const Vec3 idx = (to_source * Eigen::Vector4d(i, j, static_cast<double>(k), 1.0)).head<3>();
        const double v = method == Interpolation::trilinear ? detail::trilinear_at(grid, idx, outside)
                                                            : detail::nearest_at(grid, idx, outside);
        out.data[k * plane + static_cast<std::size_t>(j) * target_shape[0] + i] =
            static_cast<float>(v);
      }
    }
  });
  return out;
}

/// Canonical isotropic geometry covering the same world field of view:
/// output voxel axes follow +x, +y, +z and the output box is centred on the
/// input box.
inline std::pair<Affine, Index3> isotropic_geometry(const VoxelGrid& grid, double voxel_mm) {
  if (!(voxel_mm > 0.0)) throw PreconditionError("voxel size must be positive");
  Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 hi = -lo;
  for (int c = 0; c < 8; ++c) {
    const Vec3 corner((c & 1) ? grid.shape[0] - 0.5 : -0.5, (c & 2) ? grid.shape[1] - 0.5 : -0.5,
                      (c & 4) ? grid.shape[2] - 0.5 : -0.5);
    const Vec3 w = grid.affine.to_world(corner);
    lo = lo.cwiseMin(w);
    hi = hi.cwiseMax(w);
  }
  Index3 shape{};
  Vec3 origin;
  for (int a = 0; a < 3; ++a) {
    const double extent = hi[a] - lo[a];
    shape[a] = std::max(1, static_cast<int>(std::ceil(extent / voxel_mm - 1e-6)));
    origin[a] = 0.5 * (lo[a] + hi[a]) - 0.5 * (shape[a] - 1) * voxel_mm;
  }
  return {Affine::from_spacing(Vec3::Constant(voxel_mm), origin), shape};
}

/// Resamples onto a canonical voxel_mm-isotropic grid (see isotropic_geometry).
/// Intensity and sdf grids use trilinear interpolation, labels and masks nearest.
inline VoxelGrid conform_to_isotropic(const VoxelGrid& grid, double voxel_mm = 1.0,
                                      double outside = 0.0) {
  const auto [affine, shape] = isotropic_geometry(grid, voxel_mm);
  const bool discrete = grid.kind == GridKind::label || grid.kind == GridKind::mask;
  return resample(grid, affine, shape, discrete ? Interpolation::nearest : Interpolation::trilinear,
                  outside);
}

/// Sets every background region that is not 6-connected to the grid boundary
/// to foreground.
inline VoxelGrid binary_fill_holes(const VoxelGrid& mask) {
  if (mask.kind != GridKind::mask) throw KindError("binary_fill_holes requires a mask grid");
  const auto [nx, ny, nz] = mask.shape;
  std::vector<std::uint8_t> outside(mask.voxel_count(), 0);
  std::deque<std::size_t> queue;
  auto seed = [&](int i, int j, int k) {
    const std::size_t n = mask.index(i, j, k);
    if (mask.data[n] == 0.0f && !outside[n]) {
      outside[n] = 1;
      queue.push_back(n);
    }
  };
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        if (i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1) seed(i, j, k);
  static constexpr int kSteps[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0},
                                       {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  while (!queue.empty()) {
    const auto [i, j, k] = mask.unravel(queue.front());
    queue.pop_front();
    for (const auto& s : kSteps) {
      const int a = i + s[0], b = j + s[1], c = k + s[2];
      if (mask.contains(a, b, c)) seed(a, b, c);
    }
  }
  VoxelGrid out = mask;
  for (std::size_t n = 0; n < out.data.size(); ++n) {
    if (!outside[n]) out.data[n] = 1.0f;
  }
  return out;
}

/// Normalized sampled Gaussian, truncated at ceil(4 sigma) taps per side.
inline std::vector<double> gaussian_kernel(double sigma) {
  if (sigma <= 0.0) return {1.0};
  const int radius = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    k[t + radius] = std::exp(-0.5 * t * t / (sigma * sigma));
    sum += k[t + radius];
  }
  for (double& w : k) w /= sum;
  return k;
}

/// 1D convolution along index axis `axis` with edge replication.
inline VoxelGrid convolve_axis(const VoxelGrid& grid, int axis, const std::vector<double>& kernel) {
  VoxelGrid out = grid;
  const int radius = static_cast<int>(kernel.size() / 2);
  const int n = grid.shape[axis];
  parallel_for(grid.voxel_count(), [&](std::size_t flat) {
    Index3 p = grid.unravel(flat);
    const int centre = p[axis];
    double acc = 0.0;
    for (int t = -radius; t <= radius; ++t) {
      p[axis] = std::clamp(centre + t, 0, n - 1);
      acc += kernel[t + radius] * grid.at(p[0], p[1], p[2]);
    }
    out.data[flat] = static_cast<float>(acc);
  });
  return out;
}

/// Separable Gaussian blur; sigma in voxels, same on every axis.
inline VoxelGrid gaussian_smooth(const VoxelGrid& grid, double sigma_voxels) {
  const auto kernel = gaussian_kernel(sigma_voxels);
  VoxelGrid out = grid;
  if (out.kind == GridKind::mask || out.kind == GridKind::label) out.kind = GridKind::intensity;
  for (int a = 0; a < 3; ++a) out = convolve_axis(out, a, kernel);
  return out;
}

/// Mask of voxels whose value is >= level.
inline VoxelGrid threshold(const VoxelGrid& grid, double level) {
  VoxelGrid out(grid.shape, grid.affine, GridKind::mask);
  for (std::size_t n = 0; n < out.data.size(); ++n) out.data[n] = grid.data[n] >= level ? 1.0f : 0.0f;
  return out;
}

/// Adds `width` voxels of `value` on every side, keeping world positions fixed.
inline VoxelGrid pad(const VoxelGrid& grid, int width, float value = 0.0f) {
  const Index3 shape{grid.shape[0] + 2 * width, grid.shape[1] + 2 * width, grid.shape[2] + 2 * width};
  Mat4 m = grid.affine.matrix();
  m.block<3, 1>(0, 3) = grid.affine.to_world(Vec3::Constant(-width));
  VoxelGrid out(shape, Affine(m), grid.kind, value);
  for (int k = 0; k < grid.shape[2]; ++k)
    for (int j = 0; j < grid.shape[1]; ++j)
      for (int i = 0; i < grid.shape[0]; ++i)
        out.at(i + width, j + width, k + width) = grid.at(i, j, k);
  return out;
}

/// True when any non-zero voxel lies on the outer layer of the grid.
inline bool touches_boundary(const VoxelGrid& grid) {
  const auto [nx, ny, nz] = grid.shape;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        if ((i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1) &&
            grid.at(i, j, k) != 0.0f)
          return true;
  return false;
}

}  // namespace cortexforge
