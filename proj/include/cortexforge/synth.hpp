#pragma once

// Domain-randomized synthetic scans with matching SDF targets.

#include <cortexforge/common.hpp>
#include <cortexforge/errors.hpp>
#include <cortexforge/nifti.hpp>
#include <cortexforge/sdf.hpp>
#include <cortexforge/volume.hpp>

#include <json.hpp>

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace cortexforge {

enum class Orientation { axial, coronal, sagittal, isotropic };

inline std::string to_string(Orientation o) {
  switch (o) {
    case Orientation::axial: return "axial";
    case Orientation::coronal: return "coronal";
    case Orientation::sagittal: return "sagittal";
    case Orientation::isotropic: return "isotropic";
  }
  return "?";
}

inline Orientation parse_orientation(const std::string& s) {
  if (s == "axial") return Orientation::axial;
  if (s == "coronal") return Orientation::coronal;
  if (s == "sagittal") return Orientation::sagittal;
  if (s == "isotropic") return Orientation::isotropic;
  throw ConfigurationError("unknown orientation '" + s + "'");
}

/// Array axis across which slices are stacked (x, y, z = 0, 1, 2).
inline int slice_axis(Orientation o) {
  switch (o) {
    case Orientation::sagittal: return 0;
    case Orientation::coronal: return 1;
    default: return 2;
  }
}

struct AcquisitionParams {
  Orientation orientation = Orientation::isotropic;
  double spacing_mm = 1.0;
  double thickness_mm = 1.0;

  void validate() const {
    if (!(spacing_mm >= 1.0 && spacing_mm <= 9.0)) throw PreconditionError("slice spacing must lie in [1, 9] mm");
    if (!(thickness_mm >= 1.0 && thickness_mm <= spacing_mm))
      throw PreconditionError("slice thickness must lie in [1, spacing] mm");
  }
};

struct LabelIntensity {
  double mean = 0.0;
  double stddev = 0.0;
};

struct GmmParams {
  std::map<int, LabelIntensity> labels;
};

/// Composed spatial augmentation. The forward map moves anatomy at x to
///   R(rotation) * diag(scale) * (x - c) + c + translation
/// (c the grid centre), followed by a displacement interpolated from a
/// lattice of control points spread evenly over the grid.
struct DeformationParams {
  Vec3 rotation_deg = Vec3::Zero();
  Vec3 scale = Vec3::Ones();
  Vec3 translation_mm = Vec3::Zero();
  int lattice = 0;                // control points per axis (0 or >= 2)
  std::vector<Vec3> warp_mm;      // lattice^3 displacements, x fastest
  Vec3 control_spacing_mm = Vec3::Zero();

  bool is_identity() const {
    if (rotation_deg != Vec3::Zero() || scale != Vec3::Ones() || translation_mm != Vec3::Zero()) return false;
    for (const Vec3& w : warp_mm)
      if (w != Vec3::Zero()) return false;
    return true;
  }

  Mat3 linear() const {
    const double k = M_PI / 180.0;
    const Mat3 r = (Eigen::AngleAxisd(rotation_deg.z() * k, Vec3::UnitZ()) *
                    Eigen::AngleAxisd(rotation_deg.y() * k, Vec3::UnitY()) *
                    Eigen::AngleAxisd(rotation_deg.x() * k, Vec3::UnitX()))
                       .toRotationMatrix();
    return r * scale.asDiagonal();
  }

  void validate() const {
    for (int a = 0; a < 3; ++a)
      if (!(scale[a] >= 0.8 && scale[a] <= 1.25)) throw PreconditionError("deformation scale must lie in [0.8, 1.25]");
    if (lattice != 0 && (lattice < 2 || warp_mm.size() != static_cast<std::size_t>(lattice) * lattice * lattice))
      throw PreconditionError("warp lattice size does not match its displacements");
    if (std::abs(linear().determinant()) < 1e-9) throw GeometryError("deformation affine is not invertible");
  }
};

/// Sampling ranges for domain randomization.
struct SynthConfig {
  double gmm_mean_min = 0.0, gmm_mean_max = 255.0;
  double gmm_std_min = 1.0, gmm_std_max = 25.0;
  int bias_control_grid = 4;
  double bias_log_amplitude = 0.3;
  double rotation_max_deg = 20.0;
  double scale_min = 0.9, scale_max = 1.1;
  double translation_max_mm = 10.0;
  int warp_lattice = 8;
  double warp_amplitude_mm = 4.0;
  double noise_std_max = 15.0;
  double clip_mm = kDefaultClipMm;
  std::optional<Orientation> orientation;
  std::optional<double> spacing_mm;
  std::optional<double> thickness_mm;

  void validate() const {
    auto range = [](double lo, double hi, const char* what) {
      if (!(lo <= hi)) throw ConfigurationError(std::string(what) + ": minimum exceeds maximum");
    };
    range(gmm_mean_min, gmm_mean_max, "gmm mean");
    range(gmm_std_min, gmm_std_max, "gmm stddev");
    range(scale_min, scale_max, "scale");
    if (gmm_std_min < 0.0) throw ConfigurationError("gmm stddev must be non-negative");
    if (scale_min < 0.8 || scale_max > 1.25) throw ConfigurationError("scale range must lie within [0.8, 1.25]");
    if (bias_control_grid < 2) throw ConfigurationError("bias control grid must be >= 2");
    if (bias_log_amplitude < 0.0 || rotation_max_deg < 0.0 || translation_max_mm < 0.0 || warp_amplitude_mm < 0.0 ||
        noise_std_max < 0.0)
      throw ConfigurationError("amplitudes must be non-negative");
    if (warp_lattice < 2) throw ConfigurationError("warp lattice must be >= 2");
    if (!(clip_mm > 0.0)) throw ConfigurationError("clip must be positive");
    if (spacing_mm && (*spacing_mm < 1.0 || *spacing_mm > 9.0)) throw ConfigurationError("spacing must lie in [1, 9]");
    if (thickness_mm && *thickness_mm < 1.0) throw ConfigurationError("thickness must be >= 1");
  }
};

/// Fixed channel order of the four targets.
inline constexpr std::array<const char*, 4> kSdfChannels = {"lw", "lp", "rw", "rp"};

struct Provenance {
  std::uint64_t seed = 0;
  AcquisitionParams acquisition;
  DeformationParams deformation;
  GmmParams gmm;
  double noise_std = 0.0;
  int bias_control_grid = 0;
  double bias_log_amplitude = 0.0;
};

struct TrainingPair {
  VoxelGrid image;
  std::array<SdfGrid, 4> targets;
  Provenance provenance;
};

namespace detail {

enum SynthStream : std::uint64_t { kAcquisition = 1, kDeformation, kGmm, kRender, kBias, kNoiseLevel, kNoise };

inline bool is_unit_isotropic(const VoxelGrid& g) {
  const Mat3 l = g.affine.linear();
  for (int a = 0; a < 3; ++a)
    if (std::abs(l.col(a).norm() - 1.0) > 1e-6) return false;
  return true;
}

/// Trilinear interpolation of a lattice^3 field at normalized lattice coords.
template <typename T>
T lattice_at(const std::vector<T>& values, int lattice, const Vec3& u) {
  int base[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    const double x = std::clamp(u[a], 0.0, static_cast<double>(lattice - 1));
    base[a] = std::min(static_cast<int>(std::floor(x)), lattice - 2);
    f[a] = x - base[a];
  }
  auto at = [&](int i, int j, int k) {
    return values[(static_cast<std::size_t>(base[2] + k) * lattice + (base[1] + j)) * lattice + (base[0] + i)];
  };
  T acc = at(0, 0, 0) * 0.0;
  for (int c = 0; c < 8; ++c) {
    const int i = c & 1, j = (c >> 1) & 1, k = (c >> 2) & 1;
    const double w = (i ? f[0] : 1 - f[0]) * (j ? f[1] : 1 - f[1]) * (k ? f[2] : 1 - f[2]);
    acc = acc + at(i, j, k) * w;
  }
  return acc;
}

/// Lattice coordinates of voxel (i, j, k) when `lattice` points span the grid.
inline Vec3 lattice_coords(const VoxelGrid& g, int lattice, int i, int j, int k) {
  const int idx[3] = {i, j, k};
  Vec3 u;
  for (int a = 0; a < 3; ++a) u[a] = g.shape[a] > 1 ? idx[a] * double(lattice - 1) / (g.shape[a] - 1) : 0.0;
  return u;
}

/// Samples the input along `axis` at continuous position x (clamped).
inline double sample_axis(const VoxelGrid& g, Index3 p, int axis, double x) {
  const int n = g.shape[axis];
  x = std::clamp(x, 0.0, static_cast<double>(n - 1));
  const int lo = std::min(static_cast<int>(std::floor(x)), std::max(0, n - 2));
  const double f = n > 1 ? x - lo : 0.0;
  p[axis] = lo;
  const double a = g.at(p[0], p[1], p[2]);
  if (n == 1) return a;
  p[axis] = lo + 1;
  return a * (1 - f) + g.at(p[0], p[1], p[2]) * f;
}

}  // namespace detail

/// Acquisition draw honouring any fixed orientation, spacing or thickness in
/// `config`. Unset fields keep their random draw; thickness is redrawn on
/// [1, spacing] when only the spacing is fixed.
inline AcquisitionParams sample_acquisition(std::uint64_t seed, const SynthConfig& config) {
  std::mt19937_64 rng(seed);
  AcquisitionParams p;
  p.orientation = static_cast<Orientation>(std::uniform_int_distribution<int>(0, 3)(rng));
  p.spacing_mm = std::uniform_real_distribution<double>(1.0, 9.0)(rng);
  p.thickness_mm = std::uniform_real_distribution<double>(1.0, p.spacing_mm)(rng);
  if (config.orientation) p.orientation = *config.orientation;
  if (p.orientation == Orientation::isotropic) {
    p.spacing_mm = p.thickness_mm = 1.0;
    return p;
  }
  if (config.spacing_mm) {
    p.spacing_mm = *config.spacing_mm;
    if (!config.thickness_mm) p.thickness_mm = std::uniform_real_distribution<double>(1.0, p.spacing_mm)(rng);
  }
  if (config.thickness_mm) p.thickness_mm = *config.thickness_mm;
  p.thickness_mm = std::min(p.thickness_mm, p.spacing_mm);
  p.validate();
  return p;
}

/// Orientation uniform over four options, spacing U[1, 9], thickness
/// U[1, spacing]; isotropic draws become 1mm in every direction.
inline AcquisitionParams sample_acquisition(std::uint64_t seed) { return sample_acquisition(seed, SynthConfig{}); }

inline DeformationParams sample_deformation(const VoxelGrid& geometry, const SynthConfig& config,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng); };
  DeformationParams d;
  for (int a = 0; a < 3; ++a) d.rotation_deg[a] = uniform(-config.rotation_max_deg, config.rotation_max_deg);
  for (int a = 0; a < 3; ++a) d.scale[a] = uniform(config.scale_min, config.scale_max);
  for (int a = 0; a < 3; ++a) d.translation_mm[a] = uniform(-config.translation_max_mm, config.translation_max_mm);
  d.lattice = config.warp_lattice;
  d.warp_mm.resize(static_cast<std::size_t>(d.lattice) * d.lattice * d.lattice);
  for (Vec3& w : d.warp_mm)
    for (int a = 0; a < 3; ++a) w[a] = uniform(-config.warp_amplitude_mm, config.warp_amplitude_mm);
  const Mat3 l = geometry.affine.linear();
  for (int a = 0; a < 3; ++a) d.control_spacing_mm[a] = l.col(a).norm() * (geometry.shape[a] - 1) / (d.lattice - 1);
  return d;
}

/// Input-space point sampled by output voxel (i, j, k).
inline Vec3 deformation_source(const VoxelGrid& geometry, const DeformationParams& params, const Mat3& inverse_linear,
                               const Vec3& centre, int i, int j, int k) {
  const Vec3 p = geometry.center(i, j, k);
  Vec3 q = centre + inverse_linear * (p - centre - params.translation_mm);
  if (params.lattice >= 2)
    q += detail::lattice_at(params.warp_mm, params.lattice, detail::lattice_coords(geometry, params.lattice, i, j, k));
  return q;
}

/// Warps a label volume (nearest) and its SDFs (trilinear, +clip outside)
/// through one composed transform.
inline std::pair<VoxelGrid, std::array<SdfGrid, 4>> apply_deformation(const VoxelGrid& labels,
                                                                        const std::array<SdfGrid, 4>& sdfs,
                                                                        const DeformationParams& params) {
  for (const auto& s : sdfs)
    if (!labels.same_geometry(s.grid)) throw PreconditionError("labels and SDFs must share geometry");
  params.validate();
  if (params.is_identity()) return {labels, sdfs};

  const Mat3 inverse_linear = params.linear().inverse();
  const Vec3 centre = labels.affine.to_world(0.5 * Vec3(labels.shape[0] - 1, labels.shape[1] - 1, labels.shape[2] - 1));
  const Affine to_index = labels.affine.inverse();

  VoxelGrid out_labels(labels.shape, labels.affine, labels.kind);
  std::array<VoxelGrid, 4> out_sdf;
  for (int c = 0; c < 4; ++c) out_sdf[c] = VoxelGrid(labels.shape, labels.affine, GridKind::sdf);
  const auto [nx, ny, nz] = labels.shape;
  parallel_for(static_cast<std::size_t>(nz), [&](std::size_t kk) {
    const int k = static_cast<int>(kk);
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const Vec3 idx = to_index.to_world(deformation_source(labels, params, inverse_linear, centre, i, j, k));
        out_labels.at(i, j, k) = static_cast<float>(detail::nearest_at(labels, idx, 0.0));
        for (int c = 0; c < 4; ++c)
          out_sdf[c].at(i, j, k) = static_cast<float>(detail::trilinear_at(sdfs[c].grid, idx, sdfs[c].clip_mm));
      }
  });
  std::array<SdfGrid, 4> warped;
  for (int c = 0; c < 4; ++c) warped[c] = SdfGrid(std::move(out_sdf[c]), sdfs[c].clip_mm);
  return {std::move(out_labels), std::move(warped)};
}

inline GmmParams sample_gmm(const VoxelGrid& labels, const SynthConfig& config, std::uint64_t seed) {
  std::map<int, LabelIntensity> present;
  for (float v : labels.data) present.try_emplace(static_cast<int>(v));
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng); };
  for (auto& [label, p] : present) {
    p.mean = uniform(config.gmm_mean_min, config.gmm_mean_max);
    p.stddev = uniform(config.gmm_std_min, config.gmm_std_max);
  }
  return {present};
}

/// Draws every voxel from its label's Gaussian, clamping negatives to 0.
inline VoxelGrid render_intensities(const VoxelGrid& labels, const GmmParams& gmm, std::uint64_t seed) {
  VoxelGrid out(labels.shape, labels.affine, GridKind::intensity);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t v = 0; v < labels.data.size(); ++v) {
    const int label = static_cast<int>(labels.data[v]);
    const auto it = gmm.labels.find(label);
    if (it == gmm.labels.end()) throw ConfigurationError("no intensity model for label " + std::to_string(label));
    if (it->second.stddev < 0.0) throw ConfigurationError("negative stddev for label " + std::to_string(label));
    const double x = it->second.mean + it->second.stddev * normal(rng);
    out.data[v] = static_cast<float>(std::max(0.0, x));
  }
  return out;
}

/// Multiplies by exp(B), B a trilinearly upsampled lattice of
/// Uniform[-log_amplitude, log_amplitude] values.
inline VoxelGrid apply_bias(const VoxelGrid& image, int control_grid_size, double log_amplitude, std::uint64_t seed) {
  if (control_grid_size < 2) throw PreconditionError("bias control grid must be >= 2");
  if (log_amplitude < 0.0) throw PreconditionError("bias amplitude must be non-negative");
  if (log_amplitude == 0.0) return image;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-log_amplitude, log_amplitude);
  std::vector<double> lattice(static_cast<std::size_t>(control_grid_size) * control_grid_size * control_grid_size);
  for (double& b : lattice) b = u(rng);
  VoxelGrid out = image;
  const auto [nx, ny, nz] = image.shape;
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double b =
            detail::lattice_at(lattice, control_grid_size, detail::lattice_coords(image, control_grid_size, i, j, k));
        out.at(i, j, k) = static_cast<float>(image.at(i, j, k) * std::exp(b));
      }
  return out;
}

/// Gaussian slice profile with FWHM = thickness across the slice axis (all
/// three axes for isotropic acquisitions).
inline VoxelGrid slice_profile_blur(const VoxelGrid& image, const AcquisitionParams& params) {
  const auto kernel = gaussian_kernel(params.thickness_mm / 2.3548);
  if (params.orientation == Orientation::isotropic) {
    VoxelGrid out = image;
    for (int a = 0; a < 3; ++a) out = convolve_axis(out, a, kernel);
    return out;
  }
  return convolve_axis(image, slice_axis(params.orientation), kernel);
}

/// Blur, keep slices every spacing_mm, add noise at low resolution, then
/// interpolate back onto the original 1mm grid.
inline VoxelGrid simulate_acquisition(const VoxelGrid& image, const AcquisitionParams& params, double noise_std,
                                      std::uint64_t seed) {
  params.validate();
  if (noise_std < 0.0) throw PreconditionError("noise stddev must be non-negative");
  if (!detail::is_unit_isotropic(image)) throw PreconditionError("acquisition simulation expects a 1mm isotropic image");

  const VoxelGrid blurred = slice_profile_blur(image, params);
  const int axis = slice_axis(params.orientation);
  const double spacing = params.orientation == Orientation::isotropic ? 1.0 : params.spacing_mm;
  const int n = image.shape[axis];
  const int slices = static_cast<int>(std::floor((n - 1) / spacing + 1e-9)) + 1;

  Index3 low_shape = image.shape;
  low_shape[axis] = slices;
  VoxelGrid low(low_shape, image.affine, GridKind::intensity);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < low_shape[2]; ++k)
    for (int j = 0; j < low_shape[1]; ++j)
      for (int i = 0; i < low_shape[0]; ++i) {
        Index3 p{i, j, k};
        const double x = p[axis] * spacing;
        double v = detail::sample_axis(blurred, p, axis, x);
        if (noise_std > 0.0) v += noise_std * normal(rng);
        low.at(i, j, k) = static_cast<float>(v);
      }

  VoxelGrid out(image.shape, image.affine, GridKind::intensity);
  for (int k = 0; k < image.shape[2]; ++k)
    for (int j = 0; j < image.shape[1]; ++j)
      for (int i = 0; i < image.shape[0]; ++i) {
        Index3 p{i, j, k};
        const double x = p[axis] / spacing;
        out.at(i, j, k) = static_cast<float>(detail::sample_axis(low, p, axis, x));
      }
  return out;
}

/// Affinely maps the image onto [0, 1]; constant images map to 0.
inline VoxelGrid rescale_unit(const VoxelGrid& image) {
  VoxelGrid out = image;
  if (image.data.empty()) return out;
  const auto [lo, hi] = std::minmax_element(image.data.begin(), image.data.end());
  const double a = *lo, range = double(*hi) - double(*lo);
  for (float& v : out.data) v = range > 0.0 ? static_cast<float>(std::clamp((v - a) / range, 0.0, 1.0)) : 0.0f;
  return out;
}

/// Full generator: deform, render, bias, acquire, rescale. Deterministic in
/// (inputs, config, seed).
inline TrainingPair generate_pair(const VoxelGrid& labels, const std::array<SdfGrid, 4>& sdfs,
                                  const SynthConfig& config, std::uint64_t seed) {
  config.validate();
  if (labels.kind != GridKind::label && labels.kind != GridKind::mask)
    throw KindError("synthesis needs a label volume");
  if (!detail::is_unit_isotropic(labels)) throw PreconditionError("labels must be 1mm isotropic (conform first)");
  for (const auto& s : sdfs)
    if (!labels.same_geometry(s.grid)) throw PreconditionError("labels and SDFs must share geometry");

  TrainingPair pair;
  Provenance& prov = pair.provenance;
  prov.seed = seed;
  prov.acquisition = sample_acquisition(derive_seed(seed, detail::kAcquisition), config);
  prov.deformation = sample_deformation(labels, config, derive_seed(seed, detail::kDeformation));
  prov.bias_control_grid = config.bias_control_grid;
  prov.bias_log_amplitude = config.bias_log_amplitude;
  {
    std::mt19937_64 rng(derive_seed(seed, detail::kNoiseLevel));
    prov.noise_std = config.noise_std_max > 0.0 ? std::uniform_real_distribution<double>(0.0, config.noise_std_max)(rng) : 0.0;
  }

  std::array<SdfGrid, 4> clipped;
  for (int c = 0; c < 4; ++c) clipped[c] = SdfGrid(sdfs[c].grid, config.clip_mm);
  auto [warped_labels, warped_sdfs] = apply_deformation(labels, clipped, prov.deformation);
  prov.gmm = sample_gmm(warped_labels, config, derive_seed(seed, detail::kGmm));
  VoxelGrid image = render_intensities(warped_labels, prov.gmm, derive_seed(seed, detail::kRender));
  image = apply_bias(image, config.bias_control_grid, config.bias_log_amplitude, derive_seed(seed, detail::kBias));
  image = simulate_acquisition(image, prov.acquisition, prov.noise_std, derive_seed(seed, detail::kNoise));
  pair.image = rescale_unit(image);
  pair.targets = std::move(warped_sdfs);
  return pair;
}

/// Flat JSON record of every sampled parameter.
inline nlohmann::ordered_json provenance_json(const Provenance& p) {
  nlohmann::ordered_json j;
  j["seed"] = p.seed;
  j["orientation"] = to_string(p.acquisition.orientation);
  j["spacing_mm"] = p.acquisition.spacing_mm;
  j["thickness_mm"] = p.acquisition.thickness_mm;
  j["noise_std"] = p.noise_std;
  j["bias_control_grid"] = p.bias_control_grid;
  j["bias_log_amplitude"] = p.bias_log_amplitude;
  const char* axes[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) j[std::string("rotation_deg_") + axes[a]] = p.deformation.rotation_deg[a];
  for (int a = 0; a < 3; ++a) j[std::string("scale_") + axes[a]] = p.deformation.scale[a];
  for (int a = 0; a < 3; ++a) j[std::string("translation_mm_") + axes[a]] = p.deformation.translation_mm[a];
  j["warp_lattice"] = p.deformation.lattice;
  for (int a = 0; a < 3; ++a) j[std::string("warp_control_spacing_mm_") + axes[a]] = p.deformation.control_spacing_mm[a];
  std::vector<double> warp;
  warp.reserve(p.deformation.warp_mm.size() * 3);
  for (const Vec3& w : p.deformation.warp_mm) warp.insert(warp.end(), {w.x(), w.y(), w.z()});
  j["warp_mm"] = warp;
  for (const auto& [label, g] : p.gmm.labels) {
    j["gmm_mean_" + std::to_string(label)] = g.mean;
    j["gmm_stddev_" + std::to_string(label)] = g.stddev;
  }
  return j;
}

/// Writes <out>/<seed>/{image,sdf_lw,sdf_lp,sdf_rw,sdf_rp}.nii.gz and provenance.json.
inline std::filesystem::path write_shard(const TrainingPair& pair, const std::filesystem::path& out_dir) {
  const std::filesystem::path dir = out_dir / std::to_string(pair.provenance.seed);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_nifti(pair.image, (dir / "image.nii.gz").string());
  for (int c = 0; c < 4; ++c) save_sdf(pair.targets[c], (dir / (std::string("sdf_") + kSdfChannels[c] + ".nii.gz")).string());
  std::ofstream json(dir / "provenance.json");
  json << provenance_json(pair.provenance).dump(2) << "\n";
  if (!json) throw IoError("cannot write " + (dir / "provenance.json").string());
  return dir;
}

}  // namespace cortexforge
