#pragma once

// Surface distances, cortical thickness proxies and mask overlap.

#include <cortexforge/common.hpp>
#include <cortexforge/distance.hpp>
#include <cortexforge/errors.hpp>
#include <cortexforge/mesh.hpp>
#include <cortexforge/volume.hpp>

#include <json.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace cortexforge {

enum class DistanceDirection { a_to_b, b_to_a, symmetric };

inline std::string to_string(DistanceDirection d) {
  switch (d) {
    case DistanceDirection::a_to_b: return "a_to_b";
    case DistanceDirection::b_to_a: return "b_to_a";
    case DistanceDirection::symmetric: return "symmetric";
  }
  return "?";
}

struct SurfaceDistanceStats {
  double mean_abs_mm = 0.0;
  double rms_mm = 0.0;
  double hausdorff_mm = 0.0;
  double p95_mm = 0.0;
  DistanceDirection direction = DistanceDirection::symmetric;
};

inline nlohmann::ordered_json to_json(const SurfaceDistanceStats& s) {
  nlohmann::ordered_json j;
  j["mean_abs_mm"] = s.mean_abs_mm;
  j["rms_mm"] = s.rms_mm;
  j["hausdorff_mm"] = s.hausdorff_mm;
  j["p95_mm"] = s.p95_mm;
  j["direction"] = to_string(s.direction);
  return j;
}

/// `samples_per_face * F` points drawn uniformly by area over the mesh.
inline std::vector<Vec3> sample_surface(const TriangleMesh& mesh, int samples_per_face, std::uint64_t seed) {
  if (mesh.faces.empty()) throw EmptySurfaceError("cannot sample an empty mesh");
  if (samples_per_face < 1) throw PreconditionError("samples_per_face must be >= 1");
  std::vector<double> cumulative(mesh.faces.size());
  double total = 0.0;
  for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
    total += mesh.face_area(f);
    cumulative[f] = total;
  }
  if (!(total > 0.0)) throw EmptySurfaceError("mesh has zero area");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = mesh.faces.size() * static_cast<std::size_t>(samples_per_face);
  std::vector<Vec3> points(n);
  for (Vec3& p : points) {
    const double pick = u(rng) * total;
    const auto f = std::min<std::size_t>(std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin(),
                                         mesh.faces.size() - 1);
    double r1 = u(rng), r2 = u(rng);
    if (r1 + r2 > 1.0) {
      r1 = 1.0 - r1;
      r2 = 1.0 - r2;
    }
    const auto& t = mesh.faces[f];
    const Vec3& a = mesh.vertices[t[0]];
    p = a + r1 * (mesh.vertices[t[1]] - a) + r2 * (mesh.vertices[t[2]] - a);
  }
  return points;
}

namespace detail {

inline SurfaceDistanceStats distance_stats(std::vector<double> d, DistanceDirection direction) {
  SurfaceDistanceStats s;
  s.direction = direction;
  double sum = 0.0, sum2 = 0.0;
  for (double x : d) {
    sum += x;
    sum2 += x * x;
  }
  const double n = static_cast<double>(d.size());
  s.mean_abs_mm = sum / n;
  s.rms_mm = std::sqrt(sum2 / n);
  std::sort(d.begin(), d.end());
  s.hausdorff_mm = d.back();
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * n));
  s.p95_mm = d[std::max<std::size_t>(rank, 1) - 1];
  // Guard the ordering invariants against last-bit rounding.
  s.rms_mm = std::max(s.rms_mm, s.mean_abs_mm);
  s.hausdorff_mm = std::max(s.hausdorff_mm, s.rms_mm);
  return s;
}

inline SurfaceDistanceStats one_way(const TriangleMesh& from, const MeshDistanceField& to, int samples_per_face,
                                    std::uint64_t seed, DistanceDirection direction) {
  const auto points = sample_surface(from, samples_per_face, seed);
  std::vector<double> d(points.size());
  parallel_for(points.size(), [&](std::size_t i) { d[i] = to.unsigned_distance(points[i]); });
  return distance_stats(std::move(d), direction);
}

}  // namespace detail

/// Distances from area-weighted samples of one surface to the other (exact
/// point-to-triangle). The symmetric form averages each statistic over both
/// directions; both directions use the same sampling seed, so swapping the
/// arguments gives identical numbers.
inline SurfaceDistanceStats surface_distance(const TriangleMesh& a, const TriangleMesh& b, int samples_per_face = 4,
                                             DistanceDirection direction = DistanceDirection::symmetric,
                                             std::uint64_t seed = 0) {
  if (a.faces.empty() || b.faces.empty()) throw EmptySurfaceError("surface_distance needs two non-empty meshes");
  if (direction == DistanceDirection::a_to_b)
    return detail::one_way(a, MeshDistanceField(b), samples_per_face, seed, direction);
  if (direction == DistanceDirection::b_to_a)
    return detail::one_way(b, MeshDistanceField(a), samples_per_face, seed, direction);
  const auto ab = detail::one_way(a, MeshDistanceField(b), samples_per_face, seed, DistanceDirection::a_to_b);
  const auto ba = detail::one_way(b, MeshDistanceField(a), samples_per_face, seed, DistanceDirection::b_to_a);
  SurfaceDistanceStats s;
  s.direction = DistanceDirection::symmetric;
  s.mean_abs_mm = 0.5 * (ab.mean_abs_mm + ba.mean_abs_mm);
  s.rms_mm = 0.5 * (ab.rms_mm + ba.rms_mm);
  s.hausdorff_mm = 0.5 * (ab.hausdorff_mm + ba.hausdorff_mm);
  s.p95_mm = 0.5 * (ab.p95_mm + ba.p95_mm);
  return s;
}

enum class ThicknessMode { correspondence, closest_point_symmetric };

inline ThicknessMode parse_thickness_mode(const std::string& s) {
  if (s == "correspondence") return ThicknessMode::correspondence;
  if (s == "closest_point_symmetric") return ThicknessMode::closest_point_symmetric;
  throw ConfigurationError("unknown thickness mode '" + s + "'");
}

/// Per-WM-vertex thickness. Correspondence: distance between matching
/// vertices. Closest-point: mean of the WM vertex to pial distance and the
/// distance from that pial point back to the WM surface.
inline std::vector<double> thickness(const TriangleMesh& wm, const TriangleMesh& pial, ThicknessMode mode) {
  std::vector<double> out(wm.vertices.size());
  if (mode == ThicknessMode::correspondence) {
    if (wm.vertices.size() != pial.vertices.size() || wm.faces != pial.faces)
      throw ContractError("correspondence thickness needs meshes with identical connectivity");
    for (std::size_t v = 0; v < out.size(); ++v) out[v] = (pial.vertices[v] - wm.vertices[v]).norm();
    return out;
  }
  if (wm.faces.empty() || pial.faces.empty()) throw EmptySurfaceError("thickness needs two non-empty meshes");
  const MeshDistanceField to_pial(pial), to_wm(wm);
  parallel_for(out.size(), [&](std::size_t v) {
    const auto hit = to_pial.closest(wm.vertices[v]);
    out[v] = 0.5 * (hit.distance + to_wm.unsigned_distance(hit.point));
  });
  return out;
}

/// 2|A and B| / (|A| + |B|); 1 when both masks are empty.
inline double mask_dice(const VoxelGrid& a, const VoxelGrid& b) {
  if (a.shape != b.shape) throw ContractError("mask_dice needs masks of the same shape");
  std::size_t na = 0, nb = 0, both = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool x = a.data[i] != 0.0f, y = b.data[i] != 0.0f;
    na += x;
    nb += y;
    both += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(both) / static_cast<double>(na + nb);
}

}  // namespace cortexforge
