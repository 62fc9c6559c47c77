#pragma once

// Surface placement: mask -> genus-0 mesh -> descent on the SDF energy with
// self-intersection control.

#include <cortexforge/common.hpp>
#include <cortexforge/errors.hpp>
#include <cortexforge/marching_cubes.hpp>
#include <cortexforge/mesh.hpp>
#include <cortexforge/sdf.hpp>
#include <cortexforge/self_intersection.hpp>
#include <cortexforge/volume.hpp>

#include <json.hpp>

#include <cmath>
#include <functional>
#include <set>
#include <vector>

namespace cortexforge {

struct FitConfig {
  double lambda1 = 0.0006;  // normal springs
  double lambda2 = 0.0002;  // tangential springs
  double step_mm = 0.1;
  int max_iters = 500;
  double converge_rel_tol = 1e-6;
  int max_step_halvings_per_iter = 10;

  void validate() const {
    if (!(lambda1 >= 0.0 && lambda2 >= 0.0)) throw ConfigurationError("spring weights must be non-negative");
    if (!(step_mm > 0.0)) throw ConfigurationError("step_mm must be positive");
    if (max_iters < 1) throw ConfigurationError("max_iters must be >= 1");
    if (!(converge_rel_tol > 0.0)) throw ConfigurationError("converge_rel_tol must be positive");
    if (max_step_halvings_per_iter < 0) throw ConfigurationError("max_step_halvings_per_iter must be >= 0");
  }
};

struct FitReport {
  int iterations_run = 0;
  double final_energy = 0.0;
  double final_mean_abs_sdf_mm = 0.0;
  int self_intersection_events = 0;
  bool converged = false;
  int frozen_vertices = 0;
};

inline nlohmann::ordered_json to_json(const FitReport& r) {
  nlohmann::ordered_json j;
  j["iterations_run"] = r.iterations_run;
  j["final_energy"] = r.final_energy;
  j["final_mean_abs_sdf_mm"] = r.final_mean_abs_sdf_mm;
  j["self_intersection_events"] = r.self_intersection_events;
  j["converged"] = r.converged;
  j["frozen_vertices"] = r.frozen_vertices;
  return j;
}

struct EnergyGradient {
  double energy = 0.0;
  std::vector<Vec3> gradient;
};

/// Energy and its frozen-frame gradient for explicit frames and 1-rings:
///   sum_v tanh(D(x_v))^2
///   + lambda1 sum_v sum_{u in N_v} (n_v . (x_v - x_u))^2
///   + lambda2 sum_v sum_{u in N_v} (e1_v . (x_v - x_u))^2 + (e2_v . (x_v - x_u))^2
/// Rings must be symmetric (u in N_v iff v in N_u), which lets each vertex
/// gather its own gradient.
inline EnergyGradient energy_and_gradient(const std::vector<Vec3>& x, const std::vector<VertexFrame>& frames,
                                          const std::vector<std::vector<int>>& rings, const SdfGrid& sdf,
                                          const FitConfig& config) {
  const std::size_t V = x.size();
  const SdfSampler sampler(sdf);
  // Per-vertex spring operators P_v = l1 n n^T + l2 (e1 e1^T + e2 e2^T).
  std::vector<Mat3> P(V);
  for (std::size_t v = 0; v < V; ++v) {
    const auto& f = frames[v];
    P[v] = config.lambda1 * f.normal * f.normal.transpose() +
           config.lambda2 * (f.tangent1 * f.tangent1.transpose() + f.tangent2 * f.tangent2.transpose());
  }
  std::vector<double> term(V);
  EnergyGradient out;
  out.gradient.resize(V);
  parallel_for(V, [&](std::size_t v) {
    const double d = sampler.value(x[v]);
    const double t = std::tanh(d);
    double e = t * t;
    Vec3 g = 2.0 * t * (1.0 - t * t) * sampler.gradient(x[v]);
    for (int u : rings[v]) {
      const Vec3 dvu = x[v] - x[u];
      const Vec3 pv = P[v] * dvu;
      e += dvu.dot(pv);
      // d/dx_v of v's own springs, and of u's spring towards v.
      g += 2.0 * pv + 2.0 * (P[u] * dvu);
    }
    term[v] = e;
    out.gradient[v] = g;
  });
  for (double e : term) out.energy += e;
  return out;
}

inline EnergyGradient energy_and_gradient(const TriangleMesh& mesh, const SdfGrid& sdf, const FitConfig& config) {
  return energy_and_gradient(mesh.vertices, vertex_frames(mesh), one_rings(mesh), sdf, config);
}

inline double mean_abs_sdf(const std::vector<Vec3>& x, const SdfGrid& sdf) {
  if (x.empty()) return 0.0;
  const SdfSampler sampler(sdf);
  double sum = 0.0;
  for (const Vec3& p : x) sum += std::abs(sampler.value(p));
  return sum / static_cast<double>(x.size());
}

/// Per-iteration trace for logging and auditing.
struct FitIteration {
  int iteration = 0;
  double energy = 0.0;
  double step_mm = 0.0;
  bool accepted = false;
  int frozen = 0;
};

using FitObserver = std::function<void(const FitIteration&, const TriangleMesh&)>;

/// Descent on the energy with a fixed connectivity.
///
/// Each iteration recomputes frames, then moves every vertex `step_mm` along
/// its own negative gradient direction. A proposal that self-intersects or
/// raises the energy is retried at half the step. If intersections remain
/// once the halvings run out, the offending vertices keep their positions
/// for that iteration. Accepted states are always intersection-free and the
/// accepted energy never increases.
inline std::pair<TriangleMesh, FitReport> fit_surface(const TriangleMesh& initial, const SdfGrid& sdf,
                                                      const FitConfig& config, const FitObserver& observer = {}) {
  config.validate();
  const auto diag = validate(initial);
  if (initial.faces.empty() || !diag.manifold || !diag.oriented || diag.components != 1 || diag.genus != 0) {
    throw PreconditionError("initial mesh must be a closed, oriented, genus-0 surface");
  }
  if (has_self_intersections(initial)) throw PreconditionError("initial mesh self-intersects");

  TriangleMesh mesh = initial;
  const auto rings = one_rings(mesh);
  const std::size_t V = mesh.vertices.size();
  FitReport report;
  std::set<int> frozen_ever;

  auto evaluate = [&](const std::vector<Vec3>& x, const std::vector<VertexFrame>& frames) {
    return energy_and_gradient(x, frames, rings, sdf, config);
  };

  std::vector<VertexFrame> frames = vertex_frames(mesh);
  EnergyGradient eg = evaluate(mesh.vertices, frames);
  double energy = eg.energy;
  TriangleMesh proposal = mesh;
  for (int it = 1; it <= config.max_iters; ++it) {
    report.iterations_run = it;
    std::vector<Vec3> direction(V, Vec3::Zero());
    bool moving = false;
    for (std::size_t v = 0; v < V; ++v) {
      const double n = eg.gradient[v].norm();
      if (n > 0.0) {
        direction[v] = -eg.gradient[v] / n;
        moving = true;
      }
    }
    FitIteration trace{it, energy, 0.0, false, 0};
    if (!moving) {
      report.converged = true;
      if (observer) observer(trace, mesh);
      break;
    }

    double step = config.step_mm;
    std::vector<char> pinned(V, 0);
    bool accepted = false;
    EnergyGradient next;
    std::vector<VertexFrame> next_frames;
    // Energy is checked before intersections: it is far cheaper, and a
    // proposal that fails either test is halved the same way.
    auto try_proposal = [&]() {
      try {
        next_frames = vertex_frames(proposal);
      } catch (const DegenerateVertexError&) {
        return false;
      }
      next = evaluate(proposal.vertices, next_frames);
      return next.energy < energy;
    };
    for (int attempt = 0; attempt <= config.max_step_halvings_per_iter; ++attempt) {
      for (std::size_t v = 0; v < V; ++v) proposal.vertices[v] = mesh.vertices[v] + step * direction[v];
      if (!try_proposal()) {
        step *= 0.5;
        continue;
      }
      auto hits = detect_self_intersections(proposal);
      if (hits.empty()) {
        accepted = true;
        break;
      }
      ++report.self_intersection_events;
      if (attempt < config.max_step_halvings_per_iter) {
        step *= 0.5;
        continue;
      }
      // Out of halvings: pin offending vertices until the proposal is clean.
      while (!hits.empty()) {
        for (const auto& [a, b] : hits)
          for (int f : {a, b})
            for (int w : mesh.faces[f]) {
              pinned[w] = 1;
              proposal.vertices[w] = mesh.vertices[w];
            }
        hits = detect_self_intersections(proposal);
      }
      accepted = try_proposal();
    }

    const int pinned_count = static_cast<int>(std::count(pinned.begin(), pinned.end(), 1));
    trace.frozen = pinned_count;
    if (!accepted) {
      // No admissible step lowers the energy: stationary at step resolution.
      report.converged = true;
      if (observer) observer(trace, mesh);
      break;
    }
    for (std::size_t v = 0; v < V; ++v)
      if (pinned[v]) frozen_ever.insert(static_cast<int>(v));
    mesh.vertices = proposal.vertices;
    frames = std::move(next_frames);
    const double change = std::abs(energy - next.energy) / std::max(std::abs(energy), 1e-300);
    energy = next.energy;
    eg = std::move(next);
    trace.energy = energy;
    trace.step_mm = step;
    trace.accepted = true;
    if (observer) observer(trace, mesh);
    if (change < config.converge_rel_tol) {
      report.converged = true;
      break;
    }
  }
  report.final_energy = energy;
  report.final_mean_abs_sdf_mm = mean_abs_sdf(mesh.vertices, sdf);
  report.frozen_vertices = static_cast<int>(frozen_ever.size());
  return {std::move(mesh), report};
}

/// Pial placement started from the fitted white surface; the vertex
/// correspondence and connectivity carry over unchanged.
inline std::pair<TriangleMesh, FitReport> fit_pial(const TriangleMesh& wm_mesh, const SdfGrid& pial_sdf,
                                                   const FitConfig& config, const FitObserver& observer = {}) {
  return fit_surface(wm_mesh, pial_sdf, config, observer);
}

/// Smoothing applied to the tessellated mask.
struct InitOptions {
  int taubin_iterations = 10;
  double taubin_lambda = 0.5;
  double taubin_mu = -0.53;
};

/// Genus-0 starting surface from a binary mask: fill cavities, tessellate,
/// keep the largest component, smooth. If a handle survives, the mask is
/// Gaussian-smoothed (sigma 0.5, 1, 1.5, 2 voxels) and re-thresholded until
/// the surface is genus 0; otherwise TopologyError.
inline TriangleMesh init_surface(const VoxelGrid& mask, const InitOptions& options = {}) {
  if (mask.kind != GridKind::mask) throw KindError("init_surface expects a mask grid");
  if (std::none_of(mask.data.begin(), mask.data.end(), [](float v) { return v != 0.0f; }))
    throw EmptySurfaceError("mask is empty");
  if (touches_boundary(mask))
    throw PreconditionError("mask touches the grid boundary; pad the volume by at least one voxel");

  for (double sigma : {0.0, 0.5, 1.0, 1.5, 2.0}) {
    VoxelGrid m = mask;
    if (sigma > 0.0) {
      VoxelGrid soft = mask;
      soft.kind = GridKind::intensity;
      m = threshold(gaussian_smooth(soft, sigma), 0.5);
      if (std::none_of(m.data.begin(), m.data.end(), [](float v) { return v != 0.0f; })) continue;
    }
    const VoxelGrid filled = binary_fill_holes(m);
    TriangleMesh mesh = largest_component(extract_isosurface(filled, 0.5));
    mesh = smooth(mesh, options.taubin_iterations, options.taubin_lambda, options.taubin_mu);
    const auto d = validate(mesh);
    if (d.manifold && d.oriented && d.genus == 0 && !has_self_intersections(mesh)) return mesh;
  }
  throw TopologyError("surface keeps a handle after mask smoothing up to sigma 2 voxels");
}

}  // namespace cortexforge
