#include <cortexforge/fit.hpp>
#include <cortexforge/metrics.hpp>
#include <cortexforge/phantom.hpp>
#include <cortexforge/shapes.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace cortexforge;
using namespace cortexforge::testing;

namespace {

/// Field f(p) = p_z - height on an n^3 1mm grid, clipped at 5.
SdfGrid plane_sdf(int n, double height) {
  VoxelGrid g = cube_grid(n, GridKind::sdf);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) g.at(i, j, k) = static_cast<float>(k - height);
  return SdfGrid(std::move(g), 5.0);
}

FitConfig springs(double l1, double l2) {
  FitConfig c;
  c.lambda1 = l1;
  c.lambda2 = l2;
  return c;
}

const Vec3 kCentre = Vec3::Constant(31.5);

}  // namespace

TEST(Energy, ZeroSetWithoutSpringsIsTheGlobalMinimum) {
  TriangleMesh patch = plane_patch(6, 1.3, 10.0);
  for (Vec3& v : patch.vertices) v += Vec3(4.2, 5.1, 0.0);
  const auto eg = energy_and_gradient(patch, plane_sdf(20, 10.0), springs(0, 0));
  EXPECT_EQ(eg.energy, 0.0);
  for (const Vec3& g : eg.gradient) EXPECT_EQ(g, Vec3::Zero());
}

TEST(Energy, PlanarPatchHasOnlyTangentialSpringEnergy) {
  TriangleMesh patch = plane_patch(6, 1.0, 10.0);
  for (Vec3& v : patch.vertices) v += Vec3(4.0, 4.0, 0.0);
  const SdfGrid sdf = plane_sdf(20, 10.0);
  EXPECT_NEAR(energy_and_gradient(patch, sdf, springs(0.0006, 0)).energy, 0.0, 1e-15);
  EXPECT_GT(energy_and_gradient(patch, sdf, springs(0, 0.0002)).energy, 0.0);
}

TEST(Energy, ClippedVertexContributesTanhOfFiveSquared) {
  // All vertices on the zero set except one lifted far beyond the clip.
  TriangleMesh patch = plane_patch(4, 1.0, 10.0);
  for (Vec3& v : patch.vertices) v += Vec3(5.0, 5.0, 0.0);
  patch.vertices[5].z() = 17.0;
  const auto eg = energy_and_gradient(patch, plane_sdf(20, 10.0), springs(0, 0));
  EXPECT_NEAR(eg.energy, std::pow(std::tanh(5.0), 2), 1e-12);
  EXPECT_NEAR(eg.energy, 0.999817, 2e-6);
}

TEST(Energy, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 6; ++trial) {
    const TriangleMesh mesh = random_fd_mesh(rng);
    const SdfGrid sdf = random_smooth_sdf(rng);
    EXPECT_LT(gradient_check(mesh, sdf, FitConfig{}), 1e-4) << "trial " << trial;
    EXPECT_LT(gradient_check(mesh, sdf, springs(0.05, 0.02)), 1e-4) << "trial " << trial;
  }
}

TEST(Energy, DegenerateUmbrellaIsReported) {
  TriangleMesh m = icosphere(1, 5.0, Vec3::Constant(10));
  // Collapse one vertex's whole umbrella onto it.
  const auto rings = one_rings(m);
  for (int u : rings[0]) m.vertices[u] = m.vertices[0];
  EXPECT_THROW(energy_and_gradient(m, plane_sdf(20, 10.0), FitConfig{}), DegenerateVertexError);
}

TEST(FitSurface, StationaryStartConvergesImmediately) {
  const TriangleMesh sphere = icosphere(3, 8.0, Vec3::Constant(16));
  const SdfGrid zero(cube_grid(32, GridKind::sdf), 5.0);
  const auto [out, report] = fit_surface(sphere, zero, springs(0, 0));
  EXPECT_TRUE(report.converged);
  EXPECT_EQ(report.iterations_run, 1);
  EXPECT_EQ(out.vertices, sphere.vertices);
  EXPECT_EQ(report.final_mean_abs_sdf_mm, 0.0);
}

TEST(FitSurface, RejectsInvalidInitialMeshes) {
  const SdfGrid sdf = sphere_sdf(cube_grid(32, GridKind::sdf), Vec3::Constant(16), 10.0);
  EXPECT_THROW(fit_surface(plane_patch(4), sdf, FitConfig{}), PreconditionError);
  EXPECT_THROW(fit_surface(torus(8, 3, 16, 8, Vec3::Constant(16)), sdf, FitConfig{}), PreconditionError);
  std::mt19937_64 rng(1);
  TriangleMesh dented = dented_sphere(rng);
  for (Vec3& v : dented.vertices) v += Vec3::Constant(16);
  EXPECT_THROW(fit_surface(dented, sdf, FitConfig{}), PreconditionError);
  FitConfig bad;
  bad.step_mm = 0.0;
  EXPECT_THROW(fit_surface(icosphere(2, 8.0, Vec3::Constant(16)), sdf, bad), ConfigurationError);
}

TEST(FitSurface, AuditedRunsAreSafeMonotoneAndTopologyPreserving) {
  // Coarse, rough meshes and large steps so that proposals do cross; the
  // last case also exhausts its halvings and has to pin vertices.
  struct Case {
    int level;
    double noise, step, target_radius;
  };
  int events = 0, frozen = 0;
  for (const Case& c : {Case{2, 1.0, 5.0, 6.0}, Case{1, 0.6, 5.0, 14.0}, Case{1, 0.3, 2.5, 14.0}}) {
    std::mt19937_64 rng(8);
    const TriangleMesh start = perturbed_sphere(c.level, 9.0, c.noise, rng, Vec3::Constant(16));
    ASSERT_TRUE(detect_self_intersections(start).empty());
    const SdfGrid sdf = sphere_sdf(cube_grid(32, GridKind::sdf), Vec3::Constant(16), c.target_radius);
    FitConfig config;
    config.step_mm = c.step;
    config.max_iters = 60;
    config.max_step_halvings_per_iter = 2;
    double last = std::numeric_limits<double>::infinity();
    int audited = 0;
    const auto [out, report] = fit_surface(start, sdf, config, [&](const FitIteration& it, const TriangleMesh& m) {
      ASSERT_TRUE(brute_force_intersections(m).empty()) << "iteration " << it.iteration;
      ASSERT_LE(it.energy, last);
      last = it.energy;
      ++audited;
    });
    EXPECT_EQ(audited, report.iterations_run);
    events += report.self_intersection_events;
    frozen += report.frozen_vertices;
    EXPECT_EQ(out.faces, start.faces);
    const auto before = validate(start), after = validate(out);
    EXPECT_EQ(after.euler_characteristic, before.euler_characteristic);
    EXPECT_EQ(after.genus, 0);
    EXPECT_TRUE(after.manifold && after.oriented);
    EXPECT_TRUE(brute_force_intersections(out).empty());
    EXPECT_LE(report.iterations_run, config.max_iters);
  }
  EXPECT_GT(events, 0);
  EXPECT_GT(frozen, 0);
}

TEST(FitSurface, RepeatedRunsAreBitIdentical) {
  const TriangleMesh start = icosphere(3, 8.0, Vec3::Constant(16));
  const SdfGrid sdf = sphere_sdf(cube_grid(32, GridKind::sdf), Vec3::Constant(16), 10.0);
  FitConfig config;
  config.max_iters = 40;
  const auto a = fit_surface(start, sdf, config);
  set_worker_count(4);
  const auto b = fit_surface(start, sdf, config);
  set_worker_count(1);
  EXPECT_EQ(a.first.vertices, b.first.vertices);
  EXPECT_EQ(to_json(a.second).dump(), to_json(b.second).dump());
}

TEST(FitSurface, ReportSerializesWithTheDocumentedFields) {
  FitReport r;
  r.iterations_run = 3;
  r.converged = true;
  const auto j = to_json(r);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"iterations_run", "final_energy", "final_mean_abs_sdf_mm",
                                            "self_intersection_events", "converged", "frozen_vertices"}));
}

// The full benchmark: r=15 icosphere into the r=20 sphere SDF, then the pial
// fit to r=22.5 and the regularization trade-off.
TEST(FitSurface, SphereBenchmarkAndCoupledPial) {
  const VoxelGrid geometry = cube_grid(64, GridKind::sdf);
  const SdfGrid wm_sdf = sphere_sdf(geometry, kCentre, 20.0);
  const TriangleMesh start = icosphere(5, 15.0, kCentre);

  const auto [wm, report] = fit_surface(start, wm_sdf, FitConfig{});
  EXPECT_TRUE(report.converged);
  EXPECT_LT(report.iterations_run, 500);
  EXPECT_LT(report.final_mean_abs_sdf_mm, 0.1);
  EXPECT_NEAR(mean_radius(wm, kCentre), 20.0, 0.2);
  EXPECT_TRUE(detect_self_intersections(wm).empty());
  EXPECT_EQ(validate(wm).genus, 0);

  // Self-fit barely moves the surface.
  const auto [self, self_report] = fit_pial(wm, wm_sdf, FitConfig{});
  double drift = 0.0;
  for (std::size_t v = 0; v < wm.vertices.size(); ++v) drift += (self.vertices[v] - wm.vertices[v]).norm();
  EXPECT_LT(drift / wm.vertices.size(), 0.05);

  const auto [pial, pial_report] = fit_pial(wm, sphere_sdf(geometry, kCentre, 22.5), FitConfig{});
  EXPECT_EQ(pial.faces, wm.faces);
  EXPECT_NEAR(mean_radius(pial, kCentre), 22.5, 0.2);
  const auto t = thickness(wm, pial, ThicknessMode::correspondence);
  double mean = 0.0;
  for (double x : t) {
    mean += x;
    EXPECT_NEAR(x, 2.5, 0.25);
  }
  EXPECT_NEAR(mean / t.size(), 2.5, 0.1);

  FitConfig stiff;
  stiff.lambda1 *= 10.0;
  const auto [stiff_mesh, stiff_report] = fit_surface(start, wm_sdf, stiff);
  EXPECT_GT(stiff_report.final_mean_abs_sdf_mm, report.final_mean_abs_sdf_mm);
}

TEST(InitSurface, SolidSphere) {
  const VoxelGrid mask = sphere_mask(cube_grid(32, GridKind::mask), Vec3::Constant(15.5), 9.0);
  const TriangleMesh m = init_surface(mask);
  const auto d = validate(m);
  EXPECT_TRUE(d.manifold && d.oriented);
  EXPECT_EQ(d.components, 1);
  EXPECT_EQ(d.genus, 0);
  EXPECT_TRUE(detect_self_intersections(m).empty());
  EXPECT_NEAR(mean_radius(m, Vec3::Constant(15.5)), 9.0, 0.8);
}

TEST(InitSurface, CavityIsFilled) {
  VoxelGrid mask = sphere_mask(cube_grid(32, GridKind::mask), Vec3::Constant(15.5), 10.0);
  const VoxelGrid hole = sphere_mask(mask, Vec3::Constant(15.5), 4.0);
  for (std::size_t v = 0; v < mask.data.size(); ++v)
    if (hole.data[v] != 0.0f) mask.data[v] = 0.0f;
  const TriangleMesh m = init_surface(mask);
  const auto d = validate(m);
  EXPECT_EQ(d.components, 1);
  EXPECT_EQ(d.genus, 0);
  EXPECT_GT(mean_radius(m, Vec3::Constant(15.5)), 9.0);
}

TEST(InitSurface, TorusNeverYieldsAHandle) {
  for (double minor : {2.0, 3.5}) {
    VoxelGrid mask = cube_grid(40, GridKind::mask);
    const Vec3 c = Vec3::Constant(19.5);
    for (int k = 0; k < 40; ++k)
      for (int j = 0; j < 40; ++j)
        for (int i = 0; i < 40; ++i) {
          const Vec3 p = mask.center(i, j, k) - c;
          const double ring = std::hypot(p.x(), p.y()) - 10.0;
          if (ring * ring + p.z() * p.z() < minor * minor) mask.at(i, j, k) = 1.0f;
        }
    try {
      const TriangleMesh m = init_surface(mask);
      EXPECT_EQ(validate(m).genus, 0) << "minor " << minor;
    } catch (const TopologyError&) {
      SUCCEED();
    }
  }
}

TEST(InitSurface, PreconditionErrors) {
  EXPECT_THROW(init_surface(cube_grid(8, GridKind::mask)), EmptySurfaceError);
  EXPECT_THROW(init_surface(cube_grid(8, GridKind::intensity)), KindError);
  VoxelGrid touching = cube_grid(8, GridKind::mask);
  touching.at(0, 3, 3) = 1.0f;
  touching.at(1, 3, 3) = 1.0f;
  try {
    init_surface(touching);
    FAIL() << "expected a precondition error";
  } catch (const PreconditionError& e) {
    EXPECT_NE(std::string(e.what()).find("pad"), std::string::npos);
  }
}
