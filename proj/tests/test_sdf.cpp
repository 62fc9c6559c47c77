#include <cortexforge/marching_cubes.hpp>
#include <cortexforge/sdf.hpp>
#include <cortexforge/shapes.hpp>

#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "test_support.hpp"

using namespace cortexforge;
using cortexforge::testing::TempDir;
using cortexforge::testing::unit_grid;

namespace {

const Vec3 kCentre(31.5, 31.5, 31.5);

const SdfGrid& sphere_sdf() {
  static const SdfGrid sdf = mesh_to_sdf(icosphere(4, 20.0, kCentre), unit_grid(64));
  return sdf;
}

/// Number of times the ray p + t*dir (t > 0) crosses the mesh, Moller-Trumbore.
int ray_crossings(const TriangleMesh& m, const Vec3& p, const Vec3& dir) {
  int count = 0;
  for (const auto& f : m.faces) {
    const Vec3& a = m.vertices[f[0]];
    const Vec3 e1 = m.vertices[f[1]] - a, e2 = m.vertices[f[2]] - a;
    const Vec3 h = dir.cross(e2);
    const double det = e1.dot(h);
    if (std::abs(det) < 1e-14) continue;
    const Vec3 s = p - a;
    const double u = s.dot(h) / det;
    if (u < 0.0 || u > 1.0) continue;
    const Vec3 q = s.cross(e1);
    const double v = dir.dot(q) / det;
    if (v < 0.0 || u + v > 1.0) continue;
    if (e2.dot(q) / det > 0.0) ++count;
  }
  return count;
}

/// Inside/outside by majority vote over three random rays (robust to rays
/// grazing an edge).
bool parity_inside(const TriangleMesh& m, const Vec3& p, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  int votes = 0;
  for (int r = 0; r < 3; ++r) votes += ray_crossings(m, p, Vec3(n(rng), n(rng), n(rng)).normalized()) % 2;
  return votes >= 2;
}

TriangleMesh box_mesh() {
  VoxelGrid mask = unit_grid(12, GridKind::mask);
  for (int k = 3; k <= 8; ++k)
    for (int j = 2; j <= 9; ++j)
      for (int i = 4; i <= 7; ++i) mask.at(i, j, k) = 1.0f;
  return extract_isosurface(mask, 0.5);
}

void expect_sign_agreement(const TriangleMesh& mesh, const Vec3& lo, const Vec3& hi, std::uint64_t seed) {
  const MeshDistanceField field(mesh);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y()), uz(lo.z(), hi.z());
  const int N = 3000;
  int disagreements = 0;
  for (int s = 0; s < N; ++s) {
    const Vec3 p(ux(rng), uy(rng), uz(rng));
    const double d = field.signed_distance(p);
    if (std::abs(d) < 1e-6) continue;
    if ((d < 0.0) != parity_inside(mesh, p, rng)) ++disagreements;
  }
  EXPECT_LE(disagreements, N / 1000);
}

double mean_vertex_distance(const TriangleMesh& from, const MeshDistanceField& to) {
  double sum = 0.0;
  for (const Vec3& v : from.vertices) sum += to.unsigned_distance(v);
  return sum / static_cast<double>(from.vertices.size());
}

}  // namespace

TEST(Clip, Examples) {
  EXPECT_EQ(clip(7.3, 5.0), 5.0);
  EXPECT_EQ(clip(-2.0, 5.0), -2.0);
  EXPECT_EQ(clip(-9.0, 5.0), -5.0);
  EXPECT_THROW(clip(1.0, 0.0), PreconditionError);
}

TEST(MeshToSdf, SphereCentreIsClippedAndVertexIsZero) {
  const SdfGrid& sdf = sphere_sdf();
  EXPECT_EQ(sdf.grid.kind, GridKind::sdf);
  EXPECT_EQ(sample(sdf, kCentre), -5.0);
  const TriangleMesh mesh = icosphere(4, 20.0, kCentre);
  const MeshDistanceField field(mesh);
  for (std::size_t v = 0; v < mesh.vertices.size(); v += 37) {
    EXPECT_NEAR(field.signed_distance(mesh.vertices[v]), 0.0, 1e-6);
  }
}

TEST(MeshToSdf, SphereMatchesAnalyticDistanceInBand) {
  const SdfGrid& sdf = sphere_sdf();
  double worst = 0.0;
  int in_band = 0;
  for (int k = 0; k < 64; ++k)
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 64; ++i) {
        const double analytic = (sdf.grid.center(i, j, k) - kCentre).norm() - 20.0;
        if (std::abs(analytic) > 5.0) continue;
        ++in_band;
        worst = std::max(worst, std::abs(sdf.grid.at(i, j, k) - analytic));
      }
  EXPECT_GT(in_band, 10000);
  EXPECT_LT(worst, 0.2);
  for (float v : sdf.grid.data) ASSERT_LE(std::abs(v), 5.0f);
}

TEST(MeshToSdf, RejectsOpenAndSelfIntersectingMeshes) {
  EXPECT_THROW(mesh_to_sdf(plane_patch(4), unit_grid(8)), PreconditionError);
  TriangleMesh dented = icosphere(2, 3.0, Vec3(8, 8, 8));
  dented.vertices[5] = Vec3(8, 8, 8) - 1.3 * (dented.vertices[5] - Vec3(8, 8, 8));
  EXPECT_THROW(mesh_to_sdf(dented, unit_grid(16)), PreconditionError);
}

TEST(MeshToSdf, TorusIsAccepted) {
  const SdfGrid sdf = mesh_to_sdf(torus(8.0, 3.0, 48, 24, Vec3(15.5, 15.5, 15.5)), unit_grid(32), 3.0);
  // Inside the tube, outside in the hole.
  EXPECT_LT(sample(sdf, Vec3(23.5, 15.5, 15.5)), 0.0);
  EXPECT_GT(sample(sdf, Vec3(15.5, 15.5, 15.5)), 0.0);
  for (float v : sdf.grid.data) ASSERT_LE(std::abs(v), 3.0f);
}

TEST(MeshToSdf, ParallelScheduleDoesNotChangeOutput) {
  const TriangleMesh mesh = icosphere(3, 6.0, Vec3(10, 10, 10));
  set_worker_count(1);
  const SdfGrid a = mesh_to_sdf(mesh, unit_grid(20));
  set_worker_count(3);
  const SdfGrid b = mesh_to_sdf(mesh, unit_grid(20));
  set_worker_count(0);
  EXPECT_EQ(a.grid.data, b.grid.data);
}

TEST(MeshToSdf, IsosurfaceRoundTripStaysClose) {
  const TriangleMesh input = icosphere(4, 20.0, kCentre);
  const TriangleMesh back = extract_isosurface(sphere_sdf().grid, 0.0);
  const auto d = validate(back);
  EXPECT_TRUE(d.manifold);
  EXPECT_EQ(d.genus, 0);
  const double sym = 0.5 * (mean_vertex_distance(back, MeshDistanceField(input)) +
                            mean_vertex_distance(input, MeshDistanceField(back)));
  EXPECT_LT(sym, 0.3);
}

TEST(SignedDistance, PseudonormalSignMatchesRayParity) {
  expect_sign_agreement(icosphere(3, 5.0), Vec3::Constant(-7), Vec3::Constant(7), 1);
  expect_sign_agreement(box_mesh(), Vec3::Constant(0), Vec3::Constant(11), 2);
  std::mt19937_64 rng(40);
  for (int trial = 0; trial < 3; ++trial) {
    // Star-shaped blobs: radial noise well below the edge length keeps them
    // free of self-intersections.
    const TriangleMesh blob = cortexforge::testing::perturbed_sphere(3, 8.0, 0.8, rng);
    ASSERT_FALSE(has_self_intersections(blob));
    expect_sign_agreement(blob, Vec3::Constant(-10), Vec3::Constant(10), 10 + trial);
  }
}

TEST(Sample, VoxelCentresAndEdgeMidpoints) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(-5.0f, 5.0f);
  VoxelGrid g = unit_grid(6);
  for (float& v : g.data) v = u(rng);
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = Vec3(1.5, 0.7, 2.0).asDiagonal();
  m.block<3, 1>(0, 3) = Vec3(-3, 4, 1);
  g.affine = Affine(m);
  const SdfGrid sdf(g, 5.0);
  EXPECT_EQ(sample(sdf, g.center(2, 3, 4)), static_cast<double>(g.at(2, 3, 4)));
  const Vec3 mid = 0.5 * (g.center(2, 3, 4) + g.center(2, 4, 4));
  EXPECT_NEAR(sample(sdf, mid), 0.5 * (double(g.at(2, 3, 4)) + g.at(2, 4, 4)), 1e-12);
  EXPECT_EQ(sample(sdf, g.affine.to_world(Vec3(-3, 2, 2))), 5.0);
}

TEST(Sample, MatchesNaiveInterpolationOracle) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(-5.0f, 5.0f);
  VoxelGrid g({7, 5, 6}, Affine::from_spacing(Vec3(1.0, 1.5, 0.8), Vec3(2, -1, 0)), GridKind::sdf);
  for (float& v : g.data) v = u(rng);
  const SdfGrid sdf(g, 5.0);
  std::uniform_real_distribution<double> fx(0, 6), fy(0, 4), fz(0, 5);
  for (int s = 0; s < 500; ++s) {
    const Vec3 idx(fx(rng), fy(rng), fz(rng));
    const int i0 = std::min(static_cast<int>(idx.x()), 5), j0 = std::min(static_cast<int>(idx.y()), 3),
              k0 = std::min(static_cast<int>(idx.z()), 4);
    const double tx = idx.x() - i0, ty = idx.y() - j0, tz = idx.z() - k0;
    double expected = 0.0;
    for (int c = 0; c < 8; ++c) {
      const int a = c & 1, b = (c >> 1) & 1, d = (c >> 2) & 1;
      const double w = (a ? tx : 1 - tx) * (b ? ty : 1 - ty) * (d ? tz : 1 - tz);
      expected += w * g.at(i0 + a, j0 + b, k0 + d);
    }
    ASSERT_NEAR(sample(sdf, g.affine.to_world(idx)), expected, 1e-6);
  }
}

TEST(Sample, IsBoundedAndContinuous) {
  const SdfGrid& sdf = sphere_sdf();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-5.0, 70.0);
  for (int s = 0; s < 2000; ++s) {
    const Vec3 p(u(rng), u(rng), u(rng));
    const double v = sample(sdf, p);
    ASSERT_LE(std::abs(v), 5.0);
    ASSERT_LT(std::abs(sample(sdf, p + Vec3::Constant(1e-9)) - v), 1e-6);
  }
}

TEST(SampleGradient, LinearFieldUnderGeneralAffine) {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() << 0.9, 0.2, 0.0, -0.1, 1.2, 0.3, 0.05, 0.0, 1.4;
  m.block<3, 1>(0, 3) = Vec3(-4, 2, 1);
  VoxelGrid g({8, 8, 8}, Affine(m), GridKind::sdf);
  for (int k = 0; k < 8; ++k)
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) g.at(i, j, k) = static_cast<float>(g.center(i, j, k).x() * 0.25);
  const SdfGrid sdf(g, 100.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(1.0, 6.0);
  for (int s = 0; s < 200; ++s) {
    const Vec3 grad = sample_gradient(sdf, g.affine.to_world(Vec3(u(rng), u(rng), u(rng))));
    ASSERT_LT((grad - Vec3(0.25, 0, 0)).norm(), 1e-5);
  }
  EXPECT_EQ(sample_gradient(sdf, g.affine.to_world(Vec3(0.5, 3, 3))), Vec3::Zero());
  EXPECT_EQ(sample_gradient(sdf, g.affine.to_world(Vec3(3, 3, 6.5))), Vec3::Zero());
}

TEST(SampleGradient, EikonalInBand) {
  const SdfGrid& sdf = sphere_sdf();
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> r(16.0, 24.0);
  for (int s = 0; s < 2000; ++s) {
    const Vec3 p = kCentre + r(rng) * Vec3(n(rng), n(rng), n(rng)).normalized();
    ASSERT_NEAR(sample_gradient(sdf, p).norm(), 1.0, 0.15) << p.transpose();
  }
}

TEST(SampleGradient, MatchesCentralDifferencesAwayFromCellBoundaries) {
  const SdfGrid& sdf = sphere_sdf();
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> cell(8, 54);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  const double h = 1e-3;
  for (int s = 0; s < 1000; ++s) {
    const Vec3 p(cell(rng) + frac(rng), cell(rng) + frac(rng), cell(rng) + frac(rng));
    const Vec3 g = sample_gradient(sdf, p);
    for (int a = 0; a < 3; ++a) {
      Vec3 dp = Vec3::Zero();
      dp[a] = h;
      const double fd = (sample(sdf, p + dp) - sample(sdf, p - dp)) / (2 * h);
      ASSERT_NEAR(g[a], fd, 1e-5);
    }
  }
}

TEST(SdfIo, RoundTripKeepsValuesAndClip) {
  TempDir dir("sdf");
  const SdfGrid& sdf = sphere_sdf();
  save_sdf(sdf, dir.file("s.nii.gz"));
  const SdfGrid back = load_sdf(dir.file("s.nii.gz"));
  EXPECT_EQ(back.grid.data, sdf.grid.data);
  EXPECT_EQ(back.grid.affine, sdf.grid.affine);
  EXPECT_EQ(back.clip_mm, 5.0);

  const SdfGrid narrow(sdf.grid, 2.5);
  save_sdf(narrow, dir.file("n.nii"));
  const SdfGrid n = load_sdf(dir.file("n.nii"));
  EXPECT_EQ(n.clip_mm, 2.5);
  for (float v : n.grid.data) ASSERT_LE(std::abs(v), 2.5f);
}

TEST(SdfIo, PlainVolumeIsClippedOnLoad) {
  TempDir dir("sdf");
  VoxelGrid g = unit_grid(4);
  g.data.assign(g.data.size(), 9.0f);
  g.data[0] = -12.0f;
  save_nifti(g, dir.file("raw.nii"));
  const SdfGrid s = load_sdf(dir.file("raw.nii"));
  EXPECT_EQ(s.grid.data[0], -5.0f);
  EXPECT_EQ(s.grid.data[1], 5.0f);
  EXPECT_EQ(s.grid.kind, GridKind::sdf);

  double clip_mm = 0.0;
  EXPECT_TRUE(parse_sdf_description("sdf:clip=3.5", clip_mm));
  EXPECT_EQ(clip_mm, 3.5);
  EXPECT_FALSE(parse_sdf_description("intensity", clip_mm));
  EXPECT_FALSE(parse_sdf_description("sdf:clip=-1", clip_mm));
}

TEST(SdfResample, OutsideTakesPositiveClip) {
  const SdfGrid& sdf = sphere_sdf();
  const SdfGrid shifted = resample(sdf, Affine::from_spacing(Vec3::Ones(), Vec3(40, 0, 0)), {64, 64, 64});
  EXPECT_EQ(shifted.grid.at(63, 10, 10), 5.0f);
  EXPECT_EQ(shifted.grid.at(0, 31, 31), sdf.grid.at(40, 31, 31));
}
