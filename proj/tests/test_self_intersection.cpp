#include <cortexforge/intersection.hpp>
#include <cortexforge/predicates.hpp>
#include <cortexforge/self_intersection.hpp>
#include <cortexforge/shapes.hpp>

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

using namespace cortexforge;

using cortexforge::testing::brute_force_intersections;
using cortexforge::testing::dented_sphere;
using cortexforge::testing::soup;
using cortexforge::testing::Tri;

TEST(Predicates, Orient3dSigns) {
  const Vec3 a(0, 0, 0), b(1, 0, 0), c(0, 1, 0);
  EXPECT_GT(predicates::orient3d(a, b, c, Vec3(0, 0, 1)), 0);
  EXPECT_LT(predicates::orient3d(a, b, c, Vec3(0, 0, -1)), 0);
  EXPECT_EQ(predicates::orient3d(a, b, c, Vec3(0.3, 0.3, 0)), 0);
}

TEST(Predicates, Orient3dIsExactNearDegeneracy) {
  // Plane z = 0.3 probed far from the triangle at one-ulp offsets.
  const Vec3 a(0.1, 0.2, 0.3), b(1.1, 0.7, 0.3), c(0.4, 1.9, 0.3);
  EXPECT_EQ(predicates::orient3d(a, b, c, Vec3(12345.678, -987.654, 0.3)), 0);
  const double up = std::nextafter(0.3, 1.0);
  EXPECT_GT(predicates::orient3d(a, b, c, Vec3(12345.678, -987.654, up)), 0);
  const double down = std::nextafter(0.3, 0.0);
  EXPECT_LT(predicates::orient3d(a, b, c, Vec3(12345.678, -987.654, down)), 0);
}

TEST(Predicates, Orient2dAgreesWithRationalSignOnGrid) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> u(-50, 50);
  for (int trial = 0; trial < 2000; ++trial) {
    const double p[2] = {u(rng) * 0.125, u(rng) * 0.125};
    const double q[2] = {u(rng) * 0.125, u(rng) * 0.125};
    const double r[2] = {u(rng) * 0.125, u(rng) * 0.125};
    // Dyadic inputs make the plain double determinant exact.
    const double det = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
    ASSERT_EQ(predicates::orient2d(p, q, r), (det > 0) - (det < 0));
  }
}

TEST(TriangleTriangle, ConstructedCrossingPair) {
  const Tri t{Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 2, 0)};
  const Tri u{Vec3(0.5, 0.5, -1), Vec3(0.5, 0.5, 1), Vec3(1.5, 0.5, 0)};
  EXPECT_TRUE(triangles_intersect(t, u));
  EXPECT_TRUE(triangles_intersect(u, t));
  const Tri lifted{Vec3(0.5, 0.5, 0.1), Vec3(0.5, 0.5, 1), Vec3(1.5, 0.5, 0.2)};
  EXPECT_FALSE(triangles_intersect(t, lifted));
}

TEST(TriangleTriangle, TouchingAndCoplanarCases) {
  const Tri t{Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 2, 0)};
  // Vertex touching the interior.
  EXPECT_TRUE(triangles_intersect(t, {Vec3(0.5, 0.5, 0), Vec3(0.5, 0.5, 1), Vec3(1, 1, 1)}));
  // Coplanar overlap, coplanar disjoint, coplanar edge contact.
  EXPECT_TRUE(triangles_intersect(t, {Vec3(0.5, 0.5, 0), Vec3(3, 0.5, 0), Vec3(0.5, 3, 0)}));
  EXPECT_FALSE(triangles_intersect(t, {Vec3(3, 3, 0), Vec3(4, 3, 0), Vec3(3, 4, 0)}));
  EXPECT_TRUE(triangles_intersect(t, {Vec3(1, 1, 0), Vec3(3, 3, 0), Vec3(1, 3, 0)}));
  // Coplanar, one containing the other.
  EXPECT_TRUE(triangles_intersect(t, {Vec3(0.1, 0.1, 0), Vec3(0.5, 0.1, 0), Vec3(0.1, 0.5, 0)}));
  // Parallel planes.
  EXPECT_FALSE(triangles_intersect(t, {Vec3(0, 0, 1), Vec3(2, 0, 1), Vec3(0, 2, 1)}));
}

TEST(SelfIntersection, ConvexIcosphereIsClean) {
  for (int level = 0; level <= 3; ++level) EXPECT_TRUE(detect_self_intersections(icosphere(level, 5.0)).empty());
}

TEST(SelfIntersection, ConstructedPairInsideAMesh) {
  TriangleMesh m = icosphere(1, 50.0, Vec3(100, 100, 100));
  const int crossing_a = static_cast<int>(m.faces.size());
  const TriangleMesh pair = soup({{Vec3(0, 0, 0), Vec3(2, 0, 0), Vec3(0, 2, 0)},
                                  {Vec3(0.5, 0.5, -1), Vec3(0.5, 0.5, 1), Vec3(1.5, 0.5, 0)}});
  m = merge(m, pair);
  const auto hits = detect_self_intersections(m);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0], FacePair(crossing_a, crossing_a + 1));
}

TEST(SelfIntersection, AdjacentFacesAreNotReported) {
  // Two coplanar faces sharing an edge, one overlapping the other.
  const TriangleMesh m{{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0.2, 0.2, 0)}, {{0, 1, 2}, {0, 1, 3}}};
  EXPECT_TRUE(detect_self_intersections(m).empty());
}

TEST(SelfIntersection, OutputIsSortedAndMatchesBruteForce) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    // 162 vertices / 320 faces with heavy noise so that many faces cross.
    const TriangleMesh m = cortexforge::testing::perturbed_sphere(2, 10.0, 4.0, rng);
    const auto fast = detect_self_intersections(m);
    EXPECT_TRUE(std::is_sorted(fast.begin(), fast.end()));
    ASSERT_EQ(fast, brute_force_intersections(m)) << "trial " << trial;
  }
}

TEST(SelfIntersection, DentedSpheresMatchBruteForce) {
  std::mt19937_64 rng(3);
  int with_hits = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const TriangleMesh m = dented_sphere(rng);
    const auto fast = detect_self_intersections(m);
    ASSERT_EQ(fast, brute_force_intersections(m));
    with_hits += !fast.empty();
  }
  EXPECT_EQ(with_hits, 20);
}

TEST(SelfIntersection, RandomTriangleSoupMatchesBruteForce) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::uniform_int_distribution<int> grid(0, 4);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Tri> tris;
    while (tris.size() < 150) {
      if (trial % 2) {
        // Integer lattice coordinates: many exact coplanar and touching cases.
        const Tri t{Vec3(grid(rng), grid(rng), grid(rng)), Vec3(grid(rng), grid(rng), grid(rng)),
                    Vec3(grid(rng), grid(rng), grid(rng))};
        if ((t[1] - t[0]).cross(t[2] - t[0]).squaredNorm() == 0.0) continue;
        tris.push_back(t);
      } else {
        const Vec3 c(u(rng), u(rng), u(rng));
        tris.push_back({c + 0.2 * Vec3(u(rng), u(rng), u(rng)), c + 0.2 * Vec3(u(rng), u(rng), u(rng)),
                        c + 0.2 * Vec3(u(rng), u(rng), u(rng))});
      }
    }
    const TriangleMesh m = soup(tris);
    ASSERT_EQ(detect_self_intersections(m), brute_force_intersections(m)) << "trial " << trial;
  }
}
