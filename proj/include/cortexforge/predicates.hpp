#pragma once

// Exact geometric predicates on double-precision inputs.
//
// A floating-point filter answers the easy cases; otherwise the determinant is
// evaluated exactly with non-overlapping floating-point expansions (sums of
// doubles whose total is the exact real value), following Shewchuk's
// expansion arithmetic.

#include <cortexforge/common.hpp>

#include <cmath>
#include <vector>

namespace cortexforge::predicates {

namespace detail {

using Expansion = std::vector<double>;

inline void two_sum(double a, double b, double& x, double& y) {
  x = a + b;
  const double bv = x - a;
  const double av = x - bv;
  y = (a - av) + (b - bv);
}

inline void two_product(double a, double b, double& x, double& y) {
  x = a * b;
  y = std::fma(a, b, -x);
}

/// e + b, with zero components removed.
inline Expansion grow(const Expansion& e, double b) {
  Expansion h;
  h.reserve(e.size() + 1);
  double q = b;
  for (double ei : e) {
    double sum, err;
    two_sum(q, ei, sum, err);
    if (err != 0.0) h.push_back(err);
    q = sum;
  }
  if (q != 0.0 || h.empty()) h.push_back(q);
  return h;
}

inline Expansion add(const Expansion& e, const Expansion& f) {
  Expansion h = e;
  for (double fi : f) h = grow(h, fi);
  return h;
}

inline Expansion negate(Expansion e) {
  for (double& x : e) x = -x;
  return e;
}

inline Expansion scale(const Expansion& e, double b) {
  Expansion h{0.0};
  for (double ei : e) {
    double p, err;
    two_product(ei, b, p, err);
    h = grow(h, err);
    h = grow(h, p);
  }
  return h;
}

inline Expansion multiply(const Expansion& e, const Expansion& f) {
  Expansion h{0.0};
  for (double fi : f) h = add(h, scale(e, fi));
  return h;
}

inline Expansion difference(double a, double b) {
  double x, y;
  two_sum(a, -b, x, y);
  return y != 0.0 ? Expansion{y, x} : Expansion{x};
}

inline int sign_of(const Expansion& e) {
  for (auto it = e.rbegin(); it != e.rend(); ++it) {
    if (*it > 0.0) return 1;
    if (*it < 0.0) return -1;
  }
  return 0;
}

inline constexpr double kEpsilon = 1.1102230246251565e-16;  // 2^-53
inline constexpr double kOrient2dBound = (3.0 + 16.0 * kEpsilon) * kEpsilon;
inline constexpr double kOrient3dBound = (7.0 + 56.0 * kEpsilon) * kEpsilon;

}  // namespace detail

/// Sign of det[b-a, c-a] in 2D: +1 when (a, b, c) turn counter-clockwise.
inline int orient2d(const double* a, const double* b, const double* c) {
  const double l = (b[0] - a[0]) * (c[1] - a[1]);
  const double r = (b[1] - a[1]) * (c[0] - a[0]);
  const double det = l - r;
  const double bound = detail::kOrient2dBound * (std::abs(l) + std::abs(r));
  if (det > bound) return 1;
  if (-det > bound) return -1;
  using namespace detail;
  const Expansion e = add(multiply(difference(b[0], a[0]), difference(c[1], a[1])),
                          negate(multiply(difference(b[1], a[1]), difference(c[0], a[0]))));
  return sign_of(e);
}

/// Sign of det[b-a, c-a, d-a]: +1 when d lies on the side of triangle
/// (a, b, c) that its right-handed normal (b-a) x (c-a) points to.
inline int orient3d(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
  const double ux = b.x() - a.x(), uy = b.y() - a.y(), uz = b.z() - a.z();
  const double vx = c.x() - a.x(), vy = c.y() - a.y(), vz = c.z() - a.z();
  const double wx = d.x() - a.x(), wy = d.y() - a.y(), wz = d.z() - a.z();
  const double m1 = vy * wz - vz * wy;
  const double m2 = vx * wz - vz * wx;
  const double m3 = vx * wy - vy * wx;
  const double det = ux * m1 - uy * m2 + uz * m3;
  const double permanent = std::abs(ux) * (std::abs(vy * wz) + std::abs(vz * wy)) +
                           std::abs(uy) * (std::abs(vx * wz) + std::abs(vz * wx)) +
                           std::abs(uz) * (std::abs(vx * wy) + std::abs(vy * wx));
  const double bound = detail::kOrient3dBound * permanent;
  if (det > bound) return 1;
  if (-det > bound) return -1;

  using namespace detail;
  const Expansion eu[3] = {difference(b.x(), a.x()), difference(b.y(), a.y()), difference(b.z(), a.z())};
  const Expansion ev[3] = {difference(c.x(), a.x()), difference(c.y(), a.y()), difference(c.z(), a.z())};
  const Expansion ew[3] = {difference(d.x(), a.x()), difference(d.y(), a.y()), difference(d.z(), a.z())};
  auto minor = [&](int i, int j) {
    return add(multiply(ev[i], ew[j]), negate(multiply(ev[j], ew[i])));
  };
  const Expansion det_exact = add(add(multiply(eu[0], minor(1, 2)), negate(multiply(eu[1], minor(0, 2)))),
                                  multiply(eu[2], minor(0, 1)));
  return sign_of(det_exact);
}

}  // namespace cortexforge::predicates
