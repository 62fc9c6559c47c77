#pragma once

// Exact closed-triangle intersection tests built only from orient2d/orient3d.

#include <cortexforge/predicates.hpp>

#include <array>

namespace cortexforge {

namespace detail {

using predicates::orient2d;
using predicates::orient3d;

struct Point2 {
  double v[2];
};

inline Point2 drop_axis(const Vec3& p, int axis) {
  const int a = axis == 0 ? 1 : 0;
  const int b = axis == 2 ? 1 : 2;
  return {{p[a], p[b]}};
}

inline int orient(const Point2& a, const Point2& b, const Point2& c) { return orient2d(a.v, b.v, c.v); }

/// Collinear c lies within the closed segment ab.
inline bool within_box(const Point2& a, const Point2& b, const Point2& c) {
  return std::min(a.v[0], b.v[0]) <= c.v[0] && c.v[0] <= std::max(a.v[0], b.v[0]) &&
         std::min(a.v[1], b.v[1]) <= c.v[1] && c.v[1] <= std::max(a.v[1], b.v[1]);
}

inline bool segments_intersect_2d(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && within_box(a, b, c)) return true;
  if (o2 == 0 && within_box(a, b, d)) return true;
  if (o3 == 0 && within_box(c, d, a)) return true;
  if (o4 == 0 && within_box(c, d, b)) return true;
  return false;
}

inline bool point_in_triangle_2d(const Point2& p, const Point2& a, const Point2& b, const Point2& c) {
  const int s1 = orient(a, b, p), s2 = orient(b, c, p), s3 = orient(c, a, p);
  const bool has_neg = s1 < 0 || s2 < 0 || s3 < 0;
  const bool has_pos = s1 > 0 || s2 > 0 || s3 > 0;
  return !(has_neg && has_pos);
}

/// A coordinate axis whose removal keeps triangle (a, b, c) non-degenerate,
/// or -1 if the triangle is degenerate.
inline int projection_axis(const Vec3& a, const Vec3& b, const Vec3& c) {
  for (int axis = 0; axis < 3; ++axis) {
    if (orient(drop_axis(a, axis), drop_axis(b, axis), drop_axis(c, axis)) != 0) return axis;
  }
  return -1;
}

/// Closed segment pq against closed triangle abc, with pq in abc's plane.
inline bool coplanar_segment_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b,
                                      const Vec3& c) {
  const int axis = projection_axis(a, b, c);
  if (axis < 0) return false;
  const Point2 P = drop_axis(p, axis), Q = drop_axis(q, axis);
  const Point2 A = drop_axis(a, axis), B = drop_axis(b, axis), C = drop_axis(c, axis);
  if (point_in_triangle_2d(P, A, B, C) || point_in_triangle_2d(Q, A, B, C)) return true;
  return segments_intersect_2d(P, Q, A, B) || segments_intersect_2d(P, Q, B, C) ||
         segments_intersect_2d(P, Q, C, A);
}

/// Closed segment pq against closed triangle abc.
inline bool segment_triangle(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b, const Vec3& c) {
  const int sp = orient3d(a, b, c, p);
  const int sq = orient3d(a, b, c, q);
  if (sp == sq && sp != 0) return false;
  if (sp == 0 && sq == 0) return coplanar_segment_triangle(p, q, a, b, c);
  // The line pq crosses the plane inside the segment; test it against the
  // three edges (Plücker-style signed volumes must not disagree).
  const int t1 = orient3d(p, q, a, b);
  const int t2 = orient3d(p, q, b, c);
  const int t3 = orient3d(p, q, c, a);
  const bool has_neg = t1 < 0 || t2 < 0 || t3 < 0;
  const bool has_pos = t1 > 0 || t2 > 0 || t3 > 0;
  return !(has_neg && has_pos);
}

inline bool coplanar_triangles(const std::array<Vec3, 3>& t, const std::array<Vec3, 3>& u) {
  int axis = projection_axis(t[0], t[1], t[2]);
  if (axis < 0) axis = projection_axis(u[0], u[1], u[2]);
  if (axis < 0) return false;
  std::array<Point2, 3> T, U;
  for (int i = 0; i < 3; ++i) {
    T[i] = drop_axis(t[i], axis);
    U[i] = drop_axis(u[i], axis);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (segments_intersect_2d(T[i], T[(i + 1) % 3], U[j], U[(j + 1) % 3])) return true;
  return point_in_triangle_2d(T[0], U[0], U[1], U[2]) || point_in_triangle_2d(U[0], T[0], T[1], T[2]);
}

}  // namespace detail

/// Exact test for whether two closed triangles share at least one point.
///
/// Non-coplanar triangles meet along a segment whose endpoints lie on an edge
/// of one of them, so edge-versus-triangle tests decide the general case.
/// Both triangles must be non-degenerate (not collinear).
inline bool triangles_intersect(const std::array<Vec3, 3>& t, const std::array<Vec3, 3>& u) {
  using predicates::orient3d;
  const int du0 = orient3d(t[0], t[1], t[2], u[0]);
  const int du1 = orient3d(t[0], t[1], t[2], u[1]);
  const int du2 = orient3d(t[0], t[1], t[2], u[2]);
  if (du0 == du1 && du1 == du2 && du0 != 0) return false;
  const int dt0 = orient3d(u[0], u[1], u[2], t[0]);
  const int dt1 = orient3d(u[0], u[1], u[2], t[1]);
  const int dt2 = orient3d(u[0], u[1], u[2], t[2]);
  if (dt0 == dt1 && dt1 == dt2 && dt0 != 0) return false;
  if (du0 == 0 && du1 == 0 && du2 == 0) return detail::coplanar_triangles(t, u);
  for (int i = 0; i < 3; ++i) {
    if (detail::segment_triangle(t[i], t[(i + 1) % 3], u[0], u[1], u[2])) return true;
    if (detail::segment_triangle(u[i], u[(i + 1) % 3], t[0], t[1], t[2])) return true;
  }
  return false;
}

}  // namespace cortexforge
