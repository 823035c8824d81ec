#pragma once

// Dyadic geometry kernel: cells of [0,1)^2, dual cells (= dyadic tubes),
// the exact integer incidence predicate, point-line duality maps, rescaling,
// and a diagnostic metric on the space of lines.
//
// All incidence decisions are made in integer arithmetic after scaling by
// 2^{2m}; __int128 keeps the corner products exact for m <= 30.

#include "incidence_lab/exact.hpp"

#include <algorithm>
#include <cmath>
#include <compare>
#include <stdexcept>

namespace inclab {

// delta = 2^-m
struct Scale {
  int m = 1;
  friend bool operator==(const Scale&, const Scale&) = default;
};

inline double scale_delta(const Scale& s) { return std::ldexp(1.0, -s.m); }

// Half-open square [x*delta,(x+1)*delta) x [y*delta,(y+1)*delta).
// Standard band: x,y in [0,2^m). Families derived through dualization live in
// the extended band x in [-2^m,2^m), y in [-2^m,2*2^m); the predicate and all
// counting code below are band-agnostic.
struct Cell {
  i64 x = 0, y = 0;
  auto operator<=>(const Cell&) const = default;
};

// Dual square Q = [a*delta,(a+1)*delta) x [b*delta,(b+1)*delta) in the
// (slope, intercept) plane; equivalently the dyadic tube spanned by the lines
// y = alpha*x + beta with (alpha,beta) in Q. Band: a in [-2^m,2^m),
// b in [-2^m,2*2^m).
struct DualCell {
  i64 a = 0, b = 0;
  auto operator<=>(const DualCell&) const = default;
};

// y = a*x + b
struct Line {
  double a = 0.0, b = 0.0;
};

struct Point2 {
  double x = 0.0, y = 0.0;
};

// center + unit direction + (length >= width)
struct Rect {
  double cx = 0, cy = 0;
  double ux = 1, uy = 0;
  double len = 0, wid = 0;
};

inline void check_cell_band(const Cell& c, const Scale& s, bool unitSquare) {
  const i64 n = i64(1) << s.m;
  if (unitSquare) {
    if (c.x < 0 || c.x >= n || c.y < 0 || c.y >= n)
      throw std::invalid_argument("cell outside [0,2^m)^2 band");
  } else {
    if (c.x < -n || c.x >= n || c.y < -n || c.y >= 2 * n)
      throw std::invalid_argument("cell outside extended dual-plane band");
  }
}

inline void check_dual_band(const DualCell& d, const Scale& s) {
  const i64 n = i64(1) << s.m;
  if (d.a < -n || d.a >= n || d.b < -n || d.b >= 2 * n)
    throw std::invalid_argument("dual cell outside slope/intercept band");
}

// ---------------------------------------------------------------------------
// Incidence predicate
// ---------------------------------------------------------------------------

// True iff some line of the tube T meets the closed square of p:
// exists alpha in [a*d,(a+1)*d], x in [X*d,(X+1)*d], beta in [b*d,(b+1)*d]
// with alpha*x + beta in [Y*d,(Y+1)*d]. Closed-interval convention: boundary
// touching counts. Exact: the range of alpha*x over the box is spanned by the
// four corner products.
inline bool cell_meets_tube(const Cell& p, const DualCell& T, const Scale& s) {
  const i64 pow = i64(1) << s.m;
  const i128 c00 = i128(T.a) * p.x;
  const i128 c01 = i128(T.a) * (p.x + 1);
  const i128 c10 = i128(T.a + 1) * p.x;
  const i128 c11 = i128(T.a + 1) * (p.x + 1);
  const i128 lo = min4(c00, c01, c10, c11) + i128(T.b) * pow;
  const i128 hi = max4(c00, c01, c10, c11) + i128(T.b + 1) * pow;
  return lo <= i128(p.y + 1) * pow && hi >= i128(p.y) * pow;
}

// Generalization with the tube at a coarser scale (mT <= mP). Used by the
// tube-widening monotonicity property.
inline bool cell_meets_tube_cross(const Cell& p, int mP, const DualCell& T, int mT) {
  if (mT > mP) throw std::invalid_argument("cell_meets_tube_cross: tube must be coarser");
  const int shift = mP - mT;
  // tube intervals in delta_P units: [a<<shift, (a+1)<<shift]
  const i64 a0 = T.a << shift, a1 = (T.a + 1) << shift;
  const i64 b0 = T.b << shift, b1 = (T.b + 1) << shift;
  const i64 pow = i64(1) << mP;
  const i128 c00 = i128(a0) * p.x;
  const i128 c01 = i128(a0) * (p.x + 1);
  const i128 c10 = i128(a1) * p.x;
  const i128 c11 = i128(a1) * (p.x + 1);
  const i128 lo = min4(c00, c01, c10, c11) + i128(b0) * pow;
  const i128 hi = max4(c00, c01, c10, c11) + i128(b1) * pow;
  return lo <= i128(p.y + 1) * pow && hi >= i128(p.y) * pow;
}

inline DualCell tube_parent(const DualCell& T) {
  return DualCell{floor_div(T.a, 2), floor_div(T.b, 2)};
}

// Exact column range of a tube: cells (X, Y) with cell_meets_tube true have
// Y in [ylo, yhi] for the given column X.
inline void tube_column_range(const DualCell& T, i64 X, const Scale& s, i64& ylo, i64& yhi) {
  const i64 pow = i64(1) << s.m;
  const i128 c00 = i128(T.a) * X;
  const i128 c01 = i128(T.a) * (X + 1);
  const i128 c10 = i128(T.a + 1) * X;
  const i128 c11 = i128(T.a + 1) * (X + 1);
  const i128 u = min4(c00, c01, c10, c11);
  const i128 v = max4(c00, c01, c10, c11);
  ylo = ceil_div128(u, pow) + T.b - 1;
  yhi = floor_div128(v, pow) + T.b + 1;
}

// ---------------------------------------------------------------------------
// Duality maps
// ---------------------------------------------------------------------------

// D(x,y) = the line y' = x*x' + y
inline Line dual_point(double x, double y) { return Line{x, y}; }

// D*(l_{a,b}) = (-a, b)
inline Point2 dual_line(const Line& l) { return Point2{-l.a, l.b}; }

// Index negation for a half-open dyadic interval: [-(i+1)d, -i*d).
inline i64 negate_index(i64 i) { return -i - 1; }

// ---------------------------------------------------------------------------
// Rescaling
// ---------------------------------------------------------------------------

// Affine homothety sending the scale-2^-k square Q to [0,1)^2, applied to a
// finer cell. Errors if the cell is not a descendant of Q.
inline Cell rescale_cell(const Cell& q, int k, const Cell& c, int m) {
  if (k > m) throw std::invalid_argument("rescale: Q must be coarser than the cell");
  const int shift = m - k;
  if (floor_div(c.x, i64(1) << shift) != q.x || floor_div(c.y, i64(1) << shift) != q.y)
    throw std::invalid_argument("rescale: cell not contained in Q");
  return Cell{c.x - (q.x << shift), c.y - (q.y << shift)};
}

inline Cell cell_ancestor(const Cell& c, int m, int k) {
  const int shift = m - k;
  return Cell{floor_div(c.x, i64(1) << shift), floor_div(c.y, i64(1) << shift)};
}

inline DualCell dual_ancestor(const DualCell& d, int m, int k) {
  const int shift = m - k;
  return DualCell{floor_div(d.a, i64(1) << shift), floor_div(d.b, i64(1) << shift)};
}

// ---------------------------------------------------------------------------
// Diagnostic metric on lines
// ---------------------------------------------------------------------------

// d(l1,l2) = |sin(theta1 - theta2)| + |v1 - v2| where theta_i is the direction
// angle and v_i the foot of the perpendicular from the origin. Matches the
// operator-norm distance between the direction projections plus the distance
// of the canonical translation representatives. Floating point, diagnostics
// only; incidence decisions never go through here.
inline double line_metric(const Line& l1, const Line& l2) {
  const double n1 = std::sqrt(1.0 + l1.a * l1.a);
  const double n2 = std::sqrt(1.0 + l2.a * l2.a);
  const double sinTerm = std::fabs(l1.a - l2.a) / (n1 * n2);  // |sin(t1-t2)|
  // foot of perpendicular of y = ax+b: b/(1+a^2) * (-a, 1)
  const double f1x = -l1.a * l1.b / (n1 * n1), f1y = l1.b / (n1 * n1);
  const double f2x = -l2.a * l2.b / (n2 * n2), f2y = l2.b / (n2 * n2);
  return sinTerm + std::hypot(f1x - f2x, f1y - f2y);
}

}  // namespace inclab
