#pragma once

// Exact enumeration of dyadic (cell, tube) incidences with per-tube and
// per-cell fibers, plus inequality evaluators: the quantified Fu-Ren bound,
// the classical 2-ends bound, and the per-cell line-count bound.

#include "incidence_lab/sets.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace inclab {

// The canonical incidence count is the number of (cell, tube) pairs under
// cell_meets_tube; pairs are stored as indices into the input families.
struct IncidenceSet {
  Scale scale;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // (cell idx, tube idx)
  std::vector<i64> perTube;                                    // |P_T| per tube index
  std::vector<i64> perCell;                                    // |T_p| per cell index

  i64 count() const { return static_cast<i64>(pairs.size()); }
};

namespace detail {

// column index of sorted cells: for each x, the range of cells
struct ColumnIndex {
  std::vector<i64> xs;                    // distinct columns, ascending
  std::vector<std::size_t> begin, end;    // ranges into the sorted cell vector

  explicit ColumnIndex(const std::vector<Cell>& cells) {
    std::size_t i = 0;
    while (i < cells.size()) {
      std::size_t j = i;
      while (j < cells.size() && cells[j].x == cells[i].x) ++j;
      xs.push_back(cells[i].x);
      begin.push_back(i);
      end.push_back(j);
      i = j;
    }
  }
};

}  // namespace detail

// Output-sensitive column sweep: per tube, walk the nonempty columns of P and
// intersect the exact integer y-range with the column's sorted cells.
inline IncidenceSet incidences(const CellFamily& P, const DualCellFamily& T) {
  if (!(P.scale() == T.scale())) throw std::invalid_argument("incidences: scale mismatch");
  if (P.empty()) throw std::invalid_argument("incidences: empty point family");
  IncidenceSet out;
  out.scale = P.scale();
  out.perTube.assign(T.size(), 0);
  out.perCell.assign(P.size(), 0);
  const auto& cells = P.cells();
  detail::ColumnIndex cols(cells);
  for (std::uint32_t ti = 0; ti < T.size(); ++ti) {
    const DualCell& tube = T.cells()[ti];
    for (std::size_t c = 0; c < cols.xs.size(); ++c) {
      i64 ylo, yhi;
      tube_column_range(tube, cols.xs[c], P.scale(), ylo, yhi);
      // cells in column c with y in [ylo, yhi]
      const Cell lo{cols.xs[c], ylo};
      auto first = std::lower_bound(cells.begin() + cols.begin[c], cells.begin() + cols.end[c], lo);
      for (auto it = first; it != cells.begin() + cols.end[c] && it->y <= yhi; ++it) {
        const auto pi = static_cast<std::uint32_t>(it - cells.begin());
        out.pairs.emplace_back(pi, ti);
        ++out.perTube[ti];
        ++out.perCell[pi];
      }
    }
  }
  return out;
}

// Quadratic oracle, kept behind the same result type.
inline IncidenceSet incidences_brute(const CellFamily& P, const DualCellFamily& T) {
  if (!(P.scale() == T.scale())) throw std::invalid_argument("incidences: scale mismatch");
  if (P.empty()) throw std::invalid_argument("incidences: empty point family");
  IncidenceSet out;
  out.scale = P.scale();
  out.perTube.assign(T.size(), 0);
  out.perCell.assign(P.size(), 0);
  for (std::uint32_t pi = 0; pi < P.size(); ++pi)
    for (std::uint32_t ti = 0; ti < T.size(); ++ti)
      if (cell_meets_tube(P.cells()[pi], T.cells()[ti], P.scale())) {
        out.pairs.emplace_back(pi, ti);
        ++out.perTube[ti];
        ++out.perCell[pi];
      }
  return out;
}

// ---------------------------------------------------------------------------
// Bound evaluators
// ---------------------------------------------------------------------------

inline double fu_ren_exponent(double s, double t) { return (s * s + s * t + t * t) / (s + t); }

struct BoundReport {
  double lhs = 0, rhs = 0, ratio = 0;
  double s = 0, t = 0, eps = 0, kP = 1, kL = 1;
  i64 incidenceCount = 0;
  std::string note;
};

// lhs = |I|^{s+t}, rhs = delta^{-st(1+eps)} * K_P^t * K_L^s * |P|^s * |L|^t.
// The underlying inequality guarantees a bounded ratio; the evaluator just
// records it.
inline BoundReport fu_ren_check(const CellFamily& P, const DualCellFamily& T, double s, double t,
                                double eps, std::optional<double> kP = std::nullopt,
                                std::optional<double> kL = std::nullopt) {
  if (P.empty() || T.empty()) throw std::invalid_argument("fu_ren_check: empty family");
  if (!(s > 0 && s <= 1 && t > 0 && t <= 1)) throw std::invalid_argument("fu_ren_check: s,t in (0,1]");
  BoundReport rep;
  rep.s = s;
  rep.t = t;
  rep.eps = eps;
  rep.kP = kP ? *kP : katz_tao_constant(P, s).bestConstant;
  rep.kL = kL ? *kL : katz_tao_constant(T, t).bestConstant;
  const IncidenceSet inc = incidences(P, T);
  rep.incidenceCount = inc.count();
  rep.lhs = std::pow(double(inc.count()), s + t);
  const double m = P.m();
  rep.rhs = std::exp2(m * s * t * (1.0 + eps)) * std::pow(rep.kP, t) * std::pow(rep.kL, s) *
            std::pow(double(P.size()), s) * std::pow(double(T.size()), t);
  rep.ratio = rep.lhs / rep.rhs;
  return rep;
}

// 2-ends bound. Each per-tube set must have the same cardinality M, consist of
// cells meeting its tube, and satisfy the 2-ends condition: no radius-r ball
// (side-r box, r/2 lattice) holds more than M/3 of it. lhs = |union of the
// per-tube sets|, rhs = |T|^{1/2} * M * r^{1/2}.
inline BoundReport two_ends_check(const std::vector<std::pair<DualCell, CellFamily>>& perTube,
                                  Scale scale, int radiusExp) {
  if (perTube.empty()) throw std::invalid_argument("two_ends_check: no tubes");
  if (radiusExp < 0 || radiusExp > scale.m)
    throw std::invalid_argument("two_ends_check: radius outside [delta, 1]");
  const std::size_t M = perTube.front().second.size();
  std::vector<Cell> all;
  for (std::size_t i = 0; i < perTube.size(); ++i) {
    const auto& [tube, fam] = perTube[i];
    if (!(fam.scale() == scale)) throw std::invalid_argument("two_ends_check: scale mismatch");
    if (fam.size() != M) throw std::invalid_argument("two_ends_check: per-tube sizes differ");
    for (const Cell& c : fam.cells()) {
      if (!cell_meets_tube(c, tube, scale))
        throw std::invalid_argument("two_ends_check: cell does not meet its tube (tube " +
                                    std::to_string(i) + ")");
    }
    i64 cnt, bx, by;
    std::vector<std::pair<i64, i64>> pts;
    for (const Cell& c : fam.cells()) pts.emplace_back(c.x, c.y);
    if (radiusExp == scale.m)
      detail::box_scan(pts.begin(), pts.end(), scale.m + 1, scale.m, cnt, bx, by);
    else
      detail::box_scan(pts.begin(), pts.end(), scale.m, radiusExp, cnt, bx, by);
    if (3 * cnt > static_cast<i64>(M))
      throw std::invalid_argument("two_ends_check: concentration at tube " + std::to_string(i) +
                                  ", ball (" + std::to_string(bx) + "," + std::to_string(by) +
                                  ") at radius 2^-" + std::to_string(radiusExp) + " holds " +
                                  std::to_string(cnt) + " of " + std::to_string(M));
    for (const Cell& c : fam.cells()) all.push_back(c);
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  BoundReport rep;
  rep.lhs = double(all.size());
  rep.rhs = std::sqrt(double(perTube.size())) * double(M) * std::sqrt(std::ldexp(1.0, -radiusExp));
  rep.ratio = rep.lhs / rep.rhs;
  rep.incidenceCount = static_cast<i64>(all.size());
  return rep;
}

// M = max_p |T_p|; postcondition |pairs| <= M * |P| holds exactly.
inline i64 max_lines_per_cell(const CellFamily& P, const DualCellFamily& T) {
  const IncidenceSet inc = incidences(P, T);
  i64 M = 0;
  for (i64 v : inc.perCell) M = std::max(M, v);
  if (inc.count() > M * static_cast<i64>(P.size()))
    throw std::logic_error("max_lines_per_cell: counting identity violated");
  return M;
}

}  // namespace inclab
