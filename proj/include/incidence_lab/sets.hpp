#pragma once

// Families of cells / dual cells, covering numbers at all dyadic scales, and
// Katz-Tao / (delta,s,C) non-concentration verification with best-constant
// search.
//
// Ball convention used throughout the library: a "ball of radius r" (r = 2^-k
// dyadic) is the half-open axis box of side r anchored on the r/2 lattice.
// Every Euclidean r-ball is covered by at most 4 such boxes and every box sits
// inside one, so reported constants are a 4-approximation of the Euclidean
// ones; for the boxed variant they are exact.

#include "incidence_lab/grid.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace inclab {

enum class Band { UnitSquare, DualPlane };

class CellFamily {
 public:
  CellFamily() = default;
  CellFamily(Scale s, std::vector<Cell> cells, Band band = Band::UnitSquare)
      : scale_(s), band_(band), cells_(std::move(cells)) {
    for (const Cell& c : cells_) check_cell_band(c, scale_, band_ == Band::UnitSquare);
    normalize();
  }

  const Scale& scale() const { return scale_; }
  int m() const { return scale_.m; }
  Band band() const { return band_; }
  const std::vector<Cell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

  bool contains(const Cell& c) const {
    return std::binary_search(cells_.begin(), cells_.end(), c);
  }

  CellFamily restrictedTo(const Cell& q, int k) const {
    std::vector<Cell> out;
    for (const Cell& c : cells_)
      if (cell_ancestor(c, m(), k) == q) out.push_back(c);
    return CellFamily(scale_, std::move(out), band_);
  }

  CellFamily minus(const CellFamily& other) const {
    requireSameScale(other);
    std::vector<Cell> out;
    std::set_difference(cells_.begin(), cells_.end(), other.cells_.begin(), other.cells_.end(),
                        std::back_inserter(out));
    return CellFamily(scale_, std::move(out), band_);
  }

  CellFamily intersect(const CellFamily& other) const {
    requireSameScale(other);
    std::vector<Cell> out;
    std::set_intersection(cells_.begin(), cells_.end(), other.cells_.begin(), other.cells_.end(),
                          std::back_inserter(out));
    return CellFamily(scale_, std::move(out), band_);
  }

  void requireSameScale(const CellFamily& other) const {
    if (!(scale_ == other.scale_)) throw std::invalid_argument("scale mismatch");
  }

 private:
  void normalize() {
    std::sort(cells_.begin(), cells_.end());
    cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
  }

  Scale scale_{};
  Band band_ = Band::UnitSquare;
  std::vector<Cell> cells_;
};

class DualCellFamily {
 public:
  DualCellFamily() = default;
  DualCellFamily(Scale s, std::vector<DualCell> cells) : scale_(s), cells_(std::move(cells)) {
    for (const DualCell& d : cells_) check_dual_band(d, scale_);
    std::sort(cells_.begin(), cells_.end());
    cells_.erase(std::unique(cells_.begin(), cells_.end()), cells_.end());
  }

  const Scale& scale() const { return scale_; }
  int m() const { return scale_.m; }
  const std::vector<DualCell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  bool empty() const { return cells_.empty(); }

 private:
  Scale scale_{};
  std::vector<DualCell> cells_;
};

// ---------------------------------------------------------------------------
// Covering numbers
// ---------------------------------------------------------------------------

inline i64 covering_number(const CellFamily& f, int k) {
  if (k > f.m()) throw std::invalid_argument("covering_number: k > m");
  std::vector<Cell> anc;
  anc.reserve(f.size());
  for (const Cell& c : f.cells()) anc.push_back(cell_ancestor(c, f.m(), k));
  std::sort(anc.begin(), anc.end());
  anc.erase(std::unique(anc.begin(), anc.end()), anc.end());
  return static_cast<i64>(anc.size());
}

inline i64 covering_number(const DualCellFamily& f, int k) {
  if (k > f.m()) throw std::invalid_argument("covering_number: k > m");
  std::vector<DualCell> anc;
  anc.reserve(f.size());
  for (const DualCell& d : f.cells()) anc.push_back(dual_ancestor(d, f.m(), k));
  std::sort(anc.begin(), anc.end());
  anc.erase(std::unique(anc.begin(), anc.end()), anc.end());
  return static_cast<i64>(anc.size());
}

// ---------------------------------------------------------------------------
// Non-concentration constants
// ---------------------------------------------------------------------------

struct KTReport {
  double exponent = 0.0;      // s
  double bestConstant = 0.0;  // max ratio over all scanned balls
  // witness ball achieving the constant: box [cx,cx+r) x [cy,cy+r) in units of
  // r/2 at radiusExp k (r = 2^-k)
  int radiusExp = 0;
  i64 witnessX = 0, witnessY = 0;
  i64 witnessCount = 0;
  bool normalized = false;  // true for the (delta,s,C)-set variant
};

namespace detail {

struct PairHash {
  std::size_t operator()(const std::pair<i64, i64>& p) const {
    return std::hash<i64>()(p.first * 1000003 + p.second);
  }
};

// Max count over side-r boxes on the r/2 lattice, where items are unit squares
// at granularity g = r/2 given by half-lattice indices. Returns (count, box).
template <typename It>
void box_scan(It begin, It end, int m, int k, i64& bestCount, i64& bestX, i64& bestY) {
  // lattice granularity r/2 = 2^-(k+1); each family cell lands in one lattice
  // cell; a box covers a 2x2 block of lattice cells.
  std::unordered_map<std::pair<i64, i64>, i64, PairHash> hist;
  const int shift = m - (k + 1);  // k+1 <= m required by caller
  for (It it = begin; it != end; ++it) {
    const i64 lx = floor_div(it->first, i64(1) << shift);
    const i64 ly = floor_div(it->second, i64(1) << shift);
    ++hist[{lx, ly}];
  }
  bestCount = 0;
  bestX = bestY = 0;
  // a box anchored at lattice position (bx,by) covers lattice cells
  // {bx,bx+1} x {by,by+1}
  for (const auto& [cellPos, cnt] : hist) {
    (void)cnt;
    for (i64 dx = -1; dx <= 0; ++dx) {
      for (i64 dy = -1; dy <= 0; ++dy) {
        const i64 bx = cellPos.first + dx, by = cellPos.second + dy;
        i64 total = 0;
        for (i64 ox = 0; ox <= 1; ++ox)
          for (i64 oy = 0; oy <= 1; ++oy) {
            auto it = hist.find({bx + ox, by + oy});
            if (it != hist.end()) total += it->second;
          }
        if (total > bestCount || (total == bestCount && std::pair(bx, by) < std::pair(bestX, bestY))) {
          bestCount = total;
          bestX = bx;
          bestY = by;
        }
      }
    }
  }
}

template <typename FamilyT, typename Coord>
KTReport nonconcentration_scan(const FamilyT& f, double s, bool normalized, Coord coord,
                               int minRadiusExp) {
  if (f.empty()) throw std::invalid_argument("non-concentration scan: empty family");
  if (!(s >= 0.0 && s <= 2.0))
    throw std::invalid_argument("non-concentration scan: s outside [0,2]");
  const int m = f.m();
  std::vector<std::pair<i64, i64>> pts;
  pts.reserve(f.size());
  for (const auto& c : f.cells()) pts.push_back(coord(c));

  KTReport rep;
  rep.exponent = s;
  rep.normalized = normalized;
  rep.bestConstant = -1.0;
  for (int k = minRadiusExp; k <= m; ++k) {
    i64 cnt = 0, bx = 0, by = 0;
    if (k == m) {
      // radius = delta: boxes cover 2x2 blocks of family cells
      box_scan(pts.begin(), pts.end(), m + 1, m, cnt, bx, by);
    } else {
      box_scan(pts.begin(), pts.end(), m, k, cnt, bx, by);
    }
    const double r = std::ldexp(1.0, -k);
    const double denom = normalized ? std::pow(r, s) * double(f.size())
                                    : std::pow(std::ldexp(1.0, m - k), s);
    const double ratio = double(cnt) / denom;
    if (ratio > rep.bestConstant) {
      rep.bestConstant = ratio;
      rep.radiusExp = k;
      rep.witnessX = bx;
      rep.witnessY = by;
      rep.witnessCount = cnt;
    }
  }
  return rep;
}

inline std::pair<i64, i64> cell_coord(const Cell& c) { return {c.x, c.y}; }
inline std::pair<i64, i64> dual_coord(const DualCell& d) { return {d.a, d.b}; }

}  // namespace detail

// Katz-Tao constant: max over dyadic radii r in [delta,1] and side-r boxes of
// |F cap B|_delta / (r/delta)^s.
inline KTReport katz_tao_constant(const CellFamily& f, double s) {
  return detail::nonconcentration_scan(f, s, false, detail::cell_coord, 0);
}
inline KTReport katz_tao_constant(const DualCellFamily& f, double s) {
  return detail::nonconcentration_scan(f, s, false, detail::dual_coord, 0);
}

// (delta,s,C)-set constant: max of |F cap B|_delta / (r^s |F|_delta).
// minRadiusExp restricts the scan to radii r <= 2^-minRadiusExp ... 1; the
// multiscale machinery uses it to check non-concentration down to a coarser
// floor than the family's own scale.
inline KTReport delta_s_constant(const CellFamily& f, double s, int minRadiusExp = 0) {
  return detail::nonconcentration_scan(f, s, true, detail::cell_coord, minRadiusExp);
}
inline KTReport delta_s_constant(const DualCellFamily& f, double s, int minRadiusExp = 0) {
  return detail::nonconcentration_scan(f, s, true, detail::dual_coord, minRadiusExp);
}

// ---------------------------------------------------------------------------
// Tubes from lines
// ---------------------------------------------------------------------------

// Family-level rescaling by the homothety sending the scale-2^-k square q to
// [0,1)^2. Every cell must be a descendant of q.
inline CellFamily rescale_family(const Cell& q, int k, const CellFamily& f) {
  std::vector<Cell> out;
  out.reserve(f.size());
  for (const Cell& c : f.cells()) out.push_back(rescale_cell(q, k, c, f.m()));
  return CellFamily(Scale{f.m() - k}, std::move(out));
}

// ---------------------------------------------------------------------------
// Configuration duality
// ---------------------------------------------------------------------------

// (P, T) -> (P*, L*): every tube (a,b) becomes the cell (-a-1, b) (negation of
// a half-open interval) and every cell (X,Y) becomes the tube (a=X, b=Y). The
// image cell family lives in the extended dual-plane band; applying the map
// twice returns the original configuration with both x/slope coordinates
// negated (x -> -x-1). Incidence is preserved pairwise: the closed-interval
// predicate is symmetric under this exchange.
inline std::pair<CellFamily, DualCellFamily> dualize_config(const CellFamily& P,
                                                            const DualCellFamily& T) {
  if (!(P.scale() == T.scale())) throw std::invalid_argument("dualize_config: scale mismatch");
  std::vector<Cell> starCells;
  starCells.reserve(T.size());
  for (const DualCell& d : T.cells()) starCells.push_back(Cell{negate_index(d.a), d.b});
  std::vector<DualCell> starTubes;
  starTubes.reserve(P.size());
  for (const Cell& c : P.cells()) starTubes.push_back(DualCell{c.x, c.y});
  return {CellFamily(P.scale(), std::move(starCells), Band::DualPlane),
          DualCellFamily(P.scale(), std::move(starTubes))};
}

// Each line maps to the dual cell containing its dual point (a,b);
// deduplicated. Slopes must lie in [-1,1).
inline DualCellFamily tube_family_from_lines(const std::vector<Line>& lines, Scale s) {
  std::vector<DualCell> cells;
  cells.reserve(lines.size());
  const double delta = scale_delta(s);
  const i64 n = i64(1) << s.m;
  for (const Line& l : lines) {
    if (!(l.a >= -1.0 && l.a < 1.0)) throw std::invalid_argument("line slope outside [-1,1)");
    const i64 a = static_cast<i64>(std::floor(l.a / delta));
    const i64 b = static_cast<i64>(std::floor(l.b / delta));
    if (b < -n || b >= 2 * n) throw std::invalid_argument("line intercept outside [-1,2)");
    cells.push_back(DualCell{a, b});
  }
  return DualCellFamily(s, std::move(cells));
}

}  // namespace inclab
