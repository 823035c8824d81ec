#pragma once

// Configuration generators: planted sheaf configurations with ground-truth
// clique labels, Cantor-type families with prescribed branching, and seeded
// random families. All generators are deterministic functions of their
// parameters and seed.

#include "incidence_lab/sets.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace inclab {

struct SheafConfig {
  CellFamily P;
  DualCellFamily L;
  // ground truth: clique index per cell / tube, aligned with P.cells()/L.cells()
  std::vector<int> cellLabel;
  std::vector<int> tubeLabel;
  std::vector<std::vector<Cell>> cliqueCells;
  std::vector<std::vector<DualCell>> cliqueTubes;
  double s = 1, t = 1;
  int m = 0;
  int deltaExp = 0;  // Delta = 2^-deltaExp
  int numCliques = 0;
  // measured non-concentration constants of the union (reported, not promised)
  double measuredKP = 0, measuredKL = 0;
};

namespace detail {

// Cantor leaf selection over `bits` binary levels: branch (take both children)
// at the `branchLevels` coarsest levels, follow a seeded child elsewhere.
// Returns 2^branchLevels sorted leaf offsets in [0, 2^bits).
inline std::vector<i64> cantor_offsets(int bits, int branchLevels, std::mt19937_64& rng) {
  std::vector<i64> offs{0};
  for (int lvl = 0; lvl < bits; ++lvl) {
    std::vector<i64> next;
    next.reserve(offs.size() * 2);
    if (lvl < branchLevels) {
      for (i64 o : offs) {
        next.push_back(o << 1);
        next.push_back((o << 1) | 1);
      }
    } else {
      for (i64 o : offs) next.push_back((o << 1) | i64(rng() & 1));
    }
    offs = std::move(next);
  }
  std::sort(offs.begin(), offs.end());
  return offs;
}

}  // namespace detail

// Planted extremal configuration: N cliques, each a run of cells along an
// anchor line over one Delta-column plus a bundle of tubes from the sheared
// dual window {|alpha - alpha0| <= delta/Delta, |(alpha-alpha0) x_c +
// (beta-beta0)| <= delta}. Clique sizes follow the extremal split
// |P_j| ~ delta^{-s^2/(s+t)}, |L_j| ~ delta^{-t^2/(s+t)}. Anchor lines pass
// through Delta-row centers so each clique stays inside a single dyadic
// Delta-square.
inline SheafConfig sheaf_config(double s, double t, int m, std::uint64_t seed,
                                bool singleClique = false) {
  if (!(s > 0 && s <= 1 && t > 0 && t <= 1)) throw std::invalid_argument("sheaf_config: s,t in (0,1]");
  SheafConfig cfg;
  cfg.s = s;
  cfg.t = t;
  cfg.m = m;
  const int kd = static_cast<int>(std::ceil(m * t / (s + t) - 1e-9));
  cfg.deltaExp = kd;
  if (kd < 1 || kd >= m) throw std::invalid_argument("sheaf_config: exponent underflow at this m");
  const int nExp = static_cast<int>(std::ceil(m * s * t / (s + t) - 1e-9));
  int N = singleClique ? 1 : (1 << nExp);
  if (N > (1 << kd)) throw std::invalid_argument("sheaf_config: more cliques than columns");
  cfg.numCliques = N;

  const int colBits = m - kd;                 // delta-columns per Delta-column: 2^colBits
  const int pLevels = static_cast<int>(std::ceil(colBits * s - 1e-9));
  const int slopeBits = kd + 1;               // slope slots in the dual window: 2^slopeBits
  const int tLevels = std::min(slopeBits, static_cast<int>(std::ceil(kd * t - 1e-9)));

  std::mt19937_64 rng(seed);
  const i64 two_m = i64(1) << m;

  std::vector<Cell> allCells;
  std::vector<DualCell> allTubes;
  cfg.cliqueCells.resize(N);
  cfg.cliqueTubes.resize(N);

  for (int j = 0; j < N; ++j) {
    // anchor slope: equispaced across [-1,1)
    const i64 alpha0 = -two_m + (2 * i64(j) + 1) * (two_m / N);
    // anchor column: cycle the Delta-grid with even spacing
    const i64 col = (i64(j) * ((i64(1) << kd) / N)) % (i64(1) << kd);
    // anchor row: seeded; the line passes through the row's center at the
    // column's center, so it stays inside one Delta-square (|slope| < 1)
    const i64 row = i64(rng() % (std::uint64_t(1) << kd));
    const i64 Xc = col * (i64(1) << colBits) + (i64(1) << (colBits - 1));  // x_c / delta
    const i64 Yc = row * (i64(1) << colBits) + (i64(1) << (colBits - 1));  // y_c / delta

    // exact anchor line y = alpha0*delta*x + b0 with b0 = (Yc*2^m - alpha0*Xc)/2^m * delta
    const i128 b0num = i128(Yc) * two_m - i128(alpha0) * Xc;  // b0 in delta/2^m units

    // cells: product-Cantor selection of columns inside the Delta-column
    const std::vector<i64> colOffs = detail::cantor_offsets(colBits, pLevels, rng);
    for (i64 off : colOffs) {
      const i64 X = col * (i64(1) << colBits) + off;
      // cell containing the anchor value at the column center:
      // y/delta = (alpha0 (2X+1) + 2 b0num) / 2^{m+1}
      const i128 num = i128(alpha0) * (2 * X + 1) + 2 * b0num;
      const i64 Y = floor_div128(num, i128(two_m) * 2);
      allCells.push_back(Cell{X, Y});
      cfg.cliqueCells[j].push_back(Cell{X, Y});
    }

    // tubes: Cantor selection of slopes in [alpha0 - 2^kd, alpha0 + 2^kd),
    // intercept snapped so the tube's dual cell covers the anchor value at x_c
    const std::vector<i64> slopeOffs = detail::cantor_offsets(slopeBits, tLevels, rng);
    for (i64 soff : slopeOffs) {
      const i64 alpha = alpha0 - (i64(1) << kd) + soff;
      if (alpha < -two_m || alpha >= two_m) continue;
      const i128 w = i128(Yc) * two_m - i128(alpha) * Xc;  // intercept in delta/2^m units
      const i64 beta = floor_div128(w, two_m);
      if (beta < -two_m || beta >= 2 * two_m) continue;
      allTubes.push_back(DualCell{alpha, beta});
      cfg.cliqueTubes[j].push_back(DualCell{alpha, beta});
    }
  }

  cfg.P = CellFamily(Scale{m}, allCells);
  cfg.L = DualCellFamily(Scale{m}, allTubes);

  // labels aligned with the deduplicated families; first clique wins collisions
  cfg.cellLabel.assign(cfg.P.size(), -1);
  cfg.tubeLabel.assign(cfg.L.size(), -1);
  for (int j = 0; j < N; ++j) {
    for (const Cell& c : cfg.cliqueCells[j]) {
      const auto it = std::lower_bound(cfg.P.cells().begin(), cfg.P.cells().end(), c);
      const auto idx = static_cast<std::size_t>(it - cfg.P.cells().begin());
      if (cfg.cellLabel[idx] < 0) cfg.cellLabel[idx] = j;
    }
    for (const DualCell& d : cfg.cliqueTubes[j]) {
      const auto it = std::lower_bound(cfg.L.cells().begin(), cfg.L.cells().end(), d);
      const auto idx = static_cast<std::size_t>(it - cfg.L.cells().begin());
      if (cfg.tubeLabel[idx] < 0) cfg.tubeLabel[idx] = j;
    }
  }

  cfg.measuredKP = katz_tao_constant(cfg.P, s).bestConstant;
  cfg.measuredKL = katz_tao_constant(cfg.L, t).bestConstant;
  return cfg;
}

// Uniform-branching Cantor family: N_j = 2^{round(H*s)} children per block
// level, chosen by seeded pick (or evenly when no seed is given).
inline CellFamily cantor_set(int m, double s, int H, std::optional<std::uint64_t> seed) {
  if (H <= 0 || m % H != 0) throw std::invalid_argument("cantor_set: H must divide m");
  const int perLevel = static_cast<int>(std::lround(H * s));
  if (perLevel < 0 || perLevel > 2 * H) throw std::invalid_argument("cantor_set: s outside [0,2]");
  if (H > 8) throw std::invalid_argument("cantor_set: H > 8 unsupported");
  std::mt19937_64 rng(seed.value_or(0));
  std::vector<Cell> cells{Cell{0, 0}};
  const i64 childSide = i64(1) << H;
  const i64 childCount = childSide * childSide;
  const i64 keep = i64(1) << perLevel;
  for (int level = 0; level < m / H; ++level) {
    // refine each cell by H binary steps and keep 2^perLevel distinct
    // children: evenly spread without a seed, a partial shuffle with one
    std::vector<Cell> next;
    next.reserve(cells.size() * keep);
    std::vector<i64> idx(childCount);
    for (const Cell& c : cells) {
      if (seed) {
        for (i64 i = 0; i < childCount; ++i) idx[i] = i;
        for (i64 i = 0; i < keep; ++i)
          std::swap(idx[i], idx[i + i64(rng() % std::uint64_t(childCount - i))]);
      } else {
        for (i64 r = 0; r < keep; ++r) idx[r] = r * (childCount / keep);
      }
      for (i64 r = 0; r < keep; ++r) {
        const i64 cx = idx[r] % childSide, cy = idx[r] / childSide;
        next.push_back(Cell{c.x * childSide + cx, c.y * childSide + cy});
      }
    }
    cells = std::move(next);
  }
  return CellFamily(Scale{m}, std::move(cells));
}

// Dual-plane variant over the [0,1) x [0,1) sub-band of slopes/intercepts.
inline DualCellFamily cantor_tubes(int m, double t, int H, std::optional<std::uint64_t> seed) {
  CellFamily base = cantor_set(m, t, H, seed);
  std::vector<DualCell> tubes;
  tubes.reserve(base.size());
  for (const Cell& c : base.cells()) tubes.push_back(DualCell{c.x, c.y});
  return DualCellFamily(Scale{m}, std::move(tubes));
}

// Uniform without-replacement sample of `count` cells of [0,2^m)^2.
inline CellFamily random_family(int m, i64 count, std::uint64_t seed) {
  const i64 side = i64(1) << m;
  if (count < 0 || count > side * side) throw std::invalid_argument("random_family: count overflow");
  std::mt19937_64 rng(seed);
  // Floyd's sampling over the flattened grid
  std::unordered_set<i64> taken;
  taken.reserve(count * 2);
  const i64 total = side * side;
  for (i64 i = total - count; i < total; ++i) {
    const i64 r = i64(rng() % std::uint64_t(i + 1));
    if (!taken.insert(r).second) taken.insert(i);
  }
  std::vector<Cell> cells;
  cells.reserve(count);
  for (i64 v : taken) cells.push_back(Cell{v % side, v / side});
  return CellFamily(Scale{m}, std::move(cells));
}

// Random tubes whose slope band is [-1,1); intercepts restricted to the band
// a line meeting the unit square can occupy.
inline DualCellFamily random_tubes(int m, i64 count, std::uint64_t seed) {
  const i64 side = i64(1) << m;
  if (count < 0 || count > 2 * side * 3 * side)
    throw std::invalid_argument("random_tubes: count overflow");
  std::mt19937_64 rng(seed);
  std::unordered_set<i64> taken;
  taken.reserve(count * 2);
  while (static_cast<i64>(taken.size()) < count)
    taken.insert(i64(rng() % std::uint64_t(6 * side * side)));
  std::vector<DualCell> tubes;
  tubes.reserve(count);
  for (i64 v : taken) tubes.push_back(DualCell{v % (2 * side) - side, v / (2 * side) - side});
  return DualCellFamily(Scale{m}, std::move(tubes));
}

}  // namespace inclab
