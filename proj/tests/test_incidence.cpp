#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

#include <random>

using namespace inclab;

namespace {

std::pair<CellFamily, DualCellFamily> random_config(std::mt19937_64& rng, int m, i64 maxP,
                                                    i64 maxT) {
  CellFamily P = random_family(m, 1 + i64(rng() % maxP), rng());
  DualCellFamily T = random_tubes(m, 1 + i64(rng() % maxT), rng());
  return {std::move(P), std::move(T)};
}

}  // namespace

TEST_CASE("incidences: single pair") {
  Scale s{4};
  const IncidenceSet inc = incidences(CellFamily(s, {Cell{0, 0}}), DualCellFamily(s, {DualCell{0, 0}}));
  CHECK(inc.count() == 1);
}

TEST_CASE("incidences: horizontal tube across the full grid") {
  // frozen from the quadratic oracle: the closed convention adds the corner
  // touch at x = 1, y = 2*delta on top of two cells per column
  Scale s{4};
  CellFamily grid = random_family(4, 256, 0);
  DualCellFamily T(s, {DualCell{0, 0}});
  const IncidenceSet fast = incidences(grid, T);
  const IncidenceSet brute = incidences_brute(grid, T);
  CHECK(fast.pairs == brute.pairs);
  CHECK(fast.count() == 33);
  CHECK(fast.count() >= 16);
  CHECK(fast.count() <= 2 * 16 + 1);
}

TEST_CASE("column sweep equals the quadratic oracle") {
  std::mt19937_64 rng(57);
  for (int it = 0; it < 40; ++it) {
    const int m = 4 + int(rng() % 3);
    auto [P, T] = random_config(rng, m, 200, 100);
    IncidenceSet fast = incidences(P, T);
    IncidenceSet brute = incidences_brute(P, T);
    std::sort(fast.pairs.begin(), fast.pairs.end());
    std::sort(brute.pairs.begin(), brute.pairs.end());
    REQUIRE(fast.pairs == brute.pairs);
  }
}

TEST_CASE("incidences validates scales and tolerates empty tube families") {
  CellFamily P = random_family(5, 20, 3);
  DualCellFamily wrongScale = random_tubes(6, 10, 4);
  CHECK_THROWS_AS(incidences(P, wrongScale), std::invalid_argument);
  CHECK_THROWS_AS(incidences_brute(P, wrongScale), std::invalid_argument);
  CHECK(incidences(P, DualCellFamily(Scale{5}, {})).count() == 0);
}

TEST_CASE("fiber identity and monotonicity") {
  std::mt19937_64 rng(58);
  for (int it = 0; it < 20; ++it) {
    auto [P, T] = random_config(rng, 6, 300, 150);
    const IncidenceSet inc = incidences(P, T);
    i64 byTube = 0, byCell = 0;
    for (i64 v : inc.perTube) byTube += v;
    for (i64 v : inc.perCell) byCell += v;
    CHECK(byTube == inc.count());
    CHECK(byCell == inc.count());

    // monotone under restriction
    std::vector<Cell> halfP(P.cells().begin(), P.cells().begin() + (P.size() + 1) / 2);
    std::vector<DualCell> halfT(T.cells().begin(), T.cells().begin() + (T.size() + 1) / 2);
    const IncidenceSet sub = incidences(CellFamily(P.scale(), halfP), DualCellFamily(T.scale(), halfT));
    CHECK(sub.count() <= inc.count());
  }
}

TEST_CASE("net-based covering estimate brackets the dyadic count at small scale") {
  std::mt19937_64 rng(59);
  for (int it = 0; it < 10; ++it) {
    auto [P, T] = random_config(rng, 5, 60, 40);
    const IncidenceSet inc = incidences(P, T);
    if (inc.count() == 0) continue;
    // an 11-delta-separated witness set injects into the dyadic pairs
    const i64 net = testing::net_covering_estimate(P, T, 11.0);
    CHECK(net <= inc.count());
    // and the dyadic count is at most a bounded blowup of a delta-separated net
    const i64 fineNet = testing::net_covering_estimate(P, T, 1.0);
    CHECK(inc.count() <= 100 * fineNet);  // measured headroom, regression pin
  }
}

TEST_CASE("fu_ren_check reference cases") {
  Scale s{5};
  // empty incidences -> ratio 0
  CellFamily P(s, {Cell{0, 0}});
  DualCellFamily far(s, {DualCell{0, 40}});
  CHECK(fu_ren_check(P, far, 1, 1, 0.05).ratio == 0.0);

  // single incident pair: lhs = 1, ratio <= 1
  DualCellFamily hit(s, {DualCell{0, 0}});
  const BoundReport rep = fu_ren_check(P, hit, 1, 1, 0.05);
  CHECK(rep.lhs == 1.0);
  CHECK(rep.ratio <= 1.0);

  CHECK_THROWS_AS(fu_ren_check(CellFamily(), hit, 1, 1, 0.05), std::invalid_argument);
}

TEST_CASE("fu_ren_check on a planted sheaf stays under the pinned ratio") {
  const SheafConfig cfg = sheaf_config(1, 1, 10, 17);
  const BoundReport rep = fu_ren_check(cfg.P, cfg.L, 1, 1, 0.05);
  CHECK(rep.ratio <= 64.0);
  CHECK(rep.ratio > 0.0);
}

TEST_CASE("two_ends_check reference and violation cases") {
  Scale s{6};
  // one tube, cells spread along it, r = 1/4: lhs = M, rhs = M/2
  std::vector<Cell> spread;
  for (i64 x = 0; x < 64; x += 4) spread.push_back(Cell{x, 0});
  const BoundReport rep = two_ends_check({{DualCell{0, 0}, CellFamily(s, spread)}}, s, 2);
  CHECK(rep.lhs == 16.0);
  CHECK(rep.rhs == Catch::Approx(8.0));
  CHECK(rep.ratio == Catch::Approx(2.0));

  // a planted clique concentrates in one Delta-square: the precondition
  // fails and the error names the ball
  const SheafConfig cfg = sheaf_config(1, 1, 10, 23, true);
  const IncidenceSet inc = incidences(cfg.P, cfg.L);
  std::vector<std::pair<DualCell, CellFamily>> perTube;
  const std::size_t M = 16;
  for (std::size_t ti = 0; ti < cfg.L.size() && perTube.size() < 8; ++ti) {
    std::vector<Cell> fiber;
    for (const auto& [pi, t2] : inc.pairs)
      if (t2 == ti) fiber.push_back(cfg.P.cells()[pi]);
    if (fiber.size() < M) continue;
    fiber.resize(M);
    perTube.emplace_back(cfg.L.cells()[ti], CellFamily(cfg.P.scale(), fiber));
  }
  REQUIRE(perTube.size() >= 1);
  CHECK_THROWS_WITH(two_ends_check(perTube, cfg.P.scale(), 2),
                    Catch::Matchers::ContainsSubstring("concentration at tube"));

  // mismatched sizes
  std::vector<Cell> small{Cell{0, 0}};
  CHECK_THROWS_AS(two_ends_check({{DualCell{0, 0}, CellFamily(s, spread)},
                                  {DualCell{1, 0}, CellFamily(s, small)}},
                                 s, 2),
                  std::invalid_argument);
}

TEST_CASE("two_ends_check ratio stays above the recorded floor on star-free configs") {
  std::mt19937_64 rng(61);
  double worst = std::numeric_limits<double>::infinity();
  int accepted = 0;
  for (int it = 0; it < 200 && accepted < 50; ++it) {
    const int m = 7;
    DualCellFamily T = random_tubes(m, 40, rng());
    // keep tubes whose visible trace is long enough to spread cells along,
    // then give each M cells evenly spaced over that trace
    const std::size_t M = 12;
    std::vector<std::pair<DualCell, CellFamily>> perTube;
    for (const DualCell& d : T.cells()) {
      std::vector<Cell> visible;
      for (i64 x = 0; x < (i64(1) << m); ++x) {
        i64 ylo, yhi;
        tube_column_range(d, x, Scale{m}, ylo, yhi);
        const i64 y = (ylo + yhi) / 2;
        if (y < 0 || y >= (i64(1) << m)) continue;
        visible.push_back(Cell{x, y});
      }
      if (visible.size() < 4 * M) continue;
      std::vector<Cell> cells;
      for (std::size_t i = 0; i < M; ++i) cells.push_back(visible[i * visible.size() / M]);
      if (cells.size() != M) continue;
      perTube.emplace_back(d, CellFamily(Scale{m}, cells));
    }
    if (perTube.size() < 8) continue;
    try {
      const BoundReport rep = two_ends_check(perTube, Scale{m}, 4);
      worst = std::min(worst, rep.ratio);
      ++accepted;
    } catch (const std::invalid_argument&) {
      // concentration: skip
    }
  }
  REQUIRE(accepted >= 20);
  CHECK(worst >= 0.5);  // measured floor, regression pin
}

TEST_CASE("max_lines_per_cell") {
  Scale s{5};
  CellFamily P = random_family(5, 100, 997);
  DualCellFamily one(s, {DualCell{3, 4}});
  CHECK(max_lines_per_cell(P, one) <= 1);

  // pencil of tubes through one cell
  std::vector<DualCell> pencil;
  for (i64 a = -8; a < 8; ++a) {
    // tube whose lower-left line passes the center of cell (16,16):
    // b/32 ~ 16/32 - a*16.5/32^2, i.e. b = 16 - floor(33a/64)
    const i64 b = 16 - floor_div(33 * a, 64);
    if (b >= -32 && b < 64) pencil.push_back(DualCell{a, b});
  }
  CellFamily center(s, {Cell{16, 16}});
  DualCellFamily Lp(s, pencil);
  const i64 M = max_lines_per_cell(center, Lp);
  CHECK(M == i64(Lp.size()));

  // exact inequality |pairs| <= M |P| on random configs
  std::mt19937_64 rng(62);
  for (int it = 0; it < 20; ++it) {
    CellFamily Pr = random_family(6, 1 + i64(rng() % 150), rng());
    DualCellFamily Tr = random_tubes(6, 1 + i64(rng() % 80), rng());
    const IncidenceSet inc = incidences(Pr, Tr);
    i64 maxPer = 0;
    for (i64 v : inc.perCell) maxPer = std::max(maxPer, v);
    CHECK(inc.count() <= maxPer * i64(Pr.size()));
    CHECK(max_lines_per_cell(Pr, Tr) == maxPer);
  }
}
