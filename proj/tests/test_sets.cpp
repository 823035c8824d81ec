#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

#include <random>

using namespace inclab;

TEST_CASE("covering numbers") {
  Scale s{8};
  CellFamily single(s, {Cell{37, 101}});
  for (int k = 0; k <= 8; ++k) CHECK(covering_number(single, k) == 1);

  // full grid at coarse scale k covers 2^{2k} squares
  CellFamily grid = random_family(4, 256, 0);  // count == grid size -> full grid
  REQUIRE(grid.size() == 256);
  for (int k = 0; k <= 4; ++k) CHECK(covering_number(grid, k) == i64(1) << (2 * k));

  CHECK_THROWS_AS(covering_number(single, 9), std::invalid_argument);
}

TEST_CASE("covering numbers of a Cantor family count one branch per level") {
  CellFamily f = cantor_set(8, 1.0, 1, std::nullopt);
  CHECK(f.size() == 256);
  for (int k = 0; k <= 8; ++k) CHECK(covering_number(f, k) == i64(1) << k);
}

TEST_CASE("covering number monotone under coarsening and subadditive under union") {
  std::mt19937_64 rng(15);
  for (int it = 0; it < 40; ++it) {
    const int m = 4 + int(rng() % 4);
    CellFamily A = random_family(m, 1 + i64(rng() % 100), rng());
    CellFamily B = random_family(m, 1 + i64(rng() % 100), rng());
    for (int k = 1; k <= m; ++k) CHECK(covering_number(A, k) >= covering_number(A, k - 1));
    std::vector<Cell> uni(A.cells());
    for (const Cell& c : B.cells()) uni.push_back(c);
    CellFamily U(A.scale(), uni);
    for (int k = 0; k <= m; ++k)
      CHECK(covering_number(U, k) <= covering_number(A, k) + covering_number(B, k));
  }
}

TEST_CASE("katz_tao_constant reference values") {
  // full grid, s = 2: the bound is tight up to the box overlap factor
  CellFamily grid = random_family(4, 256, 0);
  CHECK(katz_tao_constant(grid, 2.0).bestConstant <= 4.0);

  CellFamily single(Scale{6}, {Cell{11, 22}});
  CHECK(katz_tao_constant(single, 0.7).bestConstant <= 1.0);

  // horizontal row, s = 1
  std::vector<Cell> row;
  for (i64 x = 0; x < 64; ++x) row.push_back(Cell{x, 17});
  const double c = katz_tao_constant(CellFamily(Scale{6}, row), 1.0).bestConstant;
  CHECK(c >= 1.0);
  CHECK(c <= 8.0);

  CHECK_THROWS_AS(katz_tao_constant(CellFamily(), 1.0), std::invalid_argument);
}

TEST_CASE("katz_tao_constant nondecreasing as s decreases, hereditary") {
  // smaller s strengthens the bound (r/delta)^s for r >= delta, so the best
  // constant can only grow when s shrinks
  std::mt19937_64 rng(77);
  for (int it = 0; it < 20; ++it) {
    const int m = 5 + int(rng() % 3);
    CellFamily F = random_family(m, 10 + i64(rng() % 200), rng());
    const double c1 = katz_tao_constant(F, 0.5).bestConstant;
    const double c2 = katz_tao_constant(F, 1.0).bestConstant;
    const double c3 = katz_tao_constant(F, 1.7).bestConstant;
    CHECK(c1 >= c2 * (1 - 1e-12));
    CHECK(c2 >= c3 * (1 - 1e-12));
    // subfamily constant bounded by the overlap factor times the full one
    std::vector<Cell> half(F.cells().begin(), F.cells().begin() + F.size() / 2 + 1);
    const double sub = katz_tao_constant(CellFamily(F.scale(), half), 1.0).bestConstant;
    CHECK(sub <= 4.0 * c2 + 1e-12);
  }
}

TEST_CASE("delta_s_constant normalizes by the family size") {
  // single cell: |F cap B| / (r^s |F|) maximal at r = delta
  CellFamily single(Scale{5}, {Cell{3, 3}});
  const KTReport rep = delta_s_constant(single, 1.0);
  CHECK(rep.bestConstant == Catch::Approx(32.0));  // 1 / (2^-5 * 1)
  CHECK(rep.normalized);

  // full grid with s = 2: every box has |F cap B| ~ r^2 |F| up to overlap
  CellFamily grid = random_family(3, 64, 0);
  CHECK(delta_s_constant(grid, 2.0).bestConstant <= 4.0 + 1e-12);
}

TEST_CASE("witness ball reproduces the reported constant") {
  std::mt19937_64 rng(31);
  CellFamily F = random_family(6, 120, rng());
  const KTReport rep = katz_tao_constant(F, 1.0);
  // recount the witness box
  const int k = rep.radiusExp;
  i64 cnt = 0;
  if (k == F.m()) {
    for (const Cell& c : F.cells())
      if (c.x >= rep.witnessX && c.x < rep.witnessX + 2 && c.y >= rep.witnessY &&
          c.y < rep.witnessY + 2)
        ++cnt;
  } else {
    const i64 shift = i64(1) << (F.m() - k - 1);
    for (const Cell& c : F.cells()) {
      const i64 lx = floor_div(c.x, shift), ly = floor_div(c.y, shift);
      if (lx >= rep.witnessX && lx < rep.witnessX + 2 && ly >= rep.witnessY &&
          ly < rep.witnessY + 2)
        ++cnt;
    }
  }
  CHECK(cnt == rep.witnessCount);
  CHECK(rep.bestConstant ==
        Catch::Approx(double(cnt) / std::pow(std::ldexp(1.0, F.m() - k), 1.0)));
}

TEST_CASE("tube_family_from_lines") {
  Scale s{4};
  const DualCellFamily one = tube_family_from_lines({Line{0.0, 0.0}}, s);
  REQUIRE(one.size() == 1);
  CHECK(one.cells()[0] == DualCell{0, 0});

  // two lines in the same dual cell collapse
  const DualCellFamily two =
      tube_family_from_lines({Line{0.01, 0.01}, Line{0.02, 0.03}}, s);
  CHECK(two.size() == 1);

  CHECK_THROWS_AS(tube_family_from_lines({Line{1.5, 0.0}}, s), std::invalid_argument);
  CHECK_THROWS_AS(tube_family_from_lines({Line{0.0, 5.0}}, s), std::invalid_argument);

  // membership recheck on random admissible lines
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> slope(-1.0, 0.999), inter(-0.999, 1.999);
  std::vector<Line> lines;
  for (int i = 0; i < 100; ++i) lines.push_back(Line{slope(rng), inter(rng)});
  const DualCellFamily fam = tube_family_from_lines(lines, Scale{10});
  CHECK(fam.size() <= 100);
  const double delta = scale_delta(Scale{10});
  for (const Line& l : lines) {
    const DualCell d{static_cast<i64>(std::floor(l.a / delta)),
                     static_cast<i64>(std::floor(l.b / delta))};
    CHECK(std::binary_search(fam.cells().begin(), fam.cells().end(), d));
  }
}
