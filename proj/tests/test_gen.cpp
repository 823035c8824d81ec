#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

using namespace inclab;

TEST_CASE("sheaf_config sizes follow the extremal split") {
  const SheafConfig cfg = sheaf_config(1, 1, 12, 1);
  CHECK(cfg.numCliques == 64);
  CHECK(cfg.deltaExp == 6);
  for (int j = 0; j < cfg.numCliques; ++j) {
    CHECK(cfg.cliqueCells[j].size() == 64);
    CHECK(cfg.cliqueTubes[j].size() == 64);
  }
  // |P_j| within factor 2 of 2^{m s^2/(s+t)}
  const SheafConfig half = sheaf_config(0.5, 1, 12, 1);
  const double target = std::exp2(12.0 * 0.25 / 1.5);
  for (int j = 0; j < half.numCliques; ++j) {
    CHECK(double(half.cliqueCells[j].size()) >= target / 2);
    CHECK(double(half.cliqueCells[j].size()) <= target * 2);
  }
}

TEST_CASE("sheaf_config incidence mass meets the clique-decomposition target") {
  const SheafConfig cfg = sheaf_config(1, 1, 12, 1);
  const IncidenceSet inc = incidences(cfg.P, cfg.L);
  // >= 0.9 * N * (min clique product)
  std::size_t minProduct = SIZE_MAX;
  for (int j = 0; j < cfg.numCliques; ++j)
    minProduct = std::min(minProduct, cfg.cliqueCells[j].size() * cfg.cliqueTubes[j].size());
  CHECK(double(inc.count()) >= 0.9 * double(cfg.numCliques) * double(minProduct));
  // and the extremal exponent target delta^{-3s/2} at s = 1
  CHECK(double(inc.count()) >= 0.9 * std::exp2(18.0));
}

TEST_CASE("sheaf_config labels partition both families and replay as cliques") {
  const SheafConfig cfg = sheaf_config(1, 1, 10, 9);
  for (int lbl : cfg.cellLabel) CHECK(lbl >= 0);
  for (int lbl : cfg.tubeLabel) CHECK(lbl >= 0);
  for (int j = 0; j < cfg.numCliques; ++j) {
    const CliqueTest test = is_clique(CellFamily(cfg.P.scale(), cfg.cliqueCells[j]),
                                      DualCellFamily(cfg.L.scale(), cfg.cliqueTubes[j]), 0.9);
    CHECK(test.isClique);
  }
}

TEST_CASE("generators are deterministic in the seed") {
  const SheafConfig a = sheaf_config(1, 1, 10, 42), b = sheaf_config(1, 1, 10, 42);
  CHECK(a.P.cells() == b.P.cells());
  CHECK(a.L.cells() == b.L.cells());
  const SheafConfig c = sheaf_config(1, 1, 10, 43);
  CHECK(a.P.cells() != c.P.cells());

  CHECK(random_family(8, 100, 7).cells() == random_family(8, 100, 7).cells());
  CHECK(random_tubes(8, 100, 7).cells() == random_tubes(8, 100, 7).cells());
  CHECK(cantor_set(8, 1.0, 2, 11).cells() == cantor_set(8, 1.0, 2, 11).cells());
}

TEST_CASE("cantor_set degenerate exponents") {
  CHECK(cantor_set(4, 2.0, 1, std::nullopt).size() == 256);  // full grid
  CHECK(cantor_set(8, 0.0, 2, 5).size() == 1);               // single chain
  const CellFamily f = cantor_set(10, 1.0, 1, std::nullopt);
  CHECK(f.size() == 1024);
  CHECK(katz_tao_constant(f, 1.0).bestConstant <= 8.0);
  CHECK_THROWS_AS(cantor_set(9, 1.0, 2, std::nullopt), std::invalid_argument);
}

TEST_CASE("cantor_tubes stays in the admissible band") {
  const DualCellFamily t = cantor_tubes(8, 1.0, 2, 3);
  CHECK(t.size() == 256);
  for (const DualCell& d : t.cells()) {
    CHECK(d.a >= 0);
    CHECK(d.a < 256);
    CHECK(d.b >= 0);
    CHECK(d.b < 256);
  }
}

TEST_CASE("random_family edge cases") {
  CHECK(random_family(3, 64, 9).size() == 64);  // full grid
  CHECK(random_family(8, 1, 9).size() == 1);
  CHECK(random_family(8, 0, 9).empty());
  CHECK_THROWS_AS(random_family(3, 65, 9), std::invalid_argument);
}
