#pragma once

// Test-only oracles, kept independent of the implementation paths they check.
//
// - sampling_oracle: dense float sampling of the incidence predicate on a
//   501^3 grid of (alpha, x, beta); the innermost beta progression is resolved
//   arithmetically, which visits exactly the same sample set.
// - lower_hull_oracle: brute-force lower convex envelope in exact rationals.
// - net_covering_estimate: greedy maximal separated net in the product metric,
//   a small-scale cross-check of the dyadic pair count.

#include "incidence_lab/cliques.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace inclab::testing {

struct SampleVerdict {
  bool hit = false;
  double margin = 0;  // distance of the decisive sample to the target boundary
};

// Sample alpha_i = (a + i/500) delta, x_j = (X + j/500) delta,
// beta_k = (b + k/500) delta, i,j,k in [0,500]; hit iff some sampled value
// alpha x + beta lands in [Y delta, (Y+1) delta]. margin reports how decisive
// the verdict is: penetration depth of the best hit, or the distance of the
// nearest miss.
inline SampleVerdict sampling_oracle(const Cell& p, const DualCell& T, const Scale& s) {
  const double delta = scale_delta(s);
  const double lo = double(p.y) * delta, hi = double(p.y + 1) * delta;
  const double step = delta / 500.0;
  SampleVerdict v;
  double bestMiss = std::numeric_limits<double>::infinity();
  double bestHit = -1.0;
  for (int i = 0; i <= 500; ++i) {
    const double alpha = (double(T.a) + i / 500.0) * delta;
    for (int j = 0; j <= 500; ++j) {
      const double x = (double(p.x) + j / 500.0) * delta;
      const double val = alpha * x;
      // beta samples form the progression b*delta + k*step, k in [0,500]
      const double betaLoVal = val + double(T.b) * delta;
      // nearest k to the target interval
      const double kLo = (lo - betaLoVal) / step;
      const double kHi = (hi - betaLoVal) / step;
      const double kFirst = std::ceil(std::max(0.0, kLo));
      const double kLast = std::floor(std::min(500.0, kHi));
      if (kFirst <= kLast) {
        // samples inside; the decisive one sits nearest the interval center
        double kMid = std::floor(((lo + hi) / 2 - betaLoVal) / step + 0.5);
        kMid = std::min(kLast, std::max(kFirst, kMid));
        for (double k : {kFirst, kMid, kLast}) {
          const double value = betaLoVal + k * step;
          bestHit = std::max(bestHit, std::min(value - lo, hi - value));
        }
        v.hit = true;
      } else {
        // nearest samples outside
        for (double k : {std::floor(kLo), std::ceil(kLo), std::floor(kHi), std::ceil(kHi)}) {
          if (k < 0 || k > 500) continue;
          const double value = betaLoVal + k * step;
          const double d = value < lo ? lo - value : (value > hi ? value - hi : 0.0);
          bestMiss = std::min(bestMiss, d);
        }
      }
    }
  }
  v.margin = v.hit ? bestHit : bestMiss;
  return v;
}

// exact lower convex envelope of rational breakpoints (Andrew's chain)
inline SlopeDecomposition lower_hull_oracle(const PiecewiseAffine& f) {
  std::vector<std::pair<Rat, Rat>> hull;
  for (std::size_t i = 0; i < f.x.size(); ++i) {
    const std::pair<Rat, Rat> p{f.x[i], f.y[i]};
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull[hull.size() - 1];
      // keep strictly convex turns: cross((b-a),(p-a)) must be > 0
      const Rat cross =
          (b.first - a.first) * (p.second - a.second) - (b.second - a.second) * (p.first - a.first);
      if (cross <= 0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }
  SlopeDecomposition out;
  for (const auto& [x, y] : hull) out.breakpoints.push_back(x);
  for (std::size_t i = 1; i < hull.size(); ++i)
    out.slopes.push_back((hull[i].second - hull[i - 1].second) /
                         (hull[i].first - hull[i - 1].first));
  return out;
}

// Greedy maximal (factor * delta)-separated subset of the incidence pairs in
// the product metric max{|x-x'|, d_lines}, with cell centers and tube center
// lines as representatives.
inline i64 net_covering_estimate(const CellFamily& P, const DualCellFamily& T, double factor) {
  const IncidenceSet inc = incidences(P, T);
  const double delta = scale_delta(P.scale());
  struct Witness {
    double px, py;
    Line l;
  };
  std::vector<Witness> net;
  for (const auto& [pi, ti] : inc.pairs) {
    const Cell& c = P.cells()[pi];
    const DualCell& d = T.cells()[ti];
    Witness w{(double(c.x) + 0.5) * delta, (double(c.y) + 0.5) * delta,
              Line{(double(d.a) + 0.5) * delta, (double(d.b) + 0.5) * delta}};
    bool separated = true;
    for (const Witness& o : net) {
      const double dist =
          std::max(std::hypot(w.px - o.px, w.py - o.py), line_metric(w.l, o.l));
      if (dist < factor * delta) {
        separated = false;
        break;
      }
    }
    if (separated) net.push_back(w);
  }
  return static_cast<i64>(net.size());
}

// random monotone piecewise-affine function on [0, n] with dyadic-rational
// values, f(0) = 0, slopes within [0, d]
inline PiecewiseAffine random_monotone_pwa(std::mt19937_64& rng, int maxPieces, int d) {
  PiecewiseAffine f;
  const int n = 2 + int(rng() % std::uint64_t(maxPieces));
  f.x.push_back(Rat(0));
  f.y.push_back(Rat(0));
  Rat x(0), y(0);
  for (int i = 0; i < n; ++i) {
    x += Rat(1 + i64(rng() % 8), 1 + i64(rng() % 4));
    const Rat dx = x - f.x.back();
    // slope in [0, d] with denominator up to 16
    const Rat slope(i64(rng() % std::uint64_t(16 * d + 1)), 16);
    y += slope * dx;
    f.x.push_back(x);
    f.y.push_back(y);
  }
  return f;
}

}  // namespace inclab::testing
