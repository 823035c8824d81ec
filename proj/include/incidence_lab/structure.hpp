#pragma once

// Multiscale structure: uniformization, uniform decomposition, branching
// functions and their convex-minorant slope decomposition, superlinearity
// checks, rescaled-set verification, and non-concentrated subset extraction.
//
// Branching values and slopes are exact rationals; slope-merge ties
// (sigma_{j+1} == sigma_j) must be decided exactly, so no floating point
// enters these decisions.

#include "incidence_lab/incidence.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace inclab {

struct PipelineError : std::runtime_error {
  std::string stage;
  PipelineError(std::string stg, const std::string& what)
      : std::runtime_error(stg + ": " + what), stage(std::move(stg)) {}
};

// ---------------------------------------------------------------------------
// Uniform families
// ---------------------------------------------------------------------------

// Family whose per-ancestor child counts are constant at every block scale:
// for every j in 1..m/H and every scale-2^{-(j-1)H} ancestor meeting the
// family, the number of scale-2^{-jH} descendants equals N_j = 2^{log2N[j-1]}.
struct UniformFamily {
  CellFamily family;
  int H = 1;
  std::vector<int> log2N;  // per block level, coarse to fine
  double retention = 1.0;  // |family| / |input|
};

// Verifies the exact per-ancestor count property by full traversal; returns
// the branching sequence if uniform.
inline std::optional<std::vector<int>> verify_uniform(const CellFamily& f, int H) {
  if (f.m() % H != 0) return std::nullopt;
  const int mPrime = f.m() / H;
  std::vector<int> log2N;
  for (int j = 1; j <= mPrime; ++j) {
    const int kPar = (j - 1) * H, kChild = j * H;
    std::map<Cell, std::vector<Cell>> children;
    {
      std::vector<std::pair<Cell, Cell>> pc;
      for (const Cell& c : f.cells())
        pc.emplace_back(cell_ancestor(c, f.m(), kPar), cell_ancestor(c, f.m(), kChild));
      std::sort(pc.begin(), pc.end());
      pc.erase(std::unique(pc.begin(), pc.end()), pc.end());
      for (auto& [par, ch] : pc) children[par].push_back(ch);
    }
    i64 count = -1;
    for (auto& [par, ch] : children) {
      if (count < 0) count = static_cast<i64>(ch.size());
      if (count != static_cast<i64>(ch.size())) return std::nullopt;
    }
    if (count <= 0 || (count & (count - 1)) != 0) return std::nullopt;
    int lg = 0;
    while ((i64(1) << lg) < count) ++lg;
    log2N.push_back(lg);
  }
  return log2N;
}

// Greedy fine-to-coarse pigeonholing. At each block level the ancestors are
// bucketed by ceil(log2(child count)); the class retaining the most delta-mass
// after trimming wins, each kept ancestor is trimmed to exactly N_j children
// (dropping the children poorest in delta-descendants, ties lexicographic).
// Retention >= (2H)^{-m/H}, checked.
inline UniformFamily uniformize(const CellFamily& P, int H) {
  if (P.empty()) throw std::invalid_argument("uniformize: empty family");
  if (P.m() % H != 0 || H <= 0) throw std::invalid_argument("uniformize: H must divide m");
  const int m = P.m(), mPrime = m / H;

  std::vector<Cell> alive(P.cells());
  std::vector<int> log2N(mPrime, 0);

  for (int j = mPrime; j >= 1; --j) {
    const int kPar = (j - 1) * H, kChild = j * H;
    // group alive cells by (parent, child) ancestors
    std::map<Cell, std::map<Cell, std::vector<Cell>>> tree;  // parent -> child -> cells
    for (const Cell& c : alive)
      tree[cell_ancestor(c, m, kPar)][cell_ancestor(c, m, kChild)].push_back(c);

    // bucket parents by ceil(log2(#children)); candidate N for a class is the
    // largest power of two not exceeding the class minimum count
    const int maxClass = 2 * H;
    std::vector<std::vector<const std::map<Cell, std::vector<Cell>>*>> classes(maxClass + 1);
    std::vector<i64> classMin(maxClass + 1, -1);
    for (auto& [par, kids] : tree) {
      const i64 cnt = static_cast<i64>(kids.size());
      int cls = 0;
      while ((i64(1) << cls) < cnt) ++cls;
      classes[cls].push_back(&kids);
      if (classMin[cls] < 0 || cnt < classMin[cls]) classMin[cls] = cnt;
    }

    i64 bestMass = -1;
    int bestCls = -1, bestLg = 0;
    for (int cls = 0; cls <= maxClass; ++cls) {
      if (classes[cls].empty()) continue;
      int lg = 0;
      while ((i64(1) << (lg + 1)) <= classMin[cls]) ++lg;
      const i64 N = i64(1) << lg;
      i64 mass = 0;
      for (const auto* kids : classes[cls]) {
        std::vector<i64> sizes;
        for (const auto& [ch, cells] : *kids) sizes.push_back(static_cast<i64>(cells.size()));
        std::sort(sizes.rbegin(), sizes.rend());
        for (i64 i = 0; i < N; ++i) mass += sizes[i];
      }
      if (mass > bestMass) {
        bestMass = mass;
        bestCls = cls;
        bestLg = lg;
      }
    }

    const i64 N = i64(1) << bestLg;
    log2N[j - 1] = bestLg;
    std::vector<Cell> next;
    next.reserve(bestMass);
    for (const auto* kids : classes[bestCls]) {
      // keep the N children richest in delta-descendants; ties lexicographic
      std::vector<std::pair<Cell, const std::vector<Cell>*>> order;
      for (const auto& [ch, cells] : *kids) order.emplace_back(ch, &cells);
      std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
        if (a.second->size() != b.second->size()) return a.second->size() > b.second->size();
        return a.first < b.first;
      });
      for (i64 i = 0; i < N; ++i)
        for (const Cell& c : *order[i].second) next.push_back(c);
    }
    alive = std::move(next);
  }

  UniformFamily out;
  out.family = CellFamily(P.scale(), std::move(alive), P.band());
  out.H = H;
  out.log2N = std::move(log2N);
  out.retention = double(out.family.size()) / double(P.size());

  // retention guarantee
  const double bound = std::pow(2.0 * H, -double(mPrime));
  if (out.retention + 1e-12 < bound)
    throw std::logic_error("uniformize: retention fell below (2H)^{-m/H}");
  if (!verify_uniform(out.family, H))
    throw std::logic_error("uniformize: output failed uniformity traversal");
  return out;
}

// Repeatedly extracts uniform pieces until the remainder is small. Stops when
// the remainder drops to delta^eps * |P| or an extracted piece falls below
// delta^{2eps} * |P| (that piece is merged back). pickH <= 0 selects H from
// eps via the smallest divisor of m with log2(2H)/H <= eps, falling back to 1
// when the rule exceeds m.
struct UniformDecomposition {
  std::vector<UniformFamily> pieces;
  CellFamily remainder;
  int H = 1;
  std::string stopReason;
};

inline int pick_block_size(int m, double eps) {
  for (int H = 1; H <= m; ++H) {
    if (m % H != 0) continue;
    if (std::log2(2.0 * H) / H <= eps) return H;
  }
  return 1;
}

inline UniformDecomposition decompose_uniform(const CellFamily& P, double eps, int pickH = 0) {
  if (P.empty()) throw std::invalid_argument("decompose_uniform: empty family");
  UniformDecomposition out;
  out.H = pickH > 0 ? pickH : pick_block_size(P.m(), eps);
  if (P.m() % out.H != 0) throw std::invalid_argument("decompose_uniform: H does not divide m");
  const double small = std::exp2(-P.m() * eps) * double(P.size());
  const double pieceFloor = std::exp2(-P.m() * 2.0 * eps) * double(P.size());
  CellFamily rem = P;
  while (true) {
    if (double(rem.size()) <= small) {
      out.stopReason = "remainder below delta^eps fraction";
      break;
    }
    UniformFamily u = uniformize(rem, out.H);
    if (double(u.family.size()) < pieceFloor) {
      out.stopReason = "piece below delta^{2eps} fraction";
      break;
    }
    rem = rem.minus(u.family);
    out.pieces.push_back(std::move(u));
  }
  out.remainder = std::move(rem);
  return out;
}

// ---------------------------------------------------------------------------
// Piecewise-affine machinery
// ---------------------------------------------------------------------------

// nondecreasing piecewise-affine function given by its breakpoints
struct PiecewiseAffine {
  std::vector<Rat> x, y;  // same length >= 2, x strictly increasing

  Rat eval(const Rat& at) const {
    if (at < x.front() || at > x.back()) throw std::invalid_argument("eval outside domain");
    for (std::size_t i = 1; i < x.size(); ++i) {
      if (at <= x[i]) {
        const Rat t = (at - x[i - 1]) / (x[i] - x[i - 1]);
        return y[i - 1] + t * (y[i] - y[i - 1]);
      }
    }
    return y.back();
  }
};

struct SlopeDecomposition {
  std::vector<Rat> breakpoints;  // a_0 < ... < a_n
  std::vector<Rat> slopes;       // sigma_0 < ... < sigma_{n-1}
};

// Stack-based adjacent merging: while the top two pieces have
// sigma_top <= sigma_below they merge with the chord slope (a weighted
// average, so superlinearity on each merged interval is retained). The output
// slopes are strictly increasing and the decomposition equals the lower
// convex envelope of the breakpoints.
inline SlopeDecomposition merge_slopes(const PiecewiseAffine& f, const Rat& lipschitz) {
  if (f.x.size() < 2 || f.x.size() != f.y.size())
    throw std::invalid_argument("merge_slopes: need >= 2 breakpoints");
  if (f.y.front() != 0) throw std::invalid_argument("merge_slopes: f(0) must be 0");
  for (std::size_t i = 1; i < f.x.size(); ++i) {
    if (!(f.x[i] > f.x[i - 1])) throw std::invalid_argument("merge_slopes: x not increasing");
    const Rat dy = f.y[i] - f.y[i - 1];
    if (dy < 0) throw std::invalid_argument("merge_slopes: f not nondecreasing");
    if (dy > lipschitz * (f.x[i] - f.x[i - 1]))
      throw std::invalid_argument("merge_slopes: Lipschitz bound violated");
  }

  std::vector<Rat> bx{f.x.front()};
  std::vector<Rat> by{f.y.front()};
  std::vector<Rat> slopes;
  for (std::size_t i = 1; i < f.x.size(); ++i) {
    Rat xi = f.x[i], yi = f.y[i];
    Rat sigma = (yi - by.back()) / (xi - bx.back());
    while (!slopes.empty() && sigma <= slopes.back()) {
      slopes.pop_back();
      bx.pop_back();
      by.pop_back();
      sigma = (yi - by.back()) / (xi - bx.back());
    }
    slopes.push_back(sigma);
    bx.push_back(xi);
    by.push_back(yi);
  }
  return SlopeDecomposition{std::move(bx), std::move(slopes)};
}

// f(x) >= f(a) + sigma (x-a) - eps (b-a) at every breakpoint of [a,b]
// (sufficient by piecewise affinity), endpoints included.
inline bool superlinearity_check(const PiecewiseAffine& f, const Rat& a, const Rat& b,
                                 const Rat& sigma, const Rat& eps) {
  if (!(a < b)) throw std::invalid_argument("superlinearity_check: need a < b");
  const Rat fa = f.eval(a);
  const Rat slack = eps * (b - a);
  auto ok = [&](const Rat& x) { return f.eval(x) >= fa + sigma * (x - a) - slack; };
  if (!ok(a) || !ok(b)) return false;
  for (const Rat& x : f.x)
    if (x > a && x < b && !ok(x)) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Branching profiles
// ---------------------------------------------------------------------------

// beta(j) = log2(N_1 ... N_j) / H on block indices 0..m/H, with the merged
// slope decomposition attached.
struct BranchingProfile {
  int Hblock = 1;
  int mPrime = 0;
  PiecewiseAffine beta;
  SlopeDecomposition decomposition;
};

inline BranchingProfile branching_profile(const UniformFamily& u) {
  BranchingProfile p;
  p.Hblock = u.H;
  p.mPrime = static_cast<int>(u.log2N.size());
  p.beta.x.push_back(Rat(0));
  p.beta.y.push_back(Rat(0));
  i64 acc = 0;
  for (int j = 0; j < p.mPrime; ++j) {
    acc += u.log2N[j];
    p.beta.x.push_back(Rat(j + 1));
    p.beta.y.push_back(Rat(acc, u.H));
  }
  p.decomposition = merge_slopes(p.beta, Rat(2));
  return p;
}

// beta is 2-Lipschitz in the block variable (ambient dimension 2)
inline bool branching_lipschitz_ok(const BranchingProfile& p) {
  for (std::size_t i = 1; i < p.beta.x.size(); ++i)
    if (p.beta.y[i] - p.beta.y[i - 1] > Rat(2) * (p.beta.x[i] - p.beta.x[i - 1])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Rescaled-set verification
// ---------------------------------------------------------------------------

// If (beta, a, b) is s-superlinear then for every scale-2^{-aH} square Q
// meeting the family, the rescaled copy of family cap Q is a
// (2^{-(b-a)H}, s, 4*2^{Hs})-set, counted at the coarsened scale. Returns the
// worst case over Q.
inline KTReport rescaled_set_check(const UniformFamily& u, int a, int b, double s) {
  const BranchingProfile prof = branching_profile(u);
  if (!(a >= 0 && b <= prof.mPrime && a < b))
    throw std::invalid_argument("rescaled_set_check: bad block range");
  if (!superlinearity_check(prof.beta, Rat(a), Rat(b), rat_from_double(s), Rat(0)))
    throw std::invalid_argument("rescaled_set_check: branching function not s-superlinear on [a,b]");
  const int m = u.family.m(), H = u.H;
  const int kQ = a * H;
  const int floorScale = (b - a) * H;  // covering scale of the rescaled set
  std::vector<Cell> ancestors;
  for (const Cell& c : u.family.cells()) ancestors.push_back(cell_ancestor(c, m, kQ));
  std::sort(ancestors.begin(), ancestors.end());
  ancestors.erase(std::unique(ancestors.begin(), ancestors.end()), ancestors.end());

  KTReport worst;
  worst.bestConstant = -1;
  for (const Cell& q : ancestors) {
    std::vector<Cell> rescaled;
    for (const Cell& c : u.family.cells())
      if (cell_ancestor(c, m, kQ) == q) rescaled.push_back(rescale_cell(q, kQ, c, m));
    CellFamily fine(Scale{m - kQ}, std::move(rescaled));
    // coarsen to the floor scale before scanning
    std::vector<Cell> coarse;
    for (const Cell& c : fine.cells()) coarse.push_back(cell_ancestor(c, m - kQ, floorScale));
    CellFamily coarseFam(Scale{floorScale}, std::move(coarse));
    KTReport rep = delta_s_constant(coarseFam, s);
    if (rep.bestConstant > worst.bestConstant) worst = rep;
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Non-concentrated subset extraction
// ---------------------------------------------------------------------------

struct NonConcentrationCertificate {
  Scale scale;
  int H = 1;
  int deltaExp = 0;  // Delta = 2^-deltaExp, deltaExp = y0 * H
  Cell Q;
  CellFamily subset;  // uniform subset cap Q
  EtaVal eta;
  EtaVal eta0;
  Rat gAtX0;
  Rat loss;           // dyadic upper bound on log2(|P|/|P'|)/m (strict mode folds it into eta)
  double C = 1, t = 0;
  bool strictMode = true;
  double retention = 1.0;

  // replayed postconditions
  bool sizeOk = false, boundOk = false;
  double sizeLhs = 0, sizeRhs = 0;
  double boundBest = 0, boundLimit = 0;
};

// largest eta0 = 2^-i with eta0 * exp(C^2/2) < t, i.e. the smallest integer
// i > C^2/(2 ln 2) + log2(1/t)
inline i64 eta0_exponent(double C, double t) {
  if (!(t > 0)) throw std::invalid_argument("eta0_exponent: t must be positive");
  const double X = C * C / (2.0 * std::log(2.0)) + std::log2(1.0 / t);
  if (X >= 1e15) return i64(1) << 50;  // deep in the symbolic-infinitesimal regime
  i64 i = static_cast<i64>(std::floor(X)) + 1;
  if (i < 0) i = 0;  // grid starts at 2^0
  return i;
}

namespace detail {

// verify certificate postconditions through covering_number / delta_s_constant
inline void replay_certificate(NonConcentrationCertificate& cert, const CellFamily& P) {
  const int m = P.m();
  const double etaD = cert.eta.toDouble();
  // (1) |subset| >= delta^eta |P|
  cert.sizeLhs = double(cert.subset.size());
  cert.sizeRhs = std::exp2(-double(m) * etaD) * double(P.size());
  cert.sizeOk = std::log2(double(P.size())) - std::log2(double(cert.subset.size())) <=
                double(m) * etaD + 1e-9;
  // (2) rescaled subset is a (delta/Delta, C*eta, 4*2^{H C eta})-set
  std::vector<Cell> rescaled;
  for (const Cell& c : cert.subset.cells())
    rescaled.push_back(rescale_cell(cert.Q, cert.deltaExp, c, m));
  CellFamily resc(Scale{m - cert.deltaExp}, std::move(rescaled));
  const double exponent = cert.C * etaD;
  if (resc.m() == 0) {
    // Delta = delta: the rescaled set is a single cell
    cert.boundBest = 1.0;
  } else {
    cert.boundBest = delta_s_constant(resc, exponent).bestConstant;
  }
  cert.boundLimit = 4.0 * std::exp2(double(cert.H) * exponent);
  cert.boundOk = cert.boundBest <= cert.boundLimit * (1.0 + 1e-9);
}

}  // namespace detail

// Constructive extraction: uniformize, take the branching function's convex
// minorant, locate a = min{x : g(x) = eta0}, and scan the decomposition pieces
// meeting [a,1) for the first one whose slope clears C * max{eta0, g}. The
// piece's left endpoint fixes the scale Delta and eta.
//
// strict mode folds the uniformization loss into the gate and into eta, so
// both certificate postconditions hold by construction (or the scan fails
// with a structured error). Non-strict mode follows the asymptotic formulas
// verbatim (eta = max{g(x0), eta0}); its replay flags may honestly fail at
// desk scale by the uniformization loss factor, which is recorded.
inline NonConcentrationCertificate extract_nonconcentrated(const CellFamily& P, double C,
                                                           std::optional<double> tOpt = std::nullopt,
                                                           int H = 1, bool strict = true) {
  if (P.empty()) throw std::invalid_argument("extract_nonconcentrated: empty family");
  if (C < 1.0) throw std::invalid_argument("extract_nonconcentrated: need C >= 1");
  const int m = P.m();
  const double t = tOpt ? *tOpt : std::log2(double(P.size())) / double(m);
  if (!(t > 0)) throw PipelineError("nonconcentration", "family carries no mass exponent (t = 0)");

  NonConcentrationCertificate cert;
  cert.scale = P.scale();
  cert.H = H;
  cert.C = C;
  cert.t = t;
  cert.strictMode = strict;
  cert.eta0 = EtaVal::pow2(eta0_exponent(C, t));

  UniformFamily u = uniformize(P, H);
  cert.retention = u.retention;
  const BranchingProfile prof = branching_profile(u);
  const int mPrime = prof.mPrime;

  // loss = dyadic upper bound on log2(|P|/|P'|)/m, grid 2^-12
  {
    const double raw = (std::log2(double(P.size())) - std::log2(double(u.family.size()))) / double(m);
    const i64 num = static_cast<i64>(std::ceil(std::max(0.0, raw + 9.6e-7) * 4096.0));
    cert.loss = Rat(num, 4096);
  }

  // g(x) = f(m'x)/m' on [0,1]; slopes of g equal the block-level slopes of f.
  // g(1) = log2|P'|/m must exceed eta0 for the scan interval to exist.
  const Rat gEnd = prof.beta.y.back() / Rat(mPrime);
  if (!cert.eta0.lessThan(gEnd))
    throw PipelineError("nonconcentration",
                        "branching profile never reaches eta0 (total exponent " + rat_str(gEnd) + ")");

  // a = min{x : g(x) = eta0}: find it piece by piece on the minorant. With an
  // infinitesimal eta0 this is the right end of the initial flat part, plus an
  // infinitesimal: represented as (base, strictlyPast).
  const auto& D = prof.decomposition;
  const std::size_t nPieces = D.slopes.size();
  auto gAt = [&](const Rat& blockX) {  // g at block coordinate
    // f = lower convex envelope; evaluate on the decomposition
    for (std::size_t j = 0; j < nPieces; ++j) {
      if (blockX <= D.breakpoints[j + 1]) {
        const Rat base = prof.beta.eval(D.breakpoints[j]);  // beta = f at breakpoints
        return (base + D.slopes[j] * (blockX - D.breakpoints[j])) / Rat(mPrime);
      }
    }
    return prof.beta.y.back() / Rat(mPrime);
  };

  // a in normalized coordinates. For an infinitesimal eta0 the exact value is
  // (end of the initial flat part) + eps, tracked by aStrictlyPast.
  Rat aBase(0);
  bool aStrictlyPast = false;
  {
    bool found = false;
    for (std::size_t j = 0; j < nPieces && !found; ++j) {
      if (cert.eta0.infinitesimal) {
        if (D.slopes[j] > 0) {
          aBase = D.breakpoints[j] / Rat(mPrime);
          aStrictlyPast = true;
          found = true;
        }
      } else if (gAt(D.breakpoints[j + 1]) >= cert.eta0.value) {
        const Rat gLeft = gAt(D.breakpoints[j]);
        if (gLeft >= cert.eta0.value) {
          aBase = D.breakpoints[j] / Rat(mPrime);
        } else {
          const Rat x = D.breakpoints[j] +
                        (cert.eta0.value * Rat(mPrime) - prof.beta.eval(D.breakpoints[j])) / D.slopes[j];
          aBase = x / Rat(mPrime);
        }
        found = true;
      }
    }
    if (!found)
      throw PipelineError("nonconcentration", "no point with g = eta0 (profile inconsistent)");
  }

  // scan pieces whose interval reaches past a; the gate value is
  // g(max(A_j, a)), which equals eta0 while the piece still contains a
  std::optional<std::size_t> chosen;
  const Rat Crat = rat_from_double(C);
  for (std::size_t j = 0; j < nPieces; ++j) {
    const Rat rightX = D.breakpoints[j + 1] / Rat(mPrime);
    if (!(rightX > aBase)) continue;
    const Rat leftX = D.breakpoints[j] / Rat(mPrime);
    Rat gGate;  // valid only if !gateIsEta0
    bool gateIsEta0 = true;
    if (leftX > aBase || (leftX == aBase && !aStrictlyPast)) {
      gGate = gAt(D.breakpoints[j]);
      gateIsEta0 = !cert.eta0.lessThan(gGate);
    }
    const Rat sigma = D.slopes[j];
    bool pass;
    if (gateIsEta0) {
      if (cert.eta0.infinitesimal)
        pass = strict ? (sigma >= Crat * cert.loss && sigma > 0) : (sigma > 0);
      else
        pass = sigma >= Crat * (cert.eta0.value + (strict ? cert.loss : Rat(0)));
    } else {
      pass = sigma >= Crat * (gGate + (strict ? cert.loss : Rat(0)));
    }
    if (pass) {
      chosen = j;
      break;
    }
  }
  if (!chosen)
    throw PipelineError("nonconcentration",
                        "no decomposition piece clears the slope gate (pieces=" +
                            std::to_string(nPieces) + ", eta0=2^-" + std::to_string(cert.eta0.negExp) +
                            ", loss=" + rat_str(cert.loss) + ")");

  const Rat x0Block = D.breakpoints[*chosen];  // integer block index
  cert.gAtX0 = gAt(x0Block);
  const i64 y0 = x0Block.convert_to<i64>();
  cert.deltaExp = static_cast<int>(y0) * H;

  // eta
  if (strict) {
    const Rat candidate = cert.gAtX0 + cert.loss;
    cert.eta = cert.eta0.lessThan(candidate) ? EtaVal::exact(candidate) : cert.eta0;
  } else {
    cert.eta = cert.eta0.lessThan(cert.gAtX0) ? EtaVal::exact(cert.gAtX0) : cert.eta0;
  }

  // Q: alive Delta-ancestor maximizing |P cap Q|, ties lexicographic
  {
    std::map<Cell, i64> aliveAncestors;
    for (const Cell& c : u.family.cells()) aliveAncestors[cell_ancestor(c, m, cert.deltaExp)] = 0;
    for (const Cell& c : P.cells()) {
      auto it = aliveAncestors.find(cell_ancestor(c, m, cert.deltaExp));
      if (it != aliveAncestors.end()) ++it->second;
    }
    i64 best = -1;
    for (const auto& [q, cnt] : aliveAncestors) {
      if (cnt > best) {
        best = cnt;
        cert.Q = q;
      }
    }
  }

  // subset = uniform family cap Q
  {
    std::vector<Cell> sub;
    for (const Cell& c : u.family.cells())
      if (cell_ancestor(c, m, cert.deltaExp) == cert.Q) sub.push_back(c);
    cert.subset = CellFamily(P.scale(), std::move(sub), P.band());
  }

  detail::replay_certificate(cert, P);
  if (strict && (!cert.sizeOk || !cert.boundOk))
    throw std::logic_error("extract_nonconcentrated: strict certificate failed replay");
  return cert;
}

}  // namespace inclab
