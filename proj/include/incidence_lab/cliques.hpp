#pragma once

// Clique testing, the clique-extraction pipeline (uniformize, per-tube
// non-concentration certificates, scale/square pigeonholes, tube packets),
// sheaf-rectangle recovery, and the exhaustion loop.
//
// Pipeline conventions: every "up to a constant" step of the underlying
// argument is realized as a dyadic-bucket pigeonhole keeping the
// mass-dominant bucket, with lexicographic tie-breaks; identical inputs and
// parameters therefore produce identical traces. The pipeline reports the
// asymptotic quantities (eta, Delta window) instead of asserting them.

#include "incidence_lab/gen.hpp"
#include "incidence_lab/structure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace inclab {

struct TraceEntry {
  std::string stage;
  std::string detail;
  i64 before = 0, after = 0;
};

struct PipelineParams {
  double eps = 0.05;   // uniform-decomposition stop exponents
  int H = 1;           // block size for all multiscale steps
  int nMax = 1024;     // exhaustion iteration cap
  double floorExp = std::numeric_limits<double>::quiet_NaN();  // incidence floor = delta^{floorExp};
                                                               // default 0.1 - f(s,t)
  double Cprime = 4.0;  // rectangle constant
  bool collectTrace = true;
};

struct TubePacket {
  DualCell anchor;
  Cell q0;
  int deltaExp = 0;        // comparability scale
  i64 slopeBand = 0;       // max slope-index distance to the anchor
  std::vector<DualCell> members;
};

struct CliqueReport {
  CellFamily Pprime;
  DualCellFamily Lprime;
  double theta = 0;
  i64 pairCount = 0;
  Cell Q0;
  int deltaExp = 0;  // Delta = 2^-deltaExp
  double eta = 0;
  i64 eta0NegExp = 0;
  TubePacket packet;
  std::vector<TraceEntry> trace;
  bool viaDuality = false;
  bool deltaInWindow = false;
  double windowLoExp = 0, windowHiExp = 0;  // exponent window for Delta
};

struct CliqueTest {
  bool isClique = false;
  double achieved = 0;
  i64 pairCount = 0;
};

inline CliqueTest is_clique(const CellFamily& P, const DualCellFamily& L, double theta) {
  if (P.empty() || L.empty()) throw std::invalid_argument("is_clique: empty family");
  const IncidenceSet inc = incidences(P, L);
  CliqueTest out;
  out.pairCount = inc.count();
  out.achieved = double(inc.count()) / (double(P.size()) * double(L.size()));
  out.isClique = out.achieved >= theta;
  return out;
}

namespace detail {

inline void trace_push(std::vector<TraceEntry>& tr, const PipelineParams& params, std::string stage,
                       std::string detail, i64 before, i64 after) {
  if (params.collectTrace) tr.push_back({std::move(stage), std::move(detail), before, after});
}

// doubled center x-coordinate of a scale-2^-k square, in delta units
inline i64 doubled_center_x(const Cell& q, int m, int k) {
  return 2 * q.x * (i64(1) << (m - k)) + (i64(1) << (m - k));
}

// tube value at the square's center x, in delta^2/2 units
inline i128 tube_center_value(const DualCell& d, i64 doubledCx, int m) {
  return i128(d.a) * doubledCx + (i128(d.b) * 2 << m);
}

struct CertVote {
  std::uint32_t tubeIdx = 0;
  int deltaExp = 0;
  i64 etaClassKey = 0;
  double etaDouble = 0;
  i64 eta0NegExp = 0;
  Cell Q;
};

inline i64 eta_class_key(const EtaVal& eta) {
  const double v = eta.toDouble();
  if (eta.infinitesimal || v <= 0.0)  // symbolic, or materialized below double range
    return std::numeric_limits<i64>::min() / 2 + eta.negExp;
  return static_cast<i64>(std::floor(std::log2(v)));
}

inline CliqueReport extract_clique_core(const CellFamily& P, const DualCellFamily& L, double s,
                                        double t, double u, const PipelineParams& params);

}  // namespace detail

// Extraction pipeline. For s > t the configuration is dualized, the s < t
// branch runs on the dual, and the output is mapped back (a standard duality
// reduction; the report keeps the trace of the dual run).
inline CliqueReport extract_clique(const CellFamily& P, const DualCellFamily& L, double s, double t,
                                   double u, const PipelineParams& params = {}) {
  if (!(s > 0 && s <= 1 && t > 0 && t <= 1 && u > 0 && u <= 1))
    throw std::invalid_argument("extract_clique: s,t,u in (0,1]");
  if (P.empty() || L.empty()) throw std::invalid_argument("extract_clique: empty family");
  if (!(P.scale() == L.scale())) throw std::invalid_argument("extract_clique: scale mismatch");

  if (s > t + 1e-12) {
    auto [Pstar, Lstar] = dualize_config(P, L);
    CliqueReport dualRep = detail::extract_clique_core(Pstar, Lstar, t, s, u, params);
    CliqueReport rep;
    rep.viaDuality = true;
    rep.trace = std::move(dualRep.trace);
    detail::trace_push(rep.trace, params, "duality", "mapped dual clique back", 0, 0);
    // dual tubes came from cells of P; dual cells came from tubes of L
    std::vector<Cell> cells;
    for (const DualCell& d : dualRep.Lprime.cells()) cells.push_back(Cell{d.a, d.b});
    std::vector<DualCell> tubes;
    for (const Cell& c : dualRep.Pprime.cells()) tubes.push_back(DualCell{negate_index(c.x), c.y});
    rep.Pprime = CellFamily(P.scale(), std::move(cells), P.band());
    rep.Lprime = DualCellFamily(P.scale(), std::move(tubes));
    rep.Q0 = dualRep.Q0;
    rep.deltaExp = dualRep.deltaExp;
    rep.eta = dualRep.eta;
    rep.eta0NegExp = dualRep.eta0NegExp;
    rep.packet = dualRep.packet;
    rep.deltaInWindow = dualRep.deltaInWindow;
    rep.windowLoExp = dualRep.windowLoExp;
    rep.windowHiExp = dualRep.windowHiExp;
    if (!rep.Pprime.empty() && !rep.Lprime.empty()) {
      const IncidenceSet inc = incidences(rep.Pprime, rep.Lprime);
      rep.pairCount = inc.count();
      rep.theta = double(inc.count()) / (double(rep.Pprime.size()) * double(rep.Lprime.size()));
    }
    return rep;
  }
  return detail::extract_clique_core(P, L, s, t, u, params);
}

namespace detail {

inline CliqueReport extract_clique_core(const CellFamily& P, const DualCellFamily& L, double s,
                                        double t, double u, const PipelineParams& params) {
  const int m = P.m();
  CliqueReport rep;
  const bool equalCase = std::fabs(s - t) < 1e-12;

  // Step 1a: uniform decomposition of P; keep the piece with the most
  // incidences. If no piece clears the delta^{2eps} floor (common at coarse
  // scales where that floor exceeds any uniformization retention), fall back
  // to a single uniformization pass.
  UniformDecomposition dec = decompose_uniform(P, params.eps, params.H);
  CellFamily P1;
  if (dec.pieces.empty()) {
    P1 = uniformize(P, params.H).family;
    trace_push(rep.trace, params, "uniform-decomposition",
               "no piece cleared the floor (" + dec.stopReason + "); single uniformization fallback",
               i64(P.size()), i64(P1.size()));
  } else {
    std::size_t bestPiece = 0;
    i64 bestPieceInc = -1;
    for (std::size_t i = 0; i < dec.pieces.size(); ++i) {
      const i64 cnt = incidences(dec.pieces[i].family, L).count();
      if (cnt > bestPieceInc) {
        bestPieceInc = cnt;
        bestPiece = i;
      }
    }
    P1 = dec.pieces[bestPiece].family;
    trace_push(rep.trace, params, "uniform-decomposition",
               "pieces=" + std::to_string(dec.pieces.size()) + " kept piece " +
                   std::to_string(bestPiece) + " (incidences " + std::to_string(bestPieceInc) + ")",
               i64(P.size()), i64(P1.size()));
  }

  // Step 1b: bucket tubes by per-tube incident-cell count, keep the class
  // with the largest incidence mass.
  const IncidenceSet inc1 = incidences(P1, L);
  if (inc1.count() == 0) throw PipelineError("tube-bucketing", "no incidences against the kept piece");
  std::map<int, i64> classMass;
  for (std::size_t ti = 0; ti < L.size(); ++ti) {
    if (inc1.perTube[ti] == 0) continue;
    classMass[static_cast<int>(std::floor(std::log2(double(inc1.perTube[ti]))))] += inc1.perTube[ti];
  }
  int keptClass = classMass.begin()->first;
  i64 keptMass = -1;
  for (const auto& [cls, mass] : classMass)
    if (mass > keptMass) {
      keptMass = mass;
      keptClass = cls;
    }
  std::vector<std::uint32_t> T1;
  for (std::uint32_t ti = 0; ti < L.size(); ++ti) {
    if (inc1.perTube[ti] == 0) continue;
    if (static_cast<int>(std::floor(std::log2(double(inc1.perTube[ti])))) == keptClass)
      T1.push_back(ti);
  }
  trace_push(rep.trace, params, "tube-bucketing",
             "kept dyadic class 2^" + std::to_string(keptClass) + " (mass " +
                 std::to_string(keptMass) + ")",
             i64(L.size()), i64(T1.size()));

  // Step 2: per-tube non-concentration certificates.
  const double C = equalCase ? 400.0 / (s * u) : 160.0 / (s * u * (t - s));
  const double tPr2 = equalCase ? s / 2.0 : s * s / (s + t);
  std::vector<CertVote> votes;
  std::string firstFailure;
  std::vector<std::vector<std::uint32_t>> fibers(L.size());
  for (const auto& [pi, t2] : inc1.pairs) fibers[t2].push_back(pi);
  for (std::uint32_t ti : T1) {
    std::vector<Cell> fiber;
    fiber.reserve(fibers[ti].size());
    for (std::uint32_t pi : fibers[ti]) fiber.push_back(P1.cells()[pi]);
    if (fiber.empty()) continue;
    try {
      CellFamily fam(P.scale(), std::move(fiber), P.band());
      NonConcentrationCertificate cert =
          extract_nonconcentrated(fam, C, tPr2, params.H, /*strict=*/false);
      CertVote v;
      v.tubeIdx = ti;
      v.deltaExp = cert.deltaExp;
      v.etaClassKey = eta_class_key(cert.eta);
      v.etaDouble = cert.eta.toDouble();
      v.eta0NegExp = cert.eta0.negExp;
      v.Q = cert.Q;
      votes.push_back(v);
    } catch (const PipelineError& e) {
      if (firstFailure.empty()) firstFailure = e.what();
    }
  }
  if (votes.empty())
    throw PipelineError("certificate", "no per-tube certificate succeeded (first failure: " +
                                           (firstFailure.empty() ? "none" : firstFailure) + ")");

  // pigeonhole (eta, Delta) to a common pair
  std::map<std::pair<int, i64>, i64> voteCount;
  for (const CertVote& v : votes) ++voteCount[{v.deltaExp, v.etaClassKey}];
  std::pair<int, i64> keptKey = voteCount.begin()->first;
  i64 keptVotes = -1;
  for (const auto& [key, cnt] : voteCount)
    if (cnt > keptVotes || (cnt == keptVotes && key < keptKey)) {
      keptVotes = cnt;
      keptKey = key;
    }
  rep.deltaExp = keptKey.first;
  std::vector<CertVote> T2;
  for (const CertVote& v : votes)
    if (std::pair(v.deltaExp, v.etaClassKey) == keptKey) T2.push_back(v);
  rep.eta = T2.front().etaDouble;
  rep.eta0NegExp = T2.front().eta0NegExp;
  trace_push(rep.trace, params, "scale-pigeonhole",
             "Delta=2^-" + std::to_string(rep.deltaExp) + " eta-class " +
                 std::to_string(keptKey.second) + " votes " + std::to_string(keptVotes),
             i64(votes.size()), i64(T2.size()));

  // Step 2 continued: the popular square Q0
  std::map<Cell, i64> qCount;
  for (const CertVote& v : T2) ++qCount[v.Q];
  Cell Q0 = qCount.begin()->first;
  i64 q0Votes = -1;
  for (const auto& [q, cnt] : qCount)
    if (cnt > q0Votes) {
      q0Votes = cnt;
      Q0 = q;
    }
  rep.Q0 = Q0;
  std::vector<std::uint32_t> T0;
  for (const CertVote& v : T2)
    if (v.Q == Q0) T0.push_back(v.tubeIdx);
  trace_push(rep.trace, params, "square-pigeonhole",
             "Q0=(" + std::to_string(Q0.x) + "," + std::to_string(Q0.y) + ") at 2^-" +
                 std::to_string(rep.deltaExp),
             i64(T2.size()), i64(T0.size()));

  // Step 3: group T0 into tube packets by comparability of the intersections
  // with Q0: slope indices within 2/Delta and values at Q0's center x within
  // 2*delta (both exact integer tests; the comparability rectangle constant
  // is pinned at 2 and recorded). Keep the largest packet.
  std::sort(T0.begin(), T0.end(),
            [&](std::uint32_t a, std::uint32_t b) { return L.cells()[a] < L.cells()[b]; });
  const i64 slopeBand = i64(2) << rep.deltaExp;  // 2/Delta in slope-index units
  const i64 dcx = doubled_center_x(Q0, m, rep.deltaExp);
  const i128 valueBand = i128(4) << m;  // 2*delta in delta^2/2 units
  std::vector<bool> assigned(T0.size(), false);
  std::optional<TubePacket> best;
  for (std::size_t i = 0; i < T0.size(); ++i) {
    if (assigned[i]) continue;
    TubePacket packet;
    packet.anchor = L.cells()[T0[i]];
    packet.q0 = Q0;
    packet.deltaExp = rep.deltaExp;
    packet.slopeBand = slopeBand;
    const i128 anchorVal = tube_center_value(packet.anchor, dcx, m);
    for (std::size_t j = i; j < T0.size(); ++j) {
      if (assigned[j]) continue;
      const DualCell& d = L.cells()[T0[j]];
      const i64 da = d.a - packet.anchor.a;
      if (da < -slopeBand || da > slopeBand) continue;
      const i128 dv = tube_center_value(d, dcx, m) - anchorVal;
      if (dv < -valueBand || dv > valueBand) continue;
      packet.members.push_back(d);
      assigned[j] = true;
    }
    if (!best || packet.members.size() > best->members.size()) best = packet;
  }
  if (!best || best->members.empty()) throw PipelineError("tube-packet", "no packet formed");
  rep.packet = *best;
  trace_push(rep.trace, params, "tube-packet",
             "largest packet size " + std::to_string(best->members.size()), i64(T0.size()),
             i64(best->members.size()));

  // clique = (P restricted to Q0) x (packet members)
  rep.Pprime = P.restrictedTo(Q0, rep.deltaExp);
  rep.Lprime = DualCellFamily(P.scale(), rep.packet.members);
  if (rep.Pprime.empty()) throw PipelineError("clique-assembly", "P cap Q0 is empty");
  const IncidenceSet incP = incidences(rep.Pprime, rep.Lprime);
  rep.pairCount = incP.count();
  rep.theta = double(incP.count()) / (double(rep.Pprime.size()) * double(rep.Lprime.size()));

  // Delta-window diagnostic
  const double x = double(rep.deltaExp) / double(m);
  if (equalCase) {
    rep.windowLoExp = 0.5 + 2.0 * rep.eta / s;
    rep.windowHiExp = 0.5 - u / 3.0;
  } else {
    rep.windowLoExp = t / (s + t) + 2.0 * rep.eta / s;
    rep.windowHiExp = t / (s + t) - u / 8.0;
  }
  rep.deltaInWindow = (x <= rep.windowLoExp + 1e-9) && (x >= rep.windowHiExp - 1e-9);
  trace_push(rep.trace, params, "clique-assembly",
             "theta=" + std::to_string(rep.theta) + " |P'|=" + std::to_string(rep.Pprime.size()) +
                 " |L'|=" + std::to_string(rep.Lprime.size()),
             rep.pairCount, rep.pairCount);
  return rep;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Exhaustion
// ---------------------------------------------------------------------------

struct ExhaustResult {
  std::vector<CliqueReport> reports;
  std::string stopReason;
  i64 totalPairs = 0;
  double targetPairs = 0;  // delta^{u - f(s,t)}
  i64 residualIncidences = 0;
};

// Repeatedly: bucket cells by per-cell tube counts (dominant dyadic class),
// extract a clique from the dominant bucket, remove its cells, continue until
// the residual incidence count falls below half the floor, an extraction
// fails, or the iteration cap is hit. Output point sets are pairwise disjoint.
inline ExhaustResult exhaust_cliques(const CellFamily& P, const DualCellFamily& L, double s,
                                     double t, double u, const PipelineParams& params = {}) {
  ExhaustResult out;
  const int m = P.m();
  const double floorExp =
      std::isnan(params.floorExp) ? 0.1 - fu_ren_exponent(s, t) : params.floorExp;
  const double floorVal = std::exp2(-double(m) * floorExp);
  out.targetPairs = std::exp2(-double(m) * (u - fu_ren_exponent(s, t)));
  if (L.empty()) {
    out.stopReason = "empty tube family";
    return out;
  }
  CellFamily working = P;
  for (int iter = 0; iter < params.nMax; ++iter) {
    if (working.empty()) {
      out.stopReason = "points exhausted";
      break;
    }
    const IncidenceSet inc = incidences(working, L);
    out.residualIncidences = inc.count();
    if (double(inc.count()) < floorVal / 2.0) {
      out.stopReason = "residual incidences below half the floor";
      break;
    }
    // dominant per-cell class
    std::map<int, i64> classMass;
    for (std::size_t pi = 0; pi < working.size(); ++pi) {
      if (inc.perCell[pi] == 0) continue;
      classMass[static_cast<int>(std::floor(std::log2(double(inc.perCell[pi]))))] += inc.perCell[pi];
    }
    if (classMass.empty()) {
      out.stopReason = "no incident cells";
      break;
    }
    int keptClass = classMass.begin()->first;
    i64 keptMass = -1;
    for (const auto& [cls, mass] : classMass)
      if (mass > keptMass) {
        keptMass = mass;
        keptClass = cls;
      }
    std::vector<Cell> barCells;
    for (std::size_t pi = 0; pi < working.size(); ++pi) {
      if (inc.perCell[pi] == 0) continue;
      if (static_cast<int>(std::floor(std::log2(double(inc.perCell[pi])))) == keptClass)
        barCells.push_back(working.cells()[pi]);
    }
    CellFamily Pbar(P.scale(), std::move(barCells), P.band());
    try {
      CliqueReport rep = extract_clique(Pbar, L, s, t, u, params);
      if (rep.Pprime.empty()) {
        out.stopReason = "empty clique";
        break;
      }
      working = working.minus(rep.Pprime);
      out.totalPairs += rep.pairCount;
      out.reports.push_back(std::move(rep));
    } catch (const PipelineError& e) {
      out.stopReason = std::string("pipeline failure at iteration ") + std::to_string(iter) + ": " +
                       e.what();
      break;
    }
    if (iter == params.nMax - 1) out.stopReason = "iteration cap";
  }
  if (out.stopReason.empty()) out.stopReason = "iteration cap";
  out.residualIncidences = working.empty() ? 0 : incidences(working, L).count();
  // disjointness assertion
  std::vector<Cell> seen;
  for (const CliqueReport& r : out.reports)
    for (const Cell& c : r.Pprime.cells()) seen.push_back(c);
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw std::logic_error("exhaust_cliques: point sets not disjoint");
  return out;
}

// ---------------------------------------------------------------------------
// Sheaf rectangle
// ---------------------------------------------------------------------------

struct RectangleReport {
  Rect R;
  DualCell anchorTube;
  double alpha = 0;  // slope-band width
  i64 pointsInR = 0;
  i64 linesThroughR = 0;
  double predictedDiam = 0;  // delta^{t/(s+t)}
  double diam = 0;
  double theta = 0;
  double Cprime = 4.0;
  std::string note;
};

namespace detail {

// closed cell square vs rectangle overlap / containment (separating axes)
inline bool square_in_rect(const Cell& c, double delta, const Rect& r) {
  const double eps = 1e-12;
  for (int dx = 0; dx <= 1; ++dx)
    for (int dy = 0; dy <= 1; ++dy) {
      const double px = (double(c.x) + dx) * delta - r.cx;
      const double py = (double(c.y) + dy) * delta - r.cy;
      const double along = px * r.ux + py * r.uy;
      const double across = -px * r.uy + py * r.ux;
      if (std::fabs(along) > r.len / 2 + eps || std::fabs(across) > r.wid / 2 + eps) return false;
    }
  return true;
}

inline bool square_meets_rect(const Cell& c, double delta, const Rect& r) {
  // separating-axis test between the axis-aligned square and the rectangle
  const double sx = (double(c.x) + 0.5) * delta - r.cx;
  const double sy = (double(c.y) + 0.5) * delta - r.cy;
  const double h = delta / 2;
  // rectangle axes
  const double along = sx * r.ux + sy * r.uy;
  const double across = -sx * r.uy + sy * r.ux;
  const double projSq = h * (std::fabs(r.ux) + std::fabs(r.uy));
  if (std::fabs(along) > r.len / 2 + projSq) return false;
  if (std::fabs(across) > r.wid / 2 + projSq) return false;
  // square axes
  const double hx = r.len / 2 * std::fabs(r.ux) + r.wid / 2 * std::fabs(r.uy);
  const double hy = r.len / 2 * std::fabs(r.uy) + r.wid / 2 * std::fabs(r.ux);
  if (std::fabs(sx) > h + hx || std::fabs(sy) > h + hy) return false;
  return true;
}

inline double point_line_distance(double px, double py, const Line& l) {
  return std::fabs(l.a * px - py + l.b) / std::sqrt(1.0 + l.a * l.a);
}

}  // namespace detail

// cells whose closed square meets the rectangle
inline i64 rect_point_count(const CellFamily& P, const Rect& r) {
  const double delta = scale_delta(P.scale());
  i64 cnt = 0;
  for (const Cell& c : P.cells())
    if (detail::square_meets_rect(c, delta, r)) ++cnt;
  return cnt;
}

// tubes whose center line passes within `dist` of all four rectangle corners
inline i64 rect_line_count(const DualCellFamily& L, const Rect& r, double dist) {
  const double delta = scale_delta(L.scale());
  i64 cnt = 0;
  for (const DualCell& d : L.cells()) {
    const Line lc{(double(d.a) + 0.5) * delta, (double(d.b) + 0.5) * delta};
    bool all = true;
    for (int sx = -1; sx <= 1 && all; sx += 2)
      for (int sy = -1; sy <= 1 && all; sy += 2) {
        const double px = r.cx + sx * r.ux * r.len / 2 - sy * r.uy * r.wid / 2;
        const double py = r.cy + sx * r.uy * r.len / 2 + sy * r.ux * r.wid / 2;
        if (detail::point_line_distance(px, py, lc) > dist) all = false;
      }
    if (all) ++cnt;
  }
  return cnt;
}

// Recovers the delta x Delta rectangle carrying the clique mass: pick the
// tube T0 sharing many cells with many tubes, split the others into dyadic
// slope bands around T0, cover T0's center line by overlapping
// C' delta x C' (delta/alpha) rectangles, and keep the good rectangle covering
// the most comparable intersections.
inline RectangleReport find_sheaf_rectangle(const CellFamily& P, const DualCellFamily& L,
                                            double theta, double s = 1.0, double t = 1.0,
                                            double Cprime = 4.0) {
  const CliqueTest test = is_clique(P, L, theta);
  if (!test.isClique)
    throw std::invalid_argument("find_sheaf_rectangle: clique precondition fails (achieved " +
                                std::to_string(test.achieved) + ")");
  const double delta = scale_delta(P.scale());
  const IncidenceSet inc = incidences(P, L);

  // per-tube fibers as sorted cell-index vectors
  std::vector<std::vector<std::uint32_t>> fiber(L.size());
  for (const auto& [pi, ti] : inc.pairs) fiber[ti].push_back(pi);

  const double shareFloor = theta * theta * double(P.size()) / 2.0;
  auto shared = [&](std::uint32_t a, std::uint32_t b) {
    std::size_t i = 0, j = 0, cnt = 0;
    while (i < fiber[a].size() && j < fiber[b].size()) {
      if (fiber[a][i] == fiber[b][j]) ++cnt, ++i, ++j;
      else if (fiber[a][i] < fiber[b][j]) ++i;
      else ++j;
    }
    return cnt;
  };

  std::uint32_t t0 = 0;
  i64 bestScore = -1;
  for (std::uint32_t a = 0; a < L.size(); ++a) {
    i64 score = 0;
    for (std::uint32_t b = 0; b < L.size(); ++b)
      if (double(shared(a, b)) >= shareFloor) ++score;
    if (score > bestScore) {
      bestScore = score;
      t0 = a;
    }
  }
  const DualCell anchor = L.cells()[t0];

  // popular set and dyadic slope split around T0
  std::vector<std::uint32_t> popular;
  for (std::uint32_t b = 0; b < L.size(); ++b)
    if (double(shared(t0, b)) >= shareFloor) popular.push_back(b);
  auto slopeClass = [&](std::uint32_t b) {
    const i64 d = std::llabs(L.cells()[b].a - anchor.a);
    if (d <= 2) return 0;
    return static_cast<int>(std::floor(std::log2(double(d))));
  };
  std::map<int, i64> classCount;
  for (std::uint32_t b : popular) ++classCount[slopeClass(b)];
  int keptClass = classCount.begin()->first;
  i64 keptCount = -1;
  for (const auto& [cls, cnt] : classCount)
    if (cnt > keptCount) {
      keptCount = cnt;
      keptClass = cls;
    }
  std::vector<std::uint32_t> band;
  for (std::uint32_t b : popular)
    if (slopeClass(b) == keptClass) band.push_back(b);
  const double alpha = keptClass == 0 ? delta : std::ldexp(delta, keptClass);

  // overlapping cover of T0's center line by C'delta x C'(delta/alpha)
  // rectangles, stepping by half the length
  const Line center{(double(anchor.a) + 0.5) * delta, (double(anchor.b) + 0.5) * delta};
  const double norm = std::sqrt(1.0 + center.a * center.a);
  const Rect proto{0, 0, 1.0 / norm, center.a / norm, Cprime * (delta / alpha), Cprime * delta};
  std::vector<Rect> cover;
  {
    const double step = proto.len / 2.0;
    for (double along = -0.5; along <= norm + 0.5 + step; along += step) {
      Rect r = proto;
      r.cx = along * proto.ux;
      r.cy = center.b + along * proto.uy;
      cover.push_back(r);
    }
  }

  // assign each band tube to the first rectangle containing all shared cells
  std::vector<i64> rectTubes(cover.size(), 0);
  i64 assignedTubes = 0;
  for (std::uint32_t b : band) {
    std::vector<std::uint32_t> cellsShared;
    std::size_t i = 0, j = 0;
    while (i < fiber[t0].size() && j < fiber[b].size()) {
      if (fiber[t0][i] == fiber[b][j]) cellsShared.push_back(fiber[t0][i]), ++i, ++j;
      else if (fiber[t0][i] < fiber[b][j]) ++i;
      else ++j;
    }
    for (std::size_t ri = 0; ri < cover.size(); ++ri) {
      bool all = true;
      for (std::uint32_t pi : cellsShared)
        if (!detail::square_in_rect(P.cells()[pi], delta, cover[ri])) {
          all = false;
          break;
        }
      if (all) {
        ++rectTubes[ri];
        ++assignedTubes;
        break;
      }
    }
  }

  std::size_t bestRect = 0;
  RectangleReport rep;
  if (assignedTubes > 0) {
    i64 most = -1;
    for (std::size_t ri = 0; ri < cover.size(); ++ri)
      if (rectTubes[ri] > most) {
        most = rectTubes[ri];
        bestRect = ri;
      }
    rep.note = "selected by comparable-intersection count";
  } else {
    // no bundle of shared cells fit a single rectangle at this C'; fall back
    // to the rectangle carrying the most points (recorded)
    i64 most = -1;
    for (std::size_t ri = 0; ri < cover.size(); ++ri) {
      const i64 cnt = rect_point_count(P, cover[ri]);
      if (cnt > most) {
        most = cnt;
        bestRect = ri;
      }
    }
    rep.note = "no comparable intersection fit; rectangle chosen by point mass";
  }

  rep.R = cover[bestRect];
  rep.anchorTube = anchor;
  rep.alpha = alpha;
  rep.theta = test.achieved;
  rep.Cprime = Cprime;
  rep.pointsInR = rect_point_count(P, rep.R);
  rep.linesThroughR = rect_line_count(L, rep.R, Cprime * delta);
  rep.predictedDiam = std::pow(delta, t / (s + t));
  rep.diam = std::hypot(rep.R.len, rep.R.wid);
  return rep;
}

}  // namespace inclab
