#pragma once

// File formats: line-oriented family text files, JSON reports (ordered keys
// for byte-stable output), CSV exports, and input digests.
//
// Family text format:
//   scale m=<m> kind=<cell|dual>
//   <x> <y>          (one integer pair per line)

#include "incidence_lab/cliques.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

namespace inclab {

using OrderedJson = nlohmann::ordered_json;

struct ParseError : std::runtime_error {
  int line;
  ParseError(int ln, const std::string& what)
      : std::runtime_error("line " + std::to_string(ln) + ": " + what), line(ln) {}
};

inline std::string family_to_text(const CellFamily& f) {
  std::ostringstream os;
  os << "scale m=" << f.m() << " kind=cell\n";
  for (const Cell& c : f.cells()) os << c.x << " " << c.y << "\n";
  return os.str();
}

inline std::string family_to_text(const DualCellFamily& f) {
  std::ostringstream os;
  os << "scale m=" << f.m() << " kind=dual\n";
  for (const DualCell& d : f.cells()) os << d.a << " " << d.b << "\n";
  return os.str();
}

struct ParsedFamily {
  bool isDual = false;
  CellFamily cells;
  DualCellFamily duals;
};

inline ParsedFamily parse_family_text(const std::string& text, Band cellBand = Band::UnitSquare) {
  std::istringstream is(text);
  std::string header;
  if (!std::getline(is, header)) throw ParseError(1, "empty family file");
  int m = -1;
  std::string kind;
  {
    std::istringstream hs(header);
    std::string tok;
    if (!(hs >> tok) || tok != "scale") throw ParseError(1, "expected 'scale m=<m> kind=<cell|dual>'");
    while (hs >> tok) {
      if (tok.rfind("m=", 0) == 0)
        m = std::stoi(tok.substr(2));
      else if (tok.rfind("kind=", 0) == 0)
        kind = tok.substr(5);
      else
        throw ParseError(1, "unknown header token '" + tok + "'");
    }
  }
  if (m < 1 || m > 30) throw ParseError(1, "scale m out of range [1,30]");
  if (kind != "cell" && kind != "dual") throw ParseError(1, "kind must be cell or dual");
  std::vector<Cell> cells;
  std::vector<DualCell> duals;
  std::string lineStr;
  int lineNo = 1;
  while (std::getline(is, lineStr)) {
    ++lineNo;
    if (lineStr.empty()) continue;
    std::istringstream ls(lineStr);
    i64 a, b;
    if (!(ls >> a >> b)) throw ParseError(lineNo, "expected two integers");
    std::string extra;
    if (ls >> extra) throw ParseError(lineNo, "trailing token '" + extra + "'");
    if (kind == "cell")
      cells.push_back(Cell{a, b});
    else
      duals.push_back(DualCell{a, b});
  }
  ParsedFamily out;
  out.isDual = (kind == "dual");
  try {
    if (out.isDual)
      out.duals = DualCellFamily(Scale{m}, std::move(duals));
    else
      out.cells = CellFamily(Scale{m}, std::move(cells), cellBand);
  } catch (const std::invalid_argument& e) {
    throw ParseError(2, e.what());
  }
  return out;
}

inline ParsedFamily parse_family_json(const std::string& text, Band cellBand = Band::UnitSquare) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(1, std::string("invalid JSON: ") + e.what());
  }
  if (!j.contains("m") || !j.contains("kind") || !j.contains("cells"))
    throw ParseError(1, "JSON family needs m, kind, cells");
  const int m = j["m"].get<int>();
  if (m < 1 || m > 30) throw ParseError(1, "scale m out of range [1,30]");
  const std::string kind = j["kind"].get<std::string>();
  if (kind != "cell" && kind != "dual") throw ParseError(1, "kind must be cell or dual");
  ParsedFamily out;
  out.isDual = (kind == "dual");
  std::vector<Cell> cells;
  std::vector<DualCell> duals;
  for (const auto& entry : j["cells"]) {
    if (!entry.is_array() || entry.size() != 2) throw ParseError(1, "cells entries must be pairs");
    if (out.isDual)
      duals.push_back(DualCell{entry[0].get<i64>(), entry[1].get<i64>()});
    else
      cells.push_back(Cell{entry[0].get<i64>(), entry[1].get<i64>()});
  }
  try {
    if (out.isDual)
      out.duals = DualCellFamily(Scale{m}, std::move(duals));
    else
      out.cells = CellFamily(Scale{m}, std::move(cells), cellBand);
  } catch (const std::invalid_argument& e) {
    throw ParseError(1, e.what());
  }
  return out;
}

// Loads a family file, sniffing JSON by the leading '{'.
inline ParsedFamily load_family(const std::string& path, Band cellBand = Band::UnitSquare) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  const std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{')
    return parse_family_json(text, cellBand);
  return parse_family_text(text, cellBand);
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string bytes = ss.str();
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

// ---------------------------------------------------------------------------
// JSON serialization
// ---------------------------------------------------------------------------

inline OrderedJson json_family(const CellFamily& f) {
  OrderedJson j;
  j["m"] = f.m();
  j["kind"] = "cell";
  OrderedJson arr = OrderedJson::array();
  for (const Cell& c : f.cells()) arr.push_back({c.x, c.y});
  j["cells"] = std::move(arr);
  return j;
}

inline OrderedJson json_family(const DualCellFamily& f) {
  OrderedJson j;
  j["m"] = f.m();
  j["kind"] = "dual";
  OrderedJson arr = OrderedJson::array();
  for (const DualCell& d : f.cells()) arr.push_back({d.a, d.b});
  j["cells"] = std::move(arr);
  return j;
}

inline OrderedJson json_kt_report(const KTReport& r) {
  OrderedJson j;
  j["exponent"] = r.exponent;
  j["best_constant"] = r.bestConstant;
  j["normalized"] = r.normalized;
  j["witness"] = {{"radius_exp", r.radiusExp},
                  {"x", r.witnessX},
                  {"y", r.witnessY},
                  {"count", r.witnessCount}};
  return j;
}

inline OrderedJson json_bound_report(const BoundReport& r) {
  OrderedJson j;
  j["lhs"] = r.lhs;
  j["rhs"] = r.rhs;
  j["ratio"] = r.ratio;
  j["s"] = r.s;
  j["t"] = r.t;
  j["eps"] = r.eps;
  j["k_p"] = r.kP;
  j["k_l"] = r.kL;
  j["incidences"] = r.incidenceCount;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline OrderedJson json_trace(const std::vector<TraceEntry>& trace) {
  OrderedJson arr = OrderedJson::array();
  for (const TraceEntry& e : trace)
    arr.push_back({{"stage", e.stage}, {"detail", e.detail}, {"before", e.before}, {"after", e.after}});
  return arr;
}

inline OrderedJson json_clique_report(const CliqueReport& r) {
  OrderedJson j;
  j["theta"] = r.theta;
  j["pairs"] = r.pairCount;
  j["p_prime"] = json_family(r.Pprime);
  j["l_prime"] = json_family(r.Lprime);
  j["q0"] = {r.Q0.x, r.Q0.y};
  j["delta_exp"] = r.deltaExp;
  j["eta"] = r.eta;
  j["eta0_neg_exp"] = r.eta0NegExp;
  j["packet"] = {{"anchor", {r.packet.anchor.a, r.packet.anchor.b}},
                 {"slope_band", r.packet.slopeBand},
                 {"size", r.packet.members.size()}};
  j["via_duality"] = r.viaDuality;
  j["delta_in_window"] = r.deltaInWindow;
  j["window_exp"] = {r.windowHiExp, r.windowLoExp};
  j["trace"] = json_trace(r.trace);
  return j;
}

inline OrderedJson json_rectangle_report(const RectangleReport& r) {
  OrderedJson j;
  j["rect"] = {{"cx", r.R.cx}, {"cy", r.R.cy}, {"ux", r.R.ux},
               {"uy", r.R.uy}, {"len", r.R.len}, {"wid", r.R.wid}};
  j["anchor_tube"] = {r.anchorTube.a, r.anchorTube.b};
  j["alpha"] = r.alpha;
  j["points_in_r"] = r.pointsInR;
  j["lines_through_r"] = r.linesThroughR;
  j["predicted_diam"] = r.predictedDiam;
  j["diam"] = r.diam;
  j["theta"] = r.theta;
  j["c_prime"] = r.Cprime;
  j["note"] = r.note;
  return j;
}

inline std::string per_tube_csv(const DualCellFamily& T, const IncidenceSet& inc) {
  std::ostringstream os;
  os << "tube_a,tube_b,count\n";
  for (std::size_t ti = 0; ti < T.size(); ++ti)
    os << T.cells()[ti].a << "," << T.cells()[ti].b << "," << inc.perTube[ti] << "\n";
  return os.str();
}

inline std::string branching_csv(const BranchingProfile& p) {
  std::ostringstream os;
  os << "j,beta,beta_num,beta_den\n";
  for (std::size_t i = 0; i < p.beta.x.size(); ++i) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", rat_to_double(p.beta.y[i]));
    os << rat_to_double(p.beta.x[i]) << "," << buf << "," << numerator(p.beta.y[i]).str() << ","
       << denominator(p.beta.y[i]).str() << "\n";
  }
  return os.str();
}

inline OrderedJson json_decomposition(const SlopeDecomposition& d) {
  OrderedJson j;
  OrderedJson bp = OrderedJson::array(), sl = OrderedJson::array();
  for (const Rat& x : d.breakpoints) bp.push_back(rat_to_double(x));
  for (const Rat& s : d.slopes) sl.push_back(rat_to_double(s));
  j["breakpoints"] = std::move(bp);
  j["slopes"] = std::move(sl);
  return j;
}

}  // namespace inclab
