// inclab: command-line front end.
//
// Subcommands: gen, verify, count, bound, clique, sheaf, exhaust, uniformize,
// branching, sweep. Exit codes: 0 success, 2 validation error, 3 structured
// pipeline failure. Outputs are byte-stable for identical inputs and seeds,
// and every JSON report embeds the tool version, resolved parameters, and
// input digests.

#include "incidence_lab/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

using namespace inclab;
namespace fs = std::filesystem;

namespace {

int logLevel() {
  const char* env = std::getenv("INCIDENCE_LAB_LOG");
  if (!env) return 1;
  const std::string v = env;
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void logInfo(const std::string& msg) {
  if (logLevel() >= 1) std::cerr << "[inclab] " << msg << "\n";
}

OrderedJson report_header(const std::string& command, const OrderedJson& params,
                          const std::vector<std::string>& inputs) {
  OrderedJson j;
  j["tool"] = "inclab";
  j["version"] = kVersion;
  j["command"] = command;
  j["params"] = params;
  OrderedJson digests = OrderedJson::object();
  for (const std::string& path : inputs) digests[path] = file_digest(path);
  j["input_digests"] = std::move(digests);
  return j;
}

void emit(const std::string& outPath, const OrderedJson& j) {
  const std::string text = j.dump(2) + "\n";
  if (outPath.empty() || outPath == "-")
    std::cout << text;
  else
    write_file(outPath, text);
}

PipelineParams params_from_json(const std::string& path) {
  PipelineParams p;
  if (path.empty()) return p;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read params file " + path);
  OrderedJson j = OrderedJson::parse(in);
  if (j.contains("eps")) p.eps = j["eps"].get<double>();
  if (j.contains("H")) p.H = j["H"].get<int>();
  if (j.contains("n_max")) p.nMax = j["n_max"].get<int>();
  if (j.contains("floor_exp")) p.floorExp = j["floor_exp"].get<double>();
  if (j.contains("c_prime")) p.Cprime = j["c_prime"].get<double>();
  return p;
}

OrderedJson params_json(const PipelineParams& p, double s, double t, double u) {
  OrderedJson j;
  j["s"] = s;
  j["t"] = t;
  j["u"] = u;
  j["eps"] = p.eps;
  j["H"] = p.H;
  j["n_max"] = p.nMax;
  if (!std::isnan(p.floorExp)) j["floor_exp"] = p.floorExp;
  j["c_prime"] = p.Cprime;
  return j;
}

// experiment spec file: JSON object whose keys mirror the long flags
// (s, t, u, theta, eps, points, tubes, m, seeds, ...); explicit flags win
struct SpecFile {
  OrderedJson j = OrderedJson::object();

  static SpecFile load(const std::string& path) {
    SpecFile s;
    if (path.empty()) return s;
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read spec file " + path);
    s.j = OrderedJson::parse(in);
    return s;
  }

  template <typename T>
  void fill(const CLI::App* sub, const std::string& flag, const std::string& key, T& target) const {
    if (sub->count(flag) == 0 && j.contains(key)) target = j[key].get<T>();
  }
};

struct LoadedConfig {
  CellFamily P;
  DualCellFamily L;
};

LoadedConfig load_config(const std::string& pointsPath, const std::string& tubesPath,
                         Band band = Band::UnitSquare) {
  const ParsedFamily pf = load_family(pointsPath, band);
  if (pf.isDual) throw std::runtime_error(pointsPath + ": expected kind=cell");
  const ParsedFamily tf = load_family(tubesPath);
  if (!tf.isDual) throw std::runtime_error(tubesPath + ": expected kind=dual");
  if (!(pf.cells.scale() == tf.duals.scale()))
    throw std::runtime_error("scale mismatch between " + pointsPath + " and " + tubesPath);
  return {pf.cells, tf.duals};
}

void stream_trace(const CliqueReport& rep) {
  for (const TraceEntry& e : rep.trace)
    std::cerr << "[trace] " << e.stage << ": " << e.detail << " (" << e.before << " -> " << e.after
              << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"delta-discretized point-line incidence laboratory"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate configurations");
  std::string genKind = "sheaf";
  double gS = 1.0, gT = 1.0;
  int gM = 10, gH = 1;
  std::uint64_t gSeed = 0;
  bool gSingle = false, gNoSeed = false;
  i64 gCount = 100;
  std::string gOut = "out";
  gen->add_option("kind", genKind, "sheaf | cantor | cantor-tubes | random | random-tubes")
      ->required();
  gen->add_option("--s", gS, "point exponent");
  gen->add_option("--t", gT, "tube exponent");
  gen->add_option("--m", gM, "scale exponent (delta = 2^-m)");
  gen->add_option("--H", gH, "block size");
  gen->add_option("--seed", gSeed, "seed");
  gen->add_flag("--single", gSingle, "sheaf: force a single clique");
  gen->add_flag("--no-seed", gNoSeed, "cantor: even (unseeded) child choice");
  gen->add_option("--count", gCount, "random: family size");
  gen->add_option("--out", gOut, "output directory (sheaf) or file prefix");

  // ---- verify ----
  auto* verify = app.add_subcommand("verify", "non-concentration report for a family");
  std::string vFamily, vOut;
  double vS = 1.0;
  bool vDeltaS = false;
  verify->add_option("--family", vFamily, "family file")->required();
  verify->add_option("--s", vS, "exponent");
  verify->add_flag("--delta-s", vDeltaS, "use the size-normalized variant");
  verify->add_option("--out", vOut, "report path (default stdout)");

  // ---- count ----
  auto* count = app.add_subcommand("count", "incidence count");
  std::string cPoints, cTubes, cCsv, cOut;
  bool cBrute = false;
  count->add_option("--points", cPoints)->required();
  count->add_option("--tubes", cTubes)->required();
  count->add_option("--per-tube", cCsv, "per-tube CSV path");
  count->add_flag("--brute", cBrute, "use the quadratic oracle");
  count->add_option("--out", cOut, "JSON report path");

  // ---- bound ----
  auto* bound = app.add_subcommand("bound", "incidence inequality evaluation");
  std::string bPoints, bTubes, bOut;
  double bS = 1.0, bT = 1.0, bEps = 0.05, bKp = -1, bKl = -1;
  bound->add_option("--points", bPoints)->required();
  bound->add_option("--tubes", bTubes)->required();
  bound->add_option("--s", bS);
  bound->add_option("--t", bT);
  bound->add_option("--eps", bEps);
  bound->add_option("--kp", bKp, "point constant (measured when omitted)");
  bound->add_option("--kl", bKl, "tube constant (measured when omitted)");
  bound->add_option("--out", bOut);

  // ---- clique / exhaust ----
  auto* clique = app.add_subcommand("clique", "extract a clique");
  auto* exhaust = app.add_subcommand("exhaust", "exhaust cliques");
  std::string qPoints, qTubes, qOut, qParams, qSpec;
  double qS = 1.0, qT = 1.0, qU = 1.0;
  bool qTrace = false;
  for (CLI::App* sub : {clique, exhaust}) {
    sub->add_option("--points", qPoints);
    sub->add_option("--tubes", qTubes);
    sub->add_option("--s", qS);
    sub->add_option("--t", qT);
    sub->add_option("--u", qU);
    sub->add_option("--params", qParams, "JSON overrides (eps, H, n_max, floor_exp, c_prime)");
    sub->add_option("--spec", qSpec, "experiment spec file; flags override its fields");
    sub->add_option("--out", qOut);
    sub->add_flag("--trace", qTrace, "stream stage summaries to stderr");
  }

  // ---- sheaf ----
  auto* sheaf = app.add_subcommand("sheaf", "recover the sheaf rectangle of a clique");
  std::string rPoints, rTubes, rOut;
  double rTheta = 0.5, rS = 1.0, rT = 1.0, rCp = 4.0;
  sheaf->add_option("--points", rPoints)->required();
  sheaf->add_option("--tubes", rTubes)->required();
  sheaf->add_option("--theta", rTheta)->required();
  sheaf->add_option("--s", rS);
  sheaf->add_option("--t", rT);
  sheaf->add_option("--c-prime", rCp);
  sheaf->add_option("--out", rOut);

  // ---- uniformize / branching ----
  auto* unif = app.add_subcommand("uniformize", "extract a uniform subset");
  std::string uFamily, uOut, uReport;
  int uH = 1;
  unif->add_option("--family", uFamily)->required();
  unif->add_option("--H", uH);
  unif->add_option("--out", uOut, "output family file");
  unif->add_option("--report", uReport, "JSON report path");

  auto* branch = app.add_subcommand("branching", "branching profile and slope decomposition");
  std::string brFamily, brCsv, brOut;
  int brH = 1;
  branch->add_option("--family", brFamily)->required();
  branch->add_option("--H", brH);
  branch->add_option("--csv", brCsv, "profile CSV path");
  branch->add_option("--out", brOut, "JSON report path");

  // ---- sweep ----
  auto* sweep = app.add_subcommand("sweep", "exponent fit over m x seeds");
  std::vector<int> swM{8, 10, 12};
  std::vector<std::uint64_t> swSeeds{1};
  double swS = 1.0, swT = 1.0;
  int swJobs = 1;
  std::string swCsv, swOut;
  sweep->add_option("--m", swM, "scale exponents")->delimiter(',');
  sweep->add_option("--seeds", swSeeds, "seeds")->delimiter(',');
  sweep->add_option("--s", swS);
  sweep->add_option("--t", swT);
  sweep->add_option("--jobs", swJobs, "parallel workers");
  sweep->add_option("--csv", swCsv, "per-point CSV path");
  sweep->add_option("--out", swOut);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      OrderedJson pj;
      pj["kind"] = genKind;
      pj["s"] = gS;
      pj["t"] = gT;
      pj["m"] = gM;
      pj["H"] = gH;
      pj["seed"] = gSeed;
      if (genKind == "sheaf") {
        const SheafConfig cfg = sheaf_config(gS, gT, gM, gSeed, gSingle);
        fs::create_directories(gOut);
        write_file(gOut + "/points.txt", family_to_text(cfg.P));
        write_file(gOut + "/tubes.txt", family_to_text(cfg.L));
        OrderedJson labels;
        labels["cell_labels"] = cfg.cellLabel;
        labels["tube_labels"] = cfg.tubeLabel;
        labels["num_cliques"] = cfg.numCliques;
        labels["delta_exp"] = cfg.deltaExp;
        write_file(gOut + "/labels.json", labels.dump(2) + "\n");
        OrderedJson meta = report_header("gen", pj, {});
        meta["num_cliques"] = cfg.numCliques;
        meta["delta_exp"] = cfg.deltaExp;
        meta["points"] = cfg.P.size();
        meta["tubes"] = cfg.L.size();
        meta["measured_k_p"] = cfg.measuredKP;
        meta["measured_k_l"] = cfg.measuredKL;
        write_file(gOut + "/meta.json", meta.dump(2) + "\n");
        logInfo("sheaf config written to " + gOut);
      } else if (genKind == "cantor") {
        const CellFamily f =
            cantor_set(gM, gS, gH, gNoSeed ? std::nullopt : std::optional<std::uint64_t>(gSeed));
        write_file(gOut, family_to_text(f));
        logInfo("katz-tao constant at s: " +
                std::to_string(katz_tao_constant(f, gS).bestConstant));
      } else if (genKind == "cantor-tubes") {
        const DualCellFamily f =
            cantor_tubes(gM, gT, gH, gNoSeed ? std::nullopt : std::optional<std::uint64_t>(gSeed));
        write_file(gOut, family_to_text(f));
      } else if (genKind == "random") {
        write_file(gOut, family_to_text(random_family(gM, gCount, gSeed)));
      } else if (genKind == "random-tubes") {
        write_file(gOut, family_to_text(random_tubes(gM, gCount, gSeed)));
      } else {
        std::cerr << "unknown generator kind: " << genKind << "\n";
        return 2;
      }
      return 0;
    }

    if (*verify) {
      const ParsedFamily f = load_family(vFamily);
      OrderedJson pj;
      pj["s"] = vS;
      pj["variant"] = vDeltaS ? "delta-s" : "katz-tao";
      const KTReport rep = f.isDual ? (vDeltaS ? delta_s_constant(f.duals, vS)
                                               : katz_tao_constant(f.duals, vS))
                                    : (vDeltaS ? delta_s_constant(f.cells, vS)
                                               : katz_tao_constant(f.cells, vS));
      OrderedJson j = report_header("verify", pj, {vFamily});
      j["report"] = json_kt_report(rep);
      emit(vOut, j);
      return 0;
    }

    if (*count) {
      const LoadedConfig cfg = load_config(cPoints, cTubes);
      const IncidenceSet inc = cBrute ? incidences_brute(cfg.P, cfg.L) : incidences(cfg.P, cfg.L);
      if (!cCsv.empty()) write_file(cCsv, per_tube_csv(cfg.L, inc));
      if (!cOut.empty()) {
        OrderedJson pj;
        pj["brute"] = cBrute;
        OrderedJson j = report_header("count", pj, {cPoints, cTubes});
        j["incidences"] = inc.count();
        j["points"] = cfg.P.size();
        j["tubes"] = cfg.L.size();
        emit(cOut, j);
      }
      std::cout << inc.count() << "\n";
      return 0;
    }

    if (*bound) {
      const LoadedConfig cfg = load_config(bPoints, bTubes);
      OrderedJson pj;
      pj["s"] = bS;
      pj["t"] = bT;
      pj["eps"] = bEps;
      const BoundReport rep =
          fu_ren_check(cfg.P, cfg.L, bS, bT, bEps,
                       bKp > 0 ? std::optional<double>(bKp) : std::nullopt,
                       bKl > 0 ? std::optional<double>(bKl) : std::nullopt);
      OrderedJson j = report_header("bound", pj, {bPoints, bTubes});
      j["report"] = json_bound_report(rep);
      j["f_st"] = fu_ren_exponent(bS, bT);
      emit(bOut, j);
      return 0;
    }

    if (*clique || *exhaust) {
      CLI::App* sub = *clique ? clique : exhaust;
      const SpecFile spec = SpecFile::load(qSpec);
      spec.fill(sub, "--points", "points", qPoints);
      spec.fill(sub, "--tubes", "tubes", qTubes);
      spec.fill(sub, "--s", "s", qS);
      spec.fill(sub, "--t", "t", qT);
      spec.fill(sub, "--u", "u", qU);
      if (qPoints.empty() || qTubes.empty()) {
        std::cerr << "validation error: --points/--tubes required (flag or spec file)\n";
        return 2;
      }
      const LoadedConfig cfg = load_config(qPoints, qTubes);
      PipelineParams params = params_from_json(qParams);
      if (spec.j.contains("eps")) params.eps = spec.j["eps"].get<double>();
      if (spec.j.contains("H")) params.H = spec.j["H"].get<int>();
      if (spec.j.contains("n_max")) params.nMax = spec.j["n_max"].get<int>();
      try {
        if (*clique) {
          const CliqueReport rep = extract_clique(cfg.P, cfg.L, qS, qT, qU, params);
          if (qTrace) stream_trace(rep);
          OrderedJson j = report_header("clique", params_json(params, qS, qT, qU),
                                        {qPoints, qTubes});
          j["report"] = json_clique_report(rep);
          emit(qOut, j);
        } else {
          const ExhaustResult res = exhaust_cliques(cfg.P, cfg.L, qS, qT, qU, params);
          OrderedJson j = report_header("exhaust", params_json(params, qS, qT, qU),
                                        {qPoints, qTubes});
          j["stop_reason"] = res.stopReason;
          j["total_pairs"] = res.totalPairs;
          j["target_pairs"] = res.targetPairs;
          j["residual_incidences"] = res.residualIncidences;
          OrderedJson arr = OrderedJson::array();
          for (const CliqueReport& rep : res.reports) {
            if (qTrace) stream_trace(rep);
            arr.push_back(json_clique_report(rep));
          }
          j["cliques"] = std::move(arr);
          emit(qOut, j);
        }
      } catch (const PipelineError& e) {
        std::cerr << "pipeline failure: " << e.what() << "\n";
        return 3;
      }
      return 0;
    }

    if (*sheaf) {
      const LoadedConfig cfg = load_config(rPoints, rTubes);
      OrderedJson pj;
      pj["theta"] = rTheta;
      pj["s"] = rS;
      pj["t"] = rT;
      pj["c_prime"] = rCp;
      try {
        const RectangleReport rep = find_sheaf_rectangle(cfg.P, cfg.L, rTheta, rS, rT, rCp);
        OrderedJson j = report_header("sheaf", pj, {rPoints, rTubes});
        j["report"] = json_rectangle_report(rep);
        emit(rOut, j);
      } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << "\n";
        return 3;
      }
      return 0;
    }

    if (*unif) {
      const ParsedFamily f = load_family(uFamily);
      if (f.isDual) throw std::runtime_error("uniformize expects a cell family");
      const UniformFamily u = uniformize(f.cells, uH);
      if (!uOut.empty()) write_file(uOut, family_to_text(u.family));
      if (!uReport.empty()) {
        OrderedJson pj;
        pj["H"] = uH;
        OrderedJson j = report_header("uniformize", pj, {uFamily});
        j["retention"] = u.retention;
        j["log2_branching"] = u.log2N;
        emit(uReport, j);
      }
      logInfo("retention " + std::to_string(u.retention));
      return 0;
    }

    if (*branch) {
      const ParsedFamily f = load_family(brFamily);
      if (f.isDual) throw std::runtime_error("branching expects a cell family");
      const UniformFamily u = uniformize(f.cells, brH);
      const BranchingProfile p = branching_profile(u);
      if (!brCsv.empty()) write_file(brCsv, branching_csv(p));
      OrderedJson pj;
      pj["H"] = brH;
      OrderedJson j = report_header("branching", pj, {brFamily});
      j["m_prime"] = p.mPrime;
      j["retention"] = u.retention;
      j["decomposition"] = json_decomposition(p.decomposition);
      emit(brOut, j);
      return 0;
    }

    if (*sweep) {
      struct Point {
        int m;
        std::uint64_t seed;
        i64 incidences = 0;
        std::size_t points = 0, tubes = 0;
        double kP = 0, kL = 0;
      };
      std::vector<Point> pts;
      for (int m : swM)
        for (std::uint64_t seed : swSeeds) pts.push_back({m, seed});
      std::mutex mu;
      std::size_t next = 0;
      auto worker = [&]() {
        while (true) {
          std::size_t mine;
          {
            std::lock_guard lk(mu);
            if (next >= pts.size()) return;
            mine = next++;
          }
          Point& p = pts[mine];
          const SheafConfig cfg = sheaf_config(swS, swT, p.m, p.seed);
          p.incidences = incidences(cfg.P, cfg.L).count();
          p.points = cfg.P.size();
          p.tubes = cfg.L.size();
          p.kP = cfg.measuredKP;
          p.kL = cfg.measuredKL;
        }
      };
      std::vector<std::thread> threads;
      for (int i = 0; i < std::max(1, swJobs); ++i) threads.emplace_back(worker);
      for (auto& th : threads) th.join();

      // aggregate per m (mean log2 incidences across seeds), then fit
      std::map<int, std::pair<double, int>> agg;
      for (const Point& p : pts) {
        agg[p.m].first += std::log2(double(p.incidences));
        agg[p.m].second += 1;
      }
      std::vector<double> xs, ys;
      for (const auto& [m, acc] : agg) {
        xs.push_back(double(m));
        ys.push_back(acc.first / acc.second);
      }
      double slope = 0;
      if (xs.size() >= 2) {
        double mx = 0, my = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
        mx /= double(xs.size());
        my /= double(xs.size());
        double num = 0, den = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
          num += (xs[i] - mx) * (ys[i] - my);
          den += (xs[i] - mx) * (xs[i] - mx);
        }
        slope = num / den;
      }
      if (!swCsv.empty()) {
        std::ostringstream os;
        os << "m,seed,incidences,log2_incidences,points,tubes,k_p,k_l\n";
        for (const Point& p : pts) {
          char buf[40];
          std::snprintf(buf, sizeof buf, "%.17g", std::log2(double(p.incidences)));
          os << p.m << "," << p.seed << "," << p.incidences << "," << buf << "," << p.points << ","
             << p.tubes << "," << p.kP << "," << p.kL << "\n";
        }
        write_file(swCsv, os.str());
      }
      OrderedJson pj;
      pj["s"] = swS;
      pj["t"] = swT;
      pj["m"] = swM;
      pj["seeds"] = swSeeds;
      OrderedJson j = report_header("sweep", pj, {});
      j["fitted_exponent"] = slope;
      j["predicted_exponent"] = fu_ren_exponent(swS, swT);
      emit(swOut, j);
      return 0;
    }
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
