// Acceptance runner: one PASS/FAIL line per criterion, full ensemble sizes.
// Usage: acceptance [criterion numbers...]   (default: all)

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "oracles.hpp"
#include "qfc/adaptive.hpp"
#include "qfc/lqg.hpp"
#include "qfc/scenario.hpp"

using namespace qfc;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [fail]");
  }
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::string fmtSe(const Scalar& s) {
  return fmt(s.value) + (s.stderr_ ? " +- " + fmt(*s.stderr_, 2) : "");
}

unsigned workers() { return std::max(1u, std::thread::hardware_concurrency()); }

using Clock = std::chrono::steady_clock;

double seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

RunConfig exampleConfig(const std::string& name) {
  return parseConfig((fs::path(QFC_SOURCE_DIR) / "configs" / (name + ".json")).string());
}

// 1: unconditional consistency of the qubit ensemble.
Verdict criterion1() {
  const RunConfig c = parseConfigText(
      R"({"scenario": "sme-vs-lindblad", "seed": 101, "parameters": {"trajectories": 5000}})");
  RuntimeOptions rt;
  rt.workers = workers();
  const auto t0 = Clock::now();
  const ScenarioResult r = runScenario(c, rt);
  const double wall = seconds(t0);
  Verdict v;
  const Scalar& td = r.scalar("finalTraceDistance");
  v.require(r.scalar("gammaT").value == 2.0, "gamma t = " + fmt(r.scalar("gammaT").value));
  v.require(td.value <= 0.02, "trace distance at gamma t = 2: " + fmtSe(td) + " (<= 0.02)");
  v.require(wall <= 60.0, "runtime " + fmt(wall, 3) + " s (<= 60)");
  return v;
}

// 2: SME on a 60-level Fock space against the Kalman-Bucy filter.
Verdict criterion2() {
  const RunConfig c = parseConfigText(
      R"({"scenario": "filter-equivalence", "seed": 102, "parameters": {"nMax": 60}})");
  RuntimeOptions rt;
  rt.workers = workers();
  const auto t0 = Clock::now();
  const ScenarioResult r = runScenario(c, rt);
  const double wall = seconds(t0);
  Verdict v;
  for (const char* n : {"meanX", "meanP", "varX", "varP"}) {
    const double e = r.scalar(std::string("relRms_") + n).value;
    v.require(e <= 0.02, std::string(n) + " rel. RMS " + fmt(e, 3));
  }
  v.detail += "; covXP rel. RMS " + fmt(r.scalar("relRms_covXP").value, 3) + "; window t >= " +
              fmt(r.scalar("windowStart").value, 4) + "; leak " + fmt(r.scalar("maxLeak").value, 2);
  v.require(wall <= 300.0, "runtime " + fmt(wall, 3) + " s (<= 300)");
  return v;
}

// 3 and 4 share one run.
struct PurificationRun {
  ScenarioResult result;
  double wall = 0.0;
};

const PurificationRun& purificationRun() {
  static const PurificationRun run = [] {
    const RunConfig c = parseConfigText(
        R"({"scenario": "rapid-purification", "seed": 103, "parameters": {"trajectories": 10000}})");
    RuntimeOptions rt;
    rt.workers = workers();
    const auto t0 = Clock::now();
    PurificationRun p;
    p.result = runScenario(c, rt);
    p.wall = seconds(t0);
    return p;
  }();
  return run;
}

Verdict criterion3() {
  const PurificationRun& p = purificationRun();
  const ScenarioResult& r = p.result;
  Verdict v;
  const Scalar& ratio = r.scalar("entropyExponentRatio");
  v.require(ratio.value >= 1.8 && ratio.value <= 2.2,
            "entropy exponent ratio " + fmtSe(ratio) + " in [1.8, 2.2] (fit window " +
                fmt(r.scalar("fitStart").value) + ".." + fmt(r.scalar("fitEnd").value) + ")");
  v.detail += "; exponents fixed " + fmtSe(r.scalar("entropyExponent_fixed")) + ", adaptive " +
              fmtSe(r.scalar("entropyExponent_adaptive")) + "; impurity ratio " +
              fmtSe(r.scalar("impurityExponentRatio"));
  v.require(p.wall <= 300.0, "runtime " + fmt(p.wall, 3) + " s (<= 300)");
  return v;
}

Verdict criterion4() {
  const ScenarioResult& r = purificationRun().result;
  Verdict v;
  const Scalar& ratio = r.scalar("hittingTimeRatio");
  v.require(ratio.value >= 1.7 && ratio.value <= 2.3,
            "hitting-time ratio to purity " + fmt(r.scalar("targetPurity").value) + ": " + fmtSe(ratio) +
                " in [1.7, 2.3]");
  v.detail += "; mean times fixed " + fmtSe(r.scalar("hittingTime_fixed")) + ", adaptive " +
              fmtSe(r.scalar("hittingTime_adaptive"));
  return v;
}

// 5: Dolinar receiver at 1e5 trials.
Verdict criterion5() {
  const RunConfig c = parseConfigText(
      R"({"scenario": "dolinar", "seed": 105, "parameters": {"alphaSquared": [0.2, 1.0], "trials": 100000}})");
  RuntimeOptions rt;
  rt.workers = workers();
  const ScenarioResult r = runScenario(c, rt);
  Verdict v;
  for (const char* tag : {"0.2", "1"}) {
    const std::string t = tag;
    const double z = r.scalar("zScore_" + t).value;
    v.require(std::abs(z) <= 3.0, "|a|^2 = " + t + ": error " + fmtSe(r.scalar("errorRate_" + t)) +
                                      " vs Helstrom " + fmt(r.scalar("helstrom_" + t).value) + " (z = " +
                                      fmt(z, 3) + ")");
  }
  const double z = r.scalar("static_advantageZ").value;
  v.require(z >= 3.0, "static receiver at |a|^2 = 0.5: " + fmtSe(r.scalar("static_errorRate")) +
                          " vs Dolinar " + fmtSe(r.scalar("static_dolinarErrorRate")) + " (z = " + fmt(z, 3) +
                          " >= 3)");
  return v;
}

// 6: resonator under LQG feedback plus the measurement-strength optimum.
Verdict criterion6() {
  Verdict v;
  RuntimeOptions rt;
  rt.workers = workers();
  const RunConfig scanCfg = parseConfigText(R"({"scenario": "gamma-scan", "seed": 106, "parameters": {}})");
  const ScenarioResult scan = runScenario(scanCfg, rt);  // throws MinimumOnBoundary if not interior
  const double lo = scan.scalar("edgeRatio_lower").value, hi = scan.scalar("edgeRatio_upper").value;
  v.require(lo > 10.0 && hi > 10.0, "interior minimum at gamma* = " + fmt(scan.scalar("gammaStar").value) +
                                        " (edge/min " + fmt(lo, 3) + ", " + fmt(hi, 3) + ")");

  const RunConfig c = parseConfigText(
      R"({"scenario": "resonator-cooling", "seed": 106, "parameters": {"trajectories": 2000, "compareTrajectories": 300}})");
  const ScenarioResult r = runScenario(c, rt);
  const Scalar& e = r.scalar("energyVsPredictedCost");
  v.require(std::abs(e.value) <= 0.05, "<H> " + fmtSe(r.scalar("steadyEnergy")) + " vs predicted cost " +
                                           fmt(r.scalar("predictedSteadyCost").value) + ": " +
                                           fmt(100 * e.value, 3) + "%");
  v.detail += "; <H> vs predicted state cost " + fmt(100 * r.scalar("energyVsPredictedState").value, 3) +
              "%; cost vs predicted cost " + fmt(100 * r.scalar("costVsPredictedCost").value, 3) + "%";
  for (const char* tag : {"0.1", "10"}) {
    const std::string t = tag;
    const double zc = r.scalar("compare_x" + t + "_advantageZ").value;
    const double ze = r.scalar("compare_x" + t + "_energyAdvantageZ").value;
    v.require(zc >= 3.0 && ze >= 3.0, "gamma* beats " + t + " gamma*: <H> " +
                                          fmtSe(r.scalar("compare_x" + t + "_energy")) + " (z " + fmt(ze, 3) +
                                          "), cost z " + fmt(zc, 3));
  }
  v.require(r.scalar("maxLeak").value <= 1e-4, "leak " + fmt(r.scalar("maxLeak").value, 2));
  return v;
}

// 7: atom in the switched lattice.
Verdict criterion7() {
  const RunConfig c = parseConfigText(
      R"({"scenario": "atom-cooling", "seed": 107, "parameters": {"trajectories": 400}})");
  RuntimeOptions rt;
  rt.workers = workers();
  const auto t0 = Clock::now();
  const ScenarioResult r = runScenario(c, rt);
  const double wall = seconds(t0);
  Verdict v;
  v.require(std::abs(r.scalar("splitZ").value) <= 3.0,
            "ground " + fmtSe(r.scalar("groundFraction")) + ", first excited " +
                fmtSe(r.scalar("excitedFraction")) + ", other " + fmt(r.scalar("otherFraction").value, 3) +
                " (split z = " + fmt(r.scalar("splitZ").value, 3) + ")");
  v.require(r.scalar("parityDriftZ").value <= 3.0,
            "parity " + fmt(r.scalar("initialParity").value, 3) + ", max drift " +
                fmt(r.scalar("parityDriftMax").value, 3) + " (" + fmt(r.scalar("parityDriftZ").value, 3) + " se)");
  v.require(r.scalar("medianFinalPurity").value >= 0.95,
            "median final purity " + fmt(r.scalar("medianFinalPurity").value, 6));
  v.require(r.scalar("maxLeak").value <= 1e-4, "leak " + fmt(r.scalar("maxLeak").value, 2));
  v.require(wall <= 900.0, "runtime " + fmt(wall, 3) + " s (<= 900)");
  return v;
}

// 8: oracle suites and dt-halving drift checks.
Verdict criterion8() {
  Verdict v;
  double worstResidual = 0.0, worstOde = 0.0;
  for (const auto& c : oracle::randomCareInstances(100, 8008)) {
    const Eigen::MatrixXd P = solveCARE(c.A, c.B, c.Q, c.R);
    worstResidual = std::max(worstResidual, careResidual(c.A, c.B, c.Q, c.R, P));
    worstOde = std::max(worstOde, (P - oracle::riccatiOdeLimit(c.A, c.B, c.Q, c.R)).cwiseAbs().maxCoeff());
  }
  v.require(worstResidual <= 1e-8 && worstOde <= 1e-6,
            "CARE x100: residual " + fmt(worstResidual, 2) + ", vs Riccati ODE " + fmt(worstOde, 2));

  double worstHelstrom = 0.0;
  for (double n : {0.2, 0.5, 1.0}) {
    for (double p1 : {0.5, 0.3}) {
      const auto a = oracle::coherentVector(40, 0.0), b = oracle::coherentVector(40, std::sqrt(n));
      const double h = helstromBound(DensityMatrix::pure(a), DensityMatrix::pure(b), p1);
      worstHelstrom = std::max(worstHelstrom, std::abs(h - oracle::bruteForceDiscriminationError(a, b, p1)));
    }
  }
  v.require(worstHelstrom <= 1e-6, "Helstrom vs measurement sweep " + fmt(worstHelstrom, 2));

  {
    const double dt = 1e-3;
    const std::size_t n = 1000000;
    NoiseStream s(2024, dt), t(2025, dt), again(2024, dt);
    const auto a = wienerIncrements(s, n), b = wienerIncrements(t, n), c = wienerIncrements(again, n);
    const oracle::Moments m = oracle::moments(a);
    const double rho = oracle::correlation(a, b);
    NoiseStream coarse(7, dt, 2), fine(7, dt / 2, 1);
    double coupling = 0.0;
    for (int i = 0; i < 10000; ++i) coupling = std::max(coupling, std::abs(coarse.next() - fine.next() - fine.next()));
    const bool ok = std::abs(m.mean) <= 4.0 * std::sqrt(dt / n) && std::abs(m.var / dt - 1.0) <= 0.02 &&
                    std::abs(rho) <= 0.01 && a == c && coupling <= 1e-14;
    v.require(ok, "Wiener stream: mean " + fmt(m.mean, 2) + ", var/dt " + fmt(m.var / dt, 5) + ", cross-seed corr " +
                      fmt(rho, 2) + ", replay " + (a == c ? "exact" : "differs") + ", subdivision " + fmt(coupling, 2));
  }

  for (const auto& name : scenarioNames()) {
    RuntimeOptions rt;
    rt.workers = workers();
    const DriftCheck d = dtHalvingCheck(exampleConfig(name), rt);
    v.require(d.pass, "dt/2 " + name + " " + d.observable + ": drift " + fmt(d.drift, 2) + " tol " + fmt(d.tolerance, 2));
  }
  return v;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    files[e.path().filename().string()] = s.str();
  }
  return files;
}

// 9: byte-identical outputs for every example config across worker counts.
Verdict criterion9() {
  Verdict v;
  const unsigned many = std::max(4u, workers());
  const fs::path root = fs::temp_directory_path() / "qfc_acceptance_determinism";
  fs::remove_all(root);
  for (const auto& name : scenarioNames()) {
    const RunConfig c = exampleConfig(name);
    RuntimeOptions one, w;
    w.workers = many;
    writeResults(runScenario(c, one), (root / name / "w1").string());
    writeResults(runScenario(c, w), (root / name / "wN").string());
    const auto a = snapshot(root / name / "w1"), b = snapshot(root / name / "wN");
    v.require(a == b, name + " (" + std::to_string(a.size()) + " files, 1 vs " + std::to_string(many) + " workers)");
  }
  fs::remove_all(root);
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Verdict()>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto& [id, run] : criteria) {
    if (!selected.empty() && !selected.count(id)) continue;
    const auto t0 = Clock::now();
    Verdict v;
    try {
      v = run();
    } catch (const Error& e) {
      v.pass = false;
      v.detail = std::string("error ") + std::string(errorName(e.code())) + ": " + e.what();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("error: ") + e.what();
    }
    if (!v.pass) ++failures;
    std::printf("criterion %d: %s  %s  [%.0f s]\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str(), seconds(t0));
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
