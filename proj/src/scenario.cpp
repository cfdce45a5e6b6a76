#include "qfc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "qfc/adaptive.hpp"
#include "qfc/cooling.hpp"

namespace qfc {

using nlohmann::json;

const char* const kVersion = "1.0.0";

namespace {

// ---------------------------------------------------------------------------
// Parameter schemas

enum class FieldType { Number, Integer, Boolean, String, NumberArray, NumberOrKeyword };

struct Field {
  const char* key;
  FieldType type;
  json fallback;                // null: required
  const char* keyword = nullptr;  // NumberOrKeyword
};

const std::vector<std::string> kNames = {
    "sme-vs-lindblad", "filter-equivalence", "rapid-purification", "dolinar",
    "resonator-cooling", "atom-cooling", "gamma-scan",
};

const std::vector<Field>& schema(ScenarioKind kind) {
  using T = FieldType;
  static const std::vector<Field> sme = {
      {"omega", T::Number, 1.0},
      {"gamma", T::Number, 1.0},
      {"tFinal", T::Number, 2.0},
      {"dt", T::Number, 1e-3},
      {"trajectories", T::Integer, 5000},
      {"sampleEvery", T::Integer, 20},
      {"initialBloch", T::NumberArray, json::array({0.6, 0.0, 0.8})},
  };
  static const std::vector<Field> filter = {
      {"nMax", T::Integer, 60},
      {"mass", T::Number, 1.0},
      {"omega", T::Number, 1.0},
      {"gamma", T::Number, 1.0},
      {"tFinal", T::Number, 20.0},
      {"dt", T::Number, 1e-3},
      {"trajectories", T::Integer, 2},
      {"sampleEvery", T::Integer, 10},
      {"initialMean", T::NumberArray, json::array({1.5, 0.0})},
  };
  static const std::vector<Field> purification = {
      {"gamma", T::Number, 1.0},
      {"tFinal", T::Number, 24.0},  // long enough for every trajectory to hit the target
      {"fitStart", T::Number, 4.0},
      {"fitEnd", T::Number, 8.0},
      {"dt", T::Number, 2e-3},
      {"trajectories", T::Integer, 10000},
      {"sampleEvery", T::Integer, 10},
      {"targetPurity", T::Number, 0.99},
      {"feedbackRate", T::NumberOrKeyword, "infinite", "infinite"},
  };
  static const std::vector<Field> dolinar = {
      {"alphaSquared", T::NumberArray, json::array({0.2, 1.0})},
      {"trials", T::Integer, 100000},
      {"nSegments", T::Integer, 400},
      {"prior", T::Number, 0.5},
      {"staticAlphaSquared", T::Number, 0.5},
  };
  static const std::vector<Field> resonator = {
      {"nMax", T::Integer, 40},  // covers the squeezed conditional states at 10 gamma*
      {"mass", T::Number, 1.0},
      {"omega", T::Number, 1.0},
      {"gamma", T::NumberOrKeyword, "optimal", "optimal"},
      {"R", T::Number, 0.1},
      {"bathOccupation", T::Number, 5.0},
      {"bathCoupling", T::Number, 0.01},
      {"feedback", T::Boolean, true},
      {"tFinal", T::Number, 20.0},
      {"burnIn", T::Number, 5.0},
      {"dtScale", T::Number, 0.02},  // dt = dtScale / max(omega, gamma)
      {"trajectories", T::Integer, 2000},
      {"compareTrajectories", T::Integer, 300},
      {"compareFactors", T::NumberArray, json::array({0.1, 10.0})},
      {"gammaMin", T::Number, 1e-3},
      {"gammaMax", T::Number, 1e2},
      {"nGrid", T::Integer, 61},
  };
  static const std::vector<Field> atom = {
      {"vLow", T::Number, 20.0},
      {"vHigh", T::Number, 40.0},
      {"k", T::Number, 1.0},
      {"mass", T::Number, 1.0},
      {"nPoints", T::Integer, 64},
      {"gamma", T::Number, 16.0},
      {"switchHysteresis", T::Number, 0.05},
      {"levels", T::Integer, 32},
      {"initial", T::String, "superposition"},
      {"initialCount", T::Integer, 4},
      {"switching", T::Boolean, true},
      {"tFinal", T::Number, 40.0},
      {"dt", T::Number, 4e-3},
      {"trajectories", T::Integer, 400},
      {"sampleEvery", T::Integer, 25},
  };
  static const std::vector<Field> scan = {
      {"mass", T::Number, 1.0},
      {"omega", T::Number, 1.0},
      {"R", T::Number, 0.1},
      {"bathOccupation", T::Number, 5.0},
      {"bathCoupling", T::Number, 0.01},
      {"gammaMin", T::Number, 1e-3},
      {"gammaMax", T::Number, 1e2},
      {"nGrid", T::Integer, 61},
  };
  switch (kind) {
    case ScenarioKind::SmeVsLindblad: return sme;
    case ScenarioKind::FilterEquivalence: return filter;
    case ScenarioKind::RapidPurification: return purification;
    case ScenarioKind::Dolinar: return dolinar;
    case ScenarioKind::ResonatorCooling: return resonator;
    case ScenarioKind::AtomCooling: return atom;
    case ScenarioKind::GammaScan: return scan;
  }
  throw Error(ErrorCode::UnknownScenario, "unregistered scenario kind");
}

[[noreturn]] void badValue(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::InvalidValue, "parameter '" + key + "': " + what);
}

void checkType(const Field& f, const json& v) {
  const std::string key = f.key;
  switch (f.type) {
    case FieldType::Number:
      if (!v.is_number()) badValue(key, "expected a number");
      if (!std::isfinite(v.get<double>())) badValue(key, "must be finite");
      break;
    case FieldType::Integer:
      if (!v.is_number_integer()) badValue(key, "expected an integer");
      if (v.get<long long>() < 1) badValue(key, "must be >= 1");
      break;
    case FieldType::Boolean:
      if (!v.is_boolean()) badValue(key, "expected true or false");
      break;
    case FieldType::String:
      if (!v.is_string()) badValue(key, "expected a string");
      break;
    case FieldType::NumberArray:
      if (!v.is_array()) badValue(key, "expected an array of numbers");
      for (const auto& e : v) {
        if (!e.is_number()) badValue(key, "expected an array of numbers");
      }
      break;
    case FieldType::NumberOrKeyword:
      if (v.is_number()) break;
      if (!v.is_string() || v.get<std::string>() != f.keyword) {
        badValue(key, std::string("expected a number or \"") + f.keyword + "\"");
      }
      break;
  }
}

json withDefaults(ScenarioKind kind, const json& given) {
  if (!given.is_object()) throw Error(ErrorCode::InvalidValue, "'parameters' must be an object");
  const auto& fields = schema(kind);
  for (auto it = given.begin(); it != given.end(); ++it) {
    const bool known = std::any_of(fields.begin(), fields.end(), [&](const Field& f) { return it.key() == f.key; });
    if (!known) throw Error(ErrorCode::UnknownKey, "unknown parameter '" + it.key() + "'");
  }
  json out = json::object();
  for (const Field& f : fields) {
    if (given.contains(f.key)) {
      checkType(f, given.at(f.key));
      out[f.key] = given.at(f.key);
    } else if (f.fallback.is_null()) {
      throw Error(ErrorCode::MissingKey, std::string("missing parameter '") + f.key + "'");
    } else {
      out[f.key] = f.fallback;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Helpers

double num(const json& p, const char* key) { return p.at(key).get<double>(); }
std::size_t count(const json& p, const char* key) { return p.at(key).get<std::size_t>(); }
int integer(const json& p, const char* key) { return p.at(key).get<int>(); }

std::size_t trajectories(const json& p, const RuntimeOptions& rt) {
  return rt.trajectories.value_or(count(p, "trajectories"));
}

std::uint64_t masterSeed(const RunConfig& cfg, const RuntimeOptions& rt) { return rt.seed.value_or(cfg.seed); }

EnsembleOptions ensembleOptions(const json& p, const RuntimeOptions& rt) {
  EnsembleOptions o;
  o.workers = std::max(1u, rt.workers);
  o.sampleEvery = p.value("sampleEvery", std::size_t{1}) * static_cast<std::size_t>(rt.dtDivisor);
  o.pathSubdivision = rt.pathSubdivision;
  return o;
}

TrajectoryConfig trajectoryConfig(double dt, double tFinal, std::uint64_t seed, std::size_t n) {
  TrajectoryConfig c;
  c.dt = dt;
  c.tFinal = tFinal;
  c.seed = seed;
  c.nTrajectories = n;
  c.validate();
  const double steps = tFinal / dt;
  if (std::abs(steps - std::round(steps)) > 1e-6 * steps) {
    throw Error(ErrorCode::InvalidValue, "tFinal must be a whole number of steps");
  }
  return c;
}

Curve curveOf(const std::vector<double>& x, const CurveStats& s) { return {"time", x, s.mean, s.stderr_}; }

Curve plainCurve(const std::vector<double>& x, std::vector<double> y, std::string axis = "time") {
  std::vector<double> err(y.size(), 0.0);
  return {std::move(axis), x, std::move(y), std::move(err)};
}

Scalar scalar(double v, std::optional<double> se = std::nullopt, std::optional<double> tol = std::nullopt) {
  return {v, se, tol};
}

double traceProduct(const CMatrix& rho, const CMatrix& op) {
  return rho.cwiseProduct(op.transpose()).sum().real();
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ---------------------------------------------------------------------------
// sme-vs-lindblad

CMatrix lindbladRate(const CMatrix& rho, const CMatrix& H, const CMatrix& c, double hbar) {
  const Complex i(0.0, 1.0);
  return -i / hbar * (H * rho - rho * H) + c * rho * c.adjoint() -
         0.5 * (c.adjoint() * c * rho + rho * c.adjoint() * c);
}

ScenarioResult runSmeVsLindblad(const RunConfig& cfg, const RuntimeOptions& rt) {
  const json& p = cfg.parameters;
  const double omega = num(p, "omega"), gamma = num(p, "gamma");
  const double dt = num(p, "dt") / rt.dtDivisor;
  const auto b0 = p.at("initialBloch").get<std::vector<double>>();
  if (b0.size() != 3) badValue("initialBloch", "expected three components");
  const BlochVector r0{b0[0], b0[1], b0[2]};
  if (r0.length() > 1.0 + 1e-12) badValue("initialBloch", "length must be <= 1");
  const DensityMatrix rho0 = qubitFromBloch(r0);
  const PhysicalConstants constants;
  const ObservableOperator H(0.5 * constants.hbar * omega * pauliZ().matrix(), "H");
  const ObservableOperator X = pauliZ();

  const TrajectoryConfig tc = trajectoryConfig(dt, num(p, "tFinal"), masterSeed(cfg, rt), trajectories(p, rt));
  EnsembleSpec<DensityMatrix> spec;
  spec.initial = [&](std::size_t) { return rho0; };
  spec.step = [&](DensityMatrix& rho, double dW, double) {
    rho = smeStep(rho, H, X, gamma, dW, dt, constants).rho;
  };
  spec.observables = {
      {"x", [](const DensityMatrix& r) { return blochVector(r).x; }},
      {"y", [](const DensityMatrix& r) { return blochVector(r).y; }},
      {"z", [](const DensityMatrix& r) { return blochVector(r).z; }},
  };
  spec.finals = spec.observables;
  const EnsembleResult e = runEnsemble(spec, tc, ensembleOptions(p, rt));

  // Unconditional equation, RK4 with 10 substeps per output interval.
  const CMatrix c = 0.5 * std::sqrt(gamma) * X.matrix();
  CMatrix rho = rho0.matrix();
  std::vector<double> lx, ly, lz, dist;
  double t = 0.0;
  for (std::size_t s = 0; s < e.times.size(); ++s) {
    const double target = e.times[s];
    const int n = s == 0 ? 0 : 10;
    const double h = n ? (target - t) / n : 0.0;
    for (int k = 0; k < n; ++k) {
      const CMatrix k1 = lindbladRate(rho, H.matrix(), c, constants.hbar);
      const CMatrix k2 = lindbladRate(rho + 0.5 * h * k1, H.matrix(), c, constants.hbar);
      const CMatrix k3 = lindbladRate(rho + 0.5 * h * k2, H.matrix(), c, constants.hbar);
      const CMatrix k4 = lindbladRate(rho + h * k3, H.matrix(), c, constants.hbar);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    t = target;
    const BlochVector bl = blochVector(DensityMatrix::unchecked(rho));
    lx.push_back(bl.x);
    ly.push_back(bl.y);
    lz.push_back(bl.z);
    const BlochVector bm{e.curve("x").mean[s], e.curve("y").mean[s], e.curve("z").mean[s]};
    dist.push_back(traceDistance(qubitFromBloch(bm).matrix(), rho));
  }

  ScenarioResult res;
  const auto& T = e.times;
  res.curves["bloch_x"] = curveOf(T, e.curve("x"));
  res.curves["bloch_y"] = curveOf(T, e.curve("y"));
  res.curves["bloch_z"] = curveOf(T, e.curve("z"));
  res.curves["lindblad_x"] = plainCurve(T, lx);
  res.curves["lindblad_y"] = plainCurve(T, ly);
  res.curves["lindblad_z"] = plainCurve(T, lz);
  res.curves["trace_distance"] = plainCurve(T, dist);
  const std::size_t last = T.size() - 1;
  double se2 = 0.0;
  for (const char* k : {"x", "y", "z"}) se2 += std::pow(e.curve(k).stderr_[last], 2);
  res.scalars["finalTraceDistance"] = scalar(dist.back(), 0.5 * std::sqrt(se2), 0.02);
  res.scalars["maxTraceDistance"] = scalar(*std::max_element(dist.begin(), dist.end()), std::nullopt, 0.02);
  res.scalars["gammaT"] = scalar(gamma * T.back());
  res.perTrajectory["x"] = e.final("x");
  res.perTrajectory["y"] = e.final("y");
  res.perTrajectory["z"] = e.final("z");
  return res;
}

// ---------------------------------------------------------------------------
// filter-equivalence

struct CoSim {
  CMatrix rhoW;
  GaussianBelief belief;
};

ScenarioResult runFilterEquivalence(const RunConfig& cfg, const RuntimeOptions& rt) {
  const json& p = cfg.parameters;
  const PhysicalConstants constants;
  const FockBasis fock{integer(p, "nMax"), num(p, "mass"), num(p, "omega")};
  validateBasis(fock);
  const double gamma = num(p, "gamma");
  const double dt = num(p, "dt") / rt.dtDivisor;
  const auto mu = p.at("initialMean").get<std::vector<double>>();
  if (mu.size() != 2) badValue("initialMean", "expected two components");
  const Eigen::Vector2d mean0(mu[0], mu[1]);

  const LinearMeasuredModel model = oscillatorModel(fock.m, fock.omega, gamma, constants);
  const Eigen::Matrix2d sigma = steadyFilterCovariance(model);
  const Eigen::Matrix2d closed = model.A - gamma * sigma * model.c.transpose() * model.c;
  const double slowest = Eigen::EigenSolver<Eigen::Matrix2d>(closed).eigenvalues().real().cwiseAbs().minCoeff();
  const double tau = 1.0 / slowest;
  const double tFinal = num(p, "tFinal");
  if (!(tFinal > 3.0 * tau)) {
    badValue("tFinal", "must exceed three relaxation times (" + formatNumber(3.0 * tau) + ")");
  }

  // Coherent-state covariance as the common starting point.
  Eigen::Matrix2d cov0 = Eigen::Matrix2d::Zero();
  cov0(0, 0) = constants.hbar / (2.0 * fock.m * fock.omega);
  cov0(1, 1) = constants.hbar * fock.m * fock.omega / 2.0;
  const DensityMatrix rho0 = gaussianState(fock, mean0, cov0, constants);
  const OscillatorOperators ops = buildOscillator(fock, constants);
  const SmeIntegrator sme(ops.X, {ops.H.matrix()}, gamma, dt, constants, 0.0, /*leakCheck=*/true);
  const KalmanBucyFilter kb(model, dt);
  const CMatrix rhoW0 = sme.toWorking(rho0.matrix());
  const CMatrix& Xm = ops.X.matrix();
  const CMatrix& Pm = ops.P.matrix();
  const CMatrix xW = sme.operatorToWorking(Xm), pW = sme.operatorToWorking(Pm);
  const CMatrix x2W = sme.operatorToWorking(Xm * Xm), p2W = sme.operatorToWorking(Pm * Pm);
  const CMatrix xpW = sme.operatorToWorking(0.5 * (Xm * Pm + Pm * Xm));

  struct Moments {
    double v[5];
  };
  auto smeMoments = [&](const CMatrix& r) {
    const double x = traceProduct(r, xW), q = traceProduct(r, pW);
    return Moments{{x, q, traceProduct(r, x2W) - x * x, traceProduct(r, p2W) - q * q,
                    traceProduct(r, xpW) - x * q}};
  };
  auto kbMoments = [](const GaussianBelief& b) {
    return Moments{{b.mean(0), b.mean(1), b.cov(0, 0), b.cov(1, 1), b.cov(0, 1)}};
  };
  static const char* names[5] = {"meanX", "meanP", "varX", "varP", "covXP"};

  const TrajectoryConfig tc = trajectoryConfig(dt, tFinal, masterSeed(cfg, rt), trajectories(p, rt));
  EnsembleSpec<CoSim> spec;
  spec.initial = [&](std::size_t) { return CoSim{rhoW0, GaussianBelief{mean0, cov0}}; };
  spec.step = [&](CoSim& s, double dW, double) {
    sme.step(s.rhoW, dW);
    s.belief = kb.stepInnovation(s.belief, dW);
  };
  for (int k = 0; k < 5; ++k) {
    spec.observables.push_back({std::string("sme_") + names[k],
                                [&, k](const CoSim& s) { return smeMoments(s.rhoW).v[k]; }});
    spec.observables.push_back({std::string("kb_") + names[k],
                                [&, k](const CoSim& s) { return kbMoments(s.belief).v[k]; }});
    spec.observables.push_back({std::string("sqdiff_") + names[k], [&, k](const CoSim& s) {
                                  const double d = smeMoments(s.rhoW).v[k] - kbMoments(s.belief).v[k];
                                  return d * d;
                                }});
    spec.observables.push_back({std::string("sqref_") + names[k], [&, k](const CoSim& s) {
                                  const double r = kbMoments(s.belief).v[k];
                                  return r * r;
                                }});
  }
  spec.observables.push_back({"leak", [&](const CoSim& s) { return sme.leak(s.rhoW); }});
  spec.finals = {{"meanX", [&](const CoSim& s) { return smeMoments(s.rhoW).v[0]; }},
                 {"varX", [&](const CoSim& s) { return smeMoments(s.rhoW).v[2]; }}};
  const EnsembleResult e = runEnsemble(spec, tc, ensembleOptions(p, rt));

  ScenarioResult res;
  const auto& T = e.times;
  const double tStart = 3.0 * tau;
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const std::string n = names[k];
    res.curves["sme_" + n] = curveOf(T, e.curve("sme_" + n));
    res.curves["kb_" + n] = curveOf(T, e.curve("kb_" + n));
    double num2 = 0.0, den2 = 0.0;
    for (std::size_t s = 0; s < T.size(); ++s) {
      if (T[s] < tStart) continue;
      num2 += e.curve("sqdiff_" + n).mean[s];
      den2 += e.curve("sqref_" + n).mean[s];
    }
    const double rel = std::sqrt(num2 / den2);
    worst = std::max(worst, rel);
    res.scalars["relRms_" + n] = scalar(rel, std::nullopt, 0.02);
  }
  res.scalars["relRmsWorst"] = scalar(worst, std::nullopt, 0.02);
  res.scalars["relaxationTime"] = scalar(tau);
  res.scalars["windowStart"] = scalar(tStart);
  const auto& leak = e.curve("leak").mean;
  res.scalars["maxLeak"] = scalar(*std::max_element(leak.begin(), leak.end()), std::nullopt, 1e-4);
  res.perTrajectory["meanX"] = e.final("meanX");
  res.perTrajectory["varX"] = e.final("varX");
  return res;
}

// ---------------------------------------------------------------------------
// rapid-purification

ScenarioResult runRapidPurification(const RunConfig& cfg, const RuntimeOptions& rt) {
  const json& p = cfg.parameters;
  const double gamma = num(p, "gamma");
  const double dt = num(p, "dt") / rt.dtDivisor;
  const double rate = p.at("feedbackRate").is_string() ? QubitFeedbackPolicy::rapid().feedbackRate
                                                       : num(p, "feedbackRate");
  const double target = num(p, "targetPurity");
  const TrajectoryConfig tc = trajectoryConfig(dt, num(p, "tFinal"), masterSeed(cfg, rt), trajectories(p, rt));
  PurificationOptions opts;
  opts.targetPurity = target;
  opts.fitWindow = std::pair{num(p, "fitStart"), num(p, "fitEnd")};
  opts.ensemble = ensembleOptions(p, rt);

  // Both policies see the same noise streams.
  const PurificationStats fixed = purificationExperiment(QubitFeedbackPolicy::fixed(), gamma, tc, opts);
  const PurificationStats rapid = purificationExperiment(QubitFeedbackPolicy::rapid(rate), gamma, tc, opts);

  ScenarioResult res;
  const auto& T = fixed.times;
  res.curves["entropy_fixed"] = {"time", T, fixed.avgEntropy, fixed.entropyStderr};
  res.curves["entropy_adaptive"] = {"time", T, rapid.avgEntropy, rapid.entropyStderr};
  res.curves["impurity_fixed"] = {"time", T, fixed.avgImpurity, fixed.impurityStderr};
  res.curves["impurity_adaptive"] = {"time", T, rapid.avgImpurity, rapid.impurityStderr};

  auto ratioSe = [](double a, double sa, double b, double sb) {
    return std::abs(a / b) * std::sqrt(std::pow(sa / a, 2) + std::pow(sb / b, 2));
  };
  res.scalars["entropyExponent_fixed"] = scalar(fixed.entropyExponent, fixed.entropyExponentStderr);
  res.scalars["entropyExponent_adaptive"] = scalar(rapid.entropyExponent, rapid.entropyExponentStderr);
  res.scalars["entropyExponentRatio"] =
      scalar(rapid.entropyExponent / fixed.entropyExponent,
             ratioSe(rapid.entropyExponent, rapid.entropyExponentStderr, fixed.entropyExponent,
                     fixed.entropyExponentStderr),
             0.2);
  res.scalars["impurityExponent_fixed"] = scalar(fixed.impurityExponent, fixed.impurityExponentStderr);
  res.scalars["impurityExponent_adaptive"] = scalar(rapid.impurityExponent, rapid.impurityExponentStderr);
  res.scalars["impurityExponentRatio"] =
      scalar(rapid.impurityExponent / fixed.impurityExponent,
             ratioSe(rapid.impurityExponent, rapid.impurityExponentStderr, fixed.impurityExponent,
                     fixed.impurityExponentStderr));
  const SampleStats hf = sampleStats(fixed.hittingTimes);
  const SampleStats ha = sampleStats(rapid.hittingTimes);
  res.scalars["hittingTime_fixed"] = scalar(hf.mean, hf.stderr_);
  res.scalars["hittingTime_adaptive"] = scalar(ha.mean, ha.stderr_);
  res.scalars["hittingTimeRatio"] =
      scalar(ha.mean / hf.mean, ratioSe(ha.mean, ha.stderr_, hf.mean, hf.stderr_), 0.3);
  res.scalars["targetPurity"] = scalar(target);
  res.scalars["fitStart"] = scalar(opts.fitWindow->first);
  res.scalars["fitEnd"] = scalar(opts.fitWindow->second);
  res.perTrajectory["hittingTime_fixed"] = fixed.hittingTimes;
  res.perTrajectory["hittingTime_adaptive"] = rapid.hittingTimes;
  res.perTrajectory["finalEntropy_fixed"] = fixed.finalEntropy;
  res.perTrajectory["finalEntropy_adaptive"] = rapid.finalEntropy;
  return res;
}

// ---------------------------------------------------------------------------
// dolinar

double coherentHelstrom(double alpha, double prior) {
  // Fock truncation generous enough for |alpha|^2 up to ~20.
  const FockBasis fock{std::max(40, static_cast<int>(4.0 * alpha * alpha) + 40), 1.0, 1.0};
  return helstromBound(coherentState(fock, 0.0), coherentState(fock, alpha), prior);
}

ScenarioResult runDolinar(const RunConfig& cfg, const RuntimeOptions& rt) {
  const json& p = cfg.parameters;
  const auto a2 = p.at("alphaSquared").get<std::vector<double>>();
  const std::size_t trials = trajectories(json{{"trajectories", p.at("trials")}}, rt);
  const int segments = integer(p, "nSegments") * rt.refinement;
  const double prior = num(p, "prior");
  const std::uint64_t seed = masterSeed(cfg, rt);
  const unsigned workers = std::max(1u, rt.workers);

  ScenarioResult res;
  std::vector<double> rates, ses, bounds;
  for (std::size_t i = 0; i < a2.size(); ++i) {
    if (!(a2[i] > 0.0)) badValue("alphaSquared", "entries must be positive");
    DolinarConfig dc{std::sqrt(a2[i]), 1.0, segments, prior};
    const ErrorEstimate est = dolinarSimulate(dc, deriveSeed(seed, i), trials, workers);
    const double bound = coherentHelstrom(dc.alpha, prior);
    const std::string tag = formatNumber(a2[i]);
    res.scalars["errorRate_" + tag] = scalar(est.errorRate, est.stderr_);
    res.scalars["helstrom_" + tag] = scalar(bound);
    const double se = std::max(est.stderr_, std::sqrt(bound * (1.0 - bound) / trials));
    res.scalars["zScore_" + tag] = scalar((est.errorRate - bound) / se, std::nullopt, 3.0);
    rates.push_back(est.errorRate);
    ses.push_back(est.stderr_);
    bounds.push_back(bound);
  }
  if (!a2.empty()) {
    res.curves["error_rate"] = {"alphaSquared", a2, rates, ses};
    res.curves["helstrom"] = plainCurve(a2, bounds, "alphaSquared");
  }

  const double s2 = num(p, "staticAlphaSquared");
  if (!(s2 > 0.0)) badValue("staticAlphaSquared", "must be positive");
  const DolinarConfig sc{std::sqrt(s2), 1.0, segments, prior};
  const StaticReceiver best = optimalStaticReceiver(sc);
  const ErrorEstimate st = staticReceiverSimulate(sc, best.b, deriveSeed(seed, 1000), trials, workers);
  const ErrorEstimate dn = dolinarSimulate(sc, deriveSeed(seed, 1001), trials, workers);
  res.scalars["static_b"] = scalar(best.b);
  res.scalars["static_errorAnalytic"] = scalar(best.error);
  res.scalars["static_errorRate"] = scalar(st.errorRate, st.stderr_);
  res.scalars["static_dolinarErrorRate"] = scalar(dn.errorRate, dn.stderr_);
  res.scalars["static_helstrom"] = scalar(coherentHelstrom(sc.alpha, prior));
  res.scalars["static_advantageZ"] =
      scalar((st.errorRate - dn.errorRate) / std::hypot(st.stderr_, dn.stderr_), std::nullopt, 3.0);
  return res;
}

// ---------------------------------------------------------------------------
// resonator-cooling and gamma-scan

struct ResonatorFamily {
  double m, omega, R, nbar, kappa;

  ResonatorScenario scenario(double gamma, int nMax, bool feedback) const {
    ResonatorScenario s;
    s.oscillator = FockBasis{nMax, m, omega};
    s.gamma = gamma;
    s.cost = energyCost(m, omega, R);
    s.feedbackEnabled = feedback;
    s.bathOccupation = nbar;
    s.bathCoupling = kappa;
    return s;
  }
  ModelFamily family() const {
    return [*this](double gamma) { return scenario(gamma, 2, true).model(); };
  }
};

ResonatorFamily resonatorFamily(const json& p) {
  return {num(p, "mass"), num(p, "omega"), num(p, "R"), num(p, "bathOccupation"), num(p, "bathCoupling")};
}

StrengthScan scanFor(const json& p, const ResonatorFamily& f, int refinement) {
  const double lo = num(p, "gammaMin"), hi = num(p, "gammaMax");
  if (!(lo > 0.0 && hi > lo)) badValue("gammaMin", "need 0 < gammaMin < gammaMax");
  const int n = integer(p, "nGrid");
  return optimizeMeasurementStrength(f.family(), energyCost(f.m, f.omega, f.R), lo, hi,
                                     (n - 1) * refinement + 1);
}

ScenarioResult runGammaScan(const RunConfig& cfg, const RuntimeOptions& rt) {
  const json& p = cfg.parameters;
  const ResonatorFamily f = resonatorFamily(p);
  const StrengthScan s = scanFor(p, f, rt.refinement);
  ScenarioResult res;
  res.curves["cost"] = plainCurve(s.gammas, s.costs, "gamma");
  res.scalars["gammaStar"] = scalar(s.gammaStar, std::nullopt, 1e-3 * s.gammaStar);
  res.scalars["costStar"] = scalar(s.costStar);
  const ModelFamily fam = f.family();
  const QuadraticCost cost = energyCost(f.m, f.omega, f.R);
  for (double factor : {0.1, 10.0}) {
    const double c = synthesizeLQG(fam(factor * s.gammaStar), cost).predictedSteadyCost;
    res.scalars["cost_x" + formatNumber(factor)] = scalar(c);
  }
  res.scalars["edgeRatio_lower"] = scalar(s.costs.front() / s.costStar);
  res.scalars["edgeRatio_upper"] = scalar(s.costs.back() / s.costStar);
  return res;
}

ResonatorOutcome resonatorRun(const json& p, const ResonatorFamily& f, double gamma, std::uint64_t seed,
                              std::size_t n, const RuntimeOptions& rt) {
  const ResonatorScenario s = f.scenario(gamma, integer(p, "nMax"), p.at("feedback").get<bool>());
  const double dt = num(p, "dtScale") / std::max(f.omega, gamma) / rt.dtDivisor;
  // Round the step so that tFinal and burnIn are whole numbers of steps.
  const double tFinal = num(p, "tFinal");
  const double steps = std::ceil(tFinal / dt - 1e-9);
  const TrajectoryConfig tc = trajectoryConfig(tFinal / steps, tFinal, seed, n);
  ResonatorOptions opts;
  opts.burnIn = num(p, "burnIn");
  if (!(opts.burnIn >= 0.0 && opts.burnIn < tFinal)) badValue("burnIn", "must lie in [0, tFinal)");
  opts.ensemble = ensembleOptions(p, rt);
  opts.ensemble.sampleEvery = std::max<std::size_t>(1, static_cast<std::size_t>(steps / 400.0));
  return runResonatorCooling(s, tc, opts);
}

ScenarioResult runResonator(const RunConfig& cfg, const RuntimeOptions& rt) {
  const json& p = cfg.parameters;
  const ResonatorFamily f = resonatorFamily(p);
  ScenarioResult res;
  double gamma = 0.0;
  if (p.at("gamma").is_string()) {
    const StrengthScan s = scanFor(p, f, rt.refinement);
    gamma = s.gammaStar;
    res.scalars["gammaStar"] = scalar(s.gammaStar);
  } else {
    gamma = num(p, "gamma");
  }
  const std::uint64_t seed = masterSeed(cfg, rt);
  const std::size_t n = trajectories(p, rt);
  const ResonatorOutcome out = resonatorRun(p, f, gamma, seed, n, rt);

  const auto& T = out.times;
  res.curves["energy"] = curveOf(T, out.energy);
  res.curves["cost"] = curveOf(T, out.cost);
  res.curves["ground_population"] = curveOf(T, out.groundPop);
  res.curves["excited_population"] = curveOf(T, out.excitedPop);
  res.curves["mean_x"] = curveOf(T, out.meanX);
  res.scalars["gamma"] = scalar(gamma);
  res.scalars["steadyEnergy"] = scalar(out.steadyEnergy.mean, out.steadyEnergy.stderr_);
  res.scalars["steadyCost"] = scalar(out.steadyCost.mean, out.steadyCost.stderr_);
  res.scalars["maxLeak"] = scalar(*std::max_element(out.maxLeak.begin(), out.maxLeak.end()), std::nullopt, 1e-4);
  if (out.law) {
    const double pc = out.law->predictedSteadyCost, ps = out.law->predictedStateCost;
    res.scalars["predictedSteadyCost"] = scalar(pc);
    res.scalars["predictedStateCost"] = scalar(ps);
    res.scalars["energyVsPredictedCost"] =
        scalar(out.steadyEnergy.mean / pc - 1.0, out.steadyEnergy.stderr_ / pc, 0.05);
    res.scalars["energyVsPredictedState"] =
        scalar(out.steadyEnergy.mean / ps - 1.0, out.steadyEnergy.stderr_ / ps, 0.05);
    res.scalars["costVsPredictedCost"] =
        scalar(out.steadyCost.mean / pc - 1.0, out.steadyCost.stderr_ / pc, 0.05);
  } else {
    // Uncontrolled: compare the late-time energy with the moment equations.
    const double predicted = out.predictedEnergyCurve.back();
    const double sim = out.energy.mean.back();
    res.scalars["predictedFinalEnergy"] = scalar(predicted);
    res.scalars["finalEnergyVsPredicted"] = scalar(sim / predicted - 1.0, out.energy.stderr_.back() / predicted, 0.05);
    res.curves["predicted_energy"] = plainCurve(T, out.predictedEnergyCurve);
  }
  res.perTrajectory["energy"] = out.trajectoryEnergy;
  res.perTrajectory["cost"] = out.trajectoryCost;

  const auto factors = p.at("compareFactors").get<std::vector<double>>();
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (!(factors[i] > 0.0)) badValue("compareFactors", "entries must be positive");
    const std::size_t nc = rt.trajectories.value_or(count(p, "compareTrajectories"));
    const ResonatorOutcome o = resonatorRun(p, f, factors[i] * gamma, deriveSeed(seed, i + 1), nc, rt);
    const std::string tag = formatNumber(factors[i]);
    res.scalars["compare_x" + tag + "_gamma"] = scalar(factors[i] * gamma);
    res.scalars["compare_x" + tag + "_cost"] = scalar(o.steadyCost.mean, o.steadyCost.stderr_);
    res.scalars["compare_x" + tag + "_energy"] = scalar(o.steadyEnergy.mean, o.steadyEnergy.stderr_);
    res.scalars["compare_x" + tag + "_advantageZ"] =
        scalar((o.steadyCost.mean - out.steadyCost.mean) / std::hypot(o.steadyCost.stderr_, out.steadyCost.stderr_),
               std::nullopt, 3.0);
    res.scalars["compare_x" + tag + "_energyAdvantageZ"] =
        scalar((o.steadyEnergy.mean - out.steadyEnergy.mean) /
                   std::hypot(o.steadyEnergy.stderr_, out.steadyEnergy.stderr_),
               std::nullopt, 3.0);
  }
  return res;
}

// ---------------------------------------------------------------------------
// atom-cooling

ScenarioResult runAtom(const RunConfig& cfg, const RuntimeOptions& rt) {
  const json& p = cfg.parameters;
  AtomLatticeScenario s;
  s.vLow = num(p, "vLow");
  s.vHigh = num(p, "vHigh");
  s.k = num(p, "k");
  const double halfPeriod = M_PI / (2.0 * s.k);
  s.grid = GridBasis{-halfPeriod, halfPeriod, integer(p, "nPoints"), num(p, "mass")};
  s.gamma = num(p, "gamma");
  s.switchHysteresis = num(p, "switchHysteresis");
  s.levels = integer(p, "levels");

  AtomOptions opts;
  const std::string init = p.at("initial").get<std::string>();
  if (init == "superposition") {
    opts.initial.kind = AtomInitialState::Kind::Superposition;
  } else if (init == "ground") {
    opts.initial.kind = AtomInitialState::Kind::Ground;
  } else if (init == "mixture") {
    opts.initial.kind = AtomInitialState::Kind::Mixture;
  } else {
    badValue("initial", "expected superposition, ground or mixture");
  }
  opts.initial.count = integer(p, "initialCount");
  opts.switching = p.at("switching").get<bool>();
  opts.ensemble = ensembleOptions(p, rt);
  const double dt = num(p, "dt") / rt.dtDivisor;
  const TrajectoryConfig tc = trajectoryConfig(dt, num(p, "tFinal"), masterSeed(cfg, rt), trajectories(p, rt));
  const CoolingOutcome out = runAtomCooling(s, tc, opts);

  ScenarioResult res;
  const auto& T = out.times;
  res.curves["energy"] = curveOf(T, out.energy);
  res.curves["ground_population"] = curveOf(T, out.groundPop);
  res.curves["excited_population"] = curveOf(T, out.excitedPop);
  res.curves["parity"] = curveOf(T, out.parityCurve);
  res.curves["purity"] = curveOf(T, out.purityCurve);

  const double n = static_cast<double>(out.labels.size());
  auto binomial = [n](double f) { return std::sqrt(f * (1.0 - f) / n); };
  res.scalars["groundFraction"] = scalar(out.groundFraction, binomial(out.groundFraction));
  res.scalars["excitedFraction"] = scalar(out.excitedFraction, binomial(out.excitedFraction));
  res.scalars["otherFraction"] = scalar(out.otherFraction, binomial(out.otherFraction));
  // Among labelled trajectories, ground vs first-excited as a fair coin.
  const double labelled = (out.groundFraction + out.excitedFraction) * n;
  const double splitZ =
      labelled > 0 ? (out.groundFraction * n - 0.5 * labelled) / std::sqrt(0.25 * labelled) : std::nan("");
  res.scalars["splitZ"] = scalar(splitZ, std::nullopt, 3.0);

  double worstZ = 0.0, worstDrift = 0.0;
  for (std::size_t i = 0; i < T.size(); ++i) {
    const double d = out.parityCurve.mean[i] - out.initialParity;
    worstDrift = std::max(worstDrift, std::abs(d));
    const double se = out.parityCurve.stderr_[i];
    if (se > 0.0) worstZ = std::max(worstZ, std::abs(d) / se);
  }
  res.scalars["initialParity"] = scalar(out.initialParity);
  res.scalars["parityDriftMax"] = scalar(worstDrift);
  res.scalars["parityDriftZ"] = scalar(worstZ, std::nullopt, 3.0);
  res.scalars["medianFinalPurity"] = scalar(median(out.finalPurity), std::nullopt, 0.95);
  res.scalars["maxLeak"] = scalar(*std::max_element(out.maxLeak.begin(), out.maxLeak.end()), std::nullopt, 1e-4);

  // Dwell: after a switch g sits beyond one edge of the deadband and must cross
  // to the other, which takes at least 2h / max|dg| steps.
  double violations = 0.0, minSlack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    if (std::isnan(out.minDwellSteps[i]) || out.maxIndicatorStep[i] <= 0.0) continue;
    const double bound = std::floor(2.0 * s.switchHysteresis / out.maxIndicatorStep[i]);
    minSlack = std::min(minSlack, out.minDwellSteps[i] - bound);
    if (out.minDwellSteps[i] < bound) violations += 1.0;
  }
  res.scalars["dwellViolations"] = scalar(violations, std::nullopt, 0.0);
  res.scalars["meanSwitches"] = scalar(sampleStats(out.switches).mean, sampleStats(out.switches).stderr_);

  res.scalars["minDwellSlack"] = scalar(std::isinf(minSlack) ? 0.0 : minSlack);

  std::vector<double> labelCode;
  for (OutcomeLabel l : out.labels) labelCode.push_back(static_cast<double>(l));
  res.perTrajectory["label"] = labelCode;  // 0 ground, 1 firstExcited, 2 other
  res.perTrajectory["finalPurity"] = out.finalPurity;
  res.perTrajectory["switches"] = out.switches;
  res.perTrajectory["minDwellSteps"] = out.minDwellSteps;
  res.perTrajectory["maxIndicatorStep"] = out.maxIndicatorStep;
  return res;
}

// Per-trajectory observable compared by the dt-halving check.
const char* driftObservable(ScenarioKind kind) {
  switch (kind) {
    case ScenarioKind::SmeVsLindblad: return "x";
    case ScenarioKind::FilterEquivalence: return "varX";
    case ScenarioKind::RapidPurification: return "hittingTime_fixed";
    case ScenarioKind::ResonatorCooling: return "cost";
    case ScenarioKind::AtomCooling: return "finalPurity";
    case ScenarioKind::Dolinar: return "errorRate";
    case ScenarioKind::GammaScan: return "gammaStar";
  }
  return "";
}

}  // namespace

const std::vector<std::string>& scenarioNames() { return kNames; }

ScenarioKind scenarioKind(const std::string& name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return static_cast<ScenarioKind>(i);
  }
  throw Error(ErrorCode::UnknownScenario, "unknown scenario '" + name + "'");
}

RunConfig parseConfigText(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidValue, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::InvalidValue, "config must be a JSON object");
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string& k = it.key();
    if (k != "scenario" && k != "seed" && k != "parameters" && k != "output") {
      throw Error(ErrorCode::UnknownKey, "unknown key '" + k + "'");
    }
  }
  for (const char* k : {"scenario", "seed", "parameters"}) {
    if (!doc.contains(k)) throw Error(ErrorCode::MissingKey, std::string("missing key '") + k + "'");
  }
  if (!doc["scenario"].is_string()) throw Error(ErrorCode::InvalidValue, "'scenario' must be a string");
  RunConfig cfg;
  cfg.scenario = doc["scenario"].get<std::string>();
  cfg.kind = scenarioKind(cfg.scenario);
  const json& seed = doc["seed"];
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    throw Error(ErrorCode::InvalidValue, "'seed' must be a non-negative integer");
  }
  cfg.seed = seed.get<std::uint64_t>();
  cfg.parameters = withDefaults(cfg.kind, doc["parameters"]);
  if (doc.contains("output")) {
    if (!doc["output"].is_string()) throw Error(ErrorCode::InvalidValue, "'output' must be a string");
    cfg.outputDir = doc["output"].get<std::string>();
  }
  return cfg;
}

RunConfig parseConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parseConfigText(ss.str());
}

const Scalar& ScenarioResult::scalar(const std::string& name) const {
  const auto it = scalars.find(name);
  if (it == scalars.end()) throw Error(ErrorCode::MissingKey, "no scalar '" + name + "'");
  return it->second;
}

ScenarioResult runScenario(const RunConfig& cfg, const RuntimeOptions& rt) {
  if (rt.dtDivisor < 1 || rt.pathSubdivision < 1 || rt.refinement < 1) {
    throw Error(ErrorCode::InvalidValue, "runtime divisors must be >= 1");
  }
  if (rt.trajectories && *rt.trajectories < 1) throw Error(ErrorCode::InvalidValue, "need at least one trajectory");
  ScenarioResult res;
  switch (cfg.kind) {
    case ScenarioKind::SmeVsLindblad: res = runSmeVsLindblad(cfg, rt); break;
    case ScenarioKind::FilterEquivalence: res = runFilterEquivalence(cfg, rt); break;
    case ScenarioKind::RapidPurification: res = runRapidPurification(cfg, rt); break;
    case ScenarioKind::Dolinar: res = runDolinar(cfg, rt); break;
    case ScenarioKind::ResonatorCooling: res = runResonator(cfg, rt); break;
    case ScenarioKind::AtomCooling: res = runAtom(cfg, rt); break;
    case ScenarioKind::GammaScan: res = runGammaScan(cfg, rt); break;
  }
  json runtime = {{"dtDivisor", rt.dtDivisor}, {"pathSubdivision", rt.pathSubdivision},
                  {"refinement", rt.refinement}};
  if (rt.trajectories) runtime["trajectoriesOverride"] = *rt.trajectories;
  res.metadata = {
      {"version", kVersion},
      {"config",
       {{"scenario", cfg.scenario}, {"seed", masterSeed(cfg, rt)}, {"parameters", cfg.parameters}}},
      {"runtime", runtime},
  };
  return res;
}

DriftCheck dtHalvingCheck(const RunConfig& cfg, const RuntimeOptions& runtime) {
  DriftCheck d;
  d.scenario = cfg.scenario;
  d.observable = driftObservable(cfg.kind);
  RuntimeOptions coarse = runtime, fine = runtime;
  coarse.dtDivisor = 1;
  fine.dtDivisor = 2;

  if (cfg.kind == ScenarioKind::GammaScan) {
    coarse.refinement = 1;
    fine.refinement = 2;
    d.coarse = runScenario(cfg, coarse).scalar("gammaStar").value;
    d.fine = runScenario(cfg, fine).scalar("gammaStar").value;
    d.drift = std::abs(d.fine - d.coarse) / d.coarse;
    d.tolerance = 1e-3;
    d.pass = d.drift <= d.tolerance;
    return d;
  }
  if (cfg.kind == ScenarioKind::Dolinar) {
    // Segment count plays the role of the step; the two runs are independent.
    coarse.refinement = 1;
    fine.refinement = 2;
    fine.dtDivisor = 1;
    const ScenarioResult a = runScenario(cfg, coarse), b = runScenario(cfg, fine);
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& [name, s] : a.scalars) {
      if (name.rfind("errorRate_", 0) != 0) continue;
      const Scalar& t = b.scalar(name);
      const double diff = std::abs(t.value - s.value);
      const double allowed = 0.02 * std::max(s.value, t.value) + 3.0 * std::hypot(*s.stderr_, *t.stderr_);
      if (diff - allowed > worst) {
        worst = diff - allowed;
        d.coarse = s.value;
        d.fine = t.value;
        d.drift = diff;
        d.tolerance = allowed;
      }
    }
    d.pass = d.drift <= d.tolerance;
    return d;
  }

  // Wiener-driven scenarios: the coarse run sums pairs of the fine run's
  // sub-increments, so both follow the same Brownian paths.
  coarse.pathSubdivision = 2 * runtime.pathSubdivision;
  fine.pathSubdivision = runtime.pathSubdivision;
  const ScenarioResult a = runScenario(cfg, coarse), b = runScenario(cfg, fine);
  const auto& xa = a.perTrajectory.at(d.observable);
  const auto& xb = b.perTrajectory.at(d.observable);
  std::vector<double> diff(xa.size());
  for (std::size_t i = 0; i < xa.size(); ++i) diff[i] = xb[i] - xa[i];
  const SampleStats sd = sampleStats(diff);
  d.coarse = sampleStats(xa).mean;
  d.fine = sampleStats(xb).mean;
  d.drift = std::abs(sd.mean);
  d.tolerance = 0.02 * std::max(std::abs(d.coarse), std::abs(d.fine)) + 3.0 * sd.stderr_;
  d.pass = d.drift <= d.tolerance;
  return d;
}

}  // namespace qfc
