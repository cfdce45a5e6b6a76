#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qfc/errors.hpp"

namespace qfc {

std::uint64_t splitmix64(std::uint64_t x);

// Seed of stream `index` under `master`; a pure function, so streams can be
// created in any order on any thread.
std::uint64_t deriveSeed(std::uint64_t master, std::uint64_t index);

// Counter-based generator: the value drawn at counter c depends only on
// (seed, c). Normals come in Box-Muller pairs (cos for even, sin for odd c).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t counter = 0);

  double uniform();  // in (0, 1]
  double normal();
  std::uint64_t counter() const { return counter_; }

 private:
  double bitsToUnit(std::uint64_t i) const;

  std::uint64_t key_;
  std::uint64_t counter_;
  std::uint64_t cachedPair_ = ~std::uint64_t{0};
  double cachedRadius_ = 0.0;
  double cachedAngle_ = 0.0;
};

// Wiener increments of variance dt. With subdivision s each increment is the
// sum of s sub-increments of variance dt/s, so (dt, s = 2) and (dt/2, s = 1)
// sample the same Brownian path.
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, double dt, int subdivision = 1);

  double next();
  std::uint64_t seed() const { return seed_; }
  double dt() const { return dt_; }
  std::uint64_t counter() const { return rng_.counter(); }

 private:
  std::uint64_t seed_;
  double dt_;
  int subdivision_;
  double scale_;
  CounterRng rng_;
};

std::vector<double> wienerIncrements(NoiseStream& stream, std::size_t n);

struct MeasurementRecord {
  double dt = 0.0;
  double gamma = 0.0;
  std::vector<double> increments;

  void validate() const;
};

// dr = meanX dt + dW / sqrt(gamma)
double synthesizeRecord(double meanX, double gamma, double dW, double dt);

struct TrajectoryConfig {
  double dt = 0.0;
  double tFinal = 0.0;
  std::uint64_t seed = 0;
  std::size_t nTrajectories = 1;

  void validate() const;
  std::size_t steps() const;
};

struct EnsembleOptions {
  unsigned workers = 1;
  std::size_t sampleEvery = 1;
  int pathSubdivision = 1;
  std::size_t batchSize = 256;
};

struct CurveStats {
  std::vector<double> mean;
  std::vector<double> variance;  // unbiased, across trajectories
  std::vector<double> stderr_;
};

struct EnsembleResult {
  std::size_t nTrajectories = 0;
  std::vector<double> times;
  std::vector<std::string> curveNames;
  std::vector<CurveStats> curves;
  std::vector<std::string> finalNames;
  std::vector<std::vector<double>> finals;  // [name][trajectory]

  const CurveStats& curve(const std::string& name) const;
  const std::vector<double>& final(const std::string& name) const;
};

template <class State>
using StateFunctional = std::pair<std::string, std::function<double(const State&)>>;

template <class State>
struct EnsembleSpec {
  std::function<State(std::size_t trajectory)> initial;
  // Advances the state by one dt given the Wiener increment and the time at
  // the start of the step.
  std::function<void(State&, double dW, double t)> step;
  std::vector<StateFunctional<State>> observables;  // sampled on the output grid
  std::vector<StateFunctional<State>> finals;       // evaluated once at tFinal
};

namespace detail {

struct Failure {
  std::size_t index;
  ErrorCode code;
  std::string message;
};

inline Failure describe(std::size_t index, std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const TrajectoryError& e) {
    return {index, e.innerCode(), e.what()};
  } catch (const Error& e) {
    return {index, e.code(), e.what()};
  } catch (const std::exception& e) {
    return {index, ErrorCode::InvalidState, e.what()};
  }
}

// Runs work(i) for i in [begin, end) on up to `workers` threads.
template <class Work>
void runRange(std::size_t begin, std::size_t end, unsigned workers, Work&& work) {
  const std::size_t n = end - begin;
  const unsigned w = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(workers, n)));
  std::atomic<std::size_t> next{begin};
  auto loop = [&]() {
    for (std::size_t i = next.fetch_add(1); i < end; i = next.fetch_add(1)) work(i);
  };
  std::vector<std::thread> pool;
  pool.reserve(w - 1);
  for (unsigned t = 1; t < w; ++t) pool.emplace_back(loop);
  loop();
  for (auto& th : pool) th.join();
}

inline void rethrowLowest(const std::vector<std::exception_ptr>& errors, std::size_t offset) {
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (errors[i]) {
      const Failure f = describe(offset + i, errors[i]);
      throw TrajectoryError(f.index, f.code, f.message);
    }
  }
}

}  // namespace detail

// Ordered parallel map; failures are reported for the lowest failing index.
template <class T, class F>
std::vector<T> parallelMap(std::size_t n, unsigned workers, F&& f) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  detail::runRange(0, n, workers, [&](std::size_t i) {
    try {
      out[i] = f(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  detail::rethrowLowest(errors, 0);
  return out;
}

template <class State>
EnsembleResult runEnsemble(const EnsembleSpec<State>& spec, const TrajectoryConfig& config,
                           const EnsembleOptions& options = {}) {
  config.validate();
  const std::size_t steps = config.steps();
  const std::size_t every = std::max<std::size_t>(1, options.sampleEvery);
  std::vector<std::size_t> sampleSteps;
  for (std::size_t k = 0; k <= steps; k += every) sampleSteps.push_back(k);
  if (sampleSteps.back() != steps) sampleSteps.push_back(steps);

  const std::size_t nObs = spec.observables.size();
  const std::size_t nSamples = sampleSteps.size();
  const std::size_t nFinal = spec.finals.size();

  EnsembleResult result;
  result.nTrajectories = config.nTrajectories;
  for (std::size_t k : sampleSteps) result.times.push_back(static_cast<double>(k) * config.dt);
  for (const auto& o : spec.observables) result.curveNames.push_back(o.first);
  for (const auto& o : spec.finals) result.finalNames.push_back(o.first);
  result.finals.assign(nFinal, std::vector<double>(config.nTrajectories));

  std::vector<double> mean(nObs * nSamples, 0.0), m2(nObs * nSamples, 0.0);
  std::size_t merged = 0;

  const std::size_t batch = std::max<std::size_t>(1, options.batchSize);
  std::vector<double> samples;
  for (std::size_t b0 = 0; b0 < config.nTrajectories; b0 += batch) {
    const std::size_t b1 = std::min(config.nTrajectories, b0 + batch);
    const std::size_t nb = b1 - b0;
    samples.assign(nb * nObs * nSamples, 0.0);
    std::vector<std::exception_ptr> errors(nb);
    detail::runRange(b0, b1, options.workers, [&](std::size_t i) {
      try {
        NoiseStream noise(deriveSeed(config.seed, i), config.dt, options.pathSubdivision);
        State state = spec.initial(i);
        double* row = samples.data() + (i - b0) * nObs * nSamples;
        std::size_t s = 0;
        for (std::size_t k = 0;; ++k) {
          if (s < nSamples && sampleSteps[s] == k) {
            for (std::size_t o = 0; o < nObs; ++o) row[o * nSamples + s] = spec.observables[o].second(state);
            ++s;
          }
          if (k == steps) break;
          spec.step(state, noise.next(), static_cast<double>(k) * config.dt);
        }
        for (std::size_t f = 0; f < nFinal; ++f) result.finals[f][i] = spec.finals[f].second(state);
      } catch (...) {
        errors[i - b0] = std::current_exception();
      }
    });
    detail::rethrowLowest(errors, b0);
    // Welford merge in trajectory order: identical for any worker count.
    for (std::size_t i = 0; i < nb; ++i) {
      ++merged;
      const double* row = samples.data() + i * nObs * nSamples;
      for (std::size_t j = 0; j < nObs * nSamples; ++j) {
        const double d = row[j] - mean[j];
        mean[j] += d / static_cast<double>(merged);
        m2[j] += d * (row[j] - mean[j]);
      }
    }
  }

  result.curves.resize(nObs);
  const double n = static_cast<double>(merged);
  for (std::size_t o = 0; o < nObs; ++o) {
    CurveStats& c = result.curves[o];
    c.mean.assign(mean.begin() + o * nSamples, mean.begin() + (o + 1) * nSamples);
    c.variance.resize(nSamples);
    c.stderr_.resize(nSamples);
    for (std::size_t s = 0; s < nSamples; ++s) {
      const double v = merged > 1 ? m2[o * nSamples + s] / (n - 1.0) : 0.0;
      c.variance[s] = v;
      c.stderr_[s] = std::sqrt(v / n);
    }
  }
  return result;
}

struct SampleStats {
  double mean = 0.0;
  double variance = 0.0;
  double stderr_ = 0.0;
};

SampleStats sampleStats(const std::vector<double>& values);

}  // namespace qfc
