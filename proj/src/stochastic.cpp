#include "qfc/stochastic.hpp"

#include <cmath>

namespace qfc {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr double kTwoPi = 6.28318530717958647692;

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t deriveSeed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 0x632BE59BD9B4E019ULL));
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t counter)
    : key_(splitmix64(seed)), counter_(counter) {}

double CounterRng::bitsToUnit(std::uint64_t i) const {
  // splitmix64(key + i * golden) is the i-th output of a SplitMix sequence.
  const std::uint64_t bits = splitmix64(key_ + i * kGolden);
  return 1.0 - static_cast<double>(bits >> 11) * 0x1.0p-53;  // (0, 1]
}

double CounterRng::uniform() { return bitsToUnit(counter_++); }

double CounterRng::normal() {
  const std::uint64_t c = counter_++;
  const std::uint64_t pair = c >> 1;
  if (pair != cachedPair_) {
    const double u1 = bitsToUnit(2 * pair);
    const double u2 = bitsToUnit(2 * pair + 1);
    cachedRadius_ = std::sqrt(-2.0 * std::log(u1));
    cachedAngle_ = kTwoPi * u2;
    cachedPair_ = pair;
  }
  return cachedRadius_ * ((c & 1) ? std::sin(cachedAngle_) : std::cos(cachedAngle_));
}

NoiseStream::NoiseStream(std::uint64_t seed, double dt, int subdivision)
    : seed_(seed), dt_(dt), subdivision_(subdivision), rng_(seed) {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidValue, "noise stream needs dt > 0");
  if (subdivision < 1) throw Error(ErrorCode::InvalidValue, "path subdivision must be >= 1");
  scale_ = std::sqrt(dt / subdivision);
}

double NoiseStream::next() {
  double s = 0.0;
  for (int k = 0; k < subdivision_; ++k) s += rng_.normal();
  return scale_ * s;
}

std::vector<double> wienerIncrements(NoiseStream& stream, std::size_t n) {
  std::vector<double> out(n);
  for (auto& v : out) v = stream.next();
  return out;
}

void MeasurementRecord::validate() const {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidValue, "record dt must be positive");
  if (!(gamma > 0.0)) throw Error(ErrorCode::NonPositiveGamma, "record gamma must be positive");
  for (double v : increments) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidValue, "record holds a non-finite increment");
  }
}

double synthesizeRecord(double meanX, double gamma, double dW, double dt) {
  if (!(gamma > 0.0)) throw Error(ErrorCode::NonPositiveGamma, "gamma must be positive");
  return meanX * dt + dW / std::sqrt(gamma);
}

void TrajectoryConfig::validate() const {
  if (!(dt > 0.0)) throw Error(ErrorCode::InvalidValue, "dt must be positive");
  if (!(tFinal >= dt)) throw Error(ErrorCode::InvalidValue, "tFinal must be >= dt");
  if (nTrajectories < 1) throw Error(ErrorCode::InvalidValue, "need at least one trajectory");
}

std::size_t TrajectoryConfig::steps() const {
  return static_cast<std::size_t>(std::llround(tFinal / dt));
}

const CurveStats& EnsembleResult::curve(const std::string& name) const {
  for (std::size_t i = 0; i < curveNames.size(); ++i) {
    if (curveNames[i] == name) return curves[i];
  }
  throw Error(ErrorCode::InvalidValue, "no curve named " + name);
}

const std::vector<double>& EnsembleResult::final(const std::string& name) const {
  for (std::size_t i = 0; i < finalNames.size(); ++i) {
    if (finalNames[i] == name) return finals[i];
  }
  throw Error(ErrorCode::InvalidValue, "no final observable named " + name);
}

SampleStats sampleStats(const std::vector<double>& values) {
  SampleStats s;
  double m2 = 0.0;
  std::size_t n = 0;
  for (double v : values) {
    ++n;
    const double d = v - s.mean;
    s.mean += d / static_cast<double>(n);
    m2 += d * (v - s.mean);
  }
  if (n > 1) {
    s.variance = m2 / static_cast<double>(n - 1);
    s.stderr_ = std::sqrt(s.variance / static_cast<double>(n));
  }
  return s;
}

}  // namespace qfc
