#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "qfc/scenario.hpp"

namespace qfc {
namespace {

namespace fs = std::filesystem;

void writeFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  out << content;
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

nlohmann::json scalarJson(const Scalar& s) {
  nlohmann::json j = {{"value", s.value}};
  if (s.stderr_) j["stderr"] = *s.stderr_;
  if (s.tolerance) j["tolerance"] = *s.tolerance;
  return j;
}

}  // namespace

std::string formatNumber(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Short form when it round-trips (keeps names like "0.1" readable).
  char shortBuf[64];
  std::snprintf(shortBuf, sizeof shortBuf, "%.15g", v);
  if (std::strtod(shortBuf, nullptr) == v) return shortBuf;
  return buf;
}

void writeResults(const ScenarioResult& result, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::IoError, "cannot create output directory '" + dir + "'");

  nlohmann::json summary = result.metadata;
  summary["scalars"] = nlohmann::json::object();
  for (const auto& [name, s] : result.scalars) summary["scalars"][name] = scalarJson(s);
  summary["curves"] = nlohmann::json::array();
  for (const auto& [name, c] : result.curves) summary["curves"].push_back(name + ".csv");
  if (!result.perTrajectory.empty()) summary["perTrajectory"] = "trajectories.csv";
  writeFile(fs::path(dir) / "summary.json", summary.dump(2) + "\n");

  for (const auto& [name, c] : result.curves) {
    if (c.x.size() != c.y.size() || c.err.size() != c.y.size()) {
      throw Error(ErrorCode::DimensionMismatch, "curve '" + name + "' has ragged columns");
    }
    std::string out = c.axis + "," + name + "," + name + "_stderr\n";
    for (std::size_t i = 0; i < c.x.size(); ++i) {
      out += formatNumber(c.x[i]) + "," + formatNumber(c.y[i]) + "," + formatNumber(c.err[i]) + "\n";
    }
    writeFile(fs::path(dir) / (name + ".csv"), out);
  }

  if (!result.perTrajectory.empty()) {
    const std::size_t n = result.perTrajectory.begin()->second.size();
    std::string out = "trajectory";
    for (const auto& [name, v] : result.perTrajectory) {
      if (v.size() != n) throw Error(ErrorCode::DimensionMismatch, "per-trajectory column '" + name + "' is ragged");
      out += "," + name;
    }
    out += "\n";
    for (std::size_t i = 0; i < n; ++i) {
      out += std::to_string(i);
      for (const auto& [name, v] : result.perTrajectory) out += "," + formatNumber(v[i]);
      out += "\n";
    }
    writeFile(fs::path(dir) / "trajectories.csv", out);
  }
}

}  // namespace qfc
