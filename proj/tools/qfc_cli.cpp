#include <cstdio>
#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "qfc/scenario.hpp"

namespace {

// One line, tab-separated, for scripts: error<TAB>code<TAB>context<TAB>message
int fail(const std::string& code, const std::string& context, const std::string& message) {
  std::cerr << "error\t" << code << "\t" << context << "\t" << message << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-measurement feedback simulations"};
  app.require_subcommand(1);

  std::string configPath, outDir;
  std::size_t trajectories = 0;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  bool checkDt = false;

  auto* run = app.add_subcommand("run", "Run a scenario config and write its results");
  run->add_option("config", configPath, "Scenario config (JSON)")->required();
  auto* outOpt = run->add_option("--out", outDir, "Output directory (overrides the config)");
  auto* trajOpt = run->add_option("--trajectories", trajectories, "Override the ensemble size")
                      ->check(CLI::PositiveNumber);
  auto* seedOpt = run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--workers", workers, "Worker threads (results do not depend on this)")
      ->check(CLI::Range(1u, 1024u));
  run->add_flag("--dt-check", checkDt, "Also run the dt-halving drift check");

  auto* list = app.add_subcommand("list", "List registered scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("UsageError", "cli", e.what());
  }

  if (list->parsed()) {
    for (const auto& n : qfc::scenarioNames()) std::cout << n << "\n";
    return 0;
  }

  std::string context = configPath;
  try {
    const qfc::RunConfig cfg = qfc::parseConfig(configPath);
    context = cfg.scenario;
    qfc::RuntimeOptions rt;
    if (*trajOpt) rt.trajectories = trajectories;
    if (*seedOpt) rt.seed = seed;
    rt.workers = workers;
    const std::string dir = *outOpt ? outDir : (cfg.outputDir.empty() ? "results/" + cfg.scenario : cfg.outputDir);

    const qfc::ScenarioResult res = qfc::runScenario(cfg, rt);
    qfc::writeResults(res, dir);
    for (const auto& [name, s] : res.scalars) {
      std::cout << name << " = " << qfc::formatNumber(s.value);
      if (s.stderr_) std::cout << " +- " << qfc::formatNumber(*s.stderr_);
      std::cout << "\n";
    }
    if (checkDt) {
      const qfc::DriftCheck d = qfc::dtHalvingCheck(cfg, rt);
      std::cout << "dt-check " << d.observable << ": coarse " << qfc::formatNumber(d.coarse) << " fine "
                << qfc::formatNumber(d.fine) << " drift " << qfc::formatNumber(d.drift) << " tol "
                << qfc::formatNumber(d.tolerance) << (d.pass ? " ok" : " FAILED") << "\n";
      if (!d.pass) return fail("DriftCheckFailed", context, "dt-halving drift exceeds tolerance");
    }
    std::cout << "wrote " << dir << "\n";
    return 0;
  } catch (const qfc::TrajectoryError& e) {
    return fail(std::string(qfc::errorName(e.code())), context,
                std::string(qfc::errorName(e.innerCode())) + ": " + e.what());
  } catch (const qfc::Error& e) {
    return fail(std::string(qfc::errorName(e.code())), context, e.what());
  } catch (const std::exception& e) {
    return fail("InternalError", context, e.what());
  }
}
