// proxlin: simulate, predict, compare and tune the stochastic prox-linear method.

#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "proxlin/commands.hpp"

namespace {

struct FlagHelp {
  const char* key;
  const char* help;
};

const FlagHelp kFlags[] = {
    {"d", "ambient dimension"},
    {"m", "batch size"},
    {"sigma", "noise standard deviation"},
    {"lambda", "inverse step size (lambda0 for delayed-linear)"},
    {"schedule", "constant|delayed-linear"},
    {"t0", "iteration after which delayed-linear ramps"},
    {"slope", "ramp slope of delayed-linear"},
    {"ramp-offset", "relative: lambda0+slope*(t-t0), absolute: lambda0+slope*t"},
    {"iters", "iterations T"},
    {"trials", "independent trials"},
    {"seed", "master seed"},
    {"alpha0", "initial overlap <mu0, mu_star> (overlap mode)"},
    {"init-dist", "initial ||mu0 - mu_star||^2 (selects distance mode)"},
    {"init-norm", "initial ||mu0||"},
    {"init-mode", "overlap|distance"},
    {"out", "output path; stdout when empty"},
    {"format", "csv|json"},
    {"nodes", "quadrature nodes per dimension"},
    {"quadrature", "polar|tensor"},
    {"v4-denominator", "symmetric|as-printed"},
    {"beta-exponent", "sqrt|inverse-sqrt"},
    {"solver", "auto|woodbury|dense"},
    {"policy", "min-samples|min-iterations|min-floor"},
    {"target-err", "target error for iteration counts"},
    {"budget", "iteration budget for min-floor"},
    {"m-grid", "comma-separated batch sizes"},
    {"lambda-grid", "comma-separated inverse step sizes"},
    {"coupled-lambda", "use lambda(m) = (1 + sigma^2) d / m"},
    {"gap-cutoff", "predicted-error cutoff for the pre-floor gap"},
    {"per-trial", "also write per-trial records (simulate)"},
    {"parallelism", "worker threads, 0 = all cores"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic prox-linear method for rank-one matrix sensing: simulation, "
               "deterministic trajectory prediction and offline tuning"};
  app.set_version_flag("--version", std::string(PROXLIN_VERSION));
  app.require_subcommand(1);

  const std::pair<const char*, proxlin::Mode> modes[] = {
      {"simulate", proxlin::Mode::kSimulate},
      {"predict", proxlin::Mode::kPredict},
      {"compare", proxlin::Mode::kCompare},
      {"tune", proxlin::Mode::kTune},
  };
  const char* descriptions[] = {
      "run the prox-linear method over independent trials",
      "compute the deterministic predicted trajectory",
      "compare median empirical error against the prediction",
      "sweep an (m, lambda) grid with predictions and recommend a point",
  };

  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> opts[4];
  std::string config_path[4];
  CLI::App* subs[4];
  for (int i = 0; i < 4; ++i) {
    subs[i] = app.add_subcommand(modes[i].first, descriptions[i]);
    subs[i]->add_option("--config", config_path[i], "key = value config file");
    for (const auto& f : kFlags) opts[i][f.key] = subs[i]->add_option(std::string("--") + f.key, values[f.key], f.help);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : proxlin::kExitValidation;
  }

  int active = 0;
  for (int i = 0; i < 4; ++i)
    if (subs[i]->parsed()) active = i;

  proxlin::RunConfig cfg;
  try {
    if (!config_path[active].empty()) cfg = proxlin::load_config(config_path[active], cfg);
    cfg.mode = modes[active].second;
    for (const auto& [key, opt] : opts[active])
      if (opt->count() > 0) proxlin::set_field(cfg, key, values[key]);
    if (opts[active]["init-dist"]->count() > 0 && opts[active]["init-mode"]->count() == 0)
      cfg.init.mode = proxlin::InitMode::kDistance;
    if (opts[active]["alpha0"]->count() > 0 && opts[active]["init-mode"]->count() == 0)
      cfg.init.mode = proxlin::InitMode::kOverlap;

    const auto res = proxlin::run_command(cfg);
    proxlin::emit(cfg, res, std::cout);
    std::cerr << res.summary << '\n';
    return res.exit_code;
  } catch (const proxlin::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return proxlin::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return proxlin::kExitIo;
  }
}
