// nsf: simulate, classify, sweep and verify.
//
// Exit codes: 0 ok, 1 usage or configuration error, 2 numerical failure,
// 3 invariant violation.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nsf/nsf.hpp"

namespace {

constexpr int kOk = 0, kUsage = 1, kNumerical = 2, kInvariant = 3;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Flags that override config keys, flag name -> key.
struct Overrides {
  std::map<std::string, std::string> values;
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        "--" + flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
};

nsf::RunConfig load_config(const std::string& path, const Overrides& ov) {
  nsf::RunConfig cfg = path.empty() ? nsf::parse_config_text("") : nsf::parse_config_file(path);
  for (const auto& [key, v] : ov.values) {
    try {
      nsf::set_config_key(cfg, key, v);
    } catch (const nsf::ConfigError& e) {
      throw nsf::ConfigError(std::string("command line: ") + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw nsf::ConfigError(e.what());
  }
  return cfg;
}

void print_classification(const nsf::RegularityClassification& c) {
  using nsf::detail::fmt_double;
  std::printf("p = %s\nd = %d\nadmissible = %s\n", fmt_double(c.p).c_str(), c.d,
              c.admissible ? "true" : "false");
  if (c.d == 3) {
    std::printf("energy_equality = %s\n", c.energy_equality ? "true" : "false");
    std::printf("suitable = %s\n", c.suitable ? "true" : "false");
    std::printf("internal_energy_equality = %s\n", c.internal_energy_equality ? "true" : "false");
  }
  if (c.p > 6.0 / 5.0)
    std::printf("pressure_exponent = %s\n", fmt_double(nsf::pressure_exponent(c.p)).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Galerkin simulator for heat-conducting power-law fluids in a periodic channel"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "run one configuration and write reports");
  std::string sim_config, sim_out = "out";
  bool sim_force = false, sim_pressure = false;
  Overrides sim_ov;
  sim->add_option("--config", sim_config, "configuration file (key = value lines)");
  sim_ov.add(sim, "n", "n", "velocity modes per direction");
  sim_ov.add(sim, "m", "m", "temperature modes per direction");
  sim_ov.add(sim, "k", "k", "truncation level");
  sim_ov.add(sim, "p", "p", "growth exponent of the stress");
  sim_ov.add(sim, "alpha", "alpha", "wall friction coefficient");
  sim_ov.add(sim, "dt", "dt", "time step (fixed-step integrators) or first step");
  sim_ov.add(sim, "t-end", "t_end", "final time");
  sim_ov.add(sim, "seed", "seed", "random seed");
  sim->add_option("--out", sim_out, "output directory")->capture_default_str();
  sim->add_flag("--force", sim_force, "overwrite a non-empty output directory");
  sim->add_flag("--pressure", sim_pressure, "include the pressure in field snapshots");

  // classify
  auto* cls = app.add_subcommand("classify", "regularity classification of a growth exponent");
  double cls_p = 0.0;
  int cls_d = 3;
  cls->add_option("--p", cls_p, "growth exponent")->required();
  cls->add_option("--d", cls_d, "space dimension (2 or 3)")->capture_default_str();

  // sweep
  auto* swp = app.add_subcommand("sweep", "run a configuration over a list of values of one key");
  std::string swp_config, swp_param, swp_values, swp_out;
  int swp_jobs = 1;
  swp->add_option("--config", swp_config, "base configuration file");
  swp->add_option("--param", swp_param, "configuration key to vary")->required();
  swp->add_option("--values", swp_values, "comma-separated values")->required();
  swp->add_option("--out", swp_out, "write the table to this file as well as stdout");
  swp->add_option("--jobs", swp_jobs, "worker threads")->capture_default_str();

  // verify
  auto* ver = app.add_subcommand("verify", "run the invariant suite; exit 3 on violation");
  std::string ver_config;
  nsf::VerifyOptions ver_opt;
  Overrides ver_ov;
  ver->add_option("--config", ver_config, "configuration file");
  ver_ov.add(ver, "n", "n", "velocity modes per direction");
  ver_ov.add(ver, "m", "m", "temperature modes per direction");
  ver_ov.add(ver, "t-end", "t_end", "final time");
  ver->add_option("--bank", ver_opt.bank_size, "test functions per weak check")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*cls) {
      print_classification(nsf::classify(cls_p, cls_d));
      return kOk;
    }

    if (*sim) {
      const nsf::RunConfig cfg0 = load_config(sim_config, sim_ov);
      nsf::RunConfig cfg = cfg0;
      if (sim_pressure) cfg.pressure = true;
      nsf::prepare_output_dir(sim_out, sim_force);
      const auto t0 = std::chrono::steady_clock::now();
      const nsf::GalerkinSystem sys(cfg);
      const nsf::RunResult r = nsf::run(sys, nsf::prepare_initial_data(sys));
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      nsf::emit_reports(sys, r, sim_out, wall);
      std::cout << nsf::summary_text(r);
      return kOk;
    }

    if (*swp) {
      const nsf::RunConfig base = load_config(swp_config, {});
      const auto rows = nsf::sweep(base, swp_param, split_list(swp_values), swp_jobs);
      const std::string table = nsf::sweep_csv(swp_param, rows);
      std::cout << table;
      if (!swp_out.empty()) nsf::detail::write_file(swp_out, table);
      for (const auto& r : rows)
        if (!r.ok) return kNumerical;
      return kOk;
    }

    if (*ver) {
      const nsf::RunConfig cfg = load_config(ver_config, ver_ov);
      bool ok = true;
      const nsf::VerifyResult res = nsf::verify_run(cfg, ver_opt);
      std::printf("# outputs = %d, slack change at half cadence = %.1e\n", res.outputs,
                  res.cadence_change);
      for (const auto& c : res.checks) {
        std::printf("%s %s value=%.6e %s %.1e\n", c.pass() ? "PASS" : "FAIL", c.name.c_str(),
                    c.value, c.upper ? "<=" : ">=", c.bound);
        ok = ok && c.pass();
      }
      return ok ? kOk : kInvariant;
    }
  } catch (const nsf::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n' << e.dump() << '\n';
    return kNumerical;
  } catch (const nsf::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
