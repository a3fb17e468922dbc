#pragma once
// Report emission: diagnostics table, field snapshots, manifest, summary,
// timing, and parameter sweeps.
//
// Everything except `timing` is a pure function of the configuration, so two
// identical runs produce byte-identical files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nsf/config.hpp"
#include "nsf/diagnostics.hpp"
#include "nsf/exponents.hpp"
#include "nsf/pressure.hpp"

namespace nsf {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kDiagnosticsVersion = 1;

namespace detail {

inline std::string sci(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

inline void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  out << body;
  out.flush();
  if (!out) throw std::runtime_error("write to '" + path.string() + "' failed");
}

}  // namespace detail

/// Column names of diagnostics.csv in order.
inline std::vector<std::string> diagnostics_columns(const std::vector<double>& ladder) {
  std::vector<std::string> cols{
      "t", "kinetic", "thermal", "energy", "boundary", "energy_residual", "theta_min",
      "theta_max", "entropy", "acc_entropy_change", "acc_conduction", "acc_dissipation",
      "acc_buoyancy", "prod_conduction", "prod_dissipation", "prod_buoyancy",
      "min_conduction_integrand", "min_dissipation_integrand", "dissipation", "v_l2sq",
      "v_w1p", "S_lp", "v_l5p3", "theta_lq", "grad_theta_lr", "pi_lz", "pressure_mean",
      "pressure_residual", "conv_orth", "transport_orth", "buoyancy_cancel"};
  for (double m : ladder) cols.push_back("tail_m" + detail::fmt_double(m));
  for (double m : ladder) cols.push_back("tail_majorant_m" + detail::fmt_double(m));
  return cols;
}

inline std::string diagnostics_csv(const DiagnosticsReport& rep) {
  std::ostringstream o;
  o << "# nsf diagnostics v" << kDiagnosticsVersion << '\n';
  const auto cols = diagnostics_columns(rep.tail_ladder);
  for (std::size_t i = 0; i < cols.size(); ++i) o << (i ? "," : "") << cols[i];
  o << '\n';
  for (const auto& s : rep.samples) {
    const double row[] = {s.t,
                          s.kinetic,
                          s.thermal,
                          s.energy,
                          s.boundary,
                          s.energy_residual,
                          s.theta_min,
                          s.theta_max,
                          s.entropy,
                          s.acc.entropy_change,
                          s.acc.conduction,
                          s.acc.dissipation,
                          s.acc.buoyancy,
                          s.prod_conduction,
                          s.prod_dissipation,
                          s.prod_buoyancy,
                          s.min_conduction_integrand,
                          s.min_dissipation_integrand,
                          s.dissipation,
                          s.v_l2sq,
                          s.v_w1p,
                          s.S_lp,
                          s.v_l5p3,
                          s.theta_lq,
                          s.grad_theta_lr,
                          s.pi_lz,
                          s.pressure_mean,
                          s.pressure_residual,
                          s.conv_orth,
                          s.transport_orth,
                          s.buoyancy_cancel};
    bool first = true;
    for (double v : row) {
      o << (first ? "" : ",") << detail::sci(v);
      first = false;
    }
    for (double v : s.tail) o << ',' << detail::sci(v);
    for (double v : s.tail_majorant) o << ',' << detail::sci(v);
    o << '\n';
  }
  return o.str();
}

/// Grid values of velocity, temperature and (optionally) pressure.
inline std::string fields_csv(const GalerkinSystem& sys, const FluidState& s, bool with_pressure) {
  const auto& disc = sys.disc();
  const Grid& g = disc.grid();
  const VelocityGrid V = disc.eval_velocity(s.c);
  const MatrixXd th = disc.eval_scalar_values(s.d);
  MatrixXd pi;
  if (with_pressure) pi = disc.eval_scalar_values(reconstruct_pressure(sys, s).coef);
  std::ostringstream o;
  o << "x,y,u,v,theta" << (with_pressure ? ",pi" : "") << '\n';
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      o << detail::sci(g.x[i]) << ',' << detail::sci(g.y[j]) << ',' << detail::sci(V.u(i, j))
        << ',' << detail::sci(V.v(i, j)) << ',' << detail::sci(th(i, j));
      if (with_pressure) o << ',' << detail::sci(pi(i, j));
      o << '\n';
    }
  return o.str();
}

inline std::string fields_filename(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "fields_%.6f.csv", t);
  return buf;
}

/// Resolved configuration followed by derived sizes as comment lines. The
/// comments are ignored when the manifest is parsed back.
inline std::string manifest_text(const GalerkinSystem& sys) {
  const auto& cfg = sys.config();
  const auto& disc = sys.disc();
  std::ostringstream o;
  o << "# nsf " << kToolVersion << " run manifest\n";
  o << config_to_text(cfg);
  o << "# velocity_unknowns = " << sys.nv() << '\n';
  o << "# temperature_unknowns = " << sys.nt() << '\n';
  o << "# grid = " << disc.grid().nx << " x " << disc.grid().ny << '\n';
  o << "# mollifier_radius = " << detail::fmt_double(cfg.mollifier_radius()) << '\n';
  o << "# output_times = " << cfg.outputs + 1 << '\n';
  o << "# threads = 1\n";
  return o.str();
}

/// Flat `key = value` text with the final scalars of a run.
inline std::string summary_text(const RunResult& r) {
  const auto& rep = r.report;
  std::ostringstream o;
  auto kv = [&](const std::string& k, double v) { o << k << " = " << detail::sci(v) << '\n'; };
  auto kvi = [&](const std::string& k, long v) { o << k << " = " << v << '\n'; };
  auto kvb = [&](const std::string& k, bool v) { o << k << " = " << (v ? "true" : "false") << '\n'; };

  const auto eb = energy_balance(rep);
  const auto en = entropy_balance(rep);
  const auto tc = tail_check(rep);
  double tmin = INFINITY, tmax = -INFINITY, conv = 0.0, transp = 0.0, buoy = 0.0, pres = 0.0;
  for (const auto& s : rep.samples) {
    tmin = std::min(tmin, s.theta_min);
    tmax = std::max(tmax, s.theta_max);
    conv = std::max(conv, s.conv_orth);
    transp = std::max(transp, s.transport_orth);
    buoy = std::max(buoy, s.buoyancy_cancel);
    pres = std::max(pres, s.pressure_residual);
  }
  kv("t_end", rep.samples.empty() ? 0.0 : rep.samples.back().t);
  kv("energy_initial", rep.energy0());
  kv("energy_residual_max_relative", eb.max_relative);
  kv("energy_residual_final_relative", eb.final_signed);
  kv("entropy_time_defect_final", en.final_time_defect);
  kv("entropy_space_defect_final", en.final_space_defect);
  kv("min_conduction_integrand", en.min_conduction_integrand);
  kv("min_dissipation_integrand", en.min_dissipation_integrand);
  kvb("positivity_violation", en.positivity_violation);
  kv("theta_min", tmin);
  kv("theta_max", tmax);
  kv("conv_orth_max", conv);
  kv("transport_orth_max", transp);
  kv("buoyancy_cancel_max", buoy);
  kv("pressure_residual_max", pres);
  kvb("tail_nonincreasing", tc.nonincreasing);
  kvb("tail_zero_above_max", tc.zero_above_max);
  kvi("steps_accepted", rep.stats.accepted);
  kvi("steps_rejected", rep.stats.rejected);
  kvi("rhs_evaluations", rep.stats.rhs_evals);
  return o.str();
}

/// The a-priori monitor table as text, one `name sup integral` row each.
inline std::string monitors_text(const DiagnosticsReport& rep, double q, double r) {
  std::ostringstream o;
  o << "# monitor sup time_integral\n";
  for (const auto& m : apriori_monitors(rep, q, r))
    o << m.name << ' ' << detail::sci(m.sup) << ' ' << detail::sci(m.integral) << '\n';
  return o.str();
}

/// Prepares an output directory. An existing non-empty directory is refused
/// unless `force` is set.
inline void prepare_output_dir(const std::filesystem::path& dir, bool force) {
  namespace fs = std::filesystem;
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir))
      throw std::runtime_error("output path '" + dir.string() + "' exists and is not a directory");
    if (!fs::is_empty(dir) && !force)
      throw std::runtime_error("output directory '" + dir.string() +
                               "' is not empty (use --force to overwrite)");
  }
  fs::create_directories(dir);
}

/// Writes manifest, diagnostics.csv, summary, monitors, fields_<t>.csv and
/// timing into `dir`, which must already exist.
inline void emit_reports(const GalerkinSystem& sys, const RunResult& r,
                         const std::filesystem::path& dir, double wall_seconds) {
  const auto& cfg = sys.config();
  detail::write_file(dir / "manifest", manifest_text(sys));
  detail::write_file(dir / "diagnostics.csv", diagnostics_csv(r.report));
  detail::write_file(dir / "summary", summary_text(r));
  detail::write_file(dir / "monitors", monitors_text(r.report, cfg.monitor_q, cfg.monitor_r));
  if (cfg.dump_fields)
    for (const auto& s : r.trajectory)
      detail::write_file(dir / fields_filename(s.t), fields_csv(sys, s, cfg.pressure));
  std::ostringstream t;
  t << "wall_seconds = " << detail::sci(wall_seconds) << '\n';
  detail::write_file(dir / "timing", t.str());
}

// ---- sweeps -------------------------------------------------------------------------

struct SweepRow {
  std::string value;
  bool ok = false;
  std::string error;
  double energy_residual = kNaN;  // max relative
  double entropy_time_defect = kNaN;
  double theta_min = kNaN, theta_max = kNaN, kinetic_final = kNaN;
  long steps = 0;
  double observed_order = kNaN;  // dt sweeps only, against the previous row
  RegularityClassification classification;
};

/// Runs `base` once per value of `key`. Runs are independent; a failing run
/// is recorded in its row and does not stop the sweep. Rows keep the order of
/// `values` whatever the number of worker threads.
inline std::vector<SweepRow> sweep(const RunConfig& base, const std::string& key,
                                   const std::vector<std::string>& values, int jobs = 1) {
  std::vector<SweepRow> rows(values.size());
  auto work = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.value = values[i];
    try {
      RunConfig cfg = base;
      set_config_key(cfg, key, values[i]);
      cfg.validate();
      row.classification = classify(cfg.constitutive.p, 3);
      const RunResult r = run(cfg);
      row.energy_residual = energy_balance(r.report).max_relative;
      row.entropy_time_defect = entropy_balance(r.report).final_time_defect;
      row.theta_min = INFINITY;
      row.theta_max = -INFINITY;
      for (const auto& s : r.report.samples) {
        row.theta_min = std::min(row.theta_min, s.theta_min);
        row.theta_max = std::max(row.theta_max, s.theta_max);
      }
      row.kinetic_final = r.report.samples.back().kinetic;
      row.steps = r.report.stats.accepted;
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
  };
  jobs = std::max(1, jobs);
  std::vector<std::thread> pool;
  std::mutex mu;
  std::size_t next = 0;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      while (true) {
        std::size_t i;
        {
          std::lock_guard<std::mutex> lock(mu);
          if (next >= values.size()) return;
          i = next++;
        }
        work(i);
      }
    });
  for (auto& t : pool) t.join();

  if (key == "dt")
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (!rows[i].ok || !rows[i - 1].ok) continue;
      const double h0 = detail::parse_double(key, rows[i - 1].value);
      const double h1 = detail::parse_double(key, rows[i].value);
      rows[i].observed_order = std::log(rows[i - 1].energy_residual / rows[i].energy_residual) /
                               std::log(h0 / h1);
    }
  return rows;
}

inline std::string sweep_csv(const std::string& key, const std::vector<SweepRow>& rows) {
  std::ostringstream o;
  o << "# nsf sweep v1\n";
  o << key
    << ",status,energy_residual,entropy_time_defect,theta_min,theta_max,kinetic_final,steps,"
       "observed_order,admissible,energy_equality,suitable,internal_energy_equality,error\n";
  for (const auto& r : rows) {
    const auto& c = r.classification;
    auto b = [&](bool x) { return r.ok ? (x ? "1" : "0") : ""; };
    std::string err = r.error;
    for (char& ch : err)
      if (ch == ',' || ch == '\n') ch = ';';
    o << r.value << ',' << (r.ok ? "ok" : "failed") << ',' << detail::sci(r.energy_residual)
      << ',' << detail::sci(r.entropy_time_defect) << ',' << detail::sci(r.theta_min) << ','
      << detail::sci(r.theta_max) << ',' << detail::sci(r.kinetic_final) << ',' << r.steps << ','
      << detail::sci(r.observed_order) << ',' << b(c.admissible) << ',' << b(c.energy_equality)
      << ',' << b(c.suitable) << ',' << b(c.internal_energy_equality) << ',' << err << '\n';
  }
  return o.str();
}

}  // namespace nsf
