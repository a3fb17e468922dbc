#pragma once
// Flat key/value configuration files.
//
// Grammar: one `key = value` per line. `#` starts a comment that runs to the
// end of the line; blank lines are ignored. Keys may appear at most once.
// Lists (tail_ladder, f) are comma separated. Booleans are true/false.
//
// The scenario preset is applied before any other key, so every key in the
// file overrides the preset regardless of line order.

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "nsf/solver.hpp"

namespace nsf {

/// Parse or validation failure. `line` is 0 when the error is not tied to a line.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& what, int line = 0)
      : std::invalid_argument(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names{"steady", "buoyant-blob", "shear-decay",
                                              "conduction"};
  return names;
}

/// Defaults for a scenario preset.
inline RunConfig scenario_preset(const std::string& name) {
  RunConfig cfg;
  cfg.scenario = name;
  if (name == "steady" || name == "shear-decay") return cfg;
  if (name == "buoyant-blob") {
    // low diffusivity so that the blob moves before it diffuses away
    auto& c = cfg.constitutive;
    c.nu_lo = c.nu_hi = 0.01;
    c.kappa_lo = c.kappa_hi = 0.01;
    return cfg;
  }
  if (name == "conduction") {
    // the profile lies in the cosine span, so it is taken without mollification
    cfg.f = {0.0, 0.0};
    cfg.n_moll = 0.0;
    return cfg;
  }
  throw ConfigError("unknown scenario '" + name +
                    "' (expected steady, buoyant-blob, shear-decay or conduction)");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, std::string_view v) {
  v = trim(v);
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw ConfigError("key '" + key + "': '" + std::string(v) + "' is not a number");
  return x;
}

template <class Int>
Int parse_int(const std::string& key, std::string_view v) {
  v = trim(v);
  Int x = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
    throw ConfigError("key '" + key + "': '" + std::string(v) + "' is not an integer");
  return x;
}

inline bool parse_bool(const std::string& key, std::string_view v) {
  v = trim(v);
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + std::string(v) + "'");
}

inline std::vector<double> parse_list(const std::string& key, std::string_view v) {
  std::vector<double> out;
  while (true) {
    const auto comma = v.find(',');
    out.push_back(parse_double(key, v.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

/// Shortest text that parses back to the same double.
inline std::string fmt_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

}  // namespace detail

/// Assign one key. Throws ConfigError naming the key on unknown keys or
/// malformed values. Range checks happen in RunConfig::validate.
inline void set_config_key(RunConfig& cfg, const std::string& key, std::string_view value) {
  using namespace detail;
  auto& c = cfg.constitutive;
  const std::string v(trim(value));
  auto num = [&] { return parse_double(key, v); };
  auto whole = [&] { return parse_int<int>(key, v); };
  auto wrap = [&](auto&& fn) {
    try {
      fn();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& e) {
      throw ConfigError("key '" + key + "': " + e.what());
    }
  };

  if (key == "scenario") {
    (void)scenario_preset(v);  // rejects unknown names
    cfg.scenario = v;
  } else if (key == "p") c.p = num();
  else if (key == "nu_lo") c.nu_lo = num();
  else if (key == "nu_hi") c.nu_hi = num();
  else if (key == "kappa_lo") c.kappa_lo = num();
  else if (key == "kappa_hi") c.kappa_hi = num();
  else if (key == "eps_reg") c.eps_reg = num();
  else if (key == "nu_profile") wrap([&] { c.nu_profile = parse_profile(v); });
  else if (key == "kappa_profile") wrap([&] { c.kappa_profile = parse_profile(v); });
  else if (key == "k") cfg.k = num();
  else if (key == "n") cfg.n = whole();
  else if (key == "m") cfg.m = whole();
  else if (key == "grid_factor") cfg.grid_factor = num();
  else if (key == "mean_flow") cfg.mean_flow = parse_bool(key, v);
  else if (key == "Lx") cfg.Lx = num();
  else if (key == "d") cfg.dimension = whole();
  else if (key == "alpha") cfg.alpha = num();
  else if (key == "f") {
    const auto l = parse_list(key, v);
    if (l.size() != 2) throw ConfigError("key 'f': expected two components");
    cfg.f = {l[0], l[1]};
  } else if (key == "t_end") cfg.t_end = num();
  else if (key == "dt") cfg.dt = num();
  else if (key == "integrator") wrap([&] { cfg.integrator = parse_integrator(v); });
  else if (key == "rtol") cfg.rtol = num();
  else if (key == "atol") cfg.atol = num();
  else if (key == "outputs") cfg.outputs = whole();
  else if (key == "n_moll") cfg.n_moll = num();
  else if (key == "seed") cfg.seed = parse_int<std::uint64_t>(key, v);
  else if (key == "convective_form") wrap([&] { cfg.convective = parse_convective_form(v); });
  else if (key == "entropy_eps") cfg.entropy_eps = num();
  else if (key == "pressure") cfg.pressure = parse_bool(key, v);
  else if (key == "dump_fields") cfg.dump_fields = parse_bool(key, v);
  else if (key == "blob_amplitude") cfg.blob_amplitude = num();
  else if (key == "blob_sigma") cfg.blob_sigma = num();
  else if (key == "blob_x") cfg.blob_x = num();
  else if (key == "blob_y") cfg.blob_y = num();
  else if (key == "shear_amplitude") cfg.shear_amplitude = num();
  else if (key == "tail_ladder") cfg.tail_ladder = parse_list(key, v);
  else if (key == "monitor_q") cfg.monitor_q = num();
  else if (key == "monitor_r") cfg.monitor_r = num();
  else throw ConfigError("unknown key '" + key + "'");
}

/// Parse configuration text. Validation is applied to the result.
inline RunConfig parse_config_text(std::string_view text) {
  struct Entry {
    std::string value;
    int line;
  };
  std::map<std::string, Entry> entries;
  std::vector<std::string> order;
  int lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", lineno);
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError("missing key before '='", lineno);
    if (value.empty()) throw ConfigError("key '" + key + "' has no value", lineno);
    if (entries.count(key)) throw ConfigError("duplicate key '" + key + "'", lineno);
    entries[key] = {value, lineno};
    order.push_back(key);
  }

  RunConfig cfg;
  try {
    cfg = scenario_preset(entries.count("scenario") ? entries["scenario"].value : "steady");
  } catch (const ConfigError& e) {
    throw ConfigError(e.what(), entries["scenario"].line);
  }
  for (const auto& key : order) {
    const auto& e = entries[key];
    try {
      set_config_key(cfg, key, e.value);
    } catch (const ConfigError& err) {
      throw ConfigError(err.what(), e.line);
    }
  }
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

/// Every key of the resolved configuration, in a fixed order, as `key = value`
/// lines that parse back to the same configuration.
inline std::string config_to_text(const RunConfig& cfg) {
  using detail::fmt_double;
  const auto& c = cfg.constitutive;
  std::ostringstream o;
  auto kv = [&](const char* k, const std::string& v) { o << k << " = " << v << '\n'; };
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  kv("scenario", cfg.scenario);
  kv("p", fmt_double(c.p));
  kv("nu_lo", fmt_double(c.nu_lo));
  kv("nu_hi", fmt_double(c.nu_hi));
  kv("kappa_lo", fmt_double(c.kappa_lo));
  kv("kappa_hi", fmt_double(c.kappa_hi));
  kv("eps_reg", fmt_double(c.eps_reg));
  kv("nu_profile", std::string(profile_tag(c.nu_profile)));
  kv("kappa_profile", std::string(profile_tag(c.kappa_profile)));
  kv("k", fmt_double(cfg.k));
  kv("n", std::to_string(cfg.n));
  kv("m", std::to_string(cfg.m));
  kv("grid_factor", fmt_double(cfg.grid_factor));
  kv("mean_flow", b(cfg.mean_flow));
  kv("Lx", fmt_double(cfg.Lx));
  kv("d", std::to_string(cfg.dimension));
  kv("alpha", fmt_double(cfg.alpha));
  kv("f", fmt_double(cfg.f[0]) + ", " + fmt_double(cfg.f[1]));
  kv("t_end", fmt_double(cfg.t_end));
  kv("dt", fmt_double(cfg.dt));
  kv("integrator", integrator_tag(cfg.integrator));
  kv("rtol", fmt_double(cfg.rtol));
  kv("atol", fmt_double(cfg.atol));
  kv("outputs", std::to_string(cfg.outputs));
  kv("n_moll", fmt_double(cfg.n_moll));
  kv("seed", std::to_string(cfg.seed));
  kv("convective_form", convective_tag(cfg.convective));
  kv("entropy_eps", fmt_double(cfg.entropy_eps));
  kv("pressure", b(cfg.pressure));
  kv("dump_fields", b(cfg.dump_fields));
  kv("blob_amplitude", fmt_double(cfg.blob_amplitude));
  kv("blob_sigma", fmt_double(cfg.blob_sigma));
  kv("blob_x", fmt_double(cfg.blob_x));
  kv("blob_y", fmt_double(cfg.blob_y));
  kv("shear_amplitude", fmt_double(cfg.shear_amplitude));
  std::string ladder;
  for (std::size_t i = 0; i < cfg.tail_ladder.size(); ++i)
    ladder += (i ? ", " : "") + fmt_double(cfg.tail_ladder[i]);
  kv("tail_ladder", ladder);
  kv("monitor_q", fmt_double(cfg.monitor_q));
  kv("monitor_r", fmt_double(cfg.monitor_r));
  return o.str();
}

/// Two configurations are equal when every key serializes identically.
inline bool same_config(const RunConfig& a, const RunConfig& b) {
  return config_to_text(a) == config_to_text(b);
}

}  // namespace nsf
