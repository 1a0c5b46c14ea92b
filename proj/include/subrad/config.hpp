#ifndef SUBRAD_CONFIG_HPP
#define SUBRAD_CONFIG_HPP

/// \file config.hpp
/// \brief Run configuration: an INI-style document of `key = value` lines
///        grouped under `[section]` headers.
///
/// Comments start with `#` or `;`. Numbers accept an optional `2pi*` prefix
/// (so `omega_r = 2pi*13.6e3` reads as rad/s) and `inf`. Lists are comma
/// separated. Every unknown key is an error; see README for the full table.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "subrad/integrator.hpp"
#include "subrad/model.hpp"
#include "subrad/scenarios.hpp"
#include "subrad/schedule.hpp"

namespace subrad {

enum class ScenarioKind { relaxation, seeded, sweep, custom };

inline const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::relaxation: return "relaxation";
    case ScenarioKind::seeded: return "seeded";
    case ScenarioKind::sweep: return "sweep";
    case ScenarioKind::custom: return "custom";
  }
  return "?";
}

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, int line, const std::string& what)
      : std::runtime_error(format(key, line, what)), key_(std::move(key)), line_(line) {}
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& key, int line, const std::string& what) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!key.empty()) out += key + ": ";
    return out + what;
  }
  std::string key_;
  int line_;
};

struct RunConfig {
  ScenarioKind scenario = ScenarioKind::relaxation;
  std::uint64_t seed = 1;
  ModelParams model;
  StepControl step;

  // [controls]
  double eps = 0.6;  // pump ratio; for seeded runs the ratio before the switch
  double eps_after = 0.0;
  double switch_time = 0.6e-3;
  std::vector<double> seed_starts{0.0, 0.6e-3};
  double seed_duration = 100e-6;
  std::optional<double> eta;  // nullopt: calibrated
  double eta_factor = 5.0;
  double calibration_t_end = 3.5e-3;
  double t_end = 3.5e-3;
  std::vector<Segment> eps_segments;  // custom only
  std::vector<Segment> eta_segments;

  // [init]
  InitialKind init_kind = InitialKind::noise;
  double noise_amp = -1.0;  // negative: 1/sqrt(2 N0)

  DetectionSettings detect;

  // [sweep]
  std::vector<double> eps_list;
  double t_hold = 1.5e-3;
  int replicas = 5;

  // [output]
  std::string trajectory_file = "trajectory.csv";
  std::string sweep_file = "sweep.csv";

  InitialStateSpec init_spec() const { return {init_kind, noise_amp, seed}; }
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

struct Entry {
  std::string value;
  int line = 0;
  bool used = false;
};

class Document {
 public:
  explicit Document(std::string_view text) {
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      auto end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string line(text.substr(pos, end - pos));
      pos = end + 1;
      ++line_no;
      if (auto c = line.find_first_of("#;"); c != std::string::npos) line.erase(c);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw ConfigError("", line_no, "malformed section header");
        section = trim(std::string_view(line).substr(1, line.size() - 2));
        if (!known_section(section))
          throw ConfigError(section, line_no, "unknown section");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError("", line_no, "expected `key = value`");
      const std::string key = trim(std::string_view(line).substr(0, eq));
      const std::string full = section.empty() ? key : section + "." + key;
      if (key.empty()) throw ConfigError("", line_no, "empty key");
      if (entries_.count(full))
        throw ConfigError(full, line_no, "duplicate key");
      entries_[full] = {trim(std::string_view(line).substr(eq + 1)), line_no, false};
    }
  }

  Entry* find(const std::string& key) {
    auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }

  void reject_unused() const {
    for (const auto& [k, e] : entries_)
      if (!e.used) throw ConfigError(k, e.line, "unknown key");
  }

 private:
  static bool known_section(const std::string& s) {
    for (const char* n : {"model", "integrator", "controls", "init", "detect", "sweep",
                          "output"})
      if (s == n) return true;
    return false;
  }
  std::map<std::string, Entry> entries_;
};

inline double parse_number(const std::string& key, const Entry& e, std::string text) {
  double scale = 1.0;
  if (text.rfind("2pi*", 0) == 0) {
    scale = two_pi;
    text = trim(std::string_view(text).substr(4));
  }
  if (text == "inf" || text == "+inf") return scale * INFINITY;
  double v = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || text.empty())
    throw ConfigError(key, e.line, "not a number: '" + text + "'");
  return scale * v;
}

inline std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += format_number(v[i]);
  }
  return out;
}

inline std::string format_segments(const std::vector<Segment>& segs) {
  std::string out;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    if (i) out += ", ";
    out += format_number(segs[i].t_start) + ":" + format_number(segs[i].t_end) + ":" +
           format_number(segs[i].value);
  }
  return out;
}

}  // namespace detail

/// Parses and validates a config document. Defaults that depend on the
/// scenario (eps, t_end, initial-state kind) are filled in afterwards.
inline RunConfig parse_config(std::string_view text) {
  using detail::Entry;
  detail::Document doc(text);
  RunConfig cfg;

  auto num = [&](const std::string& key, double& out) -> Entry* {
    Entry* e = doc.find(key);
    if (e) out = detail::parse_number(key, *e, e->value);
    return e;
  };
  auto integer = [&](const std::string& key, auto& out) -> Entry* {
    Entry* e = doc.find(key);
    if (!e) return nullptr;
    using T = std::remove_reference_t<decltype(out)>;
    T v{};
    auto [ptr, ec] = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (ec != std::errc{} || ptr != e->value.data() + e->value.size() || e->value.empty())
      throw ConfigError(key, e->line, "not an integer: '" + e->value + "'");
    out = v;
    return e;
  };
  auto list = [&](const std::string& key, std::vector<double>& out) -> Entry* {
    Entry* e = doc.find(key);
    if (!e) return nullptr;
    out.clear();
    if (e->value.empty()) return e;
    for (const auto& item : detail::split(e->value, ','))
      out.push_back(detail::parse_number(key, *e, item));
    return e;
  };
  auto segments = [&](const std::string& key, std::vector<Segment>& out) -> Entry* {
    Entry* e = doc.find(key);
    if (!e) return nullptr;
    out.clear();
    for (const auto& item : detail::split(e->value, ',')) {
      const auto parts = detail::split(item, ':');
      if (parts.size() != 3)
        throw ConfigError(key, e->line, "segments are written start:end:value");
      out.push_back({detail::parse_number(key, *e, parts[0]),
                     detail::parse_number(key, *e, parts[1]),
                     detail::parse_number(key, *e, parts[2])});
    }
    return e;
  };
  auto fail = [](const std::string& key, const Entry* e, const std::string& what) {
    throw ConfigError(key, e ? e->line : 0, what);
  };
  auto check = [&](bool ok, const std::string& key, const Entry* e, const char* what) {
    if (!ok) fail(key, e, what);
  };

  Entry* scen = doc.find("scenario");
  if (!scen) throw ConfigError("scenario", 0, "missing required key");
  if (scen->value == "relaxation") cfg.scenario = ScenarioKind::relaxation;
  else if (scen->value == "seeded") cfg.scenario = ScenarioKind::seeded;
  else if (scen->value == "sweep") cfg.scenario = ScenarioKind::sweep;
  else if (scen->value == "custom") cfg.scenario = ScenarioKind::custom;
  else fail("scenario", scen, "expected relaxation | seeded | sweep | custom");
  integer("seed", cfg.seed);

  // scenario-dependent defaults
  switch (cfg.scenario) {
    case ScenarioKind::relaxation:
      cfg.eps = 0.6;
      cfg.t_end = 3.5e-3;
      cfg.init_kind = InitialKind::noise;
      break;
    case ScenarioKind::seeded:
      cfg.eps = 1.8;
      cfg.t_end = 1.2e-3;
      cfg.init_kind = InitialKind::pure;
      break;
    case ScenarioKind::sweep:
      cfg.eps = 0.0;
      cfg.seed_starts = {0.0};
      cfg.init_kind = InitialKind::noise;
      cfg.eps_list = eps_range(0.0, 2.1, 0.1);
      break;
    case ScenarioKind::custom:
      cfg.init_kind = InitialKind::pure;
      break;
  }

  auto& m = cfg.model;
  const Entry* e = nullptr;
  e = num("model.omega_r", m.omega_r);
  check(m.omega_r > 0 && std::isfinite(m.omega_r), "model.omega_r", e, "must be > 0");
  bool delta_set = num("model.delta", m.delta) != nullptr;
  bool Delta_set = num("model.Delta", m.Delta) != nullptr;
  if (!delta_set) m.delta = m.omega_r;
  if (!Delta_set) m.Delta = 2.0 * m.omega_r;
  e = num("model.g", m.g);
  check(std::isfinite(m.g), "model.g", e, "must be finite");
  e = num("model.N0", m.N0);
  check(m.N0 > 0 && std::isfinite(m.N0), "model.N0", e, "must be > 0");
  e = num("model.kappa", m.kappa);
  check(m.kappa > 0 && std::isfinite(m.kappa), "model.kappa", e, "must be > 0");
  e = num("model.tau_loss", m.tau_loss);
  check(m.tau_loss > 0, "model.tau_loss", e, "must be > 0 (inf disables loss)");
  e = integer("model.n_min", m.n_min);
  check(m.n_min <= 0, "model.n_min", e, "must be <= 0");
  e = integer("model.n_max", m.n_max);
  check(m.n_max >= 1, "model.n_max", e, "must be >= 1");

  auto& s = cfg.step;
  if (Entry* me = doc.find("integrator.mode")) {
    if (me->value == "adaptive") s.mode = StepMode::adaptive;
    else if (me->value == "fixed") s.mode = StepMode::fixed;
    else fail("integrator.mode", me, "expected adaptive | fixed");
  }
  e = num("integrator.dt", s.dt);
  check(s.dt > 0 && std::isfinite(s.dt), "integrator.dt", e, "must be > 0");
  e = num("integrator.rel_tol", s.rel_tol);
  check(s.rel_tol > 0, "integrator.rel_tol", e, "must be > 0");
  e = num("integrator.abs_tol", s.abs_tol);
  check(s.abs_tol > 0, "integrator.abs_tol", e, "must be > 0");
  e = num("integrator.sample_every", s.sample_every);
  check(s.sample_every >= s.dt, "integrator.sample_every", e, "must be >= dt");

  e = num("controls.eps", cfg.eps);
  check(cfg.eps >= 0 && cfg.eps <= 3, "controls.eps", e, "must be in [0, 3]");
  e = num("controls.eps_after", cfg.eps_after);
  check(cfg.eps_after >= 0 && cfg.eps_after <= 3, "controls.eps_after", e, "must be in [0, 3]");
  e = num("controls.switch_time", cfg.switch_time);
  check(cfg.switch_time >= 0, "controls.switch_time", e, "must be >= 0");
  e = list("controls.seed_starts", cfg.seed_starts);
  for (double v : cfg.seed_starts)
    check(v >= 0, "controls.seed_starts", e, "must be >= 0");
  e = num("controls.seed_duration", cfg.seed_duration);
  check(cfg.seed_duration > 0, "controls.seed_duration", e, "must be > 0");
  if (Entry* ee = doc.find("controls.eta")) {
    if (ee->value == "auto") {
      cfg.eta.reset();
    } else {
      cfg.eta = detail::parse_number("controls.eta", *ee, ee->value);
      check(*cfg.eta >= 0, "controls.eta", ee, "must be >= 0");
    }
  }
  e = num("controls.eta_factor", cfg.eta_factor);
  check(cfg.eta_factor > 0, "controls.eta_factor", e, "must be > 0");
  e = num("controls.calibration_t_end", cfg.calibration_t_end);
  check(cfg.calibration_t_end > 0, "controls.calibration_t_end", e, "must be > 0");
  Entry* t_end_e = num("controls.t_end", cfg.t_end);
  Entry* eps_seg_e = segments("controls.eps_segments", cfg.eps_segments);
  Entry* eta_seg_e = segments("controls.eta_segments", cfg.eta_segments);

  if (Entry* ie = doc.find("init.kind")) {
    if (ie->value == "pure") cfg.init_kind = InitialKind::pure;
    else if (ie->value == "noise") cfg.init_kind = InitialKind::noise;
    else fail("init.kind", ie, "expected pure | noise");
  }
  if (Entry* ne = doc.find("init.noise_amp")) {
    if (ne->value == "auto") {
      cfg.noise_amp = -1.0;
    } else {
      cfg.noise_amp = detail::parse_number("init.noise_amp", *ne, ne->value);
      check(cfg.noise_amp >= 0, "init.noise_amp", ne, "must be >= 0");
    }
  }

  e = num("detect.window", cfg.detect.window);
  check(cfg.detect.window > 0, "detect.window", e, "must be > 0");
  e = num("detect.pop_tol", cfg.detect.pop_tol);
  check(cfg.detect.pop_tol > 0, "detect.pop_tol", e, "must be > 0");
  e = num("detect.field_frac", cfg.detect.field_frac);
  check(cfg.detect.field_frac > 0, "detect.field_frac", e, "must be > 0");

  Entry* list_e = list("sweep.eps_list", cfg.eps_list);
  double start = 0.0, stop = 0.0, stride = 0.0;
  Entry* start_e = num("sweep.eps_start", start);
  Entry* stop_e = num("sweep.eps_stop", stop);
  Entry* step_e = num("sweep.eps_step", stride);
  if (start_e || stop_e || step_e) {
    if (list_e) fail("sweep.eps_list", list_e, "give either eps_list or a range, not both");
    if (!(start_e && stop_e && step_e))
      fail("sweep.eps_step", step_e ? step_e : (stop_e ? stop_e : start_e),
           "a range needs eps_start, eps_stop and eps_step");
    check(stride > 0 && stop >= start, "sweep.eps_step", step_e, "invalid range");
    cfg.eps_list = eps_range(start, stop, stride);
  }
  for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
    const Entry* le = list_e ? list_e : step_e;
    check(cfg.eps_list[i] >= 0 && cfg.eps_list[i] <= 3, "sweep.eps_list", le,
          "values must be in [0, 3]");
    if (i > 0)
      check(cfg.eps_list[i] > cfg.eps_list[i - 1], "sweep.eps_list", le,
            "must be strictly increasing");
  }
  e = num("sweep.t_hold", cfg.t_hold);
  check(cfg.t_hold > 0, "sweep.t_hold", e, "must be > 0");
  e = integer("sweep.replicas", cfg.replicas);
  check(cfg.replicas >= 1, "sweep.replicas", e, "must be >= 1");

  if (Entry* oe = doc.find("output.trajectory")) cfg.trajectory_file = oe->value;
  if (Entry* oe = doc.find("output.sweep")) cfg.sweep_file = oe->value;

  doc.reject_unused();

  if (cfg.scenario == ScenarioKind::sweep) cfg.t_end = cfg.t_hold;
  if (cfg.scenario == ScenarioKind::custom) {
    if (!eps_seg_e) throw ConfigError("controls.eps_segments", 0, "missing required key");
    if (!eta_seg_e) throw ConfigError("controls.eta_segments", 0, "missing required key");
    try {
      Schedule probe(cfg.eps_segments, cfg.eta_segments);
      if (!t_end_e) cfg.t_end = probe.t_end();
    } catch (const std::invalid_argument& ex) {
      throw ConfigError("controls.eps_segments", eps_seg_e->line, ex.what());
    }
  }
  check(cfg.t_end > 0 && std::isfinite(cfg.t_end), "controls.t_end", t_end_e,
        "must be > 0");
  if (cfg.eps_list.empty() && cfg.scenario == ScenarioKind::sweep)
    throw ConfigError("sweep.eps_list", 0, "sweep needs at least one eps value");
  return cfg;
}

/// Writes every field so that parse_config(serialize_config(c)) == c.
inline std::string serialize_config(const RunConfig& c) {
  using detail::format_number;
  std::ostringstream o;
  o << "scenario = " << to_string(c.scenario) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "\n[model]\n";
  o << "omega_r = " << format_number(c.model.omega_r) << "\n";
  o << "delta = " << format_number(c.model.delta) << "\n";
  o << "Delta = " << format_number(c.model.Delta) << "\n";
  o << "g = " << format_number(c.model.g) << "\n";
  o << "N0 = " << format_number(c.model.N0) << "\n";
  o << "kappa = " << format_number(c.model.kappa) << "\n";
  o << "tau_loss = " << format_number(c.model.tau_loss) << "\n";
  o << "n_min = " << c.model.n_min << "\n";
  o << "n_max = " << c.model.n_max << "\n";
  o << "\n[integrator]\n";
  o << "mode = " << (c.step.mode == StepMode::adaptive ? "adaptive" : "fixed") << "\n";
  o << "dt = " << format_number(c.step.dt) << "\n";
  o << "rel_tol = " << format_number(c.step.rel_tol) << "\n";
  o << "abs_tol = " << format_number(c.step.abs_tol) << "\n";
  o << "sample_every = " << format_number(c.step.sample_every) << "\n";
  o << "\n[controls]\n";
  o << "eps = " << format_number(c.eps) << "\n";
  o << "eps_after = " << format_number(c.eps_after) << "\n";
  o << "switch_time = " << format_number(c.switch_time) << "\n";
  o << "seed_starts = " << detail::format_list(c.seed_starts) << "\n";
  o << "seed_duration = " << format_number(c.seed_duration) << "\n";
  o << "eta = " << (c.eta ? format_number(*c.eta) : std::string("auto")) << "\n";
  o << "eta_factor = " << format_number(c.eta_factor) << "\n";
  o << "calibration_t_end = " << format_number(c.calibration_t_end) << "\n";
  o << "t_end = " << format_number(c.t_end) << "\n";
  if (c.scenario == ScenarioKind::custom) {
    o << "eps_segments = " << detail::format_segments(c.eps_segments) << "\n";
    o << "eta_segments = " << detail::format_segments(c.eta_segments) << "\n";
  }
  o << "\n[init]\n";
  o << "kind = " << (c.init_kind == InitialKind::noise ? "noise" : "pure") << "\n";
  o << "noise_amp = " << (c.noise_amp < 0 ? std::string("auto") : format_number(c.noise_amp))
    << "\n";
  o << "\n[detect]\n";
  o << "window = " << format_number(c.detect.window) << "\n";
  o << "pop_tol = " << format_number(c.detect.pop_tol) << "\n";
  o << "field_frac = " << format_number(c.detect.field_frac) << "\n";
  o << "\n[sweep]\n";
  o << "eps_list = " << detail::format_list(c.eps_list) << "\n";
  o << "t_hold = " << format_number(c.t_hold) << "\n";
  o << "replicas = " << c.replicas << "\n";
  o << "\n[output]\n";
  o << "trajectory = " << c.trajectory_file << "\n";
  o << "sweep = " << c.sweep_file << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Config -> scenario inputs

inline RelaxationConfig relaxation_config(const RunConfig& c) {
  RelaxationConfig r;
  r.model = c.model;
  r.step = c.step;
  r.eps = c.eps;
  r.t_end = c.t_end;
  r.init = c.init_spec();
  r.detect = c.detect;
  return r;
}

inline SeededConfig seeded_config(const RunConfig& c) {
  SeededConfig s;
  s.model = c.model;
  s.step = c.step;
  s.eps_before = c.eps;
  s.eps_after = c.eps_after;
  s.switch_time = c.switch_time;
  s.seed_starts = c.seed_starts;
  s.seed_duration = c.seed_duration;
  s.eta = c.eta;
  s.eta_factor = c.eta_factor;
  s.calibration_t_end = c.calibration_t_end;
  s.t_end = c.t_end;
  s.init = c.init_spec();
  s.detect = c.detect;
  return s;
}

inline SweepConfig sweep_config(const RunConfig& c, unsigned workers = 0) {
  SweepConfig s;
  s.base = seeded_config(c);
  s.eps_list = c.eps_list;
  s.t_hold = c.t_hold;
  s.replicas = c.replicas;
  s.workers = workers;
  return s;
}

}  // namespace subrad

#endif  // SUBRAD_CONFIG_HPP
