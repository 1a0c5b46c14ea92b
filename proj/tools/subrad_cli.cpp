// Command-line front end: run | sweep | validate | calibrate-g.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "subrad/subrad.hpp"

namespace fs = std::filesystem;
using namespace subrad;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  long long seed = -1;
  bool quiet = false;
  double target_onset = 0.5e-3;
  double g_lo = 5.0;
  double g_hi = 500.0;
};

RunConfig load(const Options& opt) {
  std::ifstream in(opt.config_path, std::ios::binary);
  if (!in) throw std::runtime_error(opt.config_path + ": cannot open config");
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg;
  try {
    cfg = parse_config(buf.str());
  } catch (const ConfigError& e) {
    throw std::runtime_error(opt.config_path + ": " + e.what());
  }
  if (opt.seed >= 0) cfg.seed = static_cast<std::uint64_t>(opt.seed);
  return cfg;
}

unsigned worker_count() {
  if (const char* env = std::getenv("SUBRAD_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 0;
}

std::string fmt(double v) { return detail::format_number(v); }

std::string join(const std::vector<double>& v, int n_min, int lo, int hi) {
  std::string s;
  for (int n = lo; n <= hi; ++n) {
    const auto i = n - n_min;
    if (i < 0 || i >= static_cast<int>(v.size())) continue;
    char b[48];
    std::snprintf(b, sizeof b, "%s|c_%d|^2=%.4f", s.empty() ? "" : " ", n, v[static_cast<std::size_t>(i)]);
    s += b;
  }
  return s;
}

void print_summary(const RunConfig& cfg, const ScenarioResult& r) {
  std::printf("scenario: %s  samples: %zu\n", to_string(cfg.scenario),
              r.trajectory.samples.size());
  if (r.eta_used > 0) std::printf("seed eta: %.6g rad/s\n", r.eta_used);
  if (r.pulse)
    std::printf("pulse: peak %.6g photons at %.4f ms, half-rise %.4f ms\n",
                r.pulse->peak_photons, r.pulse->t_peak * 1e3, r.pulse->t_half_rise * 1e3);
  else
    std::printf("pulse: none\n");
  if (r.steady)
    std::printf("steady: from %.4f ms  %s  residual photons %.4g\n", r.steady->t_detect * 1e3,
                join(r.steady->populations, cfg.model.n_min, 0, 2).c_str(),
                r.steady->residual_photons);
  else
    std::printf("steady: not reached\n");
  for (const auto& st : r.stages)
    std::printf("seed @ %.3f ms: before %s | at %.3f ms %s\n", st.t_start * 1e3,
                join(st.before, cfg.model.n_min, 0, 2).c_str(), st.t_end * 1e3,
                join(st.after, cfg.model.n_min, 0, 2).c_str());
}

int do_sweep(const Options& opt, const RunConfig& cfg) {
  const auto result = run_epsilon_sweep(sweep_config(cfg, worker_count()));
  fs::create_directories(opt.out_dir);
  const fs::path path = fs::path(opt.out_dir) / cfg.sweep_file;
  write_sweep_csv(result, path, serialize_config(cfg));
  if (!opt.quiet) {
    std::printf("%-6s %-9s %-9s %-9s %-9s\n", "eps", "|c_0|^2", "|c_1|^2", "|c_2|^2",
                "photons");
    for (const auto& row : result.rows) {
      const auto i0 = static_cast<std::size_t>(-result.n_min);
      std::printf("%-6.2f %-9.4f %-9.4f %-9.4f %-9.3g\n", row.eps, row.pop_mean[i0],
                  row.pop_mean[i0 + 1], row.pop_mean[i0 + 2], row.photons_resid);
    }
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

int do_run(const Options& opt) {
  const RunConfig cfg = load(opt);
  if (cfg.scenario == ScenarioKind::sweep) return do_sweep(opt, cfg);

  ScenarioResult r;
  Metadata meta;
  switch (cfg.scenario) {
    case ScenarioKind::relaxation:
      r = run_relaxation(relaxation_config(cfg));
      break;
    case ScenarioKind::seeded:
      r = run_seeded_protocol(seeded_config(cfg));
      meta.emplace_back("eta_resolved", fmt(r.eta_used));
      break;
    case ScenarioKind::custom: {
      const Schedule sched(cfg.eps_segments, cfg.eta_segments, cfg.init_spec());
      r = run_schedule(cfg.model, cfg.step, sched, cfg.t_end, cfg.detect);
      break;
    }
    case ScenarioKind::sweep:
      break;
  }
  if (r.pulse) {
    meta.emplace_back("pulse_t_peak", fmt(r.pulse->t_peak));
    meta.emplace_back("pulse_peak_photons", fmt(r.pulse->peak_photons));
  }
  if (r.steady) meta.emplace_back("steady_t_detect", fmt(r.steady->t_detect));

  fs::create_directories(opt.out_dir);
  const fs::path path = fs::path(opt.out_dir) / cfg.trajectory_file;
  write_trajectory_csv(r.trajectory, path, serialize_config(cfg), meta);
  if (!opt.quiet) {
    print_summary(cfg, r);
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

/// Bisects g so that the noise-triggered half-rise time of the relaxation
/// scenario matches the target onset.
int do_calibrate(const Options& opt) {
  RunConfig cfg = load(opt);
  auto onset = [&](double g) {
    auto rc = relaxation_config(cfg);
    rc.model.g = g;
    const auto traj = run_relaxation(rc).trajectory;
    const auto pulse = detect_pulse(traj);
    // below one photon the maximum is just the seed transient
    return pulse && pulse->peak_photons >= 1.0 ? pulse->t_half_rise : INFINITY;
  };
  double lo = opt.g_lo, hi = opt.g_hi;
  if (!(onset(hi) <= opt.target_onset))
    throw std::runtime_error("calibrate-g: upper bound too small for target onset");
  if (onset(lo) <= opt.target_onset)
    throw std::runtime_error("calibrate-g: lower bound already reaches target onset");
  for (int it = 0; it < 40 && hi - lo > 1e-6 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (onset(mid) <= opt.target_onset ? hi : lo) = mid;
  }
  if (!opt.quiet)
    std::printf("g = %.6g rad/s (half-rise %.4f ms, g*sqrt(N0) = 2pi x %.4g kHz)\n", hi,
                onset(hi) * 1e3, hi * std::sqrt(cfg.model.N0) / two_pi / 1e3);
  else
    std::printf("%.17g\n", hi);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field simulator for condensate momentum states in a ring cavity"};
  app.require_subcommand(1);
  Options opt;

  auto add_common = [&](CLI::App* sub, bool out) {
    sub->add_option("--config", opt.config_path, "Config file")->required();
    sub->add_option("--seed", opt.seed, "Override the RNG seed");
    sub->add_flag("--quiet", opt.quiet, "Suppress the summary");
    if (out) sub->add_option("--out", opt.out_dir, "Output directory");
  };
  auto* run = app.add_subcommand("run", "Run the configured scenario and write a CSV");
  add_common(run, true);
  auto* sweep = app.add_subcommand("sweep", "Run the eps sweep from the [sweep] section");
  add_common(sweep, true);
  auto* validate = app.add_subcommand("validate", "Parse and print the resolved config");
  add_common(validate, false);
  auto* calib = app.add_subcommand("calibrate-g", "Match the relaxation onset time");
  add_common(calib, false);
  calib->add_option("--target-onset", opt.target_onset, "Half-rise time in seconds");
  calib->add_option("--g-min", opt.g_lo, "Lower bracket for g (rad/s)");
  calib->add_option("--g-max", opt.g_hi, "Upper bracket for g (rad/s)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) return do_run(opt);
    if (sweep->parsed()) return do_sweep(opt, load(opt));
    if (validate->parsed()) {
      const auto cfg = load(opt);
      if (!opt.quiet) std::cout << serialize_config(cfg);
      return 0;
    }
    if (calib->parsed()) return do_calibrate(opt);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "subrad: %s\n", e.what());
    return 1;
  }
  return 1;
}
