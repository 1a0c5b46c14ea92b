#ifndef SUBRAD_CSV_HPP
#define SUBRAD_CSV_HPP

/// \file csv.hpp
/// \brief CSV writers for trajectories and sweeps.
///
/// Files start with `# `-prefixed provenance lines (the resolved config and
/// any run metadata), then a header row, then data rows. Numbers are written
/// with %.17g. Output goes to `<path>.tmp` first and is renamed into place,
/// so a failed write never leaves a partial file behind.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "subrad/integrator.hpp"
#include "subrad/scenarios.hpp"

namespace subrad {

using Metadata = std::vector<std::pair<std::string, std::string>>;

class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what) {}
};

namespace detail {

inline void put_number(std::ostream& o, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  o << buf;
}

inline void put_provenance(std::ostream& o, std::string_view config,
                           const Metadata& meta) {
  std::size_t pos = 0;
  while (pos < config.size()) {
    auto end = config.find('\n', pos);
    if (end == std::string_view::npos) end = config.size();
    const auto line = config.substr(pos, end - pos);
    o << (line.empty() ? "#" : "# ") << line << '\n';
    pos = end + 1;
  }
  for (const auto& [k, v] : meta) o << "#! " << k << " = " << v << '\n';
}

inline void write_atomically(const std::filesystem::path& path,
                             const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
    out << contents;
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw IoError(path, "write failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError(path, "rename failed: " + ec.message());
  }
}

}  // namespace detail

inline std::string trajectory_csv(const Trajectory& traj, std::string_view config = {},
                                  const Metadata& meta = {}) {
  std::ostringstream o;
  detail::put_provenance(o, config, meta);
  o << "t_s";
  for (int n = traj.n_min; n <= traj.n_max; ++n) o << ",pop_" << n;
  o << ",re_a,im_a,photons,N,eps,eta\n";
  for (const auto& s : traj.samples) {
    detail::put_number(o, s.t);
    for (const auto& c : s.modes) {
      o << ',';
      detail::put_number(o, std::norm(c));
    }
    for (double v : {s.a.real(), s.a.imag(), s.photons(), s.atoms, s.eps, s.eta}) {
      o << ',';
      detail::put_number(o, v);
    }
    o << '\n';
  }
  return o.str();
}

inline void write_trajectory_csv(const Trajectory& traj,
                                 const std::filesystem::path& path,
                                 std::string_view config = {}, const Metadata& meta = {}) {
  detail::write_atomically(path, trajectory_csv(traj, config, meta));
}

/// Columns: eps, mean populations of n = 0, 1, 2 and of all other modes,
/// residual photon number, std-devs of n = 0, 1, 2, replica count.
inline std::string sweep_csv(const SweepResult& sweep, std::string_view config = {},
                             const Metadata& meta = {}) {
  std::ostringstream o;
  detail::put_provenance(o, config, meta);
  o << "eps,pop_0_mean,pop_1_mean,pop_2_mean,pop_rest_mean,photons_resid,"
       "pop_0_std,pop_1_std,pop_2_std,replicas\n";
  auto at = [&](const std::vector<double>& v, int n) {
    return (n >= sweep.n_min && n <= sweep.n_max) ? v[static_cast<std::size_t>(n - sweep.n_min)]
                                                  : 0.0;
  };
  for (const auto& r : sweep.rows) {
    double rest = 0.0;
    for (int n = sweep.n_min; n <= sweep.n_max; ++n)
      if (n < 0 || n > 2) rest += at(r.pop_mean, n);
    const double vals[] = {r.eps,
                           at(r.pop_mean, 0),
                           at(r.pop_mean, 1),
                           at(r.pop_mean, 2),
                           rest,
                           r.photons_resid,
                           at(r.pop_std, 0),
                           at(r.pop_std, 1),
                           at(r.pop_std, 2)};
    for (double v : vals) {
      detail::put_number(o, v);
      o << ',';
    }
    o << r.replicas << '\n';
  }
  return o.str();
}

inline void write_sweep_csv(const SweepResult& sweep, const std::filesystem::path& path,
                            std::string_view config = {}, const Metadata& meta = {}) {
  detail::write_atomically(path, sweep_csv(sweep, config, meta));
}

}  // namespace subrad

#endif  // SUBRAD_CSV_HPP
