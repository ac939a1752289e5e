#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ftdo/errors.hpp"
#include "ftdo/metrics.hpp"
#include "ftdo/oracle.hpp"
#include "ftdo/sim.hpp"

namespace ftdo {

// Shortest round-trippable decimal form.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header)
      : out_(path) {
    require(out_.good(), ErrorCode::io_error, "cannot open " + path + " for writing");
    for (std::size_t c = 0; c < header.size(); ++c)
      out_ << (c ? "," : "") << header[c];
    out_ << "\n";
  }

  void row(const std::vector<double>& values) {
    for (std::size_t c = 0; c < values.size(); ++c)
      out_ << (c ? "," : "") << fmt_double(values[c]);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

// trajectory.csv: t, then per agent the flowed variable (x<i>_<c>, or
// lam<i>_<c> for the dual flow), then z<i>_<c>, then recovered primal states
// xrec<i>_<c> for the dual flow.
inline void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  if (traj.times.empty()) return;
  const int n = static_cast<int>(traj.primary.front().rows());
  const int num_agents = static_cast<int>(traj.primary.front().cols());
  const bool dual = traj.kind == FlowKind::dual_dorap;
  std::vector<std::string> header{"t"};
  const std::string primary_name = dual ? "lam" : "x";
  for (int i = 1; i <= num_agents; ++i)
    for (int c = 1; c <= n; ++c)
      header.push_back(primary_name + std::to_string(i) + "_" + std::to_string(c));
  for (int i = 1; i <= num_agents; ++i)
    for (int c = 1; c <= n; ++c)
      header.push_back("z" + std::to_string(i) + "_" + std::to_string(c));
  if (dual)
    for (int i = 1; i <= num_agents; ++i)
      for (int c = 1; c <= n; ++c)
        header.push_back("xrec" + std::to_string(i) + "_" + std::to_string(c));
  CsvWriter csv(path, header);
  std::vector<double> row;
  for (std::size_t k = 0; k < traj.times.size(); ++k) {
    row.clear();
    row.push_back(traj.times[k]);
    for (int i = 0; i < num_agents; ++i)
      for (int c = 0; c < n; ++c) row.push_back(traj.primary[k](c, i));
    for (int i = 0; i < num_agents; ++i)
      for (int c = 0; c < n; ++c) row.push_back(traj.aux[k](c, i));
    if (dual)
      for (int i = 0; i < num_agents; ++i)
        for (int c = 0; c < n; ++c) row.push_back(traj.recovered[k](c, i));
    csv.row(row);
  }
}

// reference.csv: t, xstar_<c> and residual for primal flows; t, lamstar_<c>,
// xstar<i>_<c>, residual for the dual flow.
inline void write_reference_csv(const std::string& path, const ReferenceTrajectory& ref) {
  if (ref.times.empty()) return;
  const bool dual = !ref.lam_star.empty();
  std::vector<std::string> header{"t"};
  if (dual) {
    const int n = static_cast<int>(ref.lam_star.front().size());
    const int num_agents = static_cast<int>(ref.x_star_agents.front().cols());
    for (int c = 1; c <= n; ++c) header.push_back("lamstar_" + std::to_string(c));
    for (int i = 1; i <= num_agents; ++i)
      for (int c = 1; c <= n; ++c)
        header.push_back("xstar" + std::to_string(i) + "_" + std::to_string(c));
  } else {
    const int n = static_cast<int>(ref.x_star.front().size());
    for (int c = 1; c <= n; ++c) header.push_back("xstar_" + std::to_string(c));
  }
  header.push_back("residual");
  CsvWriter csv(path, header);
  std::vector<double> row;
  for (std::size_t k = 0; k < ref.times.size(); ++k) {
    row.clear();
    row.push_back(ref.times[k]);
    if (dual) {
      for (int c = 0; c < ref.lam_star[k].size(); ++c) row.push_back(ref.lam_star[k](c));
      const Mat& agents = ref.x_star_agents[k];
      for (int i = 0; i < agents.cols(); ++i)
        for (int c = 0; c < agents.rows(); ++c) row.push_back(agents(c, i));
    } else {
      for (int c = 0; c < ref.x_star[k].size(); ++c) row.push_back(ref.x_star[k](c));
    }
    row.push_back(ref.residuals[k]);
    csv.row(row);
  }
}

}  // namespace ftdo
