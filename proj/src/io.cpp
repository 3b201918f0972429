#include "mcons/io.hpp"

#include <cstdio>
#include <fstream>

namespace mcons {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_metrics_csv(const std::string& path,
                       const std::vector<IterationRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "k,phi,max_pair_dist_sq,mean_cost,min_cost,max_cost,dist_to_oracle,"
         "in_s_conv,n_k,a_k,delta_k\n";
  for (const auto& r : records) {
    out << r.k << ',' << format_g17(r.phi) << ','
        << format_g17(r.max_pair_dist_sq) << ',' << format_g17(r.mean_cost)
        << ',' << format_g17(r.min_cost) << ',' << format_g17(r.max_cost)
        << ',' << format_g17(r.dist_to_oracle) << ',' << (r.in_s_conv ? 1 : 0)
        << ',' << r.n_k << ',' << format_g17(r.a_k) << ','
        << format_g17(r.delta_k) << '\n';
  }
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<Configuration>& trajectory) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << "k,node,coords...\n";
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    const auto& config = trajectory[k];
    for (int i = 0; i < config.size(); ++i) {
      out << k << ',' << i;
      const auto& m = config.points[i];
      for (int c = 0; c < m.cols(); ++c) {
        for (int r = 0; r < m.rows(); ++r) {
          out << ',' << format_g17(m(r, c));
        }
      }
      out << '\n';
    }
  }
}

void write_key_values(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& entries) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  for (const auto& [key, value] : entries) {
    out << key << '=' << value << '\n';
  }
}

void write_matrix_text(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      out << (j ? " " : "") << format_g17(m(i, j));
    }
    out << '\n';
  }
}

}  // namespace mcons
