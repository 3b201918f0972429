#pragma once

#include <string>
#include <utility>
#include <vector>

#include "mcons/engine.hpp"

namespace mcons {

/// Shortest decimal string that round-trips a double (17 significant digits).
std::string format_g17(double v);

/// Fixed schema:
/// k,phi,max_pair_dist_sq,mean_cost,min_cost,max_cost,dist_to_oracle,
/// in_s_conv,n_k,a_k,delta_k
void write_metrics_csv(const std::string& path,
                       const std::vector<IterationRecord>& records);

/// One row per (iteration, node) with the point coordinates flattened
/// column-major.
void write_trajectory_csv(const std::string& path,
                          const std::vector<Configuration>& trajectory);

/// key=value lines, in the given order.
void write_key_values(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& entries);

void write_matrix_text(const std::string& path, const Matrix& m);

}  // namespace mcons
