#pragma once

#include <string>

namespace stiefel_dgt {

// One metrics row per iteration. Column order is fixed for the CSV output.
struct TraceRecord {
  long k = 0;
  double grad_norm_sum = 0.0;     // ||sum_i grad f_i(x_i)||_F
  double landing_norm_avg = 0.0;  // ||Lambda(xbar)||_F
  double consensus_x = 0.0;       // sum_i ||x_i - xbar||_F
  double consensus_y = 0.0;       // ||y - ybar||_F (stacked)
  double feasibility_avg = 0.0;   // (1/n) sum_i ||x_i - Proj(x_i)||_F
  double merit_avg = 0.0;         // L(xbar)
  double wall_time_s = 0.0;
  long long qr_svd_count = 0;     // cumulative, optimization path only
};

std::string trace_csv_header();
std::string to_csv_row(const TraceRecord& rec);
std::string to_json_line(const TraceRecord& rec);

}  // namespace stiefel_dgt
