#include "stiefel_dgt/linalg_count.hpp"

#include <atomic>

namespace stiefel_dgt::opcount {

namespace {
std::atomic<long long> g_qr_optim{0};
std::atomic<long long> g_svd_optim{0};
std::atomic<long long> g_qr_metric{0};
std::atomic<long long> g_svd_metric{0};
thread_local int t_metric_depth = 0;
}  // namespace

void reset() {
  g_qr_optim = 0;
  g_svd_optim = 0;
  g_qr_metric = 0;
  g_svd_metric = 0;
}

Counts optimization() { return {g_qr_optim.load(), g_svd_optim.load()}; }
Counts metrics() { return {g_qr_metric.load(), g_svd_metric.load()}; }

MetricScope::MetricScope() { ++t_metric_depth; }
MetricScope::~MetricScope() { --t_metric_depth; }

namespace detail {

void note_qr() {
  if (t_metric_depth > 0)
    ++g_qr_metric;
  else
    ++g_qr_optim;
}

void note_svd() {
  if (t_metric_depth > 0)
    ++g_svd_metric;
  else
    ++g_svd_optim;
}

}  // namespace detail

}  // namespace stiefel_dgt::opcount
