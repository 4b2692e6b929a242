#pragma once

namespace stiefel_dgt::opcount {

struct Counts {
  long long qr = 0;
  long long svd = 0;
  long long total() const { return qr + svd; }
};

// Two buckets: decompositions on the optimization path vs. those spent on
// metrics (e.g. the feasibility distance needs a projection per record).
void reset();
Counts optimization();
Counts metrics();

// While alive on a thread, QR/SVD calls from that thread land in the metric
// bucket. Nestable.
class MetricScope {
 public:
  MetricScope();
  ~MetricScope();
  MetricScope(const MetricScope&) = delete;
  MetricScope& operator=(const MetricScope&) = delete;
};

namespace detail {
void note_qr();
void note_svd();
}  // namespace detail

}  // namespace stiefel_dgt::opcount
