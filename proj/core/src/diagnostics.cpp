#include "stiefel_dgt/diagnostics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdio>

#include "stiefel_dgt/linalg_count.hpp"

namespace stiefel_dgt {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string trace_csv_header() {
  return "k,grad_norm_sum,landing_norm_avg,consensus_x,consensus_y,feasibility_avg,merit_avg,"
         "wall_time_s,qr_svd_count";
}

std::string to_csv_row(const TraceRecord& r) {
  std::string row = std::to_string(r.k);
  for (double v : {r.grad_norm_sum, r.landing_norm_avg, r.consensus_x, r.consensus_y,
                   r.feasibility_avg, r.merit_avg, r.wall_time_s})
    row += "," + fmt(v);
  row += "," + std::to_string(r.qr_svd_count);
  return row;
}

std::string to_json_line(const TraceRecord& r) {
  std::string line = "{\"k\":" + std::to_string(r.k);
  const std::pair<const char*, double> fields[] = {
      {"grad_norm_sum", r.grad_norm_sum},   {"landing_norm_avg", r.landing_norm_avg},
      {"consensus_x", r.consensus_x},       {"consensus_y", r.consensus_y},
      {"feasibility_avg", r.feasibility_avg}, {"merit_avg", r.merit_avg},
      {"wall_time_s", r.wall_time_s}};
  for (const auto& [name, value] : fields)
    line += std::string(",\"") + name + "\":" + fmt(value);
  line += ",\"qr_svd_count\":" + std::to_string(r.qr_svd_count) + "}";
  return line;
}

TraceRecord record(const NetworkState& state, const ProblemInstance& problem,
                   const MeritConstants& consts, const LandingParams& params,
                   double wall_time_s) {
  TraceRecord rec;
  rec.k = state.k;
  rec.wall_time_s = wall_time_s;
  rec.qr_svd_count = opcount::optimization().total();

  const Matrix xbar = state.mean_x();
  const Matrix ybar = state.mean_y();
  const int n = state.n();

  if (n == problem.n()) {
    Matrix grad_sum = Matrix::Zero(xbar.rows(), xbar.cols());
    for (int i = 0; i < n; ++i)
      grad_sum += relative_gradient(state.x[i], problem.local_gradient(i, state.x[i]));
    rec.grad_norm_sum = grad_sum.norm();
  } else {
    // Single-iterate view of an n-agent problem: sum_i grad f_i(x) = n grad f(x).
    rec.grad_norm_sum =
        problem.n() * relative_gradient(xbar, problem.global_gradient(xbar)).norm();
  }

  rec.landing_norm_avg = landing_field(xbar, problem.global_gradient(xbar), params).norm();

  double cons_x = 0.0, cons_y_sq = 0.0, feas = 0.0;
  {
    opcount::MetricScope metric_scope;
    for (int i = 0; i < n; ++i) {
      cons_x += (state.x[i] - xbar).norm();
      cons_y_sq += (state.y[i] - ybar).squaredNorm();
      feas += (state.x[i] - project_to_stiefel(state.x[i])).norm();
    }
  }
  rec.consensus_x = cons_x;
  rec.consensus_y = std::sqrt(cons_y_sq);
  rec.feasibility_avg = feas / static_cast<double>(n);
  rec.merit_avg = merit_value_quiet(xbar, problem.global_objective(), consts);
  return rec;
}

Eigen::Matrix2d build_Gtilde(double alpha, double L_prime, double sigma_w) {
  if (!(L_prime > 0.0)) throw ParameterError("build_Gtilde: L' must be positive");
  if (!(sigma_w >= 0.0 && sigma_w < 1.0))
    throw ParameterError("build_Gtilde: sigma_w must lie in [0, 1)");
  if (alpha < 0.0) throw ParameterError("build_Gtilde: alpha must be non-negative");
  const double s2 = sigma_w * sigma_w;
  const double theta = (1.0 + s2) / (1.0 - s2);
  const double a2l2 = alpha * alpha * L_prime * L_prime;
  Eigen::Matrix2d g;
  g << (1.0 + s2) / 2.0 + 4.0 * a2l2 * theta, 8.0 * theta,
       a2l2 * theta, (1.0 + s2) / 2.0;
  return g;
}

Eigen::Matrix3d build_M(double alpha, double L_prime, double sigma_w, double rho,
                        double mu_prime, double C) {
  if (!(L_prime > 0.0) || !(rho > 0.0) || !(mu_prime > 0.0) || !(C > 0.0))
    throw ParameterError("build_M: constants must be positive");
  if (!(sigma_w >= 0.0 && sigma_w < 1.0))
    throw ParameterError("build_M: sigma_w must lie in [0, 1)");
  if (alpha < 0.0) throw ParameterError("build_M: alpha must be non-negative");
  const double s2 = sigma_w * sigma_w;
  const double theta = (1.0 + s2) / (1.0 - s2);
  const double a2l2 = alpha * alpha * L_prime * L_prime;
  Eigen::Matrix3d m;
  m << (1.0 + s2) / 2.0 + 4.0 * a2l2 * theta, 8.0 * (1.0 + a2l2) * theta,
       96.0 * a2l2 * theta / (rho * rho),
       a2l2 * theta, (1.0 + s2) / 2.0, 0.0,
       0.0, a2l2 + alpha * L_prime * C * C / rho, 1.0 - alpha * rho * mu_prime / 4.0;
  return m;
}

double spectral_radius(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("spectral_radius: matrix must be square");
  if (a.size() == 0) throw DimensionError("spectral_radius: empty matrix");
  if (a.minCoeff() < 0.0)
    throw ParameterError("spectral_radius: negative entries (Perron argument needs A >= 0)");

  const Eigen::Index n = a.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
  double value = 0.0;
  for (int it = 0; it < 100000; ++it) {
    Eigen::VectorXd w = a * v;
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    w /= norm;
    if (std::abs(norm - value) <= 1e-12 * std::max(1.0, norm) && (w - v).norm() <= 1e-12)
      return norm;
    v = std::move(w);
    value = norm;
  }
  // Defective or oscillating dominant eigenspace: fall back to the dense solver.
  Eigen::EigenSolver<Matrix> es(a);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

RateReport fit_linear_rate(const std::vector<std::pair<long, double>>& gaps) {
  std::vector<std::pair<long, double>> pts;
  pts.reserve(gaps.size());
  for (const auto& [k, gap] : gaps)
    if (gap > 1e-14) pts.emplace_back(k, std::log(gap));
  if (pts.size() < 20)
    throw InsufficientDataError("fit_linear_rate: need >= 20 positive gaps, got " +
                                std::to_string(pts.size()));
  const double n = static_cast<double>(pts.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [k, y] : pts) {
    sx += static_cast<double>(k);
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [k, y] : pts) {
    const double dx = static_cast<double>(k) - mx;
    const double dy = y - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  RateReport report;
  report.k_start = pts.front().first;
  report.k_end = pts.back().first;
  report.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  if (syy > 0.0 && sxx > 0.0) {
    double ss_res = 0.0;
    for (const auto& [k, y] : pts) {
      const double fit = my + report.slope * (static_cast<double>(k) - mx);
      ss_res += (y - fit) * (y - fit);
    }
    report.r_squared = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  } else {
    report.r_squared = 0.0;  // zero variance
  }
  report.implied_rate = std::exp(report.slope);
  return report;
}

ErgodicReport ergodic_check(const std::vector<TraceRecord>& trace, double alpha, double rho,
                            double premise_alpha_max, long K) {
  if (trace.size() < 2) throw InsufficientDataError("ergodic_check: need at least two rows");
  const long max_k = static_cast<long>(trace.size()) - 1;
  if (K < 0) K = max_k;
  if (K < 1 || K > max_k) throw ParameterError("ergodic_check: K out of range");

  ErgodicReport report;
  report.K = K;
  double acc = 0.0;
  for (long k = 1; k <= K; ++k)
    acc += trace[k - 1].landing_norm_avg * trace[k - 1].landing_norm_avg;
  report.mean_sq_landing = acc / static_cast<double>(K);
  report.bound = 4.0 / (alpha * rho * static_cast<double>(K)) *
                 (trace.front().merit_avg - trace[K].merit_avg);
  report.premise_ok = alpha <= premise_alpha_max;
  report.ratio = report.bound > 0.0
                     ? report.mean_sq_landing / report.bound
                     : (report.mean_sq_landing == 0.0
                            ? 0.0
                            : std::numeric_limits<double>::infinity());
  report.pass = report.mean_sq_landing <= report.bound * (1.0 + 1e-6) + 1e-18;
  return report;
}

double estimate_pl_mu(const ProblemInstance& problem, const Matrix& xstar, double fstar,
                      int samples, double radius, std::uint64_t seed) {
  if (samples < 1) throw ParameterError("estimate_pl_mu: need samples >= 1");
  if (!(radius > 0.0)) throw ParameterError("estimate_pl_mu: radius must be positive");
  Rng rng(seed);
  double mu = std::numeric_limits<double>::infinity();
  int used = 0;
  for (int k = 0; k < samples; ++k) {
    Matrix noise = tangent_project(xstar, rng.gaussian(xstar.rows(), xstar.cols()));
    const double norm = noise.norm();
    if (norm == 0.0) continue;
    noise *= (radius * (0.1 + 0.9 * rng.uniform())) / norm;
    const Matrix x = qr_retraction(xstar, noise);
    const double gap = problem.global_value(x) - fstar;
    if (gap <= 1e-13) continue;
    const double grad_sq = relative_gradient(x, problem.global_gradient(x)).squaredNorm();
    mu = std::min(mu, grad_sq / (2.0 * gap));
    ++used;
  }
  if (used == 0 || !std::isfinite(mu))
    throw InsufficientDataError("estimate_pl_mu: no usable samples near the optimum");
  return 0.9 * mu;
}

}  // namespace stiefel_dgt
