#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace epihaz;
using Catch::Approx;

namespace {

StepEstimate step_from_function(const std::function<double(double)>& cumhaz, double lo, double hi,
                                int points, double noise_sd = 0.0, Rng* rng = nullptr) {
  StepEstimate est;
  est.domain_end = hi;
  double prev = 0.0;
  for (int k = 0; k < points; ++k) {
    const double x = lo + (hi - lo) * double(k) / double(points - 1);
    double y = cumhaz(x);
    if (noise_sd > 0.0 && rng) y += noise_sd * rng->normal();
    est.times.push_back(x);
    est.increments.push_back(y - prev);
    est.cumhaz.push_back(y);
    est.cumhaz_var.push_back(1.0);
    prev = y;
  }
  est.survival.assign(est.times.size(), 1.0);
  est.survival_var.assign(est.times.size(), 0.0);
  return est;
}

// Dense reference for the banded smoothing-spline solver: builds the Reinsch
// system explicitly and solves it by Gaussian elimination.
struct DenseRef {
  std::vector<double> f;
  double trace = 0.0;
};

std::vector<double> solve_dense(std::vector<std::vector<double>> A, std::vector<double> b) {
  const int n = int(b.size());
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (int r = c + 1; r < n; ++r) {
      const double m = A[r][c] / A[c][c];
      for (int k = c; k < n; ++k) A[r][k] -= m * A[c][k];
      b[r] -= m * b[c];
    }
  }
  std::vector<double> x(n);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < n; ++k) s -= A[r][k] * x[k];
    x[r] = s / A[r][r];
  }
  return x;
}

DenseRef dense_spline(const std::vector<double>& x, const std::vector<double>& y,
                      const std::vector<double>& w, double alpha) {
  const int n = int(x.size()), g = n - 2;
  std::vector<double> h(n - 1);
  for (int i = 0; i + 1 < n; ++i) h[i] = x[i + 1] - x[i];
  std::vector<std::vector<double>> Q(n, std::vector<double>(g, 0.0));
  for (int j = 0; j < g; ++j) {
    Q[j][j] = 1.0 / h[j];
    Q[j + 1][j] = -1.0 / h[j] - 1.0 / h[j + 1];
    Q[j + 2][j] = 1.0 / h[j + 1];
  }
  std::vector<std::vector<double>> B(g, std::vector<double>(g, 0.0));
  for (int j = 0; j < g; ++j) {
    B[j][j] = (h[j] + h[j + 1]) / 3.0;
    if (j + 1 < g) B[j][j + 1] = B[j + 1][j] = h[j + 1] / 6.0;
  }
  for (int a = 0; a < g; ++a)
    for (int b = 0; b < g; ++b) {
      double m = 0.0;
      for (int l = 0; l < n; ++l) m += Q[l][a] * Q[l][b] / w[l];
      B[a][b] += alpha * m;
    }
  std::vector<double> rhs(g, 0.0);
  for (int j = 0; j < g; ++j)
    for (int l = 0; l < n; ++l) rhs[j] += Q[l][j] * y[l];
  const auto gamma = solve_dense(B, rhs);

  DenseRef ref;
  ref.f = y;
  for (int l = 0; l < n; ++l) {
    double qg = 0.0;
    for (int j = 0; j < g; ++j) qg += Q[l][j] * gamma[j];
    ref.f[l] -= alpha * qg / w[l];
  }
  // trace(A) = n - alpha * trace(B^-1 M) via explicit inverse columns.
  double tr = 0.0;
  for (int c = 0; c < g; ++c) {
    std::vector<double> e(g, 0.0);
    e[c] = 1.0;
    const auto col = solve_dense(B, e);  // column c of B^-1
    for (int r = 0; r < g; ++r) {
      double m = 0.0;
      for (int l = 0; l < n; ++l) m += Q[l][r] * Q[l][c] / w[l];
      tr += col[r] * m;  // (B^-1)_{rc} M_{cr}; M symmetric
    }
  }
  ref.trace = double(x.size()) - alpha * tr;
  return ref;
}

}  // namespace

TEST_CASE("banded spline solver matches a dense reference") {
  Rng rng(8);
  for (int rep = 0; rep < 6; ++rep) {
    const int n = 8 + int(rng.below(14));
    std::vector<double> x(n), y(n), w(n);
    double cur = 0.1;
    for (int i = 0; i < n; ++i) {
      cur += 0.05 + rng.uniform();
      x[i] = cur;
      y[i] = std::sin(cur) + 0.3 * cur;
      w[i] = 0.2 + 2.0 * rng.uniform();
    }
    for (double alpha : {1e-4, 0.05, 1.0, 25.0}) {
      const auto band = detail::fit_smoothing_spline(x, y, w, alpha);
      const auto dense = dense_spline(x, y, w, alpha);
      for (int i = 0; i < n; ++i) REQUIRE(band.f[i] == Approx(dense.f[i]).margin(1e-8));
      REQUIRE(band.trace == Approx(dense.trace).margin(1e-7));
    }
  }
}

TEST_CASE("noiseless linear cumulative hazard recovers a flat hazard") {
  auto est = step_from_function([](double t) { return t; }, 0.05, 3.0, 200);
  auto hz = smooth_cumhaz_spline(est, est.cumhaz_var, {});
  const double lo = 0.05 + 0.1 * (3.0 - 0.05), hi = 0.05 + 0.9 * (3.0 - 0.05);
  for (int k = 0; k <= 50; ++k) {
    const double tau = lo + (hi - lo) * double(k) / 50.0;
    REQUIRE(hz(tau) == Approx(1.0).epsilon(0.01));
  }
}

TEST_CASE("noiseless quadratic cumulative hazard recovers hazard 2 tau") {
  auto est = step_from_function([](double t) { return t * t; }, 0.05, 3.0, 200);
  auto hz = smooth_cumhaz_spline(est, est.cumhaz_var, {});
  const double lo = 0.05 + 0.1 * (3.0 - 0.05), hi = 0.05 + 0.9 * (3.0 - 0.05);
  for (int k = 0; k <= 50; ++k) {
    const double tau = lo + (hi - lo) * double(k) / 50.0;
    REQUIRE(hz(tau) == Approx(2.0 * tau).epsilon(0.05));
  }
}

TEST_CASE("single-jump input is an error directing the flat-hazard fallback") {
  StepEstimate est;
  est.times = {1.0};
  est.increments = {0.5};
  est.cumhaz = {0.5};
  est.cumhaz_var = {0.25};
  est.survival = {0.5};
  est.survival_var = {0.0};
  est.domain_end = 2.0;
  REQUIRE_THROWS_AS(smooth_cumhaz_spline(est, est.cumhaz_var, {}), DataError);
}

TEST_CASE("gcv selects a local minimum of the gcv curve") {
  Rng rng(12);
  auto est = step_from_function([](double t) { return t; }, 0.02, 4.0, 200, 0.05, &rng);
  SmootherConfig cfg;
  auto hz = smooth_cumhaz_spline(est, est.cumhaz_var, cfg);
  REQUIRE(hz.alpha > 0.0);
  const auto w = std::vector<double>(est.size(), 1.0);
  const double at = spline_gcv_score(est.times, est.cumhaz, w, hz.alpha);
  REQUIRE(at <= spline_gcv_score(est.times, est.cumhaz, w, hz.alpha * 10.0) + 1e-12);
  REQUIRE(at <= spline_gcv_score(est.times, est.cumhaz, w, hz.alpha * 0.1) + 1e-12);
}

TEST_CASE("nonmonotone inputs produce floored, never negative, hazards") {
  Rng rng(77);
  StepEstimate est;
  est.domain_end = 5.0;
  double y = 0.0;
  for (int k = 0; k < 60; ++k) {
    const double x = 0.05 + 5.0 * double(k) / 59.0;
    y += (k % 7 == 3) ? -0.3 : 0.12 + 0.05 * rng.uniform();
    est.times.push_back(x);
    est.cumhaz.push_back(y);
    est.increments.push_back(0.0);
    est.cumhaz_var.push_back(1.0);
  }
  est.survival.assign(est.times.size(), 1.0);
  est.survival_var.assign(est.times.size(), 0.0);
  SmootherConfig cfg;
  auto hz = smooth_cumhaz_spline(est, est.cumhaz_var, cfg);
  for (int k = 0; k <= 400; ++k) {
    const double tau = 1e-3 + 5.0 * double(k) / 400.0;
    REQUIRE(hz(tau) >= cfg.hazard_floor);
  }
}

TEST_CASE("smoothed hazard integrates back to the cumulative hazard roughly") {
  Rng rng(5);
  auto est = step_from_function([](double t) { return t * t; }, 0.1, 2.5, 120, 0.03, &rng);
  auto hz = smooth_cumhaz_spline(est, est.cumhaz_var, {});
  const double total = test::integrate([&](double u) { return hz(std::max(u, 1e-9)); }, 0.0,
                                       est.domain_end, 1e-9);
  const double target = est.cumhaz.back();
  REQUIRE(std::abs(total - target) < 0.15 * target);
}

TEST_CASE("kernel smoother basics") {
  SECTION("single jump integrates to one") {
    StepEstimate est;
    est.times = {2.0};
    est.increments = {1.0};
    est.cumhaz = {1.0};
    est.cumhaz_var = {1.0};
    est.survival = {0.0};
    est.survival_var = {0.0};
    est.domain_end = 4.0;
    SmootherConfig cfg;
    cfg.kind = SmootherConfig::Kind::Kernel;
    cfg.kernel_bandwidth = 0.5;
    auto hz = smooth_kernel_hazard(est, cfg);
    REQUIRE(hz(2.0) == Approx(0.75 / 0.5));
    const double total = test::integrate([&](double u) { return hz(u); }, 1.4, 2.6, 1e-10);
    REQUIRE(total == Approx(1.0).margin(1e-6));
  }
  SECTION("dense linear jumps recover a flat hazard mid-domain") {
    auto est = step_from_function([](double t) { return t; }, 0.01, 3.0, 300);
    SmootherConfig cfg;
    cfg.kind = SmootherConfig::Kind::Kernel;
    auto hz = smooth_kernel_hazard(est, cfg);
    for (int k = 0; k <= 40; ++k) {
      const double tau = 0.6 + (2.4 - 0.6) * double(k) / 40.0;
      REQUIRE(hz(tau) == Approx(1.0).epsilon(0.05));
    }
  }
}
