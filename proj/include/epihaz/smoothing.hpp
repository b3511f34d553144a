#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "epihaz/math.hpp"
#include "epihaz/step_estimate.hpp"

namespace epihaz {

struct SmootherConfig {
  enum class Kind { SplineGcv, Kernel };
  Kind kind = Kind::SplineGcv;
  double kernel_bandwidth = 0.0;  // 0 = plug-in rule of thumb
  double hazard_floor = 1e-12;
  // Spline derivatives are held constant beyond these jump-age percentiles.
  double clamp_lo_pct = 0.02;
  double clamp_hi_pct = 0.98;
};

namespace detail {

// Weighted natural cubic smoothing spline (Reinsch form). For knots x, data y
// and weights w, minimizing sum w_i (y_i - f_i)^2 + alpha * int f''^2 reduces
// to the banded system (R + alpha Q^T W^-1 Q) gamma = Q^T y with fitted values
// f = y - alpha W^-1 Q gamma. Both the solve and the trace of the hat matrix
// (needed for GCV) run in O(n) using the LDL^T factors of the pentadiagonal
// system; the in-band elements of its inverse come from the usual backward
// recursion on the factors.
struct SplineFit {
  std::vector<double> x;
  std::vector<double> f;   // fitted values at knots
  std::vector<double> m;   // second derivatives at knots (natural: ends are 0)
  double trace = 0.0;      // tr of the hat matrix
  double rss_w = 0.0;      // weighted residual sum of squares
  double gcv = 0.0;
};

inline SplineFit fit_smoothing_spline(std::span<const double> x, std::span<const double> y,
                                      std::span<const double> w, double alpha) {
  const int n = int(x.size());
  if (n < 2 || int(y.size()) != n || int(w.size()) != n)
    throw std::invalid_argument("fit_smoothing_spline: bad input sizes");
  for (int i = 0; i + 1 < n; ++i)
    if (!(x[i] < x[i + 1])) throw std::invalid_argument("fit_smoothing_spline: knots not increasing");

  SplineFit out;
  out.x.assign(x.begin(), x.end());
  out.m.assign(n, 0.0);
  if (n == 2) {
    // Two knots: the spline space is the straight line through both points.
    out.f.assign(y.begin(), y.end());
    out.trace = 2.0;
    out.gcv = kInf;
    return out;
  }

  const int g = n - 2;
  std::vector<double> h(n - 1);
  for (int i = 0; i + 1 < n; ++i) h[i] = x[i + 1] - x[i];

  // Pentadiagonal B = R + alpha * M with M = Q^T W^-1 Q.
  std::vector<double> M0(g, 0.0), M1(std::max(0, g - 1), 0.0), M2(std::max(0, g - 2), 0.0);
  std::vector<double> B0(g), B1(std::max(0, g - 1), 0.0), B2(std::max(0, g - 2), 0.0);
  auto q0 = [&](int j) { return 1.0 / h[j]; };                 // row j, column j
  auto q1 = [&](int j) { return -1.0 / h[j] - 1.0 / h[j + 1]; };  // row j+1
  auto q2 = [&](int j) { return 1.0 / h[j + 1]; };             // row j+2
  for (int j = 0; j < g; ++j) {
    M0[j] = q0(j) * q0(j) / w[j] + q1(j) * q1(j) / w[j + 1] + q2(j) * q2(j) / w[j + 2];
    B0[j] = (h[j] + h[j + 1]) / 3.0 + alpha * M0[j];
  }
  for (int j = 0; j + 1 < g; ++j) {
    M1[j] = q1(j) * q0(j + 1) / w[j + 1] + q2(j) * q1(j + 1) / w[j + 2];
    B1[j] = h[j + 1] / 6.0 + alpha * M1[j];
  }
  for (int j = 0; j + 2 < g; ++j) {
    M2[j] = q2(j) * q0(j + 2) / w[j + 2];
    B2[j] = alpha * M2[j];
  }

  // LDL^T with bandwidth 2: d, l1 (first subdiagonal), l2 (second).
  std::vector<double> d(g), l1(std::max(0, g - 1), 0.0), l2(std::max(0, g - 2), 0.0);
  for (int j = 0; j < g; ++j) {
    double dj = B0[j];
    if (j >= 1) dj -= l1[j - 1] * l1[j - 1] * d[j - 1];
    if (j >= 2) dj -= l2[j - 2] * l2[j - 2] * d[j - 2];
    d[j] = dj;
    if (j + 1 < g) {
      double v = B1[j];
      if (j >= 1) v -= l2[j - 1] * d[j - 1] * l1[j - 1];
      l1[j] = v / dj;
    }
    if (j + 2 < g) l2[j] = B2[j] / dj;
  }

  // rhs = Q^T y, then solve B gamma = rhs.
  std::vector<double> gamma(g);
  for (int j = 0; j < g; ++j) gamma[j] = q0(j) * y[j] + q1(j) * y[j + 1] + q2(j) * y[j + 2];
  for (int j = 0; j < g; ++j) {
    if (j >= 1) gamma[j] -= l1[j - 1] * gamma[j - 1];
    if (j >= 2) gamma[j] -= l2[j - 2] * gamma[j - 2];
  }
  for (int j = 0; j < g; ++j) gamma[j] /= d[j];
  for (int j = g - 1; j >= 0; --j) {
    if (j + 1 < g) gamma[j] -= l1[j] * gamma[j + 1];
    if (j + 2 < g) gamma[j] -= l2[j] * gamma[j + 2];
  }

  // Fitted values.
  out.f.assign(y.begin(), y.end());
  std::vector<double> Qg(n, 0.0);
  for (int j = 0; j < g; ++j) {
    Qg[j] += q0(j) * gamma[j];
    Qg[j + 1] += q1(j) * gamma[j];
    Qg[j + 2] += q2(j) * gamma[j];
  }
  for (int l = 0; l < n; ++l) out.f[l] -= alpha * Qg[l] / w[l];
  for (int j = 0; j < g; ++j) out.m[j + 1] = gamma[j];
  for (int l = 0; l < n; ++l) out.rss_w += Qg[l] * Qg[l] / w[l];
  out.rss_w *= alpha * alpha;

  // In-band entries of B^-1 via backward recursion on the LDL^T factors.
  std::vector<double> S0(g, 0.0), S1(std::max(0, g - 1), 0.0), S2(std::max(0, g - 2), 0.0);
  for (int i = g - 1; i >= 0; --i) {
    if (i + 2 < g) S2[i] = -(l1[i] * S1[i + 1] + l2[i] * S0[i + 2]);
    if (i + 1 < g) {
      double v = -l1[i] * S0[i + 1];
      if (i + 2 < g) v -= l2[i] * S1[i + 1];
      S1[i] = v;
    }
    double v = 1.0 / d[i];
    if (i + 1 < g) v -= l1[i] * S1[i];
    if (i + 2 < g) v -= l2[i] * S2[i];
    S0[i] = v;
  }
  double tr_bm = 0.0;
  for (int j = 0; j < g; ++j) tr_bm += S0[j] * M0[j];
  for (int j = 0; j + 1 < g; ++j) tr_bm += 2.0 * S1[j] * M1[j];
  for (int j = 0; j + 2 < g; ++j) tr_bm += 2.0 * S2[j] * M2[j];
  out.trace = double(n) - alpha * tr_bm;

  const double denom = double(n) - out.trace;
  out.gcv = denom > 0.0 ? double(n) * out.rss_w / (denom * denom) : kInf;
  return out;
}

/// Derivative of the natural cubic spline at xq (no extrapolation: xq is
/// clamped to the knot range by the caller).
inline double spline_derivative(const SplineFit& fit, double xq) {
  const auto& x = fit.x;
  const int n = int(x.size());
  if (n == 2) return (fit.f[1] - fit.f[0]) / (x[1] - x[0]);
  int i = int(std::upper_bound(x.begin(), x.end(), xq) - x.begin()) - 1;
  i = std::clamp(i, 0, n - 2);
  const double h = x[i + 1] - x[i];
  const double a = x[i + 1] - xq, b = xq - x[i];
  return -fit.m[i] * a * a / (2.0 * h) + fit.m[i + 1] * b * b / (2.0 * h) +
         (fit.f[i + 1] - fit.f[i]) / h - (fit.m[i + 1] - fit.m[i]) * h / 6.0;
}

}  // namespace detail

/// An evaluable hazard obtained by smoothing a step cumulative-hazard
/// estimate: either the derivative of a GCV-tuned smoothing spline, or a
/// kernel-smoothed sum of increments.
struct SmoothedHazard {
  enum class Kind { Spline, Kernel };
  Kind kind = Kind::Spline;
  double floor = 1e-12;
  double domain_end = 0.0;

  // Spline payload.
  detail::SplineFit spline;
  double clamp_lo = 0.0, clamp_hi = 0.0;
  double alpha = 0.0;  // selected smoothing parameter

  // Kernel payload.
  std::vector<double> ages;  // sorted jump ages
  std::vector<double> mass;  // increment at each age
  double bandwidth = 0.0;

  double operator()(double tau) const {
    double v;
    if (kind == Kind::Spline) {
      v = detail::spline_derivative(spline, std::clamp(tau, clamp_lo, clamp_hi));
    } else {
      // Epanechnikov sum over the jumps, with the mass reflected at 0 and at
      // the domain end so edge hazards are not biased low.
      auto bump = [&](double at) {
        double s = 0.0;
        const auto lo = std::lower_bound(ages.begin(), ages.end(), at - bandwidth);
        const auto hi = std::upper_bound(ages.begin(), ages.end(), at + bandwidth);
        for (auto it = lo; it != hi; ++it) {
          const double u = (at - *it) / bandwidth;
          s += 0.75 * (1.0 - u * u) / bandwidth * mass[std::size_t(it - ages.begin())];
        }
        return s;
      };
      v = bump(tau) + bump(-tau) + bump(2.0 * domain_end - tau);
    }
    return std::max(v, floor);
  }

  /// `tau,hazard` rows on a uniform grid over (0, domain_end].
  std::string grid_csv(int points = 200) const {
    std::string s = "tau,hazard\n";
    for (int k = 1; k <= points; ++k) {
      const double tau = domain_end * double(k) / double(points);
      s += fmt_double(tau) + "," + fmt_double((*this)(tau)) + "\n";
    }
    return s;
  }
};

/// GCV score at a given penalty (exposed for the penalty-selection checks).
inline double spline_gcv_score(std::span<const double> x, std::span<const double> y,
                               std::span<const double> w, double alpha) {
  return detail::fit_smoothing_spline(x, y, w, alpha).gcv;
}

namespace detail {

inline std::vector<double> inverse_variance_weights(std::span<const double> variances) {
  std::vector<double> w(variances.begin(), variances.end());
  double min_pos = kInf;
  for (double v : w)
    if (v > 0.0) min_pos = std::min(min_pos, v);
  if (!std::isfinite(min_pos)) min_pos = 1.0;  // all-zero variances: equal weights
  double mean = 0.0;
  for (double& v : w) {
    v = 1.0 / std::max(v, min_pos);
    mean += v;
  }
  mean /= double(w.size());
  for (double& v : w) v /= mean;
  return w;
}

}  // namespace detail

/// Inverse-variance weighted cubic smoothing spline fitted to the cumulative
/// values, penalty chosen by generalized cross-validation; the hazard is the
/// spline's first derivative, clamped at the configured floor.
inline SmoothedHazard smooth_cumhaz_spline(const StepEstimate& est,
                                           std::span<const double> variances,
                                           const SmootherConfig& config = {}) {
  if (est.size() < 2)
    throw DataError("smooth_cumhaz: fewer than 2 jumps; fall back to a flat hazard");
  if (variances.size() != est.size())
    throw std::invalid_argument("smooth_cumhaz: variance length mismatch");
  const auto w = detail::inverse_variance_weights(variances);

  SmoothedHazard out;
  out.kind = SmoothedHazard::Kind::Spline;
  out.floor = config.hazard_floor;
  out.domain_end = est.domain_end;
  out.clamp_lo = quantile_sorted(est.times, config.clamp_lo_pct);
  out.clamp_hi = quantile_sorted(est.times, config.clamp_hi_pct);

  if (est.size() == 2) {
    out.spline = detail::fit_smoothing_spline(est.times, est.cumhaz, w, 0.0);
    out.alpha = 0.0;
    return out;
  }
  const int n = int(est.size());
  const double hbar = (est.times.back() - est.times.front()) / double(n - 1);
  const double scale = hbar * hbar * hbar;
  const double log_lo = std::log(scale * 1e-6), log_hi = std::log(scale * 1e6);
  auto score = [&](double la) {
    return detail::fit_smoothing_spline(est.times, est.cumhaz, w, std::exp(la)).gcv;
  };
  const double best = golden_section_min(score, log_lo, log_hi, 50);
  out.alpha = std::exp(best);
  out.spline = detail::fit_smoothing_spline(est.times, est.cumhaz, w, out.alpha);
  return out;
}

inline SmoothedHazard smooth_cumhaz_spline(const StepEstimate& est,
                                           const SmootherConfig& config = {}) {
  return smooth_cumhaz_spline(est, est.cumhaz_var, config);
}

/// Kernel-weighted increment smoothing: hazard(tau) = sum K_b(tau - t_k) dL_k
/// with an Epanechnikov kernel.
inline SmoothedHazard smooth_kernel_hazard(const StepEstimate& est,
                                           const SmootherConfig& config = {}) {
  if (est.size() < 1) throw DataError("smooth_kernel: no jumps");
  SmoothedHazard out;
  out.kind = SmoothedHazard::Kind::Kernel;
  out.floor = config.hazard_floor;
  out.domain_end = est.domain_end;
  out.ages = est.times;
  out.mass = est.increments;
  if (config.kernel_bandwidth > 0.0) {
    out.bandwidth = config.kernel_bandwidth;
  } else {
    // Silverman-style rule of thumb on the jump ages.
    const std::size_t k = est.times.size();
    double mean = 0.0;
    for (double t : est.times) mean += t;
    mean /= double(k);
    double var = 0.0;
    for (double t : est.times) var += (t - mean) * (t - mean);
    var = k > 1 ? var / double(k - 1) : 0.0;
    const double iqr = quantile_sorted(est.times, 0.75) - quantile_sorted(est.times, 0.25);
    double spread = std::sqrt(var);
    if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
    if (!(spread > 0.0)) spread = std::max(est.domain_end, est.times.back()) / 8.0;
    out.bandwidth = 1.06 * spread * std::pow(double(k), -0.2);
    if (!(out.bandwidth > 0.0)) out.bandwidth = 1.0;
  }
  return out;
}

/// Smoother dispatch used by the EM loop.
inline SmoothedHazard smooth_step_estimate(const StepEstimate& est,
                                           std::span<const double> variances,
                                           const SmootherConfig& config) {
  if (config.kind == SmootherConfig::Kind::Kernel) return smooth_kernel_hazard(est, config);
  return smooth_cumhaz_spline(est, variances, config);
}

}  // namespace epihaz
