#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace epihaz {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Standard normal quantile, Wichura's PPND16 rational approximation.
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    if (p == 0.0) return -kInf;
    if (p == 1.0) return kInf;
    throw std::domain_error("norm_quantile: p outside [0,1]");
  }
  const double q = p - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
              3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
            4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
              6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
            2.05319162663775882187e0) * r + 1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
              2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
            5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
              1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
            5.99832206555887937690e-1) * r + 1.0);
  }
  return (q < 0.0) ? -val : val;
}

inline double reg_gamma_p(double a, double x) { return boost::math::gamma_p(a, x); }
inline double reg_gamma_q(double a, double x) { return boost::math::gamma_q(a, x); }
inline double reg_gamma_q_inv(double a, double q) { return boost::math::gamma_q_inv(a, q); }

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Exact (Clopper-Pearson) binomial confidence interval for hits out of n.
inline Interval clopper_pearson(int hits, int n, double level = 0.95) {
  if (n <= 0 || hits < 0 || hits > n) throw std::invalid_argument("clopper_pearson: bad counts");
  const double a = 1.0 - level;
  Interval ci;
  ci.lo = (hits == 0) ? 0.0 : boost::math::ibeta_inv(double(hits), double(n - hits + 1), a / 2);
  ci.hi = (hits == n) ? 1.0 : boost::math::ibeta_inv(double(hits + 1), double(n - hits), 1.0 - a / 2);
  return ci;
}

/// Linear-interpolation quantile of a sorted sample (R type 7). p in [0,1].
inline double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double h = p * double(sorted.size() - 1);
  const std::size_t i = std::size_t(h);
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = h - double(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

/// Golden-section minimizer on [lo, hi].
inline double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                                 int iters = 60) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < iters; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    }
  }
  return f1 <= f2 ? x1 : x2;
}

struct NelderMeadResult {
  std::vector<double> x;
  double fmin = 0.0;
  bool converged = false;
  int iterations = 0;
  double final_simplex_size = 0.0;
  double final_spread = 0.0;
};

/// Derivative-free simplex minimizer. Stops when both the simplex diameter and
/// the objective spread fall below tol.
inline NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                                    std::span<const double> x0, double step = 0.5,
                                    double tol = 1e-10, int max_iter = 2000) {
  const std::size_t d = x0.size();
  std::vector<std::vector<double>> pts(d + 1, std::vector<double>(x0.begin(), x0.end()));
  for (std::size_t i = 0; i < d; ++i) pts[i + 1][i] += step;
  std::vector<double> fv(d + 1);
  for (std::size_t i = 0; i <= d; ++i) fv[i] = f(pts[i]);

  NelderMeadResult out;
  auto order = [&] {
    std::vector<std::size_t> idx(d + 1);
    for (std::size_t i = 0; i <= d; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
    std::vector<std::vector<double>> p2;
    std::vector<double> f2;
    for (auto i : idx) {
      p2.push_back(pts[i]);
      f2.push_back(fv[i]);
    }
    pts.swap(p2);
    fv.swap(f2);
  };

  int it = 0;
  for (; it < max_iter; ++it) {
    order();
    double diam = 0.0;
    for (std::size_t i = 1; i <= d; ++i)
      for (std::size_t k = 0; k < d; ++k) diam = std::max(diam, std::abs(pts[i][k] - pts[0][k]));
    const double spread = std::abs(fv[d] - fv[0]);
    if (diam < tol && spread < tol) {
      out.converged = true;
      out.final_simplex_size = diam;
      out.final_spread = spread;
      break;
    }
    std::vector<double> centroid(d, 0.0);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t k = 0; k < d; ++k) centroid[k] += pts[i][k] / double(d);
    auto blend = [&](double c) {
      std::vector<double> x(d);
      for (std::size_t k = 0; k < d; ++k) x[k] = centroid[k] + c * (centroid[k] - pts[d][k]);
      return x;
    };
    auto xr = blend(1.0);
    const double fr = f(xr);
    if (fr < fv[0]) {
      auto xe = blend(2.0);
      const double fe = f(xe);
      if (fe < fr) {
        pts[d] = xe;
        fv[d] = fe;
      } else {
        pts[d] = xr;
        fv[d] = fr;
      }
    } else if (fr < fv[d - 1]) {
      pts[d] = xr;
      fv[d] = fr;
    } else {
      auto xc = blend(fr < fv[d] ? 0.5 : -0.5);
      const double fc = f(xc);
      if (fc < std::min(fr, fv[d])) {
        pts[d] = xc;
        fv[d] = fc;
      } else {
        for (std::size_t i = 1; i <= d; ++i) {
          for (std::size_t k = 0; k < d; ++k) pts[i][k] = pts[0][k] + 0.5 * (pts[i][k] - pts[0][k]);
          fv[i] = f(pts[i]);
        }
      }
    }
  }
  order();
  out.x = pts[0];
  out.fmin = fv[0];
  out.iterations = it;
  if (!out.converged) {
    double diam = 0.0;
    for (std::size_t i = 1; i <= d; ++i)
      for (std::size_t k = 0; k < d; ++k) diam = std::max(diam, std::abs(pts[i][k] - pts[0][k]));
    out.final_simplex_size = diam;
    out.final_spread = std::abs(fv[d] - fv[0]);
  }
  return out;
}

}  // namespace epihaz
