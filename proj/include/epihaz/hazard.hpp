#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "epihaz/math.hpp"
#include "epihaz/record.hpp"
#include "epihaz/risk_set.hpp"
#include "epihaz/rng.hpp"
#include "epihaz/smoothing.hpp"

namespace epihaz {

enum class HazardFamily { Exponential, Weibull, Gamma, Smoothed };

inline const char* family_name(HazardFamily f) {
  switch (f) {
    case HazardFamily::Exponential: return "exponential";
    case HazardFamily::Weibull: return "weibull";
    case HazardFamily::Gamma: return "gamma";
    case HazardFamily::Smoothed: return "smoothed";
  }
  return "?";
}

/// A contact-interval hazard: a parametric family (rate or shape+rate), or a
/// smoothed nonparametric hazard handle.
class HazardModel {
 public:
  static HazardModel exponential(double rate) {
    return HazardModel(HazardFamily::Exponential, 1.0, rate);
  }
  static HazardModel weibull(double shape, double rate) {
    return HazardModel(HazardFamily::Weibull, shape, rate);
  }
  static HazardModel gamma(double shape, double rate) {
    return HazardModel(HazardFamily::Gamma, shape, rate);
  }
  static HazardModel smoothed(SmoothedHazard h) {
    HazardModel m(HazardFamily::Smoothed, 0.0, 0.0);
    m.smoothed_ = std::make_shared<SmoothedHazard>(std::move(h));
    return m;
  }

  HazardFamily family() const { return family_; }
  double shape() const { return shape_; }
  double rate() const { return rate_; }
  const SmoothedHazard& smoothed_hazard() const { return *smoothed_; }

  double hazard(double tau) const {
    if (tau <= 0.0) throw std::domain_error("hazard: tau must be > 0");
    switch (family_) {
      case HazardFamily::Exponential:
        return rate_;
      case HazardFamily::Weibull:
        return shape_ * rate_ * std::pow(rate_ * tau, shape_ - 1.0);
      case HazardFamily::Gamma: {
        // density / survivor, in logs to keep large tau stable
        const double x = rate_ * tau;
        const double logf = shape_ * std::log(rate_) + (shape_ - 1.0) * std::log(tau) - x -
                            std::lgamma(shape_);
        const double surv = reg_gamma_q(shape_, x);
        if (surv <= 0.0) return kInf;
        return std::exp(logf - std::log(surv));
      }
      case HazardFamily::Smoothed:
        return (*smoothed_)(tau);
    }
    throw std::logic_error("hazard: bad family");
  }

  double cumulative_hazard(double tau) const {
    if (tau < 0.0) throw std::domain_error("cumulative_hazard: tau must be >= 0");
    if (tau == 0.0) return 0.0;
    switch (family_) {
      case HazardFamily::Exponential:
        return rate_ * tau;
      case HazardFamily::Weibull:
        return std::pow(rate_ * tau, shape_);
      case HazardFamily::Gamma: {
        const double surv = reg_gamma_q(shape_, rate_ * tau);
        return surv > 0.0 ? -std::log(surv) : kInf;
      }
      case HazardFamily::Smoothed:
        throw std::domain_error("cumulative_hazard: not defined for smoothed models");
    }
    throw std::logic_error("cumulative_hazard: bad family");
  }

  /// Lambda^-1(e) for e >= 0; +inf if the hazard can never accumulate e.
  double inverse_cumulative(double e) const {
    if (e < 0.0) throw std::domain_error("inverse_cumulative: negative argument");
    if (e == 0.0) return 0.0;
    switch (family_) {
      case HazardFamily::Exponential:
        return e / rate_;
      case HazardFamily::Weibull:
        return std::pow(e, 1.0 / shape_) / rate_;
      case HazardFamily::Gamma: {
        const double q = std::exp(-e);
        if (q <= 0.0) return kInf;
        return reg_gamma_q_inv(shape_, q) / rate_;
      }
      case HazardFamily::Smoothed:
        throw std::domain_error("inverse_cumulative: not defined for smoothed models");
    }
    throw std::logic_error("inverse_cumulative: bad family");
  }

  /// Inverse-transform draw: Lambda^-1(E) with E standard exponential.
  double sample_contact_interval(Rng& rng) const { return inverse_cumulative(rng.exponential()); }

  /// `family,param1,param2` line (smoothed models export a grid instead).
  std::string csv_line() const {
    if (family_ == HazardFamily::Smoothed) return "smoothed,,";
    if (family_ == HazardFamily::Exponential) return std::string("exponential,") + fmt_double(rate_) + ",";
    return std::string(family_name(family_)) + "," + fmt_double(shape_) + "," + fmt_double(rate_);
  }

 private:
  HazardModel(HazardFamily f, double shape, double rate) : family_(f), shape_(shape), rate_(rate) {
    if (f != HazardFamily::Smoothed && (!(rate > 0.0) || !(shape > 0.0)))
      throw std::invalid_argument("HazardModel: parameters must be positive");
  }
  HazardFamily family_;
  double shape_, rate_;
  std::shared_ptr<const SmoothedHazard> smoothed_;
};

/// Spec'd smoothing entry points, wrapped to the model type.
inline HazardModel smooth_cumhaz(const StepEstimate& est, std::span<const double> variances,
                                 const SmootherConfig& config = {}) {
  return HazardModel::smoothed(smooth_cumhaz_spline(est, variances, config));
}
inline HazardModel smooth_kernel(const StepEstimate& est, const SmootherConfig& config = {}) {
  return HazardModel::smoothed(smooth_kernel_hazard(est, config));
}

// ---------------------------------------------------------------------------
// Maximum-likelihood fitting of a parametric family to an epidemic record.
//
// The log likelihood sums, over non-imported infections j, the log of the
// total hazard over the infectious set at the observed age, minus the
// integrated hazard over every exposure window; the integral term is a
// cumulative-hazard difference per window, computed in closed form.
// ---------------------------------------------------------------------------

struct ParametricFit {
  HazardModel model = HazardModel::exponential(1.0);
  double loglik = -kInf;
  bool converged = false;
  bool boundary = false;  // no events: rate -> 0 boundary
  int iterations = 0;
  double final_step_norm = 0.0;
  double final_objective_spread = 0.0;
  std::vector<double> std_errors;  // via numeric Hessian at the optimum
};

namespace detail {

struct LikelihoodData {
  std::vector<std::vector<double>> event_ages;  // candidate ages per infection
  std::vector<double> windows;                  // exposure windows
};

inline LikelihoodData likelihood_data(const EpidemicRecord& rec) {
  LikelihoodData data;
  data.windows = possible_contact_intervals(rec);
  if (data.windows.empty()) throw DataError("fit_parametric: record has no exposure time");
  for (int j = 0; j < rec.n(); ++j) {
    const auto& pj = rec.persons[j];
    if (!pj.infected() || rec.imported(j)) continue;
    std::vector<double> ages;
    if (rec.infector[j] >= 0) {
      ages.push_back(pj.t_infection - rec.persons[rec.infector[j]].onset());
    } else {
      for (int i : infectious_set(rec, j)) ages.push_back(pj.t_infection - rec.persons[i].onset());
    }
    data.event_ages.push_back(std::move(ages));
  }
  return data;
}

inline double loglik(const LikelihoodData& data, const HazardModel& model) {
  double ll = 0.0;
  for (const auto& ages : data.event_ages) {
    double total = 0.0;
    for (double a : ages) total += model.hazard(a);
    if (!(total > 0.0)) return -kInf;
    ll += std::log(total);
  }
  for (double w : data.windows) ll -= model.cumulative_hazard(w);
  return std::isfinite(ll) ? ll : -kInf;
}

inline HazardModel make_model(HazardFamily family, std::span<const double> theta) {
  switch (family) {
    case HazardFamily::Exponential:
      return HazardModel::exponential(theta[0]);
    case HazardFamily::Weibull:
      return HazardModel::weibull(theta[0], theta[1]);
    case HazardFamily::Gamma:
      return HazardModel::gamma(theta[0], theta[1]);
    default:
      throw std::invalid_argument("fit_parametric: family must be parametric");
  }
}

}  // namespace detail

/// Fits `family` by maximizing the observed-data log likelihood with a
/// log-parameterized simplex search (positivity without constraints).
inline ParametricFit fit_parametric(const EpidemicRecord& rec, HazardFamily family) {
  const auto data = detail::likelihood_data(rec);
  ParametricFit fit;

  if (data.event_ages.empty()) {
    // No infectious contacts observed: the likelihood decreases in the rate,
    // so the MLE sits at the rate -> 0 boundary.
    fit.boundary = true;
    fit.converged = true;
    fit.model = HazardModel::exponential(1e-300);
    fit.loglik = 0.0;
    return fit;
  }

  const std::size_t dim = (family == HazardFamily::Exponential) ? 1 : 2;
  auto objective = [&](std::span<const double> eta) {
    double theta[2] = {std::exp(eta[0]), dim > 1 ? std::exp(eta[1]) : 0.0};
    return -detail::loglik(data, detail::make_model(family, std::span<const double>(theta, dim)));
  };

  // Moment-style start: rate = events / exposure, shape = 1.
  double exposure = 0.0;
  for (double w : data.windows) exposure += w;
  const double rate0 = std::max(1e-8, double(data.event_ages.size()) / exposure);
  std::vector<double> eta0;
  if (dim == 1)
    eta0 = {std::log(rate0)};
  else
    eta0 = {0.0, std::log(rate0)};

  auto res = nelder_mead(objective, eta0, 0.5, 1e-10, 4000);
  // One restart from the incumbent tightens the simplex near the optimum.
  auto res2 = nelder_mead(objective, res.x, 0.05, 1e-12, 4000);
  if (res2.fmin <= res.fmin) res = res2;

  std::vector<double> theta(dim);
  for (std::size_t k = 0; k < dim; ++k) theta[k] = std::exp(res.x[k]);
  fit.model = detail::make_model(family, theta);
  fit.loglik = -res.fmin;
  fit.converged = res.converged;
  fit.iterations = res.iterations;
  fit.final_step_norm = res.final_simplex_size;
  fit.final_objective_spread = res.final_spread;
  if (!fit.converged)
    throw DataError("fit_parametric: optimizer did not converge (step " +
                    fmt_double(fit.final_step_norm) + ", spread " +
                    fmt_double(fit.final_objective_spread) + ")");

  // Numeric Hessian in theta for standard errors.
  fit.std_errors.assign(dim, 0.0);
  auto ll_theta = [&](std::span<const double> th) {
    return detail::loglik(data, detail::make_model(family, th));
  };
  std::vector<std::vector<double>> H(dim, std::vector<double>(dim, 0.0));
  for (std::size_t a = 0; a < dim; ++a) {
    for (std::size_t b = a; b < dim; ++b) {
      const double ha = 1e-4 * std::max(1.0, std::abs(theta[a]));
      const double hb = 1e-4 * std::max(1.0, std::abs(theta[b]));
      auto at = [&](double da, double db) {
        std::vector<double> t = theta;
        t[a] += da;
        t[b] += db;
        return ll_theta(t);
      };
      if (a == b)
        H[a][a] = (at(ha, 0) - 2.0 * at(0, 0) + at(-ha, 0)) / (ha * ha);
      else
        H[a][b] = H[b][a] =
            (at(ha, hb) - at(ha, -hb) - at(-ha, hb) + at(-ha, -hb)) / (4.0 * ha * hb);
    }
  }
  if (dim == 1) {
    if (H[0][0] < 0.0) fit.std_errors[0] = std::sqrt(-1.0 / H[0][0]);
  } else {
    const double det = H[0][0] * H[1][1] - H[0][1] * H[0][1];
    if (det > 0.0 && H[0][0] < 0.0) {
      fit.std_errors[0] = std::sqrt(-H[1][1] / det);
      fit.std_errors[1] = std::sqrt(-H[0][0] / det);
    }
  }
  return fit;
}

}  // namespace epihaz
