#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "epihaz/math.hpp"
#include "epihaz/record.hpp"

namespace epihaz {

/// Per-day conditional infection probabilities over an infectious period of D
/// days: lambda_d = P(infectious contact on day d | none before d).
struct DiscreteHazard {
  std::vector<double> lambda;  // day d stored at index d-1

  static DiscreteHazard constant(double lam, int days) {
    if (!(lam >= 0.0 && lam <= 1.0)) throw DataError("DiscreteHazard: lambda outside [0,1]");
    DiscreteHazard h;
    h.lambda.assign(std::size_t(days), lam);
    return h;
  }

  int days() const { return int(lambda.size()); }

  void check() const {
    for (double l : lambda)
      if (!(l >= 0.0 && l <= 1.0)) throw DataError("DiscreteHazard: lambda outside [0,1]");
  }

  /// log S(d) = sum_{e<=d} log(1 - lambda_e); d past the table is an error.
  double log_survival(int d) const {
    if (d <= 0) return 0.0;
    if (d > days()) throw DataError("DiscreteHazard: age outside the hazard table");
    double s = 0.0;
    for (int e = 0; e < d; ++e) s += std::log1p(-lambda[std::size_t(e)]);
    return s;
  }

  double survival(int d) const { return std::exp(log_survival(d)); }
};

namespace detail {

inline long as_day(double t, const char* what) {
  const double r = std::floor(t);
  if (r != t) throw DataError(std::string("chain binomial: ") + what + " is not a whole day");
  return long(r);
}

}  // namespace detail

/// Exact log likelihood of a daily-resolution record under a discrete
/// contact-interval hazard. Each infection contributes
/// log(1 - prod_{i in V_j} (1 - lambda(d_ij))), which sums the probabilities
/// of every nonempty infector subset; each exposed pair contributes the
/// escape probability of its pre-infection days. An infector with onset on
/// day t can first transmit on day t+1.
inline double chain_binomial_loglik(const EpidemicRecord& rec, const DiscreteHazard& hazard) {
  hazard.check();
  if (rec.mass_action()) throw DataError("chain_binomial_loglik: needs an explicit contact network");

  const long T = detail::as_day(rec.T, "T");
  double ll = 0.0;
  // log(1 - product of per-candidate escape) accumulators per infectee.
  std::vector<double> hazard_log_escape(rec.persons.size(), 0.0);
  std::vector<char> has_candidate(rec.persons.size(), 0);

  for (int i = 0; i < rec.n(); ++i) {
    const auto& pi = rec.persons[i];
    if (!pi.infected()) continue;
    const long onset = detail::as_day(pi.onset(), "onset");
    const long iota = detail::as_day(pi.infectious_duration, "infectious period");
    const long exposed_days = std::min(iota, T - onset);
    if (exposed_days < 1) continue;
    if (exposed_days > hazard.days())
      throw DataError("chain_binomial_loglik: infectious period longer than the hazard table");
    for (int j : rec.contacts.out[i]) {
      const auto& pj = rec.persons[j];
      if (pj.infected()) {
        const long tj = detail::as_day(pj.t_infection, "infection time");
        const long age = tj - onset;  // day on which i could have infected j
        const long escape = std::min(exposed_days, age - 1);
        if (escape >= 1) ll += hazard.log_survival(int(escape));
        if (age >= 1 && age <= exposed_days && !rec.imported(j)) {
          hazard_log_escape[j] += std::log1p(-hazard.lambda[std::size_t(age - 1)]);
          has_candidate[j] = 1;
        }
      } else {
        ll += hazard.log_survival(int(exposed_days));
      }
    }
  }

  for (int j = 0; j < rec.n(); ++j) {
    const auto& pj = rec.persons[j];
    if (!pj.infected() || rec.imported(j)) continue;
    if (!has_candidate[j])
      throw DataError("chain_binomial_loglik: person " + std::to_string(j + 1) +
                      " has no possible infector");
    // 1 - prod(1 - lambda) via the log-domain complement.
    const double log_escape_all = hazard_log_escape[j];
    if (log_escape_all == 0.0) return -kInf;  // all candidate hazards zero
    ll += std::log(-std::expm1(log_escape_all));
  }
  return ll;
}

struct EscapeFit {
  double lambda = 0.0;              // constant per-day contact probability
  Interval lambda_ci;               // 95% profile likelihood
  double period_probability = 0.0;  // 1 - (1 - lambda)^D
  Interval period_ci;
  double loglik = 0.0;
  bool boundary = false;  // MLE at 0 or 1
  int days = 0;
};

/// Maximum-likelihood constant daily contact probability across households,
/// with a profile-likelihood confidence interval.
inline EscapeFit fit_escape_probability(std::span<const EpidemicRecord> records, int days,
                                        double level = 0.95) {
  if (records.empty()) throw DataError("fit_escape_probability: no records");
  int events = 0;
  for (const auto& rec : records)
    for (int j = 0; j < rec.n(); ++j)
      if (rec.persons[j].infected() && !rec.imported(j)) ++events;

  auto loglik = [&](double lam) {
    double ll = 0.0;
    const DiscreteHazard h = DiscreteHazard::constant(lam, days);
    for (const auto& rec : records) ll += chain_binomial_loglik(rec, h);
    return ll;
  };

  EscapeFit fit;
  fit.days = days;
  const double eps = 1e-12;
  if (events == 0) {
    // Only escapes: the likelihood decreases in lambda.
    fit.lambda = 0.0;
    fit.boundary = true;
    fit.loglik = loglik(0.0);
  } else {
    const double best =
        golden_section_min([&](double lam) { return -loglik(lam); }, eps, 1.0 - eps, 80);
    fit.lambda = best;
    fit.loglik = loglik(best);
    // Snap to the upper boundary when nothing ever escaped.
    if (best > 1.0 - 1e-6 && loglik(1.0) >= fit.loglik) {
      fit.lambda = 1.0;
      fit.boundary = true;
      fit.loglik = loglik(1.0);
    }
  }

  // Profile CI: { lambda : ll(lambda) >= ll_hat - chi2_1(level)/2 }.
  const double z = norm_quantile(0.5 + level / 2.0);
  const double threshold = fit.loglik - z * z / 2.0;
  auto bisect = [&](double lo, double hi, bool rising) {
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const bool above = loglik(mid) >= threshold;
      if (above == rising)
        hi = mid;
      else
        lo = mid;
    }
    return 0.5 * (lo + hi);
  };
  fit.lambda_ci.lo = (fit.lambda <= eps || loglik(eps) >= threshold)
                         ? 0.0
                         : bisect(eps, fit.lambda, true);
  fit.lambda_ci.hi = (fit.lambda >= 1.0 - eps || loglik(1.0 - eps) >= threshold)
                         ? 1.0
                         : bisect(fit.lambda, 1.0 - eps, false);

  auto period = [&](double lam) { return -std::expm1(double(days) * std::log1p(-lam)); };
  fit.period_probability = period(fit.lambda);
  fit.period_ci = {period(fit.lambda_ci.lo), period(fit.lambda_ci.hi)};
  return fit;
}

}  // namespace epihaz
