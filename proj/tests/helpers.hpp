#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "epihaz/epihaz.hpp"

namespace epihaz::test {

// Record with risk windows {1, 1.2, 2} and observed events at ages 1 and 2:
// Y(1) = 3, Y(2) = 1, so Lambda_hat(2) = 1/3 + 1 and sigma^2(2) = 1/9 + 1.
inline EpidemicRecord fixture_y31() {
  EpidemicRecord rec;
  rec.persons.resize(4);
  rec.infector.assign(4, kInfectorUnknown);
  rec.persons[0] = {0.0, 0.0, 1.2};
  rec.infector[0] = kInfectorImported;
  rec.persons[1] = {1.0, 0.0, 3.0};
  rec.infector[1] = 0;
  rec.persons[2] = {3.0, 0.0, 1.0};
  rec.infector[2] = 1;
  rec.T = 3.0;
  rec.contacts = ContactStructure::network(
      4, {{0, 1}, {1, 0}, {0, 3}, {3, 0}, {1, 2}, {2, 1}});
  return rec;
}

// One unobserved infection with two candidates: ages 1 (Y = 2) and 2 (Y = 1).
inline EpidemicRecord fixture_two_candidates() {
  EpidemicRecord rec;
  rec.persons.resize(3);
  rec.infector.assign(3, kInfectorUnknown);
  rec.persons[0] = {0.0, 1.0, 5.0};
  rec.infector[0] = kInfectorImported;
  rec.persons[1] = {0.0, 0.0, 5.0};
  rec.infector[1] = kInfectorImported;
  rec.persons[2] = {2.0, 0.0, 1.0};
  rec.T = 2.0;
  rec.contacts = ContactStructure::network(3, {{0, 2}, {1, 2}});
  return rec;
}

/// Y(tau) by direct evaluation of the triple sum over ordered pairs.
inline int brute_force_risk(const EpidemicRecord& rec, double tau) {
  int y = 0;
  for (int i = 0; i < rec.n(); ++i) {
    const auto& pi = rec.persons[i];
    if (!pi.infected() || pi.onset() > rec.T) continue;
    for (int j = 0; j < rec.n(); ++j) {
      if (j == i) continue;
      bool edge = false;
      if (rec.contacts.mode == ContactMode::Network) {
        for (int nb : rec.contacts.out[i]) edge |= (nb == j);
      } else {
        edge = true;
      }
      if (!edge) continue;
      const auto& pj = rec.persons[j];
      // Boundary comparisons in the frozen subtracted form tau <= t_j - o_i.
      const bool infectious = tau > 0.0 && tau <= pi.infectious_duration;
      const bool susceptible = !pj.infected() || tau <= pj.t_infection - pi.onset();
      const bool observed = tau <= rec.T - pi.onset();
      y += (infectious && susceptible && observed);
    }
  }
  return y;
}

/// Nelson-Aalen by the direct double sum: one 1/Y term per observed event.
inline double brute_force_nelson_aalen(const EpidemicRecord& rec, double tau) {
  double sum = 0.0;
  for (int j = 0; j < rec.n(); ++j) {
    const auto& pj = rec.persons[j];
    if (!pj.infected() || rec.imported(j)) continue;
    const double age = pj.t_infection - rec.persons[rec.infector[j]].onset();
    if (age <= tau) sum += 1.0 / double(brute_force_risk(rec, age));
  }
  return sum;
}

/// Random sparse network record simulated to extinction; useful for oracle
/// comparisons on small inputs.
inline EpidemicRecord random_small_record(Rng& rng, int n, double edge_prob, double rate = 0.9) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.uniform() < edge_prob) {
        edges.emplace_back(i, j);
        edges.emplace_back(j, i);
      }
  SimulationConfig cfg;
  cfg.mode = ContactMode::Network;
  cfg.n = n;
  cfg.contact = HazardModel::exponential(rate);
  cfg.latent = DurationModel::constant(0.0);
  cfg.infectious = DurationModel::exponential(1.0);
  cfg.stop_m = n;
  cfg.initial_infections = 1;
  return simulate_on(ContactStructure::network(n, edges), cfg, rng);
}

/// Simulates with fresh draws from the same stream until the epidemic reaches
/// its target size.
inline EpidemicRecord simulate_nonextinct(const SimulationConfig& cfg, int max_tries = 100) {
  Rng rng(cfg.seed);
  for (int t = 0; t < max_tries; ++t) {
    auto rec = simulate_epidemic(cfg, rng);
    if (!rec.extinct) return rec;
  }
  throw std::runtime_error("simulate_nonextinct: extinction persisted");
}

/// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int depth = 24) {
  std::function<double(double, double, double, double, double, int)> rec =
      [&](double lo, double hi, double flo, double fmid, double fhi, int d) -> double {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double flm = f(lm), frm = f(rm);
    const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
    const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
    const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
    if (d <= 0 || std::abs(left + right - whole) < 15.0 * tol) return left + right;
    return rec(lo, mid, flo, flm, fmid, d - 1) + rec(mid, hi, fmid, frm, fhi, d - 1);
  };
  const double mid = 0.5 * (a + b);
  return rec(a, b, f(a), f(mid), f(b), depth);
}

}  // namespace epihaz::test
