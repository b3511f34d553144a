#pragma once

#include <algorithm>
#include <queue>
#include <vector>

#include "epihaz/hazard.hpp"
#include "epihaz/record.hpp"
#include "epihaz/rng.hpp"
#include "epihaz/ws_network.hpp"

namespace epihaz {

struct SimulationConfig {
  ContactMode mode = ContactMode::Network;
  int n = 10000;
  int ws_k = 10;
  double ws_p = 0.1;
  HazardModel contact = HazardModel::weibull(2.0, 1.0);  // normalized in mass-action mode
  DurationModel latent = DurationModel::constant(0.0);
  DurationModel infectious = DurationModel::exponential(1.0);
  int initial_infections = 1;
  int stop_m = 1000;  // observation ends at the stop_m-th infection
  std::uint64_t seed = 1;

  void check_core() const {
    if (n < 2) throw DataError("simulate: n must be >= 2");
    if (stop_m < 1 || stop_m > n) throw DataError("simulate: stop_m outside [1, n]");
    if (initial_infections < 1 || initial_infections > stop_m)
      throw DataError("simulate: initial_infections outside [1, stop_m]");
  }

  void check() const {
    check_core();
    if (mode == ContactMode::Network && (ws_k % 2 != 0 || ws_k < 2 || ws_k >= n))
      throw DataError("simulate: ws_k must be even and in [2, n)");
    if (!(ws_p >= 0.0 && ws_p <= 1.0)) throw DataError("simulate: ws_p outside [0,1]");
  }
};

namespace detail {

// Queue ordering: (time, kind, ids). Simultaneous events have probability
// zero in theory, but floats can tie; the lexicographic order keeps replays
// deterministic.
struct Event {
  double time;
  int kind;  // 0 = onset of infectiousness, 1 = scheduled contact
  int a;     // onset: person; contact: source
  int b;     // contact: target
  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    if (a != o.a) return a > o.a;
    return b > o.b;
  }
};

}  // namespace detail

/// Event-driven SEIR simulation on a fixed contact structure. Contact
/// intervals are drawn by inverse transform when a person becomes infectious;
/// a contact infects its target iff the target is still susceptible when the
/// event fires. Stops at the stop_m-th infection (T = its time) or at
/// extinction (extinct flag set, T = last recovery).
inline EpidemicRecord simulate_on(ContactStructure contacts, const SimulationConfig& config,
                                  Rng& rng) {
  config.check_core();
  if (contacts.n != config.n) throw DataError("simulate: contact structure size != n");
  const int n = config.n;
  EpidemicRecord rec;
  rec.persons.resize(n);
  rec.infector.assign(n, kInfectorUnknown);
  rec.contacts = std::move(contacts);

  std::priority_queue<detail::Event, std::vector<detail::Event>, std::greater<detail::Event>> queue;
  int m = 0;
  double last_infection_time = 0.0;

  auto infect = [&](int j, double t, int infector) {
    auto& p = rec.persons[j];
    p.t_infection = t;
    p.latent = config.latent.sample(rng);
    p.infectious_duration = config.infectious.sample(rng);
    rec.infector[j] = infector;
    ++m;
    last_infection_time = t;
    queue.push({p.onset(), 0, j, -1});
  };

  // Imported infections at time 0.
  {
    std::vector<int> seeds;
    while (int(seeds.size()) < config.initial_infections) {
      const int cand = int(rng.below(std::uint64_t(n)));
      if (std::find(seeds.begin(), seeds.end(), cand) == seeds.end()) seeds.push_back(cand);
    }
    for (int s : seeds) infect(s, 0.0, kInfectorImported);
  }

  std::vector<int> targeted;  // mass action: targets already drawn by the current infector

  while (m < config.stop_m && !queue.empty()) {
    const detail::Event ev = queue.top();
    queue.pop();
    if (ev.kind == 1) {
      if (!rec.persons[ev.b].infected()) infect(ev.b, ev.time, ev.a);
      continue;
    }
    const int i = ev.a;
    const double onset = ev.time;
    const double iota = rec.persons[i].infectious_duration;
    if (config.mode == ContactMode::Network) {
      for (int j : rec.contacts.out[i]) {
        const auto& pj = rec.persons[j];
        if (pj.infected() && pj.t_infection <= onset) continue;  // not susceptible at onset
        const double tau = config.contact.sample_contact_interval(rng);
        if (tau <= iota) queue.push({onset + tau, 1, i, j});
      }
    } else {
      // Pair-minimum thinning: successive first-contact ages across the n-1
      // pairs have aggregate cumulative hazard (n-1-k) * Lambda_*(tau)/(n-1)
      // after k pairs have been consumed; targets are drawn without
      // replacement and contacts to the already-infected die at pop time.
      targeted.clear();
      double cum = 0.0;  // in normalized (Lambda_*) units
      for (int k = 0; k + 1 < n; ++k) {
        cum += rng.exponential() * double(n - 1) / double(n - 1 - k);
        const double age = config.contact.inverse_cumulative(cum);
        if (age > iota) break;
        int target = -1;
        do {
          target = int(rng.below(std::uint64_t(n)));
        } while (target == i ||
                 std::find(targeted.begin(), targeted.end(), target) != targeted.end());
        targeted.push_back(target);
        queue.push({onset + age, 1, i, target});
      }
    }
  }

  if (m >= config.stop_m) {
    rec.T = last_infection_time;
  } else {
    rec.extinct = true;
    double t_end = 0.0;
    for (const auto& p : rec.persons)
      if (p.infected()) t_end = std::max(t_end, p.recovery());
    rec.T = t_end;
  }
  return rec;
}

inline EpidemicRecord simulate_epidemic(const SimulationConfig& config, Rng& rng) {
  config.check();
  ContactStructure contacts =
      (config.mode == ContactMode::Network)
          ? generate_ws_network(config.n, config.ws_k, config.ws_p, rng)
          : ContactStructure::mass_action(config.n);
  return simulate_on(std::move(contacts), config, rng);
}

inline EpidemicRecord simulate_epidemic(const SimulationConfig& config) {
  Rng rng(config.seed);
  return simulate_epidemic(config, rng);
}

}  // namespace epihaz
