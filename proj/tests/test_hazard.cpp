#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"

using namespace epihaz;
using Catch::Approx;

TEST_CASE("hazard closed forms") {
  REQUIRE(HazardModel::weibull(2, 1).hazard(1.0) == Approx(2.0));
  REQUIRE(HazardModel::exponential(1).hazard(0.37) == Approx(1.0));
  REQUIRE(HazardModel::exponential(1).hazard(12.0) == Approx(1.0));
  REQUIRE(HazardModel::weibull(0.5, 1).hazard(4.0) == Approx(0.25));
  REQUIRE_THROWS_AS(HazardModel::weibull(2, 1).hazard(0.0), std::domain_error);
  REQUIRE_THROWS_AS(HazardModel::gamma(2, 1).hazard(-1.0), std::domain_error);
  REQUIRE_THROWS_AS(HazardModel::weibull(-1, 1), std::invalid_argument);
}

TEST_CASE("cumulative hazard closed forms") {
  REQUIRE(HazardModel::weibull(2, 1).cumulative_hazard(3.0) == Approx(9.0));
  REQUIRE(HazardModel::weibull(0.5, 1).cumulative_hazard(4.0) == Approx(2.0));
  REQUIRE(HazardModel::weibull(0.5, 5).cumulative_hazard(1.0) == Approx(std::sqrt(5.0)));
  for (auto m : {HazardModel::exponential(2), HazardModel::weibull(0.5, 5),
                 HazardModel::gamma(2.5, 1.3)})
    REQUIRE(m.cumulative_hazard(0.0) == 0.0);
}

TEST_CASE("cumulative hazard equals the integral of the hazard") {
  // Quadrature starts just above zero: shape < 1 hazards have an integrable
  // singularity there, so compare cumulative-hazard differences.
  const double eps = 1e-4;
  for (auto m : {HazardModel::exponential(1.7), HazardModel::weibull(0.5, 1.0),
                 HazardModel::weibull(2.0, 1.0), HazardModel::gamma(2.0, 1.5),
                 HazardModel::gamma(0.7, 0.8)}) {
    for (double tau : {0.3, 1.0, 2.5, 6.0}) {
      const double direct = m.cumulative_hazard(tau) - m.cumulative_hazard(eps);
      const double quad = test::integrate([&](double u) { return m.hazard(u); }, eps, tau, 1e-11);
      REQUIRE(std::abs(direct - quad) < 1e-6 * (1.0 + direct));
    }
  }
}

TEST_CASE("inverse cumulative hazard round trips") {
  Rng rng(17);
  for (auto m : {HazardModel::exponential(0.4), HazardModel::weibull(2.0, 1.0),
                 HazardModel::weibull(0.5, 5.0), HazardModel::gamma(2.0, 2.0)}) {
    for (int k = 0; k < 200; ++k) {
      const double e = rng.exponential();
      const double tau = m.inverse_cumulative(e);
      REQUIRE(m.cumulative_hazard(tau) == Approx(e).margin(1e-8));
    }
  }
}

TEST_CASE("sampled contact intervals match the survival function") {
  SECTION("Weibull(.5, 5) tail probability") {
    Rng rng(2);
    auto m = HazardModel::weibull(0.5, 5.0);
    const int N = 100000;
    int over = 0;
    for (int k = 0; k < N; ++k) over += (m.sample_contact_interval(rng) > 1.0);
    const double expected = std::exp(-std::sqrt(5.0));
    const double se = std::sqrt(expected * (1.0 - expected) / double(N));
    REQUIRE(std::abs(double(over) / N - expected) < 3.0 * se);
  }
  SECTION("empirical cumulative hazard at fixed quantiles, all families") {
    for (auto m : {HazardModel::exponential(1.0), HazardModel::weibull(2.0, 1.0),
                   HazardModel::gamma(2.0, 1.0)}) {
      Rng rng(3);
      const int N = 40000;
      std::vector<double> draws(N);
      for (auto& d : draws) d = m.sample_contact_interval(rng);
      for (double e : {0.1, 0.5, 1.0, 2.0}) {
        const double tau = m.inverse_cumulative(e);
        int over = 0;
        for (double d : draws) over += (d > tau);
        const double expected = std::exp(-e);
        const double se = std::sqrt(expected * (1.0 - expected) / double(N));
        REQUIRE(std::abs(double(over) / N - expected) < 4.0 * se);
      }
    }
  }
}

TEST_CASE("parametric fit: single pair exponential MLE is events/exposure") {
  EpidemicRecord rec;
  rec.persons.resize(2);
  rec.infector.assign(2, kInfectorUnknown);
  rec.persons[0] = {0.0, 0.0, 10.0};
  rec.infector[0] = kInfectorImported;
  rec.persons[1] = {1.0, 0.0, 1.0};
  rec.infector[1] = 0;
  rec.T = 1.0;
  rec.contacts = ContactStructure::network(2, {{0, 1}, {1, 0}});
  auto fit = fit_parametric(rec, HazardFamily::Exponential);
  REQUIRE(fit.converged);
  REQUIRE(fit.model.rate() == Approx(1.0).epsilon(1e-7));
}

TEST_CASE("parametric fit: exponential reduces to events/exposure on real records") {
  Rng rng(11);
  for (int rep = 0; rep < 5; ++rep) {
    auto rec = test::random_small_record(rng, 12, 0.5);
    int events = 0;
    for (int j = 0; j < rec.n(); ++j)
      events += (rec.persons[j].infected() && !rec.imported(j));
    if (events == 0) continue;
    double exposure = 0.0;
    for (double w : possible_contact_intervals(rec)) exposure += w;
    auto fit = fit_parametric(rec, HazardFamily::Exponential);
    REQUIRE(fit.converged);
    REQUIRE(fit.model.rate() == Approx(double(events) / exposure).epsilon(1e-7));
  }
}

TEST_CASE("parametric fit: no infections reports the boundary") {
  EpidemicRecord rec;
  rec.persons.resize(3);
  rec.infector.assign(3, kInfectorUnknown);
  rec.persons[0] = {0.0, 0.0, 2.0};
  rec.infector[0] = kInfectorImported;
  rec.T = 10.0;
  rec.contacts = ContactStructure::network(3, {{0, 1}, {1, 0}, {0, 2}, {2, 0}});
  auto fit = fit_parametric(rec, HazardFamily::Exponential);
  REQUIRE(fit.boundary);
}

TEST_CASE("parametric fit: Weibull shape recovered from a large simulation") {
  SimulationConfig cfg;
  cfg.mode = ContactMode::Network;
  cfg.n = 10000;
  cfg.ws_k = 10;
  cfg.ws_p = 0.1;
  cfg.contact = HazardModel::weibull(2.0, 1.0);
  cfg.stop_m = 1000;
  cfg.seed = 4242;
  auto rec = test::simulate_nonextinct(cfg);
  auto fit = fit_parametric(rec, HazardFamily::Weibull);
  REQUIRE(fit.converged);
  REQUIRE(fit.model.shape() == Approx(2.0).epsilon(0.10));
  REQUIRE(fit.std_errors.size() == 2);
  REQUIRE(fit.std_errors[0] > 0.0);
}

TEST_CASE("model csv line") {
  REQUIRE(HazardModel::weibull(2, 1).csv_line() == "weibull,2,1");
  REQUIRE(HazardModel::exponential(0.5).csv_line() == "exponential,0.5,");
}
