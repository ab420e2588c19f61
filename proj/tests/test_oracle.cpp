#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "hiertau/diagnostics.hpp"
#include "hiertau/models.hpp"
#include "hiertau/oracle.hpp"
#include "hiertau/priors.hpp"
#include "hiertau/sampler.hpp"
#include "test_util.hpp"

using namespace hiertau;

TEST_CASE("gibbs tau^2 conditional matches the analytic inverse gamma") {
  // Near-zero measurement error pins theta at ybar = 0, so the tau^2
  // draws are iid IG(a + J/2, b).
  Model1Data data;
  data.ybar.assign(8, 0.0);
  data.sigma.assign(8, 1e-8);
  const double a = 2.0, b = 8.0;
  Rng rng(303);
  const auto draws = gibbs_model1(data, a, b, 11000, 1000, rng);
  REQUIRE(draws.tau2.size() == 10000);

  const double A = a + 4.0, B = b;
  const double expect_mean = B / (A - 1.0);
  const double mean = testutil::mean_of(draws.tau2);
  const double mcse = mcse_mean({draws.tau2});
  CHECK(std::abs(mean - expect_mean) < 3.0 * mcse);

  // Kolmogorov-Smirnov against the analytic CDF at alpha = 0.01.
  auto sorted = draws.tau2;
  std::sort(sorted.begin(), sorted.end());
  double dmax = 0.0;
  const double n = static_cast<double>(sorted.size());
  for (size_t i = 0; i < sorted.size(); ++i) {
    const double cdf = testutil::gammq(A, B / sorted[i]);  // P(IG <= x) = Q(A, B/x)
    dmax = std::max(dmax, std::abs(cdf - (i + 1) / n));
    dmax = std::max(dmax, std::abs(cdf - i / n));
  }
  CHECK(dmax * std::sqrt(n) < 1.63);  // K_0.01
}

TEST_CASE("gibbs with theta free tracks the zero sum of squares case") {
  Model1Data data;
  data.ybar.assign(4, 0.0);
  data.sigma.assign(4, 1e-8);
  Rng rng(304);
  const auto draws = gibbs_model1(data, 1.0, 1.0, 2000, 500, rng);
  // theta ~ 0, so tau^2 | theta ~ IG(1 + 2, 1): mean 1/2.
  CHECK(testutil::mean_of(draws.tau2) == doctest::Approx(0.5).epsilon(0.1));
  CHECK_THROWS_AS(gibbs_model1(data, -1.0, 1.0, 100, 10, rng), std::domain_error);
  CHECK_THROWS_AS(gibbs_model1(data, 1.0, 1.0, 10, 20, rng), std::domain_error);
}

TEST_CASE("gibbs and nuts agree on the tau posterior mean") {
  Rng drng(305);
  const auto data = simulate_model1(2.0, eight_schools_sigma(), drng);
  const auto spec = catalog(2.0)[6];  // 7.IG(2, 2 tau^2) -> IG(2, 8)
  const auto target = bind_model1(data, spec);

  SamplerConfig cfg;
  cfg.seed = 306;
  const auto outputs = run_chains(*target, cfg);
  const int tau_idx = target->tau_indices()[0];
  std::vector<std::vector<double>> nuts_chains;
  for (const auto& o : outputs) {
    std::vector<double> col(cfg.draws);
    for (int it = 0; it < cfg.draws; ++it) col[it] = o.draws[it * o.dim + tau_idx];
    nuts_chains.push_back(std::move(col));
  }
  double nuts_mean = 0.0;
  for (const auto& c : nuts_chains)
    for (double v : c) nuts_mean += v;
  nuts_mean /= 4.0 * cfg.draws;

  Rng grng(307);
  const auto gibbs = gibbs_model1(data, spec.ig_a(), spec.ig_b(), 11000, 1000, grng);
  const auto gtau = gibbs.tau();
  const double gibbs_mean = testutil::mean_of(gtau);

  const double mcse = std::sqrt(std::pow(mcse_mean(nuts_chains), 2) +
                                std::pow(mcse_mean({gtau}), 2));
  CHECK(std::abs(nuts_mean - gibbs_mean) < 3.0 * mcse);
}

TEST_CASE("reml finds the boundary when tau is effectively zero") {
  int zeros = 0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    Rng rng = Rng(400).split(r);
    const auto data = simulate_model2(1e-8, 0.0, 0.2, 1.0, 10, default_ages(), rng);
    const auto fit = reml_model2(data);
    CHECK(fit.converged);
    if (fit.tau_hat == 0.0) ++zeros;
  }
  CHECK(zeros > reps / 2);
}

TEST_CASE("reml recovers tau and sigma away from the boundary") {
  std::vector<double> tau_hats, sigma_hats;
  for (int r = 0; r < 60; ++r) {
    Rng rng = Rng(401).split(r);
    const auto data = simulate_model2(1.0, 0.0, 0.2, 1.0, 30, default_ages(), rng);
    const auto fit = reml_model2(data);
    tau_hats.push_back(fit.tau_hat);
    sigma_hats.push_back(fit.sigma_hat);
  }
  CHECK(testutil::mean_of(tau_hats) == doctest::Approx(1.0).epsilon(0.08));
  CHECK(testutil::mean_of(sigma_hats) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("reml is scale equivariant") {
  Rng rng(402);
  auto data = simulate_model2(0.8, 0.0, 0.2, 1.0, 20, default_ages(), rng);
  const auto base = reml_model2(data);
  for (auto& y : data.y) y *= 3.0;
  const auto scaled = reml_model2(data);
  CHECK(scaled.tau_hat == doctest::Approx(3.0 * base.tau_hat).epsilon(1e-6));
  CHECK(scaled.sigma_hat == doctest::Approx(3.0 * base.sigma_hat).epsilon(1e-6));
}

TEST_CASE("reml rejects rank deficient designs") {
  Model2Data data;
  data.n = 5;
  data.J = 2;
  data.x = {0.0, 0.0};
  data.y.assign(10, 1.0);
  CHECK_THROWS(reml_model2(data));
}
