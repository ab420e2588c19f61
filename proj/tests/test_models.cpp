#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "hiertau/models.hpp"
#include "hiertau/priors.hpp"
#include "hiertau/sampler.hpp"
#include "hiertau/stats.hpp"
#include "test_util.hpp"

using namespace hiertau;

TEST_CASE("simulate_model1 marginal variance adds tau^2 and sigma_j^2") {
  const auto sigma = eight_schools_sigma();
  REQUIRE(sigma.size() == 8);

  for (double tau : {2.61, 10.0}) {
    Rng rng(314);
    const int reps = 10000;
    std::vector<double> y1(reps);
    for (int r = 0; r < reps; ++r) {
      Rng child = rng.split(r);
      y1[r] = simulate_model1(tau, sigma, child).ybar[0];
    }
    const double expect = tau * tau + sigma[0] * sigma[0];
    CHECK(testutil::var_of(y1) == doctest::Approx(expect).epsilon(0.03));
  }

  // Degenerate random effect: Var(ybar_j) collapses to sigma_j^2.
  Rng rng(315);
  const int reps = 10000;
  std::vector<double> y1(reps);
  for (int r = 0; r < reps; ++r) {
    Rng child = rng.split(r);
    y1[r] = simulate_model1(1e-9, sigma, child).ybar[0];
  }
  CHECK(testutil::var_of(y1) == doctest::Approx(sigma[0] * sigma[0]).epsilon(0.03));

  Rng r2(1);
  CHECK_THROWS_AS(simulate_model1(1.0, {}, r2), std::domain_error);
  CHECK_THROWS_AS(simulate_model1(1.0, {1.0, -1.0}, r2), std::domain_error);
}

TEST_CASE("simulate_model2 covariance structure") {
  Rng rng(2718);
  const double tau = 2.0;
  const auto data = simulate_model2(tau, 0.0, 0.2, 1.0, 10000, default_ages(), rng);
  REQUIRE(data.J == 4);

  // Marginal variance tau^2 + sigma^2 and exchangeable covariance tau^2.
  std::vector<double> col0(data.n), col1(data.n);
  for (int i = 0; i < data.n; ++i) {
    col0[i] = data.y[static_cast<size_t>(i) * data.J + 0] - 0.2 * data.x[0];
    col1[i] = data.y[static_cast<size_t>(i) * data.J + 1] - 0.2 * data.x[1];
  }
  CHECK(testutil::var_of(col0) == doctest::Approx(tau * tau + 1.0).epsilon(0.03));
  const double m0 = testutil::mean_of(col0), m1 = testutil::mean_of(col1);
  double cov = 0.0;
  for (int i = 0; i < data.n; ++i) cov += (col0[i] - m0) * (col1[i] - m1);
  cov /= data.n - 1.0;
  CHECK(cov == doctest::Approx(tau * tau).epsilon(0.03));

  // Near-noiseless limit reproduces the plane beta0 + beta1 x.
  Rng r2(5);
  const auto tiny = simulate_model2(1e-9, 1.0, 0.2, 1e-9, 5, default_ages(), r2);
  for (int i = 0; i < tiny.n; ++i)
    for (int j = 0; j < tiny.J; ++j)
      CHECK(tiny.y[static_cast<size_t>(i) * tiny.J + j] ==
            doctest::Approx(1.0 + 0.2 * tiny.x[j]).epsilon(1e-6));

  Rng r3(6);
  CHECK_THROWS_AS(simulate_model2(1.0, 0, 0.2, 1.0, 10, {1.0, 2.0}, r3),
                  std::domain_error);
}

TEST_CASE("simulate_model3 moment structure") {
  // Small tau_b keeps the within-dataset slope coupling negligible so
  // the pooled cross moment concentrates on tau_r^2.
  const double tau_b = 0.16, tau_r = 0.7, sigma = 1.0, beta0 = 0.3, beta1 = 0.2;
  Rng rng(99);
  double sum_sq = 0.0, sum_cross = 0.0;
  long n_sq = 0, n_cross = 0;
  for (int rep = 0; rep < 100; ++rep) {
    Rng child = rng.split(rep);
    const auto d = simulate_model3(tau_b, tau_r, beta0, beta1, sigma, 700, 7, child);
    for (int i = 0; i < d.n; ++i) {
      const double zi0 = d.y[static_cast<size_t>(i) * d.J + 0] - beta0 - beta1 * d.x[i];
      const double zi1 = d.y[static_cast<size_t>(i) * d.J + 1] - beta0 - beta1 * d.x[i];
      sum_sq += zi0 * zi0;
      ++n_sq;
      sum_cross += zi0 * zi1;
      ++n_cross;
    }
  }
  // E[z^2] = tau_b^2 E[x^2] + tau_r^2 + sigma^2 with E[x^2] = 1 exactly.
  CHECK(sum_sq / n_sq ==
        doctest::Approx(tau_b * tau_b + tau_r * tau_r + sigma * sigma).epsilon(0.03));
  // E[z_ij z_ik] = tau_r^2 for j != k.
  CHECK(sum_cross / n_cross == doctest::Approx(tau_r * tau_r).epsilon(0.03));

  Rng r2(7);
  const auto d = simulate_model3(1.0, 1.0, 0, 0.2, 1.0, 50, 7, r2);
  CHECK(std::abs(testutil::mean_of(d.x)) < 1e-12);
  double ss = 0.0;
  for (double v : d.x) ss += v * v;
  CHECK(ss / d.n == doctest::Approx(1.0).epsilon(1e-12));

  Rng r3(8);
  CHECK_THROWS_AS(simulate_model3(0.0, 1.0, 0, 0.2, 1.0, 50, 7, r3), std::domain_error);
  CHECK_THROWS_AS(simulate_model3(1.0, 1.0, 0, 0.2, 1.0, 1, 7, r3), std::domain_error);
}

TEST_CASE("model 1 log posterior decomposes term by term") {
  Rng rng(41);
  const auto data = simulate_model1(0.4, eight_schools_sigma(), rng);
  const auto spec = catalog(0.4)[6];  // 7.IG(2, 2 tau^2)
  const auto target = bind_model1(data, spec);
  const int J = data.J();
  REQUIRE(target->dim() == J + 1);
  REQUIRE(target->tau_indices() == std::vector<int>{J});

  Rng qr(42);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> q(J + 1), grad(J + 1);
    for (auto& v : q) v = 2.0 * qr.uniform() - 1.0;
    const double xi = q[J];
    const double tau = std::exp(xi);
    double expected = 0.0;
    for (int j = 0; j < J; ++j) {
      expected += normal_logpdf(data.ybar[j], q[j], data.sigma[j]);
      expected += normal_logpdf(q[j], 0.0, tau);
    }
    expected += log_prior_tau(spec, tau) + xi;
    CHECK(target->logp_grad(q, grad) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("model 1 tau^2 full conditional is inverse gamma") {
  Rng rng(43);
  const auto data = simulate_model1(2.0, eight_schools_sigma(), rng);
  const double a = 2.0, b = 8.0;  // 7.IG(2, 2 tau^2) at tau = 2
  const auto target = bind_model1(data, make_ig(a, b));
  const int J = data.J();

  std::vector<double> theta(J);
  Rng qr(44);
  for (auto& t : theta) t = 4.0 * qr.uniform() - 2.0;
  double tt = 0.0;
  for (double t : theta) tt += t * t;

  // Conditional on theta, the xi-space density must equal the
  // IG(a + J/2, b + theta'theta/2) law of tau^2 with the exp(2 xi)
  // Jacobian, up to a constant in xi.
  auto lp_at = [&](double xi) {
    std::vector<double> q(theta), grad(J + 1);
    q.push_back(xi);
    grad.resize(J + 1);
    return target->logp_grad(q, grad);
  };
  auto cond_at = [&](double xi) {
    const double tau2 = std::exp(2.0 * xi);
    return invgamma_logpdf(tau2, a + 0.5 * J, b + 0.5 * tt) + std::log(2.0 * tau2);
  };
  const double base = lp_at(0.1) - cond_at(0.1);
  for (double xi : {-1.0, -0.3, 0.4, 0.9})
    CHECK(lp_at(xi) - cond_at(xi) == doctest::Approx(base).epsilon(1e-10));
}

TEST_CASE("model 2 log posterior at the origin with zero data") {
  Model2Data data;
  data.n = 6;
  data.J = 4;
  data.x = default_ages();
  data.y.assign(24, 0.0);
  data.tau_true = 1.0;
  data.sigma_true = 1.0;
  const auto spec = catalog(1.0)[7];
  const auto target = bind_model2(data, spec);

  std::vector<double> q(target->dim(), 0.0), grad(target->dim());
  const double xi = -0.2, eta = 0.3;
  q[data.n + 2] = xi;
  q[data.n + 3] = eta;
  const double tau = std::exp(xi), s2 = std::exp(eta), s = std::sqrt(s2);

  double expected = data.n * data.J * normal_logpdf(0.0, 0.0, s);
  expected += data.n * normal_logpdf(0.0, 0.0, tau);
  expected += 2.0 * normal_logpdf(0.0, 0.0, 10.0 * s);
  expected += invgamma_logpdf(s2, 0.05, 0.01) + eta;
  expected += log_prior_tau(spec, tau) + xi;
  CHECK(target->logp_grad(q, grad) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gradients match finite differences across models and priors") {
  // Reduced sweep; the acceptance suite runs the full 3 x 14 x 20 grid.
  Rng rng(271);

  Rng d1(1001);
  const auto data1 = simulate_model1(0.4, eight_schools_sigma(), d1);
  Rng d2(1002);
  const auto data2 = simulate_model2(1.0, 0.0, 0.2, 1.0, 10, default_ages(), d2);
  Rng d3(1003);
  const auto data3 = simulate_model3(0.16, 0.7, 0.0, 0.2, 1.0, 40, 5, d3);

  const auto specs1 = catalog(0.4);
  const auto specs2 = catalog(1.0);
  const auto specs3b = catalog(0.16);
  const auto specs3r = catalog(0.7);

  for (int k : {0, 1, 5, 7, 12}) {
    const auto t1 = bind_model1(data1, specs1[k]);
    const auto t2 = bind_model2(data2, specs2[k]);
    const auto t3 = bind_model3(data3, specs3b[k], specs3r[k]);
    for (const auto* t : {t1.get(), t2.get(), t3.get()}) {
      for (int rep = 0; rep < 4; ++rep) {
        std::vector<double> q(t->dim());
        for (auto& v : q) v = 4.0 * rng.uniform() - 2.0;
        CHECK(grad_check(*t, q, 1e-5) < 1e-5);
      }
    }
  }
}

TEST_CASE("constrain and unconstrain are inverse maps") {
  Rng d3(1004);
  const auto data3 = simulate_model3(0.16, 0.7, 0.0, 0.2, 1.0, 12, 3, d3);
  const auto target = bind_model3(data3, catalog(0.16)[6]);
  Rng rng(9);
  std::vector<double> q(target->dim()), c(target->dim()), back(target->dim());
  for (auto& v : q) v = 2.0 * rng.uniform() - 1.0;
  target->constrain(q, c);
  target->unconstrain(c, back);
  for (int k = 0; k < target->dim(); ++k)
    CHECK(back[k] == doctest::Approx(q[k]).epsilon(1e-12));
}

TEST_CASE("dataset serialization") {
  Rng rng(77);
  const auto d1 = simulate_model1(0.4, eight_schools_sigma(), rng);
  const auto csv = dataset_to_csv(d1, 3);
  CHECK(csv.rfind("dataset_id,i,j,y,x\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);  // header + 8 schools

  const auto meta = dataset_metadata_json(d1);
  CHECK(meta.find("\"model\":1") != std::string::npos);
  CHECK(meta.find("\"seed\":77") != std::string::npos);

  Rng r2(78);
  const auto d2 = simulate_model2(1.0, 0.0, 0.2, 1.0, 3, default_ages(), r2);
  const auto csv2 = dataset_to_csv(d2, 1);
  CHECK(std::count(csv2.begin(), csv2.end(), '\n') == 1 + 3 * 4);
}
