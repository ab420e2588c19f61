#include "hiertau/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hiertau/stats.hpp"

namespace hiertau {

std::vector<double> GibbsDraws::tau() const {
  std::vector<double> out(tau2.size());
  for (size_t i = 0; i < tau2.size(); ++i) out[i] = std::sqrt(tau2[i]);
  return out;
}

GibbsDraws gibbs_model1(const Model1Data& data, double a, double b, int iters,
                        int burnin, Rng& rng) {
  data.validate();
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("gibbs_model1: a, b must be positive");
  if (burnin < 0 || iters <= burnin)
    throw std::domain_error("gibbs_model1: need iters > burnin >= 0");

  const int J = data.J();
  GibbsDraws out;
  out.J = J;
  const int kept = iters - burnin;
  out.theta.resize(static_cast<size_t>(kept) * J);
  out.tau2.resize(kept);

  double tau2 = b / (a + 1.0);  // prior mode
  std::vector<double> theta(J, 0.0);
  for (int it = 0; it < iters; ++it) {
    for (int j = 0; j < J; ++j) {
      const double s2 = data.sigma[j] * data.sigma[j];
      const double vj = 1.0 / (1.0 / s2 + 1.0 / tau2);
      theta[j] = normal_sample(rng, vj * data.ybar[j] / s2, std::sqrt(vj));
    }
    double ss = 0.0;
    for (double t : theta) ss += t * t;
    tau2 = invgamma_sample(rng, a + 0.5 * J, b + 0.5 * ss);
    if (it >= burnin) {
      const int k = it - burnin;
      for (int j = 0; j < J; ++j) out.theta[static_cast<size_t>(k) * J + j] = theta[j];
      out.tau2[k] = tau2;
    }
  }
  return out;
}

namespace {

// Negative profiled REML criterion for the balanced random-intercept
// model, as a function of lambda = tau^2/sigma^2. Uses the closed-form
// blockwise inverse V_i^-1 = I - lambda/(1+J lambda) 11'.
struct RemlProblem {
  int n, J;
  double sy, sxy, syy, sxx;          // totals over all cells (x centered)
  std::vector<double> yi;            // per-subject row sums

  double neg2_reml(double lam, double* sigma2_out) const {
    const double w = lam / (1.0 + J * lam);
    const double nJ = static_cast<double>(n) * J;

    // X'V^-1X is diagonal for centered x: diag(n J/(1+J lam), n Sxx).
    const double a11 = n * J / (1.0 + J * lam);
    const double a22 = n * sxx;

    double yvy = syy;
    double sum_yi = 0.0, sum_yi2 = 0.0;
    for (double v : yi) {
      sum_yi += v;
      sum_yi2 += v * v;
    }
    yvy -= w * sum_yi2;

    const double xv1 = (1.0 - w * J) * sum_yi;  // [1 column]' V^-1 y
    const double xv2 = sxy;                     // [x column]' V^-1 y (x'1 = 0)

    const double ypy = yvy - xv1 * xv1 / a11 - xv2 * xv2 / a22;
    const double dof = nJ - 2.0;
    const double sigma2 = ypy / dof;
    if (sigma2_out) *sigma2_out = sigma2;
    return n * std::log1p(J * lam) + std::log(a11) + std::log(a22) +
           dof * std::log(ypy);
  }
};

}  // namespace

RemlFit reml_model2(const Model2Data& data) {
  data.validate();
  RemlProblem prob;
  prob.n = data.n;
  prob.J = data.J;
  prob.sy = prob.sxy = prob.syy = prob.sxx = 0.0;
  prob.yi.assign(data.n, 0.0);
  for (int j = 0; j < data.J; ++j) prob.sxx += data.x[j] * data.x[j];
  if (!(prob.sxx > 0.0)) throw std::runtime_error("reml_model2: rank-deficient design");
  for (int i = 0; i < data.n; ++i)
    for (int j = 0; j < data.J; ++j) {
      const double y = data.y[static_cast<size_t>(i) * data.J + j];
      prob.sy += y;
      prob.syy += y * y;
      prob.sxy += data.x[j] * y;
      prob.yi[i] += y;
    }

  constexpr int kGrid = 241;
  constexpr double kLo = -30.0, kHi = 30.0;
  int best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kGrid; ++k) {
    const double loglam = kLo + (kHi - kLo) * k / (kGrid - 1);
    const double val = prob.neg2_reml(std::exp(loglam), nullptr);
    if (val < best_val) {
      best_val = val;
      best = k;
    }
  }

  RemlFit fit;
  fit.converged = true;
  if (best == 0) {
    // Optimum at the lower boundary: no between-subject variance.
    double sigma2 = 0.0;
    prob.neg2_reml(0.0, &sigma2);
    fit.tau_hat = 0.0;
    fit.sigma_hat = std::sqrt(sigma2);
    return fit;
  }

  const double step = (kHi - kLo) / (kGrid - 1);
  double lo = kLo + step * (best - 1);
  double hi = kLo + step * std::min(best + 1, kGrid - 1);
  constexpr double kGolden = 0.3819660112501051;
  double x1 = lo + kGolden * (hi - lo);
  double x2 = hi - kGolden * (hi - lo);
  double f1 = prob.neg2_reml(std::exp(x1), nullptr);
  double f2 = prob.neg2_reml(std::exp(x2), nullptr);
  for (int it = 0; it < 120 && hi - lo > 1e-10; ++it) {
    if (f1 < f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = lo + kGolden * (hi - lo);
      f1 = prob.neg2_reml(std::exp(x1), nullptr);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = hi - kGolden * (hi - lo);
      f2 = prob.neg2_reml(std::exp(x2), nullptr);
    }
  }
  const double lam = std::exp(0.5 * (lo + hi));
  double sigma2 = 0.0;
  prob.neg2_reml(lam, &sigma2);
  fit.tau_hat = std::sqrt(lam * sigma2);
  fit.sigma_hat = std::sqrt(sigma2);
  return fit;
}

}  // namespace hiertau
