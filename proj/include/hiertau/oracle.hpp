#pragma once

#include <vector>

#include "hiertau/models.hpp"
#include "hiertau/rng.hpp"

namespace hiertau {

// Post-burnin Gibbs draws for Model 1 under an IG(a, b) prior on tau^2
// with mu fixed at 0. theta is draws x J row-major.
struct GibbsDraws {
  std::vector<double> theta;
  std::vector<double> tau2;
  int J = 0;

  std::vector<double> tau() const;  // sqrt of tau2, per draw
};

// Exact full conditionals:
//   theta_j | tau^2 ~ N(V_j ybar_j / sigma_j^2, V_j),
//       V_j = (1/sigma_j^2 + 1/tau^2)^-1
//   tau^2 | theta   ~ IG(a + J/2, b + theta'theta/2)
GibbsDraws gibbs_model1(const Model1Data& data, double a, double b, int iters,
                        int burnin, Rng& rng);

struct RemlFit {
  double tau_hat = 0.0;
  double sigma_hat = 0.0;
  bool converged = false;
};

// Profiled REML for the random-intercept model behind Model 2,
// optimized over lambda = tau^2/sigma^2 on a log grid refined by
// golden-section search. A boundary optimum reports tau_hat = 0.
RemlFit reml_model2(const Model2Data& data);

}  // namespace hiertau
