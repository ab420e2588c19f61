#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hiertau/models.hpp"
#include "hiertau/rng.hpp"

namespace hiertau {

struct SamplerConfig {
  int chains = 4;
  int warmup = 250;
  int draws = 2500;
  double target_accept = 0.99;
  int max_treedepth = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

// Post-warmup output of one chain. Draws are on the constrained scale,
// row-major draws x dim. Divergences refer to the sampling phase only.
struct ChainOutput {
  int dim = 0;
  std::vector<double> draws;
  std::vector<std::uint8_t> divergent;
  std::vector<int> treedepth;
  std::vector<double> energy;
  double stepsize = 0.0;
  std::vector<double> inv_mass;
  bool quality_ok = true;  // false when every sampling iteration diverged

  long n_divergent() const {
    long c = 0;
    for (auto d : divergent) c += d;
    return c;
  }
};

// One symplectic leapfrog step (half kick, drift, half kick) under a
// diagonal inverse mass. q, p, grad and logp are updated in place.
// Returns false when the density or gradient went non-finite; callers
// treat that as a divergence candidate, not an error.
bool leapfrog(const TargetDensity& target, std::span<double> q, std::span<double> p,
              std::span<double> grad, double& logp, double eps,
              std::span<const double> inv_mass);

struct NutsResult {
  bool divergent = false;
  int treedepth = 0;
  double accept_stat = 0.0;
  double energy = 0.0;
  long n_leapfrog = 0;
};

// One multinomial no-u-turn transition from q (unconstrained), updating
// q in place. Uses biased progressive sampling across doublings and the
// generalized u-turn criterion checked across subtree boundaries.
NutsResult nuts_transition(const TargetDensity& target, std::vector<double>& q,
                           Rng& rng, double eps, std::span<const double> inv_mass,
                           int max_treedepth);

// Nesterov dual averaging of log(eps) toward the target acceptance
// statistic, with gamma = 0.05, t0 = 10, kappa = 0.75.
struct DualAverageState {
  double mu = 0.0;
  double log_eps = 0.0;
  double log_eps_bar = 0.0;
  double h_bar = 0.0;
  int count = 0;

  static DualAverageState init(double eps0);
  double eps() const;
  double eps_bar() const;
};

DualAverageState dual_average_step(DualAverageState state, double accept_stat,
                                   double target_accept);

// Regularized per-coordinate variance of a window of unconstrained
// draws: (N/(N+5)) var + (5/(N+5)) 1e-3.
std::vector<double> adapt_mass(std::span<const double> window, int n_draws, int dim);

ChainOutput run_chain(const TargetDensity& target, const SamplerConfig& config,
                      int chain_index);
std::vector<ChainOutput> run_chains(const TargetDensity& target,
                                    const SamplerConfig& config);

// Max relative error between the analytic gradient and central finite
// differences with step h, over all coordinates at the given point.
double grad_check(const TargetDensity& target, std::span<const double> q, double h);

// One row per draw: chain,iter,divergent,treedepth,energy,<parameters>.
std::string chains_to_csv(const std::vector<ChainOutput>& outputs,
                          const std::vector<std::string>& param_names);

}  // namespace hiertau
