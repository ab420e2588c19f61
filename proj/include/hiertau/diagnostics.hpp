#pragma once

#include <string>
#include <vector>

#include "hiertau/sampler.hpp"

namespace hiertau {

struct DiagnosticsReport {
  double min_ess = 0.0;
  double med_ess = 0.0;
  double mean_rhat = 0.0;
  double max_rhat = 0.0;
  long n_divergent = 0;
  std::vector<std::string> param_names;
  std::vector<double> ess_values;
  std::vector<double> rhat_values;

  std::string to_csv() const;
};

// Split potential scale reduction factor over C chains of equal length.
// Throws std::runtime_error when the within-chain variance is zero.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Split-chain effective sample size with Geyer initial-monotone
// truncation; capped at twice the total draw count.
double ess(const std::vector<std::vector<double>>& chains);

// SD of the pooled draws divided by sqrt(ESS).
double mcse_mean(const std::vector<std::vector<double>>& chains);

// Per-parameter ESS and split-Rhat over param_subset (all parameters
// when empty), plus divergence totals summed over chains.
DiagnosticsReport report(const std::vector<ChainOutput>& outputs,
                         const std::vector<int>& param_subset = {});

}  // namespace hiertau
