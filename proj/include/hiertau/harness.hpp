#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hiertau/diagnostics.hpp"
#include "hiertau/metrics.hpp"
#include "hiertau/models.hpp"
#include "hiertau/sampler.hpp"

namespace hiertau {

struct StudyConfig {
  ModelId model = ModelId::M1;
  double tau = 0.4;        // models 1 and 2
  double tau_b = 0.04;     // model 3
  double tau_r = 0.7;      // model 3
  double beta0 = 0.0;
  double beta1 = 0.2;
  double sigma = 1.0;      // residual SD (models 2 and 3)
  int n = 0;               // 0 = model default (M2: 10, M3: 700)
  int J = 0;               // 0 = model default (M2: 4, M3: 7)
  std::vector<double> sigma_vec;  // model 1; empty = eight-schools default
  std::vector<double> ages;       // model 2; empty = default_ages()
  int n_datasets = 100;
  SamplerConfig sampler;
  double c = 1.5;
  std::uint64_t base_seed = 0;
  std::vector<int> prior_subset;  // 1-based catalog indices; empty = all 14

  void validate() const;
  StudyConfig resolved() const;  // defaults filled in

  std::string to_json() const;
  static StudyConfig from_json(const std::string& text);
};

struct DiagnosticTableRow {
  std::string label;
  double true_value = 0.0;
  double min_ess = 0.0;
  double med_ess = 0.0;
  double mean_rhat = 0.0;
  double max_rhat = 0.0;
  double mean_div = 0.0;
  double pct_zero_dt = 0.0;
  long max_dt = 0;
};

struct FigureRow {
  std::string label;
  std::string family;
  double nu = 0.0;
  std::string s_regime;  // literature | true | over | under
  double true_value = 0.0;
  double mean = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};

struct StudyResult {
  std::vector<DiagnosticTableRow> diagnostic_rows;
  std::vector<SummaryRow> estimate_rows;
  std::vector<FigureRow> figure_rows;
  std::vector<long> failures;  // per estimate row, datasets excluded
  StudyConfig config;          // resolved
};

// Collision-free mixing of (base seed, dataset, prior, chain) into one
// 64-bit stream seed: h = base, then for each index k in order
// h = mix64(h + 0x9E3779B97F4A7C15 * (k + 1)), with mix64 the SplitMix64
// finalizer. Any implementation of this formula reproduces the streams.
std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t dataset_index,
                          std::uint64_t prior_index, std::uint64_t chain_index);

// Worker count: HIERTAU_THREADS when set, else hardware concurrency.
int harness_threads();

// Run the full grid: simulate n_datasets datasets, fit every selected
// prior on each one, aggregate diagnostics and estimates per prior.
// Results are independent of the parallel schedule.
StudyResult run_study(const StudyConfig& config);

// Writes diagnostics_<model>_<tau>.csv, estimates_<model>_<tau>.csv,
// figure_data.csv, failures.csv and provenance.json into out_dir.
void write_study_outputs(const StudyResult& result, const std::string& out_dir);

std::string diagnostics_csv_header();
std::string diagnostics_csv_line(const DiagnosticTableRow& row);

}  // namespace hiertau
