#pragma once

#include <span>
#include <string>
#include <vector>

namespace hiertau {

struct DatasetMetrics {
  double post_mean = 0.0;
  double post_median = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
  double bias = 0.0;
  double rel_bias = 0.0;
  double sq_err = 0.0;
  double length = 0.0;
  bool covered = false;
};

struct SummaryRow {
  std::string label;
  double true_value = 0.0;
  double mean = 0.0;
  double median = 0.0;
  double bias = 0.0;
  double rel_bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double interval_length = 0.0;
};

// Quantile by linear interpolation between order statistics: quantile p
// sits at index p (n - 1), zero based. `sorted` must be ascending.
double quantile_sorted(std::span<const double> sorted, double p);

// Posterior summaries of one dataset's tau draws against the truth.
// Requires at least 100 draws.
DatasetMetrics summarize_dataset(std::span<const double> tau_draws, double tau_true);

// Across-dataset aggregation into one table row. Coverage is the
// fraction covered; rmse is the root of the mean squared error.
SummaryRow aggregate(const std::vector<DatasetMetrics>& rows, const std::string& label,
                     double true_value);

// Header: label,true_value,mean,median,bias,rel_bias,rmse,coverage,interval_length
std::string summary_csv_header();
std::string summary_csv_line(const SummaryRow& row);

}  // namespace hiertau
