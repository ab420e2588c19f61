#include "hiertau/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hiertau/io.hpp"

namespace hiertau {

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("quantile_sorted: empty input");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile_sorted: p in [0,1]");
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = p * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(h);
  if (lo + 1 >= n) return sorted[n - 1];
  const double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

DatasetMetrics summarize_dataset(std::span<const double> tau_draws, double tau_true) {
  if (tau_draws.empty()) throw std::invalid_argument("summarize_dataset: empty draws");
  if (tau_draws.size() < 100)
    throw std::invalid_argument("summarize_dataset: need at least 100 draws");

  std::vector<double> sorted(tau_draws.begin(), tau_draws.end());
  std::sort(sorted.begin(), sorted.end());

  DatasetMetrics m;
  double sum = 0.0;
  for (double v : sorted) sum += v;
  m.post_mean = sum / static_cast<double>(sorted.size());
  m.post_median = quantile_sorted(sorted, 0.5);
  m.q025 = quantile_sorted(sorted, 0.025);
  m.q975 = quantile_sorted(sorted, 0.975);
  m.covered = m.q025 <= tau_true && tau_true <= m.q975;
  m.bias = m.post_mean - tau_true;
  m.rel_bias = m.bias / tau_true;
  m.sq_err = m.bias * m.bias;
  m.length = m.q975 - m.q025;
  return m;
}

SummaryRow aggregate(const std::vector<DatasetMetrics>& rows, const std::string& label,
                     double true_value) {
  if (rows.empty()) throw std::invalid_argument("aggregate: no rows");
  SummaryRow out;
  out.label = label;
  out.true_value = true_value;
  const double n = static_cast<double>(rows.size());
  double covered = 0.0, mse = 0.0;
  for (const auto& r : rows) {
    out.mean += r.post_mean;
    out.median += r.post_median;
    out.bias += r.bias;
    out.rel_bias += r.rel_bias;
    out.interval_length += r.length;
    covered += r.covered ? 1.0 : 0.0;
    mse += r.sq_err;
  }
  out.mean /= n;
  out.median /= n;
  out.bias /= n;
  out.rel_bias /= n;
  out.interval_length /= n;
  out.coverage = covered / n;
  out.rmse = std::sqrt(mse / n);
  return out;
}

std::string summary_csv_header() {
  return "label,true_value,mean,median,bias,rel_bias,rmse,coverage,interval_length\n";
}

std::string summary_csv_line(const SummaryRow& r) {
  return r.label + "," + format_double(r.true_value) + "," + format_double(r.mean) +
         "," + format_double(r.median) + "," + format_double(r.bias) + "," +
         format_double(r.rel_bias) + "," + format_double(r.rmse) + "," +
         format_double(r.coverage) + "," + format_double(r.interval_length) + "\n";
}

}  // namespace hiertau
