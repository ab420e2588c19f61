#include "hiertau/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hiertau/io.hpp"

namespace hiertau {

namespace {

struct SplitSeqs {
  std::vector<std::vector<double>> seq;  // 2C sequences, centered storage kept raw
  int len = 0;
};

SplitSeqs split_chains(const std::vector<std::vector<double>>& chains, int min_len) {
  if (chains.empty()) throw std::invalid_argument("diagnostics: no chains");
  const size_t n = chains.front().size();
  for (const auto& c : chains)
    if (c.size() != n) throw std::invalid_argument("diagnostics: unequal chain lengths");
  if (static_cast<int>(n) < min_len)
    throw std::invalid_argument("diagnostics: chains too short");
  SplitSeqs out;
  out.len = static_cast<int>(n / 2);
  for (const auto& c : chains) {
    out.seq.emplace_back(c.begin(), c.begin() + out.len);
    out.seq.emplace_back(c.begin() + out.len, c.begin() + 2 * out.len);
  }
  return out;
}

double seq_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Biased (1/L) autocovariance of one sequence at the given lag.
double autocov(const std::vector<double>& v, double mean, int lag) {
  const int L = static_cast<int>(v.size());
  double s = 0.0;
  for (int i = 0; i + lag < L; ++i) s += (v[i] - mean) * (v[i + lag] - mean);
  return s / static_cast<double>(L);
}

}  // namespace

double split_rhat(const std::vector<std::vector<double>>& chains) {
  const auto sp = split_chains(chains, 4);
  const int M = static_cast<int>(sp.seq.size());
  const double L = sp.len;

  std::vector<double> means(M), vars(M);
  for (int m = 0; m < M; ++m) {
    means[m] = seq_mean(sp.seq[m]);
    double ss = 0.0;
    for (double x : sp.seq[m]) ss += (x - means[m]) * (x - means[m]);
    vars[m] = ss / (L - 1.0);
  }
  double w = 0.0;
  for (double v : vars) w += v;
  w /= M;
  if (!(w > 0.0)) throw std::runtime_error("split_rhat: zero within-chain variance");

  const double grand = seq_mean(means);
  double b = 0.0;
  for (double m : means) b += (m - grand) * (m - grand);
  b *= L / (M - 1.0);

  const double var_plus = (L - 1.0) / L * w + b / L;
  return std::sqrt(var_plus / w);
}

double ess(const std::vector<std::vector<double>>& chains) {
  const auto sp = split_chains(chains, 8);
  const int M = static_cast<int>(sp.seq.size());
  const int L = sp.len;

  std::vector<double> means(M), acov0(M);
  for (int m = 0; m < M; ++m) {
    means[m] = seq_mean(sp.seq[m]);
    acov0[m] = autocov(sp.seq[m], means[m], 0);
  }
  double mean_var = 0.0;
  for (int m = 0; m < M; ++m) mean_var += acov0[m] * L / (L - 1.0);
  mean_var /= M;
  if (!(mean_var > 0.0)) throw std::runtime_error("ess: zero variance");

  double var_plus = mean_var * (L - 1.0) / L;
  if (M > 1) {
    const double grand = seq_mean(means);
    double b = 0.0;
    for (double m : means) b += (m - grand) * (m - grand);
    var_plus += b / (M - 1.0);
  }

  auto mean_acov_at = [&](int lag) {
    double s = 0.0;
    for (int m = 0; m < M; ++m) s += autocov(sp.seq[m], means[m], lag);
    return s / M;
  };

  // Combined autocorrelations, truncated by Geyer's initial positive
  // pair rule, then forced monotone.
  std::vector<double> rho;
  rho.push_back(1.0);
  rho.push_back(1.0 - (mean_var - mean_acov_at(1)) / var_plus);
  double pair_prev = rho[0] + rho[1];
  double tail_sum = pair_prev;
  int t = 1;
  while (t + 2 < L - 2) {
    const double even = 1.0 - (mean_var - mean_acov_at(t + 1)) / var_plus;
    const double odd = 1.0 - (mean_var - mean_acov_at(t + 2)) / var_plus;
    double pair = even + odd;
    if (pair <= 0.0) break;
    if (pair > pair_prev) pair = pair_prev;  // monotone correction
    tail_sum += pair;
    pair_prev = pair;
    t += 2;
  }

  const double total = static_cast<double>(M) * L;
  const double tau_hat = std::max(2.0 * tail_sum - 1.0, 1e-12);
  return std::min(total / tau_hat, 2.0 * total);
}

double mcse_mean(const std::vector<std::vector<double>>& chains) {
  const double e = ess(chains);
  double mean = 0.0;
  size_t count = 0;
  for (const auto& c : chains)
    for (double x : c) {
      mean += x;
      ++count;
    }
  mean /= static_cast<double>(count);
  double ss = 0.0;
  for (const auto& c : chains)
    for (double x : c) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (static_cast<double>(count) - 1.0));
  return sd / std::sqrt(e);
}

DiagnosticsReport report(const std::vector<ChainOutput>& outputs,
                         const std::vector<int>& param_subset) {
  if (outputs.empty()) throw std::invalid_argument("report: no chains");
  const int dim = outputs.front().dim;
  const size_t draws = outputs.front().divergent.size();
  for (const auto& o : outputs)
    if (o.dim != dim || o.divergent.size() != draws)
      throw std::invalid_argument("report: inconsistent chain outputs");

  std::vector<int> params = param_subset;
  if (params.empty())
    for (int k = 0; k < dim; ++k) params.push_back(k);
  for (int k : params)
    if (k < 0 || k >= dim) throw std::invalid_argument("report: parameter out of range");

  DiagnosticsReport rep;
  for (int k : params) {
    std::vector<std::vector<double>> chains;
    chains.reserve(outputs.size());
    for (const auto& o : outputs) {
      std::vector<double> col(draws);
      for (size_t it = 0; it < draws; ++it)
        col[it] = o.draws[it * dim + k];
      chains.push_back(std::move(col));
    }
    rep.ess_values.push_back(ess(chains));
    rep.rhat_values.push_back(split_rhat(chains));
    rep.param_names.push_back("p" + std::to_string(k));
  }

  auto sorted = rep.ess_values;
  std::sort(sorted.begin(), sorted.end());
  rep.min_ess = sorted.front();
  rep.med_ess = sorted.size() % 2 == 1
                    ? sorted[sorted.size() / 2]
                    : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
  double sum_rhat = 0.0, max_rhat = 0.0;
  for (double r : rep.rhat_values) {
    sum_rhat += r;
    max_rhat = std::max(max_rhat, r);
  }
  rep.mean_rhat = sum_rhat / static_cast<double>(rep.rhat_values.size());
  rep.max_rhat = max_rhat;
  for (const auto& o : outputs) rep.n_divergent += o.n_divergent();
  return rep;
}

std::string DiagnosticsReport::to_csv() const {
  std::string out = "min_ess,med_ess,mean_rhat,max_rhat,n_divergent\n";
  out += format_double(min_ess) + "," + format_double(med_ess) + "," +
         format_double(mean_rhat) + "," + format_double(max_rhat) + "," +
         std::to_string(n_divergent) + "\n";
  return out;
}

}  // namespace hiertau
