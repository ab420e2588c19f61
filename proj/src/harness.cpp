#include "hiertau/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <thread>

#include "hiertau/io.hpp"
#include "hiertau/priors.hpp"
#include "json.hpp"

namespace hiertau {

namespace {

int default_n(ModelId m) { return m == ModelId::M3 ? 700 : 10; }
int default_J(ModelId m) { return m == ModelId::M3 ? 7 : 4; }

std::string s_regime_of(int prior_index) {
  if (prior_index <= 4) return "literature";
  if (prior_index <= 10) return "true";
  if (prior_index <= 12) return "over";
  return "under";
}

// Everything measured for one (dataset, prior) cell, per tracked
// parameter (tau; plus tau_r for model 3).
struct CellStats {
  std::vector<double> ess;
  std::vector<double> rhat;
  std::vector<DatasetMetrics> metrics;
  long n_divergent = 0;
  bool failed = false;
};

struct StudyContext {
  StudyConfig cfg;
  std::vector<PriorSpec> priors_main;   // scale from tau (M1/M2) or tau_b (M3)
  std::vector<PriorSpec> priors_r;      // M3 only, scale from tau_r
  std::vector<int> selected;            // 1-based indices
  std::vector<Model1Data> data1;
  std::vector<Model2Data> data2;
  std::vector<Model3Data> data3;
};

CellStats run_cell(const StudyContext& ctx, int dataset, int prior_index) {
  const auto& cfg = ctx.cfg;
  std::unique_ptr<TargetDensity> target;
  switch (cfg.model) {
    case ModelId::M1:
      target = bind_model1(ctx.data1[dataset], ctx.priors_main[prior_index - 1]);
      break;
    case ModelId::M2:
      target = bind_model2(ctx.data2[dataset], ctx.priors_main[prior_index - 1]);
      break;
    case ModelId::M3:
      target = bind_model3(ctx.data3[dataset], ctx.priors_main[prior_index - 1],
                           ctx.priors_r[prior_index - 1]);
      break;
  }

  SamplerConfig scfg = cfg.sampler;
  scfg.seed = derive_seed(cfg.base_seed, static_cast<std::uint64_t>(dataset + 1),
                          static_cast<std::uint64_t>(prior_index), 0);

  CellStats cell;
  std::vector<ChainOutput> outputs;
  try {
    outputs = run_chains(*target, scfg);
  } catch (const std::exception&) {
    cell.failed = true;
    return cell;
  }
  for (const auto& o : outputs) {
    cell.n_divergent += o.n_divergent();
    if (!o.quality_ok) cell.failed = true;
  }

  for (int tau_idx : target->tau_indices()) {
    try {
      const auto rep = report(outputs, {tau_idx});
      cell.ess.push_back(rep.min_ess);
      cell.rhat.push_back(rep.max_rhat);
      std::vector<double> pooled;
      pooled.reserve(static_cast<size_t>(scfg.chains) * scfg.draws);
      for (const auto& o : outputs)
        for (int it = 0; it < scfg.draws; ++it)
          pooled.push_back(o.draws[static_cast<size_t>(it) * o.dim + tau_idx]);
      const double truth = cfg.model == ModelId::M3
                               ? (tau_idx == target->tau_indices()[0] ? cfg.tau_b
                                                                      : cfg.tau_r)
                               : cfg.tau;
      cell.metrics.push_back(summarize_dataset(pooled, truth));
    } catch (const std::exception&) {
      cell.failed = true;
      cell.ess.push_back(0.0);
      cell.rhat.push_back(0.0);
      cell.metrics.push_back(DatasetMetrics{});
    }
  }
  return cell;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

void StudyConfig::validate() const {
  if (n_datasets < 1) throw std::invalid_argument("StudyConfig: n_datasets >= 1");
  sampler.validate();
  if (!(c > 1.0)) throw std::invalid_argument("StudyConfig: c > 1");
  for (int k : prior_subset)
    if (k < 1 || k > 14)
      throw std::invalid_argument("StudyConfig: prior indices must be in 1..14");
  if (model == ModelId::M3) {
    if (!(tau_b > 0.0) || !(tau_r > 0.0))
      throw std::invalid_argument("StudyConfig: tau_b, tau_r > 0");
  } else if (!(tau > 0.0)) {
    throw std::invalid_argument("StudyConfig: tau > 0");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("StudyConfig: sigma > 0");
}

StudyConfig StudyConfig::resolved() const {
  StudyConfig r = *this;
  if (r.n == 0) r.n = default_n(r.model);
  if (r.J == 0) r.J = default_J(r.model);
  if (r.model == ModelId::M1 && r.sigma_vec.empty()) r.sigma_vec = eight_schools_sigma();
  if (r.model == ModelId::M2 && r.ages.empty()) r.ages = default_ages();
  if (r.model == ModelId::M2) r.J = static_cast<int>(r.ages.size());
  if (r.prior_subset.empty())
    for (int k = 1; k <= 14; ++k) r.prior_subset.push_back(k);
  return r;
}

std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t dataset_index,
                          std::uint64_t prior_index, std::uint64_t chain_index) {
  std::uint64_t h = base_seed;
  h = mix64(h + 0x9E3779B97F4A7C15ULL * (dataset_index + 1));
  h = mix64(h + 0x9E3779B97F4A7C15ULL * (prior_index + 1));
  h = mix64(h + 0x9E3779B97F4A7C15ULL * (chain_index + 1));
  return h;
}

int harness_threads() {
  if (const char* env = std::getenv("HIERTAU_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

StudyResult run_study(const StudyConfig& raw) {
  raw.validate();
  StudyContext ctx;
  ctx.cfg = raw.resolved();
  const StudyConfig& cfg = ctx.cfg;

  if (cfg.model == ModelId::M3) {
    ctx.priors_main = catalog(cfg.tau_b, cfg.c);
    ctx.priors_r = catalog(cfg.tau_r, cfg.c);
  } else {
    ctx.priors_main = catalog(cfg.tau, cfg.c);
  }
  ctx.selected = cfg.prior_subset;

  // Simulate once per dataset index; all priors share the dataset.
  for (int d = 0; d < cfg.n_datasets; ++d) {
    Rng rng(derive_seed(cfg.base_seed, static_cast<std::uint64_t>(d + 1), 0, 0));
    switch (cfg.model) {
      case ModelId::M1:
        ctx.data1.push_back(simulate_model1(cfg.tau, cfg.sigma_vec, rng));
        break;
      case ModelId::M2:
        ctx.data2.push_back(simulate_model2(cfg.tau, cfg.beta0, cfg.beta1, cfg.sigma,
                                            cfg.n, cfg.ages, rng));
        break;
      case ModelId::M3:
        ctx.data3.push_back(simulate_model3(cfg.tau_b, cfg.tau_r, cfg.beta0,
                                            cfg.beta1, cfg.sigma, cfg.n, cfg.J, rng));
        break;
    }
  }

  const int n_priors = static_cast<int>(ctx.selected.size());
  const int n_cells = cfg.n_datasets * n_priors;
  std::vector<CellStats> cells(n_cells);

  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= n_cells) return;
      const int d = k / n_priors;
      const int p = ctx.selected[k % n_priors];
      cells[k] = run_cell(ctx, d, p);
    }
  };
  const int n_threads = std::min(harness_threads(), n_cells);
  std::vector<std::thread> pool;
  for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  // Deterministic ordered reduction by (parameter, prior, dataset).
  StudyResult result;
  result.config = cfg;
  const int n_params = cfg.model == ModelId::M3 ? 2 : 1;
  for (int param = 0; param < n_params; ++param) {
    const double truth = cfg.model == ModelId::M3
                             ? (param == 0 ? cfg.tau_b : cfg.tau_r)
                             : cfg.tau;
    for (int pi = 0; pi < n_priors; ++pi) {
      const int prior_index = ctx.selected[pi];
      const auto& spec = ctx.priors_main[prior_index - 1];

      std::vector<double> ess_vals, rhat_vals;
      std::vector<DatasetMetrics> metric_rows;
      long max_dt = 0, n_zero = 0, n_failed = 0;
      double sum_dt = 0.0;
      for (int d = 0; d < cfg.n_datasets; ++d) {
        const auto& cell = cells[d * n_priors + pi];
        if (param == 0) {
          sum_dt += static_cast<double>(cell.n_divergent);
          max_dt = std::max(max_dt, cell.n_divergent);
          if (cell.n_divergent == 0) ++n_zero;
        }
        if (cell.failed) {
          ++n_failed;
          continue;
        }
        ess_vals.push_back(cell.ess[param]);
        rhat_vals.push_back(cell.rhat[param]);
        metric_rows.push_back(cell.metrics[param]);
      }

      DiagnosticTableRow diag;
      diag.label = spec.label;
      diag.true_value = truth;
      if (!ess_vals.empty()) {
        diag.min_ess = *std::min_element(ess_vals.begin(), ess_vals.end());
        diag.med_ess = median_of(ess_vals);
        double sum_rhat = 0.0;
        for (double r : rhat_vals) sum_rhat += r;
        diag.mean_rhat = sum_rhat / static_cast<double>(rhat_vals.size());
        diag.max_rhat = *std::max_element(rhat_vals.begin(), rhat_vals.end());
      }
      diag.mean_div = sum_dt / static_cast<double>(cfg.n_datasets);
      diag.pct_zero_dt = 100.0 * static_cast<double>(n_zero) / cfg.n_datasets;
      diag.max_dt = max_dt;
      result.diagnostic_rows.push_back(diag);

      if (!metric_rows.empty()) {
        result.estimate_rows.push_back(aggregate(metric_rows, spec.label, truth));
      } else {
        SummaryRow empty;
        empty.label = spec.label;
        empty.true_value = truth;
        result.estimate_rows.push_back(empty);
      }
      result.failures.push_back(n_failed);

      const auto& row = result.estimate_rows.back();
      double lo = 0.0, hi = 0.0;
      if (!metric_rows.empty()) {
        for (const auto& m : metric_rows) {
          lo += m.q025;
          hi += m.q975;
        }
        lo /= static_cast<double>(metric_rows.size());
        hi /= static_cast<double>(metric_rows.size());
      }
      FigureRow fig;
      fig.label = spec.label;
      fig.family = spec.family == PriorFamily::IG_ON_VARIANCE ? "IG" : "HT";
      fig.nu = spec.nu;
      fig.s_regime = s_regime_of(prior_index);
      fig.true_value = truth;
      fig.mean = row.mean;
      fig.lo = lo;
      fig.hi = hi;
      result.figure_rows.push_back(fig);
    }
  }
  return result;
}

std::string diagnostics_csv_header() {
  return "label,true_value,min_ess,med_ess,mean_rhat,max_rhat,mean_div,pct_zero_dt,max_dt\n";
}

std::string diagnostics_csv_line(const DiagnosticTableRow& r) {
  return r.label + "," + format_double(r.true_value) + "," + format_double(r.min_ess) +
         "," + format_double(r.med_ess) + "," + format_double(r.mean_rhat) + "," +
         format_double(r.max_rhat) + "," + format_double(r.mean_div) + "," +
         format_double(r.pct_zero_dt) + "," + std::to_string(r.max_dt) + "\n";
}

std::string StudyConfig::to_json() const {
  nlohmann::json j;
  j["model"] = static_cast<int>(model);
  if (model == ModelId::M3) {
    j["tau_b"] = tau_b;
    j["tau_r"] = tau_r;
  } else {
    j["tau"] = tau;
  }
  j["beta0"] = beta0;
  j["beta1"] = beta1;
  j["sigma"] = sigma;
  j["n"] = n;
  j["J"] = J;
  if (model == ModelId::M1) j["sigma_vec"] = sigma_vec;
  if (model == ModelId::M2) j["ages"] = ages;
  j["n_datasets"] = n_datasets;
  j["sampler"] = {{"chains", sampler.chains},
                  {"warmup", sampler.warmup},
                  {"draws", sampler.draws},
                  {"target_accept", sampler.target_accept},
                  {"max_treedepth", sampler.max_treedepth}};
  j["c"] = c;
  j["base_seed"] = base_seed;
  j["priors"] = prior_subset;
  return j.dump(2);
}

StudyConfig StudyConfig::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  StudyConfig cfg;
  const int model = j.at("model").get<int>();
  if (model < 1 || model > 3) throw std::invalid_argument("config: model must be 1, 2 or 3");
  cfg.model = static_cast<ModelId>(model);
  if (cfg.model == ModelId::M3) {
    cfg.tau_b = j.value("tau_b", cfg.tau_b);
    cfg.tau_r = j.value("tau_r", cfg.tau_r);
  } else {
    cfg.tau = j.at("tau").get<double>();
  }
  cfg.beta0 = j.value("beta0", cfg.beta0);
  cfg.beta1 = j.value("beta1", cfg.beta1);
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.n = j.value("n", 0);
  cfg.J = j.value("J", 0);
  if (j.contains("sigma_vec")) cfg.sigma_vec = j["sigma_vec"].get<std::vector<double>>();
  if (j.contains("ages")) cfg.ages = j["ages"].get<std::vector<double>>();
  cfg.n_datasets = j.value("n_datasets", 100);
  if (j.contains("sampler")) {
    const auto& s = j["sampler"];
    cfg.sampler.chains = s.value("chains", cfg.sampler.chains);
    cfg.sampler.warmup = s.value("warmup", cfg.sampler.warmup);
    cfg.sampler.draws = s.value("draws", cfg.sampler.draws);
    cfg.sampler.target_accept = s.value("target_accept", cfg.sampler.target_accept);
    cfg.sampler.max_treedepth = s.value("max_treedepth", cfg.sampler.max_treedepth);
  }
  cfg.c = j.value("c", 1.5);
  cfg.base_seed = j.value("base_seed", std::uint64_t{0});
  if (j.contains("priors")) cfg.prior_subset = j["priors"].get<std::vector<int>>();
  cfg.validate();
  return cfg;
}

void write_study_outputs(const StudyResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto& cfg = result.config;
  const std::string model_tag = "model" + std::to_string(static_cast<int>(cfg.model));
  const std::string tau_tag =
      format_double(cfg.model == ModelId::M3 ? cfg.tau_b : cfg.tau);
  const std::string stem = model_tag + "_" + tau_tag;

  std::string diag = diagnostics_csv_header();
  for (const auto& row : result.diagnostic_rows) diag += diagnostics_csv_line(row);
  write_file_atomic((fs::path(out_dir) / ("diagnostics_" + stem + ".csv")).string(), diag);

  std::string est = summary_csv_header();
  for (const auto& row : result.estimate_rows) est += summary_csv_line(row);
  write_file_atomic((fs::path(out_dir) / ("estimates_" + stem + ".csv")).string(), est);

  std::string fig = "label,family,nu,s_regime,true_value,mean,lo,hi\n";
  for (const auto& row : result.figure_rows)
    fig += row.label + "," + row.family + "," + format_double(row.nu) + "," +
           row.s_regime + "," + format_double(row.true_value) + "," +
           format_double(row.mean) + "," + format_double(row.lo) + "," +
           format_double(row.hi) + "\n";
  write_file_atomic((fs::path(out_dir) / "figure_data.csv").string(), fig);

  std::string fails = "label,true_value,n_failed\n";
  for (size_t i = 0; i < result.estimate_rows.size(); ++i)
    fails += result.estimate_rows[i].label + "," +
             format_double(result.estimate_rows[i].true_value) + "," +
             std::to_string(result.failures[i]) + "\n";
  write_file_atomic((fs::path(out_dir) / "failures.csv").string(), fails);

  nlohmann::json prov;
  prov["command"] = "run-study";
  prov["config"] = nlohmann::json::parse(cfg.to_json());
  prov["version"] = "hiertau 0.1.0";
  write_file_atomic((fs::path(out_dir) / "provenance.json").string(), prov.dump(2) + "\n");
}

}  // namespace hiertau
