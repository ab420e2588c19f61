#include "hiertau/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hiertau/diagnostics.hpp"
#include "hiertau/harness.hpp"
#include "hiertau/io.hpp"
#include "hiertau/metrics.hpp"
#include "hiertau/models.hpp"
#include "hiertau/oracle.hpp"
#include "hiertau/priors.hpp"
#include "hiertau/sampler.hpp"
#include "json.hpp"

namespace hiertau {

namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "hiertau 0.1.0";

bool is_ig_entry(int idx) {
  return idx == 1 || idx == 2 || idx == 5 || idx == 7 || idx == 9 || idx == 11 ||
         idx == 13;
}

void write_provenance(const std::string& out_dir, const std::string& command,
                      const nlohmann::json& args) {
  nlohmann::json prov;
  prov["command"] = command;
  prov["config"] = args;
  prov["version"] = kVersion;
  write_file_atomic((fs::path(out_dir) / "provenance.json").string(),
                    prov.dump(2) + "\n");
}

int cmd_run_study(const std::string& config_path, bool have_model, int model,
                  double tau, double tau_b, double tau_r, int n, int n_datasets,
                  std::uint64_t seed, const SamplerConfig& sampler,
                  const std::vector<int>& priors, const std::string& out_dir) {
  StudyConfig cfg;
  if (!config_path.empty()) {
    if (have_model)
      throw CLI::ValidationError("run-study", "--config excludes --model and friends");
    cfg = StudyConfig::from_json(read_file(config_path));
  } else {
    if (!have_model)
      throw CLI::ValidationError("run-study", "either --config or --model is required");
    cfg.model = static_cast<ModelId>(model);
    cfg.tau = tau;
    cfg.tau_b = tau_b;
    cfg.tau_r = tau_r;
    cfg.n = n;
    cfg.n_datasets = n_datasets;
    cfg.base_seed = seed;
    cfg.sampler = sampler;
    cfg.prior_subset = priors;
    cfg.validate();
  }
  const auto result = run_study(cfg);
  write_study_outputs(result, out_dir);
  std::cout << "wrote study outputs to " << out_dir << "\n";
  return 0;
}

int cmd_gibbs_check(double tau, int prior_idx, int n_datasets, std::uint64_t seed,
                    const std::string& out_dir) {
  if (!is_ig_entry(prior_idx))
    throw CLI::ValidationError(
        "gibbs-check", "--prior must name an IG catalog entry (1,2,5,7,9,11,13)");
  const auto specs = catalog(tau);
  const auto& spec = specs[prior_idx - 1];
  const double a = spec.ig_a(), b = spec.ig_b();

  SamplerConfig scfg;  // paper defaults
  std::string csv =
      "dataset,nuts_mean,gibbs_mean,nuts_mcse,gibbs_mcse,abs_diff,threshold,agree\n";
  int n_agree = 0;
  for (int d = 0; d < n_datasets; ++d) {
    Rng data_rng(derive_seed(seed, static_cast<std::uint64_t>(d + 1), 0, 0));
    const auto data = simulate_model1(tau, eight_schools_sigma(), data_rng);

    const auto target = bind_model1(data, spec);
    scfg.seed = derive_seed(seed, static_cast<std::uint64_t>(d + 1),
                            static_cast<std::uint64_t>(prior_idx), 0);
    const auto outputs = run_chains(*target, scfg);
    const int tau_idx = target->tau_indices()[0];
    std::vector<std::vector<double>> nuts_chains;
    for (const auto& o : outputs) {
      std::vector<double> col(scfg.draws);
      for (int it = 0; it < scfg.draws; ++it)
        col[it] = o.draws[static_cast<size_t>(it) * o.dim + tau_idx];
      nuts_chains.push_back(std::move(col));
    }
    double nuts_mean = 0.0;
    for (const auto& c : nuts_chains)
      for (double v : c) nuts_mean += v;
    nuts_mean /= static_cast<double>(scfg.chains) * scfg.draws;
    const double nuts_mcse = mcse_mean(nuts_chains);

    Rng gibbs_rng(derive_seed(seed, static_cast<std::uint64_t>(d + 1),
                              static_cast<std::uint64_t>(prior_idx), 1));
    const auto gibbs = gibbs_model1(data, a, b, 11000, 1000, gibbs_rng);
    const auto gtau = gibbs.tau();
    double gibbs_mean = 0.0;
    for (double v : gtau) gibbs_mean += v;
    gibbs_mean /= static_cast<double>(gtau.size());
    const double gibbs_mcse = mcse_mean({gtau});

    const double diff = std::abs(nuts_mean - gibbs_mean);
    const double threshold =
        3.0 * std::sqrt(nuts_mcse * nuts_mcse + gibbs_mcse * gibbs_mcse);
    const bool agree = diff < threshold;
    n_agree += agree ? 1 : 0;
    csv += std::to_string(d + 1) + "," + format_double(nuts_mean) + "," +
           format_double(gibbs_mean) + "," + format_double(nuts_mcse) + "," +
           format_double(gibbs_mcse) + "," + format_double(diff) + "," +
           format_double(threshold) + "," + (agree ? "1" : "0") + "\n";
  }

  fs::create_directories(out_dir);
  write_file_atomic((fs::path(out_dir) / "gibbs_vs_nuts.csv").string(), csv);
  write_provenance(out_dir, "gibbs-check",
                   {{"tau", tau},
                    {"prior", prior_idx},
                    {"n_datasets", n_datasets},
                    {"seed", seed}});
  std::cout << n_agree << "/" << n_datasets << " datasets agree within 3x MCSE\n";
  return 0;
}

int cmd_reml_check(double tau, int n, int n_datasets, std::uint64_t seed,
                   const std::string& out_dir) {
  std::string fits_csv = "dataset,tau_hat,sigma_hat\n";
  std::vector<double> tau_hats;
  int n_zero = 0;
  for (int d = 0; d < n_datasets; ++d) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(d + 1), 0, 0));
    const auto data = simulate_model2(tau, 0.0, 0.2, 1.0, n, default_ages(), rng);
    const auto fit = reml_model2(data);
    tau_hats.push_back(fit.tau_hat);
    if (fit.tau_hat == 0.0) ++n_zero;
    fits_csv += std::to_string(d + 1) + "," + format_double(fit.tau_hat) + "," +
                format_double(fit.sigma_hat) + "\n";
  }
  std::vector<double> sorted = tau_hats;
  std::sort(sorted.begin(), sorted.end());
  double mean = 0.0;
  for (double v : tau_hats) mean += v;
  mean /= static_cast<double>(tau_hats.size());

  std::string summary = "condition,mean,rel_bias,q025,q975,pct_zero\n";
  summary += "n = " + std::to_string(n) + " tau = " + format_double(tau) + "," +
             format_double(mean) + "," + format_double((mean - tau) / tau) + "," +
             format_double(quantile_sorted(sorted, 0.025)) + "," +
             format_double(quantile_sorted(sorted, 0.975)) + "," +
             format_double(static_cast<double>(n_zero) / n_datasets) + "\n";

  fs::create_directories(out_dir);
  write_file_atomic((fs::path(out_dir) / "reml_fits.csv").string(), fits_csv);
  write_file_atomic((fs::path(out_dir) / "reml_summary.csv").string(), summary);
  write_provenance(out_dir, "reml-check",
                   {{"tau", tau}, {"n", n}, {"n_datasets", n_datasets}, {"seed", seed}});
  std::cout << "pct_zero = " << static_cast<double>(n_zero) / n_datasets << "\n";
  return 0;
}

int cmd_grad_check(int model, int prior_idx, int points, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 1, 0, 0));
  std::unique_ptr<TargetDensity> target;
  switch (model) {
    case 1: {
      const auto specs = catalog(0.4);
      const auto data = simulate_model1(0.4, eight_schools_sigma(), rng);
      target = bind_model1(data, specs[prior_idx - 1]);
      break;
    }
    case 2: {
      const auto specs = catalog(1.0);
      const auto data = simulate_model2(1.0, 0.0, 0.2, 1.0, 10, default_ages(), rng);
      target = bind_model2(data, specs[prior_idx - 1]);
      break;
    }
    case 3: {
      const auto data = simulate_model3(0.16, 0.7, 0.0, 0.2, 1.0, 700, 7, rng);
      target = bind_model3(data, catalog(0.16)[prior_idx - 1],
                           catalog(0.7)[prior_idx - 1]);
      break;
    }
    default:
      throw CLI::ValidationError("grad-check", "--model must be 1, 2 or 3");
  }

  Rng point_rng = rng.split(1);
  double worst = 0.0;
  std::vector<double> q(target->dim());
  for (int p = 0; p < points; ++p) {
    for (auto& v : q) v = 4.0 * point_rng.uniform() - 2.0;
    worst = std::max(worst, grad_check(*target, q, 1e-5));
  }
  std::cout << "max relative gradient error: " << format_double(worst) << "\n";
  return worst < 1e-5 ? 0 : 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Prior sensitivity toolkit for hierarchical random-effects models"};
  app.require_subcommand(1);

  // run-study
  auto* study = app.add_subcommand("run-study", "Run a simulation study grid");
  std::string config_path, out_dir;
  int model = 0, n = 0, n_datasets = 100;
  double tau = 0.4, tau_b = 0.04, tau_r = 0.7;
  std::uint64_t seed = 0;
  SamplerConfig sampler;
  std::vector<int> priors;
  study->add_option("--config", config_path, "Study config JSON file");
  auto* model_opt = study->add_option("--model", model, "Model number (1, 2 or 3)")
                        ->check(CLI::Range(1, 3));
  study->add_option("--tau", tau, "True random-effect SD (models 1-2)");
  study->add_option("--tau-b", tau_b, "True slope-deviation SD (model 3)");
  study->add_option("--tau-r", tau_r, "True subject-effect SD (model 3)");
  study->add_option("--n", n, "Subjects per dataset (models 2-3)");
  study->add_option("--n-datasets", n_datasets, "Simulated datasets per cell");
  study->add_option("--seed", seed, "Base seed");
  study->add_option("--chains", sampler.chains, "MCMC chains");
  study->add_option("--warmup", sampler.warmup, "Warmup iterations per chain");
  study->add_option("--draws", sampler.draws, "Post-warmup draws per chain");
  study->add_option("--adapt-delta", sampler.target_accept, "Target acceptance");
  study->add_option("--max-treedepth", sampler.max_treedepth, "Max tree depth");
  study->add_option("--priors", priors, "Catalog indices to fit, e.g. 7,8")
      ->delimiter(',');
  study->add_option("--out", out_dir, "Output directory")->required();

  // gibbs-check
  auto* gibbs = app.add_subcommand("gibbs-check",
                                   "Cross-validate NUTS against conjugate Gibbs");
  double g_tau = 2.0;
  int g_prior = 7, g_datasets = 20;
  std::uint64_t g_seed = 0;
  std::string g_out;
  gibbs->add_option("--tau", g_tau, "True tau")->required();
  gibbs->add_option("--prior", g_prior, "IG catalog index")->required();
  gibbs->add_option("--n-datasets", g_datasets, "Shared datasets");
  gibbs->add_option("--seed", g_seed, "Base seed");
  gibbs->add_option("--out", g_out, "Output directory")->required();

  // reml-check
  auto* reml = app.add_subcommand("reml-check", "REML estimates for Model 2");
  double r_tau = 0.1;
  int r_n = 10, r_datasets = 100;
  std::uint64_t r_seed = 0;
  std::string r_out;
  reml->add_option("--tau", r_tau, "True tau")->required();
  reml->add_option("--n", r_n, "Subjects per dataset")->required();
  reml->add_option("--n-datasets", r_datasets, "Simulated datasets");
  reml->add_option("--seed", r_seed, "Base seed");
  reml->add_option("--out", r_out, "Output directory")->required();

  // grad-check
  auto* grad = app.add_subcommand("grad-check",
                                  "Analytic vs finite-difference gradients");
  int gc_model = 1, gc_prior = 7, gc_points = 20;
  std::uint64_t gc_seed = 0;
  grad->add_option("--model", gc_model, "Model number")->required()->check(CLI::Range(1, 3));
  grad->add_option("--prior", gc_prior, "Catalog index")->check(CLI::Range(1, 14));
  grad->add_option("--points", gc_points, "Random evaluation points");
  grad->add_option("--seed", gc_seed, "Base seed");

  try {
    app.parse(argc, argv);
    if (study->parsed())
      return cmd_run_study(config_path, model_opt->count() > 0, model, tau, tau_b,
                           tau_r, n, n_datasets, seed, sampler, priors, out_dir);
    if (gibbs->parsed())
      return cmd_gibbs_check(g_tau, g_prior, g_datasets, g_seed, g_out);
    if (reml->parsed()) return cmd_reml_check(r_tau, r_n, r_datasets, r_seed, r_out);
    if (grad->parsed()) return cmd_grad_check(gc_model, gc_prior, gc_points, gc_seed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace hiertau
