#include <cstdlib>
#include <set>

#include "doctest.h"
#include "hiertau/harness.hpp"
#include "hiertau/io.hpp"

using namespace hiertau;

namespace {

StudyConfig tiny_config() {
  StudyConfig cfg;
  cfg.model = ModelId::M1;
  cfg.tau = 0.4;
  cfg.n_datasets = 2;
  cfg.base_seed = 7;
  cfg.sampler.chains = 2;
  cfg.sampler.warmup = 100;
  cfg.sampler.draws = 150;
  cfg.sampler.target_accept = 0.9;
  cfg.prior_subset = {7, 8};
  return cfg;
}

std::string result_fingerprint(const StudyResult& r) {
  std::string s = diagnostics_csv_header();
  for (const auto& row : r.diagnostic_rows) s += diagnostics_csv_line(row);
  s += summary_csv_header();
  for (const auto& row : r.estimate_rows) s += summary_csv_line(row);
  return s;
}

}  // namespace

TEST_CASE("derive_seed is collision free over the study grid") {
  std::set<std::uint64_t> seen;
  for (int d = 0; d <= 100; ++d)
    for (int p = 0; p <= 14; ++p)
      for (int c = 0; c <= 4; ++c)
        seen.insert(derive_seed(12345, d, p, c));
  CHECK(seen.size() == 101u * 15u * 5u);

  CHECK(derive_seed(1, 2, 3, 4) == derive_seed(1, 2, 3, 4));
  CHECK(derive_seed(1, 2, 3, 4) != derive_seed(1, 2, 3, 5));
  CHECK(derive_seed(1, 2, 3, 4) != derive_seed(2, 2, 3, 4));
}

TEST_CASE("run_study cardinality and identities") {
  StudyConfig cfg = tiny_config();
  cfg.n_datasets = 1;
  cfg.prior_subset = {7};
  const auto result = run_study(cfg);
  CHECK(result.diagnostic_rows.size() == 1);
  CHECK(result.estimate_rows.size() == 1);
  CHECK(result.figure_rows.size() == 1);
  CHECK(result.failures.size() == 1);
  CHECK(result.estimate_rows[0].label == "7.IG(2, 2 tau^2)");
  CHECK(result.estimate_rows[0].bias ==
        doctest::Approx(result.estimate_rows[0].mean - 0.4).epsilon(1e-10));
  CHECK(result.config.sigma_vec.size() == 8);  // defaults resolved
}

TEST_CASE("run_study is deterministic and schedule independent") {
  const StudyConfig cfg = tiny_config();

  setenv("HIERTAU_THREADS", "1", 1);
  const auto serial = result_fingerprint(run_study(cfg));
  setenv("HIERTAU_THREADS", "4", 1);
  const auto parallel = result_fingerprint(run_study(cfg));
  unsetenv("HIERTAU_THREADS");
  const auto redo = result_fingerprint(run_study(cfg));

  CHECK(serial == parallel);
  CHECK(serial == redo);
}

TEST_CASE("cells are independent of which other priors run") {
  StudyConfig cfg = tiny_config();
  cfg.prior_subset = {7};
  const auto only7 = run_study(cfg);
  cfg.prior_subset = {7, 8};
  const auto both = run_study(cfg);

  CHECK(summary_csv_line(only7.estimate_rows[0]) ==
        summary_csv_line(both.estimate_rows[0]));
  CHECK(diagnostics_csv_line(only7.diagnostic_rows[0]) ==
        diagnostics_csv_line(both.diagnostic_rows[0]));
}

TEST_CASE("model 3 studies report both scales") {
  StudyConfig cfg;
  cfg.model = ModelId::M3;
  cfg.tau_b = 0.16;
  cfg.tau_r = 0.7;
  cfg.n = 30;  // small grid keeps the unit test quick
  cfg.J = 4;
  cfg.n_datasets = 1;
  cfg.base_seed = 3;
  cfg.sampler.chains = 2;
  cfg.sampler.warmup = 100;
  cfg.sampler.draws = 150;
  cfg.sampler.target_accept = 0.9;
  cfg.prior_subset = {7};
  const auto result = run_study(cfg);
  REQUIRE(result.diagnostic_rows.size() == 2);
  REQUIRE(result.estimate_rows.size() == 2);
  CHECK(result.diagnostic_rows[0].true_value == doctest::Approx(0.16));
  CHECK(result.diagnostic_rows[1].true_value == doctest::Approx(0.7));
  CHECK(result.figure_rows[0].s_regime == "true");
}

TEST_CASE("study config json round trip and validation") {
  StudyConfig cfg = tiny_config();
  const auto text = cfg.to_json();
  const auto back = StudyConfig::from_json(text);
  CHECK(back.model == cfg.model);
  CHECK(back.tau == doctest::Approx(cfg.tau));
  CHECK(back.n_datasets == cfg.n_datasets);
  CHECK(back.prior_subset == cfg.prior_subset);
  CHECK(back.sampler.draws == cfg.sampler.draws);

  CHECK_THROWS(StudyConfig::from_json("{"));
  CHECK_THROWS(StudyConfig::from_json("{\"model\":9,\"tau\":1}"));
  StudyConfig bad = cfg;
  bad.prior_subset = {15};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("s_regime classification follows the catalog blocks") {
  StudyConfig cfg = tiny_config();
  cfg.n_datasets = 1;
  cfg.prior_subset = {1, 5, 11, 14};
  const auto result = run_study(cfg);
  CHECK(result.figure_rows[0].s_regime == "literature");
  CHECK(result.figure_rows[1].s_regime == "true");
  CHECK(result.figure_rows[2].s_regime == "over");
  CHECK(result.figure_rows[3].s_regime == "under");
}
