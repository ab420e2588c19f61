#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "hiertau/cli.hpp"
#include "hiertau/io.hpp"
#include "json.hpp"

using namespace hiertau;
namespace fs = std::filesystem;

namespace {

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("hiertau");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("run-study writes identical bytes on identical flags") {
  const auto d1 = fresh_dir("hiertau_cli_a");
  const auto d2 = fresh_dir("hiertau_cli_b");
  const std::vector<std::string> base{
      "run-study", "--model", "1",     "--tau",  "0.4",  "--n-datasets", "2",
      "--seed",    "7",       "--priors", "7,8", "--warmup", "100",
      "--draws",   "150",     "--chains", "2",   "--adapt-delta", "0.9"};
  auto args1 = base;
  args1.push_back("--out");
  args1.push_back(d1.string());
  auto args2 = base;
  args2.push_back("--out");
  args2.push_back(d2.string());

  CHECK(run_cli(args1) == 0);
  CHECK(run_cli(args2) == 0);

  for (const auto* name :
       {"diagnostics_model1_0.4.csv", "estimates_model1_0.4.csv", "figure_data.csv",
        "failures.csv", "provenance.json"}) {
    CAPTURE(name);
    REQUIRE(fs::exists(d1 / name));
    CHECK(read_file((d1 / name).string()) == read_file((d2 / name).string()));
  }

  const auto est = read_file((d1 / "estimates_model1_0.4.csv").string());
  CHECK(est.rfind("label,true_value,mean,", 0) == 0);
  CHECK(est.find("7.IG(2, 2 tau^2)") != std::string::npos);
  CHECK(est.find("8.HT(4, tau)") != std::string::npos);
  CHECK(est.find("1.IG(1, 1)") == std::string::npos);  // --priors restricts
}

TEST_CASE("omitted sampler flags resolve to the paper defaults") {
  const auto dir = fresh_dir("hiertau_cli_defaults");
  CHECK(run_cli({"run-study", "--model", "1", "--tau", "2", "--n-datasets", "1",
                 "--priors", "9", "--seed", "1", "--out", dir.string()}) == 0);
  const auto prov = nlohmann::json::parse(read_file((dir / "provenance.json").string()));
  CHECK(prov["config"]["sampler"]["chains"] == 4);
  CHECK(prov["config"]["sampler"]["warmup"] == 250);
  CHECK(prov["config"]["sampler"]["draws"] == 2500);
  CHECK(prov["config"]["sampler"]["target_accept"] == 0.99);
}

TEST_CASE("config file and flags are mutually exclusive") {
  const auto dir = fresh_dir("hiertau_cli_conf");
  const fs::path cfg_path = dir / "study.json";
  write_file_atomic(cfg_path.string(),
                    "{\"model\":1,\"tau\":0.4,\"n_datasets\":1,"
                    "\"priors\":[7],\"base_seed\":5,"
                    "\"sampler\":{\"chains\":2,\"warmup\":60,\"draws\":120,"
                    "\"target_accept\":0.9}}");
  CHECK(run_cli({"run-study", "--config", cfg_path.string(), "--out",
                 (dir / "out").string()}) == 0);
  CHECK(fs::exists(dir / "out" / "estimates_model1_0.4.csv"));

  CHECK(run_cli({"run-study", "--config", cfg_path.string(), "--model", "1", "--out",
                 (dir / "out2").string()}) != 0);
  CHECK(run_cli({"run-study", "--config", (dir / "missing.json").string(), "--out",
                 (dir / "out3").string()}) != 0);
}

TEST_CASE("gibbs-check validates the prior family") {
  const auto dir = fresh_dir("hiertau_cli_gibbs");
  CHECK(run_cli({"gibbs-check", "--tau", "2", "--prior", "3", "--n-datasets", "2",
                 "--out", dir.string()}) != 0);
  CHECK(!fs::exists(dir / "gibbs_vs_nuts.csv"));
}

TEST_CASE("reml-check emits summary and fits") {
  const auto dir = fresh_dir("hiertau_cli_reml");
  CHECK(run_cli({"reml-check", "--tau", "1", "--n", "10", "--n-datasets", "25",
                 "--seed", "2", "--out", dir.string()}) == 0);
  const auto summary = read_file((dir / "reml_summary.csv").string());
  CHECK(summary.rfind("condition,mean,rel_bias,q025,q975,pct_zero\n", 0) == 0);
  CHECK(fs::exists(dir / "reml_fits.csv"));
  CHECK(fs::exists(dir / "provenance.json"));
}

TEST_CASE("grad-check exits zero within tolerance") {
  CHECK(run_cli({"grad-check", "--model", "1", "--prior", "8", "--points", "5",
                 "--seed", "3"}) == 0);
  CHECK(run_cli({"grad-check", "--model", "2", "--prior", "2", "--points", "3",
                 "--seed", "4"}) == 0);
}

TEST_CASE("unknown flags fail with nonzero exit") {
  CHECK(run_cli({"run-study", "--bogus", "1"}) != 0);
  CHECK(run_cli({"no-such-command"}) != 0);
}

TEST_CASE("no partial csv appears on failure") {
  // Unwritable output directory: the study runs but the write fails.
  const std::string out = "/proc/hiertau_forbidden";
  CHECK(run_cli({"run-study", "--model", "1", "--tau", "0.4", "--n-datasets", "1",
                 "--priors", "7", "--warmup", "60", "--draws", "120", "--chains", "1",
                 "--adapt-delta", "0.9", "--out", out}) != 0);
  CHECK(!fs::exists(fs::path(out) / "estimates_model1_0.4.csv"));
}
