#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hiertau/priors.hpp"
#include "hiertau/rng.hpp"

namespace hiertau {

enum class ModelId { M1 = 1, M2 = 2, M3 = 3 };

// Eight-schools style data: per-school estimated effects with known
// within-school SDs. theta_true is kept for debugging only and is never
// read by any inference path.
struct Model1Data {
  std::vector<double> ybar;
  std::vector<double> sigma;
  std::vector<double> theta_true;
  double tau_true = 0.0;
  std::uint64_t seed = 0;

  int J() const { return static_cast<int>(ybar.size()); }
  void validate() const;
};

// Longitudinal random-intercepts data. y is n x J row-major; all
// subjects share the centered age vector x (length J).
struct Model2Data {
  std::vector<double> y;
  std::vector<double> x;
  int n = 0;
  int J = 0;
  double tau_true = 0.0, beta0_true = 0.0, beta1_true = 0.0, sigma_true = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// Multiple-outcomes data. y is n x J row-major; x (length n) is the
// per-subject covariate, standardized to mean 0 and SD 1.
struct Model3Data {
  std::vector<double> y;
  std::vector<double> x;
  int n = 0;
  int J = 0;
  double tau_b_true = 0.0, tau_r_true = 0.0;
  double beta0_true = 0.0, beta1_true = 0.0, sigma_true = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

// The canonical eight-schools standard errors.
std::vector<double> eight_schools_sigma();

// Default centered ages for Model 2.
std::vector<double> default_ages();

Model1Data simulate_model1(double tau, std::vector<double> sigma, Rng& rng);
Model2Data simulate_model2(double tau, double beta0, double beta1, double sigma,
                           int n, std::vector<double> ages, Rng& rng);
Model3Data simulate_model3(double tau_b, double tau_r, double beta0, double beta1,
                           double sigma, int n, int J, Rng& rng);

// A bound (model, data, prior): unnormalized log posterior with exact
// gradient on the unconstrained scale. Scale parameters are sampled as
// logs with their Jacobians included; constrain() maps a point back to
// the constrained scale used for reporting.
class TargetDensity {
 public:
  virtual ~TargetDensity() = default;

  int dim() const { return dim_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<int>& tau_indices() const { return tau_indices_; }

  // Returns the log density; writes the gradient into grad (size dim).
  virtual double logp_grad(std::span<const double> q, std::span<double> grad) const = 0;

  virtual void constrain(std::span<const double> q, std::span<double> out) const = 0;
  virtual void unconstrain(std::span<const double> c, std::span<double> out) const = 0;

 protected:
  int dim_ = 0;
  std::vector<std::string> names_;
  std::vector<int> tau_indices_;
};

std::unique_ptr<TargetDensity> bind_model1(const Model1Data& data, const PriorSpec& prior);
std::unique_ptr<TargetDensity> bind_model2(const Model2Data& data, const PriorSpec& prior);
std::unique_ptr<TargetDensity> bind_model3(const Model3Data& data,
                                           const PriorSpec& prior_b,
                                           const PriorSpec& prior_r);

// Catalog entry applied to both random-effect scales.
inline std::unique_ptr<TargetDensity> bind_model3(const Model3Data& data,
                                                  const PriorSpec& prior) {
  return bind_model3(data, prior, prior);
}

// Long-format CSV (dataset_id,i,j,y,x) and a JSON metadata record
// (model, true parameters, seed).
std::string dataset_to_csv(const Model1Data& d, int dataset_id);
std::string dataset_to_csv(const Model2Data& d, int dataset_id);
std::string dataset_to_csv(const Model3Data& d, int dataset_id);
std::string dataset_metadata_json(const Model1Data& d);
std::string dataset_metadata_json(const Model2Data& d);
std::string dataset_metadata_json(const Model3Data& d);

}  // namespace hiertau
