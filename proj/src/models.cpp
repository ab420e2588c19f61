#include "hiertau/models.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "hiertau/io.hpp"
#include "hiertau/stats.hpp"
#include "json.hpp"

namespace hiertau {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

// Nuisance priors shared by Models 2 and 3: beta ~ N(0, 100 sigma^2 I),
// sigma^2 ~ IG(0.05, 0.01).
constexpr double kBetaScaleSq = 100.0;
constexpr double kSigma2A = 0.05;
constexpr double kSigma2B = 0.01;

double vec_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

void Model1Data::validate() const {
  if (ybar.empty()) throw std::domain_error("Model1Data: empty data");
  if (ybar.size() != sigma.size())
    throw std::domain_error("Model1Data: ybar/sigma length mismatch");
  for (double s : sigma)
    if (!(s > 0.0)) throw std::domain_error("Model1Data: sigma must be positive");
}

void Model2Data::validate() const {
  if (n < 2 || J < 1) throw std::domain_error("Model2Data: need n >= 2, J >= 1");
  if (static_cast<int>(y.size()) != n * J || static_cast<int>(x.size()) != J)
    throw std::domain_error("Model2Data: dimension mismatch");
  const double scale = 1.0;
  if (std::abs(vec_mean(x)) > 1e-9 * scale)
    throw std::domain_error("Model2Data: ages must be centered");
}

void Model3Data::validate() const {
  if (n < 2 || J < 2) throw std::domain_error("Model3Data: need n >= 2, J >= 2");
  if (static_cast<int>(y.size()) != n * J || static_cast<int>(x.size()) != n)
    throw std::domain_error("Model3Data: dimension mismatch");
  double m = vec_mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (std::abs(m) > 1e-9 || std::abs(sd - 1.0) > 1e-9)
    throw std::domain_error("Model3Data: x must be standardized");
}

std::vector<double> eight_schools_sigma() {
  return {15.0, 10.0, 16.0, 11.0, 9.0, 11.0, 10.0, 18.0};
}

std::vector<double> default_ages() { return {-1.5, -0.5, 0.5, 1.5}; }

Model1Data simulate_model1(double tau, std::vector<double> sigma, Rng& rng) {
  if (sigma.empty()) throw std::domain_error("simulate_model1: empty sigma");
  if (!(tau > 0.0)) throw std::domain_error("simulate_model1: tau must be positive");
  for (double s : sigma)
    if (!(s > 0.0)) throw std::domain_error("simulate_model1: sigma must be positive");
  Model1Data d;
  d.sigma = std::move(sigma);
  d.tau_true = tau;
  d.seed = rng.seed();
  const int J = static_cast<int>(d.sigma.size());
  d.theta_true.resize(J);
  d.ybar.resize(J);
  for (int j = 0; j < J; ++j) {
    d.theta_true[j] = normal_sample(rng, 0.0, tau);
    d.ybar[j] = normal_sample(rng, d.theta_true[j], d.sigma[j]);
  }
  return d;
}

Model2Data simulate_model2(double tau, double beta0, double beta1, double sigma,
                           int n, std::vector<double> ages, Rng& rng) {
  if (n < 2) throw std::domain_error("simulate_model2: need n >= 2");
  if (!(tau > 0.0) || !(sigma > 0.0))
    throw std::domain_error("simulate_model2: tau, sigma must be positive");
  if (ages.empty()) throw std::domain_error("simulate_model2: empty ages");
  if (std::abs(vec_mean(ages)) > 1e-9)
    throw std::domain_error("simulate_model2: ages must be centered");
  Model2Data d;
  d.n = n;
  d.J = static_cast<int>(ages.size());
  d.x = std::move(ages);
  d.tau_true = tau;
  d.beta0_true = beta0;
  d.beta1_true = beta1;
  d.sigma_true = sigma;
  d.seed = rng.seed();
  d.y.resize(static_cast<size_t>(n) * d.J);
  for (int i = 0; i < n; ++i) {
    const double alpha = normal_sample(rng, 0.0, tau);
    for (int j = 0; j < d.J; ++j)
      d.y[static_cast<size_t>(i) * d.J + j] =
          beta0 + beta1 * d.x[j] + alpha + normal_sample(rng, 0.0, sigma);
  }
  return d;
}

Model3Data simulate_model3(double tau_b, double tau_r, double beta0, double beta1,
                           double sigma, int n, int J, Rng& rng) {
  if (n < 2 || J < 2) throw std::domain_error("simulate_model3: need n >= 2, J >= 2");
  if (!(tau_b > 0.0) || !(tau_r > 0.0) || !(sigma > 0.0))
    throw std::domain_error("simulate_model3: scales must be positive");
  Model3Data d;
  d.n = n;
  d.J = J;
  d.tau_b_true = tau_b;
  d.tau_r_true = tau_r;
  d.beta0_true = beta0;
  d.beta1_true = beta1;
  d.sigma_true = sigma;
  d.seed = rng.seed();
  d.x.resize(n);
  for (int i = 0; i < n; ++i) d.x[i] = normal_sample(rng, 0.0, 1.0);
  // Standardize exactly: mean 0, population SD 1.
  const double m = vec_mean(d.x);
  double ss = 0.0;
  for (double v : d.x) ss += (v - m) * (v - m);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) throw std::domain_error("simulate_model3: degenerate covariate");
  for (double& v : d.x) v = (v - m) / sd;

  std::vector<double> b(J), r(n);
  for (int j = 0; j < J; ++j) b[j] = normal_sample(rng, 0.0, tau_b);
  for (int i = 0; i < n; ++i) r[i] = normal_sample(rng, 0.0, tau_r);
  d.y.resize(static_cast<size_t>(n) * J);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < J; ++j)
      d.y[static_cast<size_t>(i) * J + j] =
          beta0 + (beta1 + b[j]) * d.x[i] + r[i] + normal_sample(rng, 0.0, sigma);
  return d;
}

// ---------------------------------------------------------------------------
// Targets

namespace {

// Unconstrained layout: (theta_1..theta_J, xi) with tau = exp(xi).
class Model1Target final : public TargetDensity {
 public:
  Model1Target(const Model1Data& data, PriorSpec prior)
      : data_(data), prior_(std::move(prior)) {
    data_.validate();
    const int J = data_.J();
    dim_ = J + 1;
    for (int j = 0; j < J; ++j) names_.push_back("theta[" + std::to_string(j + 1) + "]");
    names_.push_back("tau");
    tau_indices_ = {J};
  }

  double logp_grad(std::span<const double> q, std::span<double> grad) const override {
    const int J = data_.J();
    const double xi = q[J];
    const double tau = std::exp(xi);
    if (!std::isfinite(tau) || tau <= 0.0) return fail(grad);

    double lp = 0.0;
    double sum_theta2 = 0.0;
    const double inv_tau2 = 1.0 / (tau * tau);
    for (int j = 0; j < J; ++j) {
      const double th = q[j];
      const double sj = data_.sigma[j];
      const double resid = data_.ybar[j] - th;
      lp += -0.5 * kLogTwoPi - std::log(sj) - 0.5 * resid * resid / (sj * sj);
      lp += -0.5 * kLogTwoPi - xi - 0.5 * th * th * inv_tau2;
      grad[j] = resid / (sj * sj) - th * inv_tau2;
      sum_theta2 += th * th;
    }
    lp += log_prior_tau(prior_, tau) + xi;
    grad[J] = -static_cast<double>(J) + sum_theta2 * inv_tau2 +
              tau * dlog_prior_dtau(prior_, tau) + 1.0;
    if (!std::isfinite(lp)) return fail(grad);
    return lp;
  }

  void constrain(std::span<const double> q, std::span<double> out) const override {
    const int J = data_.J();
    for (int j = 0; j < J; ++j) out[j] = q[j];
    out[J] = std::exp(q[J]);
  }

  void unconstrain(std::span<const double> c, std::span<double> out) const override {
    const int J = data_.J();
    for (int j = 0; j < J; ++j) out[j] = c[j];
    out[J] = std::log(c[J]);
  }

 private:
  static double fail(std::span<double> grad) {
    for (auto& g : grad) g = 0.0;
    return -std::numeric_limits<double>::infinity();
  }

  Model1Data data_;
  PriorSpec prior_;
};

// Unconstrained layout: (beta0, beta1, alpha_1..alpha_n, xi, eta) with
// tau = exp(xi), sigma^2 = exp(eta).
class Model2Target final : public TargetDensity {
 public:
  Model2Target(const Model2Data& data, PriorSpec prior)
      : data_(data), prior_(std::move(prior)) {
    data_.validate();
    const int n = data_.n, J = data_.J;
    dim_ = n + 4;
    names_.push_back("beta0");
    names_.push_back("beta1");
    for (int i = 0; i < n; ++i) names_.push_back("alpha[" + std::to_string(i + 1) + "]");
    names_.push_back("tau");
    names_.push_back("sigma2");
    tau_indices_ = {n + 2};

    // Sufficient statistics for the Gaussian likelihood.
    sy_ = sxy_ = syy_ = sx_ = sxx_ = 0.0;
    yi_.assign(n, 0.0);
    for (int j = 0; j < J; ++j) {
      sx_ += data_.x[j];
      sxx_ += data_.x[j] * data_.x[j];
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < J; ++j) {
        const double y = data_.y[static_cast<size_t>(i) * J + j];
        sy_ += y;
        syy_ += y * y;
        sxy_ += data_.x[j] * y;
        yi_[i] += y;
      }
  }

  double logp_grad(std::span<const double> q, std::span<double> grad) const override {
    const int n = data_.n, J = data_.J;
    const double b0 = q[0], b1 = q[1];
    const double xi = q[n + 2], eta = q[n + 3];
    const double tau = std::exp(xi);
    const double s2 = std::exp(eta);
    if (!std::isfinite(tau) || !std::isfinite(s2) || tau <= 0.0 || s2 <= 0.0)
      return fail(grad);

    const double inv_s2 = 1.0 / s2;
    const double inv_tau2 = 1.0 / (tau * tau);
    const double row_mean_sum = J * b0 + b1 * sx_;  // sum_j (b0 + b1 x_j)

    double sum_alpha = 0.0, sum_alpha2 = 0.0, dot_alpha_y = 0.0;
    for (int i = 0; i < n; ++i) {
      const double a = q[2 + i];
      sum_alpha += a;
      sum_alpha2 += a * a;
      dot_alpha_y += a * yi_[i];
    }

    const double ssr =
        syy_ - 2.0 * (b0 * sy_ + b1 * sxy_ + dot_alpha_y) +
        n * (J * b0 * b0 + 2.0 * b0 * b1 * sx_ + b1 * b1 * sxx_) +
        2.0 * sum_alpha * row_mean_sum + J * sum_alpha2;

    double lp = -0.5 * n * J * (kLogTwoPi + eta) - 0.5 * ssr * inv_s2;
    // alpha_i ~ N(0, tau^2)
    lp += -0.5 * n * kLogTwoPi - n * xi - 0.5 * sum_alpha2 * inv_tau2;
    // beta ~ N(0, 100 sigma^2 I)
    const double beta_ss = b0 * b0 + b1 * b1;
    lp += -kLogTwoPi - std::log(kBetaScaleSq) - eta -
          0.5 * beta_ss / (kBetaScaleSq * s2);
    lp += invgamma_logpdf(s2, kSigma2A, kSigma2B) + eta;
    lp += log_prior_tau(prior_, tau) + xi;
    if (!std::isfinite(lp)) return fail(grad);

    grad[0] = (sy_ - n * (J * b0 + b1 * sx_) - J * sum_alpha) * inv_s2 -
              b0 / (kBetaScaleSq * s2);
    grad[1] = (sxy_ - n * (b0 * sx_ + b1 * sxx_) - sx_ * sum_alpha) * inv_s2 -
              b1 / (kBetaScaleSq * s2);
    for (int i = 0; i < n; ++i) {
      const double a = q[2 + i];
      grad[2 + i] = (yi_[i] - row_mean_sum - J * a) * inv_s2 - a * inv_tau2;
    }
    grad[n + 2] = -static_cast<double>(n) + sum_alpha2 * inv_tau2 +
                  tau * dlog_prior_dtau(prior_, tau) + 1.0;
    grad[n + 3] = -0.5 * n * J + 0.5 * ssr * inv_s2 - 1.0 +
                  0.5 * beta_ss / (kBetaScaleSq * s2) +
                  s2 * invgamma_dlogpdf_dv(s2, kSigma2A, kSigma2B) + 1.0;
    return lp;
  }

  void constrain(std::span<const double> q, std::span<double> out) const override {
    const int n = data_.n;
    for (int k = 0; k < n + 2; ++k) out[k] = q[k];
    out[n + 2] = std::exp(q[n + 2]);
    out[n + 3] = std::exp(q[n + 3]);
  }

  void unconstrain(std::span<const double> c, std::span<double> out) const override {
    const int n = data_.n;
    for (int k = 0; k < n + 2; ++k) out[k] = c[k];
    out[n + 2] = std::log(c[n + 2]);
    out[n + 3] = std::log(c[n + 3]);
  }

 private:
  static double fail(std::span<double> grad) {
    for (auto& g : grad) g = 0.0;
    return -std::numeric_limits<double>::infinity();
  }

  Model2Data data_;
  PriorSpec prior_;
  double sy_, sxy_, syy_, sx_, sxx_;
  std::vector<double> yi_;
};

// Unconstrained layout: (beta0, beta1, b_1..b_J, r_1..r_n, xi_b, xi_r, eta).
class Model3Target final : public TargetDensity {
 public:
  Model3Target(const Model3Data& data, PriorSpec prior_b, PriorSpec prior_r)
      : data_(data), prior_b_(std::move(prior_b)), prior_r_(std::move(prior_r)) {
    data_.validate();
    const int n = data_.n, J = data_.J;
    dim_ = n + J + 5;
    names_.push_back("beta0");
    names_.push_back("beta1");
    for (int j = 0; j < J; ++j) names_.push_back("b[" + std::to_string(j + 1) + "]");
    for (int i = 0; i < n; ++i) names_.push_back("r[" + std::to_string(i + 1) + "]");
    names_.push_back("tau_b");
    names_.push_back("tau_r");
    names_.push_back("sigma2");
    tau_indices_ = {2 + J + n, 2 + J + n + 1};

    sy_ = syy_ = sx_ = sxx_ = 0.0;
    aj_.assign(J, 0.0);
    yi_.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
      sx_ += data_.x[i];
      sxx_ += data_.x[i] * data_.x[i];
      for (int j = 0; j < J; ++j) {
        const double y = data_.y[static_cast<size_t>(i) * J + j];
        sy_ += y;
        syy_ += y * y;
        aj_[j] += data_.x[i] * y;
        yi_[i] += y;
      }
    }
    sa_ = 0.0;
    for (double a : aj_) sa_ += a;
  }

  double logp_grad(std::span<const double> q, std::span<double> grad) const override {
    const int n = data_.n, J = data_.J;
    const double b0 = q[0], b1 = q[1];
    const double* slope = q.data() + 2;      // b_j
    const double* subj = q.data() + 2 + J;   // r_i
    const double xi_b = q[2 + J + n], xi_r = q[2 + J + n + 1], eta = q[2 + J + n + 2];
    const double tau_b = std::exp(xi_b);
    const double tau_r = std::exp(xi_r);
    const double s2 = std::exp(eta);
    if (!std::isfinite(tau_b) || !std::isfinite(tau_r) || !std::isfinite(s2) ||
        tau_b <= 0.0 || tau_r <= 0.0 || s2 <= 0.0)
      return fail(grad);

    const double inv_s2 = 1.0 / s2;
    const double inv_tb2 = 1.0 / (tau_b * tau_b);
    const double inv_tr2 = 1.0 / (tau_r * tau_r);

    double sb = 0.0, sb2 = 0.0, dot_ba = 0.0;
    for (int j = 0; j < J; ++j) {
      const double g = b1 + slope[j];
      sb += g;
      sb2 += g * g;
      dot_ba += g * aj_[j];
      // reuse below for priors
    }
    double sum_b2 = 0.0;
    for (int j = 0; j < J; ++j) sum_b2 += slope[j] * slope[j];

    double sr = 0.0, sum_r2 = 0.0, dot_ry = 0.0, sxr = 0.0;
    for (int i = 0; i < n; ++i) {
      const double r = subj[i];
      sr += r;
      sum_r2 += r * r;
      dot_ry += r * yi_[i];
      sxr += data_.x[i] * r;
    }

    const double ssr = syy_ - 2.0 * (b0 * sy_ + dot_ba + dot_ry) +
                       n * J * b0 * b0 + sb2 * sxx_ + J * sum_r2 +
                       2.0 * b0 * sb * sx_ + 2.0 * J * b0 * sr + 2.0 * sb * sxr;

    double lp = -0.5 * n * J * (kLogTwoPi + eta) - 0.5 * ssr * inv_s2;
    lp += -0.5 * J * kLogTwoPi - J * xi_b - 0.5 * sum_b2 * inv_tb2;
    lp += -0.5 * n * kLogTwoPi - n * xi_r - 0.5 * sum_r2 * inv_tr2;
    const double beta_ss = b0 * b0 + b1 * b1;
    lp += -kLogTwoPi - std::log(kBetaScaleSq) - eta -
          0.5 * beta_ss / (kBetaScaleSq * s2);
    lp += invgamma_logpdf(s2, kSigma2A, kSigma2B) + eta;
    lp += log_prior_tau(prior_b_, tau_b) + xi_b;
    lp += log_prior_tau(prior_r_, tau_r) + xi_r;
    if (!std::isfinite(lp)) return fail(grad);

    grad[0] = (sy_ - n * J * b0 - sb * sx_ - J * sr) * inv_s2 -
              b0 / (kBetaScaleSq * s2);
    grad[1] = (sa_ - sb * sxx_ - b0 * J * sx_ - J * sxr) * inv_s2 -
              b1 / (kBetaScaleSq * s2);
    for (int j = 0; j < J; ++j) {
      const double g = b1 + slope[j];
      grad[2 + j] = (aj_[j] - g * sxx_ - b0 * sx_ - sxr) * inv_s2 -
                    slope[j] * inv_tb2;
    }
    for (int i = 0; i < n; ++i) {
      const double r = subj[i];
      grad[2 + J + i] = (yi_[i] - J * b0 - sb * data_.x[i] - J * r) * inv_s2 -
                        r * inv_tr2;
    }
    grad[2 + J + n] = -static_cast<double>(J) + sum_b2 * inv_tb2 +
                      tau_b * dlog_prior_dtau(prior_b_, tau_b) + 1.0;
    grad[2 + J + n + 1] = -static_cast<double>(n) + sum_r2 * inv_tr2 +
                          tau_r * dlog_prior_dtau(prior_r_, tau_r) + 1.0;
    grad[2 + J + n + 2] = -0.5 * n * J + 0.5 * ssr * inv_s2 - 1.0 +
                          0.5 * beta_ss / (kBetaScaleSq * s2) +
                          s2 * invgamma_dlogpdf_dv(s2, kSigma2A, kSigma2B) + 1.0;
    return lp;
  }

  void constrain(std::span<const double> q, std::span<double> out) const override {
    const int m = dim_;
    for (int k = 0; k < m - 3; ++k) out[k] = q[k];
    out[m - 3] = std::exp(q[m - 3]);
    out[m - 2] = std::exp(q[m - 2]);
    out[m - 1] = std::exp(q[m - 1]);
  }

  void unconstrain(std::span<const double> c, std::span<double> out) const override {
    const int m = dim_;
    for (int k = 0; k < m - 3; ++k) out[k] = c[k];
    out[m - 3] = std::log(c[m - 3]);
    out[m - 2] = std::log(c[m - 2]);
    out[m - 1] = std::log(c[m - 1]);
  }

 private:
  static double fail(std::span<double> grad) {
    for (auto& g : grad) g = 0.0;
    return -std::numeric_limits<double>::infinity();
  }

  Model3Data data_;
  PriorSpec prior_b_, prior_r_;
  double sy_, syy_, sx_, sxx_, sa_;
  std::vector<double> aj_;  // sum_i x_i y_ij
  std::vector<double> yi_;  // sum_j y_ij
};

}  // namespace

std::unique_ptr<TargetDensity> bind_model1(const Model1Data& data, const PriorSpec& prior) {
  return std::make_unique<Model1Target>(data, prior);
}

std::unique_ptr<TargetDensity> bind_model2(const Model2Data& data, const PriorSpec& prior) {
  return std::make_unique<Model2Target>(data, prior);
}

std::unique_ptr<TargetDensity> bind_model3(const Model3Data& data,
                                           const PriorSpec& prior_b,
                                           const PriorSpec& prior_r) {
  return std::make_unique<Model3Target>(data, prior_b, prior_r);
}

// ---------------------------------------------------------------------------
// Serialization

std::string dataset_to_csv(const Model1Data& d, int dataset_id) {
  std::string out = "dataset_id,i,j,y,x\n";
  for (int j = 0; j < d.J(); ++j) {
    out += std::to_string(dataset_id) + "," + std::to_string(j + 1) + ",1," +
           format_double(d.ybar[j]) + "," + format_double(d.sigma[j]) + "\n";
  }
  return out;
}

std::string dataset_to_csv(const Model2Data& d, int dataset_id) {
  std::string out = "dataset_id,i,j,y,x\n";
  for (int i = 0; i < d.n; ++i)
    for (int j = 0; j < d.J; ++j)
      out += std::to_string(dataset_id) + "," + std::to_string(i + 1) + "," +
             std::to_string(j + 1) + "," +
             format_double(d.y[static_cast<size_t>(i) * d.J + j]) + "," +
             format_double(d.x[j]) + "\n";
  return out;
}

std::string dataset_to_csv(const Model3Data& d, int dataset_id) {
  std::string out = "dataset_id,i,j,y,x\n";
  for (int i = 0; i < d.n; ++i)
    for (int j = 0; j < d.J; ++j)
      out += std::to_string(dataset_id) + "," + std::to_string(i + 1) + "," +
             std::to_string(j + 1) + "," +
             format_double(d.y[static_cast<size_t>(i) * d.J + j]) + "," +
             format_double(d.x[i]) + "\n";
  return out;
}

std::string dataset_metadata_json(const Model1Data& d) {
  nlohmann::json j;
  j["model"] = 1;
  j["tau"] = d.tau_true;
  j["sigma"] = d.sigma;
  j["seed"] = d.seed;
  return j.dump();
}

std::string dataset_metadata_json(const Model2Data& d) {
  nlohmann::json j;
  j["model"] = 2;
  j["tau"] = d.tau_true;
  j["beta0"] = d.beta0_true;
  j["beta1"] = d.beta1_true;
  j["sigma"] = d.sigma_true;
  j["n"] = d.n;
  j["ages"] = d.x;
  j["seed"] = d.seed;
  return j.dump();
}

std::string dataset_metadata_json(const Model3Data& d) {
  nlohmann::json j;
  j["model"] = 3;
  j["tau_b"] = d.tau_b_true;
  j["tau_r"] = d.tau_r_true;
  j["beta0"] = d.beta0_true;
  j["beta1"] = d.beta1_true;
  j["sigma"] = d.sigma_true;
  j["n"] = d.n;
  j["J"] = d.J;
  j["seed"] = d.seed;
  return j.dump();
}

}  // namespace hiertau
