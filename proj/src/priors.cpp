#include "hiertau/priors.hpp"

#include <cmath>
#include <stdexcept>

#include "hiertau/io.hpp"
#include "hiertau/stats.hpp"
#include "json.hpp"

namespace hiertau {

PriorSpec make_ig(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("make_ig: a, b must be positive");
  const double nu = 2.0 * a;
  const double s = std::sqrt(b / a);
  return PriorSpec{PriorFamily::IG_ON_VARIANCE, nu, s,
                   "IG(" + format_double(a) + ", " + format_double(b) + ")"};
}

PriorSpec make_ht(double nu, double s) {
  if (!(nu > 0.0) || !(s > 0.0))
    throw std::domain_error("make_ht: nu, s must be positive");
  return PriorSpec{PriorFamily::HT_ON_SD, nu, s,
                   "HT(" + format_double(nu) + ", " + format_double(s) + ")"};
}

PriorSpec ig_ht_pair(const PriorSpec& spec) {
  if (spec.family == PriorFamily::IG_ON_VARIANCE) {
    PriorSpec out = make_ht(spec.nu, spec.s);
    return out;
  }
  return make_ig(spec.ig_a(), spec.ig_b());
}

std::vector<PriorSpec> catalog(double tau_true, double c) {
  if (!(tau_true > 0.0)) throw std::domain_error("catalog: tau_true must be positive");
  if (!(c > 1.0)) throw std::domain_error("catalog: c must exceed 1");
  const double t = tau_true;
  std::vector<PriorSpec> out;
  out.reserve(14);
  out.push_back(make_ig(1.0, 1.0));
  out.push_back(make_ig(0.001, 0.001));
  out.push_back(make_ht(1.0, 1.2 * t));
  out.push_back(make_ht(4.0, 1.0));
  out.push_back(make_ig(0.5, t * t / 2.0));
  out.push_back(make_ht(1.0, t));
  out.push_back(make_ig(2.0, 2.0 * t * t));
  out.push_back(make_ht(4.0, t));
  out.push_back(make_ig(5.0, 5.0 * t * t));
  out.push_back(make_ht(10.0, t));
  out.push_back(make_ig(2.0, 2.0 * (c * t) * (c * t)));
  out.push_back(make_ht(4.0, c * t));
  out.push_back(make_ig(2.0, 2.0 * (t / c) * (t / c)));
  out.push_back(make_ht(4.0, t / c));

  // Table-join keys: the symbolic names, stable across tau and c.
  static const char* kLabels[14] = {
      "1.IG(1, 1)",          "2.IG(0.001, 0.001)", "3.HT(1, 1.2 tau)",
      "4.HT(4, 1)",          "5.IG(0.5, tau^2/2)", "6.HT(1, tau)",
      "7.IG(2, 2 tau^2)",    "8.HT(4, tau)",       "9.IG(5, 5 tau^2)",
      "10.HT(10, tau)",      "11.IG(2, 2 (c tau)^2)", "12.HT(4, c tau)",
      "13.IG(2, 2 (tau/c)^2)", "14.HT(4, tau/c)"};
  for (int i = 0; i < 14; ++i) out[i].label = kLabels[i];
  return out;
}

double log_prior_tau(const PriorSpec& spec, double tau) {
  // The half-t density is defined at the fold point tau = 0; the
  // IG-induced density needs tau > 0.
  if (spec.family == PriorFamily::HT_ON_SD) {
    if (!(tau >= 0.0)) throw std::domain_error("log_prior_tau: tau must be nonnegative");
    return halft_logpdf(tau, spec.nu, spec.s);
  }
  if (!(tau > 0.0)) throw std::domain_error("log_prior_tau: tau must be positive");
  // Change of variables v = tau^2.
  return invgamma_logpdf(tau * tau, spec.ig_a(), spec.ig_b()) + std::log(2.0 * tau);
}

double dlog_prior_dtau(const PriorSpec& spec, double tau) {
  if (spec.family == PriorFamily::HT_ON_SD) {
    if (!(tau >= 0.0))
      throw std::domain_error("dlog_prior_dtau: tau must be nonnegative");
    return halft_dlogpdf_dt(tau, spec.nu, spec.s);
  }
  if (!(tau > 0.0)) throw std::domain_error("dlog_prior_dtau: tau must be positive");
  return 2.0 * tau * invgamma_dlogpdf_dv(tau * tau, spec.ig_a(), spec.ig_b()) +
         1.0 / tau;
}

std::string prior_to_json(const PriorSpec& spec) {
  nlohmann::json j;
  j["family"] = spec.family == PriorFamily::IG_ON_VARIANCE ? "IG_ON_VARIANCE"
                                                           : "HT_ON_SD";
  j["nu"] = spec.nu;
  j["s"] = spec.s;
  j["label"] = spec.label;
  return j.dump();
}

PriorSpec prior_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const std::string fam = j.at("family").get<std::string>();
  PriorFamily family;
  if (fam == "IG_ON_VARIANCE")
    family = PriorFamily::IG_ON_VARIANCE;
  else if (fam == "HT_ON_SD")
    family = PriorFamily::HT_ON_SD;
  else
    throw std::invalid_argument("prior_from_json: unknown family " + fam);
  PriorSpec spec{family, j.at("nu").get<double>(), j.at("s").get<double>(),
                 j.at("label").get<std::string>()};
  if (!(spec.nu > 0.0) || !(spec.s > 0.0))
    throw std::domain_error("prior_from_json: nu, s must be positive");
  return spec;
}

}  // namespace hiertau
