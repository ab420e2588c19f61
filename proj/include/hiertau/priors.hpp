#pragma once

#include <string>
#include <vector>

namespace hiertau {

enum class PriorFamily { IG_ON_VARIANCE, HT_ON_SD };

// A prior on the random-effect scale, parameterized by degrees of
// freedom nu and scale s for both families. An IG(a, b) law on tau^2
// carries nu = 2a, s = sqrt(b/a); the half-t(nu, s) law on tau with the
// same (nu, s) is its counterpart.
struct PriorSpec {
  PriorFamily family;
  double nu;
  double s;
  std::string label;

  double ig_a() const { return 0.5 * nu; }
  double ig_b() const { return 0.5 * nu * s * s; }
};

PriorSpec make_ig(double a, double b);
PriorSpec make_ht(double nu, double s);

// Counterpart family with identical (nu, s). Involution.
PriorSpec ig_ht_pair(const PriorSpec& spec);

// The 14 catalog entries, in order:
//   1 IG(1,1)            2 IG(0.001,0.001)   3 HT(1, 1.2 tau)  4 HT(4, 1)
//   5 IG(0.5, tau^2/2)   6 HT(1, tau)        7 IG(2, 2 tau^2)  8 HT(4, tau)
//   9 IG(5, 5 tau^2)    10 HT(10, tau)      11 IG(2, 2(c tau)^2)
//  12 HT(4, c tau)      13 IG(2, 2(tau/c)^2) 14 HT(4, tau/c)
std::vector<PriorSpec> catalog(double tau_true, double c = 1.5);

// Log prior density of tau (the SD) under this spec. For HT_ON_SD this
// is halft_logpdf; for IG_ON_VARIANCE it is the density on tau induced
// by the IG law on tau^2, invgamma_logpdf(tau^2) + log(2 tau).
double log_prior_tau(const PriorSpec& spec, double tau);

// d/dtau of log_prior_tau.
double dlog_prior_dtau(const PriorSpec& spec, double tau);

// JSON object {"family", "nu", "s", "label"}.
std::string prior_to_json(const PriorSpec& spec);
PriorSpec prior_from_json(const std::string& text);

}  // namespace hiertau
