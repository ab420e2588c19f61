#pragma once

#include "hiertau/rng.hpp"

namespace hiertau {

// Log gamma function, Lanczos approximation (g = 7, 9 terms).
// Relative error below 1e-13 for x > 0.
double log_gamma(double x);

// log N(x | mu, sigma^2). Throws std::domain_error if sigma <= 0.
double normal_logpdf(double x, double mu, double sigma);

// log IG(v | a, b) with kernel v^-(a+1) exp(-b/v).
// Throws std::domain_error unless v, a, b > 0.
double invgamma_logpdf(double v, double a, double b);

// log half-t(t | nu, s), the density 2 t_nu(t/s)/s on t >= 0.
// Throws std::domain_error unless t >= 0, nu > 0, s > 0.
double halft_logpdf(double t, double nu, double s);

// Exact partial derivatives of the densities above with respect to
// their first argument. Same domain requirements.
double normal_dlogpdf_dx(double x, double mu, double sigma);
double invgamma_dlogpdf_dv(double v, double a, double b);
double halft_dlogpdf_dt(double t, double nu, double s);

double normal_sample(Rng& rng, double mu, double sigma);

// Gamma(shape, rate = 1) draw. Marsaglia-Tsang squeeze for shape >= 1,
// boosted by a uniform power for shape < 1.
double gamma_sample(Rng& rng, double shape);

// Distributed as b / Gamma(a, 1).
double invgamma_sample(Rng& rng, double a, double b);

}  // namespace hiertau
