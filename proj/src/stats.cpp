#include "hiertau/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace hiertau {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
constexpr double kLogPi = 1.1447298858494001741434273513531;

// Lanczos coefficients, g = 7.
constexpr double kLanczos[9] = {
    0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
    771.32342877765313,      -176.61502916214059,   12.507343278686905,
    -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("log_gamma: x must be positive");
  if (x < 0.5) {
    // Reflection keeps the series argument away from zero.
    return kLogPi - std::log(std::sin(kPi * x)) - log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double acc = kLanczos[0];
  for (int i = 1; i < 9; ++i) acc += kLanczos[i] / (z + i);
  const double t = z + 7.5;
  return 0.5 * kLogTwoPi + (z + 0.5) * std::log(t) - t + std::log(acc);
}

double normal_logpdf(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("normal_logpdf: sigma must be positive");
  const double z = (x - mu) / sigma;
  return -0.5 * kLogTwoPi - std::log(sigma) - 0.5 * z * z;
}

double invgamma_logpdf(double v, double a, double b) {
  if (!(v > 0.0) || !(a > 0.0) || !(b > 0.0))
    throw std::domain_error("invgamma_logpdf: v, a, b must be positive");
  return a * std::log(b) - log_gamma(a) - (a + 1.0) * std::log(v) - b / v;
}

double halft_logpdf(double t, double nu, double s) {
  if (!(t >= 0.0) || !(nu > 0.0) || !(s > 0.0))
    throw std::domain_error("halft_logpdf: need t >= 0, nu > 0, s > 0");
  const double z = t / s;
  return std::log(2.0) + log_gamma(0.5 * (nu + 1.0)) - log_gamma(0.5 * nu) -
         0.5 * std::log(nu) - 0.5 * kLogPi - std::log(s) -
         0.5 * (nu + 1.0) * std::log1p(z * z / nu);
}

double normal_dlogpdf_dx(double x, double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("normal_dlogpdf_dx: sigma must be positive");
  return -(x - mu) / (sigma * sigma);
}

double invgamma_dlogpdf_dv(double v, double a, double b) {
  if (!(v > 0.0) || !(a > 0.0) || !(b > 0.0))
    throw std::domain_error("invgamma_dlogpdf_dv: v, a, b must be positive");
  return -(a + 1.0) / v + b / (v * v);
}

double halft_dlogpdf_dt(double t, double nu, double s) {
  if (!(t >= 0.0) || !(nu > 0.0) || !(s > 0.0))
    throw std::domain_error("halft_dlogpdf_dt: need t >= 0, nu > 0, s > 0");
  return -(nu + 1.0) * t / (nu * s * s + t * t);
}

double normal_sample(Rng& rng, double mu, double sigma) {
  if (!(sigma > 0.0)) throw std::domain_error("normal_sample: sigma must be positive");
  // Marsaglia polar method, second deviate discarded so the stream
  // position depends only on the number of calls and rejections.
  for (;;) {
    const double u = 2.0 * rng.uniform() - 1.0;
    const double v = 2.0 * rng.uniform() - 1.0;
    const double r2 = u * u + v * v;
    if (r2 >= 1.0 || r2 == 0.0) continue;
    return mu + sigma * u * std::sqrt(-2.0 * std::log(r2) / r2);
  }
}

double gamma_sample(Rng& rng, double shape) {
  if (!(shape > 0.0)) throw std::domain_error("gamma_sample: shape must be positive");
  if (shape < 1.0) {
    const double g = gamma_sample(rng, shape + 1.0);
    const double u = rng.uniform();
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal_sample(rng, 0.0, 1.0);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double invgamma_sample(Rng& rng, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0))
    throw std::domain_error("invgamma_sample: a, b must be positive");
  return b / gamma_sample(rng, a);
}

}  // namespace hiertau
