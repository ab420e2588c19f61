#include "hiertau/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "hiertau/io.hpp"

namespace hiertau {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMaxEnergyError = 1000.0;  // divergence threshold

double log_add_exp(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double dot_im(std::span<const double> a, std::span<const double> b,
              std::span<const double> im) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += im[i] * a[i] * b[i];
  return s;
}

double kinetic(std::span<const double> p, std::span<const double> im) {
  double k = 0.0;
  for (size_t i = 0; i < p.size(); ++i) k += im[i] * p[i] * p[i];
  return 0.5 * k;
}

struct State {
  std::vector<double> q, p, grad;
  double logp = 0.0;
};

// Local standard normal, Marsaglia polar with the second deviate
// discarded; identical stream layout to stats normal_sample.
double normal_sample_unit(Rng& rng) {
  for (;;) {
    const double u = 2.0 * rng.uniform() - 1.0;
    const double v = 2.0 * rng.uniform() - 1.0;
    const double r2 = u * u + v * v;
    if (r2 >= 1.0 || r2 == 0.0) continue;
    return u * std::sqrt(-2.0 * std::log(r2) / r2);
  }
}

void draw_momentum(State& z, std::span<const double> im, Rng& rng) {
  for (size_t i = 0; i < z.p.size(); ++i)
    z.p[i] = normal_sample_unit(rng) / std::sqrt(im[i]);
}

struct TreeBuf {
  std::vector<double> q_prop, rho, p_beg, p_end;
  double log_sum_w = -kInf;
  double prop_energy = 0.0;

  void resize(int dim) {
    q_prop.resize(dim);
    rho.resize(dim);
    p_beg.resize(dim);
    p_end.resize(dim);
  }
};

struct Workspace {
  std::vector<TreeBuf> right;  // one spare subtree per recursion depth
  explicit Workspace(int max_depth, int dim) : right(max_depth) {
    for (auto& b : right) b.resize(dim);
  }
};

// Generalized u-turn test over a trajectory segment with momentum sum
// rho + extra and edge momenta p_a, p_b; the sum is never materialized.
bool no_uturn_ext(std::span<const double> rho, std::span<const double> extra,
                  std::span<const double> p_a, std::span<const double> p_b,
                  std::span<const double> im) {
  const double da = dot_im(rho, p_a, im) + dot_im(extra, p_a, im);
  const double db = dot_im(rho, p_b, im) + dot_im(extra, p_b, im);
  return da > 0.0 && db > 0.0;
}

struct TreeStats {
  double sum_metro = 0.0;
  long n_leapfrog = 0;
  bool divergent = false;
};

// Builds 2^depth new states by evolving z in place with step dir_eps.
// Returns false when the subtree is invalid (divergence or internal
// u-turn); out is only meaningful on success.
bool build_tree(const TargetDensity& target, State& z, int depth, double dir_eps,
                double h0, std::span<const double> im, Workspace& ws,
                TreeBuf& out, TreeStats& stats, Rng& rng) {
  if (depth == 0) {
    const bool ok = leapfrog(target, z.q, z.p, z.grad, z.logp, dir_eps, im);
    const double h = ok ? -z.logp + kinetic(z.p, im) : kInf;
    ++stats.n_leapfrog;
    if (std::isfinite(h)) stats.sum_metro += std::min(1.0, std::exp(h0 - h));
    if (!ok || !std::isfinite(h) || h - h0 > kMaxEnergyError) {
      stats.divergent = true;
      return false;
    }
    out.log_sum_w = h0 - h;
    out.prop_energy = h;
    std::copy(z.q.begin(), z.q.end(), out.q_prop.begin());
    std::copy(z.p.begin(), z.p.end(), out.rho.begin());
    std::copy(z.p.begin(), z.p.end(), out.p_beg.begin());
    std::copy(z.p.begin(), z.p.end(), out.p_end.begin());
    return true;
  }

  if (!build_tree(target, z, depth - 1, dir_eps, h0, im, ws, out, stats, rng))
    return false;
  TreeBuf& right = ws.right[depth - 1];
  if (!build_tree(target, z, depth - 1, dir_eps, h0, im, ws, right, stats, rng))
    return false;

  // U-turn checks across the merged subtree and both half boundaries.
  bool ok = no_uturn_ext(out.rho, right.rho, out.p_beg, right.p_end, im);
#ifndef HIERTAU_NO_CROSS_CHECKS
  ok = ok && no_uturn_ext(out.rho, right.p_beg, out.p_beg, right.p_beg, im);
  ok = ok && no_uturn_ext(right.rho, out.p_end, out.p_end, right.p_end, im);
#endif

  const double lw = log_add_exp(out.log_sum_w, right.log_sum_w);
  if (rng.uniform() < std::exp(right.log_sum_w - lw)) {
    std::copy(right.q_prop.begin(), right.q_prop.end(), out.q_prop.begin());
    out.prop_energy = right.prop_energy;
  }
  out.log_sum_w = lw;
  for (size_t i = 0; i < out.rho.size(); ++i) out.rho[i] += right.rho[i];
  std::copy(right.p_end.begin(), right.p_end.end(), out.p_end.begin());
  return ok;
}

double find_initial_stepsize(const TargetDensity& target, const State& z0,
                             std::span<const double> im, Rng& rng) {
  State trial = z0;
  draw_momentum(trial, im, rng);
  const State start = trial;
  const double h0 = -start.logp + kinetic(start.p, im);

  double eps = 1.0;
  const double log_half = std::log(0.5);
  auto log_ratio_at = [&](double e) {
    trial = start;
    const bool ok = leapfrog(target, trial.q, trial.p, trial.grad, trial.logp, e, im);
    const double h = ok ? -trial.logp + kinetic(trial.p, im) : kInf;
    return std::isfinite(h) ? h0 - h : -kInf;
  };

  double lr = log_ratio_at(eps);
  const int dir = lr > log_half ? 1 : -1;
  for (int it = 0; it < 200; ++it) {
    if (dir == 1 && !(lr > log_half)) break;
    if (dir == -1 && !(lr < log_half)) break;
    eps *= dir == 1 ? 2.0 : 0.5;
    if (eps > 1e10 || eps < 1e-10) break;
    lr = log_ratio_at(eps);
  }
  return std::clamp(eps, 1e-10, 1e10);
}

struct WarmupWindow {
  int start, end;
};

// Step-size-only buffers at both ends, doubling covariance windows in
// between; the last window absorbs any remainder that could not hold a
// full doubling.
std::vector<WarmupWindow> warmup_windows(int warmup, int& init_buffer,
                                         int& term_buffer) {
  init_buffer = static_cast<int>(0.15 * warmup);
  term_buffer = static_cast<int>(0.10 * warmup);
  const int region_end = warmup - term_buffer;
  std::vector<WarmupWindow> windows;
  int start = init_buffer;
  int size = 25;
  while (start + size <= region_end) {
    int end = start + size;
    if (region_end - end < 2 * size) end = region_end;
    windows.push_back({start, end});
    start = end;
    size *= 2;
  }
  return windows;
}

}  // namespace

void SamplerConfig::validate() const {
  if (chains < 1) throw std::invalid_argument("SamplerConfig: chains >= 1");
  if (warmup < 1) throw std::invalid_argument("SamplerConfig: warmup >= 1");
  if (draws < 1) throw std::invalid_argument("SamplerConfig: draws >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw std::invalid_argument("SamplerConfig: target_accept in (0,1)");
  if (max_treedepth < 1) throw std::invalid_argument("SamplerConfig: max_treedepth >= 1");
}

bool leapfrog(const TargetDensity& target, std::span<double> q, std::span<double> p,
              std::span<double> grad, double& logp, double eps,
              std::span<const double> inv_mass) {
  const size_t dim = q.size();
  for (size_t i = 0; i < dim; ++i) p[i] += 0.5 * eps * grad[i];
  for (size_t i = 0; i < dim; ++i) q[i] += eps * inv_mass[i] * p[i];
  logp = target.logp_grad(q, grad);
  if (!std::isfinite(logp)) return false;
  for (size_t i = 0; i < dim; ++i) {
    if (!std::isfinite(grad[i])) return false;
    p[i] += 0.5 * eps * grad[i];
  }
  return true;
}

NutsResult nuts_transition(const TargetDensity& target, std::vector<double>& q,
                           Rng& rng, double eps, std::span<const double> inv_mass,
                           int max_treedepth) {
  const int dim = target.dim();
  State bck;
  bck.q = q;
  bck.p.resize(dim);
  bck.grad.resize(dim);
  bck.logp = target.logp_grad(bck.q, bck.grad);

  NutsResult res;
  if (!std::isfinite(bck.logp)) {
    res.divergent = true;
    return res;
  }
  draw_momentum(bck, inv_mass, rng);
  State fwd = bck;

  const double h0 = -bck.logp + kinetic(bck.p, inv_mass);
  std::vector<double> rho = bck.p;
  std::vector<double> sample_q = bck.q;
  double sample_energy = h0;
  double log_sum_w = 0.0;

  Workspace ws(max_treedepth, dim);
  TreeBuf sub;
  sub.resize(dim);
  TreeStats stats;
  std::vector<double> p_old_adj(dim);

  int depth = 0;
  while (depth < max_treedepth) {
    const int dir = rng.uniform() < 0.5 ? -1 : 1;
    State& zend = dir > 0 ? fwd : bck;
    const State& zother = dir > 0 ? bck : fwd;
    std::copy(zend.p.begin(), zend.p.end(), p_old_adj.begin());

    sub.log_sum_w = -kInf;
    const bool valid = build_tree(target, zend, depth, dir * eps, h0, inv_mass,
                                  ws, sub, stats, rng);
    if (!valid) break;
    ++depth;

    // Biased progressive sampling toward the new subtree.
    if (sub.log_sum_w > log_sum_w ||
        rng.uniform() < std::exp(sub.log_sum_w - log_sum_w)) {
      sample_q = sub.q_prop;
      sample_energy = sub.prop_energy;
    }
    log_sum_w = log_add_exp(log_sum_w, sub.log_sum_w);

    bool ok = no_uturn_ext(rho, sub.rho, zother.p, zend.p, inv_mass);
#ifndef HIERTAU_NO_CROSS_CHECKS
    ok = ok && no_uturn_ext(rho, sub.p_beg, zother.p, sub.p_beg, inv_mass);
    ok = ok && no_uturn_ext(sub.rho, p_old_adj, p_old_adj, sub.p_end, inv_mass);
#endif
    for (int i = 0; i < dim; ++i) rho[i] += sub.rho[i];
    if (!ok) break;
  }

  q = sample_q;
  res.divergent = stats.divergent;
  res.treedepth = depth;
  res.accept_stat = stats.n_leapfrog > 0 ? stats.sum_metro / stats.n_leapfrog : 0.0;
  res.energy = sample_energy;
  res.n_leapfrog = stats.n_leapfrog;
  return res;
}

DualAverageState DualAverageState::init(double eps0) {
  DualAverageState s;
  s.mu = std::log(10.0 * eps0);
  s.log_eps = std::log(eps0);
  s.log_eps_bar = 0.0;
  s.h_bar = 0.0;
  s.count = 0;
  return s;
}

double DualAverageState::eps() const { return std::exp(log_eps); }
double DualAverageState::eps_bar() const { return std::exp(log_eps_bar); }

DualAverageState dual_average_step(DualAverageState state, double accept_stat,
                                   double target_accept) {
  constexpr double kGamma = 0.05, kT0 = 10.0, kKappa = 0.75;
  const int m = state.count + 1;
  const double eta = 1.0 / (m + kT0);
  state.h_bar = (1.0 - eta) * state.h_bar + eta * (target_accept - accept_stat);
  state.log_eps = state.mu - std::sqrt(static_cast<double>(m)) / kGamma * state.h_bar;
  const double w = std::pow(static_cast<double>(m), -kKappa);
  state.log_eps_bar = w * state.log_eps + (1.0 - w) * state.log_eps_bar;
  state.count = m;
  return state;
}

std::vector<double> adapt_mass(std::span<const double> window, int n_draws, int dim) {
  if (n_draws < 10) throw std::invalid_argument("adapt_mass: need >= 10 draws");
  if (static_cast<int>(window.size()) != n_draws * dim)
    throw std::invalid_argument("adapt_mass: size mismatch");
  std::vector<double> inv_mass(dim);
  const double n = n_draws;
  for (int k = 0; k < dim; ++k) {
    double mean = 0.0;
    for (int i = 0; i < n_draws; ++i) mean += window[static_cast<size_t>(i) * dim + k];
    mean /= n;
    double ss = 0.0;
    for (int i = 0; i < n_draws; ++i) {
      const double d = window[static_cast<size_t>(i) * dim + k] - mean;
      ss += d * d;
    }
    const double var = ss / (n - 1.0);
    inv_mass[k] = n / (n + 5.0) * var + 5.0 / (n + 5.0) * 1e-3;
  }
  return inv_mass;
}

ChainOutput run_chain(const TargetDensity& target, const SamplerConfig& config,
                      int chain_index) {
  config.validate();
  const int dim = target.dim();
  Rng rng = Rng(config.seed).split(static_cast<std::uint64_t>(chain_index));

  State z;
  z.q.resize(dim);
  z.p.assign(dim, 0.0);
  z.grad.resize(dim);
  bool have_init = false;
  for (int attempt = 0; attempt < 100 && !have_init; ++attempt) {
    for (int k = 0; k < dim; ++k) z.q[k] = 4.0 * rng.uniform() - 2.0;
    z.logp = target.logp_grad(z.q, z.grad);
    have_init = std::isfinite(z.logp);
  }
  if (!have_init)
    throw std::runtime_error("run_chain: could not find a finite starting point");

  std::vector<double> inv_mass(dim, 1.0);
  double eps = find_initial_stepsize(target, z, inv_mass, rng);
  DualAverageState da = DualAverageState::init(eps);

  int init_buffer = 0, term_buffer = 0;
  const auto windows = warmup_windows(config.warmup, init_buffer, term_buffer);
  size_t next_window = 0;
  std::vector<double> window_buf;

  std::vector<double> q = z.q;
  for (int it = 0; it < config.warmup; ++it) {
    const auto res =
        nuts_transition(target, q, rng, std::exp(da.log_eps), inv_mass,
                        config.max_treedepth);
    da = dual_average_step(da, res.accept_stat, config.target_accept);

    if (next_window < windows.size()) {
      const auto& w = windows[next_window];
      if (it >= w.start && it < w.end)
        window_buf.insert(window_buf.end(), q.begin(), q.end());
      if (it == w.end - 1) {
        inv_mass = adapt_mass(window_buf, w.end - w.start, dim);
        window_buf.clear();
        ++next_window;
        State zcur;
        zcur.q = q;
        zcur.p.resize(dim);
        zcur.grad.resize(dim);
        zcur.logp = target.logp_grad(zcur.q, zcur.grad);
        eps = find_initial_stepsize(target, zcur, inv_mass, rng);
        da = DualAverageState::init(eps);
      }
    }
  }
  const double eps_final = config.warmup > 0 ? da.eps_bar() : eps;

  ChainOutput out;
  out.dim = dim;
  out.stepsize = eps_final;
  out.inv_mass = inv_mass;
  out.draws.resize(static_cast<size_t>(config.draws) * dim);
  out.divergent.resize(config.draws);
  out.treedepth.resize(config.draws);
  out.energy.resize(config.draws);

  long n_div = 0;
  for (int it = 0; it < config.draws; ++it) {
    const auto res = nuts_transition(target, q, rng, eps_final, inv_mass,
                                     config.max_treedepth);
    out.divergent[it] = res.divergent ? 1 : 0;
    n_div += res.divergent ? 1 : 0;
    out.treedepth[it] = res.treedepth;
    out.energy[it] = res.energy;
    target.constrain(q, std::span<double>(out.draws).subspan(
                            static_cast<size_t>(it) * dim, dim));
  }
  out.quality_ok = n_div < config.draws;
  return out;
}

std::vector<ChainOutput> run_chains(const TargetDensity& target,
                                    const SamplerConfig& config) {
  config.validate();
  std::vector<ChainOutput> out;
  out.reserve(config.chains);
  for (int c = 0; c < config.chains; ++c) out.push_back(run_chain(target, config, c));
  return out;
}

std::string chains_to_csv(const std::vector<ChainOutput>& outputs,
                          const std::vector<std::string>& param_names) {
  std::string out = "chain,iter,divergent,treedepth,energy";
  for (const auto& name : param_names) out += "," + name;
  out += "\n";
  for (size_t c = 0; c < outputs.size(); ++c) {
    const auto& o = outputs[c];
    if (static_cast<int>(param_names.size()) != o.dim)
      throw std::invalid_argument("chains_to_csv: name count mismatch");
    for (size_t it = 0; it < o.divergent.size(); ++it) {
      out += std::to_string(c + 1) + "," + std::to_string(it + 1) + "," +
             std::to_string(static_cast<int>(o.divergent[it])) + "," +
             std::to_string(o.treedepth[it]) + "," + format_double(o.energy[it]);
      for (int k = 0; k < o.dim; ++k)
        out += "," + format_double(o.draws[it * o.dim + k]);
      out += "\n";
    }
  }
  return out;
}

double grad_check(const TargetDensity& target, std::span<const double> q, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: h must be positive");
  const int dim = target.dim();
  std::vector<double> grad(dim), scratch(dim);
  std::vector<double> point(q.begin(), q.end());
  target.logp_grad(point, grad);
  double max_err = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double saved = point[k];
    const double step = h * std::max(1.0, std::abs(saved));
    point[k] = saved + step;
    const double up = target.logp_grad(point, scratch);
    point[k] = saved - step;
    const double dn = target.logp_grad(point, scratch);
    point[k] = saved;
    const double fd = (up - dn) / (2.0 * step);
    const double err = std::abs(grad[k] - fd) / std::max(1.0, std::abs(fd));
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace hiertau
