#include "sgda/bayesopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sgda/errors.hpp"
#include "sgda/metrics.hpp"
#include "sgda/stl.hpp"

namespace sgda::bo {

namespace {

constexpr double kBinCenters[3] = {1.0 / 6.0, 3.0 / 6.0, 5.0 / 6.0};

int nearest_bin(double x) {
  int b = static_cast<int>(std::floor(x * 3.0));
  return std::clamp(b, 0, 2);
}

double norm(double v, double lo, double hi) { return (v - lo) / (hi - lo); }
double denorm(double x, double lo, double hi) { return lo + x * (hi - lo); }

}  // namespace

EncodedPoint encode(const sim::EnvCondition& e, const sim::ParamRanges& r) {
  EncodedPoint x;
  x[0] = norm(e.ego_init_distance, r.ego_init_distance_min, r.ego_init_distance_max);
  x[1] = kBinCenters[static_cast<int>(e.ado_side)];
  x[2] = kBinCenters[static_cast<int>(e.ado_maneuver)];
  x[3] = norm(e.ado_init_distance, r.ado_init_distance_min, r.ado_init_distance_max);
  x[4] = norm(e.ado_min_speed, r.ado_speed_min, r.ado_speed_max);
  x[5] = norm(e.ado_max_speed, r.ado_speed_min, r.ado_speed_max);
  return x;
}

sim::EnvCondition decode(const EncodedPoint& x, const sim::ParamRanges& r) {
  sim::EnvCondition e;
  e.ego_init_distance =
      denorm(x[0], r.ego_init_distance_min, r.ego_init_distance_max);
  e.ado_side = static_cast<sim::AdoSide>(nearest_bin(x[1]));
  e.ado_maneuver = static_cast<sim::Maneuver>(nearest_bin(x[2]));
  e.ado_init_distance =
      denorm(x[3], r.ado_init_distance_min, r.ado_init_distance_max);
  double a = denorm(x[4], r.ado_speed_min, r.ado_speed_max);
  double b = denorm(x[5], r.ado_speed_min, r.ado_speed_max);
  e.ado_min_speed = std::min(a, b);
  e.ado_max_speed = std::max(a, b);
  return e;
}

// ---------------------------------------------------------------------------
// GP internals

namespace {

double sq_dist(const EncodedPoint& a, const EncodedPoint& b) {
  double s = 0.0;
  for (int d = 0; d < kEncodedDim; ++d) {
    double diff = a[d] - b[d];
    s += diff * diff;
  }
  return s;
}

double kernel(const EncodedPoint& a, const EncodedPoint& b, const GpHyper& h) {
  return h.signal_var *
         std::exp(-sq_dist(a, b) / (2.0 * h.length_scale * h.length_scale));
}

// In-place lower Cholesky of the row-major symmetric matrix `k` (n x n).
// Returns false when the matrix is not positive definite.
bool cholesky(std::vector<double>& k, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double diag = k[j * n + j];
    for (std::size_t p = 0; p < j; ++p) diag -= k[j * n + p] * k[j * n + p];
    if (diag <= 0.0) return false;
    double ljj = std::sqrt(diag);
    k[j * n + j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = k[i * n + j];
      for (std::size_t p = 0; p < j; ++p) v -= k[i * n + p] * k[j * n + p];
      k[i * n + j] = v / ljj;
    }
  }
  // zero the upper triangle for cleanliness
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) k[i * n + j] = 0.0;
  return true;
}

void forward_solve(const std::vector<double>& l, std::size_t n,
                   std::vector<double>& b) {
  for (std::size_t i = 0; i < n; ++i) {
    double v = b[i];
    for (std::size_t j = 0; j < i; ++j) v -= l[i * n + j] * b[j];
    b[i] = v / l[i * n + i];
  }
}

void backward_solve(const std::vector<double>& l, std::size_t n,
                    std::vector<double>& b) {
  for (std::size_t i = n; i-- > 0;) {
    double v = b[i];
    for (std::size_t j = i + 1; j < n; ++j) v -= l[j * n + i] * b[j];
    b[i] = v / l[i * n + i];
  }
}

std::vector<double> build_gram(const std::vector<EncodedPoint>& xs,
                               const GpHyper& h, double jitter) {
  const std::size_t n = xs.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double v = kernel(xs[i], xs[j], h);
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
    k[i * n + i] += h.noise_var + jitter;
  }
  return k;
}

bool factor_with_jitter(const std::vector<EncodedPoint>& xs, const GpHyper& h,
                        std::vector<double>& l_out) {
  for (double jitter = 0.0; jitter <= 1e-4;
       jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0) {
    l_out = build_gram(xs, h, jitter);
    if (cholesky(l_out, xs.size())) return true;
    if (jitter == 1e-4) break;
  }
  return false;
}

}  // namespace

void GpSurrogate::add(const EncodedPoint& x, double y) {
  if (!std::isfinite(y)) throw InputError("GP observation target is not finite");
  xs_.push_back(x);
  ys_.push_back(y);
  if (refit_interval_ > 0 && xs_.size() % static_cast<std::size_t>(refit_interval_) == 0)
    refit_hyper();
  refactor();
}

void GpSurrogate::refactor() {
  const std::size_t n = xs_.size();
  y_mean_ = 0.0;
  for (double y : ys_) y_mean_ += y;
  y_mean_ /= static_cast<double>(n);
  double var = 0.0;
  for (double y : ys_) var += (y - y_mean_) * (y - y_mean_);
  y_scale_ = std::sqrt(var / static_cast<double>(n));
  if (y_scale_ < 1e-12) y_scale_ = 1.0;

  if (!factor_with_jitter(xs_, hyper_, chol_))
    throw InputError("GP kernel matrix not positive definite");
  alpha_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) alpha_[i] = (ys_[i] - y_mean_) / y_scale_;
  forward_solve(chol_, n, alpha_);
  backward_solve(chol_, n, alpha_);
}

GpSurrogate::Posterior GpSurrogate::posterior(const EncodedPoint& x) const {
  const std::size_t n = xs_.size();
  if (n == 0) return {0.0, hyper_.signal_var};
  std::vector<double> ks(n);
  for (std::size_t i = 0; i < n; ++i) ks[i] = kernel(x, xs_[i], hyper_);
  double mean_std = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean_std += ks[i] * alpha_[i];
  std::vector<double> v = ks;
  forward_solve(chol_, n, v);
  double quad = 0.0;
  for (double u : v) quad += u * u;
  double var_std = std::max(0.0, hyper_.signal_var - quad);
  return {y_mean_ + y_scale_ * mean_std, var_std * y_scale_ * y_scale_};
}

double GpSurrogate::best_target() const {
  if (ys_.empty()) throw InputError("GP has no observations");
  return *std::max_element(ys_.begin(), ys_.end());
}

const EncodedPoint& GpSurrogate::best_input() const {
  if (ys_.empty()) throw InputError("GP has no observations");
  return xs_[std::distance(ys_.begin(), std::max_element(ys_.begin(), ys_.end()))];
}

double GpSurrogate::log_marginal_likelihood(const GpHyper& h) const {
  const std::size_t n = xs_.size();
  std::vector<double> l;
  if (!factor_with_jitter(xs_, h, l))
    return -std::numeric_limits<double>::infinity();
  std::vector<double> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = (ys_[i] - y_mean_) / y_scale_;
  std::vector<double> z = a;
  forward_solve(l, n, z);
  backward_solve(l, n, z);
  double fit = 0.0, logdet = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    fit += a[i] * z[i];
    logdet += std::log(l[i * n + i]);
  }
  return -0.5 * fit - logdet -
         0.5 * static_cast<double>(n) * std::log(2.0 * M_PI);
}

void GpSurrogate::refit_hyper() {
  // grid search, noise variance fixed
  const std::size_t n = xs_.size();
  if (n < 2) return;
  // recompute standardization first so LML compares on the same targets
  y_mean_ = 0.0;
  for (double y : ys_) y_mean_ += y;
  y_mean_ /= static_cast<double>(n);
  double var = 0.0;
  for (double y : ys_) var += (y - y_mean_) * (y - y_mean_);
  y_scale_ = std::sqrt(var / static_cast<double>(n));
  if (y_scale_ < 1e-12) y_scale_ = 1.0;

  static constexpr double kLengths[] = {0.1,      0.18205642, 0.33144540,
                                        0.60336612, 1.09856225, 2.0};
  static constexpr double kSignals[] = {0.5, 1.0, 2.0};
  GpHyper best = hyper_;
  double best_lml = -std::numeric_limits<double>::infinity();
  for (double ls : kLengths) {
    for (double sf : kSignals) {
      GpHyper h{ls, sf, hyper_.noise_var};
      double lml = log_marginal_likelihood(h);
      if (lml > best_lml) {
        best_lml = lml;
        best = h;
      }
    }
  }
  hyper_ = best;
}

// ---------------------------------------------------------------------------
// Sampler

GpSurrogate& SamplerState::surrogate(std::size_t spec_index) {
  auto& slot = surrogates.at(spec_index);
  if (!slot)
    slot.emplace(config.initial_hyper, config.refit_interval);
  return *slot;
}

double target_value(const stp::Partition& part, std::size_t spec_index,
                    const sim::Trajectory& traj,
                    const sim::ScenarioGeometry& geom, double bonus_coeff,
                    double dtw_cap) {
  auto signals = stl::extract_signals(traj, geom);
  auto rho = stp::robustness_vector(part, signals);
  double value = stp::spec_robustness(part.specs[spec_index], rho);
  if (stp::classify(part, signals) == spec_index) {
    double dist = dtw_cap;
    const auto& store = part.landed[spec_index];
    if (!store.empty()) {
      double mn = std::numeric_limits<double>::infinity();
      for (const auto& sample : store)
        mn = std::min(mn, metrics::dtw_distance(traj, sample.traj));
      dist = std::min(mn, dtw_cap);
    }
    value += bonus_coeff * dist;
  }
  return value;
}

namespace {

// Kronecker (R_d) low-discrepancy sequence over [0,1]^d.
std::array<double, kEncodedDim> rd_alphas() {
  double g = 1.5;
  for (int i = 0; i < 64; ++i) g = std::pow(1.0 + g, 1.0 / (kEncodedDim + 1));
  std::array<double, kEncodedDim> a;
  double p = 1.0;
  for (int d = 0; d < kEncodedDim; ++d) {
    p /= g;
    a[d] = p;
  }
  return a;
}

EncodedPoint uniform_point(Rng& rng) {
  EncodedPoint x;
  for (int d = 0; d < kEncodedDim; ++d) x[d] = rng.next_double();
  return x;
}

}  // namespace

std::vector<EncodedPoint> acquisition_candidates(const GpSurrogate& gp,
                                                 const SamplerConfig& cfg,
                                                 Rng& rng) {
  static const std::array<double, kEncodedDim> alphas = rd_alphas();
  EncodedPoint offset = uniform_point(rng);

  std::vector<EncodedPoint> out;
  out.reserve(cfg.candidates + cfg.local_candidates);
  for (int i = 0; i < cfg.candidates; ++i) {
    EncodedPoint x;
    for (int d = 0; d < kEncodedDim; ++d) {
      double v = offset[d] + (i + 1) * alphas[d];
      x[d] = v - std::floor(v);
    }
    out.push_back(x);
  }
  const EncodedPoint& incumbent = gp.best_input();
  for (int i = 0; i < cfg.local_candidates; ++i) {
    EncodedPoint x;
    for (int d = 0; d < kEncodedDim; ++d)
      x[d] = std::clamp(incumbent[d] + 0.05 * rng.gaussian(), 0.0, 1.0);
    out.push_back(x);
  }
  return out;
}

double acquisition(const GpSurrogate& gp, const SamplerConfig& cfg,
                   const EncodedPoint& x) {
  auto post = gp.posterior(x);
  return post.mean + cfg.kappa * std::sqrt(std::max(0.0, post.var));
}

EncodedPoint propose_point(const GpSurrogate& gp, const SamplerConfig& cfg,
                           Rng& rng) {
  if (gp.size() < static_cast<std::size_t>(cfg.n_min)) return uniform_point(rng);

  EncodedPoint best_x{};
  double best_score = -std::numeric_limits<double>::infinity();
  for (const EncodedPoint& x : acquisition_candidates(gp, cfg, rng)) {
    double score = acquisition(gp, cfg, x);
    if (score > best_score) {
      best_score = score;
      best_x = x;
    }
  }
  return best_x;
}

sim::EnvCondition propose(SamplerState& sampler, std::size_t spec_index,
                          const sim::ParamRanges& ranges, Rng& rng) {
  return decode(propose_point(sampler.surrogate(spec_index), sampler.config, rng),
                ranges);
}

void observe(SamplerState& sampler, std::size_t spec_index,
             const sim::EnvCondition& e, double target,
             const sim::ParamRanges& ranges) {
  if (!std::isfinite(target))
    throw InputError("observe: target value is not finite");
  sampler.surrogate(spec_index).add(encode(e, ranges), target);
}

std::string observations_csv(const SamplerState& sampler) {
  std::string out = "spec_index,x0,x1,x2,x3,x4,x5,target\n";
  for (std::size_t j = 0; j < sampler.surrogates.size(); ++j) {
    if (!sampler.surrogates[j]) continue;
    const auto& gp = *sampler.surrogates[j];
    for (std::size_t i = 0; i < gp.size(); ++i) {
      out += std::to_string(j);
      for (int d = 0; d < kEncodedDim; ++d)
        out += "," + format_double(gp.inputs()[i][d]);
      out += "," + format_double(gp.targets()[i]) + "\n";
    }
  }
  return out;
}

}  // namespace sgda::bo
