#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sgda/simenv.hpp"
#include "sgda/stp.hpp"
#include "sgda/util.hpp"

namespace sgda::bo {

inline constexpr int kEncodedDim = 6;
using EncodedPoint = std::array<double, kEncodedDim>;

// Environment encoding into [0,1]^6: continuous fields min-max normalized;
// the categorical side/maneuver occupy one dimension each with bin centers
// {1/6, 3/6, 5/6} and nearest-bin decoding. Decoding swaps the speed pair
// when needed so min <= max always holds.
EncodedPoint encode(const sim::EnvCondition& e, const sim::ParamRanges& ranges);
sim::EnvCondition decode(const EncodedPoint& x, const sim::ParamRanges& ranges);

struct GpHyper {
  double length_scale = 0.5;
  double signal_var = 1.0;
  double noise_var = 1e-4;  // sigma_n = 0.01
};

// Squared-exponential GP over encoded points. Targets are standardized
// internally at fit time; the posterior is reported in raw units. The
// Cholesky factor is cached across posterior queries and rebuilt on add().
class GpSurrogate {
 public:
  explicit GpSurrogate(GpHyper hyper = {}, int refit_interval = 10)
      : hyper_(hyper), refit_interval_(refit_interval) {}

  // Appends an observation; refits hyperparameters by log-marginal-likelihood
  // grid search every refit_interval observations. Throws InputError on a
  // non-finite target.
  void add(const EncodedPoint& x, double y);

  struct Posterior {
    double mean = 0.0;
    double var = 0.0;
  };
  Posterior posterior(const EncodedPoint& x) const;

  std::size_t size() const { return xs_.size(); }
  const std::vector<EncodedPoint>& inputs() const { return xs_; }
  const std::vector<double>& targets() const { return ys_; }
  double best_target() const;
  const EncodedPoint& best_input() const;
  const GpHyper& hyper() const { return hyper_; }

 private:
  void refit_hyper();
  void refactor();
  double log_marginal_likelihood(const GpHyper& h) const;

  GpHyper hyper_;
  int refit_interval_ = 10;
  std::vector<EncodedPoint> xs_;
  std::vector<double> ys_;
  // cached fit state (standardized targets)
  double y_mean_ = 0.0, y_scale_ = 1.0;
  std::vector<double> chol_;   // lower-triangular factor of K + sigma_n^2 I
  std::vector<double> alpha_;  // (K + sigma_n^2 I)^{-1} y_std
};

struct SamplerConfig {
  double kappa = 2.0;          // GP-UCB exploration weight
  double bonus_coeff = 0.1;    // appendix `a`
  double dtw_cap = 10.0;       // bonus distance cap / empty-store distance
  int n_min = 5;               // uniform cold-start proposals per surrogate
  int refit_interval = 10;
  GpHyper initial_hyper = {};
  int candidates = 512;        // quasi-random acquisition candidates
  int local_candidates = 64;   // perturbations of the incumbent best
};

// One surrogate per specification, created lazily.
struct SamplerState {
  explicit SamplerState(std::size_t num_specs, SamplerConfig cfg = {})
      : config(cfg), surrogates(num_specs) {}

  SamplerConfig config;
  std::vector<std::optional<GpSurrogate>> surrogates;

  GpSurrogate& surrogate(std::size_t spec_index);
};

// Target fed back to a spec's surrogate: the spec-level robustness of the
// trajectory plus, when the trajectory actually lands in that spec, the
// diversity bonus a * min(D_cap, min DTW distance to the spec's previously
// landed trajectories); an empty store contributes a * D_cap.
double target_value(const stp::Partition& part, std::size_t spec_index,
                    const sim::Trajectory& traj,
                    const sim::ScenarioGeometry& geom, double bonus_coeff,
                    double dtw_cap);

// The deterministic candidate set scanned by propose_point for a given rng
// state: quasi-random sweep plus local perturbations of the incumbent best.
std::vector<EncodedPoint> acquisition_candidates(const GpSurrogate& gp,
                                                 const SamplerConfig& cfg,
                                                 Rng& rng);
double acquisition(const GpSurrogate& gp, const SamplerConfig& cfg,
                   const EncodedPoint& x);

// Acquisition maximization over the candidate set; uniform while the
// surrogate is colder than n_min observations.
EncodedPoint propose_point(const GpSurrogate& gp, const SamplerConfig& cfg,
                           Rng& rng);
sim::EnvCondition propose(SamplerState& sampler, std::size_t spec_index,
                          const sim::ParamRanges& ranges, Rng& rng);

void observe(SamplerState& sampler, std::size_t spec_index,
             const sim::EnvCondition& e, double target,
             const sim::ParamRanges& ranges);

// Observation log CSV: spec index, encoded point, target.
std::string observations_csv(const SamplerState& sampler);

}  // namespace sgda::bo
