#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sgda/simenv.hpp"
#include "sgda/util.hpp"

namespace sgda::policy {

inline constexpr int kFeatureDim = 10;

struct FeatureScaling {
  double position = 50.0;  // m
  double speed = 15.0;     // m/s
  double accel = 8.0;      // m/s^2
};

using FeatureVector = std::array<double, kFeatureDim>;

// [ego x, ego y, ego speed, sin h, cos h, accel, visible flag,
//  noisy ado x, noisy ado y, noisy ado speed]; ado features are zeros with
// flag 0 while the ado is out of sight.
FeatureVector featurize(const sim::State& state, const FeatureScaling& scaling = {});

struct Dataset {
  struct Pair {
    FeatureVector features;
    double action = 0.0;
    int episode = 0;  // provenance
    int round = -1;   // -1 = initial dataset
  };
  std::vector<Pair> pairs;

  void append_trajectory(const sim::Trajectory& traj, int episode, int round,
                         const FeatureScaling& scaling = {});
};

struct TrainConfig {
  int hidden_size = 256;
  int hidden_layers = 3;
  int epochs = 100;
  int batch_size = 500;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
};

// Fully-connected net with tanh activations everywhere including the scalar
// output head, so predictions live in [-1, 1]. Parameters are stored in one
// flat vector (per layer: row-major W then b) for Adam and gradient checks.
class Mlp {
 public:
  explicit Mlp(std::vector<int> layer_sizes);
  static Mlp random_init(std::vector<int> layer_sizes, Rng& rng);

  double forward(std::span<const double> input) const;

  // Mean L1 loss over the batch; grad (same layout as params) accumulated
  // from analytic backprop. Returns the loss.
  double loss_and_grad(std::span<const Dataset::Pair* const> batch,
                       std::vector<double>& grad) const;
  double mean_l1_loss(const Dataset& data) const;

  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

 private:
  std::vector<int> sizes_;
  std::vector<double> params_;
  std::vector<std::size_t> w_off_, b_off_;  // per layer offsets
};

// Behavioral cloning: minibatch Adam on mean L1 loss, deterministic given
// (data, config, seed). Throws InputError on an empty dataset.
Mlp train_bc(const Dataset& data, const TrainConfig& cfg, std::uint64_t seed);

class MlpPolicy : public sim::Policy {
 public:
  MlpPolicy(Mlp net, FeatureScaling scaling)
      : net_(std::move(net)), scaling_(scaling) {}
  sim::Action act(const sim::State& state) const override;
  const Mlp& net() const { return net_; }
  const FeatureScaling& scaling() const { return scaling_; }

 private:
  Mlp net_;
  FeatureScaling scaling_;
};

// Versioned JSON checkpoint: layer sizes, parameters, feature scaling, and a
// hash of the training config.
void save_checkpoint(const MlpPolicy& policy, const TrainConfig& cfg,
                     const std::filesystem::path& path);
MlpPolicy load_checkpoint(const std::filesystem::path& path);

std::uint64_t train_config_hash(const TrainConfig& cfg);

}  // namespace sgda::policy
