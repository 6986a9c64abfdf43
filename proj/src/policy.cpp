#include "sgda/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "sgda/errors.hpp"

namespace sgda::policy {

using nlohmann::json;

FeatureVector featurize(const sim::State& st, const FeatureScaling& sc) {
  FeatureVector f{};
  f[0] = st.ego.x / sc.position;
  f[1] = st.ego.y / sc.position;
  f[2] = st.ego.speed / sc.speed;
  f[3] = std::sin(st.ego.heading);
  f[4] = std::cos(st.ego.heading);
  f[5] = st.ego_accel / sc.accel;
  if (st.ado_visible && st.ado_obs) {
    f[6] = 1.0;
    f[7] = st.ado_obs->x / sc.position;
    f[8] = st.ado_obs->y / sc.position;
    f[9] = st.ado_obs->speed / sc.speed;
  }
  return f;
}

void Dataset::append_trajectory(const sim::Trajectory& traj, int episode,
                                int round, const FeatureScaling& scaling) {
  for (const auto& step : traj.steps)
    pairs.push_back(Pair{featurize(step.state, scaling),
                         step.action.longitudinal, episode, round});
}

// ---------------------------------------------------------------------------
// Mlp

Mlp::Mlp(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw InputError("Mlp needs >= 2 layers");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    w_off_.push_back(total);
    total += static_cast<std::size_t>(sizes_[l + 1]) * sizes_[l];
    b_off_.push_back(total);
    total += sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::random_init(std::vector<int> layer_sizes, Rng& rng) {
  Mlp net(std::move(layer_sizes));
  // fan-in scaled uniform init
  for (std::size_t l = 0; l + 1 < net.sizes_.size(); ++l) {
    int fan_in = net.sizes_[l];
    double bound = std::sqrt(1.0 / fan_in);
    std::size_t nw = static_cast<std::size_t>(net.sizes_[l + 1]) * fan_in;
    for (std::size_t i = 0; i < nw; ++i)
      net.params_[net.w_off_[l] + i] = rng.uniform(-bound, bound);
    // biases stay zero
  }
  return net;
}

double Mlp::forward(std::span<const double> input) const {
  std::vector<double> act(input.begin(), input.end());
  std::vector<double> next;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    int in = sizes_[l], out = sizes_[l + 1];
    next.assign(out, 0.0);
    const double* w = params_.data() + w_off_[l];
    const double* b = params_.data() + b_off_[l];
    for (int o = 0; o < out; ++o) {
      double z = b[o];
      const double* wr = w + static_cast<std::size_t>(o) * in;
      for (int i = 0; i < in; ++i) z += wr[i] * act[i];
      next[o] = std::tanh(z);
    }
    act.swap(next);
  }
  return act[0];
}

double Mlp::loss_and_grad(std::span<const Dataset::Pair* const> batch,
                          std::vector<double>& grad) const {
  grad.assign(params_.size(), 0.0);
  if (batch.empty()) return 0.0;
  const std::size_t layers = sizes_.size() - 1;
  double loss = 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  std::vector<std::vector<double>> acts(layers + 1);
  std::vector<double> delta, delta_prev;
  for (const Dataset::Pair* pair : batch) {
    acts[0].assign(pair->features.begin(), pair->features.end());
    for (std::size_t l = 0; l < layers; ++l) {
      int in = sizes_[l], out = sizes_[l + 1];
      acts[l + 1].assign(out, 0.0);
      const double* w = params_.data() + w_off_[l];
      const double* b = params_.data() + b_off_[l];
      for (int o = 0; o < out; ++o) {
        double z = b[o];
        const double* wr = w + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) z += wr[i] * acts[l][i];
        acts[l + 1][o] = std::tanh(z);
      }
    }
    double pred = acts[layers][0];
    double r = pred - pair->action;
    loss += std::abs(r) * inv_n;
    // dL/dpred (subgradient 0 at the kink)
    double dl = (r > 0 ? 1.0 : (r < 0 ? -1.0 : 0.0)) * inv_n;

    // backprop: delta holds dL/dz for the current layer
    delta.assign(1, dl * (1.0 - pred * pred));
    for (std::size_t l = layers; l-- > 0;) {
      int in = sizes_[l], out = sizes_[l + 1];
      double* gw = grad.data() + w_off_[l];
      double* gb = grad.data() + b_off_[l];
      const double* w = params_.data() + w_off_[l];
      for (int o = 0; o < out; ++o) {
        double d = delta[o];
        gb[o] += d;
        double* gwr = gw + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) gwr[i] += d * acts[l][i];
      }
      if (l == 0) break;
      delta_prev.assign(in, 0.0);
      for (int o = 0; o < out; ++o) {
        double d = delta[o];
        const double* wr = w + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) delta_prev[i] += wr[i] * d;
      }
      for (int i = 0; i < in; ++i)
        delta_prev[i] *= 1.0 - acts[l][i] * acts[l][i];
      delta.swap(delta_prev);
    }
  }
  return loss;
}

double Mlp::mean_l1_loss(const Dataset& data) const {
  if (data.pairs.empty()) throw InputError("empty dataset");
  double loss = 0.0;
  for (const auto& p : data.pairs) loss += std::abs(forward(p.features) - p.action);
  return loss / static_cast<double>(data.pairs.size());
}

Mlp train_bc(const Dataset& data, const TrainConfig& cfg, std::uint64_t seed) {
  if (data.pairs.empty()) throw InputError("train_bc: empty dataset");

  std::vector<int> sizes{kFeatureDim};
  for (int l = 0; l < cfg.hidden_layers; ++l) sizes.push_back(cfg.hidden_size);
  sizes.push_back(1);

  Rng init_rng(derive_seed(seed, "init"));
  Mlp net = Mlp::random_init(sizes, init_rng);

  std::vector<double> grad, m(net.params().size(), 0.0), v(net.params().size(), 0.0);
  std::vector<std::size_t> order(data.pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(seed, "shuffle"));
  std::vector<const Dataset::Pair*> batch;

  long adam_step = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates with our own generator keeps the permutation stable
    // across standard library versions.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::size_t j = shuffle_rng.next_index(i);
      std::swap(order[i - 1], order[j]);
    }
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end =
          std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i)
        batch.push_back(&data.pairs[order[i]]);
      net.loss_and_grad(batch, grad);

      ++adam_step;
      double bc1 = 1.0 - std::pow(cfg.adam_beta1, adam_step);
      double bc2 = 1.0 - std::pow(cfg.adam_beta2, adam_step);
      auto& params = net.params();
      for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * grad[i];
        v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
        params[i] -= cfg.learning_rate * (m[i] / bc1) /
                     (std::sqrt(v[i] / bc2) + cfg.adam_eps);
      }
    }
  }
  return net;
}

sim::Action MlpPolicy::act(const sim::State& state) const {
  FeatureVector f = featurize(state, scaling_);
  return {std::clamp(net_.forward(f), -1.0, 1.0)};
}

// ---------------------------------------------------------------------------
// Checkpoints

std::uint64_t train_config_hash(const TrainConfig& cfg) {
  std::string repr = std::to_string(cfg.hidden_size) + "|" +
                     std::to_string(cfg.hidden_layers) + "|" +
                     std::to_string(cfg.epochs) + "|" +
                     std::to_string(cfg.batch_size) + "|" +
                     format_double(cfg.learning_rate) + "|" +
                     format_double(cfg.adam_beta1) + "|" +
                     format_double(cfg.adam_beta2) + "|" +
                     format_double(cfg.adam_eps);
  return fnv1a64(repr);
}

void save_checkpoint(const MlpPolicy& policy, const TrainConfig& cfg,
                     const std::filesystem::path& path) {
  json j;
  j["format"] = "sgda-policy";
  j["version"] = 1;
  j["layer_sizes"] = policy.net().layer_sizes();
  j["params"] = policy.net().params();
  j["scaling"] = {{"position", policy.scaling().position},
                  {"speed", policy.scaling().speed},
                  {"accel", policy.scaling().accel}};
  j["train_config_hash"] = train_config_hash(cfg);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write checkpoint: " + path.string());
  out << j.dump(2) << "\n";
}

MlpPolicy load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read checkpoint: " + path.string());
  json j = json::parse(in);
  if (j.value("format", "") != "sgda-policy")
    throw InputError("not a policy checkpoint: " + path.string());
  Mlp net(j.at("layer_sizes").get<std::vector<int>>());
  auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.params().size())
    throw InputError("checkpoint parameter count mismatch: " + path.string());
  net.params() = std::move(params);
  FeatureScaling sc;
  sc.position = j.at("scaling").at("position").get<double>();
  sc.speed = j.at("scaling").at("speed").get<double>();
  sc.accel = j.at("scaling").at("accel").get<double>();
  return MlpPolicy(std::move(net), sc);
}

}  // namespace sgda::policy
