#include "sgda/sgda.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "sgda/bayesopt.hpp"
#include "sgda/ecsampling.hpp"
#include "sgda/errors.hpp"
#include "sgda/io.hpp"
#include "sgda/stl.hpp"

namespace sgda::run {

namespace fs = std::filesystem;

namespace {

unsigned effective_jobs(const config::ExperimentConfig& cfg) {
  if (cfg.jobs > 0) return cfg.jobs;
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

std::vector<io::Episode> expert_episodes(const sim::Policy& expert,
                                         const std::vector<sim::EnvCondition>& envs,
                                         const std::vector<std::uint64_t>& seeds,
                                         const sim::ScenarioGeometry& geom,
                                         unsigned jobs) {
  std::vector<io::Episode> eps(envs.size());
  parallel_for(envs.size(), jobs, [&](std::size_t i) {
    eps[i].e = envs[i];
    eps[i].seed = seeds[i];
    eps[i].traj = sim::rollout(expert, envs[i], geom, seeds[i]);
  });
  return eps;
}

// Falsification target for a conjunction over a subset of the properties:
// maximize the negated conjunction robustness; the diversity bonus applies
// only once the trajectory actually violates the conjunction, measured
// against previously collected violating trajectories.
struct Falsifier {
  explicit Falsifier(const bo::SamplerConfig& cfg)
      : gp(cfg.initial_hyper, cfg.refit_interval) {}

  bo::GpSurrogate gp;
  std::vector<sim::Trajectory> store;  // violating trajectories

  double target(const stp::Partition& part,
                const std::vector<std::size_t>& prop_idx,
                const sim::Trajectory& traj, const sim::ScenarioGeometry& geom,
                const bo::SamplerConfig& cfg) const {
    auto signals = stl::extract_signals(traj, geom);
    double conj = std::numeric_limits<double>::infinity();
    bool satisfied = true;
    for (std::size_t i : prop_idx) {
      conj = std::min(conj, stl::eval_quant(*part.properties[i].formula, signals));
      satisfied =
          satisfied && stl::eval_bool(*part.properties[i].formula, signals);
    }
    double value = -conj;
    if (!satisfied) {
      double dist = cfg.dtw_cap;
      if (!store.empty()) {
        double mn = std::numeric_limits<double>::infinity();
        for (const auto& prev : store)
          mn = std::min(mn, metrics::dtw_distance(traj, prev));
        dist = std::min(mn, cfg.dtw_cap);
      }
      value += cfg.bonus_coeff * dist;
    }
    return value;
  }

  bool violated(const stp::Partition& part,
                const std::vector<std::size_t>& prop_idx,
                const sim::Trajectory& traj,
                const sim::ScenarioGeometry& geom) const {
    auto signals = stl::extract_signals(traj, geom);
    for (std::size_t i : prop_idx)
      if (!stl::eval_bool(*part.properties[i].formula, signals)) return true;
    return false;
  }
};

std::string falsifier_log_csv(const std::vector<Falsifier>& falsifiers) {
  std::string out = "falsifier,x0,x1,x2,x3,x4,x5,target\n";
  for (std::size_t f = 0; f < falsifiers.size(); ++f) {
    const auto& gp = falsifiers[f].gp;
    for (std::size_t i = 0; i < gp.size(); ++i) {
      out += std::to_string(f);
      for (int d = 0; d < bo::kEncodedDim; ++d)
        out += "," + format_double(gp.inputs()[i][d]);
      out += "," + format_double(gp.targets()[i]) + "\n";
    }
  }
  return out;
}

void write_selected_csv(const fs::path& path,
                        const std::vector<PoolEntry>& pool,
                        const std::vector<std::size_t>& selected) {
  io::Csv csv({"pool_index", "ego_init_distance", "ado_side", "ado_maneuver",
               "ado_init_distance", "ado_min_speed", "ado_max_speed", "seed",
               "il_spec"});
  for (std::size_t idx : selected) {
    const auto& p = pool[idx];
    csv.cell(idx)
        .cell(p.e.ego_init_distance)
        .cell(sim::to_string(p.e.ado_side))
        .cell(sim::to_string(p.e.ado_maneuver))
        .cell(p.e.ado_init_distance)
        .cell(p.e.ado_min_speed)
        .cell(p.e.ado_max_speed)
        .cell(std::to_string(p.seed))
        .cell(p.spec)
        .end_row();
  }
  csv.write(path);
}

void write_pool_jsonl(const fs::path& path, const std::vector<PoolEntry>& pool) {
  std::vector<io::Episode> eps;
  eps.reserve(pool.size());
  for (const auto& p : pool) eps.push_back({p.e, p.seed, p.traj});
  io::write_episodes_jsonl(path, eps);
}

}  // namespace

void write_metric_files(const fs::path& dir, const config::ExperimentConfig& cfg,
                        const stp::Partition& part, const metrics::TestSet& test,
                        const metrics::MatchReport& report, double l1) {
  io::Csv m({"metric", "value"});
  m.cell(std::string("strategy")).cell(config::to_string(cfg.strategy)).end_row();
  m.cell(std::string("master_seed")).cell(std::to_string(cfg.master_seed)).end_row();
  m.cell(std::string("test_entries")).cell(test.entries.size()).end_row();
  m.cell(std::string("overall_match_rate")).cell(report.overall).end_row();
  m.cell(std::string("mean_dtw")).cell(report.mean_dtw).end_row();
  m.cell(std::string("median_dtw")).cell(report.median_dtw).end_row();
  m.cell(std::string("l1_loss")).cell(l1).end_row();
  m.write(dir / "metrics.csv");

  io::Csv po({"spec_index", "signs", "expert_count", "base_count",
              "base_frequency", "topup_count", "shortfall", "match_rate"});
  auto counts = test.spec_counts();
  for (std::size_t j = 0; j < part.num_specs(); ++j) {
    po.cell(j)
        .cell(part.specs[j].sign_string())
        .cell(counts[j])
        .cell(test.base_counts[j])
        .cell(static_cast<double>(test.base_counts[j]) /
              static_cast<double>(test.base_size))
        .cell(test.topup_counts[j])
        .cell(test.shortfalls[j])
        .cell(report.rows[j].rate())
        .end_row();
  }
  po.write(dir / "per_outcome.csv");

  io::Csv dt({"entry", "expert_spec", "dtw"});
  for (std::size_t i = 0; i < test.entries.size(); ++i)
    dt.cell(i).cell(test.entries[i].expert_spec).cell(report.dtw[i]).end_row();
  dt.write(dir / "dtw.csv");
}

RunResult run_experiment(const config::ExperimentConfig& cfg,
                         const fs::path& outdir) {
  if (fs::exists(outdir / "config.snapshot"))
    throw InputError("output directory already holds a run: " + outdir.string());
  fs::create_directories(outdir);
  io::write_text(outdir / "config.snapshot", cfg.source_text);

  const unsigned jobs = effective_jobs(cfg);
  const std::uint64_t seed = cfg.master_seed;
  const auto& geom = cfg.geometry;
  const auto& ranges = cfg.ranges;
  sim::ScriptedExpert expert(cfg.expert);
  stp::Partition part = stp::build_partition(cfg.properties);
  const std::size_t num_specs = part.num_specs();

  // --- initial dataset from the uniform prior
  fs::create_directories(outdir / "initial");
  std::vector<sim::EnvCondition> init_envs(cfg.initial_episodes);
  std::vector<std::uint64_t> init_seeds(cfg.initial_episodes);
  {
    Rng env_rng(derive_seed(seed, "init-env"));
    for (std::size_t i = 0; i < cfg.initial_episodes; ++i) {
      init_envs[i] = sim::sample_uniform_env(ranges, env_rng);
      init_seeds[i] = derive_seed(seed, "init-rollout", i);
    }
  }
  auto init_eps = expert_episodes(expert, init_envs, init_seeds, geom, jobs);
  io::write_episodes_jsonl(outdir / "initial" / "dataset.jsonl", init_eps);

  policy::Dataset dataset;
  int episode_counter = 0;
  for (const auto& ep : init_eps)
    dataset.append_trajectory(ep.traj, episode_counter++, -1, cfg.scaling);

  log_info("training initial policy on " + std::to_string(dataset.pairs.size()) +
           " pairs");
  policy::Mlp net = policy::train_bc(dataset, cfg.training, derive_seed(seed, "train", 0));
  auto pi = std::make_unique<policy::MlpPolicy>(std::move(net), cfg.scaling);
  policy::save_checkpoint(*pi, cfg.training, outdir / "initial" / "policy.ckpt");

  bo::SamplerState sampler(num_specs, cfg.sampler);
  std::vector<Falsifier> falsifiers;
  std::vector<std::vector<std::size_t>> falsifier_props;
  if (cfg.strategy == config::Strategy::SingleSpec) {
    falsifiers.emplace_back(cfg.sampler);
    std::vector<std::size_t> all(part.num_properties());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    falsifier_props.push_back(all);
  } else if (cfg.strategy == config::Strategy::IndividualProps) {
    for (std::size_t i = 0; i < part.num_properties(); ++i) {
      falsifiers.emplace_back(cfg.sampler);
      falsifier_props.push_back({i});
    }
  }

  std::optional<ecsel::OutcomePairTable> prev_table;
  RunResult result{outdir,
                   policy::MlpPolicy(*pi),
                   {},
                   {},
                   0.0,
                   {}};

  for (std::size_t round = 0; round < cfg.rounds; ++round) {
    fs::path round_dir = outdir / ("round_" + std::to_string(round));
    fs::create_directories(round_dir);
    const std::uint64_t round_seed = derive_seed(seed, "round", round);
    try {
      auto rollout_il = [&](const sim::EnvCondition& e, std::uint64_t s) {
        return sim::rollout(*pi, e, geom, s);
      };

      std::vector<PoolEntry> pool;
      std::vector<std::size_t> selected;
      std::vector<sim::EnvCondition> query_envs;
      std::vector<std::uint64_t> query_seeds;

      if (cfg.strategy == config::Strategy::Uniform) {
        // EC steps replaced by uniform sampling of m environments.
        Rng env_rng(derive_seed(round_seed, "uniform-env"));
        for (std::size_t i = 0; i < cfg.selections_per_round; ++i) {
          query_envs.push_back(sim::sample_uniform_env(ranges, env_rng));
          query_seeds.push_back(derive_seed(round_seed, "uniform-rollout", i));
        }
      } else {
        // Seed phase: uniform samples feeding every optimizer and the
        // partition's landed stores (no UCB attempt accounting).
        const std::size_t seed_count =
            std::min(cfg.seed_samples, cfg.samples_per_round);
        Rng seed_env_rng(derive_seed(round_seed, "seed-env"));
        for (std::size_t s = 0; s < seed_count; ++s) {
          PoolEntry entry;
          entry.e = sim::sample_uniform_env(ranges, seed_env_rng);
          entry.seed = derive_seed(round_seed, "seed-rollout", s);
          entry.traj = rollout_il(entry.e, entry.seed);
          if (cfg.strategy == config::Strategy::Sgda) {
            std::vector<double> targets(num_specs);
            for (std::size_t j = 0; j < num_specs; ++j)
              targets[j] = bo::target_value(part, j, entry.traj, geom,
                                            cfg.sampler.bonus_coeff,
                                            cfg.sampler.dtw_cap);
            entry.spec = stp::classify_and_record(part, entry.e, entry.traj, geom);
            for (std::size_t j = 0; j < num_specs; ++j)
              bo::observe(sampler, j, entry.e, targets[j], ranges);
          } else {
            for (std::size_t f = 0; f < falsifiers.size(); ++f) {
              double t = falsifiers[f].target(part, falsifier_props[f],
                                              entry.traj, geom, cfg.sampler);
              if (falsifiers[f].violated(part, falsifier_props[f], entry.traj, geom))
                falsifiers[f].store.push_back(entry.traj);
              falsifiers[f].gp.add(bo::encode(entry.e, ranges), t);
            }
            entry.spec = stp::classify_and_record(part, entry.e, entry.traj, geom);
          }
          pool.push_back(std::move(entry));
        }

        const std::size_t guided = cfg.samples_per_round - seed_count;
        if (cfg.strategy == config::Strategy::Sgda) {
          ecs::EcSamplingOptions options;
          options.ucb_c = cfg.ucb_c;
          if (cfg.use_property_weights) options.ucb_weights = part.spec_weights;
          auto records =
              ecs::ec_sampling(part, sampler, rollout_il, guided, geom, ranges,
                               derive_seed(round_seed, "guided"), options);
          io::write_text(round_dir / "bandit_trace.csv",
                         ecs::bandit_trace_csv(records));
          for (auto& rec : records)
            pool.push_back(PoolEntry{rec.e, rec.seed, std::move(rec.traj),
                                     rec.landed_spec});
          io::write_text(round_dir / "surrogate_log.csv",
                         bo::observations_csv(sampler));
        } else {
          // Guided budget split as evenly as possible, remainder to the
          // lowest-index falsifiers.
          Rng guided_rng(derive_seed(round_seed, "falsifier"));
          std::size_t counter = 0;
          for (std::size_t f = 0; f < falsifiers.size(); ++f) {
            std::size_t budget = guided / falsifiers.size() +
                                 (f < guided % falsifiers.size() ? 1 : 0);
            for (std::size_t t = 0; t < budget; ++t) {
              PoolEntry entry;
              entry.e = bo::decode(
                  bo::propose_point(falsifiers[f].gp, cfg.sampler, guided_rng),
                  ranges);
              entry.seed = derive_seed(round_seed, "guided-rollout", counter++);
              entry.traj = rollout_il(entry.e, entry.seed);
              double target = falsifiers[f].target(part, falsifier_props[f],
                                                   entry.traj, geom, cfg.sampler);
              if (falsifiers[f].violated(part, falsifier_props[f], entry.traj, geom))
                falsifiers[f].store.push_back(entry.traj);
              falsifiers[f].gp.add(bo::encode(entry.e, ranges), target);
              entry.spec = stp::classify_and_record(part, entry.e, entry.traj, geom);
              pool.push_back(std::move(entry));
            }
          }
          io::write_text(round_dir / "surrogate_log.csv",
                         falsifier_log_csv(falsifiers));
        }

        write_pool_jsonl(round_dir / "pool.jsonl", pool);

        // Selection
        std::vector<std::size_t> pool_specs(pool.size());
        for (std::size_t i = 0; i < pool.size(); ++i) pool_specs[i] = pool[i].spec;
        Rng select_rng(derive_seed(round_seed, "select"));
        if (cfg.strategy == config::Strategy::Sgda && prev_table) {
          auto weights = ecsel::selection_weights(*prev_table);
          selected = ecsel::ec_select(pool_specs, weights,
                                      cfg.selections_per_round, select_rng);
          io::write_text(round_dir / "selection_report.csv",
                         ecsel::selection_csv(*prev_table, weights, pool_specs,
                                              selected));
        } else {
          selected = ecsel::ec_select(pool_specs, std::nullopt,
                                      cfg.selections_per_round, select_rng);
          if (cfg.strategy == config::Strategy::Sgda) {
            ecsel::OutcomePairTable empty(num_specs);
            io::write_text(
                round_dir / "selection_report.csv",
                ecsel::selection_csv(empty, ecsel::selection_weights(empty),
                                     pool_specs, selected));
          }
        }
        write_selected_csv(round_dir / "selected.csv", pool, selected);
        for (std::size_t idx : selected) {
          query_envs.push_back(pool[idx].e);
          query_seeds.push_back(pool[idx].seed);  // shared noise stream
        }
      }

      // Query the expert on the selected environments and aggregate.
      auto new_eps = expert_episodes(expert, query_envs, query_seeds, geom, jobs);
      io::write_episodes_jsonl(round_dir / "dataset_delta.jsonl", new_eps);
      for (const auto& ep : new_eps)
        dataset.append_trajectory(ep.traj, episode_counter++,
                                  static_cast<int>(round), cfg.scaling);

      if (cfg.strategy == config::Strategy::Sgda) {
        ecsel::OutcomePairTable table(num_specs);
        for (std::size_t i = 0; i < new_eps.size(); ++i) {
          std::size_t expert_spec = stp::classify(part, new_eps[i].traj, geom);
          table.add_pair(expert_spec, pool[selected[i]].spec);
        }
        prev_table = std::move(table);
      }

      if (cfg.strategy == config::Strategy::Uniform) {
        io::Csv csv({"index", "ego_init_distance", "ado_side", "ado_maneuver",
                     "ado_init_distance", "ado_min_speed", "ado_max_speed",
                     "seed"});
        for (std::size_t i = 0; i < query_envs.size(); ++i) {
          const auto& e = query_envs[i];
          csv.cell(i)
              .cell(e.ego_init_distance)
              .cell(sim::to_string(e.ado_side))
              .cell(sim::to_string(e.ado_maneuver))
              .cell(e.ado_init_distance)
              .cell(e.ado_min_speed)
              .cell(e.ado_max_speed)
              .cell(std::to_string(query_seeds[i]))
              .end_row();
        }
        csv.write(round_dir / "selected.csv");
      }

      // Retrain from scratch on the aggregate.
      log_info("round " + std::to_string(round) + ": retraining on " +
               std::to_string(dataset.pairs.size()) + " pairs");
      policy::Mlp retrained = policy::train_bc(dataset, cfg.training,
                                               derive_seed(seed, "train", round + 1));
      pi = std::make_unique<policy::MlpPolicy>(std::move(retrained), cfg.scaling);
      policy::save_checkpoint(*pi, cfg.training, round_dir / "policy.ckpt");
      io::write_text(round_dir / "partition.csv", stp::partition_csv(part));

      result.rounds.push_back(RoundArtifacts{round, pool.size(), selected,
                                             dataset.pairs.size()});
    } catch (const std::exception& err) {
      io::write_text(round_dir / "failure.txt",
                     std::string("round aborted: ") + err.what() + "\n");
      throw;
    }
  }

  // --- final evaluation on a held-out expert test set
  fs::create_directories(outdir / "final");
  result.test = metrics::build_test_set(
      expert, part, geom, ranges, cfg.evaluation.test_size,
      cfg.evaluation.floor_frac, cfg.evaluation.rejection_cap,
      derive_seed(seed, "test"), jobs);
  metrics::save_test_set(result.test, outdir / "final" / "test_set.jsonl");
  result.report = metrics::outcome_matching(*pi, result.test, part, geom, jobs);
  result.l1_loss = metrics::l1_test_loss(*pi, result.test);
  write_metric_files(outdir / "final", cfg, part, result.test, result.report,
                     result.l1_loss);
  result.final_policy = *pi;
  return result;
}

}  // namespace sgda::run
