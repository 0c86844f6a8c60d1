// Operator entry point: train models, run plain simulations, evaluate
// checkpoints, benchmark rollout throughput, and export trained gains.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gridtune/checkpoint.hpp"
#include "gridtune/config.hpp"
#include "gridtune/env.hpp"
#include "gridtune/errors.hpp"
#include "gridtune/metrics.hpp"
#include "gridtune/plugin_loader.hpp"
#include "gridtune/rollout.hpp"
#include "gridtune/train.hpp"

namespace {

using namespace gridtune;

std::string out_root() {
  const char* root = std::getenv("GRIDTUNE_OUT_ROOT");
  return root != nullptr && root[0] != '\0' ? root : "runs";
}

struct TrainArgs {
  std::string model;
  std::string config_path;
  std::string out_dir;
  std::string plugin_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<long> iterations;
  std::optional<long> n_steps;
};

RunConfig resolve_train_config(const TrainArgs& args) {
  RunConfig cfg;
  if (!args.config_path.empty()) {
    cfg = load_run_config(args.config_path);
    if (!args.model.empty() && parse_variant(args.model) != cfg.variant)
      throw ConfigError("--model disagrees with the variant in " + args.config_path);
  } else {
    cfg = default_run_config(
        args.model.empty() ? Variant::fixed_gain : parse_variant(args.model));
  }
  if (args.seed) cfg.ppo.seed = *args.seed;
  if (args.workers) cfg.workers = *args.workers;
  if (args.iterations) cfg.ppo.total_iterations = *args.iterations;
  if (args.n_steps) cfg.ppo.n_steps = *args.n_steps;
  if (!args.plugin_path.empty()) cfg.plugin_path = args.plugin_path;
  if (!args.out_dir.empty())
    cfg.out_dir = args.out_dir;
  else if (cfg.out_dir.empty())
    cfg.out_dir = out_root() + "/" + variant_name(cfg.variant) + "_seed" +
                  std::to_string(cfg.ppo.seed);
  return cfg;
}

int cmd_train(const TrainArgs& args) {
  const RunConfig cfg = resolve_train_config(args);
  const TrainResult result = train(cfg, std::cout);
  std::cout << "stats=" << result.stats_path << "\n";
  std::cout << "checkpoint=" << result.final_checkpoint << "\n";
  return 0;
}

struct SimArgs {
  double kp = 1.0;
  double ki = 5.0;
  std::string trace_path;
  std::string config_path;
  std::optional<double> episode_length;
};

int cmd_sim(const SimArgs& args) {
  if (args.kp < 0.0 || args.ki < 0.0)
    throw UsageError("sim: gains must be nonnegative");

  RunConfig cfg = args.config_path.empty()
                      ? default_run_config(Variant::adaptive_gain)
                      : load_run_config(args.config_path);
  cfg.variant = Variant::adaptive_gain;
  cfg.env.variant = Variant::adaptive_gain;
  if (args.episode_length) cfg.env.episode_length = *args.episode_length;
  // Arbitrary nonnegative gains are simulatable; widen the clamp if needed.
  cfg.env.kp_max = std::max(cfg.env.kp_max, args.kp);
  cfg.env.ki_max = std::max(cfg.env.ki_max, args.ki);
  cfg.plant.validate();
  cfg.env.validate(cfg.plant);

  Environment env(cfg.plant, cfg.env);
  std::optional<TraceWriter> trace;
  if (!args.trace_path.empty()) trace.emplace(args.trace_path);

  std::vector<double> t_win, p_win;
  double vmag_min = 1e30, vmag_max = -1e30;
  bool terminated = false;

  env.reset(0);
  while (env.alive()) {
    const StepResult r = env.step(Vec2{args.kp, args.ki});
    const TraceRow row = trace_row(env, r);
    if (trace) trace->write(row);
    if (row.t >= cfg.plant.connect_time) {
      t_win.push_back(row.t);
      p_win.push_back(row.p);
    }
    if (row.t >= 0.3) {  // past black-start buildup
      const double vmag = std::sqrt(row.vd * row.vd + row.vq * row.vq);
      vmag_min = std::min(vmag_min, vmag);
      vmag_max = std::max(vmag_max, vmag);
    }
    terminated = terminated || r.terminated;
  }

  const TransientMetrics m = compute_metrics(t_win, p_win, cfg.env.pref);
  std::printf("p_final=%.6g\n", p_win.empty() ? 0.0 : p_win.back());
  std::printf("overshoot_pct=%.6g\n", m.overshoot_pct);
  std::printf("settling_time_s=%.6g\n", m.settling_time_s);
  std::printf("itae=%.6g\n", m.itae);
  std::printf("settled=%d\n", m.settled ? 1 : 0);
  std::printf("vmag_min=%.6g\n", vmag_min);
  std::printf("vmag_max=%.6g\n", vmag_max);
  std::printf("terminated=%d\n", terminated ? 1 : 0);
  return 0;
}

struct EvalArgs {
  std::string checkpoint;
  std::string config_path;
  std::string trace_dir;
  int episodes = 1;
};

int cmd_eval(const EvalArgs& args) {
  if (args.episodes < 1) throw UsageError("eval: episodes must be >= 1");
  LoadedCheckpoint loaded = load_checkpoint(args.checkpoint);
  Agent& agent = *loaded.agent;

  RunConfig cfg = args.config_path.empty()
                      ? default_run_config(agent.variant())
                      : load_run_config(args.config_path);
  if (cfg.variant != agent.variant())
    throw ConfigError("eval: config variant does not match the checkpoint");
  cfg.plant.validate();
  cfg.env.validate(cfg.plant);

  std::optional<PiGains> fixed_gains;
  if (agent.variant() == Variant::fixed_gain) fixed_gains = export_gains(agent);

  namespace fs = std::filesystem;
  if (!args.trace_dir.empty()) fs::create_directories(args.trace_dir);

  std::array<double, 2> mean{};
  double reward_sum_all = 0.0;
  std::vector<double> t_win, p_win;
  std::vector<double> kp_series, ki_series, kp_transient;

  for (int e = 0; e < args.episodes; ++e) {
    Environment env(cfg.plant, cfg.env);
    auto obs = env.reset(static_cast<std::uint64_t>(e));
    std::optional<TraceWriter> trace;
    if (!args.trace_dir.empty())
      trace.emplace(args.trace_dir + "/episode_" + std::to_string(e) + ".csv");

    double reward_sum = 0.0;
    while (env.alive()) {
      agent.policy_mean(obs.data(), mean.data());
      Vec2 action{mean[0], mean[1]};
      if (agent.squashed())
        action = Vec2{squash(mean[0], agent.bound(0)),
                      squash(mean[1], agent.bound(1))};
      const StepResult r = env.step(action);
      obs = r.obs;
      reward_sum += r.reward;

      TraceRow row = trace_row(env, r);
      if (fixed_gains) {
        row.kp = fixed_gains->kp;
        row.ki = fixed_gains->ki;
      }
      if (trace) trace->write(row);

      if (e == 0) {
        if (row.t >= cfg.plant.connect_time) {
          t_win.push_back(row.t);
          p_win.push_back(row.p);
        }
        kp_series.push_back(row.kp);
        ki_series.push_back(row.ki);
        const bool in_transient =
            (row.t >= cfg.plant.connect_time &&
             row.t <= cfg.plant.connect_time + 0.1) ||
            (row.t >= cfg.plant.load_step_time &&
             row.t <= cfg.plant.load_step_time + 0.1);
        if (in_transient) kp_transient.push_back(row.kp);
      }
    }
    reward_sum_all += reward_sum;
    std::printf("episode_%d_reward=%.6g\n", e, reward_sum);
  }

  std::printf("mean_reward=%.6g\n", reward_sum_all / args.episodes);
  const TransientMetrics m = compute_metrics(t_win, p_win, cfg.env.pref);
  std::printf("overshoot_pct=%.6g\n", m.overshoot_pct);
  std::printf("settling_time_s=%.6g\n", m.settling_time_s);
  std::printf("itae=%.6g\n", m.itae);
  std::printf("settled=%d\n", m.settled ? 1 : 0);

  if (agent.variant() == Variant::adaptive_gain && !kp_series.empty()) {
    const double kp_mean =
        std::accumulate(kp_series.begin(), kp_series.end(), 0.0) /
        static_cast<double>(kp_series.size());
    const auto [kp_lo, kp_hi] =
        std::minmax_element(kp_series.begin(), kp_series.end());
    const double kp_tr_min =
        kp_transient.empty() ? *kp_lo
                             : *std::min_element(kp_transient.begin(),
                                                 kp_transient.end());
    std::printf("kp_mean=%.6g\n", kp_mean);
    std::printf("kp_min=%.6g\n", *kp_lo);
    std::printf("kp_max=%.6g\n", *kp_hi);
    std::printf("kp_transient_min=%.6g\n", kp_tr_min);
    std::printf("kp_transient_min_over_mean=%.6g\n",
                kp_mean != 0.0 ? kp_tr_min / kp_mean : 0.0);
  }
  return 0;
}

struct BenchArgs {
  std::string workers_list = "1,2,4";
  std::string config_path;
  std::string out_path;
  long steps_per_worker = 5000;
};

std::vector<int> parse_workers_list(const std::string& text) {
  std::vector<int> out;
  size_t pos = 0;
  while (pos <= text.size()) {
    const size_t comma = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, comma - pos);
    try {
      size_t used = 0;
      const int w = std::stoi(item, &used);
      if (used != item.size() || w < 1) throw std::invalid_argument(item);
      out.push_back(w);
    } catch (const std::exception&) {
      throw UsageError("bench: malformed workers list entry '" + item + "'");
    }
    pos = comma + 1;
    if (comma == text.size()) break;
  }
  if (out.empty()) throw UsageError("bench: workers list is empty");
  return out;
}

int cmd_bench(const BenchArgs& args) {
  const std::vector<int> workers = parse_workers_list(args.workers_list);
  if (args.steps_per_worker < 1)
    throw UsageError("bench: steps-per-worker must be >= 1");

  RunConfig cfg = args.config_path.empty()
                      ? default_run_config(Variant::fixed_gain)
                      : load_run_config(args.config_path);
  cfg.plant.validate();
  cfg.env.validate(cfg.plant);

  std::shared_ptr<PluginLibrary> plugin;
  std::string plugin_doc;
  if (!cfg.plugin_path.empty()) {
    plugin = PluginLibrary::open(cfg.plugin_path);
    plugin_doc = run_config_json(cfg);
  }

  const auto agent = make_agent(cfg.variant, cfg.plant, cfg.env, cfg.ppo.seed);

  std::string csv = "workers,steps_per_second\n";
  for (const int w : workers) {
    EnvFactory factory;
    if (plugin)
      factory = [&plugin, &plugin_doc]() { return plugin->create_env(plugin_doc); };
    else
      factory = [&cfg]() -> std::unique_ptr<RolloutEnv> {
        return std::make_unique<InProcessEnv>(cfg.plant, cfg.env);
      };
    WorkerPoolConfig pool_cfg;
    pool_cfg.n_workers = w;
    pool_cfg.base_seed = cfg.ppo.seed;
    WorkerPool pool(pool_cfg, factory);

    const long n_steps = args.steps_per_worker * w;
    const bool parallel = w > 1;
    measure_steps_per_second(pool, *agent, n_steps, cfg.ppo.gamma, parallel);  // warmup
    const double sps =
        measure_steps_per_second(pool, *agent, n_steps, cfg.ppo.gamma, parallel);
    char line[64];
    std::snprintf(line, sizeof line, "%d,%.1f\n", w, sps);
    csv += line;
  }

  std::fputs(csv.c_str(), stdout);
  if (!args.out_path.empty()) {
    std::ofstream f(args.out_path, std::ios::binary);
    if (!f) throw RuntimeFault("bench: cannot write " + args.out_path);
    f << csv;
  }
  return 0;
}

int cmd_export_gains(const std::string& checkpoint) {
  LoadedCheckpoint loaded = load_checkpoint(checkpoint);
  const PiGains gains = export_gains(*loaded.agent);
  std::printf("kp=%.10g, ki=%.10g\n", gains.kp, gains.ki);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controller-tuning toolkit for a two-inverter microgrid"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model with PPO");
  train_cmd->add_option("--model", train_args.model, "fixed or adaptive")
      ->check(CLI::IsMember({"fixed", "adaptive", "fixed_gain", "adaptive_gain"}));
  train_cmd->add_option("--config", train_args.config_path, "Run config JSON");
  train_cmd->add_option("--seed", train_args.seed, "Training seed");
  train_cmd->add_option("--workers", train_args.workers, "Rollout workers");
  train_cmd->add_option("--iterations", train_args.iterations, "Training iterations");
  train_cmd->add_option("--n-steps", train_args.n_steps, "Rollout steps per iteration");
  train_cmd->add_option("--out", train_args.out_dir, "Output directory");
  train_cmd->add_option("--plugin", train_args.plugin_path, "Environment plugin library");

  SimArgs sim_args;
  auto* sim_cmd = app.add_subcommand("sim", "Closed-loop PI simulation");
  sim_cmd->add_option("--kp", sim_args.kp, "Proportional gain")->required();
  sim_cmd->add_option("--ki", sim_args.ki, "Integral gain")->required();
  sim_cmd->add_option("--trace", sim_args.trace_path, "Trace CSV path");
  sim_cmd->add_option("--config", sim_args.config_path, "Run config JSON");
  sim_cmd->add_option("--episode-length", sim_args.episode_length, "Seconds");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint deterministically");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint path")->required();
  eval_cmd->add_option("--config", eval_args.config_path, "Run config JSON");
  eval_cmd->add_option("--episodes", eval_args.episodes, "Episode count");
  eval_cmd->add_option("--trace-dir", eval_args.trace_dir, "Per-episode trace directory");

  BenchArgs bench_args;
  auto* bench_cmd = app.add_subcommand("bench", "Rollout throughput benchmark");
  bench_cmd->add_option("--workers-list", bench_args.workers_list, "e.g. 1,2,4");
  bench_cmd->add_option("--steps-per-worker", bench_args.steps_per_worker, "Steps per worker");
  bench_cmd->add_option("--config", bench_args.config_path, "Run config JSON");
  bench_cmd->add_option("--out", bench_args.out_path, "Also write the CSV here");

  std::string export_checkpoint;
  auto* export_cmd = app.add_subcommand("export-gains", "Print deployable PI gains");
  export_cmd->add_option("--checkpoint", export_checkpoint, "Checkpoint path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) return cmd_train(train_args);
    if (*sim_cmd) return cmd_sim(sim_args);
    if (*eval_cmd) return cmd_eval(eval_args);
    if (*bench_cmd) return cmd_bench(bench_args);
    if (*export_cmd) return cmd_export_gains(export_checkpoint);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
