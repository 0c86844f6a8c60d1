#include "gridtune/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>

#include "json.hpp"

#include "gridtune/errors.hpp"

namespace gridtune {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("config: unknown key '" + item.key() + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const std::string& where, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for '" + std::string(key) + "' in " +
                      where);
  }
}

void parse_plant(const json& j, PlantParams& p) {
  check_keys(j, "plant",
             {"f0", "dt_sim", "v_nom", "gfl_lf", "gfl_rf", "gfm_lf", "gfm_rf",
              "gfm_cf", "r_load", "droop_mp", "droop_mq", "droop_wf",
              "gfm_kpv", "gfm_kiv", "gfm_kpc", "gfm_kic", "vref_ramp_time",
              "pll_kp", "pll_ki", "dist_amp", "dist_order",
              "connect_time", "soft_start_time",
              "load_step_time", "load_step_factor", "load_step_tau",
              "cmd_limit"});
  read(j, "plant", "f0", p.f0);
  read(j, "plant", "dt_sim", p.dt_sim);
  read(j, "plant", "v_nom", p.v_nom);
  read(j, "plant", "gfl_lf", p.gfl_lf);
  read(j, "plant", "gfl_rf", p.gfl_rf);
  read(j, "plant", "gfm_lf", p.gfm_lf);
  read(j, "plant", "gfm_rf", p.gfm_rf);
  read(j, "plant", "gfm_cf", p.gfm_cf);
  read(j, "plant", "r_load", p.r_load);
  read(j, "plant", "droop_mp", p.droop_mp);
  read(j, "plant", "droop_mq", p.droop_mq);
  read(j, "plant", "droop_wf", p.droop_wf);
  read(j, "plant", "gfm_kpv", p.gfm_kpv);
  read(j, "plant", "gfm_kiv", p.gfm_kiv);
  read(j, "plant", "gfm_kpc", p.gfm_kpc);
  read(j, "plant", "gfm_kic", p.gfm_kic);
  read(j, "plant", "vref_ramp_time", p.vref_ramp_time);
  read(j, "plant", "pll_kp", p.pll_kp);
  read(j, "plant", "pll_ki", p.pll_ki);
  read(j, "plant", "dist_amp", p.dist_amp);
  read(j, "plant", "dist_order", p.dist_order);
  read(j, "plant", "connect_time", p.connect_time);
  read(j, "plant", "soft_start_time", p.soft_start_time);
  read(j, "plant", "load_step_time", p.load_step_time);
  read(j, "plant", "load_step_factor", p.load_step_factor);
  read(j, "plant", "load_step_tau", p.load_step_tau);
  read(j, "plant", "cmd_limit", p.cmd_limit);
}

void parse_env(const json& j, EnvConfig& e) {
  check_keys(j, "env",
             {"episode_length", "decimation", "pref", "qref", "obs_bound",
              "action_bound", "kp_max", "ki_max", "lpf_alpha",
              "termination_penalty", "fixed_weights", "adaptive_weights"});
  read(j, "env", "episode_length", e.episode_length);
  read(j, "env", "decimation", e.decimation);
  read(j, "env", "pref", e.pref);
  read(j, "env", "qref", e.qref);
  read(j, "env", "obs_bound", e.obs_bound);
  read(j, "env", "action_bound", e.action_bound);
  read(j, "env", "kp_max", e.kp_max);
  read(j, "env", "ki_max", e.ki_max);
  read(j, "env", "lpf_alpha", e.lpf_alpha);
  read(j, "env", "termination_penalty", e.termination_penalty);
  if (j.contains("fixed_weights")) {
    std::array<double, 6> w{};
    read(j, "env", "fixed_weights", w);
    e.fixed_weights = {w[0], w[1], w[2], w[3], w[4], w[5]};
  }
  if (j.contains("adaptive_weights")) {
    std::array<double, 4> w{};
    read(j, "env", "adaptive_weights", w);
    e.adaptive_weights = {w[0], w[1], w[2], w[3]};
  }
}

void parse_ppo(const json& j, PpoConfig& p) {
  check_keys(j, "ppo",
             {"learning_rate", "clip_range", "dynamic_schedule",
              "learning_rate_final", "clip_range_final", "n_steps",
              "batch_size", "n_epochs", "gamma", "gae_lambda", "ent_coef",
              "vf_coef", "max_grad_norm", "target_kl", "total_iterations",
              "seed", "checkpoint_every"});
  read(j, "ppo", "learning_rate", p.learning_rate);
  read(j, "ppo", "clip_range", p.clip_range);
  read(j, "ppo", "dynamic_schedule", p.dynamic_schedule);
  read(j, "ppo", "learning_rate_final", p.learning_rate_final);
  read(j, "ppo", "clip_range_final", p.clip_range_final);
  read(j, "ppo", "n_steps", p.n_steps);
  read(j, "ppo", "batch_size", p.batch_size);
  read(j, "ppo", "n_epochs", p.n_epochs);
  read(j, "ppo", "gamma", p.gamma);
  read(j, "ppo", "gae_lambda", p.gae_lambda);
  read(j, "ppo", "ent_coef", p.ent_coef);
  read(j, "ppo", "vf_coef", p.vf_coef);
  read(j, "ppo", "max_grad_norm", p.max_grad_norm);
  read(j, "ppo", "target_kl", p.target_kl);
  read(j, "ppo", "total_iterations", p.total_iterations);
  read(j, "ppo", "seed", p.seed);
  read(j, "ppo", "checkpoint_every", p.checkpoint_every);
}

}  // namespace

void RunConfig::validate() const {
  plant.validate();
  env.validate(plant);
  ppo.validate();
  if (workers < 1) throw ConfigError("config: workers must be >= 1");
  if (ppo.n_steps % workers != 0)
    throw ConfigError("config: workers must divide ppo.n_steps");
  if (env.variant != variant)
    throw ConfigError("config: env variant tag out of sync");
}

RunConfig default_run_config(Variant v) {
  RunConfig cfg;
  cfg.variant = v;
  cfg.env = default_env_config(v);
  cfg.ppo = default_ppo_config(v);
  return cfg;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  check_keys(j, "the top level",
             {"variant", "plant", "env", "ppo", "workers", "out_dir", "plugin"});

  std::string variant_tag = "fixed_gain";
  read(j, "the top level", "variant", variant_tag);
  RunConfig cfg = default_run_config(parse_variant(variant_tag));

  if (j.contains("plant")) parse_plant(j.at("plant"), cfg.plant);
  if (j.contains("env")) parse_env(j.at("env"), cfg.env);
  if (j.contains("ppo")) parse_ppo(j.at("ppo"), cfg.ppo);
  read(j, "the top level", "workers", cfg.workers);
  read(j, "the top level", "out_dir", cfg.out_dir);
  read(j, "the top level", "plugin", cfg.plugin_path);
  cfg.env.variant = cfg.variant;
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::ostringstream text;
  text << f.rdbuf();
  return parse_run_config(text.str());
}

std::string run_config_json(const RunConfig& cfg) {
  json j;
  j["variant"] = variant_name(cfg.variant);
  j["workers"] = cfg.workers;
  j["out_dir"] = cfg.out_dir;
  j["plugin"] = cfg.plugin_path;

  const PlantParams& p = cfg.plant;
  j["plant"] = {{"f0", p.f0},
                {"dt_sim", p.dt_sim},
                {"v_nom", p.v_nom},
                {"gfl_lf", p.gfl_lf},
                {"gfl_rf", p.gfl_rf},
                {"gfm_lf", p.gfm_lf},
                {"gfm_rf", p.gfm_rf},
                {"gfm_cf", p.gfm_cf},
                {"r_load", p.r_load},
                {"droop_mp", p.droop_mp},
                {"droop_mq", p.droop_mq},
                {"droop_wf", p.droop_wf},
                {"gfm_kpv", p.gfm_kpv},
                {"gfm_kiv", p.gfm_kiv},
                {"gfm_kpc", p.gfm_kpc},
                {"gfm_kic", p.gfm_kic},
                {"vref_ramp_time", p.vref_ramp_time},
                {"pll_kp", p.pll_kp},
                {"pll_ki", p.pll_ki},
                {"dist_amp", p.dist_amp},
                {"dist_order", p.dist_order},
                {"connect_time", p.connect_time},
                {"soft_start_time", p.soft_start_time},
                {"load_step_time", p.load_step_time},
                {"load_step_factor", p.load_step_factor},
                {"load_step_tau", p.load_step_tau},
                {"cmd_limit", p.cmd_limit}};

  const EnvConfig& e = cfg.env;
  j["env"] = {{"episode_length", e.episode_length},
              {"decimation", e.decimation},
              {"pref", e.pref},
              {"qref", e.qref},
              {"obs_bound", e.obs_bound},
              {"action_bound", e.action_bound},
              {"kp_max", e.kp_max},
              {"ki_max", e.ki_max},
              {"lpf_alpha", e.lpf_alpha},
              {"termination_penalty", e.termination_penalty},
              {"fixed_weights",
               {e.fixed_weights.q1, e.fixed_weights.q2, e.fixed_weights.q3,
                e.fixed_weights.q4, e.fixed_weights.q5, e.fixed_weights.q6}},
              {"adaptive_weights",
               {e.adaptive_weights.q1, e.adaptive_weights.q2,
                e.adaptive_weights.q3, e.adaptive_weights.q4}}};

  const PpoConfig& o = cfg.ppo;
  j["ppo"] = {{"learning_rate", o.learning_rate},
              {"clip_range", o.clip_range},
              {"dynamic_schedule", o.dynamic_schedule},
              {"learning_rate_final", o.learning_rate_final},
              {"clip_range_final", o.clip_range_final},
              {"n_steps", o.n_steps},
              {"batch_size", o.batch_size},
              {"n_epochs", o.n_epochs},
              {"gamma", o.gamma},
              {"gae_lambda", o.gae_lambda},
              {"ent_coef", o.ent_coef},
              {"vf_coef", o.vf_coef},
              {"max_grad_norm", o.max_grad_norm},
              {"target_kl", o.target_kl},
              {"total_iterations", o.total_iterations},
              {"seed", o.seed},
              {"checkpoint_every", o.checkpoint_every}};

  return j.dump(2) + "\n";
}

}  // namespace gridtune
