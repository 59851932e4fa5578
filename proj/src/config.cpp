#include "rlbd/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace rlbd {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw std::invalid_argument("config: " + key + ": " + why);
}

long long to_int(const std::string& key, const std::string& v) {
  size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    bad(key, "expected an integer, got '" + v + "'");
  }
  if (used != v.size()) bad(key, "expected an integer, got '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  long long x = to_int(key, v);
  if (x < 0) bad(key, "must be non-negative");
  return static_cast<std::uint64_t>(x);
}

double to_real(const std::string& key, const std::string& v) {
  size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    bad(key, "expected a number, got '" + v + "'");
  }
  if (used != v.size()) bad(key, "expected a number, got '" + v + "'");
  return x;
}

}  // namespace

RunMode parse_mode(const std::string& name) {
  if (name == "clean") return RunMode::kClean;
  if (name == "BadRL-S") return RunMode::kBadrlS;
  if (name == "BadRL-W") return RunMode::kBadrlW;
  if (name == "BadRL-M") return RunMode::kBadrlM;
  if (name == "BadRL-CE") return RunMode::kBadrlCe;
  if (name == "TrojDRL-baseline") return RunMode::kBaseline;
  throw std::invalid_argument("config: unknown mode '" + name + "'");
}

const char* mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::kClean: return "clean";
    case RunMode::kBadrlS: return "BadRL-S";
    case RunMode::kBadrlW: return "BadRL-W";
    case RunMode::kBadrlM: return "BadRL-M";
    case RunMode::kBadrlCe: return "BadRL-CE";
    case RunMode::kBaseline: return "TrojDRL-baseline";
  }
  return "?";
}

void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "env") cfg.env_id = value;
  else if (key == "env.height") cfg.env_params.height = (int)to_int(key, value);
  else if (key == "env.width") cfg.env_params.width = (int)to_int(key, value);
  else if (key == "env.horizon") cfg.env_params.horizon = (int)to_int(key, value);
  else if (key == "env.drift") cfg.env_params.drift = (int)to_int(key, value);
  else if (key == "mode") cfg.mode = parse_mode(value);
  else if (key == "seed") cfg.seed = to_u64(key, value);
  else if (key == "total_steps") cfg.total_steps = to_u64(key, value);
  else if (key == "warmup_fraction") cfg.warmup_fraction = to_real(key, value);
  else if (key == "epsilon") cfg.epsilon = to_real(key, value);
  else if (key == "top_k") cfg.top_k = to_real(key, value);
  else if (key == "eta") cfg.eta = to_real(key, value);
  else if (key == "target_action") cfg.target_action = (int)to_int(key, value);
  else if (key == "source_action") cfg.source_action = (int)to_int(key, value);
  else if (key == "trigger.source") cfg.trigger_source = value;
  else if (key == "trigger.row") cfg.trigger_row = (int)to_int(key, value);
  else if (key == "trigger.col") cfg.trigger_col = (int)to_int(key, value);
  else if (key == "trigger.rows") cfg.trigger_rows = (int)to_int(key, value);
  else if (key == "trigger.cols") cfg.trigger_cols = (int)to_int(key, value);
  else if (key == "trigger.mi_generations") cfg.mi_generations = (int)to_int(key, value);
  else if (key == "trigger.mi_lambda") cfg.mi_lambda = to_real(key, value);
  else if (key == "trigger.ce_iterations") cfg.ce_iterations = (int)to_int(key, value);
  else if (key == "trigger.ce_step") cfg.ce_step = to_real(key, value);
  else if (key == "victim.hidden") cfg.victim.hidden = (int)to_int(key, value);
  else if (key == "victim.lr") cfg.victim.lr = to_real(key, value);
  else if (key == "victim.value_coef") cfg.victim.value_coef = to_real(key, value);
  else if (key == "victim.entropy_coef") cfg.victim.entropy_coef = to_real(key, value);
  else if (key == "victim.grad_clip") cfg.victim.grad_clip = to_real(key, value);
  else if (key == "attacker.q_source") cfg.q_source = value;
  else if (key == "attacker.pretrain_max_steps") cfg.pretrain_max_steps = to_u64(key, value);
  else if (key == "attacker.quality") cfg.pretrain_quality = to_real(key, value);
  else if (key == "attacker.rollouts") cfg.attacker_rollouts = (int)to_int(key, value);
  else if (key == "baseline.period") cfg.baseline_period = to_u64(key, value);
  else if (key == "baseline.test_cap") cfg.baseline_test_cap = to_u64(key, value);
  else if (key == "eval.n_seeds") cfg.eval_seeds = (int)to_int(key, value);
  else if (key == "eval.n_episodes") cfg.eval_episodes = (int)to_int(key, value);
  else if (key == "eval.curve_points") cfg.curve_points = (int)to_int(key, value);
  else if (key == "eval.curve_episodes") cfg.curve_episodes = (int)to_int(key, value);
  else if (key == "out") cfg.out = value;
  else bad(key, "unknown key");
}

void ExperimentConfig::validate() const {
  if (env_id != "catchball" && env_id != "goalgrid" && env_id != "chain3")
    bad("env", "unknown environment '" + env_id + "'");
  if (total_steps < 1) bad("total_steps", "must be >= 1");
  if (warmup_fraction < 0.0 || warmup_fraction > 0.5)
    bad("warmup_fraction", "must be in [0, 0.5]");
  if (epsilon <= 0.0 || epsilon > 0.05)
    bad("epsilon", "must be in (0, 0.05]");
  if (top_k <= 0.0 || top_k > 100.0) bad("top_k", "must be in (0, 100]");
  if (eta < 0.0) bad("eta", "must be >= 0 (0 derives from the environment)");
  if (trigger_source != "manual" && trigger_source != "tune-mi" &&
      trigger_source != "tune-ce")
    bad("trigger.source", "must be manual, tune-mi, or tune-ce");
  if (trigger_rows < 1 || trigger_cols < 1 || trigger_row < 0 || trigger_col < 0)
    bad("trigger.row/col/rows/cols", "patch must be non-empty and in-bounds");
  if (mi_generations < 0) bad("trigger.mi_generations", "must be >= 0");
  if (mi_lambda < 1.0) bad("trigger.mi_lambda", "must be >= 1");
  if (ce_iterations < 0) bad("trigger.ce_iterations", "must be >= 0");
  if (ce_step <= 0.0) bad("trigger.ce_step", "must be > 0");
  if (victim.hidden < 1) bad("victim.hidden", "must be >= 1");
  if (victim.lr <= 0.0) bad("victim.lr", "must be > 0");
  if (victim.value_coef < 0.0) bad("victim.value_coef", "must be >= 0");
  if (victim.entropy_coef < 0.0) bad("victim.entropy_coef", "must be >= 0");
  if (victim.grad_clip <= 0.0) bad("victim.grad_clip", "must be > 0");
  if (q_source != "exact" && q_source != "rollout")
    bad("attacker.q_source", "must be exact or rollout");
  if (pretrain_quality <= 0.0 || pretrain_quality > 1.0)
    bad("attacker.quality", "must be in (0, 1]");
  if (attacker_rollouts < 1) bad("attacker.rollouts", "must be >= 1");
  if (eval_seeds < 1) bad("eval.n_seeds", "must be >= 1");
  if (eval_episodes < 1) bad("eval.n_episodes", "must be >= 1");
  if (curve_points < 2) bad("eval.curve_points", "must be >= 2");
  if (curve_episodes < 1) bad("eval.curve_episodes", "must be >= 1");
  // mode-trigger compatibility
  if (mode == RunMode::kBadrlM && trigger_source != "manual")
    bad("trigger.source", "BadRL-M is the manual-trigger ablation; tuning "
                          "is not allowed");
  if (mode == RunMode::kBadrlCe && trigger_source != "tune-ce")
    bad("trigger.source", "BadRL-CE requires trigger.source = tune-ce");
  if (mode == RunMode::kBaseline && trigger_source != "manual")
    bad("trigger.source", "the uniform baseline uses a fixed manual trigger");
}

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::set<std::string> seen;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                  ": empty key");
    }
    if (!seen.insert(key).second) bad(key, "duplicate key");
    apply_config_entry(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["env"] = cfg.env_id;
  j["env.height"] = cfg.env_params.height;
  j["env.width"] = cfg.env_params.width;
  j["env.horizon"] = cfg.env_params.horizon;
  j["env.drift"] = cfg.env_params.drift;
  j["mode"] = mode_name(cfg.mode);
  j["seed"] = cfg.seed;
  j["total_steps"] = cfg.total_steps;
  j["warmup_fraction"] = cfg.warmup_fraction;
  j["epsilon"] = cfg.epsilon;
  j["top_k"] = cfg.top_k;
  j["eta"] = cfg.eta;
  j["target_action"] = cfg.target_action;
  j["source_action"] = cfg.source_action;
  j["trigger.source"] = cfg.trigger_source;
  j["trigger.row"] = cfg.trigger_row;
  j["trigger.col"] = cfg.trigger_col;
  j["trigger.rows"] = cfg.trigger_rows;
  j["trigger.cols"] = cfg.trigger_cols;
  j["trigger.mi_generations"] = cfg.mi_generations;
  j["trigger.mi_lambda"] = cfg.mi_lambda;
  j["trigger.ce_iterations"] = cfg.ce_iterations;
  j["trigger.ce_step"] = cfg.ce_step;
  j["victim.hidden"] = cfg.victim.hidden;
  j["victim.lr"] = cfg.victim.lr;
  j["victim.value_coef"] = cfg.victim.value_coef;
  j["victim.entropy_coef"] = cfg.victim.entropy_coef;
  j["victim.grad_clip"] = cfg.victim.grad_clip;
  j["attacker.q_source"] = cfg.q_source;
  j["attacker.pretrain_max_steps"] = cfg.pretrain_max_steps;
  j["attacker.quality"] = cfg.pretrain_quality;
  j["attacker.rollouts"] = cfg.attacker_rollouts;
  j["baseline.period"] = cfg.baseline_period;
  j["baseline.test_cap"] = cfg.baseline_test_cap;
  j["eval.n_seeds"] = cfg.eval_seeds;
  j["eval.n_episodes"] = cfg.eval_episodes;
  j["eval.curve_points"] = cfg.curve_points;
  j["eval.curve_episodes"] = cfg.curve_episodes;
  j["out"] = cfg.out;
  return j.dump(2);
}

}  // namespace rlbd
