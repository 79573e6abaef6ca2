#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "vlmplan/pipeline.hpp"

namespace {

struct Flags {
  std::string target;  // case file / suite dir / results dir
  std::optional<std::string> config_file;
  std::optional<std::string> backend;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::optional<std::string> cassette;
  std::optional<std::string> auth_env;
  std::optional<std::string> pool;
  std::optional<std::string> templates;
  std::optional<std::string> out;
  std::optional<std::string> modes;
  std::optional<int> parallel;
  std::optional<int> eval_frames;
  std::optional<int> max_tokens;
  std::optional<int> max_retries;
  std::optional<double> temperature;
  std::optional<double> timeout;
  std::optional<bool> strict_colocation;
};

void add_common_options(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config_file, "Config file (default: ./harness.toml if present)");
  cmd->add_option("--backend", flags.backend, "Chat backend: http, mock, or replay")
      ->check(CLI::IsMember({"http", "mock", "replay"}));
  cmd->add_option("--endpoint", flags.endpoint, "Chat-completions endpoint URL (http backend)");
  cmd->add_option("--model", flags.model, "Model name sent in requests");
  cmd->add_option("--cassette", flags.cassette,
                  "Cassette file (replay: read; http: record; mock: seed responses)");
  cmd->add_option("--auth-env", flags.auth_env,
                  "Environment variable holding the bearer token (empty = no auth header)");
  cmd->add_option("--pool", flags.pool, "Action pool JSON file (default: built-in pool)");
  cmd->add_option("--templates", flags.templates, "Prompt template directory");
  cmd->add_option("--out", flags.out, "Output directory (default: out)");
  cmd->add_option("--parallel", flags.parallel, "Worker count for batch runs")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--modes", flags.modes, "Scoring modes: oracle_only or oracle+judge")
      ->check(CLI::IsMember({"oracle_only", "oracle+judge"}));
  cmd->add_option("--eval-frames", flags.eval_frames,
                  "Ground-truth frames sampled for the judge turn")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--temperature", flags.temperature, "Sampling temperature (default 0)");
  cmd->add_option("--max-tokens", flags.max_tokens, "Response token cap");
  cmd->add_option("--timeout", flags.timeout, "HTTP timeout in seconds");
  cmd->add_option("--retries", flags.max_retries, "Max retries for transient HTTP failures");
  cmd->add_flag("--strict-colocation,!--no-strict-colocation", flags.strict_colocation,
                "Require the hand at an object before grasp/push/open/close (default on)");
}

vlmplan::pipeline::RunConfig build_config(const Flags& flags) {
  vlmplan::pipeline::RunConfig config;

  std::filesystem::path config_path;
  if (flags.config_file) {
    config_path = *flags.config_file;
    if (!std::filesystem::exists(config_path)) {
      throw std::runtime_error("config file not found: " + config_path.string());
    }
  } else if (std::filesystem::exists("harness.toml")) {
    config_path = "harness.toml";
  }
  if (!config_path.empty()) vlmplan::pipeline::apply_config_file(config, config_path);

  if (flags.backend) {
    config.backend.kind = *vlmplan::gateway::backend_kind_from_string(*flags.backend);
  }
  if (flags.endpoint) config.backend.endpoint_url = *flags.endpoint;
  if (flags.model) config.backend.model_name = *flags.model;
  if (flags.cassette) config.backend.cassette_path = *flags.cassette;
  if (flags.auth_env) config.backend.auth_env_var = *flags.auth_env;
  if (flags.temperature) config.backend.temperature = *flags.temperature;
  if (flags.max_tokens) config.backend.max_tokens = *flags.max_tokens;
  if (flags.timeout) config.backend.timeout_seconds = *flags.timeout;
  if (flags.max_retries) config.backend.max_retries = *flags.max_retries;
  if (flags.pool) config.pool_file = *flags.pool;
  if (flags.templates) config.templates_dir = *flags.templates;
  if (flags.out) config.output_dir = *flags.out;
  if (flags.parallel) config.parallelism = *flags.parallel;
  if (flags.modes) config.modes = *vlmplan::pipeline::modes_from_string(*flags.modes);
  if (flags.eval_frames) config.eval_frame_count = *flags.eval_frames;
  if (flags.strict_colocation) config.strict_colocation = *flags.strict_colocation;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vlmplan: multimodal LLM task-planning harness"};
  app.require_subcommand(1);

  Flags plan_flags;
  CLI::App* plan = app.add_subcommand("plan", "Plan a single case and validate the result");
  plan->add_option("case", plan_flags.target, "Case manifest (.toml)")->required();
  add_common_options(plan, plan_flags);

  Flags batch_flags;
  CLI::App* batch = app.add_subcommand("batch", "Plan and evaluate every case in a suite");
  batch->add_option("suite", batch_flags.target, "Directory of case manifests")->required();
  add_common_options(batch, batch_flags);

  Flags report_flags;
  CLI::App* report = app.add_subcommand("report", "Re-aggregate stored results");
  report->add_option("results", report_flags.target, "Directory holding *.result.json")->required();
  add_common_options(report, report_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (plan->parsed()) {
      return vlmplan::pipeline::cmd_plan(plan_flags.target, build_config(plan_flags), std::cerr);
    }
    if (batch->parsed()) {
      return vlmplan::pipeline::cmd_batch(batch_flags.target, build_config(batch_flags), std::cerr);
    }
    if (report->parsed()) {
      return vlmplan::pipeline::cmd_report(report_flags.target, std::cout, std::cerr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
