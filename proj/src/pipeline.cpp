#include "vlmplan/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <set>
#include <thread>
#include <vector>

#include "vlmplan/toml_lite.hpp"
#include "vlmplan/util.hpp"

namespace vlmplan::pipeline {

const char* to_string(Modes modes) {
  return modes == Modes::OracleOnly ? "oracle_only" : "oracle+judge";
}

std::optional<Modes> modes_from_string(std::string_view s) {
  if (s == "oracle_only") return Modes::OracleOnly;
  if (s == "oracle+judge" || s == "oracle_judge") return Modes::OracleJudge;
  return std::nullopt;
}

void apply_config_file(RunConfig& config, const std::filesystem::path& path) {
  const nlohmann::json doc = toml::parse(util::read_file(path));

  if (doc.contains("backend")) {
    const auto& b = doc.at("backend");
    if (b.contains("kind")) {
      const auto kind = gateway::backend_kind_from_string(b.at("kind").get<std::string>());
      if (!kind) throw std::runtime_error(path.string() + ": unknown backend kind");
      config.backend.kind = *kind;
    }
    if (b.contains("endpoint")) config.backend.endpoint_url = b.at("endpoint").get<std::string>();
    if (b.contains("model")) config.backend.model_name = b.at("model").get<std::string>();
    if (b.contains("auth_env")) config.backend.auth_env_var = b.at("auth_env").get<std::string>();
    if (b.contains("temperature")) config.backend.temperature = b.at("temperature").get<double>();
    if (b.contains("max_tokens")) config.backend.max_tokens = b.at("max_tokens").get<int>();
    if (b.contains("timeout_seconds")) {
      config.backend.timeout_seconds = b.at("timeout_seconds").get<double>();
    }
    if (b.contains("max_retries")) config.backend.max_retries = b.at("max_retries").get<int>();
    if (b.contains("cassette")) {
      config.backend.cassette_path = b.at("cassette").get<std::string>();
    }
  }
  if (doc.contains("pool")) config.pool_file = doc.at("pool").get<std::string>();
  if (doc.contains("templates")) config.templates_dir = doc.at("templates").get<std::string>();
  if (doc.contains("out")) config.output_dir = doc.at("out").get<std::string>();
  if (doc.contains("parallel")) config.parallelism = doc.at("parallel").get<int>();
  if (doc.contains("modes")) {
    const auto modes = modes_from_string(doc.at("modes").get<std::string>());
    if (!modes) throw std::runtime_error(path.string() + ": unknown modes value");
    config.modes = *modes;
  }
  if (doc.contains("eval_frames")) config.eval_frame_count = doc.at("eval_frames").get<int>();
  if (doc.contains("strict_colocation")) {
    config.strict_colocation = doc.at("strict_colocation").get<bool>();
  }
  if (config.parallelism < 1) throw std::runtime_error(path.string() + ": parallel must be >= 1");
  if (config.eval_frame_count < 1) {
    throw std::runtime_error(path.string() + ": eval_frames must be >= 1");
  }
}

dsl::ActionPool resolve_pool(const RunConfig& config,
                             const std::optional<std::filesystem::path>& suite_pool_file) {
  if (config.pool_file) return dsl::ActionPool::load(*config.pool_file);
  if (suite_pool_file) return dsl::ActionPool::load(*suite_pool_file);
  return dsl::ActionPool::default_pool();
}

namespace {

prompt::PromptConfig prompt_config_for(const RunConfig& config) {
  prompt::PromptConfig pc;
  pc.eval_frame_count = config.eval_frame_count;
  pc.temperature_hint = config.backend.temperature;
  pc.templates_dir = config.templates_dir;
  return pc;
}

}  // namespace

CaseRunOutcome run_case(const dataset::CaseManifest& manifest, const dsl::ActionPool& pool,
                        const RunConfig& config, gateway::ChatBackend& backend) {
  CaseRunOutcome outcome;
  const prompt::PromptConfig prompt_config = prompt_config_for(config);
  const prompt::PromptBundle bundle = prompt::build_bundle(manifest, pool, prompt_config);
  const std::vector<gateway::ChatMessage> messages =
      prompt::render_messages(bundle, prompt::Phase::Plan);

  outcome.raw_reply = backend.send_chat(messages);
  util::write_file(config.output_dir / (manifest.id + ".reply.txt"), outcome.raw_reply);

  try {
    outcome.document = schema::parse_document(outcome.raw_reply);
  } catch (const schema::NoJsonFound& e) {
    outcome.status = CaseRunOutcome::Status::SchemaFailed;
    outcome.message = std::string("NoJsonFound: ") + e.what();
    return outcome;
  } catch (const schema::SchemaViolation& e) {
    outcome.status = CaseRunOutcome::Status::SchemaFailed;
    outcome.message = std::string("SchemaViolation: ") + e.what();
    return outcome;
  }
  util::write_file(config.output_dir / (manifest.id + ".plan.json"),
                   schema::serialize_document(*outcome.document) + "\n");

  dsl::TaskPlan plan;
  try {
    plan = schema::extract_plan(*outcome.document, pool);
  } catch (const schema::PlanExtractError& e) {
    outcome.status = CaseRunOutcome::Status::SchemaFailed;
    outcome.message = std::string("PlanExtractError: ") + e.what();
    return outcome;
  }

  world::SimConfig sim_config{config.strict_colocation};
  outcome.simulation = world::simulate_plan(manifest.initial_state, plan, sim_config);
  util::write_file(config.output_dir / (manifest.id + ".trace.json"),
                   world::trace_to_json(*outcome.simulation).dump(2) + "\n");

  eval::MatchResult result;
  result.case_id = manifest.id;
  result.dataset = manifest.dataset;
  result.oracle = eval::oracle_score(plan, manifest.ground_truth);
  result.simulation_ok = outcome.simulation->ok;
  if (!outcome.simulation->ok) {
    for (const world::Violation& v : outcome.simulation->violations) {
      result.violations.push_back("step " + std::to_string(outcome.simulation->failed_step) +
                                  ": " + world::to_string(v));
    }
  }
  if (config.modes == Modes::OracleJudge) {
    const eval::JudgeVerdict verdict =
        eval::judge_score(manifest, outcome.raw_reply, pool, prompt_config, backend);
    result.judge_score = verdict.score;
    result.judge_explanation = verdict.explanation;
  }
  util::write_file(config.output_dir / (manifest.id + ".result.json"),
                   eval::match_result_to_json(result).dump(2) + "\n");
  outcome.result = std::move(result);

  if (!outcome.simulation->ok) {
    outcome.status = CaseRunOutcome::Status::SimulationFailed;
    outcome.message = "simulation failed at step " +
                      std::to_string(outcome.simulation->failed_step);
    return outcome;
  }
  outcome.status = CaseRunOutcome::Status::Ok;
  return outcome;
}

int cmd_plan(const std::filesystem::path& case_path, const RunConfig& config, std::ostream& err) {
  try {
    const dsl::ActionPool pool = resolve_pool(config, std::nullopt);
    const dataset::CaseManifest manifest = dataset::load_case(case_path, pool);
    const std::unique_ptr<gateway::ChatBackend> backend = gateway::make_backend(config.backend);
    const CaseRunOutcome outcome = run_case(manifest, pool, config, *backend);
    switch (outcome.status) {
      case CaseRunOutcome::Status::Ok:
        return 0;
      case CaseRunOutcome::Status::SchemaFailed:
        err << "error: " << outcome.message << "\n";
        return 2;
      case CaseRunOutcome::Status::SimulationFailed:
        err << "error: " << outcome.message << "\n";
        return 3;
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

namespace {

struct BatchSlot {
  std::optional<eval::MatchResult> result;
  std::optional<eval::CaseError> error;
};

}  // namespace

int cmd_batch(const std::filesystem::path& suite_dir, const RunConfig& config, std::ostream& err) {
  std::vector<eval::MatchResult> results;
  std::vector<eval::CaseError> errors;

  dsl::ActionPool pool;
  std::vector<std::filesystem::path> manifests;
  try {
    pool = resolve_pool(config, dataset::find_pool_file(suite_dir));
    if (!std::filesystem::is_directory(suite_dir)) {
      throw std::runtime_error("suite directory not found: " + suite_dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(suite_dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".toml") {
        manifests.push_back(entry.path());
      }
    }
    std::sort(manifests.begin(), manifests.end());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  // Load sequentially so duplicate-id detection is deterministic; per-case
  // failures become error rows instead of aborting the batch.
  std::vector<dataset::CaseManifest> cases;
  std::set<std::string> seen_ids;
  for (const auto& path : manifests) {
    try {
      dataset::CaseManifest m = dataset::load_case(path, pool);
      if (!seen_ids.insert(m.id).second) {
        errors.push_back({path.stem().string(), "",
                          "duplicate case id '" + m.id + "' in " + path.string()});
        continue;
      }
      cases.push_back(std::move(m));
    } catch (const std::exception& e) {
      errors.push_back({path.stem().string(), "", e.what()});
    }
  }

  std::unique_ptr<gateway::ChatBackend> backend;
  try {
    backend = gateway::make_backend(config.backend);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  std::vector<BatchSlot> slots(cases.size());
  std::atomic<size_t> next{0};
  const size_t worker_count =
      std::min<size_t>(std::max(1, config.parallelism), std::max<size_t>(cases.size(), 1));

  auto worker = [&]() {
    while (true) {
      const size_t i = next.fetch_add(1);
      if (i >= cases.size()) break;
      try {
        CaseRunOutcome outcome = run_case(cases[i], pool, config, *backend);
        if (outcome.result) {
          slots[i].result = std::move(outcome.result);
        } else {
          slots[i].error = eval::CaseError{cases[i].id, cases[i].dataset, outcome.message};
        }
      } catch (const std::exception& e) {
        slots[i].error = eval::CaseError{cases[i].id, cases[i].dataset, e.what()};
      }
    }
  };

  std::vector<std::thread> threads;
  for (size_t t = 0; t < worker_count; ++t) threads.emplace_back(worker);
  for (std::thread& t : threads) t.join();

  for (BatchSlot& slot : slots) {
    if (slot.result) results.push_back(std::move(*slot.result));
    if (slot.error) errors.push_back(std::move(*slot.error));
  }

  const eval::EvaluationReport report = eval::aggregate(std::move(results), errors);
  util::write_file(config.output_dir / "report.json", eval::report_to_json(report).dump(2) + "\n");
  util::write_file(config.output_dir / "report.csv", eval::report_to_csv(report));
  util::write_file(config.output_dir / "summary.txt", eval::report_summary(report));

  if (!errors.empty()) {
    for (const eval::CaseError& e : errors) {
      err << "case error: " << e.case_id << ": " << e.message << "\n";
    }
    return 4;
  }
  return 0;
}

int cmd_report(const std::filesystem::path& results_dir, std::ostream& out, std::ostream& err) {
  if (!std::filesystem::is_directory(results_dir)) {
    err << "error: NoResultsFound: not a directory: " << results_dir.string() << "\n";
    return 1;
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(results_dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() > 12 &&
        name.substr(name.size() - 12) == ".result.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    err << "error: NoResultsFound: no *.result.json under " << results_dir.string() << "\n";
    return 1;
  }

  std::vector<eval::MatchResult> results;
  for (const auto& file : files) {
    try {
      results.push_back(eval::match_result_from_json(nlohmann::json::parse(util::read_file(file))));
    } catch (const std::exception& e) {
      err << "error: malformed result file " << file.string() << ": " << e.what() << "\n";
      return 1;
    }
  }

  const eval::EvaluationReport report = eval::aggregate(std::move(results));
  util::write_file(results_dir / "report.json", eval::report_to_json(report).dump(2) + "\n");
  util::write_file(results_dir / "report.csv", eval::report_to_csv(report));
  util::write_file(results_dir / "summary.txt", eval::report_summary(report));
  out << eval::report_summary(report);
  return 0;
}

}  // namespace vlmplan::pipeline
