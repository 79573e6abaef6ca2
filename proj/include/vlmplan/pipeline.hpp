#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "vlmplan/dataset.hpp"
#include "vlmplan/evaluator.hpp"
#include "vlmplan/llm_gateway.hpp"
#include "vlmplan/plan_schema.hpp"
#include "vlmplan/prompt_engine.hpp"
#include "vlmplan/world_model.hpp"

namespace vlmplan::pipeline {

enum class Modes { OracleOnly, OracleJudge };

const char* to_string(Modes modes);
std::optional<Modes> modes_from_string(std::string_view s);

struct RunConfig {
  gateway::BackendConfig backend;
  std::optional<std::filesystem::path> pool_file;
  std::optional<std::filesystem::path> templates_dir;
  std::filesystem::path output_dir = "out";
  int parallelism = 4;
  Modes modes = Modes::OracleOnly;
  int eval_frame_count = 4;
  bool strict_colocation = true;
};

// Applies harness.toml settings onto config (file < flags; callers apply
// flag overrides afterwards). Throws on malformed files.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

// Pool precedence: explicit config pool file, then the suite's pool.json,
// then the built-in default pool.
dsl::ActionPool resolve_pool(const RunConfig& config,
                             const std::optional<std::filesystem::path>& suite_pool_file);

struct CaseRunOutcome {
  enum class Status { Ok, SchemaFailed, SimulationFailed };
  Status status = Status::Ok;
  std::string raw_reply;
  std::optional<schema::PlanDocument> document;
  std::optional<world::SimulationResult> simulation;
  std::optional<eval::MatchResult> result;
  std::string message;  // set when status != Ok
};

// One case through the full pipeline: prompt -> chat -> parse -> validate ->
// simulate -> score (judge phase when configured). Writes <id>.reply.txt,
// <id>.plan.json, and <id>.trace.json under output_dir as they become
// available. Gateway errors propagate as exceptions.
CaseRunOutcome run_case(const dataset::CaseManifest& manifest, const dsl::ActionPool& pool,
                        const RunConfig& config, gateway::ChatBackend& backend);

// Exit codes: 0 success, 1 load/transport error, 2 model-output schema
// failure, 3 simulation failure (artifacts still written).
int cmd_plan(const std::filesystem::path& case_path, const RunConfig& config, std::ostream& err);

// Runs every case with bounded parallelism, then aggregates. Per-case errors
// become report error rows and never abort the batch. Exit 0 when every case
// produced a MatchResult, 4 otherwise.
int cmd_batch(const std::filesystem::path& suite_dir, const RunConfig& config, std::ostream& err);

// Re-aggregates stored *.result.json files without re-running anything.
// Exit 1 (NoResultsFound) when the directory has none.
int cmd_report(const std::filesystem::path& results_dir, std::ostream& out, std::ostream& err);

}  // namespace vlmplan::pipeline
