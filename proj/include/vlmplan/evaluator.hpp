#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlmplan/dataset.hpp"
#include "vlmplan/llm_gateway.hpp"
#include "vlmplan/plan_dsl.hpp"
#include "vlmplan/prompt_engine.hpp"

namespace vlmplan::eval {

// Canonical comparison form: lowercased names and args, pick_up collapsed to
// grasp, put_down(o, l) expanded to move_hand(l) + release(o).
std::vector<dsl::ActionCall> normalize_plan(const dsl::TaskPlan& plan);

// Deterministic alignment score in [0, 1]:
//   0.5 * LCS(names) / max(|cand|, |truth|) + 0.5 * ArgAgree,
// where ArgAgree is the mean, over the LCS-matched pairs, of
// (matching argument positions / max arity). Among maximum-length common
// subsequences the one maximizing total argument agreement is used. Both
// plans empty scores 1; exactly one empty scores 0; zero-arity pairs agree
// fully. Symmetric, and 1.0 on identical plans.
double oracle_score(const dsl::TaskPlan& candidate, const dsl::TaskPlan& truth,
                    bool normalize = true);

struct MatchResult {
  std::string case_id;
  std::string dataset;
  double oracle = 0.0;  // [0, 1]
  std::optional<double> judge_score;  // [0, 100]
  std::optional<std::string> judge_explanation;
  bool simulation_ok = false;
  std::vector<std::string> violations;
};

nlohmann::ordered_json match_result_to_json(const MatchResult& r);
MatchResult match_result_from_json(const nlohmann::json& j);  // throws std::runtime_error

struct AggregateStats {
  size_t count = 0;
  double mean_oracle = 0.0;
  std::optional<double> mean_judge;
};

struct CaseError {
  std::string case_id;  // may be a path when the manifest never loaded
  std::string dataset;
  std::string message;
};

struct EvaluationReport {
  std::vector<MatchResult> per_case;              // sorted by case_id
  std::map<std::string, AggregateStats> per_dataset;
  AggregateStats overall;
  std::vector<CaseError> errors;                  // sorted by case_id
};

// Grouping and arithmetic means; permutation-invariant over the input.
EvaluationReport aggregate(std::vector<MatchResult> results, std::vector<CaseError> errors = {});

class JudgeUnparseable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct JudgeVerdict {
  double score = 0.0;  // [0, 100]
  std::string explanation;
};

// Runs the phase-2 evaluation turn: plan conversation + the model's plan
// reply + the evaluation request with sampled ground-truth frames. Parses the
// judge reply for {"matching_score", "explanation"}. Throws JudgeUnparseable,
// schema::SchemaViolation (score out of range), or gateway errors.
JudgeVerdict judge_score(const dataset::CaseManifest& manifest, const std::string& plan_reply,
                         const dsl::ActionPool& pool, const prompt::PromptConfig& config,
                         gateway::ChatBackend& backend);

// Parses a judge reply without network access (exposed for tests).
JudgeVerdict parse_judge_reply(const std::string& reply);

nlohmann::ordered_json report_to_json(const EvaluationReport& report);
std::string report_to_csv(const EvaluationReport& report);
std::string report_summary(const EvaluationReport& report);

}  // namespace vlmplan::eval
