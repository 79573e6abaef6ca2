#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vlmplan/plan_dsl.hpp"
#include "vlmplan/world_model.hpp"

namespace vlmplan::schema {

// The structured JSON artifact the model must return: the plan as functional
// expressions plus instructions, the symbolic scene before and after, and an
// optional self-assessed matching score.
struct PlanDocument {
  std::vector<std::string> task_sequence;
  std::vector<std::string> step_instructions;
  world::WorldState environment_before;
  world::WorldState environment_after;
  std::optional<double> matching_score;  // [0, 100]
  std::optional<std::string> score_explanation;

  bool operator==(const PlanDocument&) const = default;
};

class NoJsonFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SchemaViolation : public std::runtime_error {
 public:
  SchemaViolation(std::string path, std::string reason)
      : std::runtime_error(path + ": " + reason), path(std::move(path)), reason(std::move(reason)) {}
  std::string path;
  std::string reason;
};

// Scans for the first balanced {...} block outside string literals that
// parses as JSON. Models often wrap documents in prose or code fences.
std::optional<std::string> extract_first_json_object(std::string_view text);

// Extraction + schema validation. Throws NoJsonFound / SchemaViolation.
PlanDocument parse_document(std::string_view text);
PlanDocument document_from_json(const nlohmann::json& j);

// Canonical form: fixed key order, 2-space indentation; optional fields are
// omitted when absent. parse_document(serialize_document(d)) == d.
nlohmann::ordered_json document_to_json(const PlanDocument& doc);
std::string serialize_document(const PlanDocument& doc);

class PlanExtractError : public std::runtime_error {
 public:
  PlanExtractError(size_t step, dsl::ParseError error)
      : std::runtime_error("step " + std::to_string(step) + ": " + error.message),
        step(step),
        error(std::move(error)) {}
  size_t step;
  dsl::ParseError error;
};

// Parses each task_sequence entry against the pool and pairs it with its
// instruction. Throws PlanExtractError on the first bad entry.
dsl::TaskPlan extract_plan(const PlanDocument& doc, const dsl::ActionPool& pool);

}  // namespace vlmplan::schema
