#include "vlmplan/plan_schema.hpp"

#include <cmath>

namespace vlmplan::schema {

std::optional<std::string> extract_first_json_object(std::string_view text) {
  size_t search_from = 0;
  while (true) {
    const size_t start = text.find('{', search_from);
    if (start == std::string_view::npos) return std::nullopt;

    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        --depth;
        if (depth == 0) {
          const std::string candidate(text.substr(start, i - start + 1));
          if (nlohmann::json::accept(candidate)) return candidate;
          break;  // balanced but not valid JSON; try the next '{'
        }
      }
    }
    search_from = start + 1;
  }
}

namespace {

std::vector<std::string> string_array_field(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw SchemaViolation("/" + key, "missing required field");
  const auto& arr = j.at(key);
  if (!arr.is_array()) throw SchemaViolation("/" + key, "must be an array");
  std::vector<std::string> out;
  for (size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_string()) {
      throw SchemaViolation("/" + key + "/" + std::to_string(i), "must be a string");
    }
    out.push_back(arr[i].get<std::string>());
  }
  return out;
}

world::WorldState state_field(const nlohmann::json& j, const std::string& key) {
  if (!j.contains(key)) throw SchemaViolation("/" + key, "missing required field");
  try {
    return world::parse_state(j.at(key));
  } catch (const world::MalformedState& e) {
    throw SchemaViolation("/" + key, e.what());
  }
}

// Integral scores serialize as integers so golden files read naturally.
nlohmann::ordered_json number_to_json(double v) {
  if (std::floor(v) == v && std::abs(v) < 9.0e15) {
    return nlohmann::ordered_json(static_cast<int64_t>(v));
  }
  return nlohmann::ordered_json(v);
}

}  // namespace

PlanDocument document_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw SchemaViolation("/", "document must be a JSON object");
  PlanDocument doc;
  doc.task_sequence = string_array_field(j, "task_sequence");
  doc.step_instructions = string_array_field(j, "step_instructions");
  if (doc.task_sequence.size() != doc.step_instructions.size()) {
    throw SchemaViolation("/step_instructions",
                          "length " + std::to_string(doc.step_instructions.size()) +
                              " does not match task_sequence length " +
                              std::to_string(doc.task_sequence.size()));
  }
  doc.environment_before = state_field(j, "environment_before");
  doc.environment_after = state_field(j, "environment_after");
  if (j.contains("matching_score") && !j.at("matching_score").is_null()) {
    if (!j.at("matching_score").is_number()) {
      throw SchemaViolation("/matching_score", "must be a number");
    }
    const double score = j.at("matching_score").get<double>();
    if (score < 0.0 || score > 100.0) {
      throw SchemaViolation("/matching_score", "must lie in [0, 100]");
    }
    doc.matching_score = score;
  }
  if (j.contains("score_explanation") && !j.at("score_explanation").is_null()) {
    if (!j.at("score_explanation").is_string()) {
      throw SchemaViolation("/score_explanation", "must be a string");
    }
    doc.score_explanation = j.at("score_explanation").get<std::string>();
  }
  if (j.contains("schema") && j.at("schema") != "v1") {
    throw SchemaViolation("/schema", "unsupported schema version");
  }
  return doc;
}

PlanDocument parse_document(std::string_view text) {
  const auto extracted = extract_first_json_object(text);
  if (!extracted) throw NoJsonFound("no JSON object found in model output");
  return document_from_json(nlohmann::json::parse(*extracted));
}

nlohmann::ordered_json document_to_json(const PlanDocument& doc) {
  nlohmann::ordered_json j;
  j["task_sequence"] = doc.task_sequence;
  j["step_instructions"] = doc.step_instructions;
  j["environment_before"] = world::state_to_json(doc.environment_before);
  j["environment_after"] = world::state_to_json(doc.environment_after);
  if (doc.matching_score) j["matching_score"] = number_to_json(*doc.matching_score);
  if (doc.score_explanation) j["score_explanation"] = *doc.score_explanation;
  return j;
}

std::string serialize_document(const PlanDocument& doc) { return document_to_json(doc).dump(2); }

dsl::TaskPlan extract_plan(const PlanDocument& doc, const dsl::ActionPool& pool) {
  dsl::TaskPlan plan;
  for (size_t i = 0; i < doc.task_sequence.size(); ++i) {
    dsl::ParseResult parsed = dsl::parse_call(doc.task_sequence[i], pool);
    if (!parsed.ok()) throw PlanExtractError(i, *parsed.error);
    plan.steps.push_back(std::move(*parsed.call));
  }
  plan.step_instructions = doc.step_instructions;
  return plan;
}

}  // namespace vlmplan::schema
