#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace vlmplan::dsl {

// Role a parameter position plays in an action signature.
enum class ParamRole { Object, Location, Text };

const char* to_string(ParamRole role);
std::optional<ParamRole> param_role_from_string(std::string_view s);

// One callable robot action: name, parameter roles, and the sentence shown
// verbatim in the prompt's action-pool listing.
struct ActionSignature {
  std::string name;
  std::vector<ParamRole> param_roles;
  std::string description;

  size_t arity() const { return param_roles.size(); }

  bool operator==(const ActionSignature&) const = default;
};

// Whether a call names a predefined pool action or a model-invented one.
enum class Provenance { Pool, Novel };

// One parsed functional expression, e.g. move_hand(bottom drawer).
struct ActionCall {
  std::string name;
  std::vector<std::string> args;
  Provenance provenance = Provenance::Pool;

  bool operator==(const ActionCall&) const = default;
};

// An ordered plan: functional-expression steps paired 1:1 with the textual
// instructions they implement. Empty plans are legal ("no action").
struct TaskPlan {
  std::vector<ActionCall> steps;
  std::vector<std::string> step_instructions;

  bool operator==(const TaskPlan&) const = default;
};

class PoolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The vocabulary of callable actions. Names are unique; iteration (and
// therefore prompt rendering) is lexicographic by name.
class ActionPool {
 public:
  ActionPool() = default;
  explicit ActionPool(bool allow_novel) : allow_novel_(allow_novel) {}

  // Throws PoolError on duplicate names or invalid signatures.
  void add(ActionSignature signature);

  const ActionSignature* find(std::string_view name) const;
  bool contains(std::string_view name) const { return find(name) != nullptr; }
  size_t size() const { return signatures_.size(); }

  bool allow_novel() const { return allow_novel_; }
  void set_allow_novel(bool v) { allow_novel_ = v; }

  const std::map<std::string, ActionSignature>& signatures() const { return signatures_; }

  // Deterministic listing used in the prompt: one "- name(role, ...): description"
  // line per action, lexicographic by name.
  std::string render() const;

  // The built-in manipulation vocabulary, allow_novel=true.
  static ActionPool default_pool();

  // Pool file shape: {"allow_novel": bool, "actions": [{"name", "params", "description"}]}.
  static ActionPool from_json(const nlohmann::json& j);
  static ActionPool load(const std::filesystem::path& path);

  nlohmann::ordered_json to_json() const;

 private:
  std::map<std::string, ActionSignature> signatures_;
  bool allow_novel_ = true;
};

// True iff name matches [a-z][a-z0-9_]*.
bool is_valid_action_name(std::string_view name);

// Structural check for one argument: non-empty, no commas or parentheses,
// no leading/trailing whitespace.
bool is_valid_argument(std::string_view arg);

enum class ParseErrorKind { EmptyInput, SyntaxError, UnknownAction, ArityMismatch };

const char* to_string(ParseErrorKind kind);

struct ParseError {
  ParseErrorKind kind;
  std::string message;
};

// Exactly one of `call` / `error` is set.
struct ParseResult {
  std::optional<ActionCall> call;
  std::optional<ParseError> error;

  bool ok() const { return call.has_value(); }

  static ParseResult success(ActionCall c) { return {std::move(c), std::nullopt}; }
  static ParseResult failure(ParseErrorKind kind, std::string message) {
    return {std::nullopt, ParseError{kind, std::move(message)}};
  }
};

// Parses one functional expression. Names are lowercased before pool lookup;
// arguments keep their original casing. Total over the error domain: every
// input yields either a call or one specific error.
ParseResult parse_call(std::string_view text, const ActionPool& pool);

// Inverse of parse_call: "name(arg1, arg2)" with a single ", " between args.
std::string render_call(const ActionCall& call);

struct PlanViolation {
  size_t step;
  ParseErrorKind kind;
  std::string message;
};

// Re-checks every step of a plan against the pool. Violations are data, not
// failures; an empty list means the plan is valid.
std::vector<PlanViolation> validate_plan(const TaskPlan& plan, const ActionPool& pool);

}  // namespace vlmplan::dsl
