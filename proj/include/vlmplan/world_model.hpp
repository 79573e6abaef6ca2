#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlmplan/plan_dsl.hpp"

namespace vlmplan::world {

enum class Openness { Open, Closed };

const char* to_string(Openness o);

// Symbolic scene: objects, locations, the `at` relation (resting at/on/in),
// gripper contents, hand position, and open/closed state for openables.
//
// Object conservation: every object is either a key of `at` or equals
// `holding`, never both, never neither.
struct WorldState {
  std::set<std::string> objects;
  std::set<std::string> locations;
  std::map<std::string, std::string> at;  // object -> location
  std::optional<std::string> holding;
  std::optional<std::string> hand_at;
  std::map<std::string, Openness> open_state;

  bool operator==(const WorldState&) const = default;
};

// Empty list iff the state satisfies every WorldState invariant.
std::vector<std::string> state_invariant_violations(const WorldState& state);

class MalformedState : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// JSON shape: {"objects": [...], "locations": [...], "at": {obj: loc},
// "hand_at": str|null, "holding": str|null, "open_state": {obj: "open"|"closed"}}.
// objects/locations may be omitted and are then inferred; unknown keys are
// rejected. Throws MalformedState.
WorldState parse_state(const nlohmann::json& j);
WorldState parse_state_text(std::string_view text);

// Canonical rendering: all keys present, relations sorted lexicographically.
nlohmann::ordered_json state_to_json(const WorldState& state);
std::string render_state(const WorldState& state);

enum class ViolationKind {
  UnknownObject,
  UnknownLocation,
  GripperOccupied,
  NothingHeld,
  NotHoldingObject,
  HandNotAtObject,
  HandLocationUnknown,
  NotOpenable,
  ObjectHeld,
  BadArity,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string detail;
};

std::string to_string(const Violation& v);

// One ground fact, used to report state changes: at(obj, loc), holding(obj),
// hand_at(loc), open_state(obj, value).
struct Fact {
  std::string relation;
  std::vector<std::string> operands;

  bool operator==(const Fact&) const = default;
};

// Facts removed from / added to the state by one action. added and removed
// are disjoint; both empty for state-preserving actions.
struct StateDelta {
  std::vector<Fact> added;
  std::vector<Fact> removed;

  bool empty() const { return added.empty() && removed.empty(); }
  bool operator==(const StateDelta&) const = default;
};

struct SimConfig {
  // When false, hand/object co-location preconditions (grasp, push, open,
  // close) are dropped.
  bool strict_colocation = true;
};

// Empty list iff the call is applicable in the state. Actions without
// simulator semantics (novel or custom-pool names) are always applicable.
std::vector<Violation> check_preconditions(const WorldState& state, const dsl::ActionCall& call,
                                           const SimConfig& config = {});

struct ApplyResult {
  bool ok = false;
  WorldState state;                // successor on success, input state on failure
  StateDelta delta;
  std::vector<std::string> warnings;
  std::vector<Violation> violations;  // non-empty exactly when !ok
};

// Applies one action. Failed applications are side-effect free: on violation
// the returned state equals the input.
ApplyResult apply_action(const WorldState& state, const dsl::ActionCall& call,
                         const SimConfig& config = {});

struct StepRecord {
  size_t step = 0;
  dsl::ActionCall call;
  StateDelta delta;
  std::vector<std::string> warnings;
};

struct SimulationResult {
  bool ok = false;
  WorldState final_state;
  std::vector<StepRecord> trace;  // records for the steps that succeeded
  size_t failed_step = 0;         // meaningful only when !ok
  std::vector<Violation> violations;
};

// Folds apply_action over the plan. On failure reports the step index, its
// violations, and the state reached so far.
SimulationResult simulate_plan(const WorldState& initial, const dsl::TaskPlan& plan,
                               const SimConfig& config = {});

// Trace export: JSON list of per-step deltas with step indices.
nlohmann::ordered_json trace_to_json(const SimulationResult& result);

}  // namespace vlmplan::world
