#include "vlmplan/world_model.hpp"

#include <algorithm>

namespace vlmplan::world {

const char* to_string(Openness o) { return o == Openness::Open ? "open" : "closed"; }

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::UnknownObject: return "UnknownObject";
    case ViolationKind::UnknownLocation: return "UnknownLocation";
    case ViolationKind::GripperOccupied: return "GripperOccupied";
    case ViolationKind::NothingHeld: return "NothingHeld";
    case ViolationKind::NotHoldingObject: return "NotHoldingObject";
    case ViolationKind::HandNotAtObject: return "HandNotAtObject";
    case ViolationKind::HandLocationUnknown: return "HandLocationUnknown";
    case ViolationKind::NotOpenable: return "NotOpenable";
    case ViolationKind::ObjectHeld: return "ObjectHeld";
    case ViolationKind::BadArity: return "BadArity";
  }
  return "?";
}

std::string to_string(const Violation& v) {
  std::string out = to_string(v.kind);
  if (!v.detail.empty()) {
    out += ": ";
    out += v.detail;
  }
  return out;
}

std::vector<std::string> state_invariant_violations(const WorldState& s) {
  std::vector<std::string> out;
  for (const auto& [obj, loc] : s.at) {
    if (!s.objects.count(obj)) out.push_back("at key '" + obj + "' is not a known object");
    if (!s.locations.count(loc)) out.push_back("at value '" + loc + "' is not a known location");
    if (s.holding && *s.holding == obj) {
      out.push_back("object '" + obj + "' is both held and resting at '" + loc + "'");
    }
  }
  if (s.holding && !s.objects.count(*s.holding)) {
    out.push_back("holding '" + *s.holding + "' is not a known object");
  }
  if (s.hand_at && !s.locations.count(*s.hand_at)) {
    out.push_back("hand_at '" + *s.hand_at + "' is not a known location");
  }
  for (const std::string& obj : s.objects) {
    const bool resting = s.at.count(obj) > 0;
    const bool held = s.holding && *s.holding == obj;
    if (!resting && !held) out.push_back("object '" + obj + "' is neither resting nor held");
  }
  for (const auto& [obj, _] : s.open_state) {
    if (!s.objects.count(obj)) {
      out.push_back("open_state key '" + obj + "' is not a known object");
    }
  }
  return out;
}

namespace {

std::optional<std::string> optional_string_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) {
    throw MalformedState(std::string("state field '") + key + "' must be a string or null");
  }
  return j.at(key).get<std::string>();
}

}  // namespace

WorldState parse_state(const nlohmann::json& j) {
  if (!j.is_object()) throw MalformedState("state must be a JSON object");

  static const std::set<std::string> known_keys = {"objects", "locations",  "at",
                                                   "hand_at", "holding",    "open_state"};
  for (const auto& [key, _] : j.items()) {
    if (!known_keys.count(key)) throw MalformedState("unknown state relation '" + key + "'");
  }

  WorldState s;
  if (j.contains("at")) {
    if (!j.at("at").is_object()) throw MalformedState("'at' must map objects to locations");
    for (const auto& [obj, loc] : j.at("at").items()) {
      if (!loc.is_string()) throw MalformedState("'at' value for '" + obj + "' must be a string");
      s.at[obj] = loc.get<std::string>();
    }
  }
  s.holding = optional_string_field(j, "holding");
  s.hand_at = optional_string_field(j, "hand_at");
  if (j.contains("open_state")) {
    if (!j.at("open_state").is_object()) throw MalformedState("'open_state' must be an object");
    for (const auto& [obj, v] : j.at("open_state").items()) {
      if (!v.is_string() || (v != "open" && v != "closed")) {
        throw MalformedState("open_state['" + obj + "'] must be \"open\" or \"closed\"");
      }
      s.open_state[obj] = v == "open" ? Openness::Open : Openness::Closed;
    }
  }

  // Objects/locations are inferred from the relations; explicit lists must
  // agree (objects exactly, locations may declare extra empty places).
  std::set<std::string> inferred_objects;
  std::set<std::string> inferred_locations;
  for (const auto& [obj, loc] : s.at) {
    inferred_objects.insert(obj);
    inferred_locations.insert(loc);
  }
  if (s.holding) inferred_objects.insert(*s.holding);
  if (s.hand_at) inferred_locations.insert(*s.hand_at);

  if (j.contains("objects")) {
    if (!j.at("objects").is_array()) throw MalformedState("'objects' must be an array");
    for (const auto& o : j.at("objects")) {
      if (!o.is_string()) throw MalformedState("'objects' entries must be strings");
      s.objects.insert(o.get<std::string>());
    }
  } else {
    s.objects = inferred_objects;
  }
  if (j.contains("locations")) {
    if (!j.at("locations").is_array()) throw MalformedState("'locations' must be an array");
    for (const auto& l : j.at("locations")) {
      if (!l.is_string()) throw MalformedState("'locations' entries must be strings");
      s.locations.insert(l.get<std::string>());
    }
  } else {
    s.locations = inferred_locations;
  }

  const std::vector<std::string> problems = state_invariant_violations(s);
  if (!problems.empty()) throw MalformedState("invalid state: " + problems.front());
  return s;
}

WorldState parse_state_text(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw MalformedState(std::string("state is not valid JSON: ") + e.what());
  }
  return parse_state(j);
}

nlohmann::ordered_json state_to_json(const WorldState& s) {
  nlohmann::ordered_json j;
  j["objects"] = s.objects;      // std::set iterates sorted
  j["locations"] = s.locations;
  nlohmann::ordered_json at = nlohmann::ordered_json::object();
  for (const auto& [obj, loc] : s.at) at[obj] = loc;
  j["at"] = std::move(at);
  j["hand_at"] = s.hand_at ? nlohmann::ordered_json(*s.hand_at) : nlohmann::ordered_json(nullptr);
  j["holding"] = s.holding ? nlohmann::ordered_json(*s.holding) : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json open = nlohmann::ordered_json::object();
  for (const auto& [obj, v] : s.open_state) open[obj] = to_string(v);
  j["open_state"] = std::move(open);
  return j;
}

std::string render_state(const WorldState& s) { return state_to_json(s).dump(2); }

namespace {

struct Effects {
  WorldState next;
  StateDelta delta;
};

void require_object(const WorldState& s, const std::string& name,
                    std::vector<Violation>& out) {
  if (!s.objects.count(name)) out.push_back({ViolationKind::UnknownObject, "'" + name + "'"});
}

void require_location(const WorldState& s, const std::string& name,
                      std::vector<Violation>& out) {
  if (!s.locations.count(name)) out.push_back({ViolationKind::UnknownLocation, "'" + name + "'"});
}

// Hand must be at the object's resting location. Held objects have no
// resting location and fail this check.
void require_hand_at_object(const WorldState& s, const std::string& obj,
                            std::vector<Violation>& out) {
  const auto it = s.at.find(obj);
  if (it == s.at.end()) {
    out.push_back({ViolationKind::HandNotAtObject, "'" + obj + "' has no resting location"});
    return;
  }
  if (!s.hand_at || *s.hand_at != it->second) {
    out.push_back({ViolationKind::HandNotAtObject,
                   "hand is at '" + (s.hand_at ? *s.hand_at : std::string("nowhere")) +
                       "', '" + obj + "' is at '" + it->second + "'"});
  }
}

bool arity_ok(const dsl::ActionCall& call, size_t expected, std::vector<Violation>& out) {
  if (call.args.size() == expected) return true;
  out.push_back({ViolationKind::BadArity,
                 "'" + call.name + "' expects " + std::to_string(expected) + " operand(s), got " +
                     std::to_string(call.args.size())});
  return false;
}

// Names with simulator semantics. Everything else is inert.
bool has_semantics(const std::string& name) {
  static const std::set<std::string> known = {"move_hand", "grasp",  "release", "open",
                                              "close",     "push",   "pull",    "rotate",
                                              "pick_up",   "put_down", "wait"};
  return known.count(name) > 0;
}

}  // namespace

std::vector<Violation> check_preconditions(const WorldState& s, const dsl::ActionCall& call,
                                           const SimConfig& config) {
  std::vector<Violation> v;
  const std::string& name = call.name;

  if (!has_semantics(name)) return v;  // inert: always applicable

  if (name == "wait") {
    arity_ok(call, 0, v);
    return v;
  }
  if (name == "move_hand") {
    if (!arity_ok(call, 1, v)) return v;
    require_location(s, call.args[0], v);
    return v;
  }
  if (name == "grasp" || name == "pick_up") {
    if (!arity_ok(call, 1, v)) return v;
    const std::string& obj = call.args[0];
    require_object(s, obj, v);
    if (!v.empty()) return v;
    if (s.holding) {
      v.push_back({ViolationKind::GripperOccupied, "already holding '" + *s.holding + "'"});
      return v;
    }
    if (config.strict_colocation) require_hand_at_object(s, obj, v);
    return v;
  }
  if (name == "release") {
    if (!arity_ok(call, 1, v)) return v;
    const std::string& obj = call.args[0];
    require_object(s, obj, v);
    if (!v.empty()) return v;
    if (!s.holding) {
      v.push_back({ViolationKind::NothingHeld, "cannot release '" + obj + "'"});
    } else if (*s.holding != obj) {
      v.push_back({ViolationKind::NotHoldingObject,
                   "holding '" + *s.holding + "', not '" + obj + "'"});
    }
    if (!s.hand_at) {
      v.push_back({ViolationKind::HandLocationUnknown, "hand is nowhere, nothing to deposit onto"});
    }
    return v;
  }
  if (name == "open" || name == "close") {
    if (!arity_ok(call, 1, v)) return v;
    const std::string& obj = call.args[0];
    require_object(s, obj, v);
    if (!v.empty()) return v;
    if (!s.open_state.count(obj)) {
      v.push_back({ViolationKind::NotOpenable, "'" + obj + "' has no open/closed state"});
      return v;
    }
    if (config.strict_colocation) require_hand_at_object(s, obj, v);
    return v;
  }
  if (name == "push") {
    if (!arity_ok(call, 2, v)) return v;
    const std::string& obj = call.args[0];
    require_object(s, obj, v);
    require_location(s, call.args[1], v);
    if (!v.empty()) return v;
    if (s.holding && *s.holding == obj) {
      v.push_back({ViolationKind::ObjectHeld, "cannot push held object '" + obj + "'"});
      return v;
    }
    if (config.strict_colocation) require_hand_at_object(s, obj, v);
    return v;
  }
  if (name == "pull" || name == "rotate") {
    if (!arity_ok(call, 1, v)) return v;
    require_object(s, call.args[0], v);
    return v;
  }
  if (name == "put_down") {
    if (!arity_ok(call, 2, v)) return v;
    const std::string& obj = call.args[0];
    require_object(s, obj, v);
    require_location(s, call.args[1], v);
    if (!v.empty()) return v;
    if (!s.holding) {
      v.push_back({ViolationKind::NothingHeld, "cannot put down '" + obj + "'"});
    } else if (*s.holding != obj) {
      v.push_back({ViolationKind::NotHoldingObject,
                   "holding '" + *s.holding + "', not '" + obj + "'"});
    }
    return v;
  }
  return v;
}

ApplyResult apply_action(const WorldState& state, const dsl::ActionCall& call,
                         const SimConfig& config) {
  ApplyResult result;
  result.violations = check_preconditions(state, call, config);
  if (!result.violations.empty()) {
    result.ok = false;
    result.state = state;
    return result;
  }

  WorldState next = state;
  StateDelta delta;
  const std::string& name = call.name;

  if (!has_semantics(name)) {
    result.warnings.push_back("NovelActionSkipped: '" + name +
                              "' has no simulator semantics, treated as a no-op");
  } else if (name == "move_hand") {
    const std::string& loc = call.args[0];
    if (!next.hand_at || *next.hand_at != loc) {
      if (next.hand_at) delta.removed.push_back({"hand_at", {*next.hand_at}});
      delta.added.push_back({"hand_at", {loc}});
      next.hand_at = loc;
    }
  } else if (name == "grasp" || name == "pick_up") {
    const std::string& obj = call.args[0];
    const auto it = next.at.find(obj);
    if (it != next.at.end()) {
      delta.removed.push_back({"at", {obj, it->second}});
      next.at.erase(it);
    }
    delta.added.push_back({"holding", {obj}});
    next.holding = obj;
  } else if (name == "release") {
    const std::string& obj = call.args[0];
    delta.removed.push_back({"holding", {obj}});
    delta.added.push_back({"at", {obj, *next.hand_at}});
    next.at[obj] = *next.hand_at;
    next.holding.reset();
  } else if (name == "open" || name == "close") {
    const std::string& obj = call.args[0];
    const Openness target = name == "open" ? Openness::Open : Openness::Closed;
    const Openness current = next.open_state.at(obj);
    if (current != target) {
      delta.removed.push_back({"open_state", {obj, to_string(current)}});
      delta.added.push_back({"open_state", {obj, to_string(target)}});
      next.open_state[obj] = target;
    }
  } else if (name == "push") {
    const std::string& obj = call.args[0];
    const std::string& loc = call.args[1];
    const std::string old = next.at.at(obj);
    if (old != loc) {
      delta.removed.push_back({"at", {obj, old}});
      delta.added.push_back({"at", {obj, loc}});
      next.at[obj] = loc;
    }
  } else if (name == "put_down") {
    const std::string& obj = call.args[0];
    const std::string& loc = call.args[1];
    if (!next.hand_at || *next.hand_at != loc) {
      if (next.hand_at) delta.removed.push_back({"hand_at", {*next.hand_at}});
      delta.added.push_back({"hand_at", {loc}});
      next.hand_at = loc;
    }
    delta.removed.push_back({"holding", {obj}});
    delta.added.push_back({"at", {obj, loc}});
    next.at[obj] = loc;
    next.holding.reset();
  }
  // pull, rotate, wait: state-preserving, empty delta

  result.ok = true;
  result.state = std::move(next);
  result.delta = std::move(delta);
  return result;
}

SimulationResult simulate_plan(const WorldState& initial, const dsl::TaskPlan& plan,
                               const SimConfig& config) {
  SimulationResult result;
  WorldState current = initial;
  for (size_t i = 0; i < plan.steps.size(); ++i) {
    ApplyResult step = apply_action(current, plan.steps[i], config);
    if (!step.ok) {
      result.ok = false;
      result.failed_step = i;
      result.violations = std::move(step.violations);
      result.final_state = std::move(current);
      return result;
    }
    result.trace.push_back({i, plan.steps[i], std::move(step.delta), std::move(step.warnings)});
    current = std::move(step.state);
  }
  result.ok = true;
  result.final_state = std::move(current);
  return result;
}

namespace {

nlohmann::ordered_json fact_to_json(const Fact& f) {
  nlohmann::ordered_json j;
  j["relation"] = f.relation;
  j["operands"] = f.operands;
  return j;
}

nlohmann::ordered_json delta_to_json(const StateDelta& d) {
  nlohmann::ordered_json j;
  j["added"] = nlohmann::ordered_json::array();
  for (const Fact& f : d.added) j["added"].push_back(fact_to_json(f));
  j["removed"] = nlohmann::ordered_json::array();
  for (const Fact& f : d.removed) j["removed"].push_back(fact_to_json(f));
  return j;
}

}  // namespace

nlohmann::ordered_json trace_to_json(const SimulationResult& result) {
  nlohmann::ordered_json j;
  j["ok"] = result.ok;
  j["steps"] = nlohmann::ordered_json::array();
  for (const StepRecord& rec : result.trace) {
    nlohmann::ordered_json step;
    step["step"] = rec.step;
    step["action"] = dsl::render_call(rec.call);
    step["delta"] = delta_to_json(rec.delta);
    if (!rec.warnings.empty()) step["warnings"] = rec.warnings;
    j["steps"].push_back(std::move(step));
  }
  if (!result.ok) {
    nlohmann::ordered_json failure;
    failure["step"] = result.failed_step;
    failure["violations"] = nlohmann::ordered_json::array();
    for (const Violation& v : result.violations) failure["violations"].push_back(to_string(v));
    j["failure"] = std::move(failure);
  }
  j["final_state"] = state_to_json(result.final_state);
  return j;
}

}  // namespace vlmplan::world
