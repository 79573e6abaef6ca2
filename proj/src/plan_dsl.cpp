#include "vlmplan/plan_dsl.hpp"

#include <sstream>

#include "vlmplan/util.hpp"

namespace vlmplan::dsl {

const char* to_string(ParamRole role) {
  switch (role) {
    case ParamRole::Object: return "object";
    case ParamRole::Location: return "location";
    case ParamRole::Text: return "text";
  }
  return "?";
}

std::optional<ParamRole> param_role_from_string(std::string_view s) {
  if (s == "object") return ParamRole::Object;
  if (s == "location") return ParamRole::Location;
  if (s == "text") return ParamRole::Text;
  return std::nullopt;
}

const char* to_string(ParseErrorKind kind) {
  switch (kind) {
    case ParseErrorKind::EmptyInput: return "EmptyInput";
    case ParseErrorKind::SyntaxError: return "SyntaxError";
    case ParseErrorKind::UnknownAction: return "UnknownAction";
    case ParseErrorKind::ArityMismatch: return "ArityMismatch";
  }
  return "?";
}

bool is_valid_action_name(std::string_view name) {
  if (name.empty()) return false;
  if (name[0] < 'a' || name[0] > 'z') return false;
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
    if (!ok) return false;
  }
  return true;
}

bool is_valid_argument(std::string_view arg) {
  if (arg.empty()) return false;
  if (std::isspace(static_cast<unsigned char>(arg.front())) ||
      std::isspace(static_cast<unsigned char>(arg.back()))) {
    return false;
  }
  for (char c : arg) {
    if (c == ',' || c == '(' || c == ')') return false;
  }
  return true;
}

void ActionPool::add(ActionSignature signature) {
  if (!is_valid_action_name(signature.name)) {
    throw PoolError("invalid action name: '" + signature.name + "'");
  }
  if (signature.description.empty()) {
    throw PoolError("action '" + signature.name + "' has an empty description");
  }
  auto [it, inserted] = signatures_.emplace(signature.name, std::move(signature));
  if (!inserted) {
    throw PoolError("duplicate action name: '" + it->first + "'");
  }
}

const ActionSignature* ActionPool::find(std::string_view name) const {
  auto it = signatures_.find(std::string(name));
  return it == signatures_.end() ? nullptr : &it->second;
}

std::string ActionPool::render() const {
  std::ostringstream out;
  for (const auto& [name, sig] : signatures_) {
    out << "- " << name << "(";
    for (size_t i = 0; i < sig.param_roles.size(); ++i) {
      if (i > 0) out << ", ";
      out << to_string(sig.param_roles[i]);
    }
    out << "): " << sig.description << "\n";
  }
  return out.str();
}

ActionPool ActionPool::default_pool() {
  ActionPool pool(/*allow_novel=*/true);
  using R = ParamRole;
  pool.add({"move_hand", {R::Location}, "Move the robot hand to the given location."});
  pool.add({"grasp", {R::Object}, "Close the gripper on the object so the hand is holding it."});
  pool.add({"release", {R::Object},
            "Open the gripper and deposit the held object at the hand's current location."});
  pool.add({"open", {R::Object}, "Open the openable object (a drawer, door, or lid) the hand is at."});
  pool.add({"close", {R::Object}, "Close the openable object the hand is at."});
  pool.add({"push", {R::Object, R::Location},
            "Push the object along the surface to the given location."});
  pool.add({"pull", {R::Object}, "Pull the object toward the robot without lifting it."});
  pool.add({"rotate", {R::Object}, "Rotate the object in place."});
  pool.add({"pick_up", {R::Object}, "Lift the object into the gripper; synonym of grasp."});
  pool.add({"put_down", {R::Object, R::Location},
            "Move the hand to the location and release the held object there."});
  pool.add({"wait", {}, "Do nothing for one step."});
  return pool;
}

ActionPool ActionPool::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw PoolError("pool file: top level must be a JSON object");
  ActionPool pool;
  if (j.contains("allow_novel")) {
    if (!j.at("allow_novel").is_boolean()) throw PoolError("pool file: allow_novel must be a boolean");
    pool.set_allow_novel(j.at("allow_novel").get<bool>());
  }
  if (!j.contains("actions") || !j.at("actions").is_array()) {
    throw PoolError("pool file: missing 'actions' array");
  }
  for (const auto& entry : j.at("actions")) {
    if (!entry.is_object() || !entry.contains("name") || !entry.contains("params") ||
        !entry.contains("description")) {
      throw PoolError("pool file: each action needs name, params, description");
    }
    ActionSignature sig;
    sig.name = entry.at("name").get<std::string>();
    sig.description = entry.at("description").get<std::string>();
    for (const auto& p : entry.at("params")) {
      const auto role = param_role_from_string(p.get<std::string>());
      if (!role) {
        throw PoolError("pool file: action '" + sig.name + "' has unknown param role '" +
                        p.get<std::string>() + "'");
      }
      sig.param_roles.push_back(*role);
    }
    pool.add(std::move(sig));
  }
  return pool;
}

ActionPool ActionPool::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(util::read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw PoolError("pool file '" + path.string() + "': " + e.what());
  }
  return from_json(j);
}

nlohmann::ordered_json ActionPool::to_json() const {
  nlohmann::ordered_json j;
  j["allow_novel"] = allow_novel_;
  j["actions"] = nlohmann::ordered_json::array();
  for (const auto& [name, sig] : signatures_) {
    nlohmann::ordered_json a;
    a["name"] = name;
    a["params"] = nlohmann::ordered_json::array();
    for (ParamRole r : sig.param_roles) a["params"].push_back(to_string(r));
    a["description"] = sig.description;
    j["actions"].push_back(std::move(a));
  }
  return j;
}

namespace {

// Splits the text between the parentheses on commas, trimming each piece.
// Returns false on structurally bad arguments (empty piece, stray parens).
bool split_args(std::string_view inner, std::vector<std::string>& out, std::string& why) {
  if (util::trim(inner).empty()) return true;  // zero-arity call
  size_t start = 0;
  while (true) {
    const size_t comma = inner.find(',', start);
    const std::string_view piece =
        comma == std::string_view::npos ? inner.substr(start) : inner.substr(start, comma - start);
    const std::string arg = util::trim(piece);
    if (arg.empty()) {
      why = "empty argument";
      return false;
    }
    if (arg.find('(') != std::string::npos || arg.find(')') != std::string::npos) {
      why = "nested parentheses in argument";
      return false;
    }
    out.push_back(arg);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return true;
}

}  // namespace

ParseResult parse_call(std::string_view text, const ActionPool& pool) {
  const std::string trimmed = util::trim(text);
  if (trimmed.empty()) {
    return ParseResult::failure(ParseErrorKind::EmptyInput, "empty input");
  }

  const size_t open = trimmed.find('(');
  if (open == std::string::npos) {
    return ParseResult::failure(ParseErrorKind::SyntaxError, "missing '(' in '" + trimmed + "'");
  }
  const size_t close = trimmed.rfind(')');
  if (close == std::string::npos || close < open) {
    return ParseResult::failure(ParseErrorKind::SyntaxError, "missing ')' in '" + trimmed + "'");
  }
  if (!util::trim(trimmed.substr(close + 1)).empty()) {
    return ParseResult::failure(ParseErrorKind::SyntaxError,
                                "trailing text after ')' in '" + trimmed + "'");
  }

  const std::string name = util::to_lower(util::trim(trimmed.substr(0, open)));
  if (!is_valid_action_name(name)) {
    return ParseResult::failure(ParseErrorKind::SyntaxError, "bad action name '" + name + "'");
  }

  std::vector<std::string> args;
  std::string why;
  if (!split_args(std::string_view(trimmed).substr(open + 1, close - open - 1), args, why)) {
    return ParseResult::failure(ParseErrorKind::SyntaxError, why + " in '" + trimmed + "'");
  }

  const ActionSignature* sig = pool.find(name);
  if (sig != nullptr) {
    if (sig->arity() != args.size()) {
      return ParseResult::failure(
          ParseErrorKind::ArityMismatch,
          "'" + name + "' takes " + std::to_string(sig->arity()) + " argument(s), got " +
              std::to_string(args.size()));
    }
    return ParseResult::success({name, std::move(args), Provenance::Pool});
  }
  if (pool.allow_novel()) {
    return ParseResult::success({name, std::move(args), Provenance::Novel});
  }
  return ParseResult::failure(ParseErrorKind::UnknownAction,
                              "'" + name + "' is not in the action pool");
}

std::string render_call(const ActionCall& call) {
  std::string out = call.name;
  out.push_back('(');
  for (size_t i = 0; i < call.args.size(); ++i) {
    if (i > 0) out += ", ";
    out += call.args[i];
  }
  out.push_back(')');
  return out;
}

std::vector<PlanViolation> validate_plan(const TaskPlan& plan, const ActionPool& pool) {
  std::vector<PlanViolation> violations;
  for (size_t i = 0; i < plan.steps.size(); ++i) {
    const ParseResult reparsed = parse_call(render_call(plan.steps[i]), pool);
    if (!reparsed.ok()) {
      violations.push_back({i, reparsed.error->kind, reparsed.error->message});
      continue;
    }
    if (plan.steps[i].provenance == Provenance::Pool && !pool.contains(plan.steps[i].name)) {
      violations.push_back({i, ParseErrorKind::UnknownAction,
                            "step claims pool provenance but '" + plan.steps[i].name +
                                "' is not in the pool"});
    }
  }
  return violations;
}

}  // namespace vlmplan::dsl
