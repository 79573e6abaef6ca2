#include "vlmplan/evaluator.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

#include "vlmplan/plan_schema.hpp"
#include "vlmplan/util.hpp"

namespace vlmplan::eval {

std::vector<dsl::ActionCall> normalize_plan(const dsl::TaskPlan& plan) {
  std::vector<dsl::ActionCall> out;
  for (const dsl::ActionCall& step : plan.steps) {
    dsl::ActionCall call;
    call.name = util::to_lower(step.name);
    call.provenance = step.provenance;
    for (const std::string& arg : step.args) {
      call.args.push_back(util::to_lower(util::trim(arg)));
    }
    if (call.name == "pick_up") {
      call.name = "grasp";
      out.push_back(std::move(call));
    } else if (call.name == "put_down" && call.args.size() == 2) {
      out.push_back({"move_hand", {call.args[1]}, call.provenance});
      out.push_back({"release", {call.args[0]}, call.provenance});
    } else {
      out.push_back(std::move(call));
    }
  }
  return out;
}

namespace {

// Agreement between two same-name calls: matching argument positions over the
// larger arity; a pair of zero-arity calls agrees fully.
double pair_agreement(const dsl::ActionCall& a, const dsl::ActionCall& b) {
  const size_t max_arity = std::max(a.args.size(), b.args.size());
  if (max_arity == 0) return 1.0;
  size_t matches = 0;
  const size_t shared = std::min(a.args.size(), b.args.size());
  for (size_t i = 0; i < shared; ++i) {
    if (a.args[i] == b.args[i]) ++matches;
  }
  return static_cast<double>(matches) / static_cast<double>(max_arity);
}

struct AlignValue {
  size_t length = 0;
  double arg_sum = 0.0;

  bool better_than(const AlignValue& other) const {
    if (length != other.length) return length > other.length;
    return arg_sum > other.arg_sum;
  }
};

// LCS over action names, tie-broken toward maximum total argument agreement.
AlignValue best_alignment(const std::vector<dsl::ActionCall>& a,
                          const std::vector<dsl::ActionCall>& b) {
  const size_t n = a.size();
  const size_t m = b.size();
  std::vector<std::vector<AlignValue>> dp(n + 1, std::vector<AlignValue>(m + 1));
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      AlignValue best = dp[i - 1][j];
      if (dp[i][j - 1].better_than(best)) best = dp[i][j - 1];
      if (a[i - 1].name == b[j - 1].name) {
        AlignValue matched = dp[i - 1][j - 1];
        matched.length += 1;
        matched.arg_sum += pair_agreement(a[i - 1], b[j - 1]);
        if (matched.better_than(best)) best = matched;
      }
      dp[i][j] = best;
    }
  }
  return dp[n][m];
}

}  // namespace

double oracle_score(const dsl::TaskPlan& candidate, const dsl::TaskPlan& truth, bool normalize) {
  std::vector<dsl::ActionCall> a;
  std::vector<dsl::ActionCall> b;
  if (normalize) {
    a = normalize_plan(candidate);
    b = normalize_plan(truth);
  } else {
    a = candidate.steps;
    b = truth.steps;
  }

  if (a.empty() && b.empty()) return 1.0;
  if (a.empty() || b.empty()) return 0.0;

  const AlignValue aligned = best_alignment(a, b);
  const double lcs_part =
      static_cast<double>(aligned.length) / static_cast<double>(std::max(a.size(), b.size()));
  const double arg_part =
      aligned.length == 0 ? 0.0 : aligned.arg_sum / static_cast<double>(aligned.length);
  return 0.5 * lcs_part + 0.5 * arg_part;
}

nlohmann::ordered_json match_result_to_json(const MatchResult& r) {
  nlohmann::ordered_json j;
  j["case_id"] = r.case_id;
  j["dataset"] = r.dataset;
  j["oracle_score"] = r.oracle;
  j["judge_score"] = r.judge_score ? nlohmann::ordered_json(*r.judge_score)
                                   : nlohmann::ordered_json(nullptr);
  j["judge_explanation"] = r.judge_explanation ? nlohmann::ordered_json(*r.judge_explanation)
                                               : nlohmann::ordered_json(nullptr);
  j["simulation_ok"] = r.simulation_ok;
  j["violations"] = r.violations;
  return j;
}

MatchResult match_result_from_json(const nlohmann::json& j) {
  MatchResult r;
  r.case_id = j.at("case_id").get<std::string>();
  r.dataset = j.at("dataset").get<std::string>();
  r.oracle = j.at("oracle_score").get<double>();
  if (j.contains("judge_score") && !j.at("judge_score").is_null()) {
    r.judge_score = j.at("judge_score").get<double>();
  }
  if (j.contains("judge_explanation") && !j.at("judge_explanation").is_null()) {
    r.judge_explanation = j.at("judge_explanation").get<std::string>();
  }
  r.simulation_ok = j.at("simulation_ok").get<bool>();
  if (j.contains("violations")) {
    for (const auto& v : j.at("violations")) r.violations.push_back(v.get<std::string>());
  }
  return r;
}

EvaluationReport aggregate(std::vector<MatchResult> results, std::vector<CaseError> errors) {
  EvaluationReport report;
  std::sort(results.begin(), results.end(),
            [](const MatchResult& a, const MatchResult& b) { return a.case_id < b.case_id; });
  std::sort(errors.begin(), errors.end(),
            [](const CaseError& a, const CaseError& b) { return a.case_id < b.case_id; });
  report.per_case = std::move(results);
  report.errors = std::move(errors);

  struct Accumulator {
    size_t count = 0;
    double oracle_sum = 0.0;
    size_t judge_count = 0;
    double judge_sum = 0.0;

    void add(const MatchResult& r) {
      ++count;
      oracle_sum += r.oracle;
      if (r.judge_score) {
        ++judge_count;
        judge_sum += *r.judge_score;
      }
    }

    AggregateStats stats() const {
      AggregateStats s;
      s.count = count;
      s.mean_oracle = count == 0 ? 0.0 : oracle_sum / static_cast<double>(count);
      if (judge_count > 0) s.mean_judge = judge_sum / static_cast<double>(judge_count);
      return s;
    }
  };

  Accumulator overall;
  std::map<std::string, Accumulator> by_dataset;
  for (const MatchResult& r : report.per_case) {
    overall.add(r);
    by_dataset[r.dataset].add(r);
  }
  report.overall = overall.stats();
  for (const auto& [dataset, acc] : by_dataset) {
    report.per_dataset[dataset] = acc.stats();
  }
  return report;
}

JudgeVerdict parse_judge_reply(const std::string& reply) {
  const auto extracted = schema::extract_first_json_object(reply);
  if (!extracted) throw JudgeUnparseable("judge reply contains no JSON object");
  const nlohmann::json j = nlohmann::json::parse(*extracted);
  if (!j.is_object() || !j.contains("matching_score") || !j.at("matching_score").is_number()) {
    throw JudgeUnparseable("judge reply has no numeric matching_score");
  }
  JudgeVerdict verdict;
  verdict.score = j.at("matching_score").get<double>();
  if (verdict.score < 0.0 || verdict.score > 100.0) {
    throw schema::SchemaViolation("/matching_score", "must lie in [0, 100]");
  }
  if (j.contains("explanation") && j.at("explanation").is_string()) {
    verdict.explanation = j.at("explanation").get<std::string>();
  }
  return verdict;
}

JudgeVerdict judge_score(const dataset::CaseManifest& manifest, const std::string& plan_reply,
                         const dsl::ActionPool& pool, const prompt::PromptConfig& config,
                         gateway::ChatBackend& backend) {
  const prompt::PromptBundle bundle = prompt::build_bundle(manifest, pool, config);
  std::vector<gateway::ChatMessage> conversation =
      prompt::render_messages(bundle, prompt::Phase::Plan);
  conversation.push_back(gateway::ChatMessage::text(gateway::Role::Assistant, plan_reply));
  const std::vector<gateway::ChatMessage> messages =
      prompt::render_messages(bundle, prompt::Phase::Evaluate, &conversation);
  return parse_judge_reply(backend.send_chat(messages));
}

nlohmann::ordered_json report_to_json(const EvaluationReport& report) {
  nlohmann::ordered_json j;
  j["per_case"] = nlohmann::ordered_json::array();
  for (const MatchResult& r : report.per_case) j["per_case"].push_back(match_result_to_json(r));

  auto stats_to_json = [](const AggregateStats& s) {
    nlohmann::ordered_json out;
    out["count"] = s.count;
    out["mean_oracle"] = s.mean_oracle;
    out["mean_judge"] =
        s.mean_judge ? nlohmann::ordered_json(*s.mean_judge) : nlohmann::ordered_json(nullptr);
    return out;
  };

  j["per_dataset"] = nlohmann::ordered_json::object();
  for (const auto& [dataset, stats] : report.per_dataset) {
    j["per_dataset"][dataset] = stats_to_json(stats);
  }
  j["overall"] = stats_to_json(report.overall);
  j["errors"] = nlohmann::ordered_json::array();
  for (const CaseError& e : report.errors) {
    nlohmann::ordered_json err;
    err["case_id"] = e.case_id;
    err["dataset"] = e.dataset;
    err["message"] = e.message;
    j["errors"].push_back(std::move(err));
  }
  return j;
}

namespace {

std::string format_score(double v) {
  std::ostringstream out;
  out << std::setprecision(6) << std::noshowpoint << v;
  return out.str();
}

// RFC-4180-ish quoting, applied only when needed.
std::string csv_field(const std::string& value) {
  if (value.find_first_of(",\"\n") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += "\"\"";
    else quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

}  // namespace

std::string report_to_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "case_id,dataset,oracle_score,judge_score,simulation_ok\n";

  struct Row {
    std::string case_id;
    std::string line;
  };
  std::vector<Row> rows;
  for (const MatchResult& r : report.per_case) {
    std::ostringstream line;
    line << csv_field(r.case_id) << ',' << csv_field(r.dataset) << ',' << format_score(r.oracle)
         << ',' << (r.judge_score ? format_score(*r.judge_score) : "") << ','
         << (r.simulation_ok ? "true" : "false");
    rows.push_back({r.case_id, line.str()});
  }
  for (const CaseError& e : report.errors) {
    std::ostringstream line;
    line << csv_field(e.case_id) << ',' << csv_field(e.dataset) << ",,,";
    rows.push_back({e.case_id, line.str()});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.case_id < b.case_id;
  });
  for (const Row& row : rows) out << row.line << "\n";
  return out.str();
}

std::string report_summary(const EvaluationReport& report) {
  std::ostringstream out;
  out << "dataset                                    cases  mean_oracle  mean_judge\n";
  out << "-------------------------------------------------------------------------\n";
  auto line = [&out](const std::string& name, const AggregateStats& s) {
    out << std::left << std::setw(42) << name << std::right << std::setw(6) << s.count
        << std::setw(13) << format_score(s.mean_oracle) << std::setw(12)
        << (s.mean_judge ? format_score(*s.mean_judge) : "-") << "\n";
  };
  for (const auto& [dataset, stats] : report.per_dataset) line(dataset, stats);
  out << "-------------------------------------------------------------------------\n";
  line("overall", report.overall);
  if (!report.errors.empty()) {
    out << "\nerrors (" << report.errors.size() << "):\n";
    for (const CaseError& e : report.errors) {
      out << "  " << e.case_id << ": " << e.message << "\n";
    }
  }
  return out.str();
}

}  // namespace vlmplan::eval
