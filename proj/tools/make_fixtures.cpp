// Regenerates the committed fixtures: golden documents, the demo-suite
// cassette, the plan-phase wire body, and the fractal bundle hash. Run from
// anywhere; paths resolve against the source tree. Rerun after changing
// prompt templates, the default pool, demo manifests, or serialization.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "vlmplan/dataset.hpp"
#include "vlmplan/evaluator.hpp"
#include "vlmplan/llm_gateway.hpp"
#include "vlmplan/plan_dsl.hpp"
#include "vlmplan/plan_schema.hpp"
#include "vlmplan/prompt_engine.hpp"
#include "vlmplan/util.hpp"
#include "vlmplan/world_model.hpp"

using namespace vlmplan;

namespace {

const std::filesystem::path kRoot = VLMPLAN_SOURCE_ROOT;
constexpr const char* kFixedTimestamp = "2024-01-01T00:00:00Z";

schema::PlanDocument fractal_document() {
  schema::PlanDocument doc;
  doc.task_sequence = {"move_hand(bottom drawer)", "grasp(target)", "move_hand(counter)",
                       "release(target)"};
  doc.step_instructions = {"Move the hand to the target's location in the bottom drawer",
                           "Grasp the target", "Move the hand with the target to the counter",
                           "Release the target onto the counter"};
  world::WorldState before;
  before.objects = {"target"};
  before.locations = {"bottom drawer", "counter"};
  before.at = {{"target", "bottom drawer"}};
  doc.environment_before = before;
  world::WorldState after = before;
  after.at = {{"target", "counter"}};
  after.hand_at = "counter";
  doc.environment_after = after;
  return doc;
}

struct ScriptedResponse {
  std::vector<std::string> task_sequence;  // empty = answer with the ground truth
  std::vector<std::string> step_instructions;
  double judge_score = 100.0;
  std::string judge_explanation = "The plan matches the demonstration exactly.";
};

std::map<std::string, ScriptedResponse> scripted_responses() {
  std::map<std::string, ScriptedResponse> scripts;

  // kuka_001 over-plans: two extra steps beyond the demonstrated pick.
  scripts["kuka_001"] = {
      {"move_hand(bin)", "grasp(block)", "move_hand(table)", "release(block)"},
      {"Move the hand over the bin", "Grasp the block", "Move the hand to the table",
       "Release the block on the table"},
      60.0,
      "The pick matches the demonstration but the placement steps are not shown in the video."};

  // bridge_001 omits the carry step, mirroring the worked scoring example.
  scripts["bridge_001"] = {
      {"move_hand(front of red can)", "grasp(silver pot)", "release(silver pot)"},
      {"Move the hand to the silver pot", "Grasp the silver pot", "Release the silver pot"},
      80.0,
      "The grasp matches but the pot is never carried to the front edge of the table."};

  // toto_001 answers with pick_up/put_down synonyms of the ground truth.
  scripts["toto_001"] = {
      {"move_hand(desk)", "pick_up(mug)", "put_down(mug, coaster)"},
      {"Move the hand to the mug on the desk", "Pick up the mug",
       "Put the mug down on the coaster"},
      100.0,
      "The plan matches the demonstration exactly."};

  return scripts;
}

nlohmann::ordered_json judge_reply(double score, const std::string& explanation) {
  nlohmann::ordered_json j;
  j["matching_score"] = static_cast<int64_t>(score);
  j["explanation"] = explanation;
  return j;
}

}  // namespace

int main() {
  const dsl::ActionPool pool = dsl::ActionPool::default_pool();
  const prompt::PromptConfig prompt_config;  // defaults: 4 eval frames, built-in templates

  // --- golden documents ---
  util::write_file(kRoot / "fixtures/documents/fractal_document.json",
                   schema::serialize_document(fractal_document()) + "\n");
  util::write_file(kRoot / "fixtures/documents/example_output.json",
                   schema::serialize_document(prompt::example_document()) + "\n");

  // --- demo-suite cassette ---
  const dataset::CaseSuite suite = dataset::load_suite(kRoot / "cases", pool);
  const auto scripts = scripted_responses();
  const std::filesystem::path cassette_path = kRoot / "fixtures/cassettes/demo.jsonl";
  std::filesystem::remove(cassette_path);

  for (const dataset::CaseManifest& manifest : suite.cases) {
    ScriptedResponse script;
    if (auto it = scripts.find(manifest.id); it != scripts.end()) {
      script = it->second;
    } else {
      for (const dsl::ActionCall& step : manifest.ground_truth.steps) {
        script.task_sequence.push_back(dsl::render_call(step));
      }
      script.step_instructions = manifest.ground_truth.step_instructions;
    }

    // Response document: the scripted plan simulated from the case's state.
    schema::PlanDocument doc;
    doc.task_sequence = script.task_sequence;
    doc.step_instructions = script.step_instructions;
    doc.environment_before = manifest.initial_state;
    dsl::TaskPlan plan = schema::extract_plan(doc, pool);
    const world::SimulationResult sim = world::simulate_plan(manifest.initial_state, plan);
    if (!sim.ok) {
      std::cerr << "scripted plan for " << manifest.id << " fails to simulate at step "
                << sim.failed_step << "\n";
      return 1;
    }
    doc.environment_after = sim.final_state;
    const std::string plan_reply = schema::serialize_document(doc);

    const prompt::PromptBundle bundle = prompt::build_bundle(manifest, pool, prompt_config);
    const auto plan_messages = prompt::render_messages(bundle, prompt::Phase::Plan);
    gateway::Cassette::append(cassette_path,
                              {gateway::request_hash(plan_messages),
                               gateway::canonical_messages(plan_messages), plan_reply,
                               kFixedTimestamp});

    auto conversation = plan_messages;
    conversation.push_back(gateway::ChatMessage::text(gateway::Role::Assistant, plan_reply));
    const auto eval_messages =
        prompt::render_messages(bundle, prompt::Phase::Evaluate, &conversation);
    gateway::Cassette::append(cassette_path,
                              {gateway::request_hash(eval_messages),
                               gateway::canonical_messages(eval_messages),
                               judge_reply(script.judge_score, script.judge_explanation).dump(),
                               kFixedTimestamp});
  }

  // --- plan-phase wire body for the fractal case ---
  gateway::BackendConfig wire_config;
  wire_config.kind = gateway::BackendKind::Http;
  wire_config.model_name = "gpt-4v";
  wire_config.temperature = 0.0;
  wire_config.max_tokens = 1024;
  const dataset::CaseManifest fractal =
      dataset::load_case(kRoot / "cases/fractal_001.toml", pool);
  const prompt::PromptBundle fractal_bundle = prompt::build_bundle(fractal, pool, prompt_config);
  const auto fractal_messages = prompt::render_messages(fractal_bundle, prompt::Phase::Plan);
  util::write_file(kRoot / "fixtures/wire/plan_request.json",
                   gateway::wire_request(wire_config, fractal_messages).dump());

  // --- bundle hash golden ---
  util::write_file(kRoot / "fixtures/hashes/fractal_bundle.sha256",
                   prompt::bundle_hash(fractal_bundle) + "\n");

  std::cout << "fixtures written under " << kRoot.string() << "\n";
  return 0;
}
