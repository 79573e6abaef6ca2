#include <doctest.h>

#include "test_support.hpp"
#include "vlmplan/dataset.hpp"
#include "vlmplan/prompt_engine.hpp"
#include "vlmplan/util.hpp"

using namespace vlmplan;
using gateway::Role;
using prompt::Phase;
using prompt::PromptConfig;

namespace {

dataset::CaseManifest fractal_case() {
  static const dataset::CaseManifest manifest = dataset::load_case(
      test::repo_root() / "cases/fractal_001.toml", dsl::ActionPool::default_pool());
  return manifest;
}

}  // namespace

TEST_CASE("build_bundle is deterministic") {
  const auto pool = dsl::ActionPool::default_pool();
  const PromptConfig config;
  const auto a = prompt::build_bundle(fractal_case(), pool, config);
  const auto b = prompt::build_bundle(fractal_case(), pool, config);
  CHECK(a.system_messages == b.system_messages);
  CHECK(a.phase1_instruction == b.phase1_instruction);
  CHECK(prompt::bundle_hash(a) == prompt::bundle_hash(b));
}

TEST_CASE("bundle carries the five parts in order") {
  const auto pool = dsl::ActionPool::default_pool();
  const auto bundle = prompt::build_bundle(fractal_case(), pool, PromptConfig{});

  // 1: role explanation
  CHECK(bundle.system_messages[0].find("robot task planner") != std::string::npos);
  // 2: the action pool, rendered from the same pool value
  CHECK(bundle.system_messages[1].find(pool.render()) != std::string::npos);
  CHECK(bundle.system_messages[1].find("create a new action") != std::string::npos);
  // 3: example output document
  CHECK(bundle.system_messages[2].find("task_sequence") != std::string::npos);
  // 4: environment image + instruction
  CHECK(bundle.phase1_instruction.find("Move the target from the bottom drawer") !=
        std::string::npos);
  CHECK(bundle.phase1_image.media_type == "png");
  // 5: evaluation request + frames
  CHECK(bundle.phase2_request.find("matching_score") != std::string::npos);
  CHECK(bundle.phase2_frames.size() == 4);
}

TEST_CASE("frame sampling is uniform with endpoints") {
  CHECK(prompt::sample_frame_indices(9, 4) == std::vector<size_t>{0, 2, 5, 8});
  CHECK(prompt::sample_frame_indices(4, 4) == std::vector<size_t>{0, 1, 2, 3});
  CHECK(prompt::sample_frame_indices(3, 4) == std::vector<size_t>{0, 1, 2});  // K >= N takes all
  CHECK(prompt::sample_frame_indices(10, 2) == std::vector<size_t>{0, 9});
  CHECK(prompt::sample_frame_indices(10, 1) == std::vector<size_t>{0});
  CHECK(prompt::sample_frame_indices(1, 4) == std::vector<size_t>{0});
  CHECK(prompt::sample_frame_indices(0, 4).empty());
}

TEST_CASE("plan phase renders 3 system + 1 user message") {
  const auto pool = dsl::ActionPool::default_pool();
  const auto bundle = prompt::build_bundle(fractal_case(), pool, PromptConfig{});
  const auto messages = prompt::render_messages(bundle, Phase::Plan);
  REQUIRE(messages.size() == 4);
  CHECK(messages[0].role == Role::System);
  CHECK(messages[1].role == Role::System);
  CHECK(messages[2].role == Role::System);
  CHECK(messages[3].role == Role::User);
  // the user turn holds exactly one image and one instruction text
  REQUIRE(messages[3].parts.size() == 2);
  CHECK(messages[3].parts[0].kind == gateway::MessagePart::Kind::Image);
  CHECK(messages[3].parts[1].kind == gateway::MessagePart::Kind::Text);
}

TEST_CASE("evaluate phase extends the prior conversation") {
  const auto pool = dsl::ActionPool::default_pool();
  const auto bundle = prompt::build_bundle(fractal_case(), pool, PromptConfig{});

  SUBCASE("missing prior fails") {
    CHECK_THROWS_AS(prompt::render_messages(bundle, Phase::Evaluate), prompt::PromptError);
  }
  SUBCASE("prior must end in an assistant turn") {
    auto prior = prompt::render_messages(bundle, Phase::Plan);
    CHECK_THROWS_AS(prompt::render_messages(bundle, Phase::Evaluate, &prior),
                    prompt::PromptError);
  }
  SUBCASE("with prior: 6 messages ending in a user turn") {
    auto prior = prompt::render_messages(bundle, Phase::Plan);
    prior.push_back(gateway::ChatMessage::text(Role::Assistant, "{\"plan\": \"here\"}"));
    const auto messages = prompt::render_messages(bundle, Phase::Evaluate, &prior);
    REQUIRE(messages.size() == 6);
    CHECK(messages[4].role == Role::Assistant);
    CHECK(messages[5].role == Role::User);
    // eval turn: request text + 4 sampled frames
    REQUIRE(messages[5].parts.size() == 5);
    CHECK(messages[5].parts[0].kind == gateway::MessagePart::Kind::Text);
  }
}

TEST_CASE("template files override the built-in defaults") {
  const auto pool = dsl::ActionPool::default_pool();

  SUBCASE("shipped template files equal the embedded defaults") {
    CHECK(util::read_file(test::repo_root() / "templates/system_role.txt") ==
          prompt::default_system_role());
    CHECK(util::read_file(test::repo_root() / "templates/eval_request.txt") ==
          prompt::default_eval_request());
  }
  SUBCASE("override directory wins, missing files fall back") {
    test::TempDir tmp("tpl");
    util::write_file(tmp.path() / "system_role.txt", "custom role text");
    PromptConfig config;
    config.templates_dir = tmp.path();
    const auto bundle = prompt::build_bundle(fractal_case(), pool, config);
    CHECK(bundle.system_messages[0] == "custom role text");
    CHECK(bundle.phase2_request == prompt::default_eval_request());
  }
}

TEST_CASE("example document is valid against the schema it illustrates") {
  const auto& doc = prompt::example_document();
  CHECK(schema::parse_document(prompt::example_output_text()) == doc);
  const auto plan = schema::extract_plan(doc, dsl::ActionPool::default_pool());
  const auto sim = world::simulate_plan(doc.environment_before, plan);
  CHECK(sim.ok);
  CHECK(sim.final_state == doc.environment_after);
}

TEST_CASE("bundle hash is sensitive to every part") {
  const auto pool = dsl::ActionPool::default_pool();
  const auto manifest = fractal_case();
  const auto base = prompt::build_bundle(manifest, pool, PromptConfig{});

  auto changed_instruction = base;
  changed_instruction.phase1_instruction += "!";
  CHECK(prompt::bundle_hash(changed_instruction) != prompt::bundle_hash(base));

  auto changed_system = base;
  changed_system.system_messages[1] += " ";
  CHECK(prompt::bundle_hash(changed_system) != prompt::bundle_hash(base));

  auto changed_frames = base;
  changed_frames.phase2_frames.pop_back();
  CHECK(prompt::bundle_hash(changed_frames) != prompt::bundle_hash(base));

  auto changed_image = base;
  changed_image.phase1_image = base.phase2_frames[1];
  CHECK(prompt::bundle_hash(changed_image) != prompt::bundle_hash(base));
}
