#include <doctest.h>

#include <fstream>
#include <sstream>

#include "test_support.hpp"
#include "vlmplan/pipeline.hpp"
#include "vlmplan/util.hpp"

using namespace vlmplan;
using pipeline::RunConfig;

namespace {

RunConfig mock_config(const std::filesystem::path& out_dir) {
  RunConfig config;
  config.backend.kind = gateway::BackendKind::Mock;
  config.backend.cassette_path = test::repo_root() / "fixtures/cassettes/demo.jsonl";
  config.output_dir = out_dir;
  return config;
}

std::string slurp(const std::filesystem::path& path) { return util::read_file(path); }

// Seeds a cassette entry answering this case's plan-phase request with `reply`.
void seed_plan_reply(const std::filesystem::path& cassette,
                     const std::filesystem::path& case_path, const std::string& reply) {
  const auto pool = dsl::ActionPool::default_pool();
  const auto manifest = dataset::load_case(case_path, pool);
  const auto bundle = prompt::build_bundle(manifest, pool, prompt::PromptConfig{});
  const auto messages = prompt::render_messages(bundle, prompt::Phase::Plan);
  gateway::Cassette::append(cassette, {gateway::request_hash(messages),
                                       gateway::canonical_messages(messages), reply,
                                       "2024-01-01T00:00:00Z"});
}

}  // namespace

TEST_CASE("cmd_plan on the fractal case with the demo cassette") {
  test::TempDir out("plan");
  std::ostringstream err;
  const int code = pipeline::cmd_plan(test::repo_root() / "cases/fractal_001.toml",
                                      mock_config(out.path()), err);
  CAPTURE(err.str());
  CHECK(code == 0);

  const auto doc = schema::parse_document(slurp(out.path() / "fractal_001.plan.json"));
  CHECK(doc.task_sequence.size() == 4);
  CHECK(doc.task_sequence[0] == "move_hand(bottom drawer)");

  const auto trace = nlohmann::json::parse(slurp(out.path() / "fractal_001.trace.json"));
  CHECK(trace.at("ok") == true);
  CHECK(trace.at("final_state").at("at").at("target") == "counter");
}

TEST_CASE("cmd_plan exit codes") {
  test::TempDir out("plan_err");
  std::ostringstream err;

  SUBCASE("missing case file names the path") {
    const int code =
        pipeline::cmd_plan(test::repo_root() / "cases/no_such_case.toml", mock_config(out.path()), err);
    CHECK(code == 1);
    CHECK(err.str().find("no_such_case.toml") != std::string::npos);
  }
  SUBCASE("prose-only reply maps to exit 2") {
    test::TempDir fixtures("cassette");
    const auto cassette = fixtures.path() / "prose.jsonl";
    seed_plan_reply(cassette, test::repo_root() / "cases/kuka_001.toml",
                    "I would rather chat about the weather.");
    RunConfig config = mock_config(out.path());
    config.backend.cassette_path = cassette;
    const int code =
        pipeline::cmd_plan(test::repo_root() / "cases/kuka_001.toml", config, err);
    CHECK(code == 2);
    CHECK(err.str().find("NoJsonFound") != std::string::npos);
    // the raw reply is still preserved for debugging
    CHECK(std::filesystem::exists(out.path() / "kuka_001.reply.txt"));
  }
  SUBCASE("plan that fails simulation maps to exit 3, artifacts written") {
    test::TempDir fixtures("cassette");
    const auto cassette = fixtures.path() / "bad_sim.jsonl";
    schema::PlanDocument doc;
    doc.task_sequence = {"grasp(block)"};  // hand is nowhere: co-location fails
    doc.step_instructions = {"Grasp the block"};
    const auto pool = dsl::ActionPool::default_pool();
    const auto manifest = dataset::load_case(test::repo_root() / "cases/kuka_001.toml", pool);
    doc.environment_before = manifest.initial_state;
    doc.environment_after = manifest.initial_state;
    seed_plan_reply(cassette, manifest.manifest_path, schema::serialize_document(doc));

    RunConfig config = mock_config(out.path());
    config.backend.cassette_path = cassette;
    const int code = pipeline::cmd_plan(manifest.manifest_path, config, err);
    CHECK(code == 3);
    CHECK(std::filesystem::exists(out.path() / "kuka_001.plan.json"));
    const auto trace = nlohmann::json::parse(slurp(out.path() / "kuka_001.trace.json"));
    CHECK(trace.at("ok") == false);
    CHECK(trace.at("failure").at("step") == 0);
  }
}

TEST_CASE("batch over the demo suite: row count, means, error isolation") {
  test::TempDir out("batch");
  std::ostringstream err;
  const int code = pipeline::cmd_batch(test::repo_root() / "cases", mock_config(out.path()), err);
  CAPTURE(err.str());
  CHECK(code == 0);

  const auto report = nlohmann::json::parse(slurp(out.path() / "report.json"));
  REQUIRE(report.at("per_case").size() == 15);
  CHECK(report.at("errors").empty());
  CHECK(report.at("per_dataset").at("kuka").at("mean_oracle").get<double>() ==
        doctest::Approx(0.75).epsilon(1e-12));
  CHECK(report.at("per_dataset").at("bridge").at("mean_oracle").get<double>() ==
        doctest::Approx(0.875).epsilon(1e-12));
  CHECK(report.at("per_dataset").at("toto").at("mean_oracle").get<double>() ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.at("overall").at("mean_oracle").get<double>() ==
        doctest::Approx(14.625 / 15.0).epsilon(1e-12));
  // oracle_only mode leaves judge columns empty
  CHECK(report.at("overall").at("mean_judge").is_null());

  SUBCASE("cmd_report re-aggregates to the same result") {
    const std::string before = slurp(out.path() / "report.json");
    std::ostringstream console;
    const int report_code = pipeline::cmd_report(out.path(), console, err);
    CHECK(report_code == 0);
    CHECK(slurp(out.path() / "report.json") == before);
    CHECK(console.str().find("overall") != std::string::npos);
  }
}

TEST_CASE("batch in judge mode fills judge columns from the cassette") {
  test::TempDir out("judge");
  RunConfig config = mock_config(out.path());
  config.modes = pipeline::Modes::OracleJudge;
  std::ostringstream err;
  const int code = pipeline::cmd_batch(test::repo_root() / "cases", config, err);
  CAPTURE(err.str());
  CHECK(code == 0);

  const auto report = nlohmann::json::parse(slurp(out.path() / "report.json"));
  CHECK(report.at("per_dataset").at("kuka").at("mean_judge").get<double>() ==
        doctest::Approx(60.0));
  CHECK(report.at("per_dataset").at("bridge").at("mean_judge").get<double>() ==
        doctest::Approx(80.0));
  CHECK(report.at("overall").at("mean_judge").get<double>() ==
        doctest::Approx((13 * 100.0 + 60.0 + 80.0) / 15.0));
}

TEST_CASE("batch isolates corrupt manifests as error rows, exit 4") {
  test::TempDir suite("suite");
  test::TempDir out("batch_err");
  // copy two good manifests into a scratch suite
  for (const char* id : {"kuka_001", "nyu_door_001"}) {
    std::filesystem::copy_file(test::repo_root() / "cases" / (std::string(id) + ".toml"),
                               suite.path() / (std::string(id) + ".toml"));
    std::filesystem::create_directories(suite.path() / id);
    std::filesystem::copy(test::repo_root() / "cases" / id, suite.path() / id,
                          std::filesystem::copy_options::overwrite_existing |
                          std::filesystem::copy_options::recursive);
  }
  util::write_file(suite.path() / "broken.toml", "id = \"broken\"\nthis is not toml");

  RunConfig config = mock_config(out.path());
  std::ostringstream err;
  const int code = pipeline::cmd_batch(suite.path(), config, err);
  CHECK(code == 4);
  const auto report = nlohmann::json::parse(slurp(out.path() / "report.json"));
  CHECK(report.at("per_case").size() == 2);
  REQUIRE(report.at("errors").size() == 1);
  CHECK(report.at("errors").at(0).at("case_id") == "broken");
  // the error row also appears in the CSV
  const std::string csv = slurp(out.path() / "report.csv");
  CHECK(csv.find("broken,,,,") != std::string::npos);
}

TEST_CASE("batch reports are identical across parallelism degrees") {
  test::TempDir out1("p1");
  test::TempDir out8("p8");
  RunConfig c1 = mock_config(out1.path());
  c1.parallelism = 1;
  RunConfig c8 = mock_config(out8.path());
  c8.parallelism = 8;
  std::ostringstream err;
  REQUIRE(pipeline::cmd_batch(test::repo_root() / "cases", c1, err) == 0);
  REQUIRE(pipeline::cmd_batch(test::repo_root() / "cases", c8, err) == 0);
  CHECK(slurp(out1.path() / "report.json") == slurp(out8.path() / "report.json"));
  CHECK(slurp(out1.path() / "report.csv") == slurp(out8.path() / "report.csv"));
  CHECK(slurp(out1.path() / "summary.txt") == slurp(out8.path() / "summary.txt"));
}

TEST_CASE("cmd_report on an empty directory reports NoResultsFound") {
  test::TempDir empty("empty");
  std::ostringstream out;
  std::ostringstream err;
  CHECK(pipeline::cmd_report(empty.path(), out, err) == 1);
  CHECK(err.str().find("NoResultsFound") != std::string::npos);
}

TEST_CASE("apply_config_file maps harness.toml onto RunConfig") {
  test::TempDir tmp("config");
  util::write_file(tmp.path() / "harness.toml", R"(
pool = "my_pool.json"
out = "results"
parallel = 2
modes = "oracle+judge"
eval_frames = 6
strict_colocation = false

[backend]
kind = "replay"
cassette = "run.jsonl"
model = "gpt-4v"
temperature = 0.5
max_retries = 7
)");
  RunConfig config;
  pipeline::apply_config_file(config, tmp.path() / "harness.toml");
  CHECK(config.pool_file == std::filesystem::path("my_pool.json"));
  CHECK(config.output_dir == std::filesystem::path("results"));
  CHECK(config.parallelism == 2);
  CHECK(config.modes == pipeline::Modes::OracleJudge);
  CHECK(config.eval_frame_count == 6);
  CHECK(config.strict_colocation == false);
  CHECK(config.backend.kind == gateway::BackendKind::Replay);
  CHECK(config.backend.cassette_path == std::filesystem::path("run.jsonl"));
  CHECK(config.backend.model_name == "gpt-4v");
  CHECK(config.backend.temperature == 0.5);
  CHECK(config.backend.max_retries == 7);

  util::write_file(tmp.path() / "bad.toml", "parallel = 0");
  RunConfig other;
  CHECK_THROWS(pipeline::apply_config_file(other, tmp.path() / "bad.toml"));
}

TEST_CASE("suite pool.json overrides the default pool") {
  test::TempDir suite("poolsuite");
  test::TempDir out("poolout");
  // a pool without grasp: the fractal ground truth no longer validates
  nlohmann::json pool_json = {
      {"allow_novel", false},
      {"actions",
       {{{"name", "move_hand"}, {"params", {"location"}}, {"description", "Move."}}}}};
  util::write_file(suite.path() / "pool.json", pool_json.dump());
  std::filesystem::copy_file(test::repo_root() / "cases/fractal_001.toml",
                             suite.path() / "fractal_001.toml");
  std::filesystem::create_directories(suite.path() / "fractal_001");
  std::filesystem::copy(test::repo_root() / "cases/fractal_001", suite.path() / "fractal_001",
                        std::filesystem::copy_options::overwrite_existing |
                          std::filesystem::copy_options::recursive);

  RunConfig config = mock_config(out.path());
  std::ostringstream err;
  const int code = pipeline::cmd_batch(suite.path(), config, err);
  CHECK(code == 4);  // ground truth fails to validate against the restricted pool
  CHECK(err.str().find("ground_truth") != std::string::npos);
}
