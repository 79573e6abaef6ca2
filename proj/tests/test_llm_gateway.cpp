#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include "test_support.hpp"
#include "vlmplan/llm_gateway.hpp"
#include "vlmplan/util.hpp"

using namespace vlmplan;
using gateway::BackendConfig;
using gateway::BackendKind;
using gateway::ChatMessage;
using gateway::GatewayError;
using gateway::Role;

namespace {

std::vector<ChatMessage> sample_messages(const std::string& instruction = "pick anything") {
  std::vector<ChatMessage> messages;
  messages.push_back(ChatMessage::text(Role::System, "You are a robot task planner."));
  ChatMessage user;
  user.role = Role::User;
  user.add_image("png", util::base64_encode("fake png bytes"));
  user.add_text(instruction);
  messages.push_back(user);
  return messages;
}

// Minimal chat-completions stub. Captures request bodies and serves scripted
// status sequences.
class StubServer {
 public:
  explicit StubServer(std::string reply_content = "{\"ok\": true}")
      : reply_content_(std::move(reply_content)) {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req,
                                                httplib::Response& res) {
      last_body = req.body;
      last_auth = req.get_header_value("Authorization");
      ++hits;
      if (!status_script_.empty()) {
        const int status = status_script_.front();
        status_script_.erase(status_script_.begin());
        if (status != 200) {
          res.status = status;
          res.set_content("busy", "text/plain");
          return;
        }
      }
      nlohmann::json reply = {
          {"choices", {{{"message", {{"role", "assistant"}, {"content", reply_content_}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const {
    return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
  }

  void script_statuses(std::vector<int> statuses) { status_script_ = std::move(statuses); }

  std::string last_body;
  std::string last_auth;
  std::atomic<int> hits{0};

 private:
  httplib::Server server_;
  std::string reply_content_;
  std::vector<int> status_script_;
  int port_ = 0;
  std::thread thread_;
};

BackendConfig http_config(const StubServer& server) {
  BackendConfig config;
  config.kind = BackendKind::Http;
  config.endpoint_url = server.url();
  config.model_name = "test-model";
  config.auth_env_var = "VLMPLAN_TEST_KEY";
  config.min_request_interval_seconds = 0;
  config.max_retries = 1;
  return config;
}

struct EnvVarGuard {
  EnvVarGuard(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~EnvVarGuard() { ::unsetenv(name_); }
  const char* name_;
};

}  // namespace

TEST_CASE("send_chat rejects empty and malformed message lists") {
  BackendConfig config;  // mock
  CHECK_THROWS_AS(gateway::send_chat(config, {}), GatewayError);

  ChatMessage empty_parts;
  empty_parts.role = Role::User;
  CHECK_THROWS_AS(gateway::send_chat(config, {empty_parts}), GatewayError);

  ChatMessage bad_media;
  bad_media.role = Role::User;
  bad_media.add_image("gif", "abc");
  CHECK_THROWS_AS(gateway::send_chat(config, {bad_media}), GatewayError);
}

TEST_CASE("mock backend is deterministic and offline") {
  BackendConfig config;
  config.kind = BackendKind::Mock;
  // An unroutable endpoint: any network attempt would fail loudly.
  config.endpoint_url = "http://127.0.0.1:9/unreachable";

  const std::string first = gateway::send_chat(config, sample_messages());
  const std::string second = gateway::send_chat(config, sample_messages());
  CHECK(first == second);
  CHECK(!first.empty());
}

TEST_CASE("request_hash keys on content, images by digest") {
  const auto a = sample_messages("pick anything");
  const auto b = sample_messages("pick anything");
  const auto c = sample_messages("pick something else");
  CHECK(gateway::request_hash(a) == gateway::request_hash(b));
  CHECK(gateway::request_hash(a) != gateway::request_hash(c));

  // canonical serialization stores a digest, not the payload
  CHECK(gateway::canonical_messages(a).find(util::base64_encode("fake png bytes")) ==
        std::string::npos);
}

TEST_CASE("cassette record and replay round-trip") {
  test::TempDir tmp("cassette");
  const auto cassette_path = tmp.path() / "run.jsonl";

  const auto messages = sample_messages();
  gateway::Cassette::append(cassette_path,
                            {gateway::request_hash(messages), gateway::canonical_messages(messages),
                             "recorded reply", util::utc_timestamp()});

  BackendConfig replay;
  replay.kind = BackendKind::Replay;
  replay.cassette_path = cassette_path;
  replay.endpoint_url = "http://127.0.0.1:9/unreachable";
  CHECK(gateway::send_chat(replay, messages) == "recorded reply");

  SUBCASE("replay misses on mutated content") {
    CHECK_THROWS_AS(gateway::send_chat(replay, sample_messages("now changed")), GatewayError);
    try {
      gateway::send_chat(replay, sample_messages("now changed"));
    } catch (const GatewayError& e) {
      CHECK(e.kind == GatewayError::Kind::CassetteMiss);
    }
  }
  SUBCASE("mock falls back instead of missing") {
    BackendConfig mock = replay;
    mock.kind = BackendKind::Mock;
    CHECK(gateway::send_chat(mock, messages) == "recorded reply");
    CHECK(gateway::send_chat(mock, sample_messages("now changed")) ==
          gateway::mock_fallback_response());
  }
  SUBCASE("duplicate hashes: last entry wins") {
    gateway::Cassette::append(cassette_path, {gateway::request_hash(messages),
                                              gateway::canonical_messages(messages),
                                              "second reply", util::utc_timestamp()});
    CHECK(gateway::send_chat(replay, messages) == "second reply");
  }
}

TEST_CASE("replay requires a cassette and rejects corrupt ones") {
  BackendConfig config;
  config.kind = BackendKind::Replay;
  CHECK_THROWS_AS(gateway::make_backend(config), GatewayError);

  test::TempDir tmp("corrupt");
  const auto path = tmp.path() / "bad.jsonl";
  util::write_file(path, "this is not json\n");
  config.cassette_path = path;
  try {
    gateway::make_backend(config);
    FAIL("expected CassetteCorrupt");
  } catch (const GatewayError& e) {
    CHECK(e.kind == GatewayError::Kind::CassetteCorrupt);
  }
}

TEST_CASE("http backend posts the wire format and parses replies") {
  EnvVarGuard key("VLMPLAN_TEST_KEY", "sekrit");
  StubServer server("the plan");
  const BackendConfig config = http_config(server);

  const std::string reply = gateway::send_chat(config, sample_messages());
  CHECK(reply == "the plan");
  CHECK(server.last_auth == "Bearer sekrit");

  const nlohmann::json body = nlohmann::json::parse(server.last_body);
  CHECK(body.at("model") == "test-model");
  CHECK(body.at("temperature") == 0.0);
  CHECK(body.at("max_tokens") == 1024);
  REQUIRE(body.at("messages").size() == 2);
  CHECK(body.at("messages").at(0).at("role") == "system");
  const auto& image_part = body.at("messages").at(1).at("content").at(0);
  CHECK(image_part.at("type") == "image_url");
  const std::string url = image_part.at("image_url").at("url").get<std::string>();
  CHECK(url.rfind("data:image/png;base64,", 0) == 0);
}

TEST_CASE("http backend retries transient failures then succeeds") {
  EnvVarGuard key("VLMPLAN_TEST_KEY", "sekrit");
  StubServer server("eventually fine");
  server.script_statuses({500, 200});
  BackendConfig config = http_config(server);

  const std::string reply = gateway::send_chat(config, sample_messages());
  CHECK(reply == "eventually fine");
  CHECK(server.hits == 2);
}

TEST_CASE("http backend fails after exhausting retries") {
  EnvVarGuard key("VLMPLAN_TEST_KEY", "sekrit");
  StubServer server;
  server.script_statuses({503, 503});
  BackendConfig config = http_config(server);
  config.max_retries = 1;
  try {
    gateway::send_chat(config, sample_messages());
    FAIL("expected TransportError");
  } catch (const GatewayError& e) {
    CHECK(e.kind == GatewayError::Kind::TransportError);
  }
  CHECK(server.hits == 2);
}

TEST_CASE("http backend requires resolvable credentials") {
  StubServer server;
  BackendConfig config = http_config(server);
  config.auth_env_var = "VLMPLAN_DEFINITELY_UNSET_VAR";
  try {
    gateway::make_backend(config);
    FAIL("expected AuthMissing");
  } catch (const GatewayError& e) {
    CHECK(e.kind == GatewayError::Kind::AuthMissing);
  }
  CHECK(server.hits == 0);
}

TEST_CASE("backend config bounds are enforced") {
  BackendConfig config;
  config.temperature = 2.5;
  CHECK_THROWS_AS(gateway::make_backend(config), GatewayError);
  config.temperature = 0.0;
  config.max_tokens = 0;
  CHECK_THROWS_AS(gateway::make_backend(config), GatewayError);
}

TEST_CASE("empty assistant content raises EmptyResponse") {
  EnvVarGuard key("VLMPLAN_TEST_KEY", "sekrit");
  StubServer server("");
  const BackendConfig config = http_config(server);
  try {
    gateway::send_chat(config, sample_messages());
    FAIL("expected EmptyResponse");
  } catch (const GatewayError& e) {
    CHECK(e.kind == GatewayError::Kind::EmptyResponse);
  }
}

TEST_CASE("http rate limiter spaces out requests per handle") {
  EnvVarGuard key("VLMPLAN_TEST_KEY", "sekrit");
  StubServer server("spaced");
  BackendConfig config = http_config(server);
  config.min_request_interval_seconds = 0.15;
  auto backend = gateway::make_backend(config);

  const auto start = std::chrono::steady_clock::now();
  backend->send_chat(sample_messages("first"));
  backend->send_chat(sample_messages("second"));
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(elapsed >= 0.15);
  CHECK(server.hits == 2);
}

TEST_CASE("http backend records a cassette that replays offline") {
  EnvVarGuard key("VLMPLAN_TEST_KEY", "sekrit");
  test::TempDir tmp("record");
  StubServer server("recorded via http");
  BackendConfig config = http_config(server);
  config.cassette_path = tmp.path() / "run.jsonl";

  const auto messages = sample_messages();
  CHECK(gateway::send_chat(config, messages) == "recorded via http");

  BackendConfig replay;
  replay.kind = BackendKind::Replay;
  replay.cassette_path = config.cassette_path;
  CHECK(gateway::send_chat(replay, messages) == "recorded via http");
}
