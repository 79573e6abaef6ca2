#include "vlmplan/llm_gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "vlmplan/util.hpp"

namespace vlmplan::gateway {

const char* to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  return "?";
}

const char* to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Http: return "http";
    case BackendKind::Mock: return "mock";
    case BackendKind::Replay: return "replay";
  }
  return "?";
}

std::optional<BackendKind> backend_kind_from_string(std::string_view s) {
  if (s == "http") return BackendKind::Http;
  if (s == "mock") return BackendKind::Mock;
  if (s == "replay") return BackendKind::Replay;
  return std::nullopt;
}

ChatMessage ChatMessage::text(Role role, std::string body) {
  ChatMessage m;
  m.role = role;
  m.add_text(std::move(body));
  return m;
}

void ChatMessage::add_text(std::string body) {
  parts.push_back({MessagePart::Kind::Text, std::move(body), "", ""});
}

void ChatMessage::add_image(std::string media_type, std::string data_base64) {
  parts.push_back({MessagePart::Kind::Image, "", std::move(media_type), std::move(data_base64)});
}

std::string canonical_messages(const std::vector<ChatMessage>& messages) {
  nlohmann::ordered_json root;
  root["messages"] = nlohmann::ordered_json::array();
  for (const ChatMessage& m : messages) {
    nlohmann::ordered_json msg;
    msg["role"] = to_string(m.role);
    msg["parts"] = nlohmann::ordered_json::array();
    for (const MessagePart& p : m.parts) {
      nlohmann::ordered_json part;
      if (p.kind == MessagePart::Kind::Text) {
        part["type"] = "text";
        part["text"] = p.text;
      } else {
        part["type"] = "image";
        part["media"] = p.media_type;
        part["sha256"] = util::sha256_hex(p.data_base64);
      }
      msg["parts"].push_back(std::move(part));
    }
    root["messages"].push_back(std::move(msg));
  }
  return root.dump();
}

std::string request_hash(const std::vector<ChatMessage>& messages) {
  return util::sha256_hex(canonical_messages(messages));
}

nlohmann::ordered_json wire_request(const BackendConfig& config,
                                    const std::vector<ChatMessage>& messages) {
  nlohmann::ordered_json body;
  body["model"] = config.model_name;
  body["messages"] = nlohmann::ordered_json::array();
  for (const ChatMessage& m : messages) {
    nlohmann::ordered_json msg;
    msg["role"] = to_string(m.role);
    msg["content"] = nlohmann::ordered_json::array();
    for (const MessagePart& p : m.parts) {
      nlohmann::ordered_json part;
      if (p.kind == MessagePart::Kind::Text) {
        part["type"] = "text";
        part["text"] = p.text;
      } else {
        part["type"] = "image_url";
        part["image_url"]["url"] = "data:image/" + p.media_type + ";base64," + p.data_base64;
      }
      msg["content"].push_back(std::move(part));
    }
    body["messages"].push_back(std::move(msg));
  }
  body["temperature"] = config.temperature;
  body["max_tokens"] = config.max_tokens;
  return body;
}

Cassette Cassette::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw GatewayError(GatewayError::Kind::CassetteCorrupt,
                       "cannot open cassette: " + path.string());
  }
  Cassette cassette;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (util::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw GatewayError(GatewayError::Kind::CassetteCorrupt,
                         path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.contains("request_hash") || !j.contains("response")) {
      throw GatewayError(GatewayError::Kind::CassetteCorrupt,
                         path.string() + ":" + std::to_string(lineno) +
                             ": entry needs request_hash and response");
    }
    const std::string hash = j.at("request_hash").get<std::string>();
    auto [it, inserted] = cassette.responses_.emplace(hash, j.at("response").get<std::string>());
    if (!inserted) {
      std::cerr << "warning: cassette " << path.string() << " has duplicate entry for "
                << hash.substr(0, 12) << "..., last one wins\n";
      it->second = j.at("response").get<std::string>();
    }
  }
  return cassette;
}

void Cassette::append(const std::filesystem::path& path, const CassetteEntry& entry) {
  // One writer at a time; concurrent batch workers share cassette files.
  static std::mutex append_mutex;
  std::lock_guard<std::mutex> lock(append_mutex);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) {
    throw GatewayError(GatewayError::Kind::CassetteCorrupt,
                       "cannot open cassette for append: " + path.string());
  }
  nlohmann::ordered_json j;
  j["request_hash"] = entry.request_hash;
  j["request"] = entry.request;
  j["response"] = entry.response;
  j["timestamp"] = entry.timestamp;
  out << j.dump() << "\n";
}

const std::string* Cassette::find(const std::string& hash) const {
  auto it = responses_.find(hash);
  return it == responses_.end() ? nullptr : &it->second;
}

const std::string& mock_fallback_response() {
  static const std::string response = nlohmann::ordered_json{
      {"task_sequence", nlohmann::ordered_json::array()},
      {"step_instructions", nlohmann::ordered_json::array()},
      {"environment_before",
       {{"objects", nlohmann::ordered_json::array()},
        {"locations", nlohmann::ordered_json::array()},
        {"at", nlohmann::ordered_json::object()},
        {"hand_at", nullptr},
        {"holding", nullptr},
        {"open_state", nlohmann::ordered_json::object()}}},
      {"environment_after",
       {{"objects", nlohmann::ordered_json::array()},
        {"locations", nlohmann::ordered_json::array()},
        {"at", nlohmann::ordered_json::object()},
        {"hand_at", nullptr},
        {"holding", nullptr},
        {"open_state", nlohmann::ordered_json::object()}}},
      {"matching_score", 0},
      {"score_explanation", "deterministic mock fallback"},
      {"explanation", "deterministic mock fallback"}}.dump(2);
  return response;
}

namespace {

void require_messages(const std::vector<ChatMessage>& messages) {
  if (messages.empty()) {
    throw GatewayError(GatewayError::Kind::BadRequest, "message list is empty");
  }
  for (const ChatMessage& m : messages) {
    if (m.parts.empty()) {
      throw GatewayError(GatewayError::Kind::BadRequest, "message has no parts");
    }
    for (const MessagePart& p : m.parts) {
      if (p.kind == MessagePart::Kind::Image && p.media_type != "png" && p.media_type != "jpeg") {
        throw GatewayError(GatewayError::Kind::BadRequest,
                           "unsupported image media type: " + p.media_type);
      }
    }
  }
}

class MockBackend final : public ChatBackend {
 public:
  explicit MockBackend(const BackendConfig& config) {
    if (!config.cassette_path.empty()) cassette_ = Cassette::load(config.cassette_path);
  }

  std::string send_chat(const std::vector<ChatMessage>& messages) override {
    require_messages(messages);
    if (cassette_) {
      if (const std::string* hit = cassette_->find(request_hash(messages))) return *hit;
    }
    return mock_fallback_response();
  }

 private:
  std::optional<Cassette> cassette_;
};

class ReplayBackend final : public ChatBackend {
 public:
  explicit ReplayBackend(const BackendConfig& config) {
    if (config.cassette_path.empty()) {
      throw GatewayError(GatewayError::Kind::BadRequest, "replay backend requires cassette_path");
    }
    cassette_ = Cassette::load(config.cassette_path);
  }

  std::string send_chat(const std::vector<ChatMessage>& messages) override {
    require_messages(messages);
    const std::string hash = request_hash(messages);
    if (const std::string* hit = cassette_.find(hash)) return *hit;
    throw GatewayError(GatewayError::Kind::CassetteMiss,
                       "no cassette entry for request " + hash.substr(0, 12) + "...");
  }

 private:
  Cassette cassette_;
};

// Splits "http(s)://host[:port]/path" into origin and path.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw GatewayError(GatewayError::Kind::BadRequest, "endpoint_url missing scheme: " + url);
  }
  const size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpBackend final : public ChatBackend {
 public:
  explicit HttpBackend(const BackendConfig& config) : config_(config) {
    if (config.endpoint_url.empty() || config.model_name.empty()) {
      throw GatewayError(GatewayError::Kind::BadRequest,
                         "http backend requires endpoint_url and model_name");
    }
    if (!config.auth_env_var.empty()) {
      const char* token = std::getenv(config.auth_env_var.c_str());
      if (token == nullptr || *token == '\0') {
        throw GatewayError(GatewayError::Kind::AuthMissing,
                           "environment variable " + config.auth_env_var + " is not set");
      }
      token_ = token;
    }
    interval_seconds_ = config.min_request_interval_seconds >= 0
                            ? config.min_request_interval_seconds
                            : 2.0;
  }

  std::string send_chat(const std::vector<ChatMessage>& messages) override {
    require_messages(messages);
    const std::string body = wire_request(config_, messages).dump();

    std::string response_text;
    std::string last_error;
    std::mt19937 jitter_rng(std::random_device{}());
    std::uniform_real_distribution<double> jitter(-0.2, 0.2);

    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        const double backoff = std::ldexp(1.0, attempt - 1);  // 1s, 2s, 4s, ...
        const double delay = backoff * (1.0 + jitter(jitter_rng));
        std::this_thread::sleep_for(std::chrono::duration<double>(delay));
      }
      rate_limit();
      if (try_once(body, response_text, last_error)) {
        return finish(messages, response_text);
      }
    }
    throw GatewayError(GatewayError::Kind::TransportError,
                       "request failed after " + std::to_string(config_.max_retries + 1) +
                           " attempt(s): " + last_error);
  }

 private:
  void rate_limit() {
    if (interval_seconds_ <= 0) return;
    std::unique_lock<std::mutex> lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    if (last_request_) {
      const auto earliest =
          *last_request_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                               std::chrono::duration<double>(interval_seconds_));
      if (now < earliest) {
        std::this_thread::sleep_until(earliest);
      }
    }
    last_request_ = std::chrono::steady_clock::now();
  }

  bool try_once(const std::string& body, std::string& response_text, std::string& last_error) {
    auto [origin, path] = split_url(config_.endpoint_url);
    httplib::Client client(origin);
    client.set_connection_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    client.set_read_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    client.set_write_timeout(std::chrono::duration<double>(config_.timeout_seconds));
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

    httplib::Result result = client.Post(path, headers, body, "application/json");
    if (!result) {
      last_error = "transport: " + httplib::to_string(result.error());
      return false;
    }
    if (result->status == 429 || result->status >= 500) {
      last_error = "HTTP " + std::to_string(result->status);
      return false;  // transient, retry
    }
    if (result->status < 200 || result->status >= 300) {
      throw GatewayError(GatewayError::Kind::TransportError,
                         "HTTP " + std::to_string(result->status) + ": " +
                             result->body.substr(0, 200));
    }
    response_text = result->body;
    return true;
  }

  std::string finish(const std::vector<ChatMessage>& messages, const std::string& raw) {
    const std::string content = extract_content(raw);
    if (content.empty()) {
      throw GatewayError(GatewayError::Kind::EmptyResponse, "assistant reply is empty");
    }
    if (!config_.cassette_path.empty()) {
      Cassette::append(config_.cassette_path, {request_hash(messages), canonical_messages(messages),
                                               content, util::utc_timestamp()});
    }
    return content;
  }

  static std::string extract_content(const std::string& raw) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
      throw GatewayError(GatewayError::Kind::TransportError, "response is not JSON");
    }
    if (!j.contains("choices") || !j.at("choices").is_array() || j.at("choices").empty()) {
      throw GatewayError(GatewayError::Kind::EmptyResponse, "response has no choices");
    }
    const auto& message = j.at("choices").at(0).at("message");
    const auto& content = message.at("content");
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) {  // some providers return content parts
      std::string text;
      for (const auto& part : content) {
        if (part.contains("text")) text += part.at("text").get<std::string>();
      }
      return text;
    }
    return "";
  }

  BackendConfig config_;
  std::string token_;
  double interval_seconds_ = 2.0;
  std::mutex mutex_;
  std::optional<std::chrono::steady_clock::time_point> last_request_;
};

}  // namespace

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config) {
  if (config.temperature < 0.0 || config.temperature > 2.0) {
    throw GatewayError(GatewayError::Kind::BadRequest, "temperature must lie in [0, 2]");
  }
  if (config.max_tokens <= 0) {
    throw GatewayError(GatewayError::Kind::BadRequest, "max_tokens must be positive");
  }
  switch (config.kind) {
    case BackendKind::Http: return std::make_unique<HttpBackend>(config);
    case BackendKind::Mock: return std::make_unique<MockBackend>(config);
    case BackendKind::Replay: return std::make_unique<ReplayBackend>(config);
  }
  throw GatewayError(GatewayError::Kind::BadRequest, "unknown backend kind");
}

std::string send_chat(const BackendConfig& config, const std::vector<ChatMessage>& messages) {
  return make_backend(config)->send_chat(messages);
}

}  // namespace vlmplan::gateway
