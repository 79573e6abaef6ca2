#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace vlmplan::gateway {

enum class Role { System, User, Assistant };

const char* to_string(Role role);

struct MessagePart {
  enum class Kind { Text, Image };
  Kind kind = Kind::Text;
  std::string text;         // Text parts
  std::string media_type;   // Image parts: "png" or "jpeg"
  std::string data_base64;  // Image parts: base64 payload

  bool operator==(const MessagePart&) const = default;
};

struct ChatMessage {
  Role role = Role::User;
  std::vector<MessagePart> parts;

  static ChatMessage text(Role role, std::string body);
  void add_text(std::string body);
  void add_image(std::string media_type, std::string data_base64);

  bool operator==(const ChatMessage&) const = default;
};

enum class BackendKind { Http, Mock, Replay };

const char* to_string(BackendKind kind);
std::optional<BackendKind> backend_kind_from_string(std::string_view s);

struct BackendConfig {
  BackendKind kind = BackendKind::Mock;
  std::string endpoint_url;   // http: full URL of the chat-completions endpoint
  std::string model_name;
  std::string auth_env_var = "VLMPLAN_API_KEY";  // empty = send no auth header
  double temperature = 0.0;   // [0, 2]
  int max_tokens = 1024;
  double timeout_seconds = 60.0;
  int max_retries = 3;
  std::filesystem::path cassette_path;  // replay: required; http: record here;
                                        // mock: optional seed responses
  // Token-bucket interval between requests. Negative means the kind default:
  // 2 s for http, unlimited for mock/replay.
  double min_request_interval_seconds = -1.0;
};

class GatewayError : public std::runtime_error {
 public:
  enum class Kind {
    AuthMissing,
    TransportError,
    CassetteMiss,
    CassetteCorrupt,
    EmptyResponse,
    BadRequest,
  };

  GatewayError(Kind kind, const std::string& message)
      : std::runtime_error(message), kind(kind) {}

  Kind kind;
};

// Stable, platform-independent hash of a rendered conversation. Image parts
// contribute their payload digest, not the inline bytes.
std::string request_hash(const std::vector<ChatMessage>& messages);

// Canonical serialization the hash is computed over; also what cassettes store.
std::string canonical_messages(const std::vector<ChatMessage>& messages);

// Chat-completions POST body for the http backend.
nlohmann::ordered_json wire_request(const BackendConfig& config,
                                    const std::vector<ChatMessage>& messages);

struct CassetteEntry {
  std::string request_hash;
  std::string request;   // canonical_messages of the request
  std::string response;
  std::string timestamp;
};

// JSON-lines request/response log. Duplicate hashes: last entry wins (a
// warning is printed when loading).
class Cassette {
 public:
  static Cassette load(const std::filesystem::path& path);  // throws CassetteCorrupt
  static void append(const std::filesystem::path& path, const CassetteEntry& entry);

  const std::string* find(const std::string& hash) const;
  size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, std::string> responses_;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  // Returns the assistant's reply text. Throws GatewayError.
  virtual std::string send_chat(const std::vector<ChatMessage>& messages) = 0;
};

// Builds the backend for the config. Mock and replay backends never perform
// network activity.
std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config);

// One-shot convenience wrapper around make_backend().
std::string send_chat(const BackendConfig& config, const std::vector<ChatMessage>& messages);

// The fixed reply a mock backend gives for conversations its cassette does
// not cover: a valid empty-plan document that also satisfies the judge-reply
// shape.
const std::string& mock_fallback_response();

}  // namespace vlmplan::gateway
