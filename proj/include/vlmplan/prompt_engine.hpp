#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vlmplan/dataset.hpp"
#include "vlmplan/llm_gateway.hpp"
#include "vlmplan/plan_dsl.hpp"
#include "vlmplan/plan_schema.hpp"

namespace vlmplan::prompt {

struct PromptConfig {
  int eval_frame_count = 4;
  double temperature_hint = 0.0;
  // Overrides for templates/{system_role.txt, eval_request.txt}; files absent
  // from the directory fall back to the built-in defaults.
  std::optional<std::filesystem::path> templates_dir;
};

struct ImageRef {
  std::filesystem::path path;
  std::string media_type;  // "png" or "jpeg"

  bool operator==(const ImageRef&) const = default;
};

// The five prompt parts, assembled: three system blocks (role explanation,
// action-pool listing, example output document), the phase-1 user content
// (environment image + instruction), and the phase-2 user content
// (evaluation request + sampled ground-truth frames).
struct PromptBundle {
  std::array<std::string, 3> system_messages;
  ImageRef phase1_image;
  std::string phase1_instruction;
  std::string phase2_request;
  std::vector<ImageRef> phase2_frames;
};

enum class Phase { Plan, Evaluate };

class PromptError : public std::runtime_error {
 public:
  enum class Kind { AssetMissing, MissingPriorTurn };
  PromptError(Kind kind, const std::string& message) : std::runtime_error(message), kind(kind) {}
  Kind kind;
};

// Deterministic assembly; the rendered bundle for the same case, pool, and
// config is byte-identical across runs and platforms.
PromptBundle build_bundle(const dataset::CaseManifest& manifest, const dsl::ActionPool& pool,
                          const PromptConfig& config);

// Plan phase: 3 system + 1 user message. Evaluate phase: the prior
// conversation (ending in the assistant's plan reply) extended with one user
// message carrying the evaluation request and frames.
std::vector<gateway::ChatMessage> render_messages(
    const PromptBundle& bundle, Phase phase,
    const std::vector<gateway::ChatMessage>* prior = nullptr);

// Stable content hash of the rendered bundle (text plus image payload digests).
std::string bundle_hash(const PromptBundle& bundle);

// Uniform sampling with endpoints: floor(k*(N-1)/(K-1)) for k in [0, K).
// K >= N yields every index once.
std::vector<size_t> sample_frame_indices(size_t frame_count, int k);

// Built-in template texts (the files under templates/ carry the same content).
const std::string& default_system_role();
const std::string& default_eval_request();

// The canonical example document embedded as system block 3.
const schema::PlanDocument& example_document();
std::string example_output_text();

}  // namespace vlmplan::prompt
