#include "vlmplan/prompt_engine.hpp"

#include "vlmplan/util.hpp"

namespace vlmplan::prompt {

const std::string& default_system_role() {
  static const std::string text = R"TXT(You are a robot task planner. You control a single robot arm with one gripper. Given one environment image and a natural-language instruction, produce a step-by-step task plan that completes the instruction in that environment.

Respond with exactly one JSON object and no other text, using these keys in this order:
- "task_sequence": array of functional expressions, one per step, e.g. "move_hand(counter)". Arguments are separated by ", "; an argument may contain spaces but no commas or parentheses.
- "step_instructions": array of short imperative sentences, one per step, the same length as task_sequence.
- "environment_before": the symbolic scene before the plan runs.
- "environment_after": the symbolic scene after the plan runs.

Environment states are JSON objects with keys "objects", "locations", "at", "hand_at", "holding", and "open_state": "objects" and "locations" are string arrays, "at" maps each resting object to its location, "hand_at" and "holding" are strings or null, and "open_state" maps openable objects to "open" or "closed". Every object must appear either in "at" or as "holding", never both.

Choose actions from the predefined action pool listed next. Select and sequence them to complete the task step by step.
)TXT";
  return text;
}

const std::string& default_eval_request() {
  static const std::string text = R"TXT(The following images are frames uniformly sampled from the ground-truth video demonstration of this task, in temporal order.

Assess your task plan above against the demonstration: does the plan accomplish what the video shows, with the right objects, places, and ordering?

Respond with exactly one JSON object and no other text, with these keys:
- "matching_score": a number from 0 to 100, where 100 means the plan matches the demonstration exactly and 0 means it is unrelated.
- "explanation": one or two sentences justifying the score.
)TXT";
  return text;
}

const schema::PlanDocument& example_document() {
  static const schema::PlanDocument doc = [] {
    schema::PlanDocument d;
    d.task_sequence = {"move_hand(table)", "grasp(cup)", "move_hand(shelf)", "release(cup)"};
    d.step_instructions = {"Move the hand to the table", "Grasp the cup",
                           "Move the hand with the cup to the shelf",
                           "Release the cup onto the shelf"};
    world::WorldState before;
    before.objects = {"cup"};
    before.locations = {"shelf", "table"};
    before.at = {{"cup", "table"}};
    d.environment_before = before;
    world::WorldState after = before;
    after.at = {{"cup", "shelf"}};
    after.hand_at = "shelf";
    d.environment_after = after;
    d.matching_score = 100.0;
    d.score_explanation = "The plan moves the cup from the table to the shelf exactly as demonstrated.";
    return d;
  }();
  return doc;
}

std::string example_output_text() {
  return "Example output:\n" + schema::serialize_document(example_document()) + "\n";
}

namespace {

std::string load_template(const PromptConfig& config, const char* filename,
                          const std::string& fallback) {
  if (config.templates_dir) {
    const std::filesystem::path path = *config.templates_dir / filename;
    if (std::filesystem::exists(path)) return util::read_file(path);
  }
  return fallback;
}

ImageRef make_image_ref(const std::filesystem::path& path) {
  const std::string media = util::media_type_from_extension(path);
  if (media.empty()) {
    throw PromptError(PromptError::Kind::AssetMissing,
                      "unsupported image type: " + path.string());
  }
  if (!std::filesystem::exists(path)) {
    throw PromptError(PromptError::Kind::AssetMissing, "image not found: " + path.string());
  }
  return {path, media};
}

}  // namespace

std::vector<size_t> sample_frame_indices(size_t frame_count, int k) {
  std::vector<size_t> indices;
  if (frame_count == 0 || k <= 0) return indices;
  if (static_cast<size_t>(k) >= frame_count) {
    for (size_t i = 0; i < frame_count; ++i) indices.push_back(i);
    return indices;
  }
  if (k == 1) return {0};
  for (int i = 0; i < k; ++i) {
    indices.push_back(static_cast<size_t>(i) * (frame_count - 1) / (static_cast<size_t>(k) - 1));
  }
  return indices;
}

PromptBundle build_bundle(const dataset::CaseManifest& manifest, const dsl::ActionPool& pool,
                          const PromptConfig& config) {
  PromptBundle bundle;
  bundle.system_messages[0] = load_template(config, "system_role.txt", default_system_role());

  std::string pool_text = "Predefined action pool:\n" + pool.render();
  if (pool.allow_novel()) {
    pool_text +=
        "\nIf no predefined action fits a step, you may create a new action in the same "
        "name(arguments) form and explain it in the step instruction.\n";
  }
  bundle.system_messages[1] = pool_text;
  bundle.system_messages[2] = example_output_text();

  bundle.phase1_image = make_image_ref(manifest.image);
  bundle.phase1_instruction = "Instruction: " + manifest.instruction;

  bundle.phase2_request = load_template(config, "eval_request.txt", default_eval_request());
  for (size_t idx : sample_frame_indices(manifest.frames.size(), config.eval_frame_count)) {
    bundle.phase2_frames.push_back(make_image_ref(manifest.frames[idx]));
  }
  return bundle;
}

namespace {

gateway::ChatMessage image_text_message(const ImageRef& image, const std::string& text) {
  gateway::ChatMessage msg;
  msg.role = gateway::Role::User;
  msg.add_image(image.media_type, util::base64_encode(util::read_file(image.path)));
  msg.add_text(text);
  return msg;
}

}  // namespace

std::vector<gateway::ChatMessage> render_messages(const PromptBundle& bundle, Phase phase,
                                                  const std::vector<gateway::ChatMessage>* prior) {
  using gateway::ChatMessage;
  using gateway::Role;

  if (phase == Phase::Plan) {
    std::vector<ChatMessage> messages;
    for (const std::string& block : bundle.system_messages) {
      messages.push_back(ChatMessage::text(Role::System, block));
    }
    messages.push_back(image_text_message(bundle.phase1_image, bundle.phase1_instruction));
    return messages;
  }

  if (prior == nullptr || prior->empty() || prior->back().role != Role::Assistant) {
    throw PromptError(PromptError::Kind::MissingPriorTurn,
                      "evaluate phase requires the prior conversation ending in the "
                      "assistant's plan reply");
  }
  std::vector<ChatMessage> messages = *prior;
  ChatMessage request;
  request.role = Role::User;
  request.add_text(bundle.phase2_request);
  for (const ImageRef& frame : bundle.phase2_frames) {
    request.add_image(frame.media_type, util::base64_encode(util::read_file(frame.path)));
  }
  messages.push_back(std::move(request));
  return messages;
}

std::string bundle_hash(const PromptBundle& bundle) {
  // Length-prefixed concatenation so adjacent fields cannot alias.
  std::string blob;
  auto feed = [&blob](std::string_view piece) {
    blob += std::to_string(piece.size());
    blob.push_back(':');
    blob.append(piece);
    blob.push_back('\n');
  };
  for (const std::string& block : bundle.system_messages) feed(block);
  feed(bundle.phase1_instruction);
  feed(bundle.phase1_image.media_type);
  feed(util::sha256_hex(util::read_file(bundle.phase1_image.path)));
  feed(bundle.phase2_request);
  for (const ImageRef& frame : bundle.phase2_frames) {
    feed(frame.media_type);
    feed(util::sha256_hex(util::read_file(frame.path)));
  }
  return util::sha256_hex(blob);
}

}  // namespace vlmplan::prompt
