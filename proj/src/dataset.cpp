#include "vlmplan/dataset.hpp"

#include <algorithm>

#include "vlmplan/toml_lite.hpp"
#include "vlmplan/util.hpp"

namespace vlmplan::dataset {

const char* to_string(ManifestErrorKind kind) {
  switch (kind) {
    case ManifestErrorKind::ManifestMalformed: return "ManifestMalformed";
    case ManifestErrorKind::AssetMissing: return "AssetMissing";
    case ManifestErrorKind::DuplicateCaseId: return "DuplicateCaseId";
  }
  return "?";
}

const char* to_string(AssetProblemKind kind) {
  switch (kind) {
    case AssetProblemKind::MissingFile: return "MissingFile";
    case AssetProblemKind::UnreadableImage: return "UnreadableImage";
    case AssetProblemKind::FirstFrameMismatch: return "FirstFrameMismatch";
    case AssetProblemKind::EmptyFrames: return "EmptyFrames";
  }
  return "?";
}

namespace {

[[noreturn]] void malformed(const std::filesystem::path& path, const std::string& why) {
  throw ManifestError(ManifestErrorKind::ManifestMalformed, path.string() + ": " + why);
}

std::string required_string(const nlohmann::json& j, const char* key,
                            const std::filesystem::path& path) {
  if (!j.contains(key) || !j.at(key).is_string()) {
    malformed(path, std::string("missing or non-string field '") + key + "'");
  }
  return j.at(key).get<std::string>();
}

std::vector<std::string> required_string_array(const nlohmann::json& j, const char* key,
                                               const std::filesystem::path& path) {
  if (!j.contains(key) || !j.at(key).is_array()) {
    malformed(path, std::string("missing or non-array field '") + key + "'");
  }
  std::vector<std::string> out;
  for (const auto& v : j.at(key)) {
    if (!v.is_string()) malformed(path, std::string("'") + key + "' entries must be strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

}  // namespace

CaseManifest load_case(const std::filesystem::path& path, const dsl::ActionPool& pool) {
  if (!std::filesystem::exists(path)) {
    throw ManifestError(ManifestErrorKind::ManifestMalformed,
                        "case manifest not found: " + path.string());
  }
  nlohmann::json doc;
  try {
    doc = toml::parse(util::read_file(path));
  } catch (const toml::TomlError& e) {
    malformed(path, e.what());
  }

  CaseManifest m;
  m.manifest_path = path;
  const std::filesystem::path dir = path.parent_path();

  m.id = required_string(doc, "id", path);
  m.dataset = required_string(doc, "dataset", path);
  m.instruction = required_string(doc, "instruction", path);
  m.provenance = doc.value("provenance", std::string("authored"));
  if (m.id.empty()) malformed(path, "id must be non-empty");
  if (m.dataset.empty()) malformed(path, "dataset must be non-empty");

  m.image = dir / required_string(doc, "image", path);
  for (const std::string& frame : required_string_array(doc, "frames", path)) {
    m.frames.push_back(dir / frame);
  }
  if (m.frames.empty()) malformed(path, "frames must be non-empty");
  if (m.frames.front() != m.image) {
    malformed(path, "image must equal frames[0] (first-frame rule)");
  }
  if (!std::filesystem::exists(m.image)) {
    throw ManifestError(ManifestErrorKind::AssetMissing,
                        path.string() + ": image file missing: " + m.image.string());
  }
  for (const auto& frame : m.frames) {
    if (!std::filesystem::exists(frame)) {
      throw ManifestError(ManifestErrorKind::AssetMissing,
                          path.string() + ": frame file missing: " + frame.string());
    }
  }

  if (!doc.contains("initial_state") || !doc.at("initial_state").is_object()) {
    malformed(path, "missing [initial_state] table");
  }
  try {
    m.initial_state = world::parse_state(doc.at("initial_state"));
  } catch (const world::MalformedState& e) {
    malformed(path, std::string("initial_state: ") + e.what());
  }

  if (!doc.contains("ground_truth") || !doc.at("ground_truth").is_object()) {
    malformed(path, "missing [ground_truth] table");
  }
  const auto& gt = doc.at("ground_truth");
  const std::vector<std::string> sequence = required_string_array(gt, "task_sequence", path);
  m.ground_truth.step_instructions = required_string_array(gt, "step_instructions", path);
  if (sequence.size() != m.ground_truth.step_instructions.size()) {
    malformed(path, "ground_truth task_sequence and step_instructions lengths differ");
  }
  for (size_t i = 0; i < sequence.size(); ++i) {
    dsl::ParseResult parsed = dsl::parse_call(sequence[i], pool);
    if (!parsed.ok()) {
      malformed(path, "ground_truth step " + std::to_string(i) + ": " + parsed.error->message);
    }
    m.ground_truth.steps.push_back(std::move(*parsed.call));
  }
  return m;
}

std::optional<std::filesystem::path> find_pool_file(const std::filesystem::path& dir) {
  const std::filesystem::path candidate = dir / "pool.json";
  if (std::filesystem::exists(candidate)) return candidate;
  return std::nullopt;
}

CaseSuite load_suite(const std::filesystem::path& dir, const dsl::ActionPool& pool) {
  if (!std::filesystem::is_directory(dir)) {
    throw ManifestError(ManifestErrorKind::ManifestMalformed,
                        "suite directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> manifests;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".toml") {
      manifests.push_back(entry.path());
    }
  }
  std::sort(manifests.begin(), manifests.end());

  CaseSuite suite;
  suite.pool_file = find_pool_file(dir);
  for (const auto& manifest : manifests) {
    CaseManifest m = load_case(manifest, pool);
    for (const CaseManifest& existing : suite.cases) {
      if (existing.id == m.id) {
        throw ManifestError(ManifestErrorKind::DuplicateCaseId,
                            "duplicate case id '" + m.id + "' in " + manifest.string() + " and " +
                                existing.manifest_path.string());
      }
    }
    suite.cases.push_back(std::move(m));
  }
  std::sort(suite.cases.begin(), suite.cases.end(),
            [](const CaseManifest& a, const CaseManifest& b) { return a.id < b.id; });
  return suite;
}

namespace {

void check_image_file(const std::filesystem::path& path, std::vector<AssetProblem>& problems) {
  if (!std::filesystem::exists(path)) {
    problems.push_back({AssetProblemKind::MissingFile, path.string()});
    return;
  }
  std::string head;
  try {
    head = util::read_file(path).substr(0, 16);
  } catch (const std::exception& e) {
    problems.push_back({AssetProblemKind::UnreadableImage, e.what()});
    return;
  }
  const std::string media = util::media_type_from_extension(path);
  if (media == "png" && !util::has_png_magic(head)) {
    problems.push_back({AssetProblemKind::UnreadableImage, path.string() + ": bad PNG header"});
  } else if (media == "jpeg" && !util::has_jpeg_magic(head)) {
    problems.push_back({AssetProblemKind::UnreadableImage, path.string() + ": bad JPEG header"});
  } else if (media.empty()) {
    problems.push_back(
        {AssetProblemKind::UnreadableImage, path.string() + ": unsupported image extension"});
  }
}

}  // namespace

std::vector<AssetProblem> verify_assets(const CaseManifest& manifest) {
  std::vector<AssetProblem> problems;
  if (manifest.frames.empty()) {
    problems.push_back({AssetProblemKind::EmptyFrames, manifest.id});
    return problems;
  }
  if (manifest.image != manifest.frames.front()) {
    problems.push_back({AssetProblemKind::FirstFrameMismatch,
                        manifest.image.string() + " != " + manifest.frames.front().string()});
  }
  check_image_file(manifest.image, problems);
  for (size_t i = 1; i < manifest.frames.size(); ++i) {
    check_image_file(manifest.frames[i], problems);
  }
  return problems;
}

}  // namespace vlmplan::dataset
