#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vlmplan/plan_dsl.hpp"
#include "vlmplan/world_model.hpp"

namespace vlmplan::dataset {

enum class ManifestErrorKind { ManifestMalformed, AssetMissing, DuplicateCaseId };

const char* to_string(ManifestErrorKind kind);

class ManifestError : public std::runtime_error {
 public:
  ManifestError(ManifestErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind(kind) {}
  ManifestErrorKind kind;
};

// One dataset episode: instruction, pre-extracted frames, the symbolic
// initial scene, and the ground-truth plan transcribed from the demonstration.
struct CaseManifest {
  std::string id;
  std::string dataset;
  std::string instruction;
  std::string provenance;  // "paper" or "authored"
  std::filesystem::path image;          // first frame
  std::vector<std::filesystem::path> frames;
  world::WorldState initial_state;
  dsl::TaskPlan ground_truth;
  std::filesystem::path manifest_path;
};

struct CaseSuite {
  std::vector<CaseManifest> cases;  // sorted by id
  std::optional<std::filesystem::path> pool_file;
};

// Parses a TOML manifest; relative asset paths resolve against the manifest's
// directory. Ground truth is validated against the pool. Throws ManifestError.
CaseManifest load_case(const std::filesystem::path& path, const dsl::ActionPool& pool);

// Loads every *.toml under dir (non-recursive, sorted). Duplicate case ids
// raise DuplicateCaseId. A pool.json next to the manifests, when present, is
// reported as the suite's pool_file (callers resolve pool precedence).
CaseSuite load_suite(const std::filesystem::path& dir, const dsl::ActionPool& pool);

// The suite-level pool override file, when present: <dir>/pool.json.
std::optional<std::filesystem::path> find_pool_file(const std::filesystem::path& dir);

enum class AssetProblemKind { MissingFile, UnreadableImage, FirstFrameMismatch, EmptyFrames };

const char* to_string(AssetProblemKind kind);

struct AssetProblem {
  AssetProblemKind kind;
  std::string detail;
};

// File existence, image magic bytes, and the first-frame rule. Problems are
// data, not failures.
std::vector<AssetProblem> verify_assets(const CaseManifest& manifest);

}  // namespace vlmplan::dataset
