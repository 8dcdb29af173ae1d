#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace promkit {

struct VoteCount {
  int yes = 0;
  int total = 0;
};

// One dataset example. Paths are already resolved against the manifest
// directory; nothing is opened until a consumer needs it.
struct ArtifactRecord {
  std::string id;  // usable as a file name
  std::string sr_method;
  std::filesystem::path lr_path;
  std::filesystem::path sr_path;
  std::filesystem::path reference_path;
  std::filesystem::path mask_path;
  std::optional<double> prominence;
  std::optional<VoteCount> votes;
};

// Parses a manifest document. `base_dir` anchors relative paths.
// Throws ValidationError naming the offending record id.
std::vector<ArtifactRecord> parse_manifest(std::string_view json_text,
                                           const std::filesystem::path& base_dir);

std::vector<ArtifactRecord> load_manifest(const std::filesystem::path& path);

}  // namespace promkit
