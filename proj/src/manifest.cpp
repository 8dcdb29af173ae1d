#include "promkit/manifest.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "promkit/error.hpp"

namespace promkit {
namespace {

using nlohmann::json;

std::string require_string(const json& obj, const char* key, const std::string& id) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ValidationError("record '" + id + "': missing or non-string key '" + key + "'");
  }
  return it->get<std::string>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

std::vector<ArtifactRecord> parse_manifest(std::string_view json_text,
                                           const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("manifest must be a JSON array");

  std::vector<ArtifactRecord> records;
  records.reserve(doc.size());
  std::set<std::string> seen;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& obj = doc[i];
    if (!obj.is_object()) {
      throw ValidationError("manifest entry " + std::to_string(i) + " is not an object");
    }
    std::string id = "#" + std::to_string(i);
    id = require_string(obj, "id", id);
    // Ids name per-record files (heatmaps, feature directories).
    if (id.empty() || id == "." || id == ".." || id.find_first_of("/\\") != std::string::npos) {
      throw ValidationError("record '" + id + "': id must be a plain file name");
    }
    if (!seen.insert(id).second) throw ValidationError("duplicate record id '" + id + "'");

    ArtifactRecord rec;
    rec.id = id;
    rec.sr_method = require_string(obj, "sr_method", id);
    rec.lr_path = resolve(base_dir, require_string(obj, "lr_path", id));
    rec.sr_path = resolve(base_dir, require_string(obj, "sr_path", id));
    rec.reference_path = resolve(base_dir, require_string(obj, "reference_path", id));
    rec.mask_path = resolve(base_dir, require_string(obj, "mask_path", id));

    if (auto it = obj.find("prominence"); it != obj.end() && !it->is_null()) {
      if (!it->is_number()) throw ValidationError("record '" + id + "': prominence must be a number");
      const double p = it->get<double>();
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("record '" + id + "': prominence " + std::to_string(p) +
                              " outside [0,1]");
      }
      rec.prominence = p;
    }

    if (auto it = obj.find("votes"); it != obj.end() && !it->is_null()) {
      const json& v = *it;
      if (!v.is_object() || !v.contains("yes") || !v.contains("total") ||
          !v["yes"].is_number_integer() || !v["total"].is_number_integer()) {
        throw ValidationError("record '" + id + "': votes must be {\"yes\": int, \"total\": int}");
      }
      VoteCount votes{v["yes"].get<int>(), v["total"].get<int>()};
      if (votes.total <= 0 || votes.yes < 0 || votes.yes > votes.total) {
        throw ValidationError("record '" + id + "': invalid vote counts");
      }
      const double ratio = static_cast<double>(votes.yes) / votes.total;
      if (rec.prominence && std::abs(*rec.prominence - ratio) > 1e-9) {
        throw ValidationError("record '" + id + "': prominence disagrees with votes " +
                              std::to_string(votes.yes) + "/" + std::to_string(votes.total));
      }
      if (!rec.prominence) rec.prominence = ratio;
      rec.votes = votes;
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<ArtifactRecord> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.parent_path());
}

}  // namespace promkit
