#include "promkit/annotation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "promkit/error.hpp"

namespace promkit {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

double prominence(const VoteSet& votes) {
  if (votes.votes.empty()) throw ContractError("prominence: image '" + votes.id + "' has no votes");
  const auto yes = std::count(votes.votes.begin(), votes.votes.end(), true);
  return static_cast<double>(yes) / static_cast<double>(votes.votes.size());
}

VoteSet filter_votes(const VoteSet& votes) {
  const std::set<std::size_t> flagged(votes.flagged_participants.begin(), votes.flagged_participants.end());
  VoteSet out;
  out.id = votes.id;
  for (std::size_t i = 0; i < votes.votes.size(); ++i) {
    if (!flagged.contains(i)) out.votes.push_back(votes.votes[i]);
  }
  return out;
}

void BootstrapConfig::validate() const {
  if (k_max < 1) throw ValidationError("bootstrap: k_max must be at least 1");
  if (resamples < 1) throw ValidationError("bootstrap: resamples must be at least 1");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("bootstrap: level must lie in (0,1)");
}

double nearest_rank(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ContractError("nearest_rank: empty sample");
  const auto n = static_cast<double>(sorted.size());
  // Tolerance absorbs representation error in q*n (0.025 * 1000 = 25.000000000000004).
  auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

BootstrapCurve bootstrap_ci(const VoteSet& votes, const BootstrapConfig& cfg) {
  cfg.validate();
  if (votes.votes.empty()) throw ContractError("bootstrap: image '" + votes.id + "' has no votes");

  BootstrapCurve curve;
  curve.id = votes.id;
  curve.resamples = cfg.resamples;
  curve.level = cfg.level;

  std::mt19937_64 rng(splitmix64(cfg.seed ^ fnv1a(votes.id)));
  const std::size_t n = votes.votes.size();
  const double alpha = 1.0 - cfg.level;
  std::vector<double> means(cfg.resamples);
  for (std::size_t k = 1; k <= cfg.k_max; ++k) {
    for (double& m : means) {
      std::size_t yes = 0;
      for (std::size_t j = 0; j < k; ++j) yes += votes.votes[static_cast<std::size_t>(rng() % n)];
      m = static_cast<double>(yes) / static_cast<double>(k);
    }
    std::sort(means.begin(), means.end());
    curve.points.push_back({k, nearest_rank(means, alpha / 2.0), nearest_rank(means, 1.0 - alpha / 2.0)});
  }
  return curve;
}

std::vector<VoteSet> parse_votes(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("votes file is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("votes file must be a JSON array");
  std::vector<VoteSet> sets;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& obj = doc[i];
    if (!obj.is_object() || !obj.contains("id") || !obj["id"].is_string()) {
      throw ValidationError("votes entry " + std::to_string(i) + " has no string id");
    }
    VoteSet set;
    set.id = obj["id"].get<std::string>();
    if (!obj.contains("votes") || !obj["votes"].is_array()) {
      throw ValidationError("votes entry '" + set.id + "' has no votes array");
    }
    for (const auto& v : obj["votes"]) {
      if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
        throw ValidationError("votes entry '" + set.id + "': votes must be 0 or 1");
      }
      set.votes.push_back(v.get<int>() == 1);
    }
    if (obj.contains("flagged_participants")) {
      for (const auto& f : obj["flagged_participants"]) {
        if (!f.is_number_integer() || f.get<long long>() < 0 ||
            static_cast<std::size_t>(f.get<long long>()) >= set.votes.size()) {
          throw ValidationError("votes entry '" + set.id + "': flagged participant index out of range");
        }
        set.flagged_participants.push_back(f.get<std::size_t>());
      }
    }
    sets.push_back(std::move(set));
  }
  return sets;
}

std::vector<VoteSet> load_votes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open votes file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_votes(ss.str());
}

std::string votes_to_json(const std::vector<VoteSet>& sets) {
  nlohmann::json doc = nlohmann::json::array();
  for (const VoteSet& s : sets) {
    nlohmann::json votes = nlohmann::json::array();
    for (bool v : s.votes) votes.push_back(v ? 1 : 0);
    doc.push_back({{"id", s.id}, {"votes", votes}, {"flagged_participants", s.flagged_participants}});
  }
  return doc.dump(2) + "\n";
}

std::string curves_to_csv(const std::vector<BootstrapCurve>& curves) {
  std::ostringstream out;
  out << "id,k,lower,upper,width\n";
  for (const BootstrapCurve& c : curves) {
    for (const CiPoint& p : c.points) {
      out << c.id << ',' << p.k << ',' << num(p.lower) << ',' << num(p.upper) << ',' << num(p.upper - p.lower)
          << '\n';
    }
  }
  return out.str();
}

}  // namespace promkit
