#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace promkit {

// Crowd answers for one image: true = "artifact seen".
struct VoteSet {
  std::string id;
  std::vector<bool> votes;
  std::vector<std::size_t> flagged_participants;  // indices into votes
};

// Fraction of yes votes. Throws ContractError on an empty set.
double prominence(const VoteSet& votes);

// Drops answers from participants who failed a control question.
VoteSet filter_votes(const VoteSet& votes);

struct CiPoint {
  std::size_t k = 0;
  double lower = 0.0;
  double upper = 0.0;
};

struct BootstrapCurve {
  std::string id;
  std::size_t resamples = 0;
  double level = 0.95;
  std::vector<CiPoint> points;  // k = 1..k_max
};

struct BootstrapConfig {
  std::size_t k_max = 100;
  std::size_t resamples = 1000;
  std::uint64_t seed = 0;
  double level = 0.95;

  void validate() const;
};

// For every assessor count k, draws `resamples` samples of k votes with
// replacement and takes nearest-rank percentiles of their yes fraction.
// The generator is seeded from cfg.seed and the image id, so results do
// not depend on which other images are processed or in what order.
BootstrapCurve bootstrap_ci(const VoteSet& votes, const BootstrapConfig& cfg);

// Nearest-rank percentile of sorted data, q in [0,1].
double nearest_rank(const std::vector<double>& sorted, double q);

// Votes file: JSON array of {id, votes: [0|1, ...], flagged_participants: [i, ...]}.
std::vector<VoteSet> parse_votes(std::string_view json_text);
std::vector<VoteSet> load_votes(const std::filesystem::path& path);
std::string votes_to_json(const std::vector<VoteSet>& sets);

std::string curves_to_csv(const std::vector<BootstrapCurve>& curves);

}  // namespace promkit
