#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dgib {

// Every tunable with its default. Parsed from flat key=value text with '#'
// comments; unknown keys are rejected.
struct RunConfig {
  int t_hops = 2;
  int K = 3;
  double beta1 = 1e-4;
  double beta2 = 1e-4;
  int d0 = 16;
  int d1 = 16;
  int d2 = 6;
  int d3 = 6;
  int d4 = 6;
  double tau = 1.0;
  double lr = 0.005;
  int epochs = 5;
  int batch = 16;
  std::vector<int> cutoffs = {10, 50};
  std::uint64_t seed = 0;

  bool motifs_enabled = true;  // off: single GIN on the gated plain adjacency
  bool dpp_enabled = true;     // off: beta2 treated as 0
  bool gib_enabled = true;     // off: softmax attention gates, no KL term

  int gin_hidden = 16;
  int cls_hidden = 16;
  int threads = 0;  // 0 = library default

  double infidelity_sigma = 0.1;
  int infidelity_draws = 50;

  void validate() const;
};

RunConfig parse_config_text(const std::string& text, const std::string& origin = "config");
RunConfig load_config(const std::string& path);
std::string config_to_text(const RunConfig& cfg);

}  // namespace dgib
