#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace dgib {

// Planted-mechanism dataset: label-1 pairs carry 1..3 disjoint motif-rich
// core gadgets wiring u and v together; every pair gets a distractor halo
// when background_prob > 0. Ground truth records the planted edges per pair.
struct PlantSpec {
  int entities = 6000;   // total entity budget
  int genes = 80;        // gene pool size (pairs are drawn from it)
  int pairs = 400;       // total labeled pairs, balanced positives/negatives
  int relations = 8;     // relation vocabulary size; the first 4 are core
  int templates_per_positive = 2;  // 1..3 disjoint gadgets per positive pair
  int filler_per_pair = 10;        // distractor halo nodes per pair
  double background_prob = 0.25;   // halo wiring density and global noise rate
  int feature_dim = 16;            // width of the emitted features.tsv rows
  int aux_pool = 0;                // shared gadget-node pool size; 0 = 6 * genes
  std::uint64_t seed = 0;
};

struct GroundTruthPair {
  std::string u, v;
  int label = 0;
  std::vector<std::array<std::string, 3>> planted_edges;  // (head, relation, tail)
  int core_count = 0;
};

struct SynthData {
  std::vector<std::array<std::string, 3>> kg_triples;
  std::vector<std::pair<std::array<std::string, 2>, int>> pairs;  // ((a,b), label)
  std::map<std::string, std::vector<double>> features;            // entity -> row
  std::vector<GroundTruthPair> ground_truth;
};

SynthData generate(const PlantSpec& spec);

// TSV/JSON emission in the formats the rest of the pipeline consumes.
std::string synth_kg_tsv(const SynthData& data);
std::string synth_pairs_tsv(const SynthData& data);
std::string synth_features_tsv(const SynthData& data);
std::string synth_ground_truth_json(const SynthData& data);

}  // namespace dgib
