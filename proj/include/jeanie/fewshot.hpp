#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jeanie/alignment.hpp"
#include "jeanie/encoder.hpp"
#include "jeanie/geometry.hpp"
#include "jeanie/skeleton.hpp"

namespace jeanie {

// How a query-support pair is matched once distances are computed. With
// support-side views enabled, JEANIE walks (query view, support view) as its
// two alignment axes; FVM picks the locally best pair per step instead.
enum class Matcher { JEANIE, FVM };

// Everything needed to turn a raw sequence into features and distances.
struct PipelineConfig {
  int block_size = 8;   // M
  int stride = 5;       // S = 0.6 M
  ViewGrid grid;        // query-side simulated views
  bool support_views = false;  // also simulate views for supports (2V, FVM)
  Matcher matcher = Matcher::JEANIE;
  AlignmentConfig align;
  int axes = 1;
  std::optional<CameraPose> camera;
};

// Normalize -> simulate views -> split blocks -> encode.
FeatureMap encode_sequence(const SkeletonSequence& seq, bool with_views,
                           const PipelineConfig& cfg,
                           const NormalizedAdjacency& adj,
                           const EncoderParams& params, bool train_mode,
                           std::mt19937_64* rng = nullptr,
                           std::vector<BlockCache>* caches = nullptr);

// Entry (k,k',m,n) = base_distance(psi_{m,k,k'}, psi'_n). The support map
// must be single-view unless both_sides (FVM layout, views flattened).
DistanceTensor distance_tensor(const FeatureMap& query,
                               const FeatureMap& support,
                               const AlignmentConfig& cfg,
                               bool both_sides = false);

struct SequencePool {
  std::vector<SkeletonSequence> items;
  std::vector<int> class_ids;

  std::vector<int> distinct_classes() const;
};

struct Episode {
  SkeletonSequence query;
  int query_class = 0;
  std::vector<SkeletonSequence> supports;  // N*Z, grouped by class
  std::vector<int> support_classes;        // length N*Z
  int n_way = 0, z_shot = 0;
  // support class n, shot z
  const SkeletonSequence& support(int n, int z) const {
    return supports[static_cast<std::size_t>(n) * z_shot + z];
  }
};

// N distinct classes uniformly; the first drawn class is the positive one
// and the query comes from its remainder. Deterministic per seed.
Episode sample_episode(const SequencePool& pool, int n_way, int z_shot,
                       std::uint64_t rng_seed);

enum class LossVariant { MAIN, V1, V2 };

struct LossConfig {
  int beta = 1;
  LossVariant variant = LossVariant::MAIN;
  double c = 0.0;  // target constant for V1/V2
};

struct LossResult {
  double value = 0.0;
  std::vector<double> grad_pos;  // dloss/dd+ (stopgrad targets excluded)
  std::vector<double> grad_neg;
};

// d_pos: B*Z within-class distances, d_neg: B*(N-1)*Z between-class
// distances for the mini-batch.
LossResult similarity_loss(const std::vector<double>& d_pos,
                           const std::vector<double>& d_neg, int n_way,
                           int z_shot, const LossConfig& cfg);

double jeanie_distance(const SkeletonSequence& query,
                       const SkeletonSequence& support,
                       const PipelineConfig& cfg,
                       const NormalizedAdjacency& adj,
                       const EncoderParams& params);

// argmin over classes of the mean alignment distance over shots; ties break
// toward the lowest class id.
int classify_query(const Episode& episode, const PipelineConfig& cfg,
                   const NormalizedAdjacency& adj,
                   const EncoderParams& params);

struct TrainConfig {
  int n_way = 5;
  int z_shot = 1;
  int batch = 8;      // episodes per SGD step
  int episodes = 0;   // total episodes
  double lr = 1e-3;
  double weight_decay = 1e-6;
  std::uint64_t seed = 0;
  LossConfig loss;
};

struct TrainTrace {
  std::vector<double> batch_loss;
};

// Episodic SGD on the similarity loss; throws on divergence (NaN loss) with
// the failing step in the message.
TrainTrace train_episodic(const SequencePool& pool, const TrainConfig& cfg,
                          const PipelineConfig& pipeline,
                          EncoderParams& params);

struct EvalProtocol {
  int n_way = 5;
  int z_shot = 1;
  int num_episodes = 100;
  std::uint64_t seed = 0;
  std::vector<int> train_classes;
  std::vector<int> test_classes;
};

struct EpisodeRecord {
  int episode_id = 0;
  int predicted = 0;
  int truth = 0;
  double d_pos_mean = 0.0;
  double d_neg_min = 0.0;
};

struct AccuracyReport {
  double accuracy = 0.0;
  double std_error = 0.0;
  int num_episodes = 0;
  std::vector<EpisodeRecord> records;
  // confusion[truth][predicted], keyed by position in test_classes
  std::vector<std::vector<int>> confusion;
  std::vector<int> class_order;
};

// Samples episodes from the test classes only; train/test catalogs must be
// disjoint.
AccuracyReport evaluate_protocol(const SequencePool& pool,
                                 const EvalProtocol& protocol,
                                 const PipelineConfig& cfg,
                                 const NormalizedAdjacency& adj,
                                 const EncoderParams& params);

}  // namespace jeanie
