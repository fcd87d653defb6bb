#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace jeanie {

struct SkeletonGraph {
  int num_joints = 0;
  std::vector<std::pair<int, int>> edges;  // undirected, no self-loops
  int hip_index = 0;
};

bool graph_is_connected(const SkeletonGraph& graph);
void validate_graph(const SkeletonGraph& graph);

// Built-in 15-joint tree (hip, spine, chest, neck, head, 2x shoulder/elbow/
// hand, 2x hip/knee/foot).
SkeletonGraph default_skeleton15();

struct SkeletonSequence {
  std::vector<Eigen::Matrix3Xd> frames;  // each 3 x J
  std::optional<std::string> label;
  SkeletonGraph graph;

  int num_frames() const { return static_cast<int>(frames.size()); }
  int num_joints() const { return graph.num_joints; }
};

void validate_sequence(const SkeletonSequence& seq);

// Temporal blocks of M frames at stride S. Each block is stored as a
// 3M x J matrix: column j holds joint j's (x,y,z) stacked frame by frame.
struct BlockSequence {
  std::vector<Eigen::MatrixXd> blocks;
  int frames_per_block = 0;  // M
  int stride = 0;            // S
  int num_joints = 0;

  int tau() const { return static_cast<int>(blocks.size()); }
};

// Centers every frame on the torso joint, then scales each axis by its
// global max |coordinate| so values land in [-1, 1].
SkeletonSequence normalize_sequence(const SkeletonSequence& seq);

// Block b covers frames [b*S, b*S + M); sequences shorter than M are padded
// by repeating the last frame.
BlockSequence split_blocks(const SkeletonSequence& seq, int m, int s);

// Inverse of split_blocks for exact-tiling checks: concatenates blocks,
// dropping the M - S overlapping frames of each successor.
std::vector<Eigen::Matrix3Xd> concat_blocks(const BlockSequence& blocks);

int synthetic_class_count();

// Procedural motion generator on the 15-joint graph. Deterministic per seed;
// view_perturb applies a global azimuth rotation, speed_warp resamples time.
SkeletonSequence generate_synthetic(int class_id, int num_frames,
                                    double view_perturb_deg, double speed_warp,
                                    std::uint64_t rng_seed);

// SKEL-JSON I/O.
SkeletonSequence parse_skel_json(const std::string& text);
std::string write_skel_json(const SkeletonSequence& seq);

}  // namespace jeanie
