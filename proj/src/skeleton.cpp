#include "jeanie/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <random>
#include <stdexcept>

#include <json.hpp>

#include "jeanie/geometry.hpp"

namespace jeanie {

bool graph_is_connected(const SkeletonGraph& graph) {
  if (graph.num_joints <= 0) return false;
  std::vector<std::vector<int>> adj(graph.num_joints);
  for (const auto& [a, b] : graph.edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(graph.num_joints, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int count = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = true;
        ++count;
        q.push(v);
      }
    }
  }
  return count == graph.num_joints;
}

void validate_graph(const SkeletonGraph& graph) {
  if (graph.num_joints <= 0) {
    throw std::invalid_argument("skeleton graph: num_joints must be positive");
  }
  for (const auto& [a, b] : graph.edges) {
    if (a < 0 || a >= graph.num_joints || b < 0 || b >= graph.num_joints) {
      throw std::invalid_argument("skeleton graph: edge endpoint out of range");
    }
    if (a == b) {
      throw std::invalid_argument("skeleton graph: self-loop in raw edge list");
    }
  }
  if (graph.hip_index < 0 || graph.hip_index >= graph.num_joints) {
    throw std::invalid_argument("skeleton graph: hip index out of range");
  }
  if (!graph_is_connected(graph)) {
    throw std::invalid_argument("skeleton graph: graph is disconnected");
  }
}

SkeletonGraph default_skeleton15() {
  SkeletonGraph g;
  g.num_joints = 15;
  // 0 hip, 1 spine, 2 chest, 3 neck, 4 head, 5-7 left arm, 8-10 right arm,
  // 11-12 left leg, 13-14 right leg
  g.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4},  {2, 5},  {5, 6},  {6, 7},
             {2, 8}, {8, 9}, {9, 10}, {0, 11}, {11, 12}, {0, 13}, {13, 14}};
  g.hip_index = 0;
  return g;
}

void validate_sequence(const SkeletonSequence& seq) {
  validate_graph(seq.graph);
  const int j = seq.graph.num_joints;
  for (const auto& frame : seq.frames) {
    if (frame.cols() != j) {
      throw std::invalid_argument("skeleton sequence: joint count mismatch");
    }
    if (!frame.allFinite()) {
      throw std::invalid_argument("skeleton sequence: non-finite coordinate");
    }
  }
}

SkeletonSequence normalize_sequence(const SkeletonSequence& seq) {
  validate_sequence(seq);
  if (seq.frames.empty()) {
    throw std::invalid_argument("normalize_sequence: empty sequence");
  }
  SkeletonSequence out = seq;
  const int hip = seq.graph.hip_index;
  Eigen::Vector3d axis_max = Eigen::Vector3d::Zero();
  for (auto& frame : out.frames) {
    const Eigen::Vector3d torso = frame.col(hip);
    frame = frame.colwise() - torso;
    axis_max = axis_max.cwiseMax(frame.array().abs().rowwise().maxCoeff().matrix());
  }
  if (axis_max.maxCoeff() == 0.0) {
    throw std::invalid_argument(
        "normalize_sequence: all centered coordinates are zero");
  }
  for (auto& frame : out.frames) {
    for (int a = 0; a < 3; ++a) {
      if (axis_max[a] > 0.0) frame.row(a) /= axis_max[a];
    }
  }
  return out;
}

BlockSequence split_blocks(const SkeletonSequence& seq, int m, int s) {
  if (m < 1 || s < 1) {
    throw std::invalid_argument("split_blocks: M and S must be >= 1");
  }
  if (seq.frames.empty()) {
    throw std::invalid_argument("split_blocks: empty sequence");
  }
  const int j = static_cast<int>(seq.frames.front().cols());
  std::vector<Eigen::Matrix3Xd> frames = seq.frames;
  while (static_cast<int>(frames.size()) < m) frames.push_back(frames.back());
  const int t = static_cast<int>(frames.size());
  const int tau = std::max(1, (t - m) / s + 1);

  BlockSequence out;
  out.frames_per_block = m;
  out.stride = s;
  out.num_joints = j;
  out.blocks.reserve(tau);
  for (int b = 0; b < tau; ++b) {
    Eigen::MatrixXd block(3 * m, j);
    for (int f = 0; f < m; ++f) {
      block.middleRows(3 * f, 3) = frames[b * s + f];
    }
    out.blocks.push_back(std::move(block));
  }
  return out;
}

std::vector<Eigen::Matrix3Xd> concat_blocks(const BlockSequence& blocks) {
  std::vector<Eigen::Matrix3Xd> frames;
  const int m = blocks.frames_per_block;
  const int s = blocks.stride;
  const int j = blocks.num_joints;
  (void)j;
  for (int b = 0; b < blocks.tau(); ++b) {
    const int start = (b == 0) ? 0 : std::max(0, m - s);
    for (int f = start; f < m; ++f) {
      frames.emplace_back(blocks.blocks[b].middleRows(3 * f, 3));
    }
  }
  return frames;
}

namespace {

struct BasePose {
  Eigen::Matrix3Xd joints;
};

BasePose base_pose15() {
  Eigen::Matrix3Xd p(3, 15);
  p.col(0) << 0.0, 0.0, 0.0;       // hip
  p.col(1) << 0.0, 0.25, 0.0;      // spine
  p.col(2) << 0.0, 0.5, 0.0;       // chest
  p.col(3) << 0.0, 0.65, 0.0;      // neck
  p.col(4) << 0.0, 0.8, 0.0;       // head
  p.col(5) << 0.2, 0.5, 0.0;       // l shoulder
  p.col(6) << 0.45, 0.5, 0.0;      // l elbow
  p.col(7) << 0.7, 0.5, 0.0;       // l hand
  p.col(8) << -0.2, 0.5, 0.0;      // r shoulder
  p.col(9) << -0.45, 0.5, 0.0;     // r elbow
  p.col(10) << -0.7, 0.5, 0.0;     // r hand
  p.col(11) << 0.12, -0.45, 0.0;   // l knee
  p.col(12) << 0.15, -0.9, 0.0;    // l foot
  p.col(13) << -0.12, -0.45, 0.0;  // r knee
  p.col(14) << -0.15, -0.9, 0.0;   // r foot
  return BasePose{p};
}

// Class-specific displacement of the base pose at motion phase u in [0, 2pi).
void apply_motion(int class_id, double u, Eigen::Matrix3Xd& p) {
  const double s = std::sin(u), c = std::cos(u);
  switch (class_id) {
    case 0:  // right-hand wave
      p.col(9) += Eigen::Vector3d(0.05 * s, 0.25 + 0.1 * s, 0.0);
      p.col(10) += Eigen::Vector3d(0.15 * c, 0.5 + 0.25 * s, 0.0);
      break;
    case 1:  // left-hand wave
      p.col(6) += Eigen::Vector3d(-0.05 * s, 0.25 + 0.1 * s, 0.0);
      p.col(7) += Eigen::Vector3d(-0.15 * c, 0.5 + 0.25 * s, 0.0);
      break;
    case 2: {  // both arms raise and lower
      const double lift = 0.5 * (1.0 + s);
      p.col(6) += Eigen::Vector3d(-0.1 * lift, 0.3 * lift, 0.0);
      p.col(7) += Eigen::Vector3d(-0.25 * lift, 0.6 * lift, 0.0);
      p.col(9) += Eigen::Vector3d(0.1 * lift, 0.3 * lift, 0.0);
      p.col(10) += Eigen::Vector3d(0.25 * lift, 0.6 * lift, 0.0);
      break;
    }
    case 3: {  // squat
      const double dip = 0.25 * (1.0 - c);
      for (int i : {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10}) p.col(i).y() -= dip;
      p.col(11) += Eigen::Vector3d(0.0, 0.3 * dip, 0.5 * dip);
      p.col(13) += Eigen::Vector3d(0.0, 0.3 * dip, 0.5 * dip);
      break;
    }
    case 4:  // right-leg kick
      p.col(13) += Eigen::Vector3d(0.0, 0.1 * (1 - c), 0.3 * (1 - c));
      p.col(14) += Eigen::Vector3d(0.0, 0.25 * (1 - c), 0.6 * (1 - c));
      break;
    case 5:  // left-leg kick
      p.col(11) += Eigen::Vector3d(0.0, 0.1 * (1 - c), 0.3 * (1 - c));
      p.col(12) += Eigen::Vector3d(0.0, 0.25 * (1 - c), 0.6 * (1 - c));
      break;
    case 6: {  // bow
      const double pitch = 0.6 * (1.0 - c) / 2.0;
      const Eigen::Matrix3d r =
          euler_rotation(pitch * 180.0 / 3.14159265358979323846, 0, 0).m;
      for (int i : {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}) p.col(i) = r * p.col(i);
      break;
    }
    case 7: {  // torso twist
      const double yaw = 0.7 * s;
      const Eigen::Matrix3d r =
          euler_rotation(0, yaw * 180.0 / 3.14159265358979323846, 0).m;
      for (int i : {2, 3, 4, 5, 6, 7, 8, 9, 10}) p.col(i) = r * p.col(i);
      break;
    }
    case 8: {  // jump
      const double hop = 0.3 * std::max(0.0, s);
      for (int i = 0; i < 15; ++i) p.col(i).y() += hop;
      p.col(11).y() += 0.5 * hop;
      p.col(13).y() += 0.5 * hop;
      break;
    }
    case 9: {  // clap
      const double close = 0.3 * (1.0 + c) / 2.0;
      p.col(6) += Eigen::Vector3d(-close, 0.0, 0.25);
      p.col(7) += Eigen::Vector3d(-2.2 * close, 0.0, 0.5);
      p.col(9) += Eigen::Vector3d(close, 0.0, 0.25);
      p.col(10) += Eigen::Vector3d(2.2 * close, 0.0, 0.5);
      break;
    }
    case 10: {  // march in place
      const double l = 0.35 * std::max(0.0, s);
      const double r = 0.35 * std::max(0.0, -s);
      p.col(11) += Eigen::Vector3d(0.0, l, 0.4 * l);
      p.col(12) += Eigen::Vector3d(0.0, 2.0 * l, 0.5 * l);
      p.col(13) += Eigen::Vector3d(0.0, r, 0.4 * r);
      p.col(14) += Eigen::Vector3d(0.0, 2.0 * r, 0.5 * r);
      break;
    }
    case 11: {  // reach forward with both hands
      const double reach = 0.5 * (1.0 - c) / 2.0;
      p.col(6).z() += reach;
      p.col(7).z() += 2.0 * reach;
      p.col(9).z() += reach;
      p.col(10).z() += 2.0 * reach;
      break;
    }
    default:
      throw std::invalid_argument("generate_synthetic: unknown class id");
  }
}

}  // namespace

int synthetic_class_count() { return 12; }

SkeletonSequence generate_synthetic(int class_id, int num_frames,
                                    double view_perturb_deg, double speed_warp,
                                    std::uint64_t rng_seed) {
  if (class_id < 0 || class_id >= synthetic_class_count()) {
    throw std::invalid_argument("generate_synthetic: unknown class id");
  }
  if (num_frames < 2 || speed_warp <= 0.0) {
    throw std::invalid_argument("generate_synthetic: bad frame count or warp");
  }
  const int t_out = std::max(
      2, static_cast<int>(std::lround(num_frames / speed_warp)));
  std::mt19937_64 rng(rng_seed * 0x9e3779b97f4a7c15ULL + 0x1000193ULL +
                      static_cast<std::uint64_t>(class_id));
  std::normal_distribution<double> jitter(0.0, 0.004);

  const BasePose base = base_pose15();
  const double cycles = 1.5;
  SkeletonSequence seq;
  seq.graph = default_skeleton15();
  seq.label = "class_" + std::to_string(class_id);
  seq.frames.reserve(t_out);
  const Eigen::Matrix3d perturb =
      euler_rotation(0.0, view_perturb_deg, 0.0).m;
  for (int f = 0; f < t_out; ++f) {
    const double t = static_cast<double>(f) * speed_warp / num_frames;
    const double u = 2.0 * 3.14159265358979323846 * cycles * t;
    Eigen::Matrix3Xd p = base.joints;
    apply_motion(class_id, u, p);
    Eigen::Matrix3Xd noise(3, 15);
    for (int i = 0; i < noise.size(); ++i) noise(i) = jitter(rng);
    p += noise;
    seq.frames.push_back(perturb * p);
  }
  return seq;
}

SkeletonSequence parse_skel_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("SKEL-JSON: not valid JSON: ") +
                                e.what());
  }
  auto require = [&](const char* field) -> const nlohmann::json& {
    if (!doc.contains(field)) {
      throw std::invalid_argument(std::string("SKEL-JSON: missing field '") +
                                  field + "'");
    }
    return doc[field];
  };
  SkeletonSequence seq;
  try {
    seq.graph.num_joints = require("num_joints").get<int>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("SKEL-JSON: field 'num_joints' must be an int");
  }
  const auto& edges = require("edges");
  if (!edges.is_array()) {
    throw std::invalid_argument("SKEL-JSON: field 'edges' must be an array");
  }
  for (const auto& e : edges) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() ||
        !e[1].is_number_integer()) {
      throw std::invalid_argument(
          "SKEL-JSON: field 'edges' entries must be [a, b] index pairs");
    }
    seq.graph.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  try {
    seq.graph.hip_index = require("hip_index").get<int>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument("SKEL-JSON: field 'hip_index' must be an int");
  }
  const auto& label = require("label");
  if (label.is_string()) {
    seq.label = label.get<std::string>();
  } else if (!label.is_null()) {
    throw std::invalid_argument("SKEL-JSON: field 'label' must be string or null");
  }
  const auto& frames = require("frames");
  if (!frames.is_array()) {
    throw std::invalid_argument("SKEL-JSON: field 'frames' must be an array");
  }
  for (const auto& frame : frames) {
    if (!frame.is_array()) {
      throw std::invalid_argument("SKEL-JSON: each frame must be an array");
    }
    if (static_cast<int>(frame.size()) != seq.graph.num_joints) {
      throw std::invalid_argument(
          "SKEL-JSON: frame joint count does not match num_joints");
    }
    Eigen::Matrix3Xd m(3, seq.graph.num_joints);
    for (int j = 0; j < seq.graph.num_joints; ++j) {
      const auto& joint = frame[j];
      if (!joint.is_array() || joint.size() != 3 || !joint[0].is_number() ||
          !joint[1].is_number() || !joint[2].is_number()) {
        throw std::invalid_argument(
            "SKEL-JSON: each joint must be an [x, y, z] number triple");
      }
      m.col(j) << joint[0].get<double>(), joint[1].get<double>(),
          joint[2].get<double>();
    }
    seq.frames.push_back(std::move(m));
  }
  validate_sequence(seq);
  return seq;
}

std::string write_skel_json(const SkeletonSequence& seq) {
  nlohmann::json doc;
  doc["num_joints"] = seq.graph.num_joints;
  doc["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : seq.graph.edges) {
    doc["edges"].push_back({a, b});
  }
  doc["hip_index"] = seq.graph.hip_index;
  if (seq.label) {
    doc["label"] = *seq.label;
  } else {
    doc["label"] = nullptr;
  }
  doc["frames"] = nlohmann::json::array();
  for (const auto& frame : seq.frames) {
    nlohmann::json jf = nlohmann::json::array();
    for (int j = 0; j < frame.cols(); ++j) {
      jf.push_back({frame(0, j), frame(1, j), frame(2, j)});
    }
    doc["frames"].push_back(std::move(jf));
  }
  return doc.dump();
}

}  // namespace jeanie
