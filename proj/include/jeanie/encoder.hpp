#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "jeanie/skeleton.hpp"

namespace jeanie {

enum class GnnVariant { GCN, SGC, APPNP, S2GC };

// S = D~^{-1/2} (A + I) D~^{-1/2} for the skeleton joint graph.
struct NormalizedAdjacency {
  Eigen::MatrixXd s;
};

NormalizedAdjacency normalized_adjacency(const SkeletonGraph& graph);

struct LayerNormParams {
  Eigen::VectorXd gain;
  Eigen::VectorXd bias;
};

// MLP unit FC(3M->6M)-LN-ReLU-FC(6M->9M)-LN-ReLU-Dropout-FC(9M->d)-LN, a
// graph propagation, and a d*J -> d' FC head.
struct EncoderParams {
  int m = 8;        // frames per temporal block
  int j = 15;       // joints
  int d = 32;       // per-joint feature width
  int d_prime = 50; // output feature width

  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
  LayerNormParams ln1, ln2, ln3;

  GnnVariant gnn_variant = GnnVariant::S2GC;
  int gnn_layers = 6;   // L
  double alpha = 0.5;   // teleport probability (APPNP, S2GC)
  std::vector<Eigen::MatrixXd> theta;  // learnable GCN weights, d x d each

  Eigen::MatrixXd fc_w;  // d' x (d*J)
  Eigen::VectorXd fc_b;

  double dropout_rate = 0.5;
  std::uint64_t init_seed = 0;
};

EncoderParams init_encoder(int m, int j, int d, int d_prime,
                           GnnVariant variant, int gnn_layers, double alpha,
                           double dropout_rate, std::uint64_t seed);

// Forward intermediates for one temporal block, kept for the backward pass.
struct BlockCache {
  Eigen::MatrixXd input;                 // 3M x J
  Eigen::MatrixXd a1, l1, h1;            // 6M x J
  Eigen::MatrixXd a2, l2, h2, h2d;       // 9M x J
  Eigen::MatrixXd dropout_mask;          // 9M x J, scaled keep mask
  Eigen::MatrixXd a3, xhat;              // d x J
  std::vector<Eigen::MatrixXd> gcn_pre;     // GCN pre-activations per layer
  std::vector<Eigen::MatrixXd> gcn_hidden;  // GCN hidden states H_0..H_{L-1}
  Eigen::MatrixXd phi;                      // J x d graph output
  bool train_mode = false;
};

// Per-joint MLP. Dropout is sampled from rng only when train_mode is set.
Eigen::MatrixXd mlp_block_encode(const Eigen::MatrixXd& block,
                                 const EncoderParams& params, bool train_mode,
                                 std::mt19937_64* rng = nullptr,
                                 BlockCache* cache = nullptr);

// Graph propagation of the chosen variant on a J x d input.
Eigen::MatrixXd gnn_forward(const Eigen::MatrixXd& h,
                            const NormalizedAdjacency& adj,
                            const EncoderParams& params,
                            BlockCache* cache = nullptr);

// Full block encoding: MLP -> GNN -> flatten -> FC head, giving a d' vector.
Eigen::VectorXd encode_block(const Eigen::MatrixXd& block,
                             const NormalizedAdjacency& adj,
                             const EncoderParams& params, bool train_mode,
                             std::mt19937_64* rng = nullptr,
                             BlockCache* cache = nullptr);

// Encoded block features; data column ((k*K' + k')*tau + t) holds
// psi_{t,k,k'}. Supports use K = K' = 1.
struct FeatureMap {
  Eigen::MatrixXd data;  // d' x (K*K'*tau)
  int d_prime = 0, k = 1, kp = 1, tau = 0;

  int column(int view_az, int view_alt, int block) const {
    return (view_az * kp + view_alt) * tau + block;
  }
  Eigen::VectorXd psi(int view_az, int view_alt, int block) const {
    return data.col(column(view_az, view_alt, block));
  }
};

// Encodes one BlockSequence per view; all views must share tau, M and J.
FeatureMap encode_feature_map(const std::vector<BlockSequence>& views, int k,
                              int kp, const NormalizedAdjacency& adj,
                              const EncoderParams& params, bool train_mode,
                              std::mt19937_64* rng = nullptr,
                              std::vector<BlockCache>* caches = nullptr);

// Parameter gradients, mirroring EncoderParams' learnable arrays.
struct EncoderGrad {
  Eigen::MatrixXd w1, w2, w3;
  Eigen::VectorXd b1, b2, b3;
  LayerNormParams ln1, ln2, ln3;
  std::vector<Eigen::MatrixXd> theta;
  Eigen::MatrixXd fc_w;
  Eigen::VectorXd fc_b;
};

EncoderGrad zero_grad(const EncoderParams& params);

// Reverse-mode pass for one block; accumulates into grad and returns the
// sensitivity with respect to the block input.
Eigen::MatrixXd encoder_backward(const Eigen::VectorXd& upstream,
                                 const BlockCache& cache,
                                 const NormalizedAdjacency& adj,
                                 const EncoderParams& params,
                                 EncoderGrad& grad);

void sgd_step(EncoderParams& params, const EncoderGrad& grad, double lr,
              double weight_decay);

// Checkpoint I/O, JSON with magic "JEANIE-CKPT-1".
std::string write_checkpoint(const EncoderParams& params);
EncoderParams parse_checkpoint(const std::string& text);

}  // namespace jeanie
