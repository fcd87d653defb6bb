#include "jeanie/encoder.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace jeanie {

namespace {

constexpr double kLnEps = 1e-5;

// Column-wise layer normalization.
Eigen::MatrixXd ln_forward(const Eigen::MatrixXd& x,
                           const LayerNormParams& p) {
  Eigen::MatrixXd y(x.rows(), x.cols());
  const double n = static_cast<double>(x.rows());
  for (int c = 0; c < x.cols(); ++c) {
    const double mu = x.col(c).mean();
    const Eigen::VectorXd centered = x.col(c).array() - mu;
    const double var = centered.squaredNorm() / n;
    const double inv_sigma = 1.0 / std::sqrt(var + kLnEps);
    y.col(c) =
        (centered.array() * inv_sigma * p.gain.array()) + p.bias.array();
  }
  return y;
}

// dx for column-wise LN; accumulates gain/bias gradients.
Eigen::MatrixXd ln_backward(const Eigen::MatrixXd& dy,
                            const Eigen::MatrixXd& x,
                            const LayerNormParams& p, LayerNormParams& gp) {
  Eigen::MatrixXd dx(x.rows(), x.cols());
  const double n = static_cast<double>(x.rows());
  for (int c = 0; c < x.cols(); ++c) {
    const double mu = x.col(c).mean();
    const Eigen::VectorXd centered = x.col(c).array() - mu;
    const double var = centered.squaredNorm() / n;
    const double inv_sigma = 1.0 / std::sqrt(var + kLnEps);
    const Eigen::VectorXd xhat = centered * inv_sigma;
    const Eigen::VectorXd dyc = dy.col(c);
    gp.gain.array() += dyc.array() * xhat.array();
    gp.bias += dyc;
    const Eigen::VectorXd dxhat = dyc.array() * p.gain.array();
    const double mean_dxhat = dxhat.mean();
    const double mean_dxhat_xhat = dxhat.dot(xhat) / n;
    dx.col(c) = inv_sigma * (dxhat.array() - mean_dxhat -
                             xhat.array() * mean_dxhat_xhat);
  }
  return dx;
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd normal_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) m(r, c) = dist(rng);
  }
  return m;
}

}  // namespace

NormalizedAdjacency normalized_adjacency(const SkeletonGraph& graph) {
  validate_graph(graph);
  const int j = graph.num_joints;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(j, j);
  for (const auto& [u, v] : graph.edges) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  const Eigen::VectorXd deg = a.rowwise().sum();
  const Eigen::VectorXd inv_sqrt = deg.array().rsqrt();
  return NormalizedAdjacency{inv_sqrt.asDiagonal() * a *
                             inv_sqrt.asDiagonal()};
}

EncoderParams init_encoder(int m, int j, int d, int d_prime,
                           GnnVariant variant, int gnn_layers, double alpha,
                           double dropout_rate, std::uint64_t seed) {
  if (m < 1 || j < 1 || d < 1 || d_prime < 1 || gnn_layers < 1) {
    throw std::invalid_argument("init_encoder: bad dimensions");
  }
  if (alpha <= 0.0 || alpha > 1.0) {
    throw std::invalid_argument("init_encoder: alpha must be in (0, 1]");
  }
  EncoderParams p;
  p.m = m;
  p.j = j;
  p.d = d;
  p.d_prime = d_prime;
  p.gnn_variant = variant;
  p.gnn_layers = gnn_layers;
  p.alpha = alpha;
  p.dropout_rate = dropout_rate;
  p.init_seed = seed;

  std::mt19937_64 rng(seed);
  p.w1 = normal_matrix(6 * m, 3 * m, rng);
  p.b1 = Eigen::VectorXd::Zero(6 * m);
  p.ln1 = {Eigen::VectorXd::Ones(6 * m), Eigen::VectorXd::Zero(6 * m)};
  p.w2 = normal_matrix(9 * m, 6 * m, rng);
  p.b2 = Eigen::VectorXd::Zero(9 * m);
  p.ln2 = {Eigen::VectorXd::Ones(9 * m), Eigen::VectorXd::Zero(9 * m)};
  p.w3 = normal_matrix(d, 9 * m, rng);
  p.b3 = Eigen::VectorXd::Zero(d);
  p.ln3 = {Eigen::VectorXd::Ones(d), Eigen::VectorXd::Zero(d)};
  if (variant == GnnVariant::GCN) {
    for (int l = 0; l < gnn_layers; ++l) {
      p.theta.push_back(normal_matrix(d, d, rng));
    }
  }
  p.fc_w = normal_matrix(d_prime, d * j, rng);
  p.fc_b = Eigen::VectorXd::Zero(d_prime);
  return p;
}

Eigen::MatrixXd mlp_block_encode(const Eigen::MatrixXd& block,
                                 const EncoderParams& params, bool train_mode,
                                 std::mt19937_64* rng, BlockCache* cache) {
  if (block.rows() != 3 * params.m || block.cols() != params.j) {
    throw std::invalid_argument("mlp_block_encode: block shape mismatch");
  }
  const Eigen::MatrixXd a1 =
      (params.w1 * block).colwise() + params.b1;
  const Eigen::MatrixXd l1 = ln_forward(a1, params.ln1);
  const Eigen::MatrixXd h1 = relu(l1);
  const Eigen::MatrixXd a2 = (params.w2 * h1).colwise() + params.b2;
  const Eigen::MatrixXd l2 = ln_forward(a2, params.ln2);
  const Eigen::MatrixXd h2 = relu(l2);

  Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(h2.rows(), h2.cols());
  if (train_mode && params.dropout_rate > 0.0) {
    if (rng == nullptr) {
      throw std::invalid_argument(
          "mlp_block_encode: train-mode dropout needs an RNG");
    }
    std::bernoulli_distribution keep(1.0 - params.dropout_rate);
    const double scale = 1.0 / (1.0 - params.dropout_rate);
    for (int c = 0; c < mask.cols(); ++c) {
      for (int r = 0; r < mask.rows(); ++r) {
        mask(r, c) = keep(*rng) ? scale : 0.0;
      }
    }
  }
  const Eigen::MatrixXd h2d = h2.cwiseProduct(mask);
  const Eigen::MatrixXd a3 = (params.w3 * h2d).colwise() + params.b3;
  const Eigen::MatrixXd xhat = ln_forward(a3, params.ln3);

  if (cache != nullptr) {
    cache->input = block;
    cache->a1 = a1;
    cache->l1 = l1;
    cache->h1 = h1;
    cache->a2 = a2;
    cache->l2 = l2;
    cache->h2 = h2;
    cache->h2d = h2d;
    cache->dropout_mask = mask;
    cache->a3 = a3;
    cache->xhat = xhat;
    cache->train_mode = train_mode;
  }
  return xhat;
}

Eigen::MatrixXd gnn_forward(const Eigen::MatrixXd& h,
                            const NormalizedAdjacency& adj,
                            const EncoderParams& params, BlockCache* cache) {
  if (params.gnn_layers < 1) {
    throw std::invalid_argument("gnn_forward: L must be >= 1");
  }
  if (h.rows() != adj.s.rows()) {
    throw std::invalid_argument("gnn_forward: node count mismatch");
  }
  const Eigen::MatrixXd& s = adj.s;
  const int layers = params.gnn_layers;
  Eigen::MatrixXd phi;
  switch (params.gnn_variant) {
    case GnnVariant::GCN: {
      if (static_cast<int>(params.theta.size()) != layers) {
        throw std::invalid_argument("gnn_forward: GCN needs L theta matrices");
      }
      if (cache != nullptr) {
        cache->gcn_pre.clear();
        cache->gcn_pre.reserve(layers);
      }
      std::vector<Eigen::MatrixXd> hidden;
      hidden.push_back(h);
      for (int l = 0; l < layers - 1; ++l) {
        Eigen::MatrixXd z = s * hidden.back() * params.theta[l];
        hidden.push_back(relu(z));
        if (cache != nullptr) cache->gcn_pre.push_back(std::move(z));
      }
      phi = s * hidden.back() * params.theta[layers - 1];
      if (cache != nullptr) cache->gcn_hidden = std::move(hidden);
      break;
    }
    case GnnVariant::SGC: {
      phi = h;
      for (int l = 0; l < layers; ++l) phi = s * phi;
      break;
    }
    case GnnVariant::APPNP: {
      const double a = params.alpha;
      Eigen::MatrixXd cur = h;
      for (int l = 0; l < layers; ++l) cur = (1.0 - a) * (s * cur) + a * h;
      phi = (1.0 - a) * (s * cur) + a * h;
      break;
    }
    case GnnVariant::S2GC: {
      const double a = params.alpha;
      Eigen::MatrixXd power = h;
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(h.rows(), h.cols());
      for (int l = 0; l < layers; ++l) {
        power = s * power;
        sum += (1.0 - a) * power + a * h;
      }
      phi = sum / static_cast<double>(layers);
      break;
    }
  }
  if (cache != nullptr) cache->phi = phi;
  return phi;
}

namespace {

// Adjoint of the graph propagation with respect to its input. The frozen
// variants are linear in H and self-adjoint (S is symmetric), so the forward
// recurrence applied to the upstream sensitivity is the pullback.
Eigen::MatrixXd gnn_backward(const Eigen::MatrixXd& g_phi,
                             const NormalizedAdjacency& adj,
                             const EncoderParams& params,
                             const BlockCache& cache, EncoderGrad& grad) {
  const Eigen::MatrixXd& s = adj.s;
  const int layers = params.gnn_layers;
  switch (params.gnn_variant) {
    case GnnVariant::GCN: {
      Eigen::MatrixXd g = g_phi;
      grad.theta[layers - 1] +=
          (s * cache.gcn_hidden[layers - 1]).transpose() * g;
      Eigen::MatrixXd gh = s * g * params.theta[layers - 1].transpose();
      for (int l = layers - 2; l >= 0; --l) {
        const Eigen::MatrixXd gz =
            gh.cwiseProduct((cache.gcn_pre[l].array() > 0.0).cast<double>().matrix());
        grad.theta[l] += (s * cache.gcn_hidden[l]).transpose() * gz;
        gh = s * gz * params.theta[l].transpose();
      }
      return gh;
    }
    case GnnVariant::SGC: {
      Eigen::MatrixXd g = g_phi;
      for (int l = 0; l < layers; ++l) g = s * g;
      return g;
    }
    case GnnVariant::APPNP: {
      const double a = params.alpha;
      Eigen::MatrixXd gh0 = a * g_phi;
      Eigen::MatrixXd gcur = (1.0 - a) * (s * g_phi);
      for (int l = 0; l < layers; ++l) {
        gh0 += a * gcur;
        gcur = (1.0 - a) * (s * gcur);
      }
      return gh0 + gcur;
    }
    case GnnVariant::S2GC: {
      const double a = params.alpha;
      Eigen::MatrixXd power = g_phi;
      Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(g_phi.rows(), g_phi.cols());
      for (int l = 0; l < layers; ++l) {
        power = s * power;
        acc += (1.0 - a) * power + a * g_phi;
      }
      return acc / static_cast<double>(layers);
    }
  }
  throw std::logic_error("gnn_backward: unreachable");
}

}  // namespace

Eigen::VectorXd encode_block(const Eigen::MatrixXd& block,
                             const NormalizedAdjacency& adj,
                             const EncoderParams& params, bool train_mode,
                             std::mt19937_64* rng, BlockCache* cache) {
  const Eigen::MatrixXd xhat =
      mlp_block_encode(block, params, train_mode, rng, cache);
  const Eigen::MatrixXd phi =
      gnn_forward(xhat.transpose(), adj, params, cache);
  // flatten d x J column-major: per-joint d-vectors stacked
  const Eigen::MatrixXd phi_t = phi.transpose();
  const Eigen::Map<const Eigen::VectorXd> flat(phi_t.data(), phi_t.size());
  return params.fc_w * flat + params.fc_b;
}

FeatureMap encode_feature_map(const std::vector<BlockSequence>& views, int k,
                              int kp, const NormalizedAdjacency& adj,
                              const EncoderParams& params, bool train_mode,
                              std::mt19937_64* rng,
                              std::vector<BlockCache>* caches) {
  if (views.empty()) {
    throw std::invalid_argument("encode_feature_map: no views");
  }
  if (static_cast<int>(views.size()) != k * kp) {
    throw std::invalid_argument("encode_feature_map: view count != K*K'");
  }
  const int tau = views.front().tau();
  for (const auto& view : views) {
    if (view.tau() != tau || view.frames_per_block != params.m ||
        view.num_joints != params.j) {
      throw std::invalid_argument("encode_feature_map: inconsistent views");
    }
  }
  FeatureMap map;
  map.d_prime = params.d_prime;
  map.k = k;
  map.kp = kp;
  map.tau = tau;
  map.data.resize(params.d_prime, k * kp * tau);
  if (caches != nullptr) {
    caches->assign(static_cast<std::size_t>(k) * kp * tau, BlockCache{});
  }
  for (int v = 0; v < k * kp; ++v) {
    for (int b = 0; b < tau; ++b) {
      const int col = v * tau + b;
      BlockCache* cache =
          caches != nullptr ? &(*caches)[static_cast<std::size_t>(col)]
                            : nullptr;
      map.data.col(col) = encode_block(views[v].blocks[b], adj, params,
                                       train_mode, rng, cache);
    }
  }
  return map;
}

EncoderGrad zero_grad(const EncoderParams& p) {
  EncoderGrad g;
  g.w1 = Eigen::MatrixXd::Zero(p.w1.rows(), p.w1.cols());
  g.w2 = Eigen::MatrixXd::Zero(p.w2.rows(), p.w2.cols());
  g.w3 = Eigen::MatrixXd::Zero(p.w3.rows(), p.w3.cols());
  g.b1 = Eigen::VectorXd::Zero(p.b1.size());
  g.b2 = Eigen::VectorXd::Zero(p.b2.size());
  g.b3 = Eigen::VectorXd::Zero(p.b3.size());
  g.ln1 = {Eigen::VectorXd::Zero(p.ln1.gain.size()),
           Eigen::VectorXd::Zero(p.ln1.bias.size())};
  g.ln2 = {Eigen::VectorXd::Zero(p.ln2.gain.size()),
           Eigen::VectorXd::Zero(p.ln2.bias.size())};
  g.ln3 = {Eigen::VectorXd::Zero(p.ln3.gain.size()),
           Eigen::VectorXd::Zero(p.ln3.bias.size())};
  for (const auto& t : p.theta) {
    g.theta.push_back(Eigen::MatrixXd::Zero(t.rows(), t.cols()));
  }
  g.fc_w = Eigen::MatrixXd::Zero(p.fc_w.rows(), p.fc_w.cols());
  g.fc_b = Eigen::VectorXd::Zero(p.fc_b.size());
  return g;
}

Eigen::MatrixXd encoder_backward(const Eigen::VectorXd& upstream,
                                 const BlockCache& cache,
                                 const NormalizedAdjacency& adj,
                                 const EncoderParams& params,
                                 EncoderGrad& grad) {
  if (cache.input.size() == 0) {
    throw std::logic_error("encoder_backward: forward cache not populated");
  }
  if (upstream.size() != params.d_prime) {
    throw std::invalid_argument("encoder_backward: upstream size mismatch");
  }
  // FC head
  const Eigen::MatrixXd phi_t = cache.phi.transpose();  // d x J
  const Eigen::Map<const Eigen::VectorXd> flat(phi_t.data(), phi_t.size());
  grad.fc_w += upstream * flat.transpose();
  grad.fc_b += upstream;
  const Eigen::VectorXd g_flat = params.fc_w.transpose() * upstream;
  const Eigen::Map<const Eigen::MatrixXd> g_phi_t(g_flat.data(), params.d,
                                                  params.j);
  const Eigen::MatrixXd g_phi = g_phi_t.transpose();  // J x d

  // graph propagation
  const Eigen::MatrixXd g_h0 = gnn_backward(g_phi, adj, params, cache, grad);
  Eigen::MatrixXd g_xhat = g_h0.transpose();  // d x J

  // MLP, column-wise through the LN/ReLU/dropout stack
  const Eigen::MatrixXd g_a3 =
      ln_backward(g_xhat, cache.a3, params.ln3, grad.ln3);
  grad.w3 += g_a3 * cache.h2d.transpose();
  grad.b3 += g_a3.rowwise().sum();
  Eigen::MatrixXd g_h2d = params.w3.transpose() * g_a3;
  Eigen::MatrixXd g_h2 = g_h2d.cwiseProduct(cache.dropout_mask);
  Eigen::MatrixXd g_l2 = g_h2.cwiseProduct(
      (cache.l2.array() > 0.0).cast<double>().matrix());
  const Eigen::MatrixXd g_a2 =
      ln_backward(g_l2, cache.a2, params.ln2, grad.ln2);
  grad.w2 += g_a2 * cache.h1.transpose();
  grad.b2 += g_a2.rowwise().sum();
  Eigen::MatrixXd g_h1 = params.w2.transpose() * g_a2;
  Eigen::MatrixXd g_l1 = g_h1.cwiseProduct(
      (cache.l1.array() > 0.0).cast<double>().matrix());
  const Eigen::MatrixXd g_a1 =
      ln_backward(g_l1, cache.a1, params.ln1, grad.ln1);
  grad.w1 += g_a1 * cache.input.transpose();
  grad.b1 += g_a1.rowwise().sum();
  return params.w1.transpose() * g_a1;
}

void sgd_step(EncoderParams& p, const EncoderGrad& g, double lr,
              double weight_decay) {
  auto step_m = [&](Eigen::MatrixXd& w, const Eigen::MatrixXd& gw) {
    w -= lr * (gw + weight_decay * w);
  };
  auto step_v = [&](Eigen::VectorXd& w, const Eigen::VectorXd& gw) {
    w -= lr * (gw + weight_decay * w);
  };
  step_m(p.w1, g.w1);
  step_m(p.w2, g.w2);
  step_m(p.w3, g.w3);
  step_v(p.b1, g.b1);
  step_v(p.b2, g.b2);
  step_v(p.b3, g.b3);
  step_v(p.ln1.gain, g.ln1.gain);
  step_v(p.ln1.bias, g.ln1.bias);
  step_v(p.ln2.gain, g.ln2.gain);
  step_v(p.ln2.bias, g.ln2.bias);
  step_v(p.ln3.gain, g.ln3.gain);
  step_v(p.ln3.bias, g.ln3.bias);
  for (std::size_t i = 0; i < p.theta.size(); ++i) {
    step_m(p.theta[i], g.theta[i]);
  }
  step_m(p.fc_w, g.fc_w);
  step_v(p.fc_b, g.fc_b);
}

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json j;
  j["shape"] = {m.rows(), m.cols()};
  std::vector<double> data;
  data.reserve(m.size());
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto shape = j.at("shape");
  const int rows = shape.at(0).get<int>();
  const int cols = shape.at(1).get<int>();
  const auto& data = j.at("data");
  if (static_cast<int>(data.size()) != rows * cols) {
    throw std::invalid_argument("checkpoint: array size/shape mismatch");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
  }
  return m;
}

const char* variant_name(GnnVariant v) {
  switch (v) {
    case GnnVariant::GCN: return "gcn";
    case GnnVariant::SGC: return "sgc";
    case GnnVariant::APPNP: return "appnp";
    case GnnVariant::S2GC: return "s2gc";
  }
  return "s2gc";
}

GnnVariant variant_from_name(const std::string& name) {
  if (name == "gcn") return GnnVariant::GCN;
  if (name == "sgc") return GnnVariant::SGC;
  if (name == "appnp") return GnnVariant::APPNP;
  if (name == "s2gc") return GnnVariant::S2GC;
  throw std::invalid_argument("checkpoint: unknown gnn variant '" + name +
                              "'");
}

}  // namespace

std::string write_checkpoint(const EncoderParams& p) {
  nlohmann::json j;
  j["magic"] = "JEANIE-CKPT-1";
  j["m"] = p.m;
  j["j"] = p.j;
  j["d"] = p.d;
  j["d_prime"] = p.d_prime;
  j["gnn_variant"] = variant_name(p.gnn_variant);
  j["gnn_layers"] = p.gnn_layers;
  j["alpha"] = p.alpha;
  j["dropout_rate"] = p.dropout_rate;
  j["init_seed"] = p.init_seed;
  j["w1"] = matrix_to_json(p.w1);
  j["b1"] = matrix_to_json(p.b1);
  j["ln1_gain"] = matrix_to_json(p.ln1.gain);
  j["ln1_bias"] = matrix_to_json(p.ln1.bias);
  j["w2"] = matrix_to_json(p.w2);
  j["b2"] = matrix_to_json(p.b2);
  j["ln2_gain"] = matrix_to_json(p.ln2.gain);
  j["ln2_bias"] = matrix_to_json(p.ln2.bias);
  j["w3"] = matrix_to_json(p.w3);
  j["b3"] = matrix_to_json(p.b3);
  j["ln3_gain"] = matrix_to_json(p.ln3.gain);
  j["ln3_bias"] = matrix_to_json(p.ln3.bias);
  j["theta"] = nlohmann::json::array();
  for (const auto& t : p.theta) j["theta"].push_back(matrix_to_json(t));
  j["fc_w"] = matrix_to_json(p.fc_w);
  j["fc_b"] = matrix_to_json(p.fc_b);
  return j.dump();
}

EncoderParams parse_checkpoint(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("checkpoint: not valid JSON: ") +
                                e.what());
  }
  if (!j.contains("magic") || j["magic"] != "JEANIE-CKPT-1") {
    throw std::invalid_argument("checkpoint: missing or wrong magic string");
  }
  EncoderParams p;
  p.m = j.at("m").get<int>();
  p.j = j.at("j").get<int>();
  p.d = j.at("d").get<int>();
  p.d_prime = j.at("d_prime").get<int>();
  p.gnn_variant = variant_from_name(j.at("gnn_variant").get<std::string>());
  p.gnn_layers = j.at("gnn_layers").get<int>();
  p.alpha = j.at("alpha").get<double>();
  p.dropout_rate = j.at("dropout_rate").get<double>();
  p.init_seed = j.at("init_seed").get<std::uint64_t>();
  p.w1 = matrix_from_json(j.at("w1"));
  p.b1 = matrix_from_json(j.at("b1"));
  p.ln1 = {matrix_from_json(j.at("ln1_gain")),
           matrix_from_json(j.at("ln1_bias"))};
  p.w2 = matrix_from_json(j.at("w2"));
  p.b2 = matrix_from_json(j.at("b2"));
  p.ln2 = {matrix_from_json(j.at("ln2_gain")),
           matrix_from_json(j.at("ln2_bias"))};
  p.w3 = matrix_from_json(j.at("w3"));
  p.b3 = matrix_from_json(j.at("b3"));
  p.ln3 = {matrix_from_json(j.at("ln3_gain")),
           matrix_from_json(j.at("ln3_bias"))};
  for (const auto& t : j.at("theta")) p.theta.push_back(matrix_from_json(t));
  p.fc_w = matrix_from_json(j.at("fc_w"));
  p.fc_b = matrix_from_json(j.at("fc_b"));
  return p;
}

}  // namespace jeanie
