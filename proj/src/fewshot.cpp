#include "jeanie/fewshot.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <set>
#include <thread>

namespace jeanie {

FeatureMap encode_sequence(const SkeletonSequence& seq, bool with_views,
                           const PipelineConfig& cfg,
                           const NormalizedAdjacency& adj,
                           const EncoderParams& params, bool train_mode,
                           std::mt19937_64* rng,
                           std::vector<BlockCache>* caches) {
  std::vector<SkeletonSequence> views;
  int k = 1, kp = 1;
  if (with_views) {
    views = generate_view_grid(seq, cfg.grid, cfg.camera);
    k = cfg.grid.k();
    kp = cfg.grid.k_prime();
  } else {
    views.push_back(seq);
  }
  std::vector<BlockSequence> blocks;
  blocks.reserve(views.size());
  for (const auto& view : views) {
    blocks.push_back(
        split_blocks(normalize_sequence(view), cfg.block_size, cfg.stride));
  }
  return encode_feature_map(blocks, k, kp, adj, params, train_mode, rng,
                            caches);
}

DistanceTensor distance_tensor(const FeatureMap& query,
                               const FeatureMap& support,
                               const AlignmentConfig& cfg, bool both_sides) {
  if (query.d_prime != support.d_prime) {
    throw std::invalid_argument("distance_tensor: d' mismatch");
  }
  if (!both_sides && (support.k != 1 || support.kp != 1)) {
    throw std::invalid_argument(
        "distance_tensor: support must be single-view unless both_sides");
  }
  if (both_sides) {
    // FVM layout: flattened query views x flattened support views
    const int vq = query.k * query.kp;
    const int vs = support.k * support.kp;
    DistanceTensor d(vq, vs, query.tau, support.tau);
    for (int a = 0; a < vq; ++a) {
      for (int b = 0; b < vs; ++b) {
        for (int m = 0; m < query.tau; ++m) {
          for (int n = 0; n < support.tau; ++n) {
            d.at(a, b, m, n) =
                base_distance(query.data.col(a * query.tau + m),
                              support.data.col(b * support.tau + n), cfg);
          }
        }
      }
    }
    return d;
  }
  DistanceTensor d(query.k, query.kp, query.tau, support.tau);
  for (int a = 0; a < query.k; ++a) {
    for (int b = 0; b < query.kp; ++b) {
      for (int m = 0; m < query.tau; ++m) {
        for (int n = 0; n < support.tau; ++n) {
          d.at(a, b, m, n) =
              base_distance(query.psi(a, b, m), support.psi(0, 0, n), cfg);
        }
      }
    }
  }
  return d;
}

std::vector<int> SequencePool::distinct_classes() const {
  std::set<int> s(class_ids.begin(), class_ids.end());
  return std::vector<int>(s.begin(), s.end());
}

Episode sample_episode(const SequencePool& pool, int n_way, int z_shot,
                       std::uint64_t rng_seed) {
  if (n_way < 2 || z_shot < 1) {
    throw std::invalid_argument("sample_episode: need N >= 2 and Z >= 1");
  }
  if (pool.items.size() != pool.class_ids.size()) {
    throw std::invalid_argument("sample_episode: malformed pool");
  }
  std::vector<int> classes = pool.distinct_classes();
  if (static_cast<int>(classes.size()) < n_way) {
    throw std::invalid_argument("sample_episode: not enough classes");
  }
  std::vector<std::vector<int>> by_class(classes.size());
  for (std::size_t i = 0; i < pool.items.size(); ++i) {
    const auto it =
        std::lower_bound(classes.begin(), classes.end(), pool.class_ids[i]);
    by_class[static_cast<std::size_t>(it - classes.begin())].push_back(
        static_cast<int>(i));
  }
  std::mt19937_64 rng(rng_seed);
  std::vector<int> order(classes.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  // first drawn class is the positive one; it needs Z supports plus a query
  const int pos = order[0];
  if (static_cast<int>(by_class[pos].size()) < z_shot + 1) {
    throw std::invalid_argument(
        "sample_episode: positive class needs Z+1 samples");
  }
  Episode ep;
  ep.n_way = n_way;
  ep.z_shot = z_shot;
  for (int n = 0; n < n_way; ++n) {
    const int cls = order[n];
    std::vector<int> idx = by_class[cls];
    if (static_cast<int>(idx.size()) < z_shot + (n == 0 ? 1 : 0)) {
      throw std::invalid_argument(
          "sample_episode: class has too few samples");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (int z = 0; z < z_shot; ++z) {
      ep.supports.push_back(pool.items[idx[z]]);
      ep.support_classes.push_back(classes[cls]);
    }
    if (n == 0) {
      ep.query = pool.items[idx[z_shot]];
      ep.query_class = classes[cls];
    }
  }
  return ep;
}

LossResult similarity_loss(const std::vector<double>& d_pos,
                           const std::vector<double>& d_neg, int n_way,
                           int z_shot, const LossConfig& cfg) {
  if (d_pos.empty() || d_neg.empty()) {
    throw std::invalid_argument("similarity_loss: empty distance vectors");
  }
  const double mu_pos =
      std::accumulate(d_pos.begin(), d_pos.end(), 0.0) / d_pos.size();
  const double mu_neg =
      std::accumulate(d_neg.begin(), d_neg.end(), 0.0) / d_neg.size();
  LossResult out;
  out.grad_pos.assign(d_pos.size(), 0.0);
  out.grad_neg.assign(d_neg.size(), 0.0);

  switch (cfg.variant) {
    case LossVariant::MAIN: {
      if (cfg.beta < 1 ||
          cfg.beta > static_cast<int>(d_pos.size())) {
        throw std::invalid_argument(
            "similarity_loss: beta out of bounds for the positive set");
      }
      const int top_neg = n_way * z_shot * cfg.beta;
      if (top_neg < 1 || top_neg > static_cast<int>(d_neg.size())) {
        throw std::invalid_argument(
            "similarity_loss: NZ*beta out of bounds for the negative set");
      }
      std::vector<double> pos_sorted = d_pos;
      std::sort(pos_sorted.begin(), pos_sorted.end());
      const double target_pos =
          std::accumulate(pos_sorted.begin(), pos_sorted.begin() + cfg.beta,
                          0.0) /
          cfg.beta;
      std::vector<double> neg_sorted = d_neg;
      std::sort(neg_sorted.begin(), neg_sorted.end(), std::greater<>());
      const double target_neg =
          std::accumulate(neg_sorted.begin(), neg_sorted.begin() + top_neg,
                          0.0) /
          top_neg;
      out.value = (mu_pos - target_pos) * (mu_pos - target_pos) +
                  (mu_neg - target_neg) * (mu_neg - target_neg);
      // targets are detached, so only the means carry gradient
      const double gp = 2.0 * (mu_pos - target_pos) / d_pos.size();
      const double gn = 2.0 * (mu_neg - target_neg) / d_neg.size();
      std::fill(out.grad_pos.begin(), out.grad_pos.end(), gp);
      std::fill(out.grad_neg.begin(), out.grad_neg.end(), gn);
      break;
    }
    case LossVariant::V1: {
      out.value = mu_pos * mu_pos + (mu_neg - cfg.c) * (mu_neg - cfg.c);
      const double gp = 2.0 * mu_pos / d_pos.size();
      const double gn = 2.0 * (mu_neg - cfg.c) / d_neg.size();
      std::fill(out.grad_pos.begin(), out.grad_pos.end(), gp);
      std::fill(out.grad_neg.begin(), out.grad_neg.end(), gn);
      break;
    }
    case LossVariant::V2: {
      out.value = std::abs(mu_pos) + std::abs(mu_neg - cfg.c);
      const double sp = mu_pos > 0.0 ? 1.0 : (mu_pos < 0.0 ? -1.0 : 0.0);
      const double dn = mu_neg - cfg.c;
      const double sn = dn > 0.0 ? 1.0 : (dn < 0.0 ? -1.0 : 0.0);
      std::fill(out.grad_pos.begin(), out.grad_pos.end(),
                sp / d_pos.size());
      std::fill(out.grad_neg.begin(), out.grad_neg.end(),
                sn / d_neg.size());
      break;
    }
  }
  return out;
}

namespace {

// One query-support distance under the configured matcher. With support-side
// views, JEANIE runs its two-axis DP over (query view, support view); FVM
// soft-mins the view pairs per step instead.
double pair_distance(const FeatureMap& q, const FeatureMap& s,
                     const PipelineConfig& cfg) {
  if (cfg.matcher == Matcher::FVM) {
    return fvm(distance_tensor(q, s, cfg.align, cfg.support_views),
               cfg.align.gamma)
        .value;
  }
  if (cfg.support_views) {
    return jeanie(distance_tensor(q, s, cfg.align, true), cfg.align, 2).value;
  }
  return jeanie(distance_tensor(q, s, cfg.align), cfg.align, cfg.axes).value;
}

}  // namespace

double jeanie_distance(const SkeletonSequence& query,
                       const SkeletonSequence& support,
                       const PipelineConfig& cfg,
                       const NormalizedAdjacency& adj,
                       const EncoderParams& params) {
  const FeatureMap q = encode_sequence(query, true, cfg, adj, params, false);
  const FeatureMap s =
      encode_sequence(support, cfg.support_views, cfg, adj, params, false);
  return pair_distance(q, s, cfg);
}

int classify_query(const Episode& episode, const PipelineConfig& cfg,
                   const NormalizedAdjacency& adj,
                   const EncoderParams& params) {
  const FeatureMap q =
      encode_sequence(episode.query, true, cfg, adj, params, false);
  std::vector<int> classes;
  std::vector<double> mean_dist;
  for (int n = 0; n < episode.n_way; ++n) {
    double sum = 0.0;
    for (int z = 0; z < episode.z_shot; ++z) {
      const FeatureMap s = encode_sequence(episode.support(n, z),
                                           cfg.support_views, cfg, adj,
                                           params, false);
      sum += pair_distance(q, s, cfg);
    }
    classes.push_back(
        episode.support_classes[static_cast<std::size_t>(n) *
                                episode.z_shot]);
    mean_dist.push_back(sum / episode.z_shot);
  }
  int best = 0;
  for (int n = 1; n < episode.n_way; ++n) {
    if (mean_dist[n] < mean_dist[best] ||
        (mean_dist[n] == mean_dist[best] && classes[n] < classes[best])) {
      best = n;
    }
  }
  return classes[best];
}

namespace {

struct PairForward {
  FeatureMap features;
  std::vector<BlockCache> caches;
};

// Accumulates d(pair distance)/d(features) into per-column upstream
// sensitivities for both sides.
void backprop_pair(double weight, const FeatureMap& q, const FeatureMap& s,
                   const DistanceTensor& d, const std::vector<double>& grad_d,
                   const AlignmentConfig& cfg, Eigen::MatrixXd& up_q,
                   Eigen::MatrixXd& up_s) {
  for (int a = 0; a < d.k; ++a) {
    for (int b = 0; b < d.kp; ++b) {
      for (int m = 0; m < d.tau; ++m) {
        for (int n = 0; n < d.taup; ++n) {
          const double g = weight * grad_d[d.index(a, b, m, n)];
          if (g == 0.0) continue;
          const Eigen::VectorXd bg = base_distance_grad(
              q.psi(a, b, m), s.psi(0, 0, n), cfg);
          up_q.col(q.column(a, b, m)) += g * bg;
          up_s.col(n) -= g * bg;
        }
      }
    }
  }
}

}  // namespace

TrainTrace train_episodic(const SequencePool& pool, const TrainConfig& cfg,
                          const PipelineConfig& pipeline,
                          EncoderParams& params) {
  if (cfg.batch < 1) {
    throw std::invalid_argument("train_episodic: batch must be >= 1");
  }
  NormalizedAdjacency adj = normalized_adjacency(pool.items.empty()
                                                     ? default_skeleton15()
                                                     : pool.items[0].graph);
  TrainTrace trace;
  int remaining = cfg.episodes;
  std::uint64_t episode_counter = 0;
  int step = 0;
  while (remaining > 0) {
    const int bsize = std::min(cfg.batch, remaining);
    remaining -= bsize;
    std::mt19937_64 dropout_rng(cfg.seed ^ (0xd1b54a32d192ed03ULL +
                                            static_cast<std::uint64_t>(step)));
    EncoderGrad grad = zero_grad(params);

    struct EpisodeForward {
      Episode episode;
      PairForward query;
      std::vector<PairForward> supports;
      std::vector<DistanceTensor> tensors;
      std::vector<std::vector<double>> grads;
      std::vector<double> values;
    };
    std::vector<EpisodeForward> batch(bsize);
    std::vector<double> d_pos, d_neg;
    std::vector<std::pair<int, int>> pos_src, neg_src;  // (episode, support)

    for (int b = 0; b < bsize; ++b) {
      EpisodeForward& ef = batch[b];
      ef.episode = sample_episode(pool, cfg.n_way, cfg.z_shot,
                                  cfg.seed + 0x9e3779b9ULL * (++episode_counter));
      ef.query.features =
          encode_sequence(ef.episode.query, true, pipeline, adj, params,
                          true, &dropout_rng, &ef.query.caches);
      if (!ef.query.features.data.allFinite()) {
        throw std::runtime_error(
            "train_episodic: encoder diverged (non-finite features) at step " +
            std::to_string(step));
      }
      const int num_supports = cfg.n_way * cfg.z_shot;
      ef.supports.resize(num_supports);
      for (int i = 0; i < num_supports; ++i) {
        ef.supports[i].features =
            encode_sequence(ef.episode.supports[i], false, pipeline, adj,
                            params, true, &dropout_rng,
                            &ef.supports[i].caches);
        if (!ef.supports[i].features.data.allFinite()) {
          throw std::runtime_error(
              "train_episodic: encoder diverged (non-finite features) at "
              "step " +
              std::to_string(step));
        }
        DistanceTensor d = distance_tensor(ef.query.features,
                                           ef.supports[i].features,
                                           pipeline.align);
        AlignmentResult r =
            jeanie(d, pipeline.align, pipeline.axes, /*want_grad=*/true);
        ef.values.push_back(r.value);
        const bool positive =
            ef.episode.support_classes[i] == ef.episode.query_class;
        if (positive) {
          d_pos.push_back(r.value);
          pos_src.emplace_back(b, i);
        } else {
          d_neg.push_back(r.value);
          neg_src.emplace_back(b, i);
        }
        ef.tensors.push_back(std::move(d));
        ef.grads.push_back(std::move(r.grad));
      }
    }

    const LossResult loss =
        similarity_loss(d_pos, d_neg, cfg.n_way, cfg.z_shot, cfg.loss);
    if (!std::isfinite(loss.value)) {
      throw std::runtime_error(
          "train_episodic: loss diverged (NaN/inf) at step " +
          std::to_string(step));
    }
    trace.batch_loss.push_back(loss.value);

    // pull loss gradients back through alignment and the encoder
    std::vector<Eigen::MatrixXd> up_q(bsize);
    std::vector<std::vector<Eigen::MatrixXd>> up_s(bsize);
    for (int b = 0; b < bsize; ++b) {
      up_q[b] = Eigen::MatrixXd::Zero(params.d_prime,
                                      batch[b].query.features.data.cols());
      up_s[b].resize(batch[b].supports.size());
      for (std::size_t i = 0; i < batch[b].supports.size(); ++i) {
        up_s[b][i] = Eigen::MatrixXd::Zero(
            params.d_prime, batch[b].supports[i].features.data.cols());
      }
    }
    for (std::size_t p = 0; p < pos_src.size(); ++p) {
      const auto [b, i] = pos_src[p];
      backprop_pair(loss.grad_pos[p], batch[b].query.features,
                    batch[b].supports[i].features, batch[b].tensors[i],
                    batch[b].grads[i], pipeline.align, up_q[b], up_s[b][i]);
    }
    for (std::size_t p = 0; p < neg_src.size(); ++p) {
      const auto [b, i] = neg_src[p];
      backprop_pair(loss.grad_neg[p], batch[b].query.features,
                    batch[b].supports[i].features, batch[b].tensors[i],
                    batch[b].grads[i], pipeline.align, up_q[b], up_s[b][i]);
    }
    for (int b = 0; b < bsize; ++b) {
      for (int col = 0; col < up_q[b].cols(); ++col) {
        if (up_q[b].col(col).isZero()) continue;
        encoder_backward(up_q[b].col(col), batch[b].query.caches[col], adj,
                         params, grad);
      }
      for (std::size_t i = 0; i < batch[b].supports.size(); ++i) {
        for (int col = 0; col < up_s[b][i].cols(); ++col) {
          if (up_s[b][i].col(col).isZero()) continue;
          encoder_backward(up_s[b][i].col(col),
                           batch[b].supports[i].caches[col], adj, params,
                           grad);
        }
      }
    }
    sgd_step(params, grad, cfg.lr, cfg.weight_decay);
    ++step;
  }
  return trace;
}

AccuracyReport evaluate_protocol(const SequencePool& pool,
                                 const EvalProtocol& protocol,
                                 const PipelineConfig& cfg,
                                 const NormalizedAdjacency& adj,
                                 const EncoderParams& params) {
  // an empty train catalog means a frozen encoder is being evaluated
  if (protocol.test_classes.empty()) {
    throw std::invalid_argument("evaluate_protocol: empty test class catalog");
  }
  std::set<int> train_set(protocol.train_classes.begin(),
                          protocol.train_classes.end());
  for (int c : protocol.test_classes) {
    if (train_set.count(c) > 0) {
      throw std::invalid_argument(
          "evaluate_protocol: train/test class catalogs overlap");
    }
  }
  std::set<int> test_set(protocol.test_classes.begin(),
                         protocol.test_classes.end());
  SequencePool test_pool;
  for (std::size_t i = 0; i < pool.items.size(); ++i) {
    if (test_set.count(pool.class_ids[i]) > 0) {
      test_pool.items.push_back(pool.items[i]);
      test_pool.class_ids.push_back(pool.class_ids[i]);
    }
  }

  AccuracyReport report;
  report.num_episodes = protocol.num_episodes;
  report.class_order = test_pool.distinct_classes();
  report.confusion.assign(
      report.class_order.size(),
      std::vector<int>(report.class_order.size(), 0));
  report.records.resize(protocol.num_episodes);

  auto class_pos = [&](int cls) {
    const auto it = std::lower_bound(report.class_order.begin(),
                                     report.class_order.end(), cls);
    return static_cast<int>(it - report.class_order.begin());
  };

  int threads = 1;
  if (const char* env = std::getenv("JEANIE_THREADS")) {
    threads = std::max(1, std::atoi(env));
  }
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (;;) {
      const int e = next.fetch_add(1);
      if (e >= protocol.num_episodes) return;
      const Episode ep =
          sample_episode(test_pool, protocol.n_way, protocol.z_shot,
                         protocol.seed + 0x9e3779b9ULL * (e + 1));
      const FeatureMap q =
          encode_sequence(ep.query, true, cfg, adj, params, false);
      double pos_mean = 0.0;
      double neg_min = std::numeric_limits<double>::infinity();
      int predicted = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int n = 0; n < ep.n_way; ++n) {
        double sum = 0.0;
        for (int z = 0; z < ep.z_shot; ++z) {
          const FeatureMap s = encode_sequence(
              ep.support(n, z), cfg.support_views, cfg, adj, params, false);
          sum += pair_distance(q, s, cfg);
        }
        const double mean = sum / ep.z_shot;
        const int cls = ep.support_classes[static_cast<std::size_t>(n) *
                                           ep.z_shot];
        if (mean < best || (mean == best && cls < predicted)) {
          best = mean;
          predicted = cls;
        }
        if (cls == ep.query_class) {
          pos_mean = mean;
        } else {
          neg_min = std::min(neg_min, mean);
        }
      }
      report.records[e] = EpisodeRecord{e, predicted, ep.query_class,
                                        pos_mean, neg_min};
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> workers;
    for (int i = 0; i < threads; ++i) workers.emplace_back(worker);
    for (auto& w : workers) w.join();
  }

  int correct = 0;
  for (const auto& rec : report.records) {
    if (rec.predicted == rec.truth) ++correct;
    report.confusion[class_pos(rec.truth)][class_pos(rec.predicted)] += 1;
  }
  report.accuracy = static_cast<double>(correct) / protocol.num_episodes;
  report.std_error = std::sqrt(report.accuracy * (1.0 - report.accuracy) /
                               protocol.num_episodes);
  return report;
}

}  // namespace jeanie
