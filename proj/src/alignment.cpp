#include "jeanie/alignment.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace jeanie {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Streaming -gamma*log sum exp(-cost/gamma), rescaled around the running
// minimum so tiny gamma stays finite.
struct SoftminAccumulator {
  double shift = kInf;
  double mass = 0.0;
  double gamma;

  explicit SoftminAccumulator(double g) : gamma(g) {}

  void add(double cost) {
    if (cost == kInf) return;
    if (cost < shift) {
      mass = mass * std::exp(-(shift - cost) / gamma) + 1.0;
      shift = cost;
    } else {
      mass += std::exp(-(cost - shift) / gamma);
    }
  }

  double value() const {
    if (shift == kInf) return kInf;
    return shift - gamma * std::log(mass);
  }
};

void validate_config(const AlignmentConfig& cfg) {
  if (cfg.gamma <= 0.0) {
    throw std::invalid_argument("alignment: gamma must be positive");
  }
  if (cfg.iota < 1) {
    throw std::invalid_argument("alignment: iota must be >= 1");
  }
  if (cfg.base == BaseDistanceKind::RBF && cfg.sigma <= 0.0) {
    throw std::invalid_argument("alignment: sigma must be positive");
  }
}

// Flat (K, K', tau+1, tau'+1) DP array per origin pair.
struct DpGrid {
  int k, kp, tau, taup;
  std::vector<double> r;

  DpGrid(int k_, int kp_, int tau_, int taup_)
      : k(k_), kp(kp_), tau(tau_), taup(taup_),
        r(static_cast<std::size_t>(k_) * kp_ * (tau_ + 1) * (taup_ + 1),
          kInf) {}

  std::size_t idx(int na, int nb, int t, int tp) const {
    return ((static_cast<std::size_t>(na) * kp + nb) * (tau + 1) + t) *
               (taup + 1) +
           tp;
  }
  double& at(int na, int nb, int t, int tp) { return r[idx(na, nb, t, tp)]; }
  double at(int na, int nb, int t, int tp) const {
    return r[idx(na, nb, t, tp)];
  }
};

}  // namespace

double softmin_gamma(std::span<const double> values, double gamma) {
  if (values.empty()) {
    throw std::invalid_argument("softmin_gamma: empty input");
  }
  if (gamma <= 0.0) {
    throw std::invalid_argument("softmin_gamma: gamma must be positive");
  }
  SoftminAccumulator acc(gamma);
  for (double v : values) acc.add(v);
  return acc.value();
}

double base_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                     const AlignmentConfig& cfg) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("base_distance: length mismatch");
  }
  const double sq = (x - y).squaredNorm();
  if (cfg.base == BaseDistanceKind::EUCLIDEAN) return sq;
  return 2.0 - 2.0 * std::exp(-sq / (2.0 * cfg.sigma * cfg.sigma));
}

Eigen::VectorXd base_distance_grad(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y,
                                   const AlignmentConfig& cfg) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("base_distance_grad: length mismatch");
  }
  const Eigen::VectorXd diff = x - y;
  if (cfg.base == BaseDistanceKind::EUCLIDEAN) return 2.0 * diff;
  const double s2 = cfg.sigma * cfg.sigma;
  const double w = std::exp(-diff.squaredNorm() / (2.0 * s2)) / s2;
  return 2.0 * w * diff;
}

AlignmentResult soft_dtw(const Eigen::MatrixXd& d, double gamma,
                         bool want_grad) {
  const int tau = static_cast<int>(d.rows());
  const int taup = static_cast<int>(d.cols());
  if (tau == 0 || taup == 0) {
    throw std::invalid_argument("soft_dtw: empty distance matrix");
  }
  if (gamma <= 0.0) {
    throw std::invalid_argument("soft_dtw: gamma must be positive");
  }
  Eigen::MatrixXd r = Eigen::MatrixXd::Constant(tau + 1, taup + 1, kInf);
  r(0, 0) = 0.0;
  for (int i = 1; i <= tau; ++i) {
    for (int j = 1; j <= taup; ++j) {
      const double preds[3] = {r(i - 1, j), r(i, j - 1), r(i - 1, j - 1)};
      r(i, j) = d(i - 1, j - 1) + softmin_gamma(preds, gamma);
    }
  }
  AlignmentResult result;
  result.value = r(tau, taup);
  if (!want_grad) return result;

  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(tau + 1, taup + 1);
  e(tau, taup) = 1.0;
  result.grad.assign(static_cast<std::size_t>(tau) * taup, 0.0);
  for (int i = tau; i >= 1; --i) {
    for (int j = taup; j >= 1; --j) {
      double acc = (i == tau && j == taup) ? 1.0 : 0.0;
      auto pull = [&](int si, int sj) {
        if (si > tau || sj > taup) return;
        if (si == i && sj == j) return;
        acc += e(si, sj) *
               std::exp((r(si, sj) - d(si - 1, sj - 1) - r(i, j)) / gamma);
      };
      pull(i + 1, j);
      pull(i, j + 1);
      pull(i + 1, j + 1);
      e(i, j) = acc;
      result.grad[static_cast<std::size_t>(i - 1) * taup + (j - 1)] = acc;
    }
  }
  return result;
}

AlignmentResult jeanie(const DistanceTensor& d, const AlignmentConfig& cfg,
                       int axes, bool want_grad) {
  validate_config(cfg);
  if (axes != 1 && axes != 2) {
    throw std::invalid_argument("jeanie: axes must be 1 or 2");
  }
  if (axes == 1 && d.kp != 1) {
    throw std::invalid_argument("jeanie: axes=1 requires a single K' view");
  }
  if (d.tau == 0 || d.taup == 0) {
    throw std::invalid_argument("jeanie: empty distance tensor");
  }
  if (cfg.iota > std::max(d.k, d.kp)) {
    throw std::invalid_argument("jeanie: iota exceeds the view range");
  }
  for (double x : d.v) {
    if (!(x >= 0.0) || !std::isfinite(x)) {
      throw std::invalid_argument("jeanie: distances must be finite and >= 0");
    }
  }

  const int k = d.k, kp = d.kp, tau = d.tau, taup = d.taup;
  const int ca = (k - 1) / 2, cb = (kp - 1) / 2;
  const double gamma = cfg.gamma;
  const int iota = cfg.iota;

  // One DP grid per origin pair; states are (n_az, n_alt, t, t') with
  // effective view (n - origin + center) on each axis.
  std::vector<DpGrid> grids;
  grids.reserve(static_cast<std::size_t>(k) * kp);
  SoftminAccumulator total(gamma);
  for (int da = 0; da < k; ++da) {
    for (int db = 0; db < kp; ++db) {
      DpGrid g(k, kp, tau, taup);
      g.at(ca, cb, 0, 0) = 0.0;
      for (int na = 0; na < k; ++na) {
        const int va = na - da + ca;
        for (int nb = 0; nb < kp; ++nb) {
          const int vb = nb - db + cb;
          const bool valid = va >= 0 && va < k && vb >= 0 && vb < kp;
          for (int t = 1; t <= tau; ++t) {
            for (int tp = 1; tp <= taup; ++tp) {
              if (!valid) continue;
              SoftminAccumulator preds(gamma);
              for (int ia = 0; ia <= iota && ia <= na; ++ia) {
                for (int ib = 0; ib <= iota && ib <= nb; ++ib) {
                  for (int j = 0; j <= 1 && j < t + 1; ++j) {
                    for (int kk = 0; kk <= 1 && kk < tp + 1; ++kk) {
                      if (ia == 0 && ib == 0 && j == 0 && kk == 0) continue;
                      preds.add(g.at(na - ia, nb - ib, t - j, tp - kk));
                    }
                  }
                }
              }
              const double best = preds.value();
              if (best != kInf) {
                g.at(na, nb, t, tp) = d.at(va, vb, t - 1, tp - 1) + best;
              }
            }
          }
        }
      }
      for (int na = 0; na < k; ++na) {
        for (int nb = 0; nb < kp; ++nb) {
          total.add(g.at(na, nb, tau, taup));
        }
      }
      if (want_grad) grids.push_back(std::move(g));
    }
  }

  AlignmentResult result;
  result.value = total.value();
  if (!want_grad) return result;

  result.grad.assign(d.v.size(), 0.0);
  std::size_t grid_index = 0;
  for (int da = 0; da < k; ++da) {
    for (int db = 0; db < kp; ++db) {
      const DpGrid& g = grids[grid_index++];
      DpGrid e(k, kp, tau, taup);
      std::fill(e.r.begin(), e.r.end(), 0.0);
      for (int na = k - 1; na >= 0; --na) {
        const int va = na - da + ca;
        for (int nb = kp - 1; nb >= 0; --nb) {
          const int vb = nb - db + cb;
          if (va < 0 || va >= k || vb < 0 || vb >= kp) continue;
          for (int t = tau; t >= 1; --t) {
            for (int tp = taup; tp >= 1; --tp) {
              const double r_here = g.at(na, nb, t, tp);
              if (r_here == kInf) continue;
              double acc = 0.0;
              if (t == tau && tp == taup) {
                acc += std::exp((result.value - r_here) / gamma);
              }
              for (int ia = 0; ia <= iota && na + ia < k; ++ia) {
                const int sva = na + ia - da + ca;
                for (int ib = 0; ib <= iota && nb + ib < kp; ++ib) {
                  const int svb = nb + ib - db + cb;
                  if (sva < 0 || sva >= k || svb < 0 || svb >= kp) continue;
                  for (int j = 0; j <= 1 && t + j <= tau; ++j) {
                    for (int kk = 0; kk <= 1 && tp + kk <= taup; ++kk) {
                      if (ia == 0 && ib == 0 && j == 0 && kk == 0) continue;
                      const double r_succ = g.at(na + ia, nb + ib, t + j,
                                                 tp + kk);
                      if (r_succ == kInf) continue;
                      const double e_succ =
                          e.at(na + ia, nb + ib, t + j, tp + kk);
                      if (e_succ == 0.0) continue;
                      const double d_succ =
                          d.at(sva, svb, t + j - 1, tp + kk - 1);
                      acc += e_succ *
                             std::exp((r_succ - d_succ - r_here) / gamma);
                    }
                  }
                }
              }
              e.at(na, nb, t, tp) = acc;
              result.grad[d.index(va, vb, t - 1, tp - 1)] += acc;
            }
          }
        }
      }
    }
  }
  return result;
}

AlignmentResult fvm(const DistanceTensor& d, double gamma, bool want_grad) {
  if (gamma <= 0.0) {
    throw std::invalid_argument("fvm: gamma must be positive");
  }
  if (d.tau == 0 || d.taup == 0 || d.k == 0 || d.kp == 0) {
    throw std::invalid_argument("fvm: empty distance tensor");
  }
  // Stage 1: per (t,t'), soft-min over all query/support view pairs.
  Eigen::MatrixXd collapsed(d.tau, d.taup);
  for (int t = 0; t < d.tau; ++t) {
    for (int tp = 0; tp < d.taup; ++tp) {
      SoftminAccumulator acc(gamma);
      for (int a = 0; a < d.k; ++a) {
        for (int b = 0; b < d.kp; ++b) {
          acc.add(d.at(a, b, t, tp));
        }
      }
      collapsed(t, tp) = acc.value();
    }
  }
  AlignmentResult dtw = soft_dtw(collapsed, gamma, want_grad);
  AlignmentResult result;
  result.value = dtw.value;
  if (!want_grad) return result;

  result.grad.assign(d.v.size(), 0.0);
  for (int t = 0; t < d.tau; ++t) {
    for (int tp = 0; tp < d.taup; ++tp) {
      const double e =
          dtw.grad[static_cast<std::size_t>(t) * d.taup + tp];
      if (e == 0.0) continue;
      for (int a = 0; a < d.k; ++a) {
        for (int b = 0; b < d.kp; ++b) {
          result.grad[d.index(a, b, t, tp)] =
              e * std::exp((collapsed(t, tp) - d.at(a, b, t, tp)) / gamma);
        }
      }
    }
  }
  return result;
}

namespace {

struct PathEnumerator {
  const DistanceTensor& d;
  int iota;
  int k, kp, tau, taup, ca, cb;
  int da = 0, db = 0;
  SoftminAccumulator acc;
  std::size_t paths = 0;
  std::size_t max_paths;

  PathEnumerator(const DistanceTensor& d_, const AlignmentConfig& cfg,
                 std::size_t max_paths_)
      : d(d_), iota(cfg.iota), k(d_.k), kp(d_.kp), tau(d_.tau),
        taup(d_.taup), ca((d_.k - 1) / 2), cb((d_.kp - 1) / 2),
        acc(cfg.gamma), max_paths(max_paths_) {}

  void walk(int na, int nb, int t, int tp, double cost) {
    if (t == tau && tp == taup) {
      if (++paths > max_paths) {
        throw std::runtime_error("brute_force_align: path budget exceeded");
      }
      acc.add(cost);
    }
    for (int ia = 0; ia <= iota && na + ia < k; ++ia) {
      for (int ib = 0; ib <= iota && nb + ib < kp; ++ib) {
        for (int j = 0; j <= 1 && t + j <= tau; ++j) {
          for (int kk = 0; kk <= 1 && tp + kk <= taup; ++kk) {
            if (ia == 0 && ib == 0 && j == 0 && kk == 0) continue;
            const int nna = na + ia, nnb = nb + ib;
            const int va = nna - da + ca, vb = nnb - db + cb;
            if (va < 0 || va >= k || vb < 0 || vb >= kp) continue;
            const int nt = t + j, ntp = tp + kk;
            if (nt == 0 || ntp == 0) continue;  // first move must enter (1,1)
            walk(nna, nnb, nt, ntp,
                 cost + d.at(va, vb, nt - 1, ntp - 1));
          }
        }
      }
    }
  }

  void run() {
    for (da = 0; da < k; ++da) {
      for (db = 0; db < kp; ++db) {
        walk(ca, cb, 0, 0, 0.0);
      }
    }
  }
};

}  // namespace

double brute_force_align(const DistanceTensor& d, const AlignmentConfig& cfg,
                         int axes, std::size_t max_paths) {
  validate_config(cfg);
  if (axes == 1 && d.kp != 1) {
    throw std::invalid_argument(
        "brute_force_align: axes=1 requires a single K' view");
  }
  PathEnumerator e(d, cfg, max_paths);
  e.run();
  return e.acc.value();
}

std::size_t count_jeanie_paths(const DistanceTensor& d,
                               const AlignmentConfig& cfg, int axes) {
  validate_config(cfg);
  if (axes == 1 && d.kp != 1) {
    throw std::invalid_argument(
        "count_jeanie_paths: axes=1 requires a single K' view");
  }
  PathEnumerator e(d, cfg, std::numeric_limits<std::size_t>::max());
  e.run();
  return e.paths;
}

}  // namespace jeanie
