#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

namespace jeanie {

enum class BaseDistanceKind { EUCLIDEAN, RBF };

struct AlignmentConfig {
  double gamma = 1e-4;  // soft-min temperature
  int iota = 2;         // max viewpoint shift per step
  BaseDistanceKind base = BaseDistanceKind::RBF;
  double sigma = 2.0;  // RBF bandwidth
};

// 4-D tensor of base distances over (view, view', block, block'). For the
// single-sided JEANIE layout dims are (K, K', tau, tau'); the FVM variant
// reuses the same storage with dims (views_q, views_s, tau, tau').
struct DistanceTensor {
  int k = 1, kp = 1, tau = 0, taup = 0;
  std::vector<double> v;

  DistanceTensor() = default;
  DistanceTensor(int k_, int kp_, int tau_, int taup_)
      : k(k_), kp(kp_), tau(tau_), taup(taup_),
        v(static_cast<std::size_t>(k_) * kp_ * tau_ * taup_, 0.0) {}

  std::size_t index(int a, int b, int m, int n) const {
    return ((static_cast<std::size_t>(a) * kp + b) * tau + m) * taup + n;
  }
  double& at(int a, int b, int m, int n) { return v[index(a, b, m, n)]; }
  double at(int a, int b, int m, int n) const { return v[index(a, b, m, n)]; }
};

struct AlignmentResult {
  double value = 0.0;
  // Sensitivities dvalue/dD, same layout as the input tensor; empty unless
  // gradients were requested.
  std::vector<double> grad;
};

// -gamma * log sum_i exp(-v_i / gamma), max-shift stabilized. Entries of
// +infinity contribute zero mass; all-infinite input yields +infinity.
double softmin_gamma(std::span<const double> values, double gamma);

// EUCLIDEAN: squared L2. RBF: 2 - 2*exp(-|x-y|^2 / (2 sigma^2)).
double base_distance(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                     const AlignmentConfig& cfg);
// d(base)/dx; the y-gradient is its negation.
Eigen::VectorXd base_distance_grad(const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& y,
                                   const AlignmentConfig& cfg);

// Soft-DTW over a tau x tau' distance matrix with moves right/down/diagonal.
AlignmentResult soft_dtw(const Eigen::MatrixXd& d, double gamma,
                         bool want_grad = false);

// Joint temporal-viewpoint alignment. axes=1 walks the first view dimension
// (requires kp == 1); axes=2 walks both view dimensions with the product
// move set.
AlignmentResult jeanie(const DistanceTensor& d, const AlignmentConfig& cfg,
                       int axes = 1, bool want_grad = false);

// Free Viewpoint Matching: per (t,t') soft-min over all (view, view') pairs,
// then soft-DTW on the collapsed matrix. Input dims (views_q, views_s, tau,
// tau') with views on both sides.
AlignmentResult fvm(const DistanceTensor& d, double gamma,
                    bool want_grad = false);

// Exhaustive enumeration of the jeanie path family; ground truth for
// equivalence tests. Throws if more than max_paths paths would be visited.
double brute_force_align(const DistanceTensor& d, const AlignmentConfig& cfg,
                         int axes = 1, std::size_t max_paths = 10'000'000);

// Number of admissible (origin, move-sequence) paths for the given instance.
std::size_t count_jeanie_paths(const DistanceTensor& d,
                               const AlignmentConfig& cfg, int axes = 1);

}  // namespace jeanie
