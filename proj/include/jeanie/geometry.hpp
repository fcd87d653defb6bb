#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include "jeanie/skeleton.hpp"

namespace jeanie {

// Axis order for composing planar rotations, e.g. {0,1,2} = x-then-y-then-z.
using AxisOrder = std::array<int, 3>;

inline constexpr AxisOrder kOrderXYZ{0, 1, 2};

struct RotationMatrix {
  Eigen::Matrix3d m;
};

struct CameraIntrinsics {
  Eigen::Matrix3d k;  // upper triangular, k(2,2) == 1
};

struct CameraPose {
  RotationMatrix r;
  Eigen::Vector3d t;
};

struct FundamentalMatrix {
  Eigen::Matrix3d f;  // rank 2, defined up to scale
};

enum class ViewMode { EULER, CAMVPC };

// K x K' grid of simulated viewpoints: K = 2*eta_az+1 azimuth steps,
// K' = 2*eta_alt+1 altitude steps, each of step_deg degrees.
struct ViewGrid {
  int eta_az = 1;
  int eta_alt = 0;
  double step_deg = 15.0;
  ViewMode mode = ViewMode::EULER;

  int k() const { return 2 * eta_az + 1; }
  int k_prime() const { return 2 * eta_alt + 1; }
};

double deg_to_rad(double deg);

// Product of the per-axis planar rotations applied in the given axis order.
RotationMatrix euler_rotation(double theta_x_deg, double theta_y_deg,
                              double theta_z_deg,
                              const AxisOrder& order = kOrderXYZ);

// Cross-product matrix S with S*p = p x t.
Eigen::Matrix3d skew_from_translation(const Eigen::Vector3d& t);

FundamentalMatrix fundamental_matrix(const CameraIntrinsics& intr_l,
                                     const CameraIntrinsics& intr_r,
                                     const CameraPose& pose);

// Simulates one alternative viewpoint of a skeleton sequence.
// EULER: hip-centers each frame and rotates by (altitude, azimuth) about x, y.
// CAMVPC: rigid map p_r = R_view * (p - t) to a virtual camera offset from
// the supplied estimated camera.
SkeletonSequence simulate_view(const SkeletonSequence& seq, double azimuth_deg,
                               double altitude_deg, ViewMode mode,
                               const std::optional<CameraPose>& camera = {});

// All K x K' views, row-major by (azimuth index, altitude index); the center
// element is the zero-angle view.
std::vector<SkeletonSequence> generate_view_grid(
    const SkeletonSequence& seq, const ViewGrid& grid,
    const std::optional<CameraPose>& camera = {});

}  // namespace jeanie
