#include "jeanie/geometry.hpp"

#include <cmath>

namespace jeanie {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::Matrix3d rot_x(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Eigen::Matrix3d r;
  r << 1, 0, 0,
       0, c, s,
       0, -s, c;
  return r;
}

Eigen::Matrix3d rot_y(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Eigen::Matrix3d r;
  r << c, 0, -s,
       0, 1, 0,
       s, 0, c;
  return r;
}

Eigen::Matrix3d rot_z(double rad) {
  const double c = std::cos(rad), s = std::sin(rad);
  Eigen::Matrix3d r;
  r << c, s, 0,
       -s, c, 0,
       0, 0, 1;
  return r;
}

}  // namespace

double deg_to_rad(double deg) { return deg * kPi / 180.0; }

RotationMatrix euler_rotation(double theta_x_deg, double theta_y_deg,
                              double theta_z_deg, const AxisOrder& order) {
  if (!std::isfinite(theta_x_deg) || !std::isfinite(theta_y_deg) ||
      !std::isfinite(theta_z_deg)) {
    throw std::invalid_argument("euler_rotation: non-finite angle");
  }
  bool seen[3] = {false, false, false};
  for (int axis : order) {
    if (axis < 0 || axis > 2 || seen[axis]) {
      throw std::invalid_argument(
          "euler_rotation: order must be a permutation of the three axes");
    }
    seen[axis] = true;
  }
  const Eigen::Matrix3d per_axis[3] = {rot_x(deg_to_rad(theta_x_deg)),
                                       rot_y(deg_to_rad(theta_y_deg)),
                                       rot_z(deg_to_rad(theta_z_deg))};
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  for (int axis : order) m = m * per_axis[axis];
  return RotationMatrix{m};
}

Eigen::Matrix3d skew_from_translation(const Eigen::Vector3d& t) {
  Eigen::Matrix3d s;
  s << 0, -t.z(), t.y(),
       t.z(), 0, -t.x(),
       -t.y(), t.x(), 0;
  return s;
}

FundamentalMatrix fundamental_matrix(const CameraIntrinsics& intr_l,
                                     const CameraIntrinsics& intr_r,
                                     const CameraPose& pose) {
  if (pose.t.norm() == 0.0) {
    throw std::invalid_argument(
        "fundamental_matrix: zero translation gives degenerate geometry");
  }
  const double det_l = intr_l.k.determinant();
  const double det_r = intr_r.k.determinant();
  if (det_l == 0.0 || det_r == 0.0) {
    throw std::invalid_argument("fundamental_matrix: singular intrinsics");
  }
  const Eigen::Matrix3d s = skew_from_translation(pose.t);
  const Eigen::Matrix3d e = pose.r.m * s;
  const Eigen::Matrix3d ml_inv = intr_l.k.inverse();
  const Eigen::Matrix3d mr_inv = intr_r.k.inverse();
  return FundamentalMatrix{mr_inv.transpose() * e * ml_inv};
}

SkeletonSequence simulate_view(const SkeletonSequence& seq, double azimuth_deg,
                               double altitude_deg, ViewMode mode,
                               const std::optional<CameraPose>& camera) {
  SkeletonSequence out = seq;
  if (mode == ViewMode::EULER) {
    // altitude about x, azimuth about y, x-then-y composition
    const Eigen::Matrix3d r =
        euler_rotation(altitude_deg, azimuth_deg, 0.0, kOrderXYZ).m;
    const int hip = seq.graph.hip_index;
    for (auto& frame : out.frames) {
      const Eigen::Vector3d center = frame.col(hip);
      frame = r * (frame.colwise() - center);
    }
  } else {
    if (!camera) {
      throw std::invalid_argument(
          "simulate_view: CAMVPC mode requires a camera pose");
    }
    const Eigen::Matrix3d offset =
        euler_rotation(altitude_deg, azimuth_deg, 0.0, kOrderXYZ).m;
    const Eigen::Matrix3d r_view = offset * camera->r.m;
    for (auto& frame : out.frames) {
      frame = r_view * (frame.colwise() - camera->t);
    }
  }
  return out;
}

std::vector<SkeletonSequence> generate_view_grid(
    const SkeletonSequence& seq, const ViewGrid& grid,
    const std::optional<CameraPose>& camera) {
  if (grid.eta_az < 0 || grid.eta_alt < 0 || grid.step_deg <= 0.0) {
    throw std::invalid_argument("generate_view_grid: invalid grid");
  }
  std::vector<SkeletonSequence> views;
  views.reserve(static_cast<std::size_t>(grid.k()) * grid.k_prime());
  for (int i = 0; i < grid.k(); ++i) {
    const double az = (i - grid.eta_az) * grid.step_deg;
    for (int j = 0; j < grid.k_prime(); ++j) {
      const double alt = (j - grid.eta_alt) * grid.step_deg;
      views.push_back(simulate_view(seq, az, alt, grid.mode, camera));
    }
  }
  return views;
}

}  // namespace jeanie
