#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "jeanie/geometry.hpp"
#include "jeanie/skeleton.hpp"

using jeanie::CameraIntrinsics;
using jeanie::CameraPose;
using jeanie::RotationMatrix;

namespace {

RotationMatrix random_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(-60.0, 60.0);
  return jeanie::euler_rotation(a(rng), a(rng), a(rng));
}

jeanie::SkeletonSequence toy_sequence(int frames, std::mt19937_64& rng) {
  jeanie::SkeletonSequence seq;
  seq.graph = jeanie::default_skeleton15();
  std::uniform_real_distribution<double> c(-1.0, 1.0);
  for (int f = 0; f < frames; ++f) {
    Eigen::Matrix3Xd m(3, seq.graph.num_joints);
    for (int j = 0; j < seq.graph.num_joints; ++j) {
      m.col(j) << c(rng), c(rng), c(rng);
    }
    seq.frames.push_back(m);
  }
  return seq;
}

}  // namespace

TEST_CASE("euler_rotation: zero angles give the identity") {
  const auto r = jeanie::euler_rotation(0, 0, 0);
  CHECK((r.m - Eigen::Matrix3d::Identity()).norm() == 0.0);
}

TEST_CASE("euler_rotation: 90 deg about x maps (0,1,0) to (0,0,-1)") {
  const auto r = jeanie::euler_rotation(90, 0, 0);
  const Eigen::Vector3d out = r.m * Eigen::Vector3d(0, 1, 0);
  CHECK((out - Eigen::Vector3d(0, 0, -1)).norm() < 1e-12);
}

TEST_CASE("euler_rotation: axis order matters") {
  const auto xyz = jeanie::euler_rotation(30, 45, 0, {0, 1, 2});
  const auto yxz = jeanie::euler_rotation(30, 45, 0, {1, 0, 2});
  CHECK((xyz.m - yxz.m).norm() > 1e-6);
}

TEST_CASE("euler_rotation: outputs are orthonormal with unit determinant") {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 200; ++rep) {
    const auto r = random_rotation(rng);
    CHECK((r.m.transpose() * r.m - Eigen::Matrix3d::Identity()).norm() <
          1e-12);
    CHECK(std::abs(r.m.determinant() - 1.0) < 1e-12);
  }
}

TEST_CASE("euler_rotation: rejects non-finite angles and bad orders") {
  CHECK_THROWS_AS(jeanie::euler_rotation(std::nan(""), 0, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(jeanie::euler_rotation(0, 0, 0, {0, 0, 2}),
                  std::invalid_argument);
}

TEST_CASE("fundamental_matrix: identity rig reduces to the skew matrix") {
  CameraIntrinsics eye{Eigen::Matrix3d::Identity()};
  CameraPose pose{RotationMatrix{Eigen::Matrix3d::Identity()},
                  Eigen::Vector3d(1, 0, 0)};
  const auto f = jeanie::fundamental_matrix(eye, eye, pose);
  Eigen::Matrix3d expect;
  expect << 0, 0, 0, 0, 0, -1, 0, 1, 0;
  CHECK((f.f - expect).norm() < 1e-12);
}

TEST_CASE("fundamental_matrix: zero translation is degenerate") {
  CameraIntrinsics eye{Eigen::Matrix3d::Identity()};
  CameraPose pose{RotationMatrix{Eigen::Matrix3d::Identity()},
                  Eigen::Vector3d::Zero()};
  CHECK_THROWS_AS(jeanie::fundamental_matrix(eye, eye, pose),
                  std::invalid_argument);
}

TEST_CASE("fundamental_matrix: epipolar residual on a synthetic rig") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pd(-1.0, 1.0);
  for (int rig = 0; rig < 5; ++rig) {
    CameraIntrinsics il, ir;
    il.k << 800, 0, 320, 0, 820, 240, 0, 0, 1;
    ir.k << 780, 0, 310, 0, 790, 250, 0, 0, 1;
    CameraPose pose{random_rotation(rng),
                    Eigen::Vector3d(0.4 + 0.1 * rig, 0.05, -0.02)};
    auto f = jeanie::fundamental_matrix(il, ir, pose).f;
    f /= f.norm();
    // rank-2 invariant
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(f);
    CHECK(svd.singularValues()(2) <= 1e-9 * svd.singularValues()(0));

    for (int rep = 0; rep < 100; ++rep) {
      // a point in front of both cameras, in left-camera coordinates
      const Eigen::Vector3d p_l(pd(rng), pd(rng), 4.0 + pd(rng));
      const Eigen::Vector3d p_r = pose.r.m * (p_l - pose.t);
      const Eigen::Vector3d px_l = il.k * (p_l / p_l.z());
      const Eigen::Vector3d px_r = ir.k * (p_r / p_r.z());
      CHECK(std::abs(px_r.transpose() * f * px_l) < 1e-8);
    }
  }
}

TEST_CASE("simulate_view: zero-angle EULER view is the hip-centered input") {
  std::mt19937_64 rng(7);
  const auto seq = toy_sequence(3, rng);
  const auto out = jeanie::simulate_view(seq, 0, 0, jeanie::ViewMode::EULER);
  for (int f = 0; f < seq.num_frames(); ++f) {
    const Eigen::Vector3d hip = seq.frames[f].col(seq.graph.hip_index);
    CHECK((out.frames[f] - (seq.frames[f].colwise() - hip)).norm() == 0.0);
  }
}

TEST_CASE("simulate_view: EULER rotation preserves intra-frame distances") {
  std::mt19937_64 rng(11);
  const auto seq = toy_sequence(4, rng);
  const auto out = jeanie::simulate_view(seq, 45, 15, jeanie::ViewMode::EULER);
  for (int f = 0; f < seq.num_frames(); ++f) {
    for (int a = 0; a < seq.graph.num_joints; ++a) {
      for (int b = a + 1; b < seq.graph.num_joints; ++b) {
        const double before =
            (seq.frames[f].col(a) - seq.frames[f].col(b)).norm();
        const double after =
            (out.frames[f].col(a) - out.frames[f].col(b)).norm();
        CHECK(std::abs(before - after) < 1e-10);
      }
    }
  }
}

TEST_CASE("simulate_view: CAMVPC inverts exactly") {
  std::mt19937_64 rng(13);
  const auto seq = toy_sequence(3, rng);
  CameraPose camera{random_rotation(rng), Eigen::Vector3d(0.3, -0.1, 0.2)};
  const double az = 30, alt = -15;
  const auto out =
      jeanie::simulate_view(seq, az, alt, jeanie::ViewMode::CAMVPC, camera);
  const Eigen::Matrix3d r_view =
      jeanie::euler_rotation(alt, az, 0).m * camera.r.m;
  for (int f = 0; f < seq.num_frames(); ++f) {
    const Eigen::Matrix3Xd back =
        (r_view.transpose() * out.frames[f]).colwise() + camera.t;
    CHECK((back - seq.frames[f]).norm() < 1e-10);
  }
}

TEST_CASE("simulate_view: CAMVPC without a camera is an error") {
  std::mt19937_64 rng(17);
  const auto seq = toy_sequence(1, rng);
  CHECK_THROWS_AS(jeanie::simulate_view(seq, 0, 0, jeanie::ViewMode::CAMVPC),
                  std::invalid_argument);
}

TEST_CASE("generate_view_grid: degenerate grid is the zero-angle view") {
  std::mt19937_64 rng(19);
  const auto seq = toy_sequence(2, rng);
  jeanie::ViewGrid grid;
  grid.eta_az = 0;
  grid.eta_alt = 0;
  const auto views = jeanie::generate_view_grid(seq, grid);
  REQUIRE(views.size() == 1);
  const auto center = jeanie::simulate_view(seq, 0, 0, grid.mode);
  for (int f = 0; f < seq.num_frames(); ++f) {
    CHECK((views[0].frames[f] - center.frames[f]).norm() == 0.0);
  }
}

TEST_CASE("generate_view_grid: 7x7 grid spans +/-45 degrees") {
  std::mt19937_64 rng(23);
  const auto seq = toy_sequence(2, rng);
  jeanie::ViewGrid grid;
  grid.eta_az = 3;
  grid.eta_alt = 3;
  grid.step_deg = 15.0;
  const auto views = jeanie::generate_view_grid(seq, grid);
  REQUIRE(views.size() == 49);
  // indexing contract: element (i,j) is the (i-eta)*step azimuth view
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j < 7; ++j) {
      const auto direct = jeanie::simulate_view(
          seq, (i - 3) * 15.0, (j - 3) * 15.0, grid.mode);
      const auto& got = views[static_cast<std::size_t>(i) * 7 + j];
      for (int f = 0; f < seq.num_frames(); ++f) {
        CHECK((got.frames[f] - direct.frames[f]).norm() < 1e-12);
      }
    }
  }
}
