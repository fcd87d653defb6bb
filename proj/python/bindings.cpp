#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "jeanie/alignment.hpp"
#include "jeanie/encoder.hpp"
#include "jeanie/fewshot.hpp"
#include "jeanie/geometry.hpp"
#include "jeanie/skeleton.hpp"

namespace py = pybind11;

namespace {

jeanie::DistanceTensor tensor_from_array(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 4) {
    throw std::invalid_argument("distance tensor must be 4-dimensional");
  }
  jeanie::DistanceTensor d(static_cast<int>(a.shape(0)),
                           static_cast<int>(a.shape(1)),
                           static_cast<int>(a.shape(2)),
                           static_cast<int>(a.shape(3)));
  std::copy(a.data(), a.data() + a.size(), d.v.begin());
  return d;
}

jeanie::AlignmentConfig make_config(double gamma, int iota,
                                    const std::string& base, double sigma) {
  jeanie::AlignmentConfig cfg;
  cfg.gamma = gamma;
  cfg.iota = iota;
  cfg.sigma = sigma;
  if (base == "euclidean") {
    cfg.base = jeanie::BaseDistanceKind::EUCLIDEAN;
  } else if (base == "rbf") {
    cfg.base = jeanie::BaseDistanceKind::RBF;
  } else {
    throw std::invalid_argument("base must be 'euclidean' or 'rbf'");
  }
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_jeanie, m) {
  m.doc() = "Joint temporal-viewpoint sequence alignment";

  m.def(
      "euler_rotation",
      [](double x_deg, double y_deg, double z_deg) {
        return jeanie::euler_rotation(x_deg, y_deg, z_deg).m;
      },
      py::arg("x_deg"), py::arg("y_deg"), py::arg("z_deg"),
      "Composite x-then-y-then-z rotation matrix from degree angles.");

  m.def(
      "fundamental_matrix",
      [](const Eigen::Matrix3d& k_l, const Eigen::Matrix3d& k_r,
         const Eigen::Matrix3d& r, const Eigen::Vector3d& t) {
        jeanie::CameraIntrinsics il{k_l}, ir{k_r};
        jeanie::CameraPose pose{jeanie::RotationMatrix{r}, t};
        return jeanie::fundamental_matrix(il, ir, pose).f;
      },
      py::arg("k_l"), py::arg("k_r"), py::arg("r"), py::arg("t"));

  m.def(
      "softmin",
      [](const std::vector<double>& values, double gamma) {
        return jeanie::softmin_gamma(values, gamma);
      },
      py::arg("values"), py::arg("gamma"));

  m.def(
      "soft_dtw",
      [](const Eigen::MatrixXd& d, double gamma, bool want_grad) {
        const auto r = jeanie::soft_dtw(d, gamma, want_grad);
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(d.rows(), d.cols());
        if (static_cast<Eigen::Index>(r.grad.size()) == d.size()) {
          for (Eigen::Index i = 0; i < d.rows(); ++i)
            for (Eigen::Index k = 0; k < d.cols(); ++k)
              g(i, k) = r.grad[static_cast<std::size_t>(i) * d.cols() + k];
        }
        return py::make_tuple(r.value, g);
      },
      py::arg("d"), py::arg("gamma"), py::arg("want_grad") = false);

  m.def(
      "jeanie",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>&
             d,
         double gamma, int iota, int axes) {
        auto cfg = make_config(gamma, iota, "euclidean", 2.0);
        return jeanie::jeanie(tensor_from_array(d), cfg, axes).value;
      },
      py::arg("d"), py::arg("gamma") = 1e-4, py::arg("iota") = 2,
      py::arg("axes") = 1,
      "Joint temporal-viewpoint alignment over a (K, K', tau, tau') tensor.");

  m.def(
      "fvm",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>&
             d,
         double gamma) {
        return jeanie::fvm(tensor_from_array(d), gamma).value;
      },
      py::arg("d"), py::arg("gamma") = 1e-4);

  m.def(
      "base_distance",
      [](const Eigen::VectorXd& x, const Eigen::VectorXd& y,
         const std::string& base, double sigma) {
        return jeanie::base_distance(x, y, make_config(1.0, 1, base, sigma));
      },
      py::arg("x"), py::arg("y"), py::arg("base") = "euclidean",
      py::arg("sigma") = 2.0);

  m.def(
      "generate_synthetic",
      [](int class_id, int frames, double view_deg, double warp,
         std::uint64_t seed) {
        const auto seq = jeanie::generate_synthetic(class_id, frames, view_deg,
                                                    warp, seed);
        std::vector<Eigen::MatrixXd> out;
        out.reserve(seq.frames.size());
        for (const auto& f : seq.frames) out.emplace_back(f);
        return out;
      },
      py::arg("class_id"), py::arg("frames") = 24, py::arg("view_deg") = 0.0,
      py::arg("warp") = 1.0, py::arg("seed") = 0,
      "List of 3 x J joint coordinate frames for one synthetic action.");

  m.def("synthetic_class_count", &jeanie::synthetic_class_count);

  m.def(
      "align_sequences",
      [](const std::string& query_json, const std::string& support_json,
         double gamma, int iota, int eta_az, double step_deg,
         const std::string& base, double sigma, std::uint64_t encoder_seed) {
        const auto query = jeanie::parse_skel_json(query_json);
        const auto support = jeanie::parse_skel_json(support_json);
        jeanie::PipelineConfig cfg;
        cfg.align = make_config(gamma, iota, base, sigma);
        cfg.grid.eta_az = eta_az;
        cfg.grid.step_deg = step_deg;
        const auto adj = jeanie::normalized_adjacency(query.graph);
        const auto params = jeanie::init_encoder(
            cfg.block_size, query.graph.num_joints, 32, 50,
            jeanie::GnnVariant::S2GC, 6, 0.5, 0.0, encoder_seed);
        return jeanie::jeanie_distance(query, support, cfg, adj, params);
      },
      py::arg("query_json"), py::arg("support_json"), py::arg("gamma") = 1e-4,
      py::arg("iota") = 2, py::arg("eta_az") = 1, py::arg("step_deg") = 15.0,
      py::arg("base") = "euclidean", py::arg("sigma") = 2.0,
      py::arg("encoder_seed") = 0,
      "End-to-end alignment distance between two SKEL-JSON documents.");
}
