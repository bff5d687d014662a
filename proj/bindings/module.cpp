#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "otfuse/fusion.hpp"
#include "otfuse/metrics.hpp"
#include "otfuse/ot.hpp"
#include "otfuse/scene.hpp"
#include "otfuse/tensor.hpp"

namespace py = pybind11;
using namespace otfuse;

namespace {

Vec to_vec(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw ShapeError("expected a 1-d array");
    return Vec(a.data(), a.data() + a.shape(0));
}

Matrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ShapeError("expected a 2-d array");
    Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.data.begin());
    return m;
}

py::array_t<double> from_matrix(const Matrix& m) {
    py::array_t<double> out({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), out.mutable_data());
    return out;
}

py::array_t<double> from_vec(const Vec& v) {
    return py::array_t<double>(static_cast<py::ssize_t>(v.size()), v.data());
}

FeatureMap to_feature_map(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 3) throw ShapeError("expected an H x W x C array");
    FeatureMap fm(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)),
                  static_cast<std::size_t>(a.shape(2)));
    std::copy(a.data(), a.data() + a.size(), fm.data.begin());
    return fm;
}

}  // namespace

PYBIND11_MODULE(_otfuse, m) {
    m.doc() = "entropy-regularized optimal-transport fusion core";

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ParamError>(m, "ParamError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);

    m.def("softmax_with_temperature",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> logits, double tau) {
              return from_vec(softmax_with_temperature(to_vec(logits), tau).mass());
          },
          py::arg("logits"), py::arg("tau"));

    m.def("tensor_product_joint",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> pw,
             py::array_t<double, py::array::c_style | py::array::forcecast> pd,
             py::array_t<double, py::array::c_style | py::array::forcecast> pr) {
              return from_vec(tensor_product_joint(DiscreteDistribution::make(to_vec(pw)),
                                                   DiscreteDistribution::make(to_vec(pd)),
                                                   DiscreteDistribution::make(to_vec(pr)))
                                  .mass());
          },
          py::arg("p_weather"), py::arg("p_time"), py::arg("p_road"));

    m.def("cosine_distance",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> a,
             py::array_t<double, py::array::c_style | py::array::forcecast> b) {
              return cosine_distance(to_vec(a), to_vec(b));
          },
          py::arg("a"), py::arg("b"));

    m.def("build_cost_matrix",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> features,
             py::array_t<double, py::array::c_style | py::array::forcecast> anchors) {
              Matrix f = to_matrix(features), a = to_matrix(anchors);
              std::vector<Vec> frows, arows;
              for (std::size_t i = 0; i < f.rows; ++i) frows.push_back(f.row(i));
              for (std::size_t i = 0; i < a.rows; ++i) arows.push_back(a.row(i));
              return from_matrix(build_cost_matrix(frows, arows).m);
          },
          py::arg("features"), py::arg("anchors"));

    m.def("sinkhorn",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> mu,
             py::array_t<double, py::array::c_style | py::array::forcecast> nu,
             py::array_t<double, py::array::c_style | py::array::forcecast> cost, double epsilon,
             std::size_t max_iters, double tolerance) {
              TransportPlan plan =
                  sinkhorn(DiscreteDistribution::make(to_vec(mu)),
                           DiscreteDistribution::make(to_vec(nu)),
                           CostMatrix::wrap(to_matrix(cost)),
                           SinkhornConfig{epsilon, max_iters, tolerance});
              return py::make_tuple(from_matrix(plan.m), plan.violation, plan.converged);
          },
          py::arg("mu"), py::arg("nu"), py::arg("cost"), py::arg("epsilon") = 0.05,
          py::arg("max_iters") = 1000, py::arg("tolerance") = 1e-6);

    m.def("exact_transport",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> mu,
             py::array_t<double, py::array::c_style | py::array::forcecast> nu,
             py::array_t<double, py::array::c_style | py::array::forcecast> cost) {
              auto [plan, total] = exact_transport(DiscreteDistribution::make(to_vec(mu)),
                                                   DiscreteDistribution::make(to_vec(nu)),
                                                   CostMatrix::wrap(to_matrix(cost)));
              return py::make_tuple(from_matrix(plan.m), total);
          },
          py::arg("mu"), py::arg("nu"), py::arg("cost"));

    m.def("barycentric_project",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> plan,
             py::array_t<double, py::array::c_style | py::array::forcecast> anchors,
             bool row_normalized) {
              TransportPlan p;
              p.m = to_matrix(plan);
              return from_matrix(barycentric_project(
                  p, to_matrix(anchors),
                  row_normalized ? ProjectionMode::kRowNormalized : ProjectionMode::kRaw));
          },
          py::arg("plan"), py::arg("anchors"), py::arg("row_normalized") = true);

    m.def("predict_mask",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> queries,
             py::array_t<double, py::array::c_style | py::array::forcecast> features,
             double epsilon_norm) {
              auto masks = predict_mask(to_matrix(queries), to_feature_map(features), epsilon_norm);
              py::list out;
              for (const auto& mask : masks) {
                  py::array_t<double> soft({mask.height, mask.width});
                  std::copy(mask.soft.begin(), mask.soft.end(), soft.mutable_data());
                  out.append(soft);
              }
              return out;
          },
          py::arg("queries"), py::arg("features"), py::arg("epsilon_norm") = 1e-8);

    m.def("depth_to_normal",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> depth, double fx,
             double fy) {
              FeatureMap n = depth_to_normal(to_matrix(depth), fx, fy);
              py::array_t<double> out({n.height, n.width, n.channels});
              std::copy(n.data.begin(), n.data.end(), out.mutable_data());
              return out;
          },
          py::arg("depth"), py::arg("fx"), py::arg("fy"));

    m.def("segmentation_metrics",
          [](const std::vector<bool>& pred, const std::vector<bool>& target) {
              SegMetrics s = segmentation_metrics(pred, target);
              py::dict d;
              d["mAcc"] = s.mAcc;
              d["mRecall"] = s.mRecall;
              d["mF1"] = s.mF1;
              d["mIoU"] = s.mIoU;
              return d;
          },
          py::arg("pred"), py::arg("target"));

    m.def("bce_loss",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> pred,
             const std::vector<bool>& target) { return bce_loss(to_vec(pred), target); },
          py::arg("pred"), py::arg("target"));

    m.def("dice_loss",
          [](py::array_t<double, py::array::c_style | py::array::forcecast> pred,
             const std::vector<bool>& target, double smooth) {
              return dice_loss(to_vec(pred), target, smooth);
          },
          py::arg("pred"), py::arg("target"), py::arg("smooth") = 1.0);
}
