#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "faultloc/csv.hpp"
#include "faultloc/error.hpp"
#include "faultloc/harness.hpp"

namespace py = pybind11;
using namespace faultloc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const Array& a) {
  if (a.ndim() != 2) throw py::value_error("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  const auto cols = m.cols();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::copy_n(a.data() + r * cols, cols, m.row(r).begin());
  }
  return m;
}

std::vector<double> to_vector(const Array& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  return {a.data(), a.data() + a.size()};
}

Array from_vector(const std::vector<double>& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::json py_to_json(const py::object& o) {
  return nlohmann::json::parse(py::str(py::module_::import("json").attr("dumps")(o)).cast<std::string>());
}

gbt::Hyperparams params_from(const py::object& o) {
  if (o.is_none()) return {};
  auto p = gbt::hyperparams_from_json(py_to_json(o));
  p.validate();
  return p;
}

py::dict record_dict(const sim::WaveformRecord& r) {
  py::dict d;
  d["dt_output"] = r.dt_output;
  d["voltage"] = from_vector(r.voltage);
  d["current"] = from_vector(r.current);
  d["fault_current"] = from_vector(r.fault_current);
  d["scenario"] = json_to_py(sim::to_json(r.scenario));
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the faultloc C++ core";

  py::register_exception<Error>(m, "FaultlocError", PyExc_RuntimeError);

  m.def("mae", [](const Array& yhat, const Array& y) { return harness::mae(to_vector(yhat), to_vector(y)); });

  m.def(
      "impedance_locate",
      [](double v_s, double i_s, double i_f, double r_f, double z_total, double length) {
        const auto e = baselines::impedance_locate({v_s, i_s, i_f, r_f, z_total, length});
        return py::make_tuple(e.m, e.distance_km);
      },
      py::arg("v_s"), py::arg("i_s"), py::arg("i_f"), py::arg("r_f_assumed"), py::arg("z_total"),
      py::arg("line_length"));

  // Boosting
  py::class_<gbt::BoostedEnsemble>(m, "BoostedModel")
      .def("predict", [](const gbt::BoostedEnsemble& e, const Array& x) { return from_vector(gbt::predict(e, to_matrix(x))); })
      .def("predict_raw",
           [](const gbt::BoostedEnsemble& e, const Array& x) { return from_vector(gbt::predict_raw(e, to_matrix(x))); })
      .def_property_readonly("train_loss", [](const gbt::BoostedEnsemble& e) { return e.train_loss; })
      .def_property_readonly("n_trees", [](const gbt::BoostedEnsemble& e) { return e.trees.size(); })
      .def("to_json", [](const gbt::BoostedEnsemble& e) { return json_to_py(gbt::to_json(e)); })
      .def_static("from_json", [](const py::object& o) { return gbt::ensemble_from_json(py_to_json(o)); });

  m.def(
      "fit_boosted",
      [](const Array& x, const Array& y, const std::string& task, const py::object& params) {
        return gbt::fit(to_matrix(x), to_vector(y), gbt::parse_task(task), params_from(params));
      },
      py::arg("x"), py::arg("y"), py::arg("task") = "regression", py::arg("params") = py::none());
  m.def("loss", [](const std::string& task, const Array& y, const Array& yhat) {
    return gbt::loss(gbt::parse_task(task), to_vector(y), to_vector(yhat));
  });
  m.def("loss_gradient", [](const std::string& task, const Array& y, const Array& yhat) {
    return from_vector(gbt::loss_gradient(gbt::parse_task(task), to_vector(y), to_vector(yhat)));
  });

  // Baselines
  m.def("ols_fit_predict", [](const Array& x, const Array& y, const Array& q) {
    return from_vector(baselines::ols_predict(baselines::ols_fit(to_matrix(x), to_vector(y)), to_matrix(q)));
  });
  m.def(
      "knn_fit_predict",
      [](const Array& x, const Array& y, const Array& q, int k) {
        return from_vector(baselines::knn_predict(baselines::knn_fit(to_matrix(x), to_vector(y), k), to_matrix(q)));
      },
      py::arg("x"), py::arg("y"), py::arg("query"), py::arg("k") = 5);

  // Scaling
  m.def("standardize", [](const Array& x) {
    const auto mx = to_matrix(x);
    const auto s = data::fit_scaler(mx);
    const auto t = data::transform(s, mx);
    Array out({static_cast<py::ssize_t>(t.rows()), static_cast<py::ssize_t>(t.cols())});
    std::copy(t.data().begin(), t.data().end(), out.mutable_data());
    return py::make_tuple(out, from_vector(s.mean), from_vector(s.scale));
  });

  // Simulation
  m.def(
      "simulate",
      [](const py::object& scenario, const py::object& network, double duration) {
        const auto cfg = network.is_none() ? sim::NetworkConfig::defaults() : sim::network_from_json(py_to_json(network));
        const auto state = sim::build_network(cfg);
        const auto parsed = sim::scenario_from_json(py_to_json(scenario));
        sim::WaveformRecord rec;
        {
          py::gil_scoped_release release;
          rec = sim::simulate(state, parsed, duration);
        }
        return record_dict(rec);
      },
      py::arg("scenario"), py::arg("network") = py::none(), py::arg("duration") = 0.1);
  m.def(
      "generate_scenarios",
      [](std::uint64_t seed, int n_fault, int n_nonfault) {
        py::list out;
        for (const auto& s : sim::generate_scenarios(sim::NetworkConfig::defaults(), seed, n_fault, n_nonfault, {})) {
          out.append(json_to_py(sim::to_json(s)));
        }
        return out;
      },
      py::arg("seed"), py::arg("n_fault"), py::arg("n_nonfault") = 0);
  m.def("default_network", [] { return json_to_py(sim::to_json(sim::NetworkConfig::defaults())); });

  // Reports
  m.def("default_config", [] { return json_to_py(harness::to_json(harness::ExperimentConfig{})); });
  m.def("fingerprint", [](const py::object& cfg) {
    return harness::fingerprint(harness::config_from_json(py_to_json(cfg)));
  });
  m.def("emit_plots", [](const std::filesystem::path& dir) { return harness::emit_plots(dir); });
  m.def("read_csv", [](const std::filesystem::path& path) {
    const auto t = read_csv(path);
    return py::make_tuple(t.header, t.rows);
  });
}
