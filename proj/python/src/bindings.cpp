#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vmgcn/errors.hpp"
#include "vmgcn/graph.hpp"
#include "vmgcn/io.hpp"
#include "vmgcn/modeselect.hpp"
#include "vmgcn/synthetic.hpp"
#include "vmgcn/traineval.hpp"
#include "vmgcn/vmd.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace vmgcn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vector(const Array& a) {
    if (a.ndim() != 1) throw InvalidInput("expected a 1-D array");
    return {a.data(), a.data() + a.size()};
}

Array modes_array(const ModeSet& ms) {
    Array out({ms.num_modes(), ms.length()});
    auto v = out.mutable_unchecked<2>();
    for (std::size_t k = 0; k < ms.num_modes(); ++k)
        for (std::size_t t = 0; t < ms.length(); ++t) v(k, t) = ms.modes[k][t];
    return out;
}

// Rows of a 2-D array become equally clocked series S000, S001, ...
std::vector<TimeSeries> rows_to_series(const Array& a) {
    if (a.ndim() != 2) throw InvalidInput("expected a 2-D array of shape (nodes, steps)");
    std::vector<TimeSeries> out(static_cast<std::size_t>(a.shape(0)));
    auto v = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        auto& s = out[static_cast<std::size_t>(i)];
        char id[16];
        std::snprintf(id, sizeof(id), "S%03d", static_cast<int>(i));
        s.node_id = id;
        s.start_time = parse_timestamp("2019-01-01 00:00");
        for (py::ssize_t t = 0; t < a.shape(1); ++t) s.values.push_back(v(i, t));
    }
    return out;
}

Array series_to_rows(const std::vector<TimeSeries>& series) {
    const std::size_t n = series.size(), len = n ? series.front().size() : 0;
    Array out({n, len});
    auto v = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t t = 0; t < len; ++t) v(i, t) = series[i].values[t];
    return out;
}

py::dict metrics_dict(const MetricsReport& r) {
    py::list horizons;
    for (const auto& h : r.per_horizon) horizons.append(py::dict("mae"_a = h.mae, "rmse"_a = h.rmse, "mape"_a = h.mape));
    return py::dict("mae"_a = r.average.mae, "rmse"_a = r.average.rmse, "mape"_a = r.average.mape,
                    "horizons"_a = horizons, "samples"_a = r.samples);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Variational mode decomposition and spatio-temporal graph forecasting";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidInput>(m, "InvalidInput", base.ptr());
    py::register_exception<InvalidConfig>(m, "InvalidConfig", base.ptr());
    py::register_exception<ShapeMismatch>(m, "ShapeMismatch", base.ptr());
    py::register_exception<UndefinedMetric>(m, "UndefinedMetric", base.ptr());
    py::register_exception<AlignmentError>(m, "AlignmentError", base.ptr());
    py::register_exception<ParseError>(m, "ParseError", base.ptr());
    py::register_exception<NonConvergence>(m, "NonConvergence", base.ptr());
    py::register_exception<NonFiniteLoss>(m, "NonFiniteLoss", base.ptr());
    py::register_exception<MissingArtifact>(m, "MissingArtifact", base.ptr());

    py::enum_<OmegaInit>(m, "OmegaInit")
        .value("uniform", OmegaInit::Uniform)
        .value("zero", OmegaInit::Zero)
        .value("random", OmegaInit::Random);

    py::class_<VmdConfig>(m, "VmdConfig")
        .def(py::init<>())
        .def_readwrite("num_modes", &VmdConfig::num_modes)
        .def_readwrite("alpha", &VmdConfig::alpha)
        .def_readwrite("tau", &VmdConfig::tau)
        .def_readwrite("epsilon", &VmdConfig::epsilon)
        .def_readwrite("max_iter", &VmdConfig::max_iter)
        .def_readwrite("omega_init", &VmdConfig::omega_init)
        .def_readwrite("seed", &VmdConfig::seed)
        .def("validate", &VmdConfig::validate)
        .def("__repr__", [](const VmdConfig& c) { return "VmdConfig(" + c.canonical() + ")"; });

    py::class_<ModeSet>(m, "ModeSet")
        .def_property_readonly("modes", &modes_array, "K x L array, ascending center frequency")
        .def_readonly("omegas", &ModeSet::omegas)
        .def_readonly("iterations_used", &ModeSet::iterations_used)
        .def_readonly("converged", &ModeSet::converged)
        .def_readonly("reconstruction_residual", &ModeSet::reconstruction_residual)
        .def("reconstruction", [](const ModeSet& ms) {
            const auto r = ms.reconstruction();
            return Array(static_cast<py::ssize_t>(r.size()), r.data());
        });

    m.def("decompose", [](const Array& x, const VmdConfig& cfg) { return decompose(to_vector(x), cfg); }, "signal"_a,
          "config"_a = VmdConfig{});
    m.def("redemption", [](const Array& x, const ModeSet& ms) {
        const auto r = redemption(to_vector(x), ms);
        return Array(static_cast<py::ssize_t>(r.size()), r.data());
    });
    m.def("reconstruction_loss", [](const Array& x, const ModeSet& ms) { return reconstruction_loss(to_vector(x), ms); });

    py::class_<ModeSelectConfig>(m, "ModeSelectConfig")
        .def(py::init<>())
        .def_readwrite("sample_fraction", &ModeSelectConfig::sample_fraction)
        .def_readwrite("k_min", &ModeSelectConfig::k_min)
        .def_readwrite("k_max", &ModeSelectConfig::k_max)
        .def_readwrite("zeta", &ModeSelectConfig::zeta)
        .def_readwrite("seed", &ModeSelectConfig::seed);

    m.def(
        "select_num_modes",
        [](const Array& flows, const ModeSelectConfig& cfg, const VmdConfig& vmd, unsigned threads) {
            const ModeSelection sel = select_num_modes(rows_to_series(flows), cfg, vmd, threads);
            py::list curve;
            for (const auto& p : sel.curve) curve.append(py::make_tuple(p.k, p.mean_loss));
            return py::dict("k"_a = sel.k, "threshold_met"_a = sel.threshold_met, "curve"_a = curve,
                            "sampled_nodes"_a = sel.sampled_nodes);
        },
        "flows"_a, "config"_a = ModeSelectConfig{}, "vmd"_a = VmdConfig{}, "threads"_a = 0u,
        py::call_guard<py::gil_scoped_release>());

    m.def("distance_sigma", &distance_sigma);
    m.def("build_adjacency", &build_adjacency, "distances"_a, "sigma"_a, "r"_a);
    m.def("normalized_laplacian", &normalized_laplacian);
    m.def("max_eigenvalue", [](const Eigen::MatrixXd& a) { return max_eigenvalue(a); });
    m.def("scaled_laplacian", &scaled_laplacian);
    m.def("chebyshev_basis", &chebyshev_basis, "scaled"_a, "order"_a);

    m.def("mae", [](const Array& p, const Array& y) { return mae(to_vector(p), to_vector(y)); });
    m.def("rmse", [](const Array& p, const Array& y) { return rmse(to_vector(p), to_vector(y)); });
    m.def(
        "mape",
        [](const Array& p, const Array& y, double mask) {
            const MapeResult r = mape(to_vector(p), to_vector(y), mask);
            return py::make_tuple(r.value, r.excluded);
        },
        "pred"_a, "target"_a, "mask_threshold"_a = 1.0);
    m.def("historical_last_baseline", &historical_last_baseline, "window_flows"_a, "horizon"_a);

    m.def(
        "ring_traffic",
        [](int nodes, std::size_t steps, std::uint64_t seed) {
            const SyntheticRegion r = ring_traffic(nodes, steps, seed);
            return py::make_tuple(series_to_rows(r.series), r.graph.distances);
        },
        "nodes"_a, "steps"_a, "seed"_a = 1);

    m.def(
        "run_experiment",
        [](const Array& flows, const Eigen::MatrixXd& distances, const VmdConfig& vmd, double r,
           const std::string& variant, int epochs, int channels, std::uint64_t seed, unsigned threads) {
            const auto series = rows_to_series(flows);
            const auto modes = decompose_all(series, vmd, threads);
            const SpectralOps ops = make_spectral_ops(build_adjacency(distances, distance_sigma(distances), r), 3);
            Experiment exp;
            exp.variant = variant_from_string(variant);
            exp.model.channels = channels;
            exp.model.seed = seed;
            exp.train.max_epochs = epochs;
            exp.train.seed = seed;
            exp.train.threads = threads;
            const ExperimentResult res = run_experiment(series, modes, ops, exp);
            py::gil_scoped_acquire gil;
            return py::dict("test"_a = metrics_dict(res.test), "historical_last"_a = metrics_dict(res.baseline),
                            "best_epoch"_a = res.training.best_epoch,
                            "val_history"_a = [&] {
                                std::vector<double> h;
                                for (const auto& e : res.training.history) h.push_back(e.val_mae);
                                return h;
                            }());
        },
        "flows"_a, "distances"_a, "vmd"_a = VmdConfig{}, "r"_a = 0.1, "variant"_a = "v2", "epochs"_a = 100,
        "channels"_a = 16, "seed"_a = 0, "threads"_a = 0u, py::call_guard<py::gil_scoped_release>());

    m.def(
        "validate_config",
        [](const std::string& json_text) {
            RunConfig c = RunConfig::from_json_text(json_text);
            c.validate();
            return c.to_json_text();
        },
        "Fills defaults, validates and returns the resolved JSON.");
}
