#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "adafgl/experiment.hpp"
#include "adafgl/io.hpp"
#include "adafgl/log.hpp"

namespace py = pybind11;
using namespace adafgl;

namespace {

const char* role_name(SplitRole r) {
    switch (r) {
    case SplitRole::train: return "train";
    case SplitRole::val: return "val";
    case SplitRole::test: return "test";
    default: return "none";
    }
}

SplitRole role_from(const std::string& s) {
    if (s == "train") return SplitRole::train;
    if (s == "val") return SplitRole::val;
    if (s == "test") return SplitRole::test;
    if (s == "none") return SplitRole::none;
    throw std::invalid_argument("unknown split role: " + s);
}

py::array_t<double> to_numpy(const DenseMatrix& m) {
    py::array_t<double> out({m.rows(), m.cols()});
    std::copy(m.values().begin(), m.values().end(), out.mutable_data());
    return out;
}

DenseMatrix from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) {
        throw std::invalid_argument("features must be a 2-d array");
    }
    const auto rows = static_cast<std::size_t>(a.shape(0)), cols = static_cast<std::size_t>(a.shape(1));
    return DenseMatrix(rows, cols, std::vector<double>(a.data(), a.data() + rows * cols));
}

Graph make_graph(std::size_t n, const std::vector<Edge>& edges, const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                 std::vector<int> labels, const std::vector<std::string>& roles, int num_classes) {
    std::vector<SplitRole> r;
    for (const auto& s : roles) {
        r.push_back(role_from(s));
    }
    return Graph(n, edges, from_numpy(x), std::move(labels), std::move(r), num_classes);
}

py::dict hcs_dict(const HcsReport& r) {
    py::dict d;
    d["hcs"] = r.hcs;
    d["masked"] = r.masked;
    d["train_nodes"] = r.train_nodes;
    d["accuracy_trace"] = r.accuracy_trace;
    d["informative"] = r.informative;
    return d;
}

py::object train(const std::string& config_json) {
    const ExperimentConfig cfg = config_from_json(config_json);
    std::ostringstream report;
    TrainSummary summary;
    {
        py::gil_scoped_release release;
        summary = cmd_train(cfg, report);
    }
    return py::module_::import("json").attr("loads")(results_json(cfg, summary));
}

} // namespace

PYBIND11_MODULE(_adafgl, m) {
    m.doc() = "Federated graph learning simulator with personalized propagation";

    py::class_<Graph>(m, "Graph")
        .def(py::init(&make_graph), py::arg("num_nodes"), py::arg("edges"), py::arg("features"), py::arg("labels"),
             py::arg("roles") = std::vector<std::string>{}, py::arg("num_classes") = 0)
        .def_property_readonly("num_nodes", &Graph::num_nodes)
        .def_property_readonly("num_edges", &Graph::num_edges)
        .def_property_readonly("num_classes", &Graph::num_classes)
        .def_property_readonly("feature_dim", &Graph::feature_dim)
        .def_property_readonly("dropped_edges", &Graph::dropped_edges)
        .def_property_readonly("labels", &Graph::labels)
        .def_property_readonly("features", [](const Graph& g) { return to_numpy(g.features()); })
        .def_property_readonly("roles",
                               [](const Graph& g) {
                                   std::vector<std::string> out;
                                   for (const auto r : g.roles()) {
                                       out.emplace_back(role_name(r));
                                   }
                                   return out;
                               })
        .def("edges", &Graph::edge_list)
        .def("degree", &Graph::degree)
        .def("count", [](const Graph& g, const std::string& role) { return g.count(role_from(role)); })
        .def("__eq__", [](const Graph& a, const Graph& b) { return a == b; })
        .def("__repr__", [](const Graph& g) {
            return "<Graph nodes=" + std::to_string(g.num_nodes()) + " edges=" + std::to_string(g.num_edges()) +
                   " classes=" + std::to_string(g.num_classes()) + ">";
        });

    py::class_<FederatedTask>(m, "Task")
        .def_property_readonly("strategy", [](const FederatedTask& t) { return to_string(t.strategy); })
        .def_property_readonly("seed", [](const FederatedTask& t) { return t.seed; })
        .def_property_readonly("num_clients", [](const FederatedTask& t) { return t.clients.size(); })
        .def("client", [](const FederatedTask& t, std::size_t i) { return t.clients.at(i).graph; })
        .def("global_ids", [](const FederatedTask& t, std::size_t i) { return t.clients.at(i).global_ids; })
        .def("injection", [](const FederatedTask& t, std::size_t i) {
            const auto& r = t.injection_log.at(i);
            py::dict d;
            d["mode"] = to_string(r.mode);
            d["requested"] = r.requested;
            d["added"] = r.added;
            return d;
        })
        .def("__eq__", [](const FederatedTask& a, const FederatedTask& b) { return a == b; });

    m.def("load_graph", [](const std::filesystem::path& p) { return io::load_graph(p); }, py::arg("path"));
    m.def("save_graph", &io::save_graph, py::arg("graph"), py::arg("path"));
    m.def("load_task", &io::load_task, py::arg("path"));
    m.def("save_task", &io::save_task, py::arg("task"), py::arg("path"));
    m.def("make_masks", &io::make_masks, py::arg("graph"), py::arg("ratios"), py::arg("seed"));
    m.def(
        "sbm_generate",
        [](std::size_t n, int classes, double p_in, double p_out, std::size_t f, std::uint64_t seed, double signal,
           double noise) {
            SbmOptions opt;
            opt.feature_signal = signal;
            opt.feature_noise = noise;
            return sbm_generate(n, classes, p_in, p_out, f, seed, opt);
        },
        py::arg("n"), py::arg("classes"), py::arg("p_in"), py::arg("p_out"), py::arg("feature_dim"), py::arg("seed"),
        py::arg("feature_signal") = 1.0, py::arg("feature_noise") = 1.0);

    m.def("edge_homophily", &edge_homophily, py::arg("graph"));
    m.def(
        "node_homophily",
        [](const Graph& g) -> std::optional<double> {
            const auto h = node_homophily(g);
            return h.defined ? std::optional<double>(h.value) : std::nullopt;
        },
        py::arg("graph"));

    m.def("community_split", &community_split, py::arg("graph"), py::arg("num_clients"), py::arg("seed"));
    m.def("structure_noniid_split", &structure_noniid_split, py::arg("graph"), py::arg("num_clients"),
          py::arg("p_s") = 0.5, py::arg("ratio") = 0.5, py::arg("seed") = 0);
    m.def(
        "compute_hcs",
        [](const Graph& g, double kappa, int steps, double mask_prob, std::uint64_t seed) {
            return hcs_dict(compute_hcs(g, kappa, steps, mask_prob, seed));
        },
        py::arg("graph"), py::arg("kappa") = 0.5, py::arg("steps") = 5, py::arg("mask_prob") = 0.5,
        py::arg("seed") = 0);

    m.def("default_config", [] { return config_to_json(ExperimentConfig{}); });
    m.def("train", &train, py::arg("config_json"),
          "Runs every configured seed, writes the output directory and returns results.json as a dict.");
    m.def("metrics", [](const std::filesystem::path& p) { return cmd_metrics(p); }, py::arg("path"));
    m.def("set_quiet", &log::set_quiet, py::arg("quiet"));

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
}
