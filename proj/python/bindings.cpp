#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dnefc/checkpoint.hpp"
#include "dnefc/connectome.hpp"
#include "dnefc/dataset.hpp"
#include "dnefc/errors.hpp"
#include "dnefc/saliency.hpp"
#include "dnefc/trainer.hpp"

namespace py = pybind11;
using namespace dnefc;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<float> to_vector(const FloatArray& a) { return {a.data(), a.data() + a.size()}; }

FloatArray to_array(std::span<const float> v, std::vector<py::ssize_t> shape) {
    FloatArray out(shape);
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

AdjacencyMatrix matrix_from(const FloatArray& a, std::string id, Label label) {
    if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw ValidationError("matrix must be a square 2-D array");
    return {std::move(id), label, static_cast<std::size_t>(a.shape(0)), to_vector(a)};
}

FlatGenome genome_from(const NetworkSpec& spec, const FloatArray& g) { return FlatGenome(spec, to_vector(g)); }

py::tuple probabilities(const OutputProbabilities& p) { return py::make_tuple(p.p[0], p.p[1]); }

py::dict stats_dict(const GenerationStats& s) {
    py::dict d;
    d["generation"] = s.generation;
    d["best_child"] = s.best_child;
    d["mean_child"] = s.mean_child;
    d["worst_child"] = s.worst_child;
    d["parent_train_acc"] = s.parent_train_acc;
    d["test_acc"] = s.test_acc ? py::cast(*s.test_acc) : py::none();
    return d;
}

} // namespace

PYBIND11_MODULE(_dnefc, m) {
    m.doc() = "Neuroevolution of CNNs on connectivity matrices";

    static py::exception<Error> base(m, "DnefcError");
    static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
    static py::exception<IoError> io(m, "IoError", base.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ValidationError& e) {
            validation(e.what());
        } catch (const IoError& e) {
            io(e.what());
        } catch (const Error& e) {
            base(e.what());
        }
    });

    py::enum_<Label>(m, "Label").value("LGG", Label::LGG).value("HGG", Label::HGG);

    py::class_<SynthConfig>(m, "SynthConfig")
        .def(py::init<>())
        .def_readwrite("n_rois", &SynthConfig::n_rois)
        .def_readwrite("n_per_class_train", &SynthConfig::n_per_class_train)
        .def_readwrite("n_per_class_test", &SynthConfig::n_per_class_test)
        .def_readwrite("community_count", &SynthConfig::community_count)
        .def_readwrite("separability", &SynthConfig::separability)
        .def_readwrite("noise_sigma", &SynthConfig::noise_sigma)
        .def_readwrite("seed", &SynthConfig::seed)
        .def("validate", &SynthConfig::validate);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("sigma", &TrainConfig::sigma)
        .def_readwrite("episodes_per_generation", &TrainConfig::episodes_per_generation)
        .def_readwrite("elite_fraction", &TrainConfig::elite_fraction)
        .def_readwrite("max_generations", &TrainConfig::max_generations)
        .def_readwrite("master_seed", &TrainConfig::master_seed)
        .def_readwrite("early_stop_patience", &TrainConfig::early_stop_patience)
        .def("validate", &TrainConfig::validate);

    py::class_<OcclusionConfig>(m, "OcclusionConfig")
        .def(py::init<>())
        .def_readwrite("patch_size", &OcclusionConfig::patch_size)
        .def_readwrite("stride", &OcclusionConfig::stride)
        .def_readwrite("baseline", &OcclusionConfig::baseline)
        .def_readwrite("target", &OcclusionConfig::target);

    py::class_<AdjacencyMatrix>(m, "AdjacencyMatrix")
        .def(py::init([](const FloatArray& a, std::string id, Label label) { return matrix_from(a, std::move(id), label); }),
             py::arg("values"), py::arg("id") = "matrix", py::arg("label") = Label::LGG)
        .def_readonly("id", &AdjacencyMatrix::id)
        .def_readonly("label", &AdjacencyMatrix::label)
        .def_readonly("n", &AdjacencyMatrix::n)
        .def_property_readonly("values", [](const AdjacencyMatrix& a) {
            const auto n = static_cast<py::ssize_t>(a.n);
            return to_array(a.values, {n, n});
        });

    py::class_<NetworkSpec>(m, "NetworkSpec")
        .def_property_readonly("param_count", &NetworkSpec::param_count)
        .def_property_readonly("output_shapes", &NetworkSpec::output_shapes)
        .def("to_json", [](const NetworkSpec& s) { return s.to_json().dump(); })
        .def_static("from_json", [](const std::string& text) { return NetworkSpec::from_json(nlohmann::json::parse(text)); })
        .def("__repr__", [](const NetworkSpec& s) { return describe(s); });

    py::class_<GenerationStats>(m, "GenerationStats")
        .def_readonly("generation", &GenerationStats::generation)
        .def_readonly("best_child", &GenerationStats::best_child)
        .def_readonly("mean_child", &GenerationStats::mean_child)
        .def_readonly("worst_child", &GenerationStats::worst_child)
        .def_readonly("parent_train_acc", &GenerationStats::parent_train_acc)
        .def_readonly("test_acc", &GenerationStats::test_acc);

    m.def("default_spec", &default_spec, py::arg("n") = 105);
    m.def("compact_spec", &compact_spec, py::arg("n"), py::arg("hidden") = 64);
    m.def("glorot_init", [](const NetworkSpec& spec, std::uint64_t seed) {
        const auto g = glorot_init(spec, seed);
        return to_array(g.values, {static_cast<py::ssize_t>(g.param_count())});
    });
    m.def("forward", [](const NetworkSpec& spec, const FloatArray& genome, const AdjacencyMatrix& a) {
        return probabilities(forward(spec, genome_from(spec, genome), a));
    });
    m.def("predict", [](double p0, double p1) { return predict(OutputProbabilities{{p0, p1}}); });
    m.def(
        "conv2d",
        [](const FloatArray& input, const FloatArray& kernel, const FloatArray& bias, std::size_t stride,
           std::size_t padding) {
            if (input.ndim() != 3 || kernel.ndim() != 4 || kernel.shape(0) != kernel.shape(1)) {
                throw ValidationError("expected input (H, W, C) and kernel (k, k, C_in, C_out)");
            }
            const auto k = static_cast<std::size_t>(kernel.shape(0));
            const auto cin = static_cast<std::size_t>(kernel.shape(2));
            const auto cout = static_cast<std::size_t>(kernel.shape(3));
            const std::vector<float> kv = to_vector(kernel), bv = to_vector(bias);
            const Tensor in({static_cast<std::size_t>(input.shape(0)), static_cast<std::size_t>(input.shape(1)),
                             static_cast<std::size_t>(input.shape(2))},
                            to_vector(input));
            const Tensor out = conv2d_forward(in, {kv, bv, k, cin, cout}, stride, padding);
            std::vector<py::ssize_t> shape(out.shape().begin(), out.shape().end());
            return to_array(out.data(), shape);
        },
        py::arg("input"), py::arg("kernel"), py::arg("bias"), py::arg("stride") = 2, py::arg("padding") = 1);

    m.def("pearson_corr", [](const DoubleArray& x, const DoubleArray& y) {
        return pearson_corr({x.data(), static_cast<std::size_t>(x.size())}, {y.data(), static_cast<std::size_t>(y.size())});
    });
    m.def("fisher_z", &fisher_z);
    m.def("scale_and_threshold", [](const DoubleArray& a) {
        const auto out = scale_and_threshold({a.data(), static_cast<std::size_t>(a.size())});
        DoubleArray result(std::vector<py::ssize_t>(a.shape(), a.shape() + a.ndim()));
        std::copy(out.begin(), out.end(), result.mutable_data());
        return result;
    });

    m.def("generate_dataset", [](const SynthConfig& c) {
        auto d = generate_synthetic_dataset(c);
        return py::make_tuple(std::move(d.train), std::move(d.test));
    });
    m.def("load_dataset", [](const std::filesystem::path& dir) {
        auto d = load_dataset(dir);
        return py::make_tuple(std::move(d.train), std::move(d.test));
    });
    m.def("write_dataset", [](const std::filesystem::path& dir, const SynthConfig& c) {
        write_dataset(dir, generate_synthetic_dataset(c), c.to_json());
    });
    m.def("evaluate_fitness", [](const NetworkSpec& spec, const FloatArray& genome, const std::vector<AdjacencyMatrix>& data) {
        return evaluate_fitness(spec, genome_from(spec, genome), data);
    });
    m.def(
        "train",
        [](const NetworkSpec& spec, const std::vector<AdjacencyMatrix>& train_set,
           const std::vector<AdjacencyMatrix>& test_set, const TrainConfig& config, std::size_t threads) {
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(spec, train_set, test_set, config, threads);
            }
            py::list stats;
            for (const auto& s : r.stats) stats.append(stats_dict(s));
            return py::make_tuple(to_array(r.parent.values, {static_cast<py::ssize_t>(r.parent.param_count())}), stats);
        },
        py::arg("spec"), py::arg("train_set"), py::arg("test_set"), py::arg("config"), py::arg("threads") = 1);
    m.def(
        "occlusion_saliency",
        [](const NetworkSpec& spec, const FloatArray& genome, const AdjacencyMatrix& a, const OcclusionConfig& cfg,
           std::size_t threads) {
            const auto g = to_vector(genome);
            const auto map = occlusion_saliency(spec, g, a, cfg, threads);
            const auto n = static_cast<py::ssize_t>(map.n);
            return py::make_tuple(to_array(map.values, {n, n}), map.target_class);
        },
        py::arg("spec"), py::arg("genome"), py::arg("matrix"), py::arg("config") = OcclusionConfig{},
        py::arg("threads") = 1);
    m.def("load_checkpoint", [](const std::filesystem::path& path) {
        const auto c = load_checkpoint(path);
        py::dict d;
        d["spec"] = c.spec;
        d["parent"] = to_array(c.parent.values, {static_cast<py::ssize_t>(c.parent.param_count())});
        d["generation"] = c.generation;
        d["master_seed"] = c.master_seed;
        d["perfect_streak"] = c.perfect_streak;
        d["config"] = c.config;
        return d;
    });
}
