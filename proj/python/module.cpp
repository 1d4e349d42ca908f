#include "xmorph/config.hpp"
#include "xmorph/edn.hpp"
#include "xmorph/error.hpp"
#include "xmorph/eval.hpp"
#include "xmorph/featurize.hpp"
#include "xmorph/kema.hpp"
#include "xmorph/linalg.hpp"
#include "xmorph/svm.hpp"
#include "xmorph/synth.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace xmorph;

namespace {

PyObject* error_type = nullptr;

KeyValueConfig settings(const std::map<std::string, std::string>& values) {
    KeyValueConfig kv;
    for (const auto& [k, v] : values) kv.set(k, v);
    return kv;
}

SignalKind signal_kind(const std::string& name) {
    if (name == "audio") return SignalKind::AudioWave;
    if (name == "effort") return SignalKind::JointEffort;
    if (name == "force") return SignalKind::EndpointForce;
    throw Error(ErrorCode::UnknownName, "signal kind '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_xmorph, m) {
    m.doc() = "Cross-robot feature transfer: featurization, KEMA, EDN, SVM and the evaluation protocols";

    error_type = py::exception<Error>(m, "Error").release().ptr();
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object type = py::reinterpret_borrow<py::object>(error_type);
            py::object exc = type(std::string(to_string(e.code())) + ": " + e.what());
            exc.attr("code") = std::string(to_string(e.code()));
            PyErr_SetObject(error_type, exc.ptr());
        }
    });

    m.def("temporal_bin",
          [](const Eigen::MatrixXd& data, int bins, const std::string& kind) {
              return temporal_bin({signal_kind(kind), 0.0, data}, bins).values;
          },
          py::arg("data"), py::arg("bins") = 10, py::arg("kind") = "effort");
    m.def("spectro_temporal_histogram",
          [](const Eigen::MatrixXd& s, int rows, int cols) { return spectro_temporal_histogram(s, rows, cols).values; },
          py::arg("spectrogram"), py::arg("rows") = 10, py::arg("cols") = 10);
    m.def("mel_spectrogram",
          [](const Eigen::VectorXd& wave, double sample_rate, int fft_window, int hop, int mel_bands) {
              return mel_spectrogram({SignalKind::AudioWave, sample_rate, wave.transpose()}, {fft_window, hop, mel_bands});
          },
          py::arg("wave"), py::arg("sample_rate"), py::arg("fft_window") = 1024, py::arg("hop") = 512,
          py::arg("mel_bands") = 60);
    m.def("featurize",
          [](const Eigen::MatrixXd& data, const std::string& kind, double sample_rate) {
              return featurize_signal({signal_kind(kind), sample_rate, data}).values;
          },
          py::arg("data"), py::arg("kind"), py::arg("sample_rate") = 0.0);

    m.def("generalized_eig",
          [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps) {
              const EigenPairs e = solve_generalized_eig(a, b, eps);
              return py::make_tuple(e.values, e.vectors);
          },
          py::arg("a"), py::arg("b"), py::arg("eps") = 0.0);

    py::class_<KemaModel>(m, "KemaModel")
        .def_property_readonly("latent_dim", &KemaModel::latent_dim)
        .def_readonly("eigenvalues", &KemaModel::eigenvalues)
        .def_readonly("bandwidth1", &KemaModel::bandwidth1)
        .def_readonly("bandwidth2", &KemaModel::bandwidth2)
        .def("project",
             [](const KemaModel& model, const Eigen::MatrixXd& x, int domain) {
                 return project_to_latent(model, x, domain);
             },
             py::arg("x"), py::arg("domain"));
    m.def("fit_kema",
          [](const Eigen::MatrixXd& x1, std::vector<int> y1, const Eigen::MatrixXd& x2, std::vector<int> y2,
             const std::map<std::string, std::string>& options) {
              KemaInputs in{x1, x2, std::move(y1), std::move(y2), {}};
              int classes = 0;
              for (int y : in.y1) classes = std::max(classes, y + 1);
              for (int y : in.y2) classes = std::max(classes, y + 1);
              for (int c = 0; c < classes; ++c) in.classes.push_back(std::to_string(c));
              KemaConfig cfg;
              const KeyValueConfig kv = settings(options);
              apply_config(kv, cfg, "");
              kv.reject_unused();
              return fit_kema(in, cfg);
          },
          py::arg("x1"), py::arg("y1"), py::arg("x2"), py::arg("y2"),
          py::arg("options") = std::map<std::string, std::string>{});

    py::class_<EdnModel>(m, "EdnModel")
        .def_readonly("training_rmse", &EdnModel::training_rmse)
        .def_property_readonly("input_dim", &EdnModel::input_dim)
        .def_property_readonly("output_dim", &EdnModel::output_dim)
        .def("parameter_count", &EdnModel::parameter_count)
        .def("forward", [](const EdnModel& model, const Eigen::MatrixXd& x) { return edn_forward(model, x); })
        .def("rmse", [](const EdnModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
            return edn_rmse(model, x, y);
        });
    m.def("train_edn",
          [](const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
             const std::map<std::string, std::string>& options, std::uint64_t seed) {
              EdnConfig cfg;
              const KeyValueConfig kv = settings(options);
              apply_config(kv, cfg, "");
              kv.reject_unused();
              cfg.seed = seed;
              py::gil_scoped_release release;
              return train_edn(source, target, cfg);
          },
          py::arg("source"), py::arg("target"), py::arg("options") = std::map<std::string, std::string>{},
          py::arg("seed") = 0);

    py::class_<SvmModel>(m, "SvmModel")
        .def_readonly("classes", &SvmModel::classes)
        .def_readonly("gamma", &SvmModel::gamma)
        .def("predict", [](const SvmModel& model, const Eigen::MatrixXd& x) { return predict(model, x); })
        .def("decision_values", [](const SvmModel& model, const Eigen::MatrixXd& x) { return decision_values(model, x); })
        .def("decision_scores", [](const SvmModel& model, const Eigen::MatrixXd& x) { return decision_scores(model, x); })
        .def("dual", [](const SvmModel& model, std::size_t machine) { return model.machines.at(machine).alpha; });
    m.def("train_svm",
          [](const Eigen::MatrixXd& x, const std::vector<int>& y, double c, std::optional<double> gamma) {
              SvmConfig cfg;
              cfg.c = c;
              cfg.gamma = gamma;
              return train_svm(x, y, cfg);
          },
          py::arg("x"), py::arg("y"), py::arg("c") = 1.0, py::arg("gamma") = py::none());

    m.def("accuracy", [](const std::vector<int>& p, const std::vector<int>& t) { return accuracy(p, t); });
    m.def("mean_accuracy_delta",
          [](double a_all, const std::vector<double>& projected, int m) { return mean_accuracy_delta(a_all, projected, m); },
          py::arg("a_all"), py::arg("projected"), py::arg("m"));

    m.def("synthesize",
          [](const std::filesystem::path& manifest_path, const std::map<std::string, std::string>& options) {
              SynthConfig cfg;
              const KeyValueConfig kv = settings(options);
              apply_config(kv, cfg);
              kv.reject_unused();
              const DatasetManifest data = generate_synthetic_dataset(cfg, manifest_path);
              return data.records.size();
          },
          py::arg("manifest_path"), py::arg("options") = std::map<std::string, std::string>{});
    m.def("evaluate",
          [](const std::filesystem::path& manifest_path, const std::map<std::string, std::string>& options,
             const std::optional<std::filesystem::path>& report_csv) {
              ProtocolConfig cfg;
              const KeyValueConfig kv = settings(options);
              apply_config(kv, cfg);
              kv.reject_unused();
              const DatasetManifest data = load_manifest(manifest_path);
              EvaluationReport report;
              {
                  py::gil_scoped_release release;
                  report = run_protocol(data, cfg);
              }
              if (report_csv) write_report_csv(report, *report_csv);
              return summary_json(report).dump();
          },
          py::arg("manifest_path"), py::arg("options") = std::map<std::string, std::string>{},
          py::arg("report_csv") = py::none());
}
