#include "xmorph/augment.hpp"
#include "xmorph/config.hpp"
#include "xmorph/correspond.hpp"
#include "xmorph/dataset.hpp"
#include "xmorph/edn.hpp"
#include "xmorph/error.hpp"
#include "xmorph/eval.hpp"
#include "xmorph/featurize.hpp"
#include "xmorph/kema.hpp"
#include "xmorph/plot.hpp"
#include "xmorph/serialize.hpp"
#include "xmorph/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace xmorph;

namespace {

struct Globals {
    std::string config_path;
    std::string out = "out";
    std::string seed;
    int jobs = 1;
    bool verbose = false;
    std::vector<std::string> overrides;  // key=value
};

void log(const Globals& g, const std::string& msg) {
    if (g.verbose) std::cerr << "xmorph: " << msg << '\n';
}

// defaults < config file < XMORPH_SEED < command-line flags
KeyValueConfig resolve(const Globals& g, const std::vector<std::pair<std::string, std::string>>& flags) {
    KeyValueConfig kv = g.config_path.empty() ? KeyValueConfig{} : KeyValueConfig::load(g.config_path);
    if (const char* env = std::getenv("XMORPH_SEED"); env && *env) kv.set("seed", env);
    if (!g.seed.empty()) kv.set("seed", g.seed);
    for (const auto& item : g.overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::InvalidConfig, "--set expects key=value, got '" + item + "'");
        kv.set(item.substr(0, eq), item.substr(eq + 1));
    }
    for (const auto& [k, v] : flags) kv.set(k, v);
    return kv;
}

std::string timestamp() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_run_json(const fs::path& out, const std::string& command, const json& config) {
    json doc{{"command", command}, {"version", "0.1.0"}, {"config", config}, {"created", timestamp()}};
    io::write_json(out / "run.json", doc);
}

std::string require_key(const KeyValueConfig& kv, const std::string& key) {
    auto v = kv.take_string(key);
    if (!v || v->empty()) throw Error(ErrorCode::InvalidConfig, "missing required setting '" + key + "'");
    return *v;
}

std::vector<std::pair<std::string, std::string>> collect(const std::vector<std::pair<std::string, CLI::Option*>>& opts,
                                                         const std::map<std::string, std::string>& values) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [key, opt] : opts) {
        if (opt->count() > 0) out.emplace_back(key, values.at(key));
    }
    return out;
}

// Registers `--flag` writing into values[key] and remembers it for overlaying.
struct FlagSet {
    std::map<std::string, std::string> values;
    std::vector<std::pair<std::string, CLI::Option*>> options;

    void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
        values[key];
        options.emplace_back(key, app->add_option(flag, values[key], help));
    }
    std::vector<std::pair<std::string, std::string>> given() const { return collect(options, values); }
};

std::vector<TrialRecord> context_trials(const DatasetManifest& manifest, const std::string& robot,
                                        const std::string& context) {
    const auto [b, m] = parse_context(context);
    TrialFilter f;
    f.robot = robot;
    f.behavior = b;
    f.modality = m;
    f.provenance = Provenance::Real;
    return select_trials(manifest, f);
}

int cmd_synth(const Globals& g, const FlagSet& flags, bool raw) {
    const KeyValueConfig kv = resolve(g, flags.given());
    SynthConfig config;
    apply_config(kv, config);
    kv.reject_unused();
    const fs::path out(g.out);
    log(g, "generating " + std::to_string(config.objects) + " objects");
    const DatasetManifest m = generate_synthetic_dataset(config, out / "manifest.json");
    if (raw) {
        const int joints = config.robots.front().effort_joints;
        const Eigen::MatrixXd audio = synth_raw_signal(Modality::Audio, 44100, 1, 44100.0, derive_seed(config.seed, "raw-audio"));
        write_wav(out / "raw" / "audio.wav", audio.row(0).transpose(), 44100);
        for (auto [mod, name] : {std::pair{Modality::Effort, "effort"}, std::pair{Modality::Force, "force"}}) {
            const Eigen::MatrixXd s = synth_raw_signal(mod, 500, joints, 0.0, derive_seed(config.seed, name));
            std::ofstream csv(out / "raw" / (std::string(name) + ".csv"));
            for (Eigen::Index t = 0; t < s.cols(); ++t) {
                for (Eigen::Index c = 0; c < s.rows(); ++c) csv << (c ? "," : "") << s(c, t);
                csv << '\n';
            }
        }
    }
    write_run_json(out, "synth", to_json(config));
    std::cout << "wrote " << (out / "manifest.json").string() << " (" << m.interaction_count() << " interactions, "
              << m.records.size() << " feature records)\n";
    return 0;
}

int cmd_featurize(const Globals& g, const std::vector<std::string>& inputs, const std::string& kind_name,
                  const MelConfig& mel) {
    if (inputs.empty()) throw Error(ErrorCode::InvalidArgument, "no input files");
    std::vector<Eigen::VectorXd> rows;
    for (const auto& in : inputs) {
        std::string kind = kind_name;
        if (kind.empty()) kind = fs::path(in).extension() == ".wav" ? "audio" : "";
        if (kind.empty()) throw Error(ErrorCode::InvalidArgument, in + ": pass --kind effort|force for CSV input");
        BinnedFeature f;
        if (kind == "audio") {
            const RawSignal s = read_wav(in);
            f = spectro_temporal_histogram(mel_spectrogram(s, mel));
        } else if (kind == "effort" || kind == "force") {
            f = temporal_bin(read_time_series_csv(in, kind == "effort" ? SignalKind::JointEffort : SignalKind::EndpointForce));
        } else {
            throw Error(ErrorCode::InvalidArgument, "unknown kind '" + kind + "'");
        }
        log(g, in + " -> " + std::to_string(f.values.size()) + " values");
        rows.push_back(f.values);
    }
    const fs::path out(g.out);
    fs::create_directories(out);
    write_feature_csv(out / "features.csv", rows);
    write_run_json(out, "featurize",
                   {{"inputs", inputs}, {"kind", kind_name.empty() ? "auto" : kind_name},
                    {"mel", {{"fft_window", mel.fft_window}, {"hop", mel.hop}, {"mel_bands", mel.mel_bands}}}});
    std::cout << "wrote " << rows.size() << " feature rows to " << (out / "features.csv").string() << '\n';
    return 0;
}

int cmd_augment(const Globals& g, const FlagSet& flags) {
    const KeyValueConfig kv = resolve(g, flags.given());
    const std::string manifest_path = require_key(kv, "manifest");
    const std::string robot = require_key(kv, "robot");
    const std::string context = require_key(kv, "context");
    const int k = kv.take_int("k").value_or(5);
    const std::uint64_t seed = kv.take_u64("seed").value_or(0);
    kv.reject_unused();
    const DatasetManifest manifest = load_manifest(manifest_path);
    const auto trials = context_trials(manifest, robot, context);
    const auto augmented = augment_trials(trials, k, seed);

    const fs::path out(g.out);
    std::map<std::string, std::vector<const TrialRecord*>> by_object;
    for (const auto& r : augmented) by_object[r.object].push_back(&r);
    json index = json::array();
    for (const auto& [object, recs] : by_object) {
        const std::string file = "augmented/" + robot + "/" + context + "/" + object + ".csv";
        std::vector<Eigen::VectorXd> rows;
        for (std::size_t i = 0; i < recs.size(); ++i) {
            rows.push_back(recs[i]->feature);
            index.push_back({{"object", object}, {"trial", recs[i]->trial}, {"file", file}, {"row", i}});
        }
        write_feature_csv(out / file, rows);
    }
    io::write_json(out / "augmented.json", {{"robot", robot}, {"context", context}, {"records", index}});
    write_run_json(out, "augment", {{"manifest", manifest_path}, {"robot", robot}, {"context", context}, {"k", k}, {"seed", seed}});
    std::cout << "sampled " << augmented.size() << " augmented trials for " << by_object.size() << " objects\n";
    return 0;
}

int cmd_train_edn(const Globals& g, const FlagSet& flags) {
    const KeyValueConfig kv = resolve(g, flags.given());
    const std::string manifest_path = require_key(kv, "manifest");
    const std::string source = require_key(kv, "source"), target = require_key(kv, "target");
    const std::string context = require_key(kv, "context");
    const std::string pairing = kv.take_string("pairs").value_or("identity");
    EdnConfig config;
    apply_config(kv, config, "edn.");
    config.seed = kv.take_u64("seed").value_or(0);
    kv.reject_unused();

    const DatasetManifest manifest = load_manifest(manifest_path);
    const auto src = context_trials(manifest, source, context);
    const auto tgt = context_trials(manifest, target, context);
    const CorrespondenceSet pairs = pairing == "identity"
                                        ? identity_pairs(src, tgt)
                                        : property_pairs(src, tgt, parse_label_kind(pairing), manifest.catalog());
    log(g, std::to_string(pairs.size()) + " training pairs");
    const EdnModel model = train_edn(pairs, config);
    const fs::path out(g.out);
    fs::create_directories(out);
    save_edn(model, out / "edn.json");
    json cfg = to_json(config);
    cfg["seed"] = config.seed;
    write_run_json(out, "train-edn", {{"manifest", manifest_path}, {"source", source}, {"target", target},
                                      {"context", context}, {"pairs", pairing}, {"edn", cfg}});
    io::write_json(out / "metrics.json", {{"pairs", pairs.size()}, {"training_rmse", model.training_rmse},
                                          {"parameters", model.parameter_count()}});
    std::cout << "trained EDN on " << pairs.size() << " pairs, training RMSE " << model.training_rmse << '\n';
    return 0;
}

int cmd_train_kema(const Globals& g, const FlagSet& flags) {
    const KeyValueConfig kv = resolve(g, flags.given());
    const std::string manifest_path = require_key(kv, "manifest");
    const std::string source = require_key(kv, "source"), target = require_key(kv, "target");
    const std::string context = require_key(kv, "context");
    const LabelKind label = parse_label_kind(kv.take_string("label").value_or("objectId"));
    KemaConfig config;
    apply_config(kv, config, "kema.");
    config.seed = kv.take_u64("seed").value_or(0);
    kv.reject_unused();

    const DatasetManifest manifest = load_manifest(manifest_path);
    const auto inputs = kema_inputs(context_trials(manifest, source, context), context_trials(manifest, target, context),
                                    label, manifest.catalog());
    log(g, std::to_string(inputs.x1.rows()) + " + " + std::to_string(inputs.x2.rows()) + " samples, " +
               std::to_string(inputs.classes.size()) + " classes");
    const KemaModel model = fit_kema(inputs, config);
    const fs::path out(g.out);
    fs::create_directories(out);
    save_kema(model, out / "kema.json");
    json cfg = to_json(config);
    cfg["seed"] = config.seed;
    write_run_json(out, "train-kema", {{"manifest", manifest_path}, {"source", source}, {"target", target},
                                       {"context", context}, {"label", to_string(label)}, {"kema", cfg}});
    if (model.insufficient_directions) std::cerr << "warning: fewer valid directions than requested\n";
    std::cout << "fitted KEMA with " << model.latent_dim() << " latent dimensions\n";
    return 0;
}

void render_plots(const fs::path& out, const std::vector<ReportRow>& rows) {
    for (const auto& [key, chart] : report_charts(rows)) write_svg(chart, out / "plots" / (key + ".svg"));
}

int cmd_evaluate(const Globals& g, const FlagSet& flags) {
    KeyValueConfig kv = resolve(g, flags.given());
    if (!kv.has("jobs")) kv.set("jobs", std::to_string(g.jobs));
    const std::string manifest_path = require_key(kv, "manifest");
    ProtocolConfig config;
    apply_config(kv, config);
    kv.reject_unused();

    const DatasetManifest manifest = load_manifest(manifest_path);
    log(g, std::string("running ") + std::string(to_string(config.method)) + " on " + std::string(to_string(config.task)));
    const EvaluationReport report = run_protocol(manifest, config);
    const fs::path out(g.out);
    write_report_csv(report, out / "report.csv");
    write_weights_csv(report, out / "weights.csv");
    io::write_json(out / "summary.json", summary_json(report));
    render_plots(out, read_report_csv(out / "report.csv"));
    json cfg = to_json(config);
    cfg["manifest"] = manifest_path;
    write_run_json(out, "evaluate", cfg);
    const json summary = summary_json(report);
    std::cout << to_string(config.task) << " / " << to_string(config.method) << ": A_all "
              << summary["reference"]["mean"].get<double>() << ", mdA " << summary["mda"].get<double>() << '\n';
    return 0;
}

int cmd_report(const Globals& g, const std::string& input) {
    const fs::path in(input.empty() ? g.out : input);
    if (!fs::exists(in)) throw Error(ErrorCode::MissingFile, "report input not found: " + in.string());
    std::vector<ReportRow> rows;
    json table = json::object();
    std::vector<fs::path> csvs;
    if (fs::is_regular_file(in)) {
        csvs.push_back(in);
    } else {
        for (const auto& e : fs::recursive_directory_iterator(in)) {
            if (e.is_regular_file() && e.path().filename() == "report.csv") csvs.push_back(e.path());
        }
    }
    std::sort(csvs.begin(), csvs.end());
    if (csvs.empty()) throw Error(ErrorCode::MissingFile, "no report.csv under " + in.string());
    for (const auto& csv : csvs) {
        const auto part = read_report_csv(csv);
        rows.insert(rows.end(), part.begin(), part.end());
        const fs::path summary = csv.parent_path() / "summary.json";
        if (fs::exists(summary)) {
            const json s = io::read_json(summary);
            table[s.at("method").get<std::string>()][s.at("task").get<std::string>()] = s.at("mda");
        }
    }
    const fs::path out(g.out);
    render_plots(out, rows);
    io::write_json(out / "mda_table.json", table);
    write_run_json(out, "report", {{"input", in.string()}, {"reports", csvs.size()}});
    for (const auto& [method, tasks] : table.items()) {
        std::cout << method;
        for (const auto& [task, v] : tasks.items()) std::cout << "  " << task << "=" << v.get<double>();
        std::cout << '\n';
    }
    std::cout << "wrote " << report_charts(rows).size() << " plots to " << (out / "plots").string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cross-robot sensorimotor knowledge transfer"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "key = value settings file");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--seed", g.seed, "seed (overrides XMORPH_SEED and the config file)");
    app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--set", g.overrides, "extra key=value setting (repeatable)");
    app.add_flag("-v,--verbose", g.verbose, "progress on stderr");

    auto* synth = app.add_subcommand("synth", "generate a synthetic two-robot dataset");
    FlagSet synth_flags;
    synth_flags.add(synth, "--objects", "objects", "number of objects (<= 95)");
    synth_flags.add(synth, "--trials", "trials_per_object", "trials per object");
    synth_flags.add(synth, "--latent-dim", "latent_dim", "shared latent dimension");
    synth_flags.add(synth, "--noise", "noise_sigma", "observation noise for every robot");
    synth_flags.add(synth, "--behaviors", "behaviors", "comma-separated behaviors");
    synth_flags.add(synth, "--modalities", "modalities", "comma-separated modalities");
    bool raw = false;
    synth->add_flag("--raw", raw, "also write example raw audio/effort/force signals");

    auto* featurize = app.add_subcommand("featurize", "raw WAV/CSV signals to binned feature rows");
    std::vector<std::string> feat_inputs;
    std::string feat_kind;
    MelConfig mel;
    featurize->add_option("inputs", feat_inputs, "signal files")->required();
    featurize->add_option("--kind", feat_kind, "audio, effort or force (default: audio for .wav)");
    featurize->add_option("--fft", mel.fft_window, "FFT window length");
    featurize->add_option("--hop", mel.hop, "hop length");
    featurize->add_option("--bands", mel.mel_bands, "mel bands");

    auto* augment = app.add_subcommand("augment", "sample per-bin Gaussian trials");
    FlagSet aug_flags;
    aug_flags.add(augment, "--manifest", "manifest", "dataset manifest");
    aug_flags.add(augment, "--robot", "robot", "robot name");
    aug_flags.add(augment, "--context", "context", "behavior-modality, e.g. shake-audio");
    aug_flags.add(augment, "--k", "k", "samples per object");

    auto* edn = app.add_subcommand("train-edn", "train a source-to-target encoder-decoder");
    FlagSet edn_flags;
    edn_flags.add(edn, "--manifest", "manifest", "dataset manifest");
    edn_flags.add(edn, "--source", "source", "source robot");
    edn_flags.add(edn, "--target", "target", "target robot");
    edn_flags.add(edn, "--context", "context", "behavior-modality");
    edn_flags.add(edn, "--pairs", "pairs", "identity, weight or content");
    edn_flags.add(edn, "--epochs", "edn.epochs", "training epochs");

    auto* kema = app.add_subcommand("train-kema", "fit a kernel manifold alignment");
    FlagSet kema_flags;
    kema_flags.add(kema, "--manifest", "manifest", "dataset manifest");
    kema_flags.add(kema, "--source", "source", "source robot (domain 1)");
    kema_flags.add(kema, "--target", "target", "target robot (domain 2)");
    kema_flags.add(kema, "--context", "context", "behavior-modality");
    kema_flags.add(kema, "--label", "label", "objectId, weight or content");
    kema_flags.add(kema, "--latent-dim", "kema.latent_dim", "latent dimension (0: default)");

    auto* evaluate = app.add_subcommand("evaluate", "run an evaluation protocol");
    FlagSet eval_flags;
    eval_flags.add(evaluate, "--manifest", "manifest", "dataset manifest");
    eval_flags.add(evaluate, "--task", "task", "weight, content or objectId");
    eval_flags.add(evaluate, "--method", "method", "baseline, edn-identity, edn-property, kema-identity, kema-property");
    eval_flags.add(evaluate, "--source", "source", "source robot");
    eval_flags.add(evaluate, "--target", "target", "target robot");
    eval_flags.add(evaluate, "--contexts", "contexts", "comma-separated behavior-modality list");
    eval_flags.add(evaluate, "--repeats", "repeats", "repeats");
    eval_flags.add(evaluate, "--budgets", "budgets", "comma-separated budget schedule");
    eval_flags.add(evaluate, "--m", "m", "budgets averaged by mdA");
    eval_flags.add(evaluate, "--augment-k", "augment_k", "augmented trials per object (0: off)");

    auto* report = app.add_subcommand("report", "render SVG learning curves from evaluate outputs");
    std::string report_input;
    report->add_option("--input", report_input, "evaluate output directory or report.csv (default: --out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*synth) return cmd_synth(g, synth_flags, raw);
        if (*featurize) return cmd_featurize(g, feat_inputs, feat_kind, mel);
        if (*augment) return cmd_augment(g, aug_flags);
        if (*edn) return cmd_train_edn(g, edn_flags);
        if (*kema) return cmd_train_kema(g, kema_flags);
        if (*evaluate) return cmd_evaluate(g, eval_flags);
        if (*report) return cmd_report(g, report_input);
    } catch (const Error& e) {
        std::cerr << "error[" << to_string(e.code()) << "]: " << e.what() << '\n';
        return exit_status(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
