#include "xmorph/synth.hpp"

#include "xmorph/augment.hpp"
#include "xmorph/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace xmorph {

namespace {

class Normal {
public:
    explicit Normal(std::uint64_t seed) : rng_(seed) {}
    double operator()() { return dist_(rng_); }
    Eigen::MatrixXd matrix(Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index j = 0; j < c; ++j) {
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = (*this)();
        }
        return m;
    }
    Eigen::VectorXd vector(Eigen::Index n) { return matrix(n, 1).col(0); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> dist_{0.0, 1.0};
};

// Orthonormal columns (rows x cols, rows >= cols) with a fixed sign convention.
Eigen::MatrixXd random_orthonormal(Normal& normal, Eigen::Index rows, Eigen::Index cols) {
    const Eigen::MatrixXd g = normal.matrix(rows, cols);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
    const Eigen::MatrixXd r = qr.matrixQR();
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (r(j, j) < 0) q.col(j) *= -1.0;
    }
    return q;
}

double weight_level(Weight w) {
    switch (w) {
        case Weight::Empty: return 0.0;
        case Weight::G50: return 1.0;
        case Weight::G100: return 2.0;
        case Weight::G150: return 3.0;
    }
    return 0.0;
}

}  // namespace

std::string synth_map_key(const std::string& robot, Behavior behavior, Modality modality) {
    return robot + "/" + std::string(to_string(behavior)) + "-" + std::string(to_string(modality));
}

std::vector<ObjectDescriptor> canonical_objects() {
    std::vector<ObjectDescriptor> out;
    for (Color color : {Color::Blue, Color::Green, Color::Red, Color::White, Color::Yellow}) {
        for (Content content : {Content::Buttons, Content::Dices, Content::Marbles, Content::NutsBolts,
                                Content::Pasta, Content::Rice}) {
            for (Weight weight : {Weight::G50, Weight::G100, Weight::G150}) {
                out.push_back({std::string(to_string(color)) + "-" + std::string(to_string(content)) + "-" +
                                   std::string(to_string(weight)),
                               color, content, weight});
            }
        }
        out.push_back({std::string(to_string(color)) + "-empty", color, Content::Empty, Weight::Empty});
    }
    return out;
}

SynthDataset synthesize(const SynthConfig& config) {
    const auto catalog = canonical_objects();
    if (config.latent_dim < 3) throw Error(ErrorCode::InvalidConfig, "latent_dim must be >= 3");
    if (config.objects < 1 || config.objects > static_cast<int>(catalog.size())) {
        throw Error(ErrorCode::InvalidConfig, "objects must lie in [1, " + std::to_string(catalog.size()) + "]");
    }
    if (config.trials_per_object < 1) throw Error(ErrorCode::InvalidConfig, "trials_per_object must be >= 1");
    if (config.robots.empty()) throw Error(ErrorCode::InvalidConfig, "need at least one robot");
    if (!(config.class_separation > 0.0) || config.object_sigma < 0.0 || !(config.max_condition >= 1.0) ||
        config.bias_scale < 0.0) {
        throw Error(ErrorCode::InvalidConfig, "separation, sigmas, condition cap or bias scale out of range");
    }
    std::set<std::string> names;
    for (const auto& r : config.robots) {
        if (r.name.empty() || !names.insert(r.name).second) {
            throw Error(ErrorCode::InvalidConfig, "robot names must be unique and nonempty");
        }
        if (r.noise_sigma < 0.0 || r.effort_joints < 1) {
            throw Error(ErrorCode::InvalidConfig, "robot '" + r.name + "': bad noise or joint count");
        }
        for (Modality m : config.modalities) {
            if (feature_dim(m, r.effort_joints) < config.latent_dim) {
                throw Error(ErrorCode::InvalidConfig, "feature dim of " + std::string(to_string(m)) +
                                                          " below latent_dim for robot '" + r.name + "'");
            }
        }
    }

    const Eigen::Index L = config.latent_dim;
    SynthDataset out;
    SynthTruth& truth = out.truth;
    Normal frame_rng(derive_seed(config.seed, "frame"));
    const Eigen::MatrixXd axes = random_orthonormal(frame_rng, L, 3);
    truth.weight_means.resize(4, L);
    for (Weight w : {Weight::Empty, Weight::G50, Weight::G100, Weight::G150}) {
        truth.weight_means.row(static_cast<Eigen::Index>(w)) =
            weight_level(w) * config.class_separation * axes.col(0).transpose();
    }
    // Seven contents evenly on a circle whose chord between neighbours is the separation.
    const double radius = config.class_separation / (2.0 * std::sin(std::numbers::pi / 7.0));
    truth.content_means.resize(7, L);
    for (int c = 0; c < 7; ++c) {
        const double theta = 2.0 * std::numbers::pi * c / 7.0;
        truth.content_means.row(c) = radius * (std::cos(theta) * axes.col(1) + std::sin(theta) * axes.col(2)).transpose();
    }

    DatasetManifest& manifest = out.manifest;
    manifest.objects.assign(catalog.begin(), catalog.begin() + config.objects);
    for (const auto& o : manifest.objects) {
        Normal on(derive_seed(config.seed, "object|" + o.id));
        truth.object_means[o.id] = truth.weight_means.row(static_cast<Eigen::Index>(o.weight)).transpose() +
                                   truth.content_means.row(static_cast<Eigen::Index>(o.content)).transpose() +
                                   config.object_sigma * on.vector(L);
    }

    for (const auto& r : config.robots) {
        RobotDescriptor rd;
        rd.name = r.name;
        rd.behaviors = config.behaviors;
        rd.modalities = config.modalities;
        rd.trials_per_object = config.trials_per_object;
        rd.effort_joints = r.effort_joints;
        manifest.robots.push_back(rd);

        std::vector<std::tuple<Behavior, Modality, int>> contexts;
        for (Behavior b : config.behaviors) {
            if (b == Behavior::Look) continue;
            for (Modality m : config.modalities) {
                const std::string key = synth_map_key(r.name, b, m);
                const int dim = feature_dim(m, r.effort_joints);
                Normal mr(derive_seed(config.seed, "map|" + key));
                const Eigen::MatrixXd u = random_orthonormal(mr, dim, L);
                const Eigen::MatrixXd v = random_orthonormal(mr, L, L);
                Eigen::VectorXd s(L);
                for (Eigen::Index i = 0; i < L; ++i) s[i] = mr.uniform(1.0, config.max_condition);
                truth.maps[key] = u * s.asDiagonal() * v.transpose();
                truth.biases[key] = config.bias_scale * mr.vector(dim);
                contexts.emplace_back(b, m, dim);
            }
        }
        for (const auto& o : manifest.objects) {
            Normal tr(derive_seed(config.seed, "trial|" + r.name + "|" + o.id));
            for (int t = 0; t < config.trials_per_object; ++t) {
                const Eigen::VectorXd z = truth.object_means.at(o.id) + tr.vector(L);
                for (const auto& [b, m, dim] : contexts) {
                    const std::string key = synth_map_key(r.name, b, m);
                    TrialRecord rec;
                    rec.object = o.id;
                    rec.context = {r.name, b, m, dim};
                    rec.trial = t;
                    rec.feature = truth.maps.at(key) * z + truth.biases.at(key) + r.noise_sigma * tr.vector(dim);
                    manifest.records.push_back(std::move(rec));
                }
            }
        }
    }
    std::stable_sort(manifest.records.begin(), manifest.records.end(), [](const TrialRecord& a, const TrialRecord& b) {
        return std::tie(a.object, a.trial, a.context.robot, a.context.behavior, a.context.modality) <
               std::tie(b.object, b.trial, b.context.robot, b.context.behavior, b.context.modality);
    });
    validate_manifest(manifest);
    return out;
}

DatasetManifest generate_synthetic_dataset(const SynthConfig& config, const std::filesystem::path& manifest_path) {
    SynthDataset data = synthesize(config);
    write_manifest(data.manifest, manifest_path);
    return std::move(data.manifest);
}

Eigen::MatrixXd synth_raw_signal(Modality modality, int samples, int channels, double sample_rate,
                                 std::uint64_t seed) {
    if (samples < 1) throw Error(ErrorCode::InvalidConfig, "samples must be >= 1");
    Normal n(seed);
    if (modality == Modality::Audio) {
        if (!(sample_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "sample_rate must be positive");
        Eigen::MatrixXd x(1, samples);
        const double f0 = n.uniform(200.0, 800.0), f1 = n.uniform(1000.0, 4000.0);
        const double duration = samples / sample_rate;
        for (int i = 0; i < samples; ++i) {
            const double t = i / sample_rate;
            const double phase = 2.0 * std::numbers::pi * (f0 * t + 0.5 * (f1 - f0) * t * t / duration);
            x(0, i) = std::exp(-3.0 * t / duration) * std::sin(phase) + 0.01 * n();
        }
        return x;
    }
    const int rows = modality == Modality::Force ? 3 : channels;
    if (rows < 1) throw Error(ErrorCode::InvalidConfig, "channels must be >= 1");
    Eigen::MatrixXd x(rows, samples);
    for (int c = 0; c < rows; ++c) {
        const double amp = n.uniform(0.5, 2.0), freq = n.uniform(0.5, 3.0), offset = n();
        for (int i = 0; i < samples; ++i) {
            const double u = static_cast<double>(i) / samples;
            x(c, i) = offset + amp * std::sin(2.0 * std::numbers::pi * freq * u) + 0.01 * n();
        }
    }
    return x;
}

}  // namespace xmorph
