#include "xmorph/edn.hpp"

#include "xmorph/error.hpp"
#include "xmorph/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace xmorph {

namespace {

struct Activations {
    std::vector<Eigen::MatrixXd> pre;   // z_l, features x batch
    std::vector<Eigen::MatrixXd> post;  // a_l; post[0] is the input
};

void elu_inplace(Eigen::MatrixXd& m, double alpha) {
    m = m.unaryExpr([alpha](double v) { return v > 0.0 ? v : alpha * (std::exp(v) - 1.0); });
}

Eigen::MatrixXd elu_derivative(const Eigen::MatrixXd& z, double alpha) {
    return z.unaryExpr([alpha](double v) { return v > 0.0 ? 1.0 : alpha * std::exp(v); });
}

// x is features x batch.
Activations forward_columns(const EdnModel& model, const Eigen::MatrixXd& x) {
    Activations act;
    act.post.push_back(x);
    for (const auto& layer : model.layers) {
        Eigen::MatrixXd z = layer.weight * act.post.back();
        z.colwise() += layer.bias;
        act.pre.push_back(z);
        if (layer.elu) elu_inplace(z, model.config.elu_alpha);
        act.post.push_back(std::move(z));
    }
    return act;
}

// Columns are samples. Returns the batch MSE and fills grads.
double backprop_columns(const EdnModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                        EdnGradients& grads) {
    const Activations act = forward_columns(model, x);
    const std::size_t layers = model.layers.size();
    Eigen::MatrixXd delta = act.post.back() - y;
    const double loss = delta.squaredNorm() / static_cast<double>(y.size());
    delta *= 2.0 / static_cast<double>(y.size());
    grads.weight.resize(layers);
    grads.bias.resize(layers);
    for (std::size_t l = layers; l-- > 0;) {
        if (model.layers[l].elu) delta = delta.cwiseProduct(elu_derivative(act.pre[l], model.config.elu_alpha));
        grads.weight[l].noalias() = delta * act.post[l].transpose();
        grads.bias[l] = delta.rowwise().sum();
        if (l > 0) delta = (model.layers[l].weight.transpose() * delta).eval();
    }
    return loss;
}

void check_input(const EdnModel& model, Eigen::Index cols) {
    if (model.layers.empty()) throw Error(ErrorCode::InvalidArgument, "empty network");
    if (cols != model.input_dim()) {
        throw Error(ErrorCode::DimensionMismatch, "network expects " + std::to_string(model.input_dim()) +
                                                      " inputs, got " + std::to_string(cols));
    }
}

Eigen::MatrixXd scale_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean, const Eigen::VectorXd& scale) {
    if (mean.size() == 0) return x;
    return (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

void fit_scaling(const Eigen::MatrixXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& scale) {
    mean = x.colwise().mean().transpose();
    scale = ((x.rowwise() - mean.transpose()).colwise().squaredNorm() / static_cast<double>(x.rows()))
                .cwiseSqrt()
                .transpose();
    for (Eigen::Index i = 0; i < scale.size(); ++i) {
        if (!(scale[i] > 1e-12)) scale[i] = 1.0;
    }
}

struct AdamState {
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    long step = 0;
};

}  // namespace

std::size_t EdnModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

std::vector<int> edn_layer_widths(int input_dim, int output_dim, const EdnConfig& config) {
    if (input_dim < 1 || output_dim < 1) throw Error(ErrorCode::InvalidArgument, "feature dims must be >= 1");
    if (config.latent_dim < 1) throw Error(ErrorCode::InvalidConfig, "latent_dim must be >= 1");
    std::vector<int> widths{input_dim};
    for (int u : config.encoder_units) {
        if (u < 1) throw Error(ErrorCode::InvalidConfig, "encoder units must be >= 1");
        widths.push_back(u);
    }
    widths.push_back(config.latent_dim);
    for (auto it = config.encoder_units.rbegin(); it != config.encoder_units.rend(); ++it) widths.push_back(*it);
    widths.push_back(output_dim);
    return widths;
}

EdnModel init_edn(int input_dim, int output_dim, const EdnConfig& config) {
    const auto widths = edn_layer_widths(input_dim, output_dim, config);
    EdnModel model;
    model.config = config;
    std::mt19937_64 rng(config.seed);
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const int fan_in = widths[l], fan_out = widths[l + 1];
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> uniform(-limit, limit);
        DenseLayer layer;
        layer.weight.resize(fan_out, fan_in);
        for (Eigen::Index j = 0; j < fan_in; ++j) {
            for (Eigen::Index i = 0; i < fan_out; ++i) layer.weight(i, j) = uniform(rng);
        }
        layer.bias = Eigen::VectorXd::Zero(fan_out);
        layer.elu = l + 2 < widths.size();
        model.layers.push_back(std::move(layer));
    }
    return model;
}

EdnModel make_edn(std::vector<DenseLayer> layers, double elu_alpha) {
    EdnModel model;
    model.config.elu_alpha = elu_alpha;
    model.config.standardize = false;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (l > 0 && layers[l].weight.cols() != layers[l - 1].weight.rows()) {
            throw Error(ErrorCode::DimensionMismatch, "layer " + std::to_string(l) + " input width");
        }
        if (layers[l].bias.size() != layers[l].weight.rows()) {
            throw Error(ErrorCode::DimensionMismatch, "layer " + std::to_string(l) + " bias width");
        }
        layers[l].elu = l + 1 < layers.size();
    }
    model.layers = std::move(layers);
    return model;
}

Eigen::MatrixXd edn_forward(const EdnModel& model, const Eigen::MatrixXd& x) {
    check_input(model, x.cols());
    const Eigen::MatrixXd in = scale_rows(x, model.input_mean, model.input_scale);
    Eigen::MatrixXd out = forward_columns(model, in.transpose()).post.back().transpose();
    if (model.output_mean.size() != 0) {
        out = (out.array().rowwise() * model.output_scale.transpose().array()).matrix();
        out.rowwise() += model.output_mean.transpose();
    }
    return out;
}

Eigen::VectorXd edn_forward(const EdnModel& model, const Eigen::VectorXd& x) {
    return edn_forward(model, Eigen::MatrixXd(x.transpose())).row(0).transpose();
}

double batch_mse(const EdnModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    check_input(model, x.cols());
    const Eigen::MatrixXd out = forward_columns(model, x.transpose()).post.back();
    return (out - y.transpose()).squaredNorm() / static_cast<double>(y.size());
}

double batch_mse_gradient(const EdnModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                          EdnGradients& grads) {
    check_input(model, x.cols());
    if (y.rows() != x.rows() || y.cols() != model.output_dim()) {
        throw Error(ErrorCode::DimensionMismatch, "target batch shape");
    }
    return backprop_columns(model, x.transpose(), y.transpose(), grads);
}

double gradient_check(const EdnModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double h) {
    Eigen::MatrixXd jittered = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) jittered.data()[i] += 1e-6 * std::sin(1.0 + 7.0 * static_cast<double>(i));

    EdnGradients analytic;
    batch_mse_gradient(model, jittered, y, analytic);
    EdnModel probe = model;
    double worst = 0.0;
    auto compare = [&](double a, double& param) {
        const double saved = param;
        param = saved + h;
        const double up = batch_mse(probe, jittered, y);
        param = saved - h;
        const double down = batch_mse(probe, jittered, y);
        param = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
        const double err = std::abs(a - numeric) / denom;
        worst = std::max(worst, err);
    };
    for (std::size_t l = 0; l < probe.layers.size(); ++l) {
        auto& layer = probe.layers[l];
        for (Eigen::Index i = 0; i < layer.weight.size(); ++i) compare(analytic.weight[l].data()[i], layer.weight.data()[i]);
        for (Eigen::Index i = 0; i < layer.bias.size(); ++i) compare(analytic.bias[l][i], layer.bias[i]);
    }
    return worst;
}

double edn_rmse(const EdnModel& model, const Eigen::MatrixXd& source, const Eigen::MatrixXd& target) {
    const Eigen::MatrixXd pred = edn_forward(model, source);
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "target matrix shape");
    }
    return std::sqrt((pred - target).squaredNorm() / static_cast<double>(target.size()));
}

EdnModel train_edn(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const EdnConfig& config) {
    if (source.rows() == 0) throw Error(ErrorCode::EmptyCorrespondence, "no training pairs");
    if (source.rows() != target.rows()) throw Error(ErrorCode::DimensionMismatch, "source/target pair counts differ");
    if (config.epochs < 0 || config.batch_size < 1 || !(config.learning_rate > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "epochs >= 0, batch_size >= 1, learning_rate > 0 required");
    }
    if (!source.allFinite() || !target.allFinite()) throw Error(ErrorCode::NonFiniteFeature, "training pairs");

    EdnModel model = init_edn(static_cast<int>(source.cols()), static_cast<int>(target.cols()), config);
    if (config.standardize) {
        fit_scaling(source, model.input_mean, model.input_scale);
        fit_scaling(target, model.output_mean, model.output_scale);
    }
    // Network space: samples as columns.
    const Eigen::MatrixXd xs = scale_rows(source, model.input_mean, model.input_scale).transpose();
    const Eigen::MatrixXd ys = scale_rows(target, model.output_mean, model.output_scale).transpose();
    const Eigen::Index n = xs.cols();
    const Eigen::Index batch = std::min<Eigen::Index>(config.batch_size, n);

    constexpr double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    AdamState adam;
    for (const auto& l : model.layers) {
        adam.mw.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        adam.vw.push_back(Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()));
        adam.mb.push_back(Eigen::VectorXd::Zero(l.bias.size()));
        adam.vb.push_back(Eigen::VectorXd::Zero(l.bias.size()));
    }

    std::mt19937_64 rng(config.seed ^ 0x5DEECE66Dull);
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Eigen::MatrixXd bx, by;
    EdnGradients g;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        for (Eigen::Index start = 0; start < n; start += batch) {
            const Eigen::Index len = std::min(batch, n - start);
            bx.resize(xs.rows(), len);
            by.resize(ys.rows(), len);
            for (Eigen::Index k = 0; k < len; ++k) {
                bx.col(k) = xs.col(order[static_cast<std::size_t>(start + k)]);
                by.col(k) = ys.col(order[static_cast<std::size_t>(start + k)]);
            }
            const double loss = backprop_columns(model, bx, by, g);
            epoch_loss += loss * static_cast<double>(len);
            ++adam.step;
            const double c1 = 1.0 - std::pow(beta1, static_cast<double>(adam.step));
            const double c2 = 1.0 - std::pow(beta2, static_cast<double>(adam.step));
            const double step = config.learning_rate * std::sqrt(c2) / c1;
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                adam.mw[l] = beta1 * adam.mw[l] + (1.0 - beta1) * g.weight[l];
                adam.vw[l] = beta2 * adam.vw[l] + (1.0 - beta2) * g.weight[l].cwiseAbs2();
                model.layers[l].weight.array() -=
                    step * adam.mw[l].array() / (adam.vw[l].array().sqrt() + adam_eps * std::sqrt(c2));
                adam.mb[l] = beta1 * adam.mb[l] + (1.0 - beta1) * g.bias[l];
                adam.vb[l] = beta2 * adam.vb[l] + (1.0 - beta2) * g.bias[l].cwiseAbs2();
                model.layers[l].bias.array() -=
                    step * adam.mb[l].array() / (adam.vb[l].array().sqrt() + adam_eps * std::sqrt(c2));
            }
        }
        if (!std::isfinite(epoch_loss)) {
            throw Error(ErrorCode::NonFiniteLoss, "training diverged at epoch " + std::to_string(epoch));
        }
    }
    model.training_rmse = edn_rmse(model, source, target);
    return model;
}

EdnModel train_edn(const CorrespondenceSet& pairs, const EdnConfig& config) {
    if (pairs.pairs.empty()) throw Error(ErrorCode::EmptyCorrespondence, "no correspondence pairs");
    return train_edn(pairs.source_matrix(), pairs.target_matrix(), config);
}

void save_edn(const EdnModel& model, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["format"] = "xmorph-edn/1";
    const auto& c = model.config;
    doc["config"] = {{"encoder_units", c.encoder_units}, {"latent_dim", c.latent_dim},
                     {"elu_alpha", c.elu_alpha},         {"learning_rate", c.learning_rate},
                     {"epochs", c.epochs},               {"batch_size", c.batch_size},
                     {"standardize", c.standardize},     {"seed", c.seed}};
    doc["training_rmse"] = model.training_rmse;
    doc["layers"] = nlohmann::json::array();
    for (const auto& l : model.layers) {
        doc["layers"].push_back({{"weight", io::to_json(l.weight)}, {"bias", io::to_json(l.bias)}, {"elu", l.elu}});
    }
    doc["input_mean"] = io::to_json(model.input_mean);
    doc["input_scale"] = io::to_json(model.input_scale);
    doc["output_mean"] = io::to_json(model.output_mean);
    doc["output_scale"] = io::to_json(model.output_scale);
    io::write_json(path, doc);
}

EdnModel load_edn(const std::filesystem::path& path) {
    const auto doc = io::read_json(path);
    io::require_format(doc, "xmorph-edn/1");
    EdnModel m;
    try {
        const auto& c = doc.at("config");
        m.config.encoder_units = c.at("encoder_units").get<std::vector<int>>();
        m.config.latent_dim = c.at("latent_dim").get<int>();
        m.config.elu_alpha = c.at("elu_alpha").get<double>();
        m.config.learning_rate = c.at("learning_rate").get<double>();
        m.config.epochs = c.at("epochs").get<int>();
        m.config.batch_size = c.at("batch_size").get<int>();
        m.config.standardize = c.at("standardize").get<bool>();
        m.config.seed = c.at("seed").get<std::uint64_t>();
        m.training_rmse = doc.at("training_rmse").get<double>();
        for (const auto& l : doc.at("layers")) {
            m.layers.push_back({io::matrix_from_json(l.at("weight")), io::vector_from_json(l.at("bias")),
                                l.at("elu").get<bool>()});
        }
        m.input_mean = io::vector_from_json(doc.at("input_mean"));
        m.input_scale = io::vector_from_json(doc.at("input_scale"));
        m.output_mean = io::vector_from_json(doc.at("output_mean"));
        m.output_scale = io::vector_from_json(doc.at("output_scale"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
    return m;
}

}  // namespace xmorph
