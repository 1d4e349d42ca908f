#include "xmorph/svm.hpp"

#include "xmorph/error.hpp"
#include "xmorph/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace xmorph {

namespace {

constexpr double kTau = 1e-12;

Eigen::MatrixXd rbf(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double gamma) {
    const Eigen::VectorXd xn = x.rowwise().squaredNorm();
    const Eigen::VectorXd yn = y.rowwise().squaredNorm();
    Eigen::MatrixXd d = (-2.0 * x * y.transpose()).eval();
    d.colwise() += xn;
    d.rowwise() += yn.transpose();
    return (-gamma * d.cwiseMax(0.0)).array().exp().matrix();
}

// Dual of the C-SVC with labels y in {+1, -1}; working pairs chosen by
// maximal violation with second-order gain (ties to the lower index).
void solve_binary(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, const SvmConfig& config, BinarySvm& out) {
    const Eigen::Index n = k.rows();
    const double c = config.c;
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
    auto in_up = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0); };
    auto in_low = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c); };

    int iter = 0;
    out.converged = false;
    while (iter < config.max_iterations) {
        Eigen::Index i = -1;
        double gmax = -std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            if (in_up(t) && -y[t] * grad[t] > gmax) {
                gmax = -y[t] * grad[t];
                i = t;
            }
        }
        double gmin = std::numeric_limits<double>::infinity();
        Eigen::Index j = -1;
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            if (!in_low(t)) continue;
            const double v = -y[t] * grad[t];
            gmin = std::min(gmin, v);
            if (i >= 0 && v < gmax) {
                const double b = gmax - v;
                double a = k(i, i) + k(t, t) - 2.0 * k(i, t);
                if (a <= 0.0) a = kTau;
                const double gain = -(b * b) / a;
                if (gain < best) {
                    best = gain;
                    j = t;
                }
            }
        }
        if (i < 0 || j < 0 || gmax - gmin < config.kkt_tolerance) {
            out.converged = true;
            break;
        }
        ++iter;

        const double qij = y[i] * y[j] * k(i, j);
        const double old_i = alpha[i], old_j = alpha[j];
        if (y[i] != y[j]) {
            double quad = k(i, i) + k(j, j) + 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0) {
                if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
            } else {
                if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
            }
            if (diff > 0) {
                if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
            } else {
                if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
            }
        } else {
            double quad = k(i, i) + k(j, j) - 2.0 * qij;
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
                if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
            } else {
                if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
                if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
            }
        }
        const double di = alpha[i] - old_i, dj = alpha[j] - old_j;
        // Q_tk = y_t y_k K_tk
        grad += (y.cwiseProduct(k.col(i)) * (y[i] * di)) + (y.cwiseProduct(k.col(j)) * (y[j] * dj));
    }
    out.iterations = iter;

    double ub = std::numeric_limits<double>::infinity(), lb = -ub, free_sum = 0.0;
    int free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] >= c) {
            if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0) {
            if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            ++free;
            free_sum += yg;
        }
    }
    const double rho = free > 0 ? free_sum / free : 0.5 * (ub + lb);
    out.bias = -rho;
    out.alpha = alpha;
}

}  // namespace

double scale_gamma(const Eigen::MatrixXd& x) {
    if (x.size() == 0) return 1.0;
    const double mean = x.mean();
    const double var = (x.array() - mean).square().mean();
    return var > 0.0 ? 1.0 / (static_cast<double>(x.cols()) * var) : 1.0;
}

SvmModel train_svm(const Eigen::MatrixXd& x, std::span<const int> y, const SvmConfig& config) {
    if (static_cast<Eigen::Index>(y.size()) != x.rows()) throw Error(ErrorCode::DimensionMismatch, "label count");
    if (!(config.c > 0.0) || !(config.kkt_tolerance > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "C and tolerance must be positive");
    }
    if (config.gamma && !(*config.gamma > 0.0)) throw Error(ErrorCode::InvalidConfig, "gamma must be positive");
    if (!x.allFinite()) throw Error(ErrorCode::NonFiniteFeature, "training features");
    const std::set<int> label_set(y.begin(), y.end());
    if (x.rows() < 2 || label_set.size() < 2) throw Error(ErrorCode::SingleClass, "need at least two classes");

    SvmModel model;
    model.classes.assign(label_set.begin(), label_set.end());
    model.gamma = config.gamma.value_or(scale_gamma(x));
    model.dim = static_cast<int>(x.cols());
    model.config = config;

    for (std::size_t a = 0; a < model.classes.size(); ++a) {
        for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
            BinarySvm m;
            m.positive = static_cast<int>(a);
            m.negative = static_cast<int>(b);
            for (std::size_t r = 0; r < y.size(); ++r) {
                if (y[r] == model.classes[a] || y[r] == model.classes[b]) m.members.push_back(static_cast<int>(r));
            }
            const auto n = static_cast<Eigen::Index>(m.members.size());
            Eigen::MatrixXd sub(n, x.cols());
            Eigen::VectorXd sign(n);
            for (Eigen::Index r = 0; r < n; ++r) {
                sub.row(r) = x.row(m.members[static_cast<std::size_t>(r)]);
                sign[r] = y[static_cast<std::size_t>(m.members[static_cast<std::size_t>(r)])] == model.classes[a] ? 1.0 : -1.0;
            }
            solve_binary(rbf(sub, sub, model.gamma), sign, config, m);
            std::vector<Eigen::Index> sv;
            for (Eigen::Index r = 0; r < n; ++r) {
                if (m.alpha[r] > 0.0) sv.push_back(r);
            }
            m.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
            m.coef.resize(static_cast<Eigen::Index>(sv.size()));
            for (std::size_t s = 0; s < sv.size(); ++s) {
                m.support_vectors.row(static_cast<Eigen::Index>(s)) = sub.row(sv[s]);
                m.coef[static_cast<Eigen::Index>(s)] = m.alpha[sv[s]] * sign[sv[s]];
                m.support_indices.push_back(m.members[static_cast<std::size_t>(sv[s])]);
            }
            model.machines.push_back(std::move(m));
        }
    }
    return model;
}

Eigen::MatrixXd decision_values(const SvmModel& model, const Eigen::MatrixXd& x) {
    if (x.cols() != model.dim) {
        throw Error(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.dim) + " features, got " +
                                                      std::to_string(x.cols()));
    }
    Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(model.machines.size()));
    for (std::size_t m = 0; m < model.machines.size(); ++m) {
        const auto& machine = model.machines[m];
        Eigen::VectorXd f = Eigen::VectorXd::Constant(x.rows(), machine.bias);
        if (machine.coef.size() > 0) f += rbf(x, machine.support_vectors, model.gamma) * machine.coef;
        out.col(static_cast<Eigen::Index>(m)) = f;
    }
    return out;
}

Eigen::MatrixXd vote_matrix(const SvmModel& model, const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd f = decision_values(model, x);
    Eigen::MatrixXd votes = Eigen::MatrixXd::Zero(x.rows(), static_cast<Eigen::Index>(model.classes.size()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (std::size_t m = 0; m < model.machines.size(); ++m) {
            const auto& machine = model.machines[m];
            votes(r, f(r, static_cast<Eigen::Index>(m)) >= 0.0 ? machine.positive : machine.negative) += 1.0;
        }
    }
    return votes;
}

Eigen::MatrixXd decision_scores(const SvmModel& model, const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd f = decision_values(model, x);
    const auto classes = static_cast<Eigen::Index>(model.classes.size());
    Eigen::MatrixXd votes = Eigen::MatrixXd::Zero(x.rows(), classes);
    Eigen::MatrixXd confidence = Eigen::MatrixXd::Zero(x.rows(), classes);
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (std::size_t m = 0; m < model.machines.size(); ++m) {
            const auto& machine = model.machines[m];
            const double v = f(r, static_cast<Eigen::Index>(m));
            votes(r, v >= 0.0 ? machine.positive : machine.negative) += 1.0;
            const double s = v / (1.0 + std::abs(v));
            confidence(r, machine.positive) += s;
            confidence(r, machine.negative) -= s;
        }
    }
    // |confidence| < classes - 1, so dividing by machines + 1 keeps the
    // tiebreaker spread below one vote.
    return votes + confidence / (static_cast<double>(model.machines.size()) + 1.0);
}

std::vector<int> predict(const SvmModel& model, const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd scores = decision_scores(model, x);
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < scores.cols(); ++c) {
            if (scores(r, c) > scores(r, best)) best = c;
        }
        out[static_cast<std::size_t>(r)] = model.classes[static_cast<std::size_t>(best)];
    }
    return out;
}

void save_svm(const SvmModel& model, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["format"] = "xmorph-svm/1";
    doc["classes"] = model.classes;
    doc["gamma"] = model.gamma;
    doc["dim"] = model.dim;
    doc["config"] = {{"c", model.config.c}, {"kkt_tolerance", model.config.kkt_tolerance},
                     {"max_iterations", model.config.max_iterations}, {"seed", model.config.seed}};
    doc["machines"] = nlohmann::json::array();
    for (const auto& m : model.machines) {
        doc["machines"].push_back({{"positive", m.positive},
                                   {"negative", m.negative},
                                   {"support_vectors", io::to_json(m.support_vectors)},
                                   {"coef", io::to_json(m.coef)},
                                   {"support_indices", m.support_indices},
                                   {"bias", m.bias},
                                   {"converged", m.converged}});
    }
    io::write_json(path, doc);
}

SvmModel load_svm(const std::filesystem::path& path) {
    const auto doc = io::read_json(path);
    io::require_format(doc, "xmorph-svm/1");
    SvmModel model;
    try {
        model.classes = doc.at("classes").get<std::vector<int>>();
        model.gamma = doc.at("gamma").get<double>();
        model.dim = doc.at("dim").get<int>();
        const auto& c = doc.at("config");
        model.config.c = c.at("c").get<double>();
        model.config.gamma = model.gamma;
        model.config.kkt_tolerance = c.at("kkt_tolerance").get<double>();
        model.config.max_iterations = c.at("max_iterations").get<int>();
        model.config.seed = c.at("seed").get<std::uint64_t>();
        for (const auto& jm : doc.at("machines")) {
            BinarySvm m;
            m.positive = jm.at("positive").get<int>();
            m.negative = jm.at("negative").get<int>();
            m.support_vectors = io::matrix_from_json(jm.at("support_vectors"));
            m.coef = io::vector_from_json(jm.at("coef"));
            m.support_indices = jm.at("support_indices").get<std::vector<int>>();
            m.bias = jm.at("bias").get<double>();
            m.converged = jm.at("converged").get<bool>();
            model.machines.push_back(std::move(m));
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
    return model;
}

}  // namespace xmorph
