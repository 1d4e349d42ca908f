#include "xmorph/kema.hpp"

#include "xmorph/error.hpp"
#include "xmorph/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <vector>

namespace xmorph {

namespace {

constexpr double kNullEigenvalue = 1e-9;

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    const Eigen::VectorXd xn = x.rowwise().squaredNorm();
    const Eigen::VectorXd yn = y.rowwise().squaredNorm();
    Eigen::MatrixXd d = (-2.0 * x * y.transpose()).eval();
    d.colwise() += xn;
    d.rowwise() += yn.transpose();
    return d.cwiseMax(0.0);
}

// K M K for block-diagonal K = diag(k1, k2).
Eigen::MatrixXd sandwich(const Eigen::MatrixXd& k1, const Eigen::MatrixXd& k2, const Eigen::MatrixXd& m) {
    const Eigen::Index n1 = k1.rows(), n2 = k2.rows();
    Eigen::MatrixXd km(n1 + n2, n1 + n2);
    km.topRows(n1).noalias() = k1 * m.topRows(n1);
    km.bottomRows(n2).noalias() = k2 * m.bottomRows(n2);
    Eigen::MatrixXd out(n1 + n2, n1 + n2);
    out.leftCols(n1).noalias() = km.leftCols(n1) * k1;
    out.rightCols(n2).noalias() = km.rightCols(n2) * k2;
    return 0.5 * (out + out.transpose());
}

}  // namespace

Eigen::MatrixXd rbf_kernel_matrix(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double sigma) {
    if (x.cols() != y.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "rbf kernel: " + std::to_string(x.cols()) + " vs " +
                                                      std::to_string(y.cols()) + " features");
    }
    if (!(sigma > 0.0)) throw Error(ErrorCode::NonPositiveBandwidth, "sigma=" + std::to_string(sigma));
    return (squared_distances(x, y) / (-2.0 * sigma * sigma)).array().exp().matrix();
}

double median_bandwidth(const Eigen::MatrixXd& x) {
    const Eigen::MatrixXd d2 = squared_distances(x, x);
    std::vector<double> dist;
    dist.reserve(static_cast<std::size_t>(x.rows() * (x.rows() - 1) / 2));
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
        for (Eigen::Index i = 0; i < j; ++i) dist.push_back(std::sqrt(d2(i, j)));
    }
    if (dist.empty()) return 1.0;
    const auto mid = dist.begin() + static_cast<std::ptrdiff_t>(dist.size() / 2);
    std::nth_element(dist.begin(), mid, dist.end());
    double median = *mid;
    if (dist.size() % 2 == 0) median = 0.5 * (median + *std::max_element(dist.begin(), mid));
    return median > 0.0 ? median : 1.0;
}

Eigen::MatrixXd graph_laplacian(const Eigen::MatrixXd& w) {
    Eigen::MatrixXd l = -w;
    l.diagonal() += w.rowwise().sum();
    return l;
}

Eigen::MatrixXd knn_adjacency(const Eigen::MatrixXd& x, int k) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    if (n < 2 || k < 1) return w;
    const Eigen::Index keff = std::min<Eigen::Index>(k, n - 1);
    const Eigen::MatrixXd d2 = squared_distances(x, x);
    std::vector<Eigen::Index> order;
    for (Eigen::Index i = 0; i < n; ++i) {
        order.clear();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) order.push_back(j);
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return d2(i, a) < d2(i, b); });
        for (Eigen::Index r = 0; r < keff; ++r) {
            w(i, order[static_cast<std::size_t>(r)]) = 1.0;
            w(order[static_cast<std::size_t>(r)], i) = 1.0;
        }
    }
    return w;
}

AlignmentLaplacians build_alignment_laplacians(const KemaInputs& inputs, const KemaConfig& config) {
    const Eigen::Index n1 = inputs.x1.rows(), n2 = inputs.x2.rows();
    if (n1 == 0 || n2 == 0) throw Error(ErrorCode::EmptyDomain, "both domains need samples");
    if (static_cast<Eigen::Index>(inputs.y1.size()) != n1 || static_cast<Eigen::Index>(inputs.y2.size()) != n2) {
        throw Error(ErrorCode::DimensionMismatch, "label count differs from sample count");
    }
    if (config.knn < 1) throw Error(ErrorCode::InvalidConfig, "knn must be >= 1");
    std::vector<int> labels(inputs.y1);
    labels.insert(labels.end(), inputs.y2.begin(), inputs.y2.end());
    if (std::set<int>(labels.begin(), labels.end()).size() < 2) {
        throw Error(ErrorCode::DegenerateLabels, "only one class present; class dissimilarity is empty");
    }
    const Eigen::Index n = n1 + n2;
    Eigen::MatrixXd w_geo = Eigen::MatrixXd::Zero(n, n);
    w_geo.topLeftCorner(n1, n1) = knn_adjacency(inputs.x1, config.knn);
    w_geo.bottomRightCorner(n2, n2) = knn_adjacency(inputs.x2, config.knn);

    Eigen::MatrixXd w_sim(n, n), w_dis(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const bool same = labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)];
            w_sim(i, j) = (same && i != j) ? 1.0 : 0.0;
            w_dis(i, j) = same ? 0.0 : 1.0;
        }
    }
    return {graph_laplacian(w_geo), graph_laplacian(w_sim), graph_laplacian(w_dis)};
}

KemaModel fit_kema(const KemaInputs& inputs, const KemaConfig& config) {
    if (config.mu < 0.0 || config.mu > 1.0) throw Error(ErrorCode::InvalidConfig, "mu must lie in [0, 1]");
    if (config.latent_dim < 0) throw Error(ErrorCode::InvalidConfig, "latent_dim must be >= 1 (0 = default)");
    const AlignmentLaplacians lap = build_alignment_laplacians(inputs, config);

    KemaModel model;
    model.anchors1 = inputs.x1;
    model.anchors2 = inputs.x2;
    if (!(config.bandwidth_scale > 0.0)) throw Error(ErrorCode::NonPositiveBandwidth, "bandwidth_scale must be positive");
    model.bandwidth1 = config.bandwidth1.value_or(config.bandwidth_scale * median_bandwidth(inputs.x1));
    model.bandwidth2 = config.bandwidth2.value_or(config.bandwidth_scale * median_bandwidth(inputs.x2));
    const Eigen::MatrixXd k1 = rbf_kernel_matrix(inputs.x1, inputs.x1, model.bandwidth1);
    const Eigen::MatrixXd k2 = rbf_kernel_matrix(inputs.x2, inputs.x2, model.bandwidth2);
    const Eigen::Index n1 = k1.rows(), n = k1.rows() + k2.rows();

    Eigen::MatrixXd a = sandwich(k1, k2, config.mu * lap.geo + (1.0 - config.mu) * lap.sim);
    const Eigen::MatrixXd b = sandwich(k1, k2, lap.dis);
    const double eps_a = config.eig_regularization * std::max(a.trace() / static_cast<double>(n), 1e-300);
    const double eps_b = config.eig_regularization * std::max(b.trace() / static_cast<double>(n), 1e-300);
    a.diagonal().array() += eps_a;
    const EigenPairs eig = solve_generalized_eig(a, b, eps_b, config.eigen_method);

    std::set<int> classes(inputs.y1.begin(), inputs.y1.end());
    classes.insert(inputs.y2.begin(), inputs.y2.end());
    const int wanted = config.latent_dim > 0
                           ? config.latent_dim
                           : std::max<int>(1, std::min<int>(20, static_cast<int>(n) - static_cast<int>(classes.size())));
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < eig.values.size() && static_cast<int>(keep.size()) < wanted; ++i) {
        if (std::isfinite(eig.values[i]) && std::abs(eig.values[i]) >= kNullEigenvalue) keep.push_back(i);
    }
    model.insufficient_directions = static_cast<int>(keep.size()) < wanted;
    const auto d = static_cast<Eigen::Index>(keep.size());
    model.eigenvalues.resize(d);
    Eigen::MatrixXd alpha(n, d);
    for (Eigen::Index c = 0; c < d; ++c) {
        model.eigenvalues[c] = eig.values[keep[static_cast<std::size_t>(c)]];
        alpha.col(c) = eig.vectors.col(keep[static_cast<std::size_t>(c)]);
    }
    model.coef1 = alpha.topRows(n1);
    model.coef2 = alpha.bottomRows(n - n1);
    return model;
}

Eigen::MatrixXd project_to_latent(const KemaModel& model, const Eigen::MatrixXd& x, int domain) {
    if (domain != 1 && domain != 2) throw Error(ErrorCode::UnknownDomain, "domain " + std::to_string(domain));
    const Eigen::MatrixXd& anchors = domain == 1 ? model.anchors1 : model.anchors2;
    const Eigen::MatrixXd& coef = domain == 1 ? model.coef1 : model.coef2;
    const double sigma = domain == 1 ? model.bandwidth1 : model.bandwidth2;
    if (x.cols() != anchors.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "domain " + std::to_string(domain) + " expects " +
                                                      std::to_string(anchors.cols()) + " features, got " +
                                                      std::to_string(x.cols()));
    }
    return rbf_kernel_matrix(x, anchors, sigma) * coef;
}

Eigen::VectorXd project_to_latent(const KemaModel& model, const Eigen::VectorXd& x, int domain) {
    return project_to_latent(model, Eigen::MatrixXd(x.transpose()), domain).row(0).transpose();
}

LatentScaler fit_latent_scaler(const Eigen::MatrixXd& z) {
    if (z.rows() == 0) throw Error(ErrorCode::EmptyInput, "latent scaler needs rows");
    LatentScaler s;
    s.mean = z.colwise().mean();
    const double dof = z.rows() > 1 ? static_cast<double>(z.rows() - 1) : 1.0;
    s.scale = ((z.rowwise() - s.mean).array().square().colwise().sum() / dof).sqrt().matrix();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
        if (!(s.scale[j] > 0.0)) s.scale[j] = 1.0;
    }
    return s;
}

LatentScaler fit_latent_scaler(const Eigen::MatrixXd& z, std::span<const int> groups, const std::set<int>& shared) {
    if (groups.size() != static_cast<std::size_t>(z.rows())) {
        throw Error(ErrorCode::DimensionMismatch, "one group per latent row");
    }
    std::map<int, int> count;
    for (int g : groups) {
        if (shared.count(g)) ++count[g];
    }
    if (count.empty()) throw Error(ErrorCode::EmptyInput, "no rows in the shared groups");
    Eigen::VectorXd w = Eigen::VectorXd::Zero(z.rows());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
        if (const auto it = count.find(groups[static_cast<std::size_t>(i)]); it != count.end()) w[i] = 1.0 / it->second;
    }
    w /= w.sum();
    LatentScaler s;
    s.mean = w.transpose() * z;
    s.scale = (w.transpose() * (z.rowwise() - s.mean).array().square().matrix()).array().sqrt().matrix();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j) {
        if (!(s.scale[j] > 0.0)) s.scale[j] = 1.0;
    }
    return s;
}

Eigen::MatrixXd LatentScaler::apply(const Eigen::MatrixXd& z) const {
    if (z.cols() != mean.size()) throw Error(ErrorCode::DimensionMismatch, "latent width");
    return ((z.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

void save_kema(const KemaModel& model, const std::filesystem::path& path) {
    nlohmann::json doc;
    doc["format"] = "xmorph-kema/1";
    doc["anchors1"] = io::to_json(model.anchors1);
    doc["anchors2"] = io::to_json(model.anchors2);
    doc["coef1"] = io::to_json(model.coef1);
    doc["coef2"] = io::to_json(model.coef2);
    doc["bandwidth1"] = model.bandwidth1;
    doc["bandwidth2"] = model.bandwidth2;
    doc["eigenvalues"] = io::to_json(model.eigenvalues);
    doc["insufficient_directions"] = model.insufficient_directions;
    io::write_json(path, doc);
}

KemaModel load_kema(const std::filesystem::path& path) {
    const auto doc = io::read_json(path);
    io::require_format(doc, "xmorph-kema/1");
    KemaModel m;
    try {
        m.anchors1 = io::matrix_from_json(doc.at("anchors1"));
        m.anchors2 = io::matrix_from_json(doc.at("anchors2"));
        m.coef1 = io::matrix_from_json(doc.at("coef1"));
        m.coef2 = io::matrix_from_json(doc.at("coef2"));
        m.bandwidth1 = doc.at("bandwidth1").get<double>();
        m.bandwidth2 = doc.at("bandwidth2").get<double>();
        m.eigenvalues = io::vector_from_json(doc.at("eigenvalues"));
        m.insufficient_directions = doc.value("insufficient_directions", false);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
    }
    return m;
}

}  // namespace xmorph
