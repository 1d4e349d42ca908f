#pragma once

#include "xmorph/correspond.hpp"
#include "xmorph/linalg.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>

namespace xmorph {

struct KemaConfig {
    double mu = 0.5;  // geometry vs. class-similarity balance
    int knn = 5;
    int latent_dim = 0;  // 0: min(20, samples - classes)
    double eig_regularization = 1e-6;  // relative to the mean diagonal of each side
    std::optional<double> bandwidth1;  // RBF sigma; median heuristic when unset
    std::optional<double> bandwidth2;
    double bandwidth_scale = 1.0;  // multiplies the median heuristic (unset bandwidths only)
    EigenMethod eigen_method = EigenMethod::Auto;
    // Downstream classifiers see each domain's latent features z-scored with
    // class-balanced statistics over the alignment groups both domains share.
    bool standardize = true;
    std::uint64_t seed = 0;
};

struct AlignmentLaplacians {
    Eigen::MatrixXd geo;
    Eigen::MatrixXd sim;
    Eigen::MatrixXd dis;
};

struct KemaModel {
    Eigen::MatrixXd anchors1;  // domain 1 training samples, n1 x D1
    Eigen::MatrixXd anchors2;
    Eigen::MatrixXd coef1;  // n1 x latent
    Eigen::MatrixXd coef2;
    double bandwidth1 = 1.0;
    double bandwidth2 = 1.0;
    Eigen::VectorXd eigenvalues;  // retained, ascending
    bool insufficient_directions = false;

    int latent_dim() const { return static_cast<int>(coef1.cols()); }
};

// K_ij = exp(-||x_i - y_j||^2 / (2 sigma^2)); rows are samples.
Eigen::MatrixXd rbf_kernel_matrix(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double sigma);

// Median of pairwise Euclidean distances (1.0 if all points coincide).
double median_bandwidth(const Eigen::MatrixXd& x);

// Unnormalized Laplacian D - W.
Eigen::MatrixXd graph_laplacian(const Eigen::MatrixXd& w);

// Binary symmetric k-NN adjacency (union of directed neighbor sets).
Eigen::MatrixXd knn_adjacency(const Eigen::MatrixXd& x, int k);

// GEO (block-diagonal k-NN graph), SIM (same label), DIS (different label)
// over the n1 + n2 stacked samples. Throws EmptyDomain, DegenerateLabels.
AlignmentLaplacians build_alignment_laplacians(const KemaInputs& inputs, const KemaConfig& config);

KemaModel fit_kema(const KemaInputs& inputs, const KemaConfig& config);

// domain is 1 (source) or 2 (target). Rows of `x` are samples.
Eigen::MatrixXd project_to_latent(const KemaModel& model, const Eigen::MatrixXd& x, int domain);
Eigen::VectorXd project_to_latent(const KemaModel& model, const Eigen::VectorXd& x, int domain);

// Per-column affine rescaling fitted on one domain's projected training rows;
// constant columns keep unit scale.
struct LatentScaler {
    Eigen::RowVectorXd mean;
    Eigen::RowVectorXd scale;

    Eigen::MatrixXd apply(const Eigen::MatrixXd& z) const;
};

LatentScaler fit_latent_scaler(const Eigen::MatrixXd& z);
// Moments with every group in `shared` weighted equally; rows of other
// groups are ignored.
LatentScaler fit_latent_scaler(const Eigen::MatrixXd& z, std::span<const int> groups, const std::set<int>& shared);

void save_kema(const KemaModel& model, const std::filesystem::path& path);
KemaModel load_kema(const std::filesystem::path& path);

}  // namespace xmorph
