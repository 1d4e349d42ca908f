#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace xmorph {

struct SvmConfig {
    double c = 1.0;
    std::optional<double> gamma;  // unset: "scale" = 1 / (D * var(X))
    double kkt_tolerance = 1e-3;
    int max_iterations = 1000000;  // SMO pair updates per binary problem
    std::uint64_t seed = 0;
};

// One-vs-one machine separating classes[positive] (+1) from classes[negative] (-1).
struct BinarySvm {
    int positive = 0;
    int negative = 1;
    Eigen::MatrixXd support_vectors;  // rows
    Eigen::VectorXd coef;             // alpha_i * y_i for each support vector
    std::vector<int> support_indices;  // rows of the training matrix
    Eigen::VectorXd alpha;             // full dual vector of the subproblem
    std::vector<int> members;          // training rows of the subproblem, in order
    double bias = 0.0;
    int iterations = 0;
    bool converged = true;
};

struct SvmModel {
    std::vector<int> classes;  // sorted label values
    double gamma = 1.0;
    int dim = 0;
    SvmConfig config;
    std::vector<BinarySvm> machines;  // pairs (a, b), a < b, lexicographic
};

double scale_gamma(const Eigen::MatrixXd& x);

// Rows of x are samples. Throws SingleClass, NonFiniteFeature, DimensionMismatch.
SvmModel train_svm(const Eigen::MatrixXd& x, std::span<const int> y, const SvmConfig& config);

// Signed decision value of each machine for each row: n x machines.
Eigen::MatrixXd decision_values(const SvmModel& model, const Eigen::MatrixXd& x);

// One-vs-one votes, n x classes; each row sums to the number of machines.
Eigen::MatrixXd vote_matrix(const SvmModel& model, const Eigen::MatrixXd& x);

// Votes plus a bounded margin tiebreaker in (-1, 1) that never reorders
// classes with different vote counts.
Eigen::MatrixXd decision_scores(const SvmModel& model, const Eigen::MatrixXd& x);

// Argmax of decision_scores; ties go to the earlier class.
std::vector<int> predict(const SvmModel& model, const Eigen::MatrixXd& x);

void save_svm(const SvmModel& model, const std::filesystem::path& path);
SvmModel load_svm(const std::filesystem::path& path);

}  // namespace xmorph
