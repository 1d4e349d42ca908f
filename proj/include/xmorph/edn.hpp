#pragma once

#include "xmorph/correspond.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <vector>

namespace xmorph {

struct EdnConfig {
    std::vector<int> encoder_units{1000, 500, 250};  // decoder mirrors these
    int latent_dim = 125;
    double elu_alpha = 1.0;
    double learning_rate = 1e-4;
    int epochs = 1000;
    int batch_size = 32;
    // Per-feature z-scoring of inputs and outputs, fitted on the training pairs.
    bool standardize = true;
    std::uint64_t seed = 0;
};

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;
    bool elu = true;  // false for the linear output layer
};

// Source-to-target feature projection: encoder, latent code, mirrored
// decoder, linear output.
struct EdnModel {
    std::vector<DenseLayer> layers;
    EdnConfig config;
    double training_rmse = 0.0;
    // Empty vectors mean identity scaling.
    Eigen::VectorXd input_mean, input_scale;
    Eigen::VectorXd output_mean, output_scale;

    int input_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().weight.cols()); }
    int output_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }
    std::size_t parameter_count() const;
};

// Widths input -> encoder... -> latent -> ...decoder -> output.
std::vector<int> edn_layer_widths(int input_dim, int output_dim, const EdnConfig& config);

// Glorot-uniform weights, zero biases, seeded.
EdnModel init_edn(int input_dim, int output_dim, const EdnConfig& config);

// Explicit stack of layers (ELU on all but the last); used for tiny probes.
EdnModel make_edn(std::vector<DenseLayer> layers, double elu_alpha = 1.0);

Eigen::VectorXd edn_forward(const EdnModel& model, const Eigen::VectorXd& x);
// Rows are samples.
Eigen::MatrixXd edn_forward(const EdnModel& model, const Eigen::MatrixXd& x);

struct EdnGradients {
    std::vector<Eigen::MatrixXd> weight;
    std::vector<Eigen::VectorXd> bias;
};

// Mean squared error over all batch elements in network space (scaling is
// not applied). Rows of x, y are samples.
double batch_mse(const EdnModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);
double batch_mse_gradient(const EdnModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                          EdnGradients& grads);

// Max relative error between backprop and central differences (step h) over
// every parameter; inputs are jittered by ~1e-6 so no pre-activation sits
// exactly on the ELU kink. Relative error uses max(|a|, |n|, 1e-6).
double gradient_check(const EdnModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double h = 1e-5);

// Throws EmptyCorrespondence, DimensionMismatch, NonFiniteLoss.
EdnModel train_edn(const CorrespondenceSet& pairs, const EdnConfig& config);
EdnModel train_edn(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target, const EdnConfig& config);

// sqrt of the mean squared error over all elements, in feature units.
double edn_rmse(const EdnModel& model, const Eigen::MatrixXd& source, const Eigen::MatrixXd& target);

void save_edn(const EdnModel& model, const std::filesystem::path& path);
EdnModel load_edn(const std::filesystem::path& path);

}  // namespace xmorph
