#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <random>
#include <string>

namespace testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("xmorph-test-" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
    return m;
}

inline Eigen::MatrixXd random_spd(std::mt19937_64& rng, Eigen::Index n) {
    const Eigen::MatrixXd g = random_matrix(rng, n, n);
    return g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
    const Eigen::MatrixXd g = random_matrix(rng, n, n);
    return 0.5 * (g + g.transpose());
}

}  // namespace testing
