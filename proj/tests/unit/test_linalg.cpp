#include "../oracles/oracles.hpp"
#include "helpers.hpp"

#include "xmorph/error.hpp"
#include "xmorph/linalg.hpp"

#include <doctest.h>

using namespace xmorph;

TEST_CASE("generalized eigenvalues match determinant bisection") {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::MatrixXd a = testing::random_symmetric(rng, 5);
        const Eigen::MatrixXd b = testing::random_spd(rng, 5);
        const auto want = oracle::generalized_eigenvalues(a, b);
        for (EigenMethod method : {EigenMethod::Jacobi, EigenMethod::Tridiagonal}) {
            const EigenPairs got = solve_generalized_eig(a, b, 0.0, method);
            for (int i = 0; i < 5; ++i) CHECK(std::abs(got.values[i] - want[static_cast<std::size_t>(i)]) < 1e-8);
            for (int i = 0; i < 5; ++i) {
                const Eigen::VectorXd v = got.vectors.col(i);
                CHECK((a * v - got.values[i] * b * v).norm() <= 1e-8 * a.norm());
                CHECK(v.dot(b * v) == doctest::Approx(1.0).epsilon(1e-10));
                Eigen::Index arg = 0;
                v.cwiseAbs().maxCoeff(&arg);
                CHECK(v[arg] > 0.0);
            }
        }
    }
}

TEST_CASE("closed-form generalized eigenproblems") {
    const Eigen::Matrix2d a = Eigen::Vector2d(2.0, 5.0).asDiagonal();
    const EigenPairs d = solve_generalized_eig(a, Eigen::Matrix2d::Identity(), 0.0);
    CHECK(d.values[0] == doctest::Approx(2.0));
    CHECK(d.values[1] == doctest::Approx(5.0));
    CHECK(std::abs(d.vectors(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(d.vectors(1, 0)) < 1e-12);

    std::mt19937_64 rng(22);
    const Eigen::MatrixXd b = testing::random_spd(rng, 6);
    const EigenPairs same = solve_generalized_eig(b, b, 0.0);
    for (int i = 0; i < 6; ++i) CHECK(same.values[i] == doctest::Approx(1.0));
}

TEST_CASE("regularization shifts B") {
    const Eigen::Matrix2d a = Eigen::Vector2d(1.0, 3.0).asDiagonal();
    const Eigen::Matrix2d b = Eigen::Vector2d(0.0, 1.0).asDiagonal();
    const EigenPairs r = solve_generalized_eig(a, b, 0.5);
    CHECK(r.values[0] == doctest::Approx(2.0));
    CHECK(r.values[1] == doctest::Approx(2.0));
}

TEST_CASE("solver paths agree above the Jacobi cutoff") {
    std::mt19937_64 rng(23);
    const Eigen::MatrixXd a = testing::random_symmetric(rng, 40);
    const Eigen::MatrixXd b = testing::random_spd(rng, 40);
    const EigenPairs j = solve_generalized_eig(a, b, 0.0, EigenMethod::Jacobi);
    const EigenPairs t = solve_generalized_eig(a, b, 0.0, EigenMethod::Tridiagonal);
    CHECK((j.values - t.values).cwiseAbs().maxCoeff() < 1e-8 * a.norm());
    CHECK(j.sweeps > 0);
}

TEST_CASE("jacobi eigen of a symmetric matrix") {
    std::mt19937_64 rng(24);
    const Eigen::MatrixXd s = testing::random_symmetric(rng, 12);
    const EigenPairs e = jacobi_eigen(s);
    CHECK((s * e.vectors - e.vectors * e.values.asDiagonal()).norm() < 1e-10);
    CHECK((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(12, 12)).norm() < 1e-10);
    for (int i = 1; i < 12; ++i) CHECK(e.values[i - 1] <= e.values[i]);
}

TEST_CASE("solver errors") {
    Eigen::Matrix2d a;
    a << 1, 2, 0, 1;
    auto code = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    CHECK(code([&] { solve_generalized_eig(a, Eigen::Matrix2d::Identity(), 0.0); }) == ErrorCode::NotSymmetric);
    CHECK(code([&] { solve_generalized_eig(Eigen::Matrix2d::Identity(), -Eigen::Matrix2d::Identity(), 0.0); }) ==
          ErrorCode::CholeskyFailure);
    CHECK(code([&] { solve_generalized_eig(Eigen::Matrix2d::Identity(), Eigen::Matrix3d::Identity(), 0.0); }) ==
          ErrorCode::DimensionMismatch);
}
