#include "../oracles/oracles.hpp"
#include "helpers.hpp"

#include "xmorph/error.hpp"
#include "xmorph/svm.hpp"

#include <doctest.h>

#include <set>

using namespace xmorph;

namespace {

struct Problem {
    Eigen::MatrixXd x;
    std::vector<int> y;
};

Problem three_class(std::mt19937_64& rng, int n) {
    Problem p;
    p.x = testing::random_matrix(rng, n, 2, 0.8);
    for (int i = 0; i < n; ++i) {
        const int c = i % 3;
        p.y.push_back(c);
        p.x(i, 0) += 2.0 * std::cos(2.1 * c);
        p.x(i, 1) += 2.0 * std::sin(2.1 * c);
    }
    return p;
}

}  // namespace

TEST_CASE("xor is separable") {
    Eigen::MatrixXd x(4, 2);
    x << 0, 0, 1, 1, 0, 1, 1, 0;
    const std::vector<int> y{0, 0, 1, 1};
    SvmConfig cfg;
    cfg.c = 10.0;
    cfg.gamma = 1.0;
    const SvmModel m = train_svm(x, y, cfg);
    CHECK(predict(m, x) == y);
}

TEST_CASE("two points give a symmetric boundary") {
    Eigen::MatrixXd x(2, 3);
    x << 1, 2, 3, -1, 0, 5;
    const std::vector<int> y{4, 9};
    for (double c : {0.1, 1.0, 100.0}) {
        SvmConfig cfg;
        cfg.c = c;
        cfg.gamma = 0.3;
        const SvmModel m = train_svm(x, y, cfg);
        CHECK(predict(m, x) == y);
        const Eigen::MatrixXd mid = 0.5 * (x.row(0) + x.row(1));
        CHECK(std::abs(decision_values(m, mid)(0, 0)) < 1e-6);
        CHECK(predict(m, mid)[0] == 4);  // tie goes to the earlier class
    }
}

TEST_CASE("agreement with the projected-gradient dual oracle") {
    std::mt19937_64 rng(51);
    for (int trial = 0; trial < 10; ++trial) {
        const Problem p = three_class(rng, 12 + trial % 9);
        SvmConfig cfg;
        cfg.c = 1.0 + trial;
        cfg.gamma = 0.5;
        cfg.kkt_tolerance = 1e-8;
        const SvmModel m = train_svm(p.x, p.y, cfg);
        const auto o = oracle::train_ovo(p.x, p.y, cfg.c, *cfg.gamma);
        REQUIRE(m.machines.size() == o.duals.size());
        for (std::size_t k = 0; k < m.machines.size(); ++k) {
            CHECK((m.machines[k].alpha - o.duals[k].alpha).cwiseAbs().maxCoeff() < 1e-3);
            CHECK(m.machines[k].alpha.minCoeff() >= 0.0);
            CHECK(m.machines[k].alpha.maxCoeff() <= cfg.c);
        }
        const Eigen::MatrixXd probe = testing::random_matrix(rng, 50, 2, 2.0);
        CHECK(predict(m, probe) == o.predict(probe));
        CHECK(predict(m, p.x) == o.predict(p.x));
    }
}

TEST_CASE("vote and score structure") {
    std::mt19937_64 rng(52);
    const Problem p = three_class(rng, 30);
    const SvmModel m = train_svm(p.x, p.y, {});
    const Eigen::MatrixXd probe = testing::random_matrix(rng, 40, 2, 2.0);
    const Eigen::MatrixXd votes = vote_matrix(m, probe);
    const Eigen::MatrixXd scores = decision_scores(m, probe);
    for (Eigen::Index i = 0; i < probe.rows(); ++i) {
        CHECK(votes.row(i).sum() == 3.0);
        for (Eigen::Index a = 0; a < 3; ++a)
            for (Eigen::Index b = 0; b < 3; ++b)
                if (votes(i, a) > votes(i, b)) CHECK(scores(i, a) > scores(i, b));
        CHECK((scores.row(i) - votes.row(i)).cwiseAbs().maxCoeff() < 1.0);
    }
    for (const auto& bm : m.machines) {
        std::set<int> rows(bm.members.begin(), bm.members.end());
        for (int s : bm.support_indices) CHECK(rows.count(s) == 1);
        for (Eigen::Index s = 0; s < bm.support_vectors.rows(); ++s) {
            CHECK(bm.support_vectors.row(s) == p.x.row(bm.support_indices[static_cast<std::size_t>(s)]));
        }
    }
    // support vectors of a separable problem get their own label back
    const auto pred = predict(m, p.x);
    int agree = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) agree += pred[i] == p.y[i];
    CHECK(agree >= 27);
}

TEST_CASE("kernel scaling and duplication invariance") {
    std::mt19937_64 rng(53);
    const Problem p = three_class(rng, 24);
    const Eigen::MatrixXd probe = testing::random_matrix(rng, 60, 2, 2.0);
    SvmConfig cfg;
    cfg.gamma = 0.4;
    cfg.kkt_tolerance = 1e-6;
    const auto base = predict(train_svm(p.x, p.y, cfg), probe);

    SvmConfig scaled = cfg;
    scaled.gamma = 0.4 / 9.0;
    CHECK(predict(train_svm(3.0 * p.x, p.y, scaled), 3.0 * probe) == base);

    Problem twice;
    twice.x.resize(48, 2);
    twice.x << p.x, p.x;
    twice.y = p.y;
    twice.y.insert(twice.y.end(), p.y.begin(), p.y.end());
    SvmConfig half = cfg;
    half.c = cfg.c / 2.0;  // the duplicated dual has the same solution with halved box
    CHECK(predict(train_svm(twice.x, twice.y, half), probe) == base);

    const SvmModel a = train_svm(p.x, p.y, cfg), b = train_svm(p.x, p.y, cfg);
    for (std::size_t k = 0; k < a.machines.size(); ++k) CHECK(a.machines[k].support_indices == b.machines[k].support_indices);
}

TEST_CASE("svm errors, gamma scale and round trip") {
    auto code = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    const Eigen::MatrixXd x = Eigen::MatrixXd::Identity(3, 3);
    CHECK(code([&] { train_svm(x, std::vector<int>{1, 1, 1}, {}); }) == ErrorCode::SingleClass);
    Eigen::MatrixXd bad = x;
    bad(0, 0) = std::nan("");
    CHECK(code([&] { train_svm(bad, std::vector<int>{0, 1, 1}, {}); }) == ErrorCode::NonFiniteFeature);
    CHECK(code([&] { train_svm(x, std::vector<int>{0, 1}, {}); }) == ErrorCode::DimensionMismatch);
    SvmConfig zero;
    zero.c = 0.0;
    CHECK(code([&] { train_svm(x, std::vector<int>{0, 1, 1}, zero); }) == ErrorCode::InvalidConfig);

    // var of all entries of the identity 3x3 is 2/9
    CHECK(scale_gamma(x) == doctest::Approx(1.0 / (3.0 * 2.0 / 9.0)));

    std::mt19937_64 rng(54);
    const Problem p = three_class(rng, 15);
    const SvmModel m = train_svm(p.x, p.y, {});
    CHECK(code([&] { predict(m, Eigen::MatrixXd::Ones(2, 5)); }) == ErrorCode::DimensionMismatch);
    const auto path = testing::scratch_dir("svm") / "svm.json";
    save_svm(m, path);
    const SvmModel back = load_svm(path);
    CHECK(decision_scores(back, p.x) == decision_scores(m, p.x));
}
