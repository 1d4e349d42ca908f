#include "helpers.hpp"

#include "xmorph/edn.hpp"
#include "xmorph/error.hpp"

#include <doctest.h>

#include <cmath>

using namespace xmorph;

namespace {

EdnModel tiny_net(std::mt19937_64& rng, std::vector<int> widths) {
    std::vector<DenseLayer> layers;
    for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
        DenseLayer l;
        l.weight = testing::random_matrix(rng, widths[i + 1], widths[i]);
        l.bias = testing::random_matrix(rng, widths[i + 1], 1).col(0);
        layers.push_back(l);
    }
    return make_edn(std::move(layers));
}

// Affine pairs: target = M source + b + sigma * noise.
struct AffinePairs {
    Eigen::MatrixXd source, target, clean;
};

AffinePairs affine_pairs(std::uint64_t seed, int n, int din, int dout, double sigma) {
    std::mt19937_64 rng(seed);
    const Eigen::MatrixXd m = testing::random_matrix(rng, dout, din, 0.5);
    const Eigen::VectorXd b = testing::random_matrix(rng, dout, 1).col(0);
    AffinePairs p;
    p.source = testing::random_matrix(rng, n, din);
    p.clean = (p.source * m.transpose()).rowwise() + b.transpose();
    p.target = p.clean + testing::random_matrix(rng, n, dout, sigma);
    return p;
}

}  // namespace

TEST_CASE("gradient check on tiny random nets") {
    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const EdnModel net = tiny_net(rng, {2, 3, 2});
        CHECK(net.parameter_count() <= 50);
        const Eigen::MatrixXd x = testing::random_matrix(rng, 4, 2);
        const Eigen::MatrixXd y = testing::random_matrix(rng, 4, 2);
        CHECK(gradient_check(net, x, y) <= 1e-4);
    }
    SUBCASE("deeper net") {
        const EdnModel net = tiny_net(rng, {3, 4, 2, 4, 3});
        CHECK(gradient_check(net, testing::random_matrix(rng, 5, 3), testing::random_matrix(rng, 5, 3)) <= 1e-4);
    }
}

TEST_CASE("gradient check degenerate cases") {
    std::mt19937_64 rng(42);
    EdnModel zero = tiny_net(rng, {2, 3, 2});
    for (auto& l : zero.layers) {
        l.weight.setZero();
        l.bias.setZero();
    }
    CHECK(gradient_check(zero, Eigen::MatrixXd::Zero(4, 2), Eigen::MatrixXd::Zero(4, 2)) == 0.0);
    // pre-activations sit exactly on the ELU kink without jitter
    EdnModel kink = tiny_net(rng, {2, 3, 2});
    kink.layers[0].bias.setZero();
    const double err = gradient_check(kink, Eigen::MatrixXd::Zero(4, 2), testing::random_matrix(rng, 4, 2));
    CHECK(std::isfinite(err));
    CHECK(err <= 1e-4);
}

TEST_CASE("backprop gradient matches batch_mse") {
    std::mt19937_64 rng(43);
    const EdnModel net = tiny_net(rng, {3, 5, 2});
    const Eigen::MatrixXd x = testing::random_matrix(rng, 6, 3), y = testing::random_matrix(rng, 6, 2);
    EdnGradients g;
    const double loss = batch_mse_gradient(net, x, y, g);
    CHECK(loss == doctest::Approx(batch_mse(net, x, y)));
    const Eigen::MatrixXd out = edn_forward(net, x);
    CHECK(loss == doctest::Approx((out - y).squaredNorm() / static_cast<double>(out.size())));
    CHECK(g.weight.size() == 2);
}

TEST_CASE("forward pass is Lipschitz under the spectral-norm bound") {
    std::mt19937_64 rng(44);
    const EdnModel net = tiny_net(rng, {6, 8, 4, 8, 5});
    double bound = 1.0;
    for (const auto& l : net.layers) {
        bound *= Eigen::JacobiSVD<Eigen::MatrixXd>(l.weight).singularValues()[0];
    }
    for (int i = 0; i < 200; ++i) {
        const Eigen::VectorXd a = testing::random_matrix(rng, 6, 1).col(0);
        const Eigen::VectorXd b = a + testing::random_matrix(rng, 6, 1, 0.1).col(0);
        CHECK((edn_forward(net, a) - edn_forward(net, b)).norm() <= bound * (a - b).norm() * (1.0 + 1e-12));
    }
}

TEST_CASE("layer widths mirror the encoder") {
    const auto w = edn_layer_widths(100, 30, EdnConfig{});
    CHECK(w == std::vector<int>{100, 1000, 500, 250, 125, 250, 500, 1000, 30});
    const EdnModel m = init_edn(100, 30, EdnConfig{});
    CHECK(m.layers.size() == 8);
    CHECK_FALSE(m.layers.back().elu);
    const double limit = std::sqrt(6.0 / (100 + 1000));
    CHECK(m.layers.front().weight.cwiseAbs().maxCoeff() <= limit);
    CHECK(m.layers.front().bias.isZero());
}

TEST_CASE("training regresses an affine map and is deterministic") {
    const auto train = affine_pairs(7, 300, 5, 4, 0.01);
    const auto test = affine_pairs(7, 600, 5, 4, 0.01);  // same map, different samples
    EdnConfig cfg;
    cfg.encoder_units = {32};
    cfg.latent_dim = 16;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 300;
    cfg.seed = 3;
    const EdnModel a = train_edn(train.source, train.target, cfg);
    const EdnModel b = train_edn(train.source, train.target, cfg);
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        CHECK(a.layers[l].weight == b.layers[l].weight);
        CHECK(a.layers[l].bias == b.layers[l].bias);
    }
    CHECK(a.training_rmse == b.training_rmse);
    CHECK(a.training_rmse == doctest::Approx(edn_rmse(a, train.source, train.target)));
    const Eigen::MatrixXd hs = test.source.bottomRows(300), ht = test.target.bottomRows(300);
    const double spread = std::sqrt((ht.rowwise() - ht.colwise().mean()).squaredNorm() / static_cast<double>(ht.size()));
    CHECK(edn_rmse(a, hs, ht) < 0.1 * spread);

    cfg.seed = 4;
    const EdnModel c = train_edn(train.source, train.target, cfg);
    CHECK_FALSE(c.layers[0].weight == a.layers[0].weight);
}

TEST_CASE("edn errors and round trip") {
    EdnConfig cfg;
    cfg.encoder_units = {4};
    cfg.latent_dim = 2;
    cfg.epochs = 2;
    auto code = [](auto&& fn) {
        try {
            fn();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::IoError;
    };
    CHECK(code([&] { train_edn(Eigen::MatrixXd(0, 3), Eigen::MatrixXd(0, 2), cfg); }) == ErrorCode::EmptyCorrespondence);
    CHECK(code([&] { train_edn(Eigen::MatrixXd::Ones(3, 3), Eigen::MatrixXd::Ones(2, 2), cfg); }) ==
          ErrorCode::DimensionMismatch);
    CHECK(code([&] { train_edn(CorrespondenceSet{}, cfg); }) == ErrorCode::EmptyCorrespondence);

    const auto p = affine_pairs(1, 20, 3, 2, 0.1);
    const EdnModel m = train_edn(p.source, p.target, cfg);
    const auto path = testing::scratch_dir("edn") / "edn.json";
    save_edn(m, path);
    const EdnModel back = load_edn(path);
    CHECK((edn_forward(back, p.source) - edn_forward(m, p.source)).cwiseAbs().maxCoeff() == 0.0);
    CHECK(back.config.encoder_units == cfg.encoder_units);
    CHECK(code([&] { edn_forward(m, Eigen::VectorXd(Eigen::VectorXd::Ones(5))); }) == ErrorCode::DimensionMismatch);
}
