// Reference implementations written independently of the library, used as
// ground truth by the unit and acceptance tests.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

namespace oracle {

// Bin index of sample i when n samples are split into `bins` runs whose
// lengths differ by at most one, longer runs first.
inline std::vector<int> enumerate_bins(int n, int bins) {
    std::vector<int> owner(static_cast<std::size_t>(n));
    int i = 0;
    for (int b = 0; b < bins; ++b) {
        const int len = n / bins + (b < n % bins ? 1 : 0);
        for (int j = 0; j < len; ++j) owner[static_cast<std::size_t>(i++)] = b;
    }
    return owner;
}

inline Eigen::VectorXd temporal_bin(const Eigen::MatrixXd& x, int bins) {
    const auto owner = enumerate_bins(static_cast<int>(x.cols()), bins);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(x.rows() * bins), count = Eigen::VectorXd::Zero(x.rows() * bins);
    for (Eigen::Index c = 0; c < x.rows(); ++c) {
        for (Eigen::Index t = 0; t < x.cols(); ++t) {
            sum[c * bins + owner[static_cast<std::size_t>(t)]] += x(c, t);
            count[c * bins + owner[static_cast<std::size_t>(t)]] += 1.0;
        }
    }
    return sum.cwiseQuotient(count);
}

inline Eigen::VectorXd histogram(const Eigen::MatrixXd& s, int rows, int cols) {
    const auto rown = enumerate_bins(static_cast<int>(s.rows()), rows);
    const auto coln = enumerate_bins(static_cast<int>(s.cols()), cols);
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(rows * cols), count = Eigen::VectorXd::Zero(rows * cols);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
            const int cell = rown[static_cast<std::size_t>(i)] * cols + coln[static_cast<std::size_t>(j)];
            sum[cell] += s(i, j);
            count[cell] += 1.0;
        }
    }
    return sum.cwiseQuotient(count);
}

// Direct DFT of each Hann-windowed frame, then triangular HTK-mel weights
// evaluated at each bin's center frequency.
inline Eigen::MatrixXd mel_spectrogram(const Eigen::VectorXd& wave, double sr, int n_fft, int hop, int bands) {
    const int frames = 1 + static_cast<int>((wave.size() - n_fft) / hop);
    const int bins = n_fft / 2 + 1;
    Eigen::MatrixXd power(bins, frames);
    for (int t = 0; t < frames; ++t) {
        for (int k = 0; k < bins; ++k) {
            std::complex<double> acc = 0.0;
            for (int n = 0; n < n_fft; ++n) {
                const double w = std::pow(std::sin(std::numbers::pi * n / n_fft), 2);
                acc += wave[t * hop + n] * w * std::polar(1.0, -2.0 * std::numbers::pi * k * n / n_fft);
            }
            power(k, t) = std::norm(acc);
        }
    }
    auto mel = [](double f) { return 1127.0 * std::log1p(f / 700.0); };
    auto inv = [](double m) { return 700.0 * std::expm1(m / 1127.0); };
    Eigen::MatrixXd bank = Eigen::MatrixXd::Zero(bands, bins);
    const double top = mel(sr / 2.0);
    for (int b = 0; b < bands; ++b) {
        const double lo = inv(top * b / (bands + 1)), mid = inv(top * (b + 1) / (bands + 1)),
                     hi = inv(top * (b + 2) / (bands + 1));
        for (int k = 0; k < bins; ++k) {
            const double f = sr * k / n_fft;
            if (f > lo && f <= mid) bank(b, k) = (f - lo) / (mid - lo);
            else if (f > mid && f < hi) bank(b, k) = (hi - f) / (hi - mid);
        }
    }
    return bank * power;
}

// Number of negative pivots in plain symmetric Gaussian elimination of m.
// For symmetric m this is its count of negative eigenvalues (Sylvester).
inline int negative_pivots(std::vector<std::vector<double>> m) {
    const std::size_t n = m.size();
    int neg = 0;
    for (std::size_t k = 0; k < n; ++k) {
        double p = m[k][k];
        if (p == 0.0) p = 1e-300;
        if (p < 0.0) ++neg;
        for (std::size_t i = k + 1; i < n; ++i) {
            const double f = m[i][k] / p;
            for (std::size_t j = k + 1; j < n; ++j) m[i][j] -= f * m[k][j];
        }
    }
    return neg;
}

// Eigenvalues of A v = lambda B v (B SPD) found by bisection on the inertia
// of A - lambda B, ascending.
inline std::vector<double> generalized_eigenvalues(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const std::size_t n = static_cast<std::size_t>(a.rows());
    auto count_below = [&](double lambda) {
        std::vector<std::vector<double>> m(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                m[i][j] = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) -
                          lambda * b(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        return negative_pivots(std::move(m));
    };
    double hi = 1.0;
    while (count_below(hi) < static_cast<int>(n)) hi *= 2.0;
    double lo = -1.0;
    while (count_below(lo) > 0) lo *= 2.0;
    std::vector<double> out;
    for (std::size_t k = 0; k < n; ++k) {
        double l = lo, h = hi;
        for (int it = 0; it < 200 && h - l > 1e-14 * std::max(1.0, std::abs(h)); ++it) {
            const double mid = 0.5 * (l + h);
            if (count_below(mid) > static_cast<int>(k)) h = mid;
            else l = mid;
        }
        out.push_back(0.5 * (l + h));
    }
    return out;
}

// Brute-force quadratic form sum_{i<j} w_ij (x_i - x_j)^2.
inline double pairwise_form(const Eigen::MatrixXd& w, const Eigen::VectorXd& x) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
        for (Eigen::Index j = i + 1; j < x.size(); ++j) s += w(i, j) * (x[i] - x[j]) * (x[i] - x[j]);
    return s;
}

// Union-symmetrized binary k-NN graph by sorting all distances.
inline Eigen::MatrixXd knn_graph(const Eigen::MatrixXd& x, int k) {
    const Eigen::Index n = x.rows();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::vector<std::pair<double, Eigen::Index>> d;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) d.push_back({(x.row(i) - x.row(j)).squaredNorm(), j});
        std::sort(d.begin(), d.end());
        for (int t = 0; t < k && t < static_cast<int>(d.size()); ++t) {
            w(i, d[static_cast<std::size_t>(t)].second) = 1.0;
            w(d[static_cast<std::size_t>(t)].second, i) = 1.0;
        }
    }
    return w;
}

// Euclidean projection onto {0 <= a <= c, y.a = 0} by bisection on the
// multiplier of the equality constraint.
inline Eigen::VectorXd project_dual(const Eigen::VectorXd& v, const Eigen::VectorXd& y, double c) {
    auto at = [&](double t) { return (v - t * y).cwiseMax(0.0).cwiseMin(c); };
    double lo = -1.0, hi = 1.0;
    while (y.dot(at(lo)) < 0.0) lo *= 2.0;
    while (y.dot(at(hi)) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (y.dot(at(mid)) > 0.0) lo = mid;
        else hi = mid;
    }
    return at(0.5 * (lo + hi));
}

struct BinaryDual {
    Eigen::VectorXd alpha;
    double bias = 0.0;
};

// min 1/2 a'Qa - 1'a, Q_ij = y_i y_j K_ij, by accelerated projected gradient.
inline BinaryDual solve_dual(const Eigen::MatrixXd& k, const Eigen::VectorXd& y, double c, int iterations = 200000) {
    const Eigen::MatrixXd q = (y * y.transpose()).cwiseProduct(k);
    const double step = 1.0 / Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().maxCoeff();
    Eigen::VectorXd a = Eigen::VectorXd::Zero(y.size()), z = a;
    double t = 1.0;
    for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXd next = project_dual(z - step * (q * z - Eigen::VectorXd::Ones(y.size())), y, c);
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = next + ((t - 1.0) / tn) * (next - a);
        if ((next - a).lpNorm<Eigen::Infinity>() < 1e-14 && it > 100) {
            a = next;
            break;
        }
        a = next;
        t = tn;
    }
    BinaryDual out{a, 0.0};
    const Eigen::VectorXd f = k * a.cwiseProduct(y);
    double sum = 0.0;
    int free = 0;
    const double eps = 1e-6 * c;
    double lo = -1e300, hi = 1e300;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double r = y[i] - f[i];
        if (a[i] > eps && a[i] < c - eps) {
            sum += r;
            ++free;
        } else if ((a[i] <= eps) == (y[i] > 0)) {
            lo = std::max(lo, r);
        } else {
            hi = std::min(hi, r);
        }
    }
    out.bias = free > 0 ? sum / free : 0.5 * (lo + hi);
    return out;
}

inline Eigen::MatrixXd rbf(const Eigen::MatrixXd& x, const Eigen::MatrixXd& z, double gamma) {
    Eigen::MatrixXd k(x.rows(), z.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < z.rows(); ++j) k(i, j) = std::exp(-gamma * (x.row(i) - z.row(j)).squaredNorm());
    return k;
}

struct OvoOracle {
    std::vector<int> classes;
    std::vector<std::pair<int, int>> pairs;  // class indices
    std::vector<Eigen::MatrixXd> rows;       // training rows of each pair
    std::vector<Eigen::VectorXd> signs;      // +1 for the lower class
    std::vector<BinaryDual> duals;
    double gamma = 1.0;

    double decision(std::size_t p, const Eigen::RowVectorXd& q) const {
        return duals[p].bias + (rbf(q, rows[p], gamma) * duals[p].alpha.cwiseProduct(signs[p]))(0, 0);
    }

    // Most votes wins; vote ties go to the larger summed squashed margin
    // f / (1 + |f|), then to the lower class index.
    std::vector<int> predict(const Eigen::MatrixXd& q) const {
        std::vector<int> out;
        for (Eigen::Index r = 0; r < q.rows(); ++r) {
            std::vector<int> votes(classes.size(), 0);
            std::vector<double> margin(classes.size(), 0.0);
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const double f = decision(p, q.row(r));
                ++votes[static_cast<std::size_t>(f >= 0 ? pairs[p].first : pairs[p].second)];
                margin[static_cast<std::size_t>(pairs[p].first)] += f / (1.0 + std::abs(f));
                margin[static_cast<std::size_t>(pairs[p].second)] -= f / (1.0 + std::abs(f));
            }
            std::size_t best = 0;
            for (std::size_t c = 1; c < classes.size(); ++c) {
                if (votes[c] > votes[best] || (votes[c] == votes[best] && margin[c] > margin[best])) best = c;
            }
            out.push_back(classes[best]);
        }
        return out;
    }
};

// One-vs-one oracle; the lower class index is the positive side.
inline OvoOracle train_ovo(const Eigen::MatrixXd& x, const std::vector<int>& y, double c, double gamma) {
    OvoOracle o;
    o.gamma = gamma;
    o.classes = y;
    std::sort(o.classes.begin(), o.classes.end());
    o.classes.erase(std::unique(o.classes.begin(), o.classes.end()), o.classes.end());
    for (int a = 0; a < static_cast<int>(o.classes.size()); ++a) {
        for (int b = a + 1; b < static_cast<int>(o.classes.size()); ++b) {
            std::vector<Eigen::Index> idx;
            for (Eigen::Index i = 0; i < x.rows(); ++i)
                if (y[static_cast<std::size_t>(i)] == o.classes[static_cast<std::size_t>(a)] ||
                    y[static_cast<std::size_t>(i)] == o.classes[static_cast<std::size_t>(b)])
                    idx.push_back(i);
            Eigen::MatrixXd sub(static_cast<Eigen::Index>(idx.size()), x.cols());
            Eigen::VectorXd s(static_cast<Eigen::Index>(idx.size()));
            for (std::size_t i = 0; i < idx.size(); ++i) {
                sub.row(static_cast<Eigen::Index>(i)) = x.row(idx[i]);
                s[static_cast<Eigen::Index>(i)] = y[static_cast<std::size_t>(idx[i])] == o.classes[static_cast<std::size_t>(a)] ? 1.0 : -1.0;
            }
            o.pairs.push_back({a, b});
            o.rows.push_back(sub);
            o.signs.push_back(s);
            o.duals.push_back(solve_dual(rbf(sub, sub, gamma), s, c));
        }
    }
    return o;
}

// Two Gaussian classes in a shared 2-D latent space, observed in two
// domains through random affine maps of different widths.
struct BlobDomains {
    Eigen::MatrixXd x1, x2;
    std::vector<int> y1, y2;
};

inline BlobDomains blob_domains(std::uint64_t seed, int per_domain, int dim1, int dim2, double separation = 6.0,
                                double offset = 50.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    auto gauss = [&](Eigen::Index r, Eigen::Index c) {
        Eigen::MatrixXd m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
        return m;
    };
    auto embed = [&](int dim) {
        Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss(dim, 2));
        Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, 2);
        std::uniform_real_distribution<double> s(1.0, 3.0);
        return Eigen::MatrixXd(q * Eigen::Vector2d(s(rng), s(rng)).asDiagonal());
    };
    const Eigen::MatrixXd m1 = embed(dim1), m2 = embed(dim2);
    const Eigen::VectorXd b1 = Eigen::VectorXd::Zero(dim1);
    Eigen::VectorXd b2 = gauss(dim2, 1).col(0);
    b2 *= offset / b2.norm();
    BlobDomains out;
    auto draw = [&](const Eigen::MatrixXd& map, const Eigen::VectorXd& bias, Eigen::MatrixXd& xs, std::vector<int>& ys) {
        xs.resize(per_domain, map.rows());
        for (int i = 0; i < per_domain; ++i) {
            const int label = i % 2;
            Eigen::Vector2d z(label == 0 ? -separation / 2 : separation / 2, 0.0);
            z += gauss(2, 1).col(0);
            xs.row(i) = (map * z + bias + 0.05 * gauss(map.rows(), 1).col(0)).transpose();
            ys.push_back(label);
        }
    };
    draw(m1, b1, out.x1, out.y1);
    draw(m2, b2, out.x2, out.y2);
    return out;
}

// 1-NN accuracy in [0, 1] of test rows against labeled train rows.
inline double nn_accuracy(const Eigen::MatrixXd& train, const std::vector<int>& ytrain, const Eigen::MatrixXd& test,
                          const std::vector<int>& ytest) {
    int hits = 0;
    for (Eigen::Index i = 0; i < test.rows(); ++i) {
        Eigen::Index best = 0;
        (train.rowwise() - test.row(i)).rowwise().squaredNorm().minCoeff(&best);
        hits += ytrain[static_cast<std::size_t>(best)] == ytest[static_cast<std::size_t>(i)];
    }
    return static_cast<double>(hits) / static_cast<double>(test.rows());
}

// Zero-pads the narrower matrix so both have the same width.
inline Eigen::MatrixXd pad_to(const Eigen::MatrixXd& x, Eigen::Index cols) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), cols);
    out.leftCols(x.cols()) = x;
    return out;
}

}  // namespace oracle
