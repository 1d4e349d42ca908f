#include "xmorph/linalg.hpp"

#include "xmorph/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace xmorph {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            if (i != j) sum += a(i, j) * a(i, j);
        }
    }
    return std::sqrt(sum);
}

void require_symmetric(const Eigen::MatrixXd& m, const char* name) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * scale) {
        throw Error(ErrorCode::NotSymmetric, std::string(name) + " deviates from symmetry by " + std::to_string(asym));
    }
}

EigenPairs sorted(Eigen::VectorXd values, const Eigen::MatrixXd& vectors, int sweeps) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return values[a] < values[b]; });
    EigenPairs out;
    out.values.resize(values.size());
    out.vectors.resize(vectors.rows(), vectors.cols());
    for (std::size_t k = 0; k < order.size(); ++k) {
        out.values[static_cast<Eigen::Index>(k)] = values[order[k]];
        out.vectors.col(static_cast<Eigen::Index>(k)) = vectors.col(order[k]);
    }
    out.sweeps = sweeps;
    return out;
}

}  // namespace

void fix_eigenvector_signs(Eigen::MatrixXd& vectors) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        Eigen::Index arg = 0;
        vectors.col(j).cwiseAbs().maxCoeff(&arg);
        if (vectors(arg, j) < 0.0) vectors.col(j) = -vectors.col(j);
    }
}

EigenPairs jacobi_eigen(const Eigen::MatrixXd& s, double tol, int max_sweeps) {
    if (s.rows() != s.cols()) throw Error(ErrorCode::DimensionMismatch, "jacobi_eigen needs a square matrix");
    const Eigen::Index n = s.rows();
    Eigen::MatrixXd a = s;
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
    const double threshold = tol * std::max(a.norm(), std::numeric_limits<double>::min());

    int sweep = 0;
    while (sweep < max_sweeps && off_diagonal_norm(a) >= threshold) {
        ++sweep;
        for (Eigen::Index p = 0; p < n - 1; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double sn = t * c;
                // A <- J^T A J with J the (p, q) plane rotation.
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    return sorted(a.diagonal(), v, sweep);
}

EigenPairs solve_generalized_eig(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps,
                                 EigenMethod method) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "generalized eigenproblem needs square matrices of equal size");
    }
    require_symmetric(a, "A");
    require_symmetric(b, "B");
    const Eigen::Index n = a.rows();

    Eigen::MatrixXd m = b;
    m.diagonal().array() += eps;
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::CholeskyFailure, "B + eps*I is not positive definite (eps=" + std::to_string(eps) + ")");
    }
    const auto lower = llt.matrixL();
    // C = L^-1 A L^-T
    Eigen::MatrixXd c = lower.solve(a);
    c = lower.solve(c.transpose().eval()).transpose().eval();
    c = 0.5 * (c + c.transpose()).eval();

    if (method == EigenMethod::Auto) method = n <= kJacobiMaxDim ? EigenMethod::Jacobi : EigenMethod::Tridiagonal;
    EigenPairs reduced;
    if (method == EigenMethod::Jacobi) {
        reduced = jacobi_eigen(c);
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c);
        if (solver.info() != Eigen::Success) throw Error(ErrorCode::InvalidArgument, "symmetric eigensolver failed");
        reduced = sorted(solver.eigenvalues(), solver.eigenvectors(), 0);
    }
    EigenPairs out;
    out.values = reduced.values;
    out.vectors = llt.matrixU().solve(reduced.vectors);
    out.sweeps = reduced.sweeps;
    fix_eigenvector_signs(out.vectors);
    return out;
}

}  // namespace xmorph
