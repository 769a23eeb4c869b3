#include "hamroc/numerics.hpp"

#include <array>
#include <cmath>

#include <Eigen/Eigenvalues>

namespace hamroc {

SpdFactor::SpdFactor(const Mat& a) {
    if (a.rows() != a.cols()) {
        fail(ErrorCode::DimensionMismatch, "SpdFactor: matrix is not square");
    }
    const Eigen::MatrixXd base = a;
    const double scale = a.rows() > 0 ? base.trace() / static_cast<double>(a.rows()) : 0.0;
    constexpr std::array<double, 4> levels{0.0, 1e-12, 1e-10, 1e-8};
    for (double level : levels) {
        const double delta = level * scale;
        if (level > 0.0 && !(delta > 0.0)) {
            break;  // non-positive trace: jitter cannot help
        }
        Eigen::MatrixXd shifted = base;
        shifted.diagonal().array() += delta;
        llt_.compute(shifted);
        if (llt_.info() == Eigen::Success) {
            jitter_ = delta;
            return;
        }
    }
    fail(ErrorCode::NotSPD, "matrix is not positive definite after diagonal jitter");
}

Vec SpdFactor::solve(const Vec& b) const {
    if (static_cast<std::size_t>(b.size()) != size()) {
        fail(ErrorCode::DimensionMismatch, "SpdFactor::solve: right-hand side has wrong size");
    }
    return llt_.solve(b);
}

Mat SpdFactor::solve(const Mat& b) const {
    if (static_cast<std::size_t>(b.rows()) != size()) {
        fail(ErrorCode::DimensionMismatch, "SpdFactor::solve: right-hand side has wrong rows");
    }
    return llt_.solve(Eigen::MatrixXd(b));
}

Vec cholesky_solve(const Mat& a, const Vec& b) {
    if (a.rows() != a.cols() || b.size() != a.rows()) {
        fail(ErrorCode::DimensionMismatch, "cholesky_solve: dimension mismatch");
    }
    return SpdFactor(a).solve(b);
}

double eigenvalue_ratio(const Mat& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(Eigen::MatrixXd(symmetric),
                                                          Eigen::EigenvaluesOnly);
    const auto& ev = solver.eigenvalues();
    const double largest = ev.maxCoeff();
    if (!(largest > 0.0)) {
        return 0.0;
    }
    return ev.minCoeff() / largest;
}

Mat pseudo_left_inverse(const Mat& a) {
    if (a.rows() < a.cols() || a.cols() == 0) {
        fail(ErrorCode::DimensionMismatch, "pseudo_left_inverse: need rows >= cols");
    }
    const Mat gram = a.transpose() * a;
    if (eigenvalue_ratio(gram) <= 1e-12) {
        fail(ErrorCode::RankDeficient, "pseudo_left_inverse: A^T A is numerically singular");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) {
        fail(ErrorCode::RankDeficient, "pseudo_left_inverse: A^T A factorization failed");
    }
    return llt.solve(Eigen::MatrixXd(a.transpose()));
}

Vec rk4_step(const Derivative& f, const Vec& y, double t, double h) {
    const Vec k1 = f(t, y);
    const Vec k2 = f(t + 0.5 * h, y + 0.5 * h * k1);
    const Vec k3 = f(t + 0.5 * h, y + 0.5 * h * k2);
    const Vec k4 = f(t + h, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace hamroc
