#pragma once

#include <functional>
#include <optional>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hamroc/error.hpp"

namespace hamroc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Throws NonFiniteValue if any entry is NaN or infinite.
template <typename Derived>
void require_finite(const Eigen::DenseBase<Derived>& values, const char* what) {
    if (!values.allFinite()) fail(ErrorCode::NonFiniteValue, std::string(what) + " contains NaN or Inf");
}

/// Cholesky factorization with the diagonal-jitter escalation policy:
/// A is factored as-is, then as A + delta*I for
/// delta in {1e-12, 1e-10, 1e-8} * trace(A)/rows.
class SpdFactor {
public:
    explicit SpdFactor(const Mat& a);

    Vec solve(const Vec& b) const;
    Mat solve(const Mat& b) const;

    std::size_t size() const { return static_cast<std::size_t>(llt_.rows()); }
    /// Jitter that was added to the diagonal (0 when A factored cleanly).
    double jitter() const { return jitter_; }

private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double jitter_ = 0.0;
};

/// Solves A x = b for symmetric positive definite A.
Vec cholesky_solve(const Mat& a, const Vec& b);

/// A^L = (A^T A)^{-1} A^T. Rejects A when the smallest eigenvalue of A^T A
/// is below 1e-12 times the largest.
Mat pseudo_left_inverse(const Mat& a);

using Derivative = std::function<Vec(double t, const Vec& y)>;

/// One classical fourth-order Runge-Kutta step of size h.
Vec rk4_step(const Derivative& f, const Vec& y, double t, double h);

/// Smallest/largest eigenvalue ratio of a symmetric matrix.
double eigenvalue_ratio(const Mat& symmetric);

}  // namespace hamroc
