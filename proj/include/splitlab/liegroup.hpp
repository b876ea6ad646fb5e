#pragma once

#include <complex>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace splitlab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Principal logarithm hit an eigenvalue at -1. The loop is too coarse.
class BranchCutError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// U(r) or SU(r) with the bi-invariant metric <X,Y> = -metric_scale * Re tr(XY).
struct GroupSpec {
    int rank = 2;
    bool special = true;
    double metric_scale = 1.0;
    double tol = 1e-8;

    GroupSpec() = default;
    GroupSpec(int r, bool su, double kappa = 1.0, double tolerance = 1e-8);

    int algebra_dim() const { return special ? rank * rank - 1 : rank * rank; }
};

double op_norm(const Mat& m);

bool is_skew_hermitian(const Mat& x, double tol);
bool is_unitary(const Mat& g, double tol);

void require_skew(const Mat& x, const GroupSpec& spec, const char* what);
void require_unitary(const Mat& g, const GroupSpec& spec, const char* what);

double algebra_inner(const Mat& x, const Mat& y, const GroupSpec& spec);

/// Unchecked form used by the hot loops.
inline double inner_raw(const Mat& x, const Mat& y, double kappa = 1.0) {
    return -kappa * (x.cwiseProduct(y.transpose())).sum().real();
}

inline double norm_sq_raw(const Mat& x, double kappa = 1.0) {
    return kappa * x.squaredNorm();  // -tr(X^2) = ||X||_F^2 for skew-Hermitian X
}

Mat group_exp(const Mat& x);
Mat group_log(const Mat& g, double branch_tol = 1e-9);

/// Orthogonal projection onto the Lie algebra (skew part, traceless if special).
Mat project_algebra(const Mat& m, const GroupSpec& spec);

/// Orthonormal basis of the algebra under algebra_inner.
std::vector<Mat> algebra_basis(const GroupSpec& spec);

Mat random_unitary(int r, std::mt19937_64& rng, bool special = false);
Mat random_algebra(const GroupSpec& spec, std::mt19937_64& rng, double scale = 1.0);

/// Closest unitary in Frobenius norm (polar factor).
Mat unitary_polar(const Mat& m);

}  // namespace splitlab
