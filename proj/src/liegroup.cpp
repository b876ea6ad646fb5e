#include "splitlab/liegroup.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace splitlab {

GroupSpec::GroupSpec(int r, bool su, double kappa, double tolerance)
    : rank(r), special(su), metric_scale(kappa), tol(tolerance) {
    if (r < 1) throw ValidationError("GroupSpec: rank must be >= 1");
    if (!(kappa > 0.0)) throw ValidationError("GroupSpec: metric scale must be positive");
}

double op_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

bool is_skew_hermitian(const Mat& x, double tol) {
    return x.rows() == x.cols() && op_norm(x + x.adjoint()) <= tol;
}

bool is_unitary(const Mat& g, double tol) {
    if (g.rows() != g.cols()) return false;
    return op_norm(g.adjoint() * g - Mat::Identity(g.rows(), g.cols())) <= tol;
}

void require_skew(const Mat& x, const GroupSpec& spec, const char* what) {
    if (x.rows() != spec.rank || x.cols() != spec.rank)
        throw ValidationError(std::string(what) + ": wrong matrix size");
    if (!is_skew_hermitian(x, spec.tol))
        throw ValidationError(std::string(what) + ": not skew-Hermitian");
    if (spec.special && std::abs(x.trace()) > spec.tol)
        throw ValidationError(std::string(what) + ": not traceless");
}

void require_unitary(const Mat& g, const GroupSpec& spec, const char* what) {
    if (g.rows() != spec.rank || g.cols() != spec.rank)
        throw ValidationError(std::string(what) + ": wrong matrix size");
    if (!is_unitary(g, spec.tol)) throw ValidationError(std::string(what) + ": not unitary");
}

double algebra_inner(const Mat& x, const Mat& y, const GroupSpec& spec) {
    require_skew(x, spec, "algebra_inner");
    require_skew(y, spec, "algebra_inner");
    return inner_raw(x, y, spec.metric_scale);
}

Mat group_exp(const Mat& x) {
    // x = i h with h Hermitian
    const Mat h = cplx(0.0, -1.0) * x;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
    const auto& lam = es.eigenvalues();
    Vec phase(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i) phase(i) = std::polar(1.0, lam(i));
    return es.eigenvectors() * phase.asDiagonal() * es.eigenvectors().adjoint();
}

Mat group_log(const Mat& g, double branch_tol) {
    // Schur form of a normal matrix is diagonal.
    Eigen::ComplexSchur<Mat> schur(g);
    const Mat& t = schur.matrixT();
    const Mat& q = schur.matrixU();
    Vec logs(t.rows());
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
        const double a = std::arg(t(i, i));
        if (std::numbers::pi - std::abs(a) < branch_tol)
            throw BranchCutError("group_log: eigenvalue at -1; refine the loop discretization");
        logs(i) = cplx(0.0, a);
    }
    Mat x = q * logs.asDiagonal() * q.adjoint();
    return 0.5 * (x - x.adjoint());
}

Mat project_algebra(const Mat& m, const GroupSpec& spec) {
    Mat x = 0.5 * (m - m.adjoint());
    if (spec.special) {
        const cplx tr = x.trace() / static_cast<double>(x.rows());
        x.diagonal().array() -= tr;
    }
    return x;
}

std::vector<Mat> algebra_basis(const GroupSpec& spec) {
    const int r = spec.rank;
    const double s = 1.0 / std::sqrt(spec.metric_scale);
    std::vector<Mat> basis;
    basis.reserve(spec.algebra_dim());
    for (int i = 0; i < r; ++i) {
        for (int j = i + 1; j < r; ++j) {
            Mat a = Mat::Zero(r, r);
            a(i, j) = 1.0;
            a(j, i) = -1.0;
            basis.push_back(a * (s / std::sqrt(2.0)));
            Mat b = Mat::Zero(r, r);
            b(i, j) = cplx(0.0, 1.0);
            b(j, i) = cplx(0.0, 1.0);
            basis.push_back(b * (s / std::sqrt(2.0)));
        }
    }
    if (spec.special) {
        // Cartan part: i * diag(1,...,1,-k,0,...) normalised
        for (int k = 1; k < r; ++k) {
            Mat h = Mat::Zero(r, r);
            for (int i = 0; i < k; ++i) h(i, i) = cplx(0.0, 1.0);
            h(k, k) = cplx(0.0, -static_cast<double>(k));
            basis.push_back(h * (s / std::sqrt(static_cast<double>(k * (k + 1)))));
        }
    } else {
        for (int i = 0; i < r; ++i) {
            Mat h = Mat::Zero(r, r);
            h(i, i) = cplx(0.0, s);
            basis.push_back(h);
        }
    }
    return basis;
}

Mat random_unitary(int r, std::mt19937_64& rng, bool special) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat z(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) z(i, j) = cplx(gauss(rng), gauss(rng));
    Eigen::HouseholderQR<Mat> qr(z);
    Mat q = qr.householderQ();
    const Mat rr = qr.matrixQR().triangularView<Eigen::Upper>();
    // fix column phases so the distribution is Haar
    for (int j = 0; j < r; ++j) {
        const cplx d = rr(j, j);
        if (std::abs(d) > 0) q.col(j) *= d / std::abs(d);
    }
    if (special) {
        const cplx det = q.determinant();
        q *= std::polar(1.0, -std::arg(det) / r);
    }
    return q;
}

Mat random_algebra(const GroupSpec& spec, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int r = spec.rank;
    Mat m(r, r);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < r; ++j) m(i, j) = cplx(gauss(rng), gauss(rng));
    return scale * project_algebra(m, spec);
}

Mat unitary_polar(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return svd.matrixU() * svd.matrixV().adjoint();
}

}  // namespace splitlab
