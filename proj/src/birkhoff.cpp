#include "splitlab/birkhoff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>

namespace splitlab {

namespace {

constexpr double kPi = std::numbers::pi;

cplx circle_point(int j, int samples) { return std::polar(1.0, 2.0 * kPi * j / samples); }

int numerical_rank(const Mat& a, double rel_tol) {
    if (a.size() == 0) return 0;
    Eigen::BDCSVD<Mat> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) > rel_tol * s(0)) ++rank;
    return rank;
}

}  // namespace

LaurentLoop::LaurentLoop(int r, int m)
    : rank(r), degree(m), coeffs(static_cast<std::size_t>(2 * m + 1), Mat::Zero(r, r)) {
    if (r < 1 || m < 0) throw ValidationError("LaurentLoop: bad rank or degree");
}

Mat LaurentLoop::operator()(cplx z) const {
    // Horner in z from the top, then shift by z^{-m}
    Mat acc = Mat::Zero(rank, rank);
    for (int k = degree; k >= -degree; --k) acc = acc * z + coeff(k);
    return acc * std::pow(z, -degree);
}

LaurentLoop LaurentLoop::monomial_diag(const std::vector<int>& exponents) {
    int m = 0;
    for (int e : exponents) m = std::max(m, std::abs(e));
    LaurentLoop out(static_cast<int>(exponents.size()), m);
    for (std::size_t i = 0; i < exponents.size(); ++i) out.coeff(exponents[i])(i, i) = 1.0;
    return out;
}

LaurentLoop LaurentLoop::operator*(const LaurentLoop& other) const {
    if (rank != other.rank) throw ValidationError("LaurentLoop product: rank mismatch");
    LaurentLoop out(rank, degree + other.degree);
    for (int a = -degree; a <= degree; ++a)
        for (int b = -other.degree; b <= other.degree; ++b) out.coeff(a + b) += coeff(a) * other.coeff(b);
    return out;
}

void validate_laurent(const LaurentLoop& gamma, const BirkhoffOptions& opt) {
    for (int j = 0; j < opt.circle_samples; ++j) {
        Eigen::JacobiSVD<Mat> svd(gamma(circle_point(j, opt.circle_samples)));
        const auto& s = svd.singularValues();
        const double smin = s(s.size() - 1);
        if (!(smin > 0.0) || s(0) / smin > opt.condition_cap)
            throw ValidationError("LaurentLoop: not invertible on the unit circle (sample " +
                                  std::to_string(j) + ")");
    }
}

int det_winding(const LaurentLoop& gamma, int samples) {
    if (samples < 1024) samples = 1024;
    double total = 0.0;
    cplx prev = gamma(circle_point(0, samples)).determinant();
    if (std::abs(prev) == 0.0) throw ValidationError("det_winding: determinant vanishes on the circle");
    for (int j = 1; j <= samples; ++j) {
        const cplx cur = gamma(circle_point(j % samples, samples)).determinant();
        if (std::abs(cur) == 0.0) throw ValidationError("det_winding: determinant vanishes on the circle");
        const double step = std::arg(cur / prev);
        if (std::abs(step) >= kPi / 2)
            throw UndersamplingError("det_winding: phase step too large; resample denser");
        total += step;
        prev = cur;
    }
    const double turns = total / (2.0 * kPi);
    const double rounded = std::round(turns);
    if (std::abs(turns - rounded) * 2.0 * kPi > 1e-3)
        throw UndersamplingError("det_winding: total phase is not a multiple of 2 pi");
    return static_cast<int>(rounded);
}

int default_truncation(const LaurentLoop& gamma, int k) { return 2 * gamma.degree + std::abs(k) + 2; }

int h0_twisted_at(const LaurentLoop& gamma, int k, int truncation, const BirkhoffOptions& opt) {
    const int r = gamma.rank;
    const int m = gamma.degree;
    const int cols = r * (truncation + 1);
    // modes n >= 1 of z^{-k} gamma p reach up to m + truncation - k
    const int top = m + truncation - k;
    if (top < 1) return cols;
    Mat t = Mat::Zero(r * top, cols);
    for (int n = 1; n <= top; ++n) {
        for (int b = 0; b <= truncation; ++b) {
            const int a = n + k - b;
            if (a < -m || a > m) continue;
            t.block(r * (n - 1), r * b, r, r) = gamma.coeff(a);
        }
    }
    return cols - numerical_rank(t, opt.rank_rel_tol);
}

int h0_twisted(const LaurentLoop& gamma, int k, int truncation, const BirkhoffOptions& opt) {
    const int a = h0_twisted_at(gamma, k, truncation, opt);
    const int b = h0_twisted_at(gamma, k, truncation + 2, opt);
    if (a != b)
        throw TruncationError("h0_twisted: kernel dimension changes under truncation increase (k=" +
                              std::to_string(k) + "); raise K");
    return a;
}

SplittingReport splitting_report(const LaurentLoop& gamma, const BirkhoffOptions& opt) {
    const int r = gamma.rank;
    const int m = gamma.degree;
    SplittingReport rep;
    std::vector<int> weights;
    int k = -(m + 2);
    int prev_h0 = h0_twisted(gamma, k - 1, default_truncation(gamma, k - 1), opt);
    int prev_jump = 0;
    if (prev_h0 != 0)
        throw NumericalRankError("splitting_type: sections exist below the degree bound", {k - 1});
    std::vector<int> bad;
    for (;; ++k) {
        if (k > m + 2) throw NumericalRankError("splitting_type: jump pattern never reached rank", bad);
        const int h = h0_twisted(gamma, k, default_truncation(gamma, k), opt);
        rep.h0.emplace_back(k, h);
        const int jump = h - prev_h0;
        if (jump < prev_jump || jump > r) {
            bad.push_back(k);
            throw NumericalRankError("splitting_type: inconsistent jump pattern at k=" + std::to_string(k),
                                     bad);
        }
        for (int c = 0; c < jump - prev_jump; ++c) weights.push_back(-k);
        prev_h0 = h;
        prev_jump = jump;
        if (jump == r) break;
    }
    rep.weights = WeightVector(std::move(weights));
    return rep;
}

WeightVector splitting_type(const LaurentLoop& gamma, const BirkhoffOptions& opt) {
    validate_laurent(gamma, opt);
    return splitting_report(gamma, opt).weights;
}

namespace {

// Fourier modes of the sampled loop under z = exp(-2 pi i t): index a in [0, n)
std::vector<Mat> laurent_modes(const DiscreteLoop& loop) {
    const int n = loop.size();
    const int r = loop.spec.rank;
    Eigen::FFT<double> fft;
    std::vector<Mat> modes(static_cast<std::size_t>(n), Mat::Zero(r, r));
    std::vector<cplx> series(static_cast<std::size_t>(n)), out;
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
            for (int k = 0; k < n; ++k) series[k] = loop.samples[k](i, j);
            fft.inv(out, series);  // (1/n) sum_k g_k e^{+2 pi i a k/n}
            for (int a = 0; a < n; ++a) modes[a](i, j) = out[a];
        }
    }
    return modes;
}

double tail_of(const std::vector<Mat>& modes, int m) {
    const int n = static_cast<int>(modes.size());
    double tail = 0.0;
    for (int a = 0; a < n; ++a) {
        const int freq = a <= n / 2 ? a : a - n;
        if (std::abs(freq) > m) tail = std::max(tail, op_norm(modes[a]));
    }
    return tail;
}

LaurentLoop truncate_modes(const std::vector<Mat>& modes, int r, int m) {
    const int n = static_cast<int>(modes.size());
    LaurentLoop out(r, m);
    for (int a = -m; a <= m; ++a) out.coeff(a) = modes[static_cast<std::size_t>((a + n) % n)];
    return out;
}

}  // namespace

double fourier_tail(const DiscreteLoop& loop, int m) { return tail_of(laurent_modes(loop), m); }

LaurentLoop truncated_laurent(const DiscreteLoop& loop, int m) {
    if (m < 0 || 2 * m + 1 > loop.size()) throw ValidationError("truncated_laurent: degree out of range");
    return truncate_modes(laurent_modes(loop), loop.spec.rank, m);
}

LaurentLoop loop_to_laurent(const DiscreteLoop& loop, int m, double decay_tol) {
    const int n = loop.size();
    if (2 * m + 1 > n) throw SmoothnessError("loop_to_laurent: degree exceeds the sample resolution");
    const auto modes = laurent_modes(loop);
    const double tail = tail_of(modes, m);
    if (tail > decay_tol)
        throw SmoothnessError("loop_to_laurent: Fourier tail " + std::to_string(tail) +
                              " above tolerance; raise m or N");
    LaurentLoop out = truncate_modes(modes, loop.spec.rank, m);
    double err = 0.0;
    for (int k = 0; k < n; ++k) {
        const cplx z = std::polar(1.0, -2.0 * kPi * k / n);
        err = std::max(err, op_norm(out(z) - loop.samples[k]));
    }
    if (err > 1e-6) throw SmoothnessError("loop_to_laurent: reconstruction error above 1e-6");
    return out;
}

LaurentLoop loop_to_laurent_auto(const DiscreteLoop& loop, double decay_tol) {
    const auto modes = laurent_modes(loop);
    const int n = loop.size();
    for (int m = 0; 2 * m + 1 <= n; ++m)
        if (tail_of(modes, m) <= decay_tol) return loop_to_laurent(loop, m, decay_tol);
    throw SmoothnessError("loop_to_laurent: Fourier coefficients do not decay; raise N");
}

LaurentLoop planted_factorization(const WeightVector& d, std::mt19937_64& rng, int factor_degree,
                                  double amplitude) {
    const int r = d.rank();
    std::normal_distribution<double> gauss(0.0, amplitude);
    std::bernoulli_distribution coin(0.5);
    auto unipotent = [&](int sign) {
        // triangular, unit diagonal, off-diagonal polynomial in z^{sign}
        LaurentLoop u(r, factor_degree);
        for (int i = 0; i < r; ++i) u.coeff(0)(i, i) = 1.0;
        const bool upper = coin(rng);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < r; ++j) {
                if (i == j || (upper ? j < i : j > i)) continue;
                for (int p = 0; p <= factor_degree; ++p) u.coeff(sign * p)(i, j) = cplx(gauss(rng), gauss(rng));
            }
        return u;
    };
    std::vector<int> exps(d.d.size());
    // shuffle the diagonal so the planted order is not always sorted
    std::vector<int> perm(d.d.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < perm.size(); ++i) exps[i] = -d.d[perm[i]];
    LaurentLoop left(r, 0), right(r, 0);
    left.coeff(0) = random_unitary(r, rng);
    right.coeff(0) = random_unitary(r, rng);
    return left * unipotent(-1) * LaurentLoop::monomial_diag(exps) * unipotent(+1) * right;
}

DiscreteLoop unitary_representative(const LaurentLoop& gamma, int n, bool special, int truncation) {
    const int r = gamma.rank;
    const int m = gamma.degree;
    const int kk = truncation > 0 ? truncation : 6 * m + 24;
    // Laurent coefficient space for modes [-m, m + kk]
    const int rows = r * (2 * m + kk + 1);
    auto column_of = [&](int shift, int j) {
        Vec v = Vec::Zero(rows);
        for (int a = -m; a <= m; ++a) v.segment(r * (a + shift + m), r) = gamma.coeff(a).col(j);
        return v;
    };
    Mat shifted(rows, r * kk);
    for (int s = 1; s <= kk; ++s)
        for (int j = 0; j < r; ++j) shifted.col(r * (s - 1) + j) = column_of(s, j);
    Mat base(rows, r);
    for (int j = 0; j < r; ++j) base.col(j) = column_of(0, j);
    // residual of base against z * W
    Eigen::HouseholderQR<Mat> qr(shifted);
    const Mat q = qr.householderQ() * Mat::Identity(rows, r * kk);
    Mat resid = base - q * (q.adjoint() * base);
    resid -= q * (q.adjoint() * resid);
    // orthonormalise in L2: coefficient space is orthonormal
    Eigen::SelfAdjointEigenSolver<Mat> es(resid.adjoint() * resid);
    const Mat inv_sqrt = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                         es.eigenvectors().adjoint();
    const Mat theta = resid * inv_sqrt;
    auto eval = [&](cplx z) {
        Mat g = Mat::Zero(r, r);
        for (int a = -m; a <= m + kk; ++a) g += std::pow(z, a) * theta.middleRows(r * (a + m), r);
        return g;
    };
    const Mat at_one_inv = unitary_polar(eval(1.0)).adjoint();
    DiscreteLoop loop;
    loop.spec = GroupSpec(r, special);
    loop.samples.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        Mat g = unitary_polar(eval(std::polar(1.0, -2.0 * kPi * k / n)) * at_one_inv);
        if (special) g *= std::polar(1.0, -std::arg(g.determinant()) / r);
        loop.samples[k] = g;
    }
    loop.samples[0] = Mat::Identity(r, r);
    return loop;
}

}  // namespace splitlab
