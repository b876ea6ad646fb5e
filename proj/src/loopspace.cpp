#include "splitlab/loopspace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

namespace splitlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFourPiSq = 4.0 * kPi * kPi;

Mat transition_log(const Mat& a, const Mat& b) { return group_log(a.adjoint() * b); }

// dE/ds along right-translation directions, in L2 normalisation.
Mat gradient_entry(const Mat& prev_log, const Mat& log, int n, const GroupSpec& spec) {
    const double c = static_cast<double>(n) * n / (2.0 * kPi * kPi);
    return project_algebra(c * (prev_log - log), spec);
}

}  // namespace

WeightVector::WeightVector(std::vector<int> w) : d(std::move(w)) {
    std::sort(d.begin(), d.end(), std::greater<>());
}

int WeightVector::sum() const { return std::accumulate(d.begin(), d.end(), 0); }

int WeightVector::sum_squares() const {
    int s = 0;
    for (int x : d) s += x * x;
    return s;
}

int WeightVector::max_abs() const {
    int m = 0;
    for (int x : d) m = std::max(m, std::abs(x));
    return m;
}

bool WeightVector::is_constant() const {
    return d.empty() || std::all_of(d.begin(), d.end(), [&](int x) { return x == d.front(); });
}

std::string WeightVector::str() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < d.size(); ++i) os << (i ? "," : "") << d[i];
    os << ')';
    return os.str();
}

DiscreteLoop constant_loop(const GroupSpec& spec, int n) {
    return DiscreteLoop{spec, std::vector<Mat>(static_cast<std::size_t>(n),
                                               Mat::Identity(spec.rank, spec.rank))};
}

void validate_loop(const DiscreteLoop& loop) {
    const auto& spec = loop.spec;
    if (loop.samples.size() < 2) throw ValidationError("loop needs at least two samples");
    const Mat id = Mat::Identity(spec.rank, spec.rank);
    if (op_norm(loop.samples.front() - id) > spec.tol)
        throw ValidationError("loop is not based: first sample differs from identity");
    const int n = loop.size();
    for (int k = 0; k < n; ++k) {
        require_unitary(loop.samples[k], spec, "loop sample");
        if (spec.special && std::abs(loop.samples[k].determinant() - 1.0) > 1e3 * spec.tol)
            throw ValidationError("loop sample not in SU(r)");
        const Mat x = group_log(loop.samples[k].adjoint() * loop.samples[(k + 1) % n]);
        if (op_norm(x) >= kPi / 2)
            throw DiscretizationError("adjacent samples too far apart at k=" + std::to_string(k));
    }
}

std::vector<Mat> transition_logs_serial(const DiscreteLoop& loop) {
    const int n = loop.size();
    std::vector<Mat> logs(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) logs[k] = transition_log(loop.samples[k], loop.samples[(k + 1) % n]);
    return logs;
}

std::vector<Mat> transition_logs(const DiscreteLoop& loop) {
    const int n = loop.size();
    std::vector<Mat> logs(static_cast<std::size_t>(n));
    bool failed = false;
#pragma omp parallel for schedule(static) if (n >= 256)
    for (int k = 0; k < n; ++k) {
        try {
            logs[k] = transition_log(loop.samples[k], loop.samples[(k + 1) % n]);
        } catch (const BranchCutError&) {
#pragma omp atomic write
            failed = true;
        }
    }
    if (failed) throw BranchCutError("group_log: eigenvalue at -1; refine the loop discretization");
    return logs;
}

double loop_energy_serial(const DiscreteLoop& loop) {
    const auto logs = transition_logs_serial(loop);
    double s = 0.0;
    for (const auto& x : logs) s += norm_sq_raw(x, loop.spec.metric_scale);
    return s * loop.size() / kFourPiSq;
}

double loop_energy(const DiscreteLoop& loop) {
    const auto logs = transition_logs(loop);
    const int n = loop.size();
    double s = 0.0;
#pragma omp parallel for reduction(+ : s) schedule(static) if (n >= 256)
    for (int k = 0; k < n; ++k) s += norm_sq_raw(logs[k], loop.spec.metric_scale);
    return s * n / kFourPiSq;
}

LoopTangent energy_gradient_serial(const DiscreteLoop& loop) {
    const int n = loop.size();
    const auto logs = transition_logs_serial(loop);
    LoopTangent g(static_cast<std::size_t>(n));
    g[0] = Mat::Zero(loop.spec.rank, loop.spec.rank);
    for (int k = 1; k < n; ++k) g[k] = gradient_entry(logs[k - 1], logs[k], n, loop.spec);
    return g;
}

LoopTangent energy_gradient(const DiscreteLoop& loop) {
    const int n = loop.size();
    const auto logs = transition_logs(loop);
    LoopTangent g(static_cast<std::size_t>(n));
    g[0] = Mat::Zero(loop.spec.rank, loop.spec.rank);
#pragma omp parallel for schedule(static) if (n >= 256)
    for (int k = 1; k < n; ++k) g[k] = gradient_entry(logs[k - 1], logs[k], n, loop.spec);
    return g;
}

LoopTangent smooth_by_half_derivative(const LoopTangent& field, const GroupSpec& spec) {
    const int n = static_cast<int>(field.size());
    const int r = spec.rank;
    Eigen::FFT<double> fft;
    LoopTangent out(static_cast<std::size_t>(n), Mat::Zero(r, r));
    std::vector<cplx> series(static_cast<std::size_t>(n)), modes;
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < r; ++j) {
            for (int k = 0; k < n; ++k) series[k] = field[k](i, j);
            fft.fwd(modes, series);
            modes[0] = 0.0;
            for (int m = 1; m < n; ++m) {
                const int freq = m <= n / 2 ? m : n - m;
                modes[m] /= 2.0 * kPi * freq;
            }
            fft.inv(series, modes);
            for (int k = 0; k < n; ++k) out[k](i, j) = series[k];
        }
    }
    const Mat base = out[0];
    for (auto& x : out) x = project_algebra(x - base, spec);
    return out;
}

LoopTangent kahler_gradient(const DiscreteLoop& loop) {
    // Full gradient including the basepoint slot; it sums to zero because the
    // energy is invariant under right multiplication by constants.
    const int n = loop.size();
    const auto logs = transition_logs(loop);
    LoopTangent g(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) g[k] = gradient_entry(logs[(k + n - 1) % n], logs[k], n, loop.spec);
    return smooth_by_half_derivative(g, loop.spec);
}

double tangent_pairing(const LoopTangent& a, const LoopTangent& b, const GroupSpec& spec) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += inner_raw(a[k], b[k], spec.metric_scale);
    return s / static_cast<double>(a.size());
}

double tangent_norm(const LoopTangent& a, const GroupSpec& spec) {
    return std::sqrt(std::max(0.0, tangent_pairing(a, a, spec)));
}

DiscreteLoop retract(const DiscreteLoop& loop, const LoopTangent& xi) {
    DiscreteLoop out = loop;
    const int n = loop.size();
#pragma omp parallel for schedule(static) if (n >= 256)
    for (int k = 1; k < n; ++k) out.samples[k] = loop.samples[k] * group_exp(xi[k]);
    out.samples[0] = Mat::Identity(loop.spec.rank, loop.spec.rank);
    return out;
}

LoopTangent random_tangent(const GroupSpec& spec, int n, std::mt19937_64& rng, double scale) {
    LoopTangent xi(static_cast<std::size_t>(n));
    xi[0] = Mat::Zero(spec.rank, spec.rank);
    for (int k = 1; k < n; ++k) xi[k] = random_algebra(spec, rng, scale);
    return xi;
}

DiscreteLoop geodesic_loop(const WeightVector& d, const Mat& conjugator, int n, bool special) {
    const int r = d.rank();
    if (r < 1) throw ValidationError("geodesic_loop: empty weight vector");
    if (conjugator.rows() != r || !is_unitary(conjugator, 1e-8))
        throw ValidationError("geodesic_loop: conjugator must be an r x r unitary");
    if (special && d.sum() != 0) throw ValidationError("geodesic_loop: SU(r) weights must sum to 0");
    if (n < 8 * (d.max_abs() + 1))
        throw DiscretizationError("geodesic_loop: N must be at least 8*(max|d|+1)");
    DiscreteLoop loop;
    loop.spec = GroupSpec(r, special);
    loop.samples.resize(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / n;
        Vec diag(r);
        for (int i = 0; i < r; ++i) diag(i) = std::polar(1.0, 2.0 * kPi * d.d[i] * t);
        loop.samples[k] = conjugator * diag.asDiagonal() * conjugator.adjoint();
    }
    loop.samples[0] = Mat::Identity(r, r);
    return loop;
}

namespace {

// Hessian columns for the variables at sample k.
void hessian_columns(const DiscreteLoop& loop, const std::vector<Mat>& logs,
                     const std::vector<Mat>& basis, int k, double eps, Eigen::MatrixXd& h) {
    const int n = loop.size();
    const int dim = static_cast<int>(basis.size());
    const auto& spec = loop.spec;
    const double c = static_cast<double>(n) / (2.0 * kPi * kPi) * n;  // L2 normalisation
    auto idx = [&](int sample, int b) { return (sample - 1) * dim + b; };
    const Mat& prev = loop.samples[k - 1];
    const Mat& next = loop.samples[(k + 1) % n];
    for (int b = 0; b < dim; ++b) {
        std::array<Mat, 2> lprev, lcur;
        for (int s = 0; s < 2; ++s) {
            const double step = s == 0 ? eps : -eps;
            const Mat gk = loop.samples[k] * group_exp(step * basis[b]);
            lprev[s] = transition_log(prev, gk);
            lcur[s] = transition_log(gk, next);
        }
        // d/ds of c <L_{j-1} - L_j, e_b'> / N for j = k-1, k, k+1
        for (int j : {k - 1, k, k + 1}) {
            if (j < 1 || j > n - 1) continue;
            std::array<Mat, 2> diff;
            for (int s = 0; s < 2; ++s) {
                const Mat& lj_prev = (j - 1 == k - 1) ? lprev[s] : (j - 1 == k ? lcur[s] : logs[j - 1]);
                const Mat& lj = (j == k - 1) ? lprev[s] : (j == k ? lcur[s] : logs[j]);
                diff[s] = lj_prev - lj;
            }
            const Mat dd = (diff[0] - diff[1]) / (2.0 * eps);
            for (int bp = 0; bp < dim; ++bp)
                h(idx(j, bp), idx(k, b)) = c / n * inner_raw(dd, basis[bp], spec.metric_scale);
        }
    }
}

Eigen::MatrixXd symmetrise(Eigen::MatrixXd h) { return 0.5 * (h + h.transpose()); }

}  // namespace

Eigen::MatrixXd loop_hessian_serial(const DiscreteLoop& loop, double fd_step) {
    const int n = loop.size();
    const auto basis = algebra_basis(loop.spec);
    const int dim = static_cast<int>(basis.size());
    const auto logs = transition_logs_serial(loop);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero((n - 1) * dim, (n - 1) * dim);
    for (int k = 1; k < n; ++k) hessian_columns(loop, logs, basis, k, fd_step, h);
    return symmetrise(std::move(h)) * n;
}

Eigen::MatrixXd loop_hessian(const DiscreteLoop& loop, double fd_step) {
    const int n = loop.size();
    const auto basis = algebra_basis(loop.spec);
    const int dim = static_cast<int>(basis.size());
    const auto logs = transition_logs(loop);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero((n - 1) * dim, (n - 1) * dim);
    // each k writes only to its own column block
#pragma omp parallel for schedule(dynamic, 4)
    for (int k = 1; k < n; ++k) hessian_columns(loop, logs, basis, k, fd_step, h);
    return symmetrise(std::move(h)) * n;
}

HessianSpectrum loop_hessian_spectrum(const DiscreteLoop& loop, double grad_tol) {
    const auto grad = energy_gradient(loop);
    const double gnorm = tangent_norm(grad, loop.spec);
    if (gnorm > grad_tol)
        throw PreconditionError("loop_hessian_negative_count: loop is not critical (|grad| = " +
                                std::to_string(gnorm) + ")");
    const Eigen::MatrixXd h = loop_hessian(loop);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
    HessianSpectrum out;
    out.threshold = 1e-6 * loop.size();
    const auto& ev = es.eigenvalues();
    out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    for (double v : out.eigenvalues) {
        if (v < -out.threshold) ++out.negative;
        else if (v < out.threshold) ++out.near_zero;
    }
    return out;
}

int loop_hessian_negative_count(const DiscreteLoop& loop, double grad_tol) {
    return loop_hessian_spectrum(loop, grad_tol).negative;
}

const char* reading_name(FormulaReading r) {
    return r == FormulaReading::GlobalOffset ? "global-offset" : "per-pair";
}

int formula_morse_index(const WeightVector& d, FormulaReading reading) {
    if (d.is_constant())
        throw PreconditionError("formula_morse_index: undefined for constant weights (index 0)");
    int total = 0;
    for (int i = 0; i < d.rank(); ++i) {
        for (int j = i + 1; j < d.rank(); ++j) {
            const int gap = std::abs(d.d[i] - d.d[j]);
            if (reading == FormulaReading::GlobalOffset) total += 2 * gap;
            else if (gap != 0) total += 2 * gap - 2;
        }
    }
    return reading == FormulaReading::GlobalOffset ? total - 2 : total;
}

int morse_index(const WeightVector& d, FormulaReading reading) {
    return d.is_constant() ? 0 : formula_morse_index(d, reading);
}

std::vector<FormulaReading> calibrate_formula_reading(const std::vector<CalibrationCase>& cases) {
    std::vector<FormulaReading> ok;
    for (auto reading : {FormulaReading::GlobalOffset, FormulaReading::PerPair}) {
        bool all = std::all_of(cases.begin(), cases.end(), [&](const CalibrationCase& c) {
            return morse_index(c.weights, reading) == c.oracle_index;
        });
        if (all) ok.push_back(reading);
    }
    if (ok.empty()) throw PreconditionError("no formula reading reproduces the oracle indices");
    return ok;
}

namespace {

void enumerate_rec(int r, int lo, int hi, int remaining_sum, std::vector<int>& prefix,
                   std::vector<std::vector<int>>& out) {
    const int left = r - static_cast<int>(prefix.size());
    if (left == 0) {
        if (remaining_sum == 0) out.push_back(prefix);
        return;
    }
    // descending entries bounded by hi
    for (int v = hi; v >= lo; --v) {
        if (v * left < remaining_sum) break;
        if (lo * (left - 1) > remaining_sum - v) continue;
        prefix.push_back(v);
        enumerate_rec(r, lo, v, remaining_sum - v, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace

std::vector<WeightVector> enumerate_low_index_weights(int r, int bound, FormulaReading reading) {
    if (r < 1) throw ValidationError("enumerate_low_index_weights: r must be >= 1");
    if (bound < 0) throw ValidationError("enumerate_low_index_weights: bound must be >= 0");
    const int m = bound + 2;
    std::vector<std::vector<int>> raw;
    std::vector<int> prefix;
    enumerate_rec(r, -m, m, 0, prefix, raw);
    std::vector<WeightVector> out;
    for (auto& w : raw) {
        WeightVector wv(std::move(w));
        if (morse_index(wv, reading) <= bound) out.push_back(std::move(wv));
    }
    std::sort(out.begin(), out.end(), [](const WeightVector& a, const WeightVector& b) {
        if (a.sum_squares() != b.sum_squares()) return a.sum_squares() < b.sum_squares();
        return a.d > b.d;
    });
    return out;
}

int critical_manifold_dim(const WeightVector& d) {
    int r = d.rank();
    int centraliser = 0;
    for (int i = 0; i < r;) {
        int j = i;
        while (j < r && d.d[j] == d.d[i]) ++j;
        centraliser += (j - i) * (j - i);
        i = j;
    }
    return r * r - centraliser;
}

}  // namespace splitlab
