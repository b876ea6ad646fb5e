#pragma once

#include <string>
#include <vector>

#include "splitlab/liegroup.hpp"

namespace splitlab {

class DiscretizationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class PreconditionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Splitting type: a multiset of r integers, stored sorted descending.
struct WeightVector {
    std::vector<int> d;

    WeightVector() = default;
    explicit WeightVector(std::vector<int> w);

    int rank() const { return static_cast<int>(d.size()); }
    int sum() const;
    int sum_squares() const;  // |u|_A
    int max_abs() const;      // |u|_{A,inf}
    bool is_constant() const;
    std::string str() const;

    friend bool operator==(const WeightVector&, const WeightVector&) = default;
    friend auto operator<=>(const WeightVector&, const WeightVector&) = default;
};

/// Based loop sampled at t_k = k/N. samples[0] is the identity.
struct DiscreteLoop {
    GroupSpec spec;
    std::vector<Mat> samples;

    int size() const { return static_cast<int>(samples.size()); }
};

/// Variation field in right-translation coordinates, xi[0] = 0.
using LoopTangent = std::vector<Mat>;

DiscreteLoop constant_loop(const GroupSpec& spec, int n);

/// Throws ValidationError / DiscretizationError when an invariant fails.
void validate_loop(const DiscreteLoop& loop);

/// Logs of g_k^{-1} g_{k+1} (cyclic), one per sample.
std::vector<Mat> transition_logs(const DiscreteLoop& loop);
std::vector<Mat> transition_logs_serial(const DiscreteLoop& loop);

double loop_energy(const DiscreteLoop& loop);
double loop_energy_serial(const DiscreteLoop& loop);

/// L2 gradient for the pairing (1/N) sum_k <xi_k, eta_k>.
LoopTangent energy_gradient(const DiscreteLoop& loop);
LoopTangent energy_gradient_serial(const DiscreteLoop& loop);

/// Same gradient taken in the half-derivative (Kahler) metric of the loop
/// group: Fourier mode n is divided by 2*pi*|n|, then re-based.
LoopTangent kahler_gradient(const DiscreteLoop& loop);
LoopTangent smooth_by_half_derivative(const LoopTangent& field, const GroupSpec& spec);

/// (1/N) sum_k <a_k, b_k>
double tangent_pairing(const LoopTangent& a, const LoopTangent& b, const GroupSpec& spec);
double tangent_norm(const LoopTangent& a, const GroupSpec& spec);

/// gamma_k -> gamma_k exp(xi_k)
DiscreteLoop retract(const DiscreteLoop& loop, const LoopTangent& xi);

LoopTangent random_tangent(const GroupSpec& spec, int n, std::mt19937_64& rng, double scale = 1.0);

DiscreteLoop geodesic_loop(const WeightVector& d, const Mat& conjugator, int n,
                           bool special = true);

struct HessianSpectrum {
    std::vector<double> eigenvalues;  // ascending, L2-normalised
    int negative = 0;
    int near_zero = 0;
    int expected_null = -1;  // dimension of the conjugation orbit, if known
    double threshold = 0.0;
    bool resolution_warning = false;
};

/// Second variation of loop_energy on the based tangent space.
Eigen::MatrixXd loop_hessian(const DiscreteLoop& loop, double fd_step = 1e-5);
Eigen::MatrixXd loop_hessian_serial(const DiscreteLoop& loop, double fd_step = 1e-5);

HessianSpectrum loop_hessian_spectrum(const DiscreteLoop& loop, double grad_tol = 1e-6);
int loop_hessian_negative_count(const DiscreteLoop& loop, double grad_tol = 1e-6);

/// The printed index formula sum_{i<j} 2|a_i - a_j| - 2 admits two readings.
enum class FormulaReading {
    GlobalOffset,  // (sum_{i<j} 2|a_i-a_j|) - 2
    PerPair,       // sum_{i<j, a_i != a_j} (2|a_i-a_j| - 2)
};

const char* reading_name(FormulaReading r);

/// Reading selected by the Hessian calibration (see tests/test_loopspace.cpp).
inline constexpr FormulaReading kCalibratedReading = FormulaReading::PerPair;

int formula_morse_index(const WeightVector& d, FormulaReading reading = kCalibratedReading);

/// Index of the critical manifold of weight d; 0 for the constant class.
int morse_index(const WeightVector& d, FormulaReading reading = kCalibratedReading);

struct CalibrationCase {
    WeightVector weights;
    int oracle_index;
};

/// Readings that reproduce every oracle value. Throws if none does.
std::vector<FormulaReading> calibrate_formula_reading(const std::vector<CalibrationCase>& cases);

/// Traceless weight vectors of rank r with index <= bound.
std::vector<WeightVector> enumerate_low_index_weights(int r, int bound,
                                                      FormulaReading reading = kCalibratedReading);

/// Dimension of the manifold of circle subgroups conjugate to diag(d).
int critical_manifold_dim(const WeightVector& d);

}  // namespace splitlab
