#pragma once

#include <string>
#include <vector>

#include "splitlab/loopspace.hpp"

namespace splitlab {

class UndersamplingError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class TruncationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class NumericalRankError : public std::runtime_error {
  public:
    NumericalRankError(const std::string& msg, std::vector<int> ks)
        : std::runtime_error(msg), offending_k(std::move(ks)) {}
    std::vector<int> offending_k;
};

class SmoothnessError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// gamma(z) = sum_{k=-m}^{m} A_k z^k.
///
/// Sign convention: sections over the 0-chart are polynomial vectors p(z) with
/// z^{-k} gamma(z) p(z) holomorphic in 1/z, so diag(z^{-d_1},...,z^{-d_r})
/// clutches O(d_1)+...+O(d_r) and det_winding(gamma) = -sum d_i. A sampled
/// loop g(t) is read with z = exp(-2 pi i t), which sends geodesic_loop(d)
/// to diag(z^{-d}).
struct LaurentLoop {
    int rank = 1;
    int degree = 0;
    std::vector<Mat> coeffs;  // index k + degree

    LaurentLoop() = default;
    LaurentLoop(int r, int m);

    const Mat& coeff(int k) const { return coeffs[static_cast<std::size_t>(k + degree)]; }
    Mat& coeff(int k) { return coeffs[static_cast<std::size_t>(k + degree)]; }
    Mat operator()(cplx z) const;

    static LaurentLoop monomial_diag(const std::vector<int>& exponents);
    LaurentLoop operator*(const LaurentLoop& other) const;
};

inline constexpr int kConventionSign = -1;  // det_winding = kConventionSign * sum d
inline constexpr const char* kConventionTag =
    "z=exp(-2pi i t); diag(z^-d) clutches O(d); det_winding=-sum(d); chern=sum(d)";

struct BirkhoffOptions {
    int circle_samples = 1024;
    double condition_cap = 1e8;
    double rank_rel_tol = 1e-7;
};

/// Throws ValidationError if gamma is singular or badly conditioned on the circle.
void validate_laurent(const LaurentLoop& gamma, const BirkhoffOptions& opt = {});

int det_winding(const LaurentLoop& gamma, int samples = 1024);

/// Kernel dimension of p -> (positive modes of z^{-k} gamma p), deg p <= K.
int h0_twisted_at(const LaurentLoop& gamma, int k, int truncation, const BirkhoffOptions& opt = {});
/// As above, checked for stability under truncation -> truncation + 2.
int h0_twisted(const LaurentLoop& gamma, int k, int truncation, const BirkhoffOptions& opt = {});
int default_truncation(const LaurentLoop& gamma, int k);

struct SplittingReport {
    WeightVector weights;
    std::vector<std::pair<int, int>> h0;  // (k, h0(k))
};

SplittingReport splitting_report(const LaurentLoop& gamma, const BirkhoffOptions& opt = {});
WeightVector splitting_type(const LaurentLoop& gamma, const BirkhoffOptions& opt = {});

/// DFT of the samples truncated to modes [-m, m].
LaurentLoop loop_to_laurent(const DiscreteLoop& loop, int m, double decay_tol = 1e-8);
/// Smallest m whose tail is below decay_tol.
LaurentLoop loop_to_laurent_auto(const DiscreteLoop& loop, double decay_tol = 1e-8);
/// Largest Fourier coefficient (operator norm) of modes |k| > m.
double fourier_tail(const DiscreteLoop& loop, int m);
/// Modes |k| <= m of the samples with no decay check (a low-pass projection).
LaurentLoop truncated_laurent(const DiscreteLoop& loop, int m);

/// gamma_minus * diag(z^{-d}) * gamma_plus with random unipotent triangular factors.
LaurentLoop planted_factorization(const WeightVector& d, std::mt19937_64& rng, int factor_degree = 1,
                                  double amplitude = 0.5);

/// Based unitary loop in the same Birkhoff stratum as gamma (the inner factor
/// of gamma * H_+), sampled at n points.
DiscreteLoop unitary_representative(const LaurentLoop& gamma, int n, bool special, int truncation = 0);

}  // namespace splitlab
