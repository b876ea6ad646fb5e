#pragma once

#include <string>
#include <vector>

#include "splitlab/loopspace.hpp"

namespace splitlab {

class InvalidConnectionError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class IntegrationError : public std::runtime_error {
  public:
    IntegrationError(const std::string& msg, int r) : std::runtime_error(msg), ray(r) {}
    int ray;
};

class IllConditionedGaugeError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class QuadratureError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Colatitude rho_i = i*pi/m_rho (i = 0..m_rho), longitude theta_j = 2*pi*j/n_theta.
/// The north chart holds rows 0..0.6*m_rho, the south chart 0.4*m_rho..m_rho.
struct SphereGrid {
    int m_rho = 160;  // multiple of 40
    int n_theta = 64;

    double drho() const;
    double dtheta() const;
    double rho(int i) const;
    double theta(int j) const;
    int north_last() const { return 3 * m_rho / 5; }
    int south_first() const { return 2 * m_rho / 5; }
    int equator() const { return m_rho / 2; }
    void validate() const;
};

/// Round sphere of the given radius.
struct SphereMetric {
    SphereGrid grid;
    double radius = 1.0;
    std::vector<double> area_element;  // R^2 sin(rho_i), shared by both charts

    double area() const;
};

SphereMetric round_metric(const SphereGrid& grid, double area = 0.0);  // area <= 0: unit sphere

enum class Chart { North, South };

/// Matrix samples on the rows [first, last] of one chart.
struct ChartField {
    int first = 0;
    int last = 0;
    int n_theta = 0;
    std::vector<Mat> data;

    ChartField() = default;
    ChartField(int first_row, int last_row, int cols, int r);

    int rows() const { return last - first + 1; }
    Mat& at(int i, int j) { return data[static_cast<std::size_t>((i - first) * n_theta + j)]; }
    const Mat& at(int i, int j) const { return data[static_cast<std::size_t>((i - first) * n_theta + j)]; }
};

/// A = A_rho drho + A_theta dtheta in each chart; on the overlap
/// A_S = g A_N g^-1 - dg g^-1 (sections: psi_S = g psi_N).
struct TwoChartConnection {
    GroupSpec spec;
    SphereGrid grid;
    ChartField north_rho, north_theta;
    ChartField south_rho, south_theta;
    ChartField transition;  // overlap rows
    std::vector<int> label;  // construction type, empty if unknown
    std::string construction;

    const ChartField& a_rho(Chart c) const { return c == Chart::North ? north_rho : south_rho; }
    const ChartField& a_theta(Chart c) const { return c == Chart::North ? north_theta : south_theta; }
};

TwoChartConnection trivial_connection(const GroupSpec& spec, const SphereGrid& grid);

/// Sum of the constant-curvature connections on O(d_i).
TwoChartConnection make_split_connection(const WeightVector& d, const SphereGrid& grid);
TwoChartConnection make_split_connection(const WeightVector& d, const SphereGrid& grid, bool special);

/// Largest overlap mismatch |A_S - (g A_N g^-1 - dg g^-1)|.
double overlap_mismatch(const TwoChartConnection& a);
void validate_connection(const TwoChartConnection& a, double tol = 1e-5);

/// F_{rho theta} per chart (rows of the chart, all columns).
struct CurvatureField {
    ChartField north, south;
};

CurvatureField curvature_field(const TwoChartConnection& a);

/// |F|_g = F_{rho theta} / (R^2 sin rho) at every grid point; pole rows are extrapolated.
CurvatureField normalized_curvature(const TwoChartConnection& a, const SphereMetric& g);

double ym_energy(const TwoChartConnection& a, const SphereMetric& g);
double curvature_sup_norm(const TwoChartConnection& a, const SphereMetric& g);

struct ChernResult {
    int value = 0;
    double raw = 0.0;
    double residue = 0.0;
};

ChernResult chern_integral(const TwoChartConnection& a);
int chern_number(const TwoChartConnection& a, double residue_tol = 1e-3);

/// Rad(A)(t_k) = P_k^-1 P_0, P_k the transport from the north to the south pole
/// along the ray theta = 2 pi k / n.
DiscreteLoop radial_trivialization(const TwoChartConnection& a, int n, double step_tol = 1e-6);
DiscreteLoop radial_trivialization_serial(const TwoChartConnection& a, int n, double step_tol = 1e-6);

/// Gauge transformation sampled with exact first derivatives on both charts.
/// Off-support entries are the identity.
struct GaugeField {
    ChartField north, north_drho, north_dtheta;
    ChartField south, south_drho, south_dtheta;
};

/// X(rho, theta) = bump(rho) * sum_n [cos(n theta)(C_n + s D_n) + sin(n theta)(S_n + s T_n)],
/// s in [-1, 1] across the support; the gauge is exp(X).
struct GaugeGenerator {
    Chart chart = Chart::North;
    double rho_a = 0.0, rho_b = 0.0;
    std::vector<Mat> cos_c, cos_d, sin_c, sin_d;  // index n = 0..modes

    int rank() const { return cos_c.empty() ? 0 : static_cast<int>(cos_c[0].rows()); }
};

enum class GaugeShape {
    General,
    Diagonal,  // commutes with the splitting of a split connection
};

/// Random generator with sup |X| <= amplitude. unitary=true gives skew-Hermitian X.
GaugeGenerator random_gauge_generator(const GroupSpec& spec, std::mt19937_64& rng, double amplitude,
                                      bool unitary, GaugeShape shape = GaugeShape::General,
                                      Chart chart = Chart::North, int modes = 2);

GaugeField gauge_field(const SphereGrid& grid, const GaugeGenerator& gen);
GaugeField identity_gauge(const SphereGrid& grid, int r);

/// A -> u^-1 A u + u^-1 du; the transition becomes u_S^-1 g u_N.
TwoChartConnection unitary_gauge_transform(const TwoChartConnection& a, const GaugeField& u);

/// Chern connection of the holomorphic structure h^* dbar_A for the fixed
/// Hermitian metric: with a = A_u + i A_theta (u = log tan(rho/2)),
/// a' = h^-1 a h + h^-1 (d_u h + i d_theta h), A' = unitary part of a'.
TwoChartConnection complex_gauge_perturb(const TwoChartConnection& a, const GaugeField& h,
                                         double condition_cap = 1e6);

struct GromovRecord {
    double lhs = 0.0;  // sup |F|_g * area
    double rhs = 0.0;  // max |d_i|
    bool satisfied = false;
};

GromovRecord gromov_check(const TwoChartConnection& a, const SphereMetric& g, const WeightVector& d);

}  // namespace splitlab
