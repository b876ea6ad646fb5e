#include "splitlab/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/SVD>
#include <unsupported/Eigen/FFT>
#include <unsupported/Eigen/MatrixFunctions>

namespace splitlab {

namespace {
constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);
}  // namespace

double SphereGrid::drho() const { return kPi / m_rho; }
double SphereGrid::dtheta() const { return 2.0 * kPi / n_theta; }
double SphereGrid::rho(int i) const { return kPi * i / m_rho; }
double SphereGrid::theta(int j) const { return 2.0 * kPi * j / n_theta; }

void SphereGrid::validate() const {
    if (m_rho < 40 || m_rho % 40 != 0) throw ValidationError("SphereGrid: m_rho must be a positive multiple of 40");
    if (n_theta < 8 || n_theta % 2 != 0) throw ValidationError("SphereGrid: n_theta must be even and >= 8");
}

double SphereMetric::area() const { return 4.0 * kPi * radius * radius; }

SphereMetric round_metric(const SphereGrid& grid, double area) {
    grid.validate();
    SphereMetric g;
    g.grid = grid;
    g.radius = area > 0.0 ? std::sqrt(area / (4.0 * kPi)) : 1.0;
    g.area_element.resize(static_cast<std::size_t>(grid.m_rho + 1));
    for (int i = 0; i <= grid.m_rho; ++i) g.area_element[i] = g.radius * g.radius * std::sin(grid.rho(i));
    g.area_element.front() = 0.0;
    g.area_element.back() = 0.0;
    return g;
}

ChartField::ChartField(int first_row, int last_row, int cols, int r)
    : first(first_row), last(last_row), n_theta(cols),
      data(static_cast<std::size_t>((last_row - first_row + 1) * cols), Mat::Zero(r, r)) {}

namespace {

// Finite-difference weights for the m-th derivative at x0 on the given nodes (Fornberg).
std::vector<double> fd_weights(const std::vector<double>& x, double x0, int m) {
    const int n = static_cast<int>(x.size()) - 1;
    std::vector<std::vector<double>> c(static_cast<std::size_t>(n + 1), std::vector<double>(m + 1, 0.0));
    double c1 = 1.0, c4 = x[0] - x0;
    c[0][0] = 1.0;
    for (int i = 1; i <= n; ++i) {
        const int mn = std::min(i, m);
        double c2 = 1.0;
        const double c5 = c4;
        c4 = x[i] - x0;
        for (int j = 0; j < i; ++j) {
            const double c3 = x[i] - x[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k) c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k) c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(static_cast<std::size_t>(n + 1));
    for (int i = 0; i <= n; ++i) w[i] = c[i][m];
    return w;
}

constexpr int kStencil = 9;  // eighth-order first derivatives in rho

// d/drho on the rows [first, last]; stencils shift inward at the ends.
ChartField d_drho(const ChartField& f, double h) {
    ChartField out = f;
    const int a = f.first, b = f.last;
    const int half = kStencil / 2;
    std::vector<double> nodes(kStencil);
    for (int k = 0; k < kStencil; ++k) nodes[k] = k;
    for (int i = a; i <= b; ++i) {
        const int start = std::clamp(i - half, a, b - kStencil + 1);
        const auto w = fd_weights(nodes, i - start, 1);
        for (int j = 0; j < f.n_theta; ++j) {
            Mat d = Mat::Zero(f.at(i, j).rows(), f.at(i, j).cols());
            for (int k = 0; k < kStencil; ++k) d += w[k] * f.at(start + k, j);
            out.at(i, j) = d / h;
        }
    }
    return out;
}

// Spectral derivative in theta.
ChartField d_dtheta(const ChartField& f) {
    ChartField out = f;
    const int n = f.n_theta;
    const int r = static_cast<int>(f.data.front().rows());
    Eigen::FFT<double> fft;
    std::vector<cplx> series(n), modes(n);
    for (int i = f.first; i <= f.last; ++i)
        for (int p = 0; p < r; ++p)
            for (int q = 0; q < r; ++q) {
                for (int j = 0; j < n; ++j) series[j] = f.at(i, j)(p, q);
                fft.fwd(modes, series);
                for (int k = 0; k < n; ++k) {
                    const int kk = k < n / 2 ? k : k - n;
                    modes[k] *= (k == n / 2) ? cplx(0.0) : kI * static_cast<double>(kk);
                }
                fft.inv(series, modes);
                for (int j = 0; j < n; ++j) out.at(i, j)(p, q) = series[j];
            }
    return out;
}

// Trigonometric interpolation weights for the value at angle x.
std::vector<double> trig_weights(int n, double x) {
    std::vector<double> w(n);
    for (int j = 0; j < n; ++j) {
        const double y = x - 2.0 * kPi * j / n;
        double s = 1.0 + std::cos(0.5 * n * y);
        for (int k = 1; k < n / 2; ++k) s += 2.0 * std::cos(k * y);
        w[j] = s / n;
    }
    return w;
}

std::vector<double> simpson_weights(int intervals, double h) {
    std::vector<double> w(static_cast<std::size_t>(intervals + 1));
    for (int i = 0; i <= intervals; ++i) w[i] = (i == 0 || i == intervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    for (double& x : w) x *= h / 3.0;
    return w;
}

void check_compatible_grids(const SphereGrid& a, const SphereGrid& b, const char* what) {
    if (a.m_rho != b.m_rho || a.n_theta != b.n_theta) throw ValidationError(std::string(what) + ": grid mismatch");
}

Mat identity(int r) { return Mat::Identity(r, r); }

}  // namespace

TwoChartConnection trivial_connection(const GroupSpec& spec, const SphereGrid& grid) {
    grid.validate();
    const int r = spec.rank;
    TwoChartConnection a;
    a.spec = spec;
    a.grid = grid;
    a.north_rho = ChartField(0, grid.north_last(), grid.n_theta, r);
    a.north_theta = a.north_rho;
    a.south_rho = ChartField(grid.south_first(), grid.m_rho, grid.n_theta, r);
    a.south_theta = a.south_rho;
    a.transition = ChartField(grid.south_first(), grid.north_last(), grid.n_theta, r);
    for (auto& g : a.transition.data) g = identity(r);
    a.label.assign(static_cast<std::size_t>(r), 0);
    a.construction = "trivial";
    return a;
}

TwoChartConnection make_split_connection(const WeightVector& d, const SphereGrid& grid) {
    return make_split_connection(d, grid, d.sum() == 0);
}

TwoChartConnection make_split_connection(const WeightVector& d, const SphereGrid& grid, bool special) {
    if (special && d.sum() != 0) throw ValidationError("make_split_connection: SU(r) needs sum d = 0");
    const int r = d.rank();
    TwoChartConnection a = trivial_connection(GroupSpec(r, special), grid);
    // A_N = -i d (1 - cos rho)/2 dtheta, A_S = +i d (1 + cos rho)/2 dtheta, g = exp(-i d theta)
    for (int i = a.north_theta.first; i <= a.north_theta.last; ++i)
        for (int j = 0; j < grid.n_theta; ++j)
            for (int p = 0; p < r; ++p) a.north_theta.at(i, j)(p, p) = -kI * (d.d[p] * (1.0 - std::cos(grid.rho(i))) / 2.0);
    for (int i = a.south_theta.first; i <= a.south_theta.last; ++i)
        for (int j = 0; j < grid.n_theta; ++j)
            for (int p = 0; p < r; ++p) a.south_theta.at(i, j)(p, p) = kI * (d.d[p] * (1.0 + std::cos(grid.rho(i))) / 2.0);
    for (int i = a.transition.first; i <= a.transition.last; ++i)
        for (int j = 0; j < grid.n_theta; ++j)
            for (int p = 0; p < r; ++p) a.transition.at(i, j)(p, p) = std::exp(-kI * (d.d[p] * grid.theta(j)));
    a.label = d.d;
    a.construction = "split";
    return a;
}

double overlap_mismatch(const TwoChartConnection& a) {
    const ChartField& g = a.transition;
    const ChartField dg_rho = d_drho(g, a.grid.drho());
    const ChartField dg_theta = d_dtheta(g);
    double worst = 0.0;
    for (int i = g.first; i <= g.last; ++i)
        for (int j = 0; j < g.n_theta; ++j) {
            const Mat& gij = g.at(i, j);
            const Mat ginv = gij.adjoint();
            const Mat er = a.south_rho.at(i, j) - (gij * a.north_rho.at(i, j) * ginv - dg_rho.at(i, j) * ginv);
            const Mat et = a.south_theta.at(i, j) - (gij * a.north_theta.at(i, j) * ginv - dg_theta.at(i, j) * ginv);
            worst = std::max({worst, op_norm(er), op_norm(et)});
        }
    return worst;
}

void validate_connection(const TwoChartConnection& a, double tol) {
    a.grid.validate();
    const SphereGrid& G = a.grid;
    const int r = a.spec.rank;
    auto check_chart = [&](const ChartField& f, int first, int last, const char* name) {
        if (f.first != first || f.last != last || f.n_theta != G.n_theta || f.data.size() != static_cast<std::size_t>(f.rows() * G.n_theta))
            throw InvalidConnectionError(std::string("connection: bad layout of ") + name);
        for (const auto& m : f.data) {
            if (m.rows() != r || m.cols() != r) throw InvalidConnectionError(std::string("connection: bad block size in ") + name);
            if (!is_skew_hermitian(m, 1e-9)) throw InvalidConnectionError(std::string("connection: ") + name + " not skew-Hermitian");
            if (a.spec.special && std::abs(m.trace()) > 1e-9)
                throw InvalidConnectionError(std::string("connection: ") + name + " not traceless");
        }
    };
    check_chart(a.north_rho, 0, G.north_last(), "north A_rho");
    check_chart(a.north_theta, 0, G.north_last(), "north A_theta");
    check_chart(a.south_rho, G.south_first(), G.m_rho, "south A_rho");
    check_chart(a.south_theta, G.south_first(), G.m_rho, "south A_theta");
    for (int j = 0; j < G.n_theta; ++j)
        if (op_norm(a.north_theta.at(0, j)) > tol || op_norm(a.south_theta.at(G.m_rho, j)) > tol)
            throw InvalidConnectionError("connection: A_theta does not vanish at a pole");
    if (a.transition.first != G.south_first() || a.transition.last != G.north_last())
        throw InvalidConnectionError("connection: transition must cover the overlap annulus");
    for (const auto& g : a.transition.data)
        if (!is_unitary(g, 1e-9)) throw InvalidConnectionError("connection: transition not unitary");
    const double mm = overlap_mismatch(a);
    if (mm > tol) {
        std::ostringstream os;
        os << "connection: charts disagree on the overlap by " << mm;
        throw InvalidConnectionError(os.str());
    }
}

CurvatureField curvature_field(const TwoChartConnection& a) {
    validate_connection(a);
    auto chart = [&](const ChartField& ar, const ChartField& at) {
        ChartField f = d_drho(at, a.grid.drho());
        const ChartField dr = d_dtheta(ar);
        for (std::size_t k = 0; k < f.data.size(); ++k) {
            const Mat& x = ar.data[k];
            const Mat& y = at.data[k];
            f.data[k] += -dr.data[k] + x * y - y * x;
            f.data[k] = project_algebra(f.data[k], GroupSpec(static_cast<int>(x.rows()), false));
        }
        return f;
    };
    return {chart(a.north_rho, a.north_theta), chart(a.south_rho, a.south_theta)};
}

CurvatureField normalized_curvature(const TwoChartConnection& a, const SphereMetric& g) {
    check_compatible_grids(a.grid, g.grid, "normalized_curvature");
    CurvatureField f = curvature_field(a);
    const int m = a.grid.m_rho;
    const double r2 = g.radius * g.radius;
    auto scale = [&](ChartField& c) {
        for (int i = c.first; i <= c.last; ++i) {
            if (i == 0 || i == m) continue;
            for (int j = 0; j < c.n_theta; ++j) c.at(i, j) /= r2 * std::sin(a.grid.rho(i));
        }
    };
    scale(f.north);
    scale(f.south);
    // At a pole the normalized field is a single matrix: polynomial
    // extrapolation from the neighbouring rows, averaged over theta.
    std::vector<double> nodes(6);
    for (int k = 0; k < 6; ++k) nodes[k] = k + 1;
    const auto w = fd_weights(nodes, 0.0, 0);
    auto pole = [&](ChartField& c, int i0, int step) {
        Mat avg = Mat::Zero(a.spec.rank, a.spec.rank);
        for (int j = 0; j < c.n_theta; ++j)
            for (int k = 0; k < 6; ++k) avg += w[k] * c.at(i0 + (k + 1) * step, j);
        avg /= c.n_theta;
        for (int j = 0; j < c.n_theta; ++j) c.at(i0, j) = avg;
    };
    pole(f.north, 0, 1);
    pole(f.south, m, -1);
    return f;
}

double ym_energy(const TwoChartConnection& a, const SphereMetric& g) {
    check_compatible_grids(a.grid, g.grid, "ym_energy");
    const CurvatureField f = curvature_field(a);
    const SphereGrid& G = a.grid;
    const int half = G.equator();
    const auto w = simpson_weights(half, G.drho());
    const double kappa = a.spec.metric_scale;
    double total = 0.0;
    // |F|^2 dvol = |F_{rho theta}|^2 / (R^2 sin rho) drho dtheta; the north
    // chart covers [0, pi/2], the south chart [pi/2, pi].
    for (int k = 0; k <= half; ++k) {
        const int in = k, is = half + k;
        double row = 0.0;
        if (in != 0) {
            double s = 0.0;
            for (int j = 0; j < G.n_theta; ++j) s += norm_sq_raw(f.north.at(in, j), kappa);
            row += w[k] * s / std::sin(G.rho(in));
        }
        if (is != G.m_rho) {
            double s = 0.0;
            for (int j = 0; j < G.n_theta; ++j) s += norm_sq_raw(f.south.at(is, j), kappa);
            row += w[k] * s / std::sin(G.rho(is));
        }
        total += row;
    }
    return total * G.dtheta() / (g.radius * g.radius);
}

double curvature_sup_norm(const TwoChartConnection& a, const SphereMetric& g) {
    const CurvatureField f = normalized_curvature(a, g);
    const SphereGrid& G = a.grid;
    // pointwise norms on the whole sphere: north rows up to the equator, south beyond
    auto norm_at = [&](int i, int j) {
        j = ((j % G.n_theta) + G.n_theta) % G.n_theta;
        return op_norm(i <= G.equator() ? f.north.at(i, j) : f.south.at(i, j));
    };
    double best = -1.0;
    int bi = 0, bj = 0;
    for (int i = 0; i <= G.m_rho; ++i)
        for (int j = 0; j < G.n_theta; ++j) {
            const double v = norm_at(i, j);
            if (v > best) {
                best = v;
                bi = i;
                bj = j;
            }
        }
    // parabolic refinement of the peak between grid points
    auto lift = [](double lo, double mid, double hi) {
        const double curv = lo - 2.0 * mid + hi;
        if (curv >= 0.0) return 0.0;
        return std::max(0.0, -(hi - lo) * (hi - lo) / (8.0 * curv));
    };
    double extra = lift(norm_at(bi, bj - 1), best, norm_at(bi, bj + 1));
    if (bi > 0 && bi < G.m_rho) extra += lift(norm_at(bi - 1, bj), best, norm_at(bi + 1, bj));
    return best + extra;
}

ChernResult chern_integral(const TwoChartConnection& a) {
    const CurvatureField f = curvature_field(a);
    const SphereGrid& G = a.grid;
    const int half = G.equator();
    const auto w = simpson_weights(half, G.drho());
    cplx total = 0.0;
    for (int k = 0; k <= half; ++k) {
        cplx s = 0.0;
        for (int j = 0; j < G.n_theta; ++j) s += f.north.at(k, j).trace() + f.south.at(half + k, j).trace();
        total += w[k] * s;
    }
    total *= G.dtheta();
    ChernResult out;
    out.raw = (kI * total / (2.0 * kPi)).real();
    out.value = static_cast<int>(std::lround(out.raw));
    out.residue = std::abs(out.raw - out.value);
    return out;
}

int chern_number(const TwoChartConnection& a, double residue_tol) {
    const ChernResult c = chern_integral(a);
    if (c.residue >= residue_tol) {
        std::ostringstream os;
        os << "chern_number: Chern-Weil integral " << c.raw << " is not within " << residue_tol << " of an integer";
        throw QuadratureError(os.str());
    }
    return c.value;
}

namespace {

// dP/drho = -A_rho P by RK4 with one grid row per step; midpoint values come
// from cubic interpolation. A pass with two rows per step (midpoint on the
// grid) gives the error estimate.
Mat transport_segment(const std::vector<Mat>& arho, double h, double& err) {
    const int r = static_cast<int>(arho.front().rows());
    const int n = static_cast<int>(arho.size());
    auto rk4 = [&](const Mat& p, const Mat& a0, const Mat& am, const Mat& a1, double hh) {
        const Mat k1 = -a0 * p;
        const Mat k2 = -am * (p + 0.5 * hh * k1);
        const Mat k3 = -am * (p + 0.5 * hh * k2);
        const Mat k4 = -a1 * (p + hh * k3);
        return Mat(p + (hh / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    };
    auto mid = [&](int i) -> Mat {
        if (i == 0) return (5.0 * arho[0] + 15.0 * arho[1] - 5.0 * arho[2] + arho[3]) / 16.0;
        if (i == n - 2) return (5.0 * arho[n - 1] + 15.0 * arho[n - 2] - 5.0 * arho[n - 3] + arho[n - 4]) / 16.0;
        return (-arho[i - 1] + 9.0 * arho[i] + 9.0 * arho[i + 1] - arho[i + 2]) / 16.0;
    };
    Mat fine = identity(r), coarse = identity(r);
    for (int i = 0; i + 1 < n; ++i) fine = rk4(fine, arho[i], mid(i), arho[i + 1], h);
    for (int i = 0; i + 2 < n; i += 2) coarse = rk4(coarse, arho[i], arho[i + 1], arho[i + 2], 2.0 * h);
    err = std::max(err, op_norm(fine - coarse) / 15.0);
    return fine;
}

Mat sample_column(const ChartField& f, int i, const std::vector<double>& w, int exact_col) {
    if (exact_col >= 0) return f.at(i, exact_col);
    Mat out = Mat::Zero(f.at(i, 0).rows(), f.at(i, 0).cols());
    for (int j = 0; j < f.n_theta; ++j) out += w[j] * f.at(i, j);
    return out;
}

Mat ray_transport(const TwoChartConnection& a, double theta, int ray, double step_tol) {
    const SphereGrid& G = a.grid;
    const int n = G.n_theta;
    const double pos = theta / G.dtheta();
    const int col = static_cast<int>(std::lround(pos));
    const int exact = std::abs(pos - col) < 1e-12 ? col % n : -1;
    std::vector<double> w;
    if (exact < 0) w = trig_weights(n, theta);
    const int mid = G.equator();
    std::vector<Mat> north, south;
    for (int i = 0; i <= mid; ++i) north.push_back(sample_column(a.north_rho, i, w, exact));
    for (int i = mid; i <= G.m_rho; ++i) south.push_back(sample_column(a.south_rho, i, w, exact));
    double err = 0.0;
    const Mat pn = transport_segment(north, G.drho(), err);
    const Mat g = unitary_polar(sample_column(a.transition, mid, w, exact));
    const Mat ps = transport_segment(south, G.drho(), err);
    if (err > step_tol) {
        std::ostringstream os;
        os << "radial_trivialization: transport along ray " << ray << " has step error " << err
           << "; refine m_rho";
        throw IntegrationError(os.str(), ray);
    }
    return unitary_polar(ps * g * pn);
}

DiscreteLoop assemble_rad(const TwoChartConnection& a, const std::vector<Mat>& p) {
    DiscreteLoop loop;
    loop.spec = a.spec;
    loop.samples.resize(p.size());
    const Mat p0 = p.front();
    for (std::size_t k = 0; k < p.size(); ++k) {
        Mat s = unitary_polar(p[k].adjoint() * p0);
        if (a.spec.special) {
            const cplx det = s.determinant();
            s *= std::exp(-kI * std::arg(det) / static_cast<double>(a.spec.rank));
        }
        loop.samples[k] = s;
    }
    loop.samples.front() = identity(a.spec.rank);
    validate_loop(loop);
    return loop;
}

}  // namespace

DiscreteLoop radial_trivialization(const TwoChartConnection& a, int n, double step_tol) {
    validate_connection(a);
    if (n < 8) throw ValidationError("radial_trivialization: need at least 8 rays");
    std::vector<Mat> p(static_cast<std::size_t>(n));
    std::string failure;
    int failed_ray = -1;
#pragma omp parallel for schedule(static)
    for (int k = 0; k < n; ++k) {
        try {
            p[k] = ray_transport(a, 2.0 * kPi * k / n, k, step_tol);
        } catch (const IntegrationError& e) {
#pragma omp critical
            if (failed_ray < 0 || k < failed_ray) {
                failed_ray = k;
                failure = e.what();
            }
        }
    }
    if (failed_ray >= 0) throw IntegrationError(failure, failed_ray);
    return assemble_rad(a, p);
}

DiscreteLoop radial_trivialization_serial(const TwoChartConnection& a, int n, double step_tol) {
    validate_connection(a);
    if (n < 8) throw ValidationError("radial_trivialization: need at least 8 rays");
    std::vector<Mat> p(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) p[k] = ray_transport(a, 2.0 * kPi * k / n, k, step_tol);
    return assemble_rad(a, p);
}

GaugeGenerator random_gauge_generator(const GroupSpec& spec, std::mt19937_64& rng, double amplitude,
                                      bool unitary, GaugeShape shape, Chart chart, int modes) {
    if (amplitude < 0.0) throw ValidationError("random_gauge_generator: amplitude must be >= 0");
    GaugeGenerator gen;
    gen.chart = chart;
    // support stays inside the part of the chart outside the overlap, away from the pole
    if (chart == Chart::North) {
        gen.rho_a = 0.02 * kPi;
        gen.rho_b = 0.39 * kPi;
    } else {
        gen.rho_a = 0.61 * kPi;
        gen.rho_b = 0.98 * kPi;
    }
    const int r = spec.rank;
    std::normal_distribution<double> normal;
    const int terms = 4 * (modes + 1) - 2;  // sin(0 theta) terms vanish
    auto draw = [&](bool zero) {
        if (zero) return Mat(Mat::Zero(r, r));
        Mat m(r, r);
        for (int p = 0; p < r; ++p)
            for (int q = 0; q < r; ++q) m(p, q) = cplx(normal(rng), normal(rng));
        if (shape == GaugeShape::Diagonal) m = Mat(m.diagonal().asDiagonal());
        if (unitary) m = project_algebra(m, spec);
        else if (spec.special) m -= (m.trace() / static_cast<double>(r)) * Mat::Identity(r, r);
        const double nrm = op_norm(m);
        return Mat(nrm > 0.0 ? Mat(m * (amplitude / (terms * nrm))) : m);
    };
    for (int k = 0; k <= modes; ++k) {
        gen.cos_c.push_back(draw(false));
        gen.cos_d.push_back(draw(false));
        gen.sin_c.push_back(draw(k == 0));
        gen.sin_d.push_back(draw(k == 0));
    }
    return gen;
}

namespace {

struct GeneratorSample {
    Mat x, x_rho, x_theta;
};

GeneratorSample eval_generator(const GaugeGenerator& gen, double rho, double theta) {
    const int r = gen.rank();
    GeneratorSample out{Mat::Zero(r, r), Mat::Zero(r, r), Mat::Zero(r, r)};
    const double half = 0.5 * (gen.rho_b - gen.rho_a);
    const double s = (rho - 0.5 * (gen.rho_a + gen.rho_b)) / half;
    if (std::abs(s) >= 1.0) return out;
    // cos^8(pi s / 2): flat to seventh order at the ends of the support
    const double q = 0.5 * (1.0 + std::cos(kPi * s));
    const double bump = q * q * q * q;
    const double dbump = -2.0 * kPi * q * q * q * std::sin(kPi * s) / half;
    Mat p = Mat::Zero(r, r), p_s = Mat::Zero(r, r), p_t = Mat::Zero(r, r);
    for (std::size_t k = 0; k < gen.cos_c.size(); ++k) {
        const double c = std::cos(k * theta), sn = std::sin(k * theta);
        const Mat cc = gen.cos_c[k] + s * gen.cos_d[k];
        const Mat ss = gen.sin_c[k] + s * gen.sin_d[k];
        p += c * cc + sn * ss;
        p_s += c * gen.cos_d[k] + sn * gen.sin_d[k];
        p_t += static_cast<double>(k) * (-sn * cc + c * ss);
    }
    out.x = bump * p;
    out.x_rho = dbump * p + bump * p_s / half;
    out.x_theta = bump * p_t;
    return out;
}

void fill_gauge_chart(const SphereGrid& G, const GaugeGenerator& gen, ChartField& v, ChartField& vr, ChartField& vt) {
    const int r = gen.rank();
    for (int i = v.first; i <= v.last; ++i)
        for (int j = 0; j < G.n_theta; ++j) {
            const GeneratorSample s = eval_generator(gen, G.rho(i), G.theta(j));
            if (s.x.isZero(0.0) && s.x_rho.isZero(0.0)) continue;
            // exp of the block matrix [[X, X_rho, X_theta], [0, X, 0], [0, 0, X]]
            // carries exp(X) and its two directional derivatives in its top row.
            Mat big = Mat::Zero(3 * r, 3 * r);
            for (int b = 0; b < 3; ++b) big.block(b * r, b * r, r, r) = s.x;
            big.block(0, r, r, r) = s.x_rho;
            big.block(0, 2 * r, r, r) = s.x_theta;
            const Mat e = big.exp();
            v.at(i, j) = e.block(0, 0, r, r);
            vr.at(i, j) = e.block(0, r, r, r);
            vt.at(i, j) = e.block(0, 2 * r, r, r);
        }
}

}  // namespace

GaugeField identity_gauge(const SphereGrid& grid, int r) {
    grid.validate();
    GaugeField u;
    u.north = ChartField(0, grid.north_last(), grid.n_theta, r);
    u.south = ChartField(grid.south_first(), grid.m_rho, grid.n_theta, r);
    u.north_drho = u.north_dtheta = u.north;
    u.south_drho = u.south_dtheta = u.south;
    for (auto& m : u.north.data) m = identity(r);
    for (auto& m : u.south.data) m = identity(r);
    return u;
}

GaugeField gauge_field(const SphereGrid& grid, const GaugeGenerator& gen) {
    const double lo = gen.chart == Chart::North ? 0.0 : grid.rho(grid.north_last());
    const double hi = gen.chart == Chart::North ? grid.rho(grid.south_first()) : kPi;
    if (gen.rho_a <= lo || gen.rho_b >= hi || gen.rho_a >= gen.rho_b)
        throw ValidationError("gauge_field: generator support must lie inside its chart, off the overlap and poles");
    GaugeField u = identity_gauge(grid, gen.rank());
    if (gen.chart == Chart::North)
        fill_gauge_chart(grid, gen, u.north, u.north_drho, u.north_dtheta);
    else
        fill_gauge_chart(grid, gen, u.south, u.south_drho, u.south_dtheta);
    return u;
}

namespace {

void check_gauge_layout(const TwoChartConnection& a, const GaugeField& u) {
    if (u.north.first != a.north_rho.first || u.north.last != a.north_rho.last || u.south.first != a.south_rho.first ||
        u.south.last != a.south_rho.last || u.north.n_theta != a.grid.n_theta)
        throw ValidationError("gauge field does not match the connection grid");
}

// h_S = g h_N g^-1 on the overlap, so that h is a global bundle map.
void check_gauge_overlap(const TwoChartConnection& a, const GaugeField& h) {
    const ChartField& g = a.transition;
    for (int i = g.first; i <= g.last; ++i)
        for (int j = 0; j < g.n_theta; ++j) {
            const Mat lhs = h.south.at(i, j) * g.at(i, j);
            const Mat rhs = g.at(i, j) * h.north.at(i, j);
            if (op_norm(lhs - rhs) > 1e-8) throw ValidationError("gauge field is not compatible with the transition");
        }
}

}  // namespace

TwoChartConnection unitary_gauge_transform(const TwoChartConnection& a, const GaugeField& u) {
    validate_connection(a);
    check_gauge_layout(a, u);
    TwoChartConnection out = a;
    auto chart = [&](const ChartField& v, const ChartField& vr, const ChartField& vt, ChartField& ar, ChartField& at) {
        for (std::size_t k = 0; k < v.data.size(); ++k) {
            if (!is_unitary(v.data[k], 1e-9)) throw ValidationError("unitary_gauge_transform: gauge not unitary");
            const Mat vi = v.data[k].adjoint();
            ar.data[k] = project_algebra(vi * ar.data[k] * v.data[k] + vi * vr.data[k], a.spec);
            at.data[k] = project_algebra(vi * at.data[k] * v.data[k] + vi * vt.data[k], a.spec);
        }
    };
    chart(u.north, u.north_drho, u.north_dtheta, out.north_rho, out.north_theta);
    chart(u.south, u.south_drho, u.south_dtheta, out.south_rho, out.south_theta);
    for (int i = out.transition.first; i <= out.transition.last; ++i)
        for (int j = 0; j < out.transition.n_theta; ++j)
            out.transition.at(i, j) = u.south.at(i, j).adjoint() * a.transition.at(i, j) * u.north.at(i, j);
    out.construction = a.construction + "+gauge";
    return out;
}

TwoChartConnection complex_gauge_perturb(const TwoChartConnection& a, const GaugeField& h, double condition_cap) {
    validate_connection(a);
    check_gauge_layout(a, h);
    check_gauge_overlap(a, h);
    const SphereGrid& G = a.grid;
    TwoChartConnection out = a;
    auto chart = [&](const ChartField& v, const ChartField& vr, const ChartField& vt, ChartField& ar, ChartField& at) {
        for (int i = v.first; i <= v.last; ++i) {
            const double s = std::sin(G.rho(i));
            for (int j = 0; j < G.n_theta; ++j) {
                const Mat& hv = v.at(i, j);
                const bool trivial = hv.isIdentity(0.0) && vr.at(i, j).isZero(0.0) && vt.at(i, j).isZero(0.0);
                if (trivial) continue;
                if (i == 0 || i == G.m_rho)
                    throw ValidationError("complex_gauge_perturb: h must be the identity at the poles");
                Eigen::JacobiSVD<Mat> svd(hv);
                const auto& sv = svd.singularValues();
                if (sv(0) > condition_cap * sv(sv.size() - 1)) {
                    std::ostringstream os;
                    os << "complex_gauge_perturb: condition number " << sv(0) / sv(sv.size() - 1) << " exceeds cap";
                    throw IllConditionedGaugeError(os.str());
                }
                const Mat hi = hv.inverse();
                const Mat au = s * ar.at(i, j);
                const Mat z = au + kI * at.at(i, j);
                const Mat zp = hi * z * hv + hi * (s * vr.at(i, j) + kI * vt.at(i, j));
                const Mat new_u = 0.5 * (zp - zp.adjoint());
                const Mat new_t = (-0.5 * kI) * (zp + zp.adjoint());
                ar.at(i, j) = project_algebra(new_u / s, a.spec);
                at.at(i, j) = project_algebra(new_t, a.spec);
            }
        }
    };
    chart(h.north, h.north_drho, h.north_dtheta, out.north_rho, out.north_theta);
    chart(h.south, h.south_drho, h.south_dtheta, out.south_rho, out.south_theta);
    out.construction = a.construction + "+complex-gauge";
    return out;
}

GromovRecord gromov_check(const TwoChartConnection& a, const SphereMetric& g, const WeightVector& d) {
    GromovRecord rec;
    rec.lhs = curvature_sup_norm(a, g) * g.area();
    rec.rhs = d.max_abs();
    rec.satisfied = rec.lhs >= rec.rhs - 1e-3;
    return rec;
}

}  // namespace splitlab
