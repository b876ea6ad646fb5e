#include "splitlab/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace splitlab {

namespace {

constexpr double kPi = std::numbers::pi;
using Mod2 = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

double wrap01(double x) { return x - std::floor(x); }

// signed representative of x in (-1/2, 1/2]
double wrap_signed(double x) {
    const double w = wrap01(x + 0.5) - 0.5;
    return w == -0.5 ? 0.5 : w;
}

Vec3 move(const MorseBottProblem& p, const Vec3& x, const Vec3& v) {
    if (p.manifold == ModelManifold::Torus) return Vec3(wrap01(x.x() + v.x()), wrap01(x.y() + v.y()), 0.0);
    return (x + v).normalized();
}

double dist(const MorseBottProblem& p, const Vec3& a, const Vec3& b) {
    if (p.manifold == ModelManifold::Torus) return std::hypot(wrap_signed(a.x() - b.x()), wrap_signed(a.y() - b.y()));
    return (a - b).norm();
}

double dist_to(const MorseBottProblem& p, const CriticalManifold& c, const Vec3& x) {
    return dist(p, x, c.embed(c.dim == 1 ? c.locate(x) : 0.0));
}

CriticalManifold torus_circle(const std::string& name, double theta, int mb, double level) {
    CriticalManifold c;
    c.name = name;
    c.dim = 1;
    c.mb_index = mb;
    c.level = level;
    c.embed = [theta](double s) { return Vec3(theta, wrap01(s), 0.0); };
    c.locate = [](const Vec3& x) { return wrap01(x.y()); };
    c.aux_slope = [](double s) { return -2.0 * kPi * std::sin(2.0 * kPi * s); };  // aux = cos 2 pi phi
    c.aux = {{0.0, 1}, {0.5, 0}};
    c.unstable_normals = [mb](double) {
        return mb == 1 ? std::vector<Vec3>{Vec3(1, 0, 0), Vec3(-1, 0, 0)} : std::vector<Vec3>{};
    };
    return c;
}

CriticalManifold sphere_point(const std::string& name, const Vec3& at, int mb, double level) {
    CriticalManifold c;
    c.name = name;
    c.dim = 0;
    c.mb_index = mb;
    c.level = level;
    c.embed = [at](double) { return at; };
    c.locate = [](const Vec3&) { return 0.0; };
    c.aux = {{0.0, 0}};
    c.unstable_normals = [mb](double) {
        return mb == 2 ? std::vector<Vec3>{Vec3(1, 0, 0), Vec3(0, 1, 0)} : std::vector<Vec3>{};
    };
    return c;
}

}  // namespace

std::vector<std::string> builtin_problem_ids() { return {"torus", "sphere-perfect", "sphere-z2"}; }

MorseBottProblem builtin_problem(const std::string& id) {
    MorseBottProblem p;
    p.id = id;
    if (id == "torus") {
        p.manifold = ModelManifold::Torus;
        p.h = [](const Vec3& x) { return std::cos(2.0 * kPi * x.x()); };
        p.grad = [](const Vec3& x) { return Vec3(-2.0 * kPi * std::sin(2.0 * kPi * x.x()), 0.0, 0.0); };
        p.critical = {torus_circle("max-circle", 0.0, 1, 1.0), torus_circle("min-circle", 0.5, 0, -1.0)};
    } else if (id == "sphere-perfect") {
        p.manifold = ModelManifold::Sphere;
        p.h = [](const Vec3& x) { return x.z(); };
        p.grad = [](const Vec3& x) { return Vec3(Vec3::UnitZ() - x.z() * x); };
        p.critical = {sphere_point("south", -Vec3::UnitZ(), 0, -1.0), sphere_point("north", Vec3::UnitZ(), 2, 1.0)};
    } else if (id == "sphere-z2") {
        p.manifold = ModelManifold::Sphere;
        p.h = [](const Vec3& x) { return x.z() * x.z(); };
        p.grad = [](const Vec3& x) { return Vec3(2.0 * x.z() * (Vec3::UnitZ() - x.z() * x)); };
        CriticalManifold eq;
        eq.name = "equator";
        eq.dim = 1;
        eq.mb_index = 0;
        eq.level = 0.0;
        eq.embed = [](double s) { return Vec3(std::cos(2.0 * kPi * s), std::sin(2.0 * kPi * s), 0.0); };
        eq.locate = [](const Vec3& x) { return wrap01(std::atan2(x.y(), x.x()) / (2.0 * kPi)); };
        eq.aux_slope = [](double s) { return -2.0 * kPi * std::sin(2.0 * kPi * s); };
        eq.aux = {{0.0, 1}, {0.5, 0}};
        eq.unstable_normals = [](double) { return std::vector<Vec3>{}; };
        p.critical = {eq, sphere_point("north", Vec3::UnitZ(), 2, 1.0), sphere_point("south", -Vec3::UnitZ(), 2, 1.0)};
    } else {
        throw ValidationError("unknown cascade problem '" + id + "'");
    }
    return p;
}

void validate_problem(const MorseBottProblem& p, int samples) {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> nrm;
    for (int k = 0; k < samples; ++k) {
        const Vec3 x = p.manifold == ModelManifold::Torus ? Vec3(u(rng), u(rng), 0.0)
                                                            : Vec3(nrm(rng), nrm(rng), nrm(rng)).normalized();
        if (p.grad(x).norm() > 1e-6) continue;
        bool near = false;
        for (const auto& c : p.critical) near = near || dist_to(p, c, x) < 1e-3;
        if (!near) throw ValidationError("problem " + p.id + ": h is critical off the listed manifolds");
    }
    for (const auto& c : p.critical) {
        for (int k = 0; k < 16; ++k) {
            const Vec3 x = c.embed(k / 16.0);
            if (p.grad(x).norm() > 1e-10) throw ValidationError("problem " + p.id + ": " + c.name + " is not critical");
            if (std::abs(p.h(x) - c.level) > 1e-12) throw ValidationError("problem " + p.id + ": " + c.name + " level mismatch");
        }
        for (const auto& a : c.aux)
            if (c.dim == 1 && std::abs(c.aux_slope(a.param)) > 1e-10)
                throw ValidationError("problem " + p.id + ": aux point on " + c.name + " is not critical");
    }
}

Trajectory gradient_trajectory(const MorseBottProblem& p, const Vec3& x0, int direction, double length_cap) {
    Trajectory t;
    Vec3 x = x0;
    t.points.push_back(x);
    t.levels.push_back(p.h(x));
    auto field = [&](const Vec3& y) { return Vec3(-static_cast<double>(direction) * p.grad(y)); };
    auto rk4 = [&](const Vec3& y, double dt) {
        const Vec3 k1 = field(y);
        const Vec3 k2 = field(move(p, y, 0.5 * dt * k1));
        const Vec3 k3 = field(move(p, y, 0.5 * dt * k2));
        const Vec3 k4 = field(move(p, y, dt * k3));
        return move(p, y, (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
    };
    double dt = 1e-2;
    while (p.grad(x).norm() >= p.grad_tol) {
        if (t.length > length_cap) break;
        // step doubling error control
        const Vec3 full = rk4(x, dt);
        const Vec3 half = rk4(rk4(x, 0.5 * dt), 0.5 * dt);
        const double err = dist(p, full, half);
        if (err > 1e-10 && dt > 1e-8) {
            dt *= 0.5;
            continue;
        }
        t.length += dist(p, x, half);
        x = half;
        t.points.push_back(x);
        t.levels.push_back(p.h(x));
        if (err < 1e-12) dt = std::min(dt * 1.5, 0.05);
    }
    t.converged = p.grad(x).norm() < p.grad_tol;
    if (t.converged) {
        double best = 1e-4;
        for (std::size_t i = 0; i < p.critical.size(); ++i) {
            const double d = dist_to(p, p.critical[i], x);
            if (d < best) {
                best = d;
                t.arrival = static_cast<int>(i);
            }
        }
    }
    return t;
}

std::vector<Generator> cascade_generators(const MorseBottProblem& p) {
    std::vector<Generator> g;
    for (std::size_t m = 0; m < p.critical.size(); ++m) {
        const auto& c = p.critical[m];
        for (std::size_t a = 0; a < c.aux.size(); ++a) {
            std::ostringstream os;
            os << c.name;
            if (c.dim == 1) os << "@" << c.aux[a].param;
            g.push_back({static_cast<int>(m), static_cast<int>(a), c.mb_index + c.aux[a].index, os.str()});
        }
    }
    std::stable_sort(g.begin(), g.end(), [](const Generator& a, const Generator& b) { return a.degree < b.degree; });
    return g;
}

namespace {

// Follow -d aux / d param on a critical circle; returns the aux critical point reached.
int aux_descend(const CriticalManifold& c, double s) {
    double dt = 1e-3;
    for (int it = 0; it < 200000; ++it) {
        const double slope = c.aux_slope(s);
        if (std::abs(slope) < 1e-10) break;
        s = wrap01(s - dt * slope);
        dt = std::min(dt * 1.01, 0.02);
    }
    for (std::size_t a = 0; a < c.aux.size(); ++a)
        if (std::abs(wrap_signed(s - c.aux[a].param)) < 1e-6) return static_cast<int>(a);
    return -1;
}

struct Shot {
    double base = 0.0;  // circle parameter of the base point
    Vec3 dir;
};

struct ShotFamily {
    std::vector<Shot> shots;
    bool one_dimensional = false;
    bool closed = false;
};

std::vector<ShotFamily> shooting_families(const MorseBottProblem& prob, const CriticalManifold& c,
                                          const AuxCritical& pa) {
    const int m = prob.shooting_samples;
    std::vector<double> bases{pa.param};
    bool arc = false;
    if (c.dim == 1 && pa.index == 1) {
        // unstable set of an aux maximum: open arc between the neighbouring minima
        std::vector<double> mins;
        for (const auto& a : c.aux)
            if (a.index == 0) mins.push_back(wrap01(a.param - pa.param));
        if (mins.empty()) throw ValidationError("aux function without a minimum on " + c.name);
        const double right = *std::min_element(mins.begin(), mins.end());
        const double left = *std::max_element(mins.begin(), mins.end()) - 1.0;
        bases.clear();
        for (int k = 0; k < m; ++k) bases.push_back(wrap01(pa.param + left + (right - left) * (k + 0.5) / m));
        arc = true;
    }
    std::vector<ShotFamily> fams;
    if (c.mb_index == 0) return fams;
    if (c.mb_index == 1) {
        const auto normals = c.unstable_normals(pa.param);
        for (std::size_t side = 0; side < normals.size(); ++side) {
            ShotFamily f;
            f.one_dimensional = arc;
            for (double b : bases) f.shots.push_back({b, c.unstable_normals(b)[side]});
            fams.push_back(std::move(f));
        }
        return fams;
    }
    if (c.dim != 0 || c.mb_index != 2) throw ValidationError("shooting: unsupported critical manifold " + c.name);
    const auto basis = c.unstable_normals(0.0);
    ShotFamily f;
    f.one_dimensional = true;
    f.closed = true;
    for (int k = 0; k < m; ++k) {
        const double a = 2.0 * kPi * (k + 0.5) / m;  // half-step offset keeps shots off the aux points
        f.shots.push_back({0.0, std::cos(a) * basis[0] + std::sin(a) * basis[1]});
    }
    fams.push_back(std::move(f));
    return fams;
}

}  // namespace

int count_cascades(const MorseBottProblem& prob, const Generator& p, const Generator& q) {
    if (p.degree - q.degree != 1) throw PreconditionError("count_cascades: degrees must differ by one");
    const CriticalManifold& cp = prob.critical[p.manifold];
    const CriticalManifold& cq = prob.critical[q.manifold];
    const AuxCritical& pa = cp.aux[p.aux];
    const AuxCritical& qa = cq.aux[q.aux];
    if (p.manifold == q.manifold) {
        // classical Morse differential of aux on the critical circle
        if (cp.dim == 0) return 0;
        int lines = 0;
        for (double side : {-1e-3, 1e-3})
            if (aux_descend(cp, wrap01(pa.param + side)) == q.aux) ++lines;
        return lines % 2;
    }
    if (cp.level <= cq.level) return 0;

    const double eps = 1e-4;
    int count = 0;
    for (const ShotFamily& fam : shooting_families(prob, cp, pa)) {
        // landing parameter on cq of every shot, NaN if the shot ends elsewhere
        std::vector<double> land(fam.shots.size(), std::nan(""));
        const int n = static_cast<int>(fam.shots.size());
#pragma omp parallel for schedule(dynamic, 4)
        for (int k = 0; k < n; ++k) {
            const Shot& s = fam.shots[k];
            const Trajectory t = gradient_trajectory(prob, move(prob, cp.embed(s.base), eps * s.dir), 1);
            if (t.arrival == q.manifold) land[k] = cq.locate(t.points.back());
        }
        const bool point_target = cq.dim == 0 ? cq.mb_index > 0 : qa.index == 1;
        if (!point_target) {
            // open landing condition: the family must be finite
            for (int k = 0; k < n; ++k) {
                if (std::isnan(land[k])) continue;
                if (fam.one_dimensional) throw RefineResolutionError("count_cascades: cascade lines are not isolated");
                if (cq.dim == 0) {
                    ++count;
                    continue;
                }
                const int reached = aux_descend(cq, land[k]);
                if (reached < 0) throw RefineResolutionError("count_cascades: landing on an aux critical point");
                if (reached == q.aux) ++count;
            }
            continue;
        }
        if (cq.dim == 0) {
            for (int k = 0; k < n; ++k)
                if (!std::isnan(land[k])) throw RefineResolutionError("count_cascades: shot lands on an unstable point");
            continue;
        }
        // codimension one: count transversal zero crossings of the signed offset
        std::vector<double> g(land.size());
        for (int k = 0; k < n; ++k) {
            g[k] = std::isnan(land[k]) ? land[k] : wrap_signed(land[k] - qa.param);
            if (!std::isnan(g[k]) && std::abs(g[k]) < 1e-9)
                throw RefineResolutionError("count_cascades: a shot lands on the target; refine shooting");
        }
        if (!fam.one_dimensional) continue;
        const int pairs = fam.closed ? n : n - 1;
        for (int k = 0; k < pairs; ++k) {
            const double a = g[k], b = g[(k + 1) % n];
            if (std::isnan(a) || std::isnan(b)) continue;
            if (a * b < 0.0 && std::abs(a - b) < 0.25) ++count;
        }
    }
    return count % 2;
}

int rank_mod2(Mod2 m) {
    int rank = 0;
    const int rows = static_cast<int>(m.rows()), cols = static_cast<int>(m.cols());
    for (int c = 0; c < cols && rank < rows; ++c) {
        int pivot = -1;
        for (int r = rank; r < rows; ++r)
            if (m(r, c)) {
                pivot = r;
                break;
            }
        if (pivot < 0) continue;
        m.row(pivot).swap(m.row(rank));
        for (int r = 0; r < rows; ++r)
            if (r != rank && m(r, c))
                for (int k = 0; k < cols; ++k) m(r, k) ^= m(rank, k);
        ++rank;
    }
    return rank;
}

std::vector<int> homology_mod2(const CascadeComplexData& c) {
    int top = 0;
    for (const auto& g : c.generators) top = std::max(top, g.degree);
    std::vector<int> betti(static_cast<std::size_t>(top + 1), 0);
    for (const auto& g : c.generators) ++betti[g.degree];
    for (const auto& [k, d] : c.differential) {
        const int r = rank_mod2(d);
        betti[k] -= r;
        betti[k - 1] -= r;
    }
    return betti;
}

CascadeComplexData build_cascade_complex(const MorseBottProblem& p) {
    validate_problem(p);
    CascadeComplexData c;
    c.generators = cascade_generators(p);
    std::map<int, std::vector<int>> by_degree;
    for (std::size_t i = 0; i < c.generators.size(); ++i) by_degree[c.generators[i].degree].push_back(static_cast<int>(i));
    for (const auto& [k, cols] : by_degree) {
        if (!by_degree.count(k - 1)) continue;
        const auto& rows = by_degree[k - 1];
        Mod2 d = Mod2::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
        for (std::size_t j = 0; j < cols.size(); ++j)
            for (std::size_t i = 0; i < rows.size(); ++i)
                d(i, j) = static_cast<std::uint8_t>(count_cascades(p, c.generators[cols[j]], c.generators[rows[i]]));
        c.differential[k] = d;
    }
    for (const auto& [k, d] : c.differential) {
        auto it = c.differential.find(k - 1);
        if (it == c.differential.end()) continue;
        const Eigen::MatrixXi prod = it->second.cast<int>() * d.cast<int>();
        for (Eigen::Index i = 0; i < prod.size(); ++i)
            if (prod.data()[i] % 2 != 0)
                throw ChainComplexError("cascade complex: d^2 != 0 from degree " + std::to_string(k), k);
    }
    c.betti = homology_mod2(c);
    return c;
}

std::vector<int> cascade_homology(const MorseBottProblem& p) { return build_cascade_complex(p).betti; }

std::vector<int> schubert_cell_dims(const WeightVector& d) {
    // complex cells of the partial flag manifold <-> distinct arrangements of
    // the multiset d, cell dimension = number of inversions
    std::vector<int> w = d.d;
    std::sort(w.begin(), w.end());
    std::vector<int> dims;
    do {
        int inv = 0;
        for (std::size_t i = 0; i < w.size(); ++i)
            for (std::size_t j = i + 1; j < w.size(); ++j)
                if (w[i] > w[j]) ++inv;
        dims.push_back(2 * inv);
    } while (std::next_permutation(w.begin(), w.end()));
    std::sort(dims.begin(), dims.end());
    return dims;
}

CascadeComplexData perfect_complex_for_weights(int r, int index_bound) {
    if (r < 1 || r > 3) throw ValidationError("perfect_complex_for_weights: r must be 1, 2 or 3");
    CascadeComplexData c;
    const auto weights = enumerate_low_index_weights(r, index_bound);
    for (std::size_t m = 0; m < weights.size(); ++m) {
        const int base = morse_index(weights[m]);
        const auto cells = schubert_cell_dims(weights[m]);
        for (std::size_t k = 0; k < cells.size(); ++k)
            c.generators.push_back({static_cast<int>(m), static_cast<int>(k), base + cells[k],
                                    weights[m].str() + "/cell" + std::to_string(cells[k])});
    }
    std::stable_sort(c.generators.begin(), c.generators.end(),
                     [](const Generator& a, const Generator& b) { return a.degree < b.degree; });
    std::map<int, int> count;
    for (const auto& g : c.generators) ++count[g.degree];
    for (const auto& [k, n] : count)
        if (count.count(k - 1)) c.differential[k] = Mod2::Zero(count[k - 1], n);
    c.betti = homology_mod2(c);
    return c;
}

}  // namespace splitlab
