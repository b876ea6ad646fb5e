#include "splitlab/invariants.hpp"

#include "splitlab/birkhoff.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

namespace splitlab {

namespace {
constexpr double kPi = std::numbers::pi;
const cplx kI(0.0, 1.0);

// s . (i sigma): a unit imaginary quaternion for |s| = 1
Mat pauli_direction(const Eigen::Vector3d& s) {
    Mat x(2, 2);
    x << kI * s.z(), kI * s.x() + s.y(), kI * s.x() - s.y(), -kI * s.z();
    return x;
}
}  // namespace

void validate_family(const ConnectionFamily& f) {
    if (f.samples.empty()) throw ValidationError("family: no samples");
    if (f.basepoint < 0 || f.basepoint >= static_cast<int>(f.samples.size()))
        throw ValidationError("family: basepoint index out of range");
    if (!f.params.empty() && f.params.size() != f.samples.size())
        throw ValidationError("family: parameter count differs from sample count");
    const GroupSpec& spec = f.samples.front().spec;
    for (const auto& loop : f.samples) {
        if (loop.spec.rank != spec.rank) throw ValidationError("family: mixed ranks");
        validate_loop(loop);
    }
    if (loop_energy(f.samples[f.basepoint]) > 1e-12) throw ValidationError("family: basepoint sample is not the constant loop");
}

std::vector<Eigen::Vector3d> octahedral_sphere_grid(int frequency) {
    if (frequency < 1) throw ValidationError("octahedral_sphere_grid: frequency must be >= 1");
    const Eigen::Vector3d ex(1, 0, 0), ey(0, 1, 0), ez(0, 0, 1);
    std::vector<Eigen::Vector3d> pts{ez};
    std::map<std::tuple<long, long, long>, int> seen;
    auto key = [](const Eigen::Vector3d& v) {
        return std::make_tuple(std::lround(v.x() * 1e9), std::lround(v.y() * 1e9), std::lround(v.z() * 1e9));
    };
    seen[key(ez)] = 0;
    for (int sx : {1, -1})
        for (int sy : {1, -1})
            for (int sz : {1, -1}) {
                const Eigen::Vector3d a = sx * ex, b = sy * ey, c = sz * ez;
                for (int i = 0; i <= frequency; ++i)
                    for (int j = 0; i + j <= frequency; ++j) {
                        const Eigen::Vector3d p =
                            ((i * a + j * b + (frequency - i - j) * c) / static_cast<double>(frequency)).normalized();
                        if (seen.emplace(key(p), static_cast<int>(pts.size())).second) pts.push_back(p);
                    }
            }
    return pts;
}

ConnectionFamily su2_degree_generator_family(int resolution, int frequency) {
    if (resolution < 16) throw ValidationError("su2_degree_generator_family: resolution must be >= 16");
    ConnectionFamily f;
    f.name = "su2-degree-generator";
    f.class_tag = "generator of pi_2(Omega SU(2)), l=2, r=2";
    f.sphere_dim = 2;
    f.basepoint = 0;
    f.params = octahedral_sphere_grid(frequency);
    const GroupSpec spec(2, true);
    const Mat id = Mat::Identity(2, 2);
    for (const auto& s : f.params) {
        const double alpha = std::acos(std::clamp(s.z(), -1.0, 1.0));
        const Mat x = pauli_direction(s);
        DiscreteLoop loop;
        loop.spec = spec;
        loop.samples.resize(static_cast<std::size_t>(resolution));
        // beta = pi/2 is the great circle exp(2 pi t X); beta -> 0 shrinks it to I
        const double beta = alpha >= 0.5 * kPi ? 0.5 * kPi : 0.5 * kPi * std::sin(alpha) * std::sin(alpha);
        Mat nrm = Mat::Zero(2, 2);
        if (alpha < 0.5 * kPi) {
            const Eigen::Vector3d ex(1, 0, 0);
            nrm = pauli_direction((ex - ex.dot(s) * s).normalized());
        }
        const double cb = std::cos(beta), sb = std::sin(beta);
        for (int k = 0; k < resolution; ++k) {
            const double t = 2.0 * kPi * k / resolution;
            Mat g = cb * (cb * id + sb * nrm) + sb * (std::cos(t) * (sb * id - cb * nrm) + std::sin(t) * x);
            loop.samples[k] = unitary_polar(g);
        }
        loop.samples[0] = id;
        f.samples.push_back(std::move(loop));
    }
    return f;
}

ConnectionFamily stabilize_family(const ConnectionFamily& f, int k) {
    if (k < 0) throw ValidationError("stabilize_family: k must be >= 0");
    ConnectionFamily out = f;
    out.name = f.name + "+eps^" + std::to_string(k);
    for (auto& loop : out.samples) {
        const int r = loop.spec.rank;
        loop.spec = GroupSpec(r + k, loop.spec.special, loop.spec.metric_scale, loop.spec.tol);
        for (auto& g : loop.samples) {
            Mat big = Mat::Identity(r + k, r + k);
            big.topLeftCorner(r, r) = g;
            g = big;
        }
    }
    return out;
}

ConnectionFamily geodesic_family(const std::vector<WeightVector>& weights, int n, unsigned seed,
                                 const std::string& name) {
    if (weights.empty()) throw ValidationError("geodesic_family: no weights");
    const int r = weights.front().rank();
    bool special = true;
    for (const auto& d : weights) {
        if (d.rank() != r) throw ValidationError("geodesic_family: mixed ranks");
        special = special && d.sum() == 0;
    }
    std::mt19937_64 rng(seed);
    ConnectionFamily f;
    f.name = name;
    f.class_tag = "ad hoc";
    f.samples.push_back(constant_loop(GroupSpec(r, special), n));
    for (const auto& d : weights) f.samples.push_back(geodesic_loop(d, random_unitary(r, rng, special), n, special));
    return f;
}

ConnectionFamily constant_family(const GroupSpec& spec, int samples, int n) {
    ConnectionFamily f;
    f.name = "constant";
    f.class_tag = "trivial";
    for (int i = 0; i < samples; ++i) f.samples.push_back(constant_loop(spec, n));
    return f;
}

FamilyReport family_sup_energy(const ConnectionFamily& f, const FlowConfig& cfg) {
    validate_family(f);
    const auto outcomes = energy_profile_of_family(f.samples, cfg);
    const int count = static_cast<int>(f.samples.size());
    std::vector<std::optional<WeightVector>> oracle(f.samples.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < count; ++i) {
        try {
            oracle[i] = splitting_type(loop_to_laurent_auto(f.samples[i], 1e-8));
        } catch (const std::exception&) {
            // not smooth enough for the Toeplitz path; the flow result stands alone
        }
    }
    FamilyReport rep;
    int ok = 0;
    for (int i = 0; i < count; ++i) {
        FamilySample s;
        s.index = i;
        s.weights = outcomes[i].weights;
        s.flow_energy = outcomes[i].flow_energy;
        s.snapped = outcomes[i].snapped;
        s.error = outcomes[i].error;
        s.oracle = oracle[i];
        if (s.weights) {
            ++ok;
            s.u_A = s.weights->sum_squares();
            s.u_inf = s.weights->max_abs();
            rep.sup_A = std::max(rep.sup_A, s.u_A);
            rep.sup_inf = std::max(rep.sup_inf, s.u_inf);
            if (s.oracle) {
                ++rep.oracle_checked;
                if (!(*s.oracle == *s.weights)) ++rep.oracle_disagreements;
            }
        }
        rep.per_sample.push_back(std::move(s));
    }
    rep.completeness = static_cast<double>(ok) / count;
    return rep;
}

SkeletonEnergy skeleton_energy(int bound_index, int r) {
    if (bound_index < 0) throw ValidationError("skeleton_energy: bound_index must be >= 0");
    SkeletonEnergy out;
    out.weights = enumerate_low_index_weights(r, bound_index);
    for (const auto& d : out.weights) out.energy = std::max(out.energy, d.sum_squares());
    return out;
}

ZetaBound zeta_upper_bound(const std::vector<ConnectionFamily>& families, const FlowConfig& cfg) {
    if (families.empty()) throw std::invalid_argument("zeta_upper_bound: empty family list");
    ZetaBound z;
    for (std::size_t i = 0; i < families.size(); ++i) {
        const FamilyReport rep = family_sup_energy(families[i], cfg);
        z.family_sups.push_back(rep.sup_A);
        if (i == 0 || rep.sup_A < z.upper_bound) {
            z.upper_bound = rep.sup_A;
            z.best_family = static_cast<int>(i);
        }
    }
    return z;
}

}  // namespace splitlab
