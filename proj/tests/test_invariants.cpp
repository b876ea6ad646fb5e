#include <doctest.h>

#include <algorithm>
#include <random>

#include "splitlab/invariants.hpp"

using namespace splitlab;

namespace {
WeightVector W(std::vector<int> v) { return WeightVector(std::move(v)); }

int farthest_from_basepoint(const ConnectionFamily& f) {
    int best = 0;
    for (int k = 1; k < static_cast<int>(f.params.size()); ++k)
        if (f.params[k].z() < f.params[best].z()) best = k;
    return best;
}

void check_samplewise_inequality(const FamilyReport& r) {
    for (const auto& s : r.per_sample)
        if (s.u_A > 0) CHECK(s.u_inf <= s.u_A);
    CHECK(r.sup_inf <= r.sup_A);
}
}  // namespace

TEST_CASE("octahedral grid") {
    const auto pts = octahedral_sphere_grid(1);
    CHECK(pts.size() == 6);
    CHECK(pts[0].isApprox(Eigen::Vector3d(0, 0, 1)));
    for (int f : {2, 4}) {
        const auto p = octahedral_sphere_grid(f);
        CHECK(p.size() == static_cast<std::size_t>(4 * f * f + 2));
        for (const auto& x : p) CHECK(x.norm() == doctest::Approx(1.0));
    }
}

TEST_CASE("constant family has zero energy") {
    const ConnectionFamily f = constant_family(GroupSpec(3, true), 5, 32);
    const FamilyReport r = family_sup_energy(f, FlowConfig{});
    CHECK(r.sup_A == 0);
    CHECK(r.sup_inf == 0);
    CHECK(r.completeness == 1.0);
    CHECK(zeta_upper_bound({f}, FlowConfig{}).upper_bound == 0);
}

TEST_CASE("generator family: basepoint and antipode") {
    const ConnectionFamily f = su2_degree_generator_family(32);
    validate_family(f);
    CHECK(f.sphere_dim == 2);
    const DiscreteLoop& base = f.samples[f.basepoint];
    for (const auto& g : base.samples) CHECK((g - Mat::Identity(2, 2)).norm() < 1e-12);
    const int far = farthest_from_basepoint(f);
    CHECK(f.params[far].z() == doctest::Approx(-1.0));
    CHECK(loop_energy(f.samples[far]) == doctest::Approx(2.0).epsilon(1e-9));
    const FlowTrace t = run_flow(f.samples[far], FlowConfig{});
    CHECK(extract_weights(t.final_loop, 1e-3) == W({1, -1}));
}

TEST_CASE("generator family: sup energy is stable under resolution doubling") {
    for (int n : {16, 32, 64}) {
        CAPTURE(n);
        const FamilyReport r = family_sup_energy(su2_degree_generator_family(n), FlowConfig{});
        CHECK(r.completeness == 1.0);
        CHECK(r.sup_A == 2);
        CHECK(r.sup_inf == 1);
        CHECK(r.oracle_disagreements == 0);
        for (const auto& s : r.per_sample) {
            REQUIRE(s.weights);
            CHECK((*s.weights == W({1, -1}) || *s.weights == W({0, 0})));
        }
        check_samplewise_inequality(r);
    }
}

TEST_CASE("generator family: stable under flow-config perturbation") {
    const ConnectionFamily f = su2_degree_generator_family(32);
    for (double snap : {1e-3, 1e-2}) {
        for (double tol : {1e-5, 1e-7}) {
            FlowConfig cfg;
            cfg.snap_tol = snap;
            cfg.grad_tol = tol;
            CHECK(family_sup_energy(f, cfg).sup_A == 2);
        }
    }
}

TEST_CASE("stabilized generator family stays within r + k") {
    const ConnectionFamily f = su2_degree_generator_family(32);
    for (int k : {1, 2}) {
        const ConnectionFamily s = stabilize_family(f, k);
        CHECK(s.samples.front().spec.rank == 2 + k);
        const FamilyReport r = family_sup_energy(s, FlowConfig{});
        CHECK(r.completeness == 1.0);
        CHECK(r.sup_A == 2);
        CHECK(r.sup_A <= 2 + k);
        check_samplewise_inequality(r);
    }
}

TEST_CASE("mixed geodesic family") {
    const ConnectionFamily f = geodesic_family({W({1, -1}), W({2, -2}), W({1, -1})}, 64, 3, "mixed");
    const FamilyReport r = family_sup_energy(f, FlowConfig{});
    CHECK(r.sup_A == 8);
    CHECK(r.sup_inf == 2);
    check_samplewise_inequality(r);
}

TEST_CASE("family sup energy ignores sample order") {
    ConnectionFamily f = geodesic_family({W({1, 0, -1}), W({2, -1, -1}), W({1, 1, -2})}, 48, 9);
    const FamilyReport a = family_sup_energy(f, FlowConfig{});
    std::mt19937_64 rng(2);
    std::shuffle(f.samples.begin() + 1, f.samples.end(), rng);
    const FamilyReport b = family_sup_energy(f, FlowConfig{});
    CHECK(a.sup_A == b.sup_A);
    CHECK(a.sup_inf == b.sup_inf);
    CHECK(a.sup_A == 6);
}

TEST_CASE("zeta upper bound is the min of family sups") {
    const ConnectionFamily gen = su2_degree_generator_family(32);
    const ConnectionFamily mixed = geodesic_family({W({1, -1}), W({2, -2})}, 64, 4, "mixed");
    CHECK(zeta_upper_bound({gen}, FlowConfig{}).upper_bound == 2);
    const ZetaBound z = zeta_upper_bound({mixed, gen}, FlowConfig{});
    CHECK(z.upper_bound == 2);
    CHECK(z.best_family == 1);
    CHECK(z.family_sups == std::vector<int>{8, 2});
    CHECK_THROWS_AS(zeta_upper_bound({}, FlowConfig{}), std::invalid_argument);
}

TEST_CASE("skeleton energy") {
    const SkeletonEnergy a = skeleton_energy(2, 2);
    CHECK(a.energy == 2);
    CHECK(a.weights.size() == 2);
    CHECK(std::find(a.weights.begin(), a.weights.end(), W({0, 0})) != a.weights.end());
    CHECK(std::find(a.weights.begin(), a.weights.end(), W({1, -1})) != a.weights.end());
    const SkeletonEnergy b = skeleton_energy(4, 3);
    CHECK(b.energy == 2);
    for (const auto& d : b.weights) CHECK(d.max_abs() <= 1);
    CHECK(skeleton_energy(0, 2).energy == 0);
}
