#include <doctest.h>

#include "splitlab/birkhoff.hpp"
#include "splitlab/bundle.hpp"
#include "splitlab/flow.hpp"

using namespace splitlab;

namespace {
WeightVector W(std::vector<int> v) { return WeightVector(std::move(v)); }

bool non_increasing(const std::vector<double>& e) {
    for (std::size_t k = 1; k < e.size(); ++k)
        if (e[k] > e[k - 1] + 1e-12 * std::max(1.0, e[k - 1])) return false;
    return true;
}
}  // namespace

TEST_CASE("run_flow: critical start stays put") {
    const DiscreteLoop g = geodesic_loop(W({1, -1}), Mat::Identity(2, 2), 64);
    const FlowTrace t = run_flow(g, FlowConfig{});
    CHECK(t.converged);
    CHECK(t.steps_taken == 0);
    CHECK(t.energies.back() == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("run_flow: small perturbation of the constant loop returns to it") {
    std::mt19937_64 rng(8);
    const GroupSpec spec(3, true);
    const DiscreteLoop c = constant_loop(spec, 64);
    const DiscreteLoop l = retract(c, random_tangent(spec, 64, rng, 0.05));
    for (FlowMetric m : {FlowMetric::Kahler, FlowMetric::L2}) {
        FlowConfig cfg;
        cfg.metric = m;
        cfg.max_steps = 200000;
        const FlowTrace t = run_flow(l, cfg);
        CHECK(t.converged);
        CHECK(t.energies.back() < 1e-6);
        CHECK(non_increasing(t.energies));
        CHECK(extract_weights(t.final_loop, 0.1) == W({0, 0, 0}));
    }
}

TEST_CASE("run_flow: complex-gauge image of a (1,-1) connection") {
    std::mt19937_64 rng(21);
    const SphereGrid grid;
    const TwoChartConnection a = make_split_connection(W({1, -1}), grid);
    const GaugeField h = gauge_field(grid, random_gauge_generator(a.spec, rng, 0.05, false));
    const TwoChartConnection b = complex_gauge_perturb(a, h);
    const FlowTrace t = run_flow(radial_trivialization(b, 64), FlowConfig{});
    CHECK(t.converged);
    CHECK(non_increasing(t.energies));
    CHECK(t.energies.back() == doctest::Approx(2.0).epsilon(5e-4));
    CHECK(extract_weights(t.final_loop, 0.1) == W({1, -1}));
}

TEST_CASE("extract_weights examples") {
    CHECK(extract_weights(constant_loop(GroupSpec(3, true), 32), 0.1) == W({0, 0, 0}));
    std::mt19937_64 rng(4);
    const DiscreteLoop g = geodesic_loop(W({3, -1, -2}), random_unitary(3, rng, true), 512);
    CHECK(extract_weights(g, 0.1) == W({3, -1, -2}));
    const DiscreteLoop bumpy = retract(g, random_tangent(g.spec, 512, rng, 0.5));
    CHECK_THROWS_AS(extract_weights(bumpy, 0.1), NotConvergedError);
}

TEST_CASE("flow on planted loops: monotone, limit energy, refinement stable") {
    std::mt19937_64 rng(99);
    FlowConfig cfg;
    for (const auto& d : {W({1, -1}), W({2, -2}), W({2, -1, -1}), W({1, 0, -1}), W({2, 1, -1, -2})}) {
        const LaurentLoop g = planted_factorization(d, rng);
        for (int n : {64, 128}) {
            const FlowTrace t = run_flow(unitary_representative(g, n, true), cfg);
            CHECK(t.converged);
            CHECK(non_increasing(t.energies));
            const WeightVector got = extract_weights(t.final_loop, cfg.snap_tol);
            CHECK_MESSAGE(got == d, "N=" << n << " planted " << d.str() << " got " << got.str());
            CHECK(std::abs(loop_energy(t.final_loop) - got.sum_squares()) < 10 * cfg.grad_tol);
        }
    }
}

TEST_CASE("energy_profile_of_family examples") {
    const GroupSpec spec(2, true);
    const FlowConfig cfg;
    std::vector<DiscreteLoop> constants(4, constant_loop(spec, 32));
    for (const auto& s : energy_profile_of_family(constants, cfg)) {
        REQUIRE(s.weights);
        CHECK(*s.weights == W({0, 0}));
        CHECK(s.energy == 0.0);
    }
    std::mt19937_64 rng(6);
    std::vector<DiscreteLoop> mixed;
    for (int k = 0; k < 6; ++k)
        mixed.push_back(geodesic_loop(k % 2 ? W({2, -2}) : W({1, -1}), random_unitary(2, rng, true), 64));
    const auto par = energy_profile_of_family(mixed, cfg);
    const auto ser = energy_profile_of_family_serial(mixed, cfg);
    for (int k = 0; k < 6; ++k) {
        REQUIRE(par[k].weights);
        CHECK(par[k].energy == (k % 2 ? 8.0 : 2.0));
        CHECK(*par[k].weights == *ser[k].weights);
    }
}

TEST_CASE("per-sample failures do not abort the batch") {
    std::mt19937_64 rng(1);
    const GroupSpec spec(2, true);
    FlowConfig cfg;
    cfg.max_steps = 1;
    std::vector<DiscreteLoop> fam{constant_loop(spec, 32),
                                  retract(constant_loop(spec, 32), random_tangent(spec, 32, rng, 0.5))};
    const auto out = energy_profile_of_family(fam, cfg);
    CHECK(out[0].weights);
    CHECK(!out[1].weights);
    CHECK(!out[1].error.empty());
}
