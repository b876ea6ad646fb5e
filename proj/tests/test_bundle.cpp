#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "splitlab/birkhoff.hpp"
#include "splitlab/bundle.hpp"
#include "splitlab/flow.hpp"

using namespace splitlab;

namespace {
constexpr double kPi = std::numbers::pi;

WeightVector W(std::vector<int> v) { return WeightVector(std::move(v)); }

double loop_distance(const DiscreteLoop& a, const DiscreteLoop& b) {
    double worst = 0.0;
    for (int k = 0; k < a.size(); ++k) worst = std::max(worst, op_norm(a.samples[k] - b.samples[k]));
    return worst;
}

double max_abs(const CurvatureField& f) {
    double worst = 0.0;
    for (const auto* c : {&f.north, &f.south})
        for (const auto& m : c->data) worst = std::max(worst, m.cwiseAbs().maxCoeff());
    return worst;
}

WeightVector flow_weights(const DiscreteLoop& loop) {
    const FlowTrace t = run_flow(loop, FlowConfig{});
    REQUIRE(t.converged);
    return extract_weights(t.final_loop, 1e-3);
}
}  // namespace

TEST_CASE("trivial connection") {
    const SphereGrid grid;
    const TwoChartConnection a = trivial_connection(GroupSpec(2, true), grid);
    const SphereMetric g = round_metric(grid);
    CHECK(max_abs(curvature_field(a)) == 0.0);
    CHECK(ym_energy(a, g) == 0.0);
    CHECK(curvature_sup_norm(a, g) == 0.0);
    CHECK(chern_number(a) == 0);
    const DiscreteLoop rad = radial_trivialization(a, 32);
    CHECK(loop_distance(rad, constant_loop(a.spec, 32)) < 1e-12);
    const GromovRecord rec = gromov_check(a, g, W({0, 0}));
    CHECK(rec.satisfied);
    CHECK(rec.rhs == 0.0);
}

TEST_CASE("split connection matches the constant-curvature closed form") {
    const SphereGrid grid;
    const TwoChartConnection a = make_split_connection(W({1, -1}), grid);
    validate_connection(a);
    // F_{rho theta} = -i d sin(rho) / 2 on both charts
    const CurvatureField f = curvature_field(a);
    double worst = 0.0;
    for (const auto* c : {&f.north, &f.south})
        for (int i = c->first; i <= c->last; ++i)
            for (int j = 0; j < grid.n_theta; ++j) {
                Mat ref = Mat::Zero(2, 2);
                ref(0, 0) = cplx(0.0, -0.5 * std::sin(grid.rho(i)));
                ref(1, 1) = -ref(0, 0);
                worst = std::max(worst, op_norm(c->at(i, j) - ref));
            }
    CHECK(worst < 1e-8);

    const SphereMetric g = round_metric(grid);
    // |F|_g = |d|/2 everywhere, Frobenius norm squared 1/2, area 4 pi
    CHECK(ym_energy(a, g) == doctest::Approx(2.0 * kPi).epsilon(1e-6));
    CHECK(curvature_sup_norm(a, g) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(chern_number(a) == 0);
    const GromovRecord rec = gromov_check(a, g, W({1, -1}));
    CHECK(rec.satisfied);
    CHECK(std::abs(rec.lhs - 2.0 * kPi) < 1e-2);
    CHECK(rec.rhs == 1.0);
}

TEST_CASE("curvature sup norm scales linearly in d") {
    const SphereGrid grid;
    const SphereMetric g = round_metric(grid);
    const double one = curvature_sup_norm(make_split_connection(W({1, -1}), grid), g);
    for (int d : {2, 3}) {
        const double v = curvature_sup_norm(make_split_connection(W({d, -d}), grid), g);
        CHECK(std::abs(v - d * one) < 1e-3 * d * one);
    }
}

TEST_CASE("sup norm is stable under grid refinement") {
    std::mt19937_64 rng(17);
    SphereGrid coarse;
    SphereGrid fine;
    fine.m_rho = 2 * coarse.m_rho;
    fine.n_theta = 2 * coarse.n_theta;
    const GaugeGenerator gen = random_gauge_generator(GroupSpec(2, true), rng, 0.3, true);
    auto sup_on = [&](const SphereGrid& grid) {
        const TwoChartConnection a =
            unitary_gauge_transform(make_split_connection(W({1, -1}), grid), gauge_field(grid, gen));
        return curvature_sup_norm(a, round_metric(grid));
    };
    const double c = sup_on(coarse), f = sup_on(fine);
    CHECK(std::abs(c - f) < 1e-3 * f);
}

TEST_CASE("chern number is the degree sum") {
    const SphereGrid grid;
    CHECK(chern_number(make_split_connection(W({2, 0}), grid)) == 2);
    CHECK(chern_number(make_split_connection(W({1, 0}), grid)) == 1);
    CHECK(chern_number(make_split_connection(W({3, -1, -1}), grid)) == 1);
    const ChernResult c = chern_integral(make_split_connection(W({2, -1, -1}), grid));
    CHECK(c.value == 0);
    CHECK(c.residue < 1e-3);
}

TEST_CASE("chern number against the winding of the radial trivialization") {
    const SphereGrid grid;
    for (const auto& d : {W({2, 0}), W({1, 0}), W({-1, 0}), W({2, -1, 1})}) {
        const TwoChartConnection a = make_split_connection(d, grid);
        const LaurentLoop lg = loop_to_laurent_auto(radial_trivialization(a, 64), 1e-6);
        CHECK(chern_number(a) == kConventionSign * det_winding(lg));
    }
}

TEST_CASE("overlap mismatch is reported") {
    const SphereGrid grid;
    TwoChartConnection a = make_split_connection(W({1, -1}), grid);
    a.transition.at(grid.equator(), 3)(0, 0) *= std::polar(1.0, 0.1);
    CHECK(overlap_mismatch(a) > 1e-3);
    CHECK_THROWS_AS(validate_connection(a), InvalidConnectionError);
}

TEST_CASE("unitary gauge invariance") {
    std::mt19937_64 rng(5);
    SphereGrid grid;
    grid.m_rho = 240;
    const SphereMetric g = round_metric(grid);
    for (const auto& d : {W({1, -1}), W({2, -1, -1})}) {
        const TwoChartConnection a = make_split_connection(d, grid);
        const double ym = ym_energy(a, g), sup = curvature_sup_norm(a, g);
        for (Chart chart : {Chart::North, Chart::South}) {
            const GaugeGenerator gen = random_gauge_generator(a.spec, rng, 0.3, true, GaugeShape::General, chart);
            const TwoChartConnection b = unitary_gauge_transform(a, gauge_field(grid, gen));
            validate_connection(b);
            CHECK(std::abs(ym_energy(b, g) - ym) < 1e-6 * ym);
            CHECK(std::abs(curvature_sup_norm(b, g) - sup) < 1e-6 * sup);
            CHECK(chern_number(b) == chern_number(a));
        }
    }
}

TEST_CASE("gauge-transformed trivial connection is flat") {
    std::mt19937_64 rng(8);
    const SphereGrid grid;
    const TwoChartConnection a = trivial_connection(GroupSpec(3, true), grid);
    const GaugeGenerator gen = random_gauge_generator(a.spec, rng, 0.3, true);
    const TwoChartConnection b = unitary_gauge_transform(a, gauge_field(grid, gen));
    CHECK(max_abs(curvature_field(b)) < 1e-6);
}

TEST_CASE("radial trivialization of a split connection flows to its type") {
    const SphereGrid grid;
    for (const auto& d : {W({1, -1}), W({2, -1, -1})}) {
        const DiscreteLoop rad = radial_trivialization(make_split_connection(d, grid), 64);
        CHECK(flow_weights(rad) == d);
    }
}

TEST_CASE("radial trivialization ignores gauges that fix both pole fibers") {
    std::mt19937_64 rng(23);
    const SphereGrid grid;
    const TwoChartConnection a = make_split_connection(W({1, -1}), grid);
    const DiscreteLoop rad = radial_trivialization(a, 48);
    for (Chart chart : {Chart::North, Chart::South}) {
        const GaugeGenerator gen = random_gauge_generator(a.spec, rng, 0.3, true, GaugeShape::General, chart);
        const DiscreteLoop rb = radial_trivialization(unitary_gauge_transform(a, gauge_field(grid, gen)), 48);
        CHECK(loop_distance(rad, rb) < 1e-5);
    }
}

TEST_CASE("radial trivialization: parallel and serial agree") {
    std::mt19937_64 rng(31);
    const SphereGrid grid;
    const TwoChartConnection a = make_split_connection(W({2, -1, -1}), grid);
    const GaugeGenerator gen = random_gauge_generator(a.spec, rng, 0.2, false);
    const TwoChartConnection b = complex_gauge_perturb(a, gauge_field(grid, gen));
    CHECK(loop_distance(radial_trivialization(b, 40), radial_trivialization_serial(b, 40)) < 1e-13);
}

TEST_CASE("complex gauge: identity and unitary gauges") {
    std::mt19937_64 rng(41);
    const SphereGrid grid;
    const SphereMetric g = round_metric(grid);
    const TwoChartConnection a = make_split_connection(W({1, -1}), grid);
    const TwoChartConnection same = complex_gauge_perturb(a, identity_gauge(grid, 2));
    double worst = 0.0;
    for (const auto& [x, y] : {std::pair{&a.north_rho, &same.north_rho}, {&a.north_theta, &same.north_theta},
                               {&a.south_rho, &same.south_rho}, {&a.south_theta, &same.south_theta}})
        for (std::size_t k = 0; k < x->data.size(); ++k) worst = std::max(worst, op_norm(x->data[k] - y->data[k]));
    CHECK(worst < 1e-10);

    const GaugeGenerator gen = random_gauge_generator(a.spec, rng, 0.3, true);
    const TwoChartConnection u = complex_gauge_perturb(a, gauge_field(grid, gen));
    CHECK(std::abs(ym_energy(u, g) - ym_energy(a, g)) < 1e-6 * ym_energy(a, g));
}

TEST_CASE("complex gauge keeps the holomorphic type") {
    std::mt19937_64 rng(43);
    const SphereGrid grid;
    const SphereMetric g = round_metric(grid);
    const TwoChartConnection a = make_split_connection(W({1, -1}), grid);
    const GaugeGenerator gen = random_gauge_generator(a.spec, rng, 0.1, false);
    const TwoChartConnection b = complex_gauge_perturb(a, gauge_field(grid, gen));
    validate_connection(b);
    CHECK(ym_energy(b, g) > ym_energy(a, g) + 1e-6);
    CHECK(chern_number(b) == 0);
    CHECK(flow_weights(radial_trivialization(b, 64)) == W({1, -1}));
    CHECK(gromov_check(b, g, W({1, -1})).satisfied);
}

TEST_CASE("ill-conditioned complex gauge is rejected") {
    std::mt19937_64 rng(47);
    const SphereGrid grid;
    const TwoChartConnection a = make_split_connection(W({1, -1}), grid);
    const GaugeGenerator gen = random_gauge_generator(a.spec, rng, 0.3, false);
    CHECK_THROWS_AS(complex_gauge_perturb(a, gauge_field(grid, gen), 1.0 + 1e-9), IllConditionedGaugeError);
}
