#include <doctest.h>

#include <cmath>

#include "splitlab/cascade.hpp"

using namespace splitlab;

namespace {
int manifold_with_index(const MorseBottProblem& p, int mb) {
    for (int i = 0; i < static_cast<int>(p.critical.size()); ++i)
        if (p.critical[i].mb_index == mb && p.critical[i].dim == 1) return i;
    for (int i = 0; i < static_cast<int>(p.critical.size()); ++i)
        if (p.critical[i].mb_index == mb) return i;
    return -1;
}
}  // namespace

TEST_CASE("built-in problems validate") {
    for (const auto& id : builtin_problem_ids()) {
        CAPTURE(id);
        CHECK_NOTHROW(validate_problem(builtin_problem(id)));
    }
    CHECK_THROWS(builtin_problem("klein-bottle"));
}

TEST_CASE("trajectory from a critical point is trivial") {
    const MorseBottProblem p = builtin_problem("torus");
    const Trajectory t = gradient_trajectory(p, p.critical[0].embed(0.3));
    CHECK(t.converged);
    CHECK(t.arrival == 0);
    CHECK(t.length < 1e-12);
}

TEST_CASE("torus trajectory reaches the minimum circle") {
    const MorseBottProblem p = builtin_problem("torus");
    const Trajectory t = gradient_trajectory(p, Vec3(0.3, 0.1, 0.0));
    REQUIRE(t.converged);
    CHECK(t.arrival == manifold_with_index(p, 0));
    const Vec3 end = t.points.back();
    CHECK(std::abs(end.x() - 0.5) < 1e-4);
    CHECK(std::abs(end.y() - 0.1) < 1e-9);  // phi is constant along the flow
}

TEST_CASE("sphere z^2 trajectory reaches the equator") {
    const MorseBottProblem p = builtin_problem("sphere-z2");
    const Vec3 x0 = Vec3(0.05, 0.02, 1.0).normalized();
    const Trajectory t = gradient_trajectory(p, x0);
    REQUIRE(t.converged);
    CHECK(p.critical[t.arrival].dim == 1);
    CHECK(p.critical[t.arrival].mb_index == 0);
    CHECK(std::abs(t.points.back().z()) < 1e-4);
}

TEST_CASE("energy decreases strictly along trajectories") {
    for (const auto& id : builtin_problem_ids()) {
        const MorseBottProblem p = builtin_problem(id);
        const Vec3 x0 = p.manifold == ModelManifold::Torus ? Vec3(0.17, 0.61, 0.0) : Vec3(0.3, -0.2, 0.8).normalized();
        const Trajectory t = gradient_trajectory(p, x0);
        REQUIRE(t.levels.size() > 2);
        // strict until the level difference drops to round-off near arrival
        const double floor = t.levels.back() + 1e-12;
        for (std::size_t k = 1; k < t.levels.size(); ++k)
            if (t.levels[k - 1] > floor) CHECK(t.levels[k] < t.levels[k - 1]);
        CHECK(t.levels.front() - t.levels.back() > 0.1);
    }
}

TEST_CASE("cascade homology of the built-ins") {
    CHECK(cascade_homology(builtin_problem("torus")) == std::vector<int>{1, 2, 1});
    CHECK(cascade_homology(builtin_problem("sphere-perfect")) == std::vector<int>{1, 0, 1});
    CHECK(cascade_homology(builtin_problem("sphere-z2")) == std::vector<int>{1, 0, 1});
}

TEST_CASE("torus complex: degrees 0,1,1,2 and zero differential") {
    const CascadeComplexData c = build_cascade_complex(builtin_problem("torus"));
    std::vector<int> degrees;
    for (const auto& g : c.generators) degrees.push_back(g.degree);
    std::sort(degrees.begin(), degrees.end());
    CHECK(degrees == std::vector<int>{0, 1, 1, 2});
    for (const auto& [k, d] : c.differential) CHECK(d.cast<int>().sum() == 0);
}

TEST_CASE("sphere z^2 complex: the equator's top cell bounds onto both poles") {
    const MorseBottProblem p = builtin_problem("sphere-z2");
    const CascadeComplexData c = build_cascade_complex(p);
    REQUIRE(c.differential.count(2));
    const auto& d2 = c.differential.at(2);
    CHECK(d2.rows() == 1);
    CHECK(d2.cols() == 2);
    CHECK(d2.cast<int>().sum() == 2);
    // d^2 = 0
    if (c.differential.count(1)) {
        const auto prod = (c.differential.at(1).cast<int>() * d2.cast<int>()).unaryExpr([](int v) { return v % 2; });
        CHECK(prod.sum() == 0);
    }
}

TEST_CASE("count_cascades: same-manifold pairs follow the aux differential") {
    const MorseBottProblem p = builtin_problem("torus");
    const auto gens = cascade_generators(p);
    for (const auto& a : gens)
        for (const auto& b : gens)
            if (a.manifold == b.manifold && a.degree - b.degree == 1) CHECK(count_cascades(p, a, b) == 0);
}

TEST_CASE("count_cascades rejects a degree gap other than one") {
    const MorseBottProblem p = builtin_problem("sphere-perfect");
    const auto gens = cascade_generators(p);
    REQUIRE(gens.size() == 2);
    CHECK_THROWS_AS(count_cascades(p, gens[0], gens[1]), PreconditionError);
    CHECK_THROWS_AS(count_cascades(p, gens[1], gens[0]), PreconditionError);
}

TEST_CASE("rank over the two-element field") {
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic> m(3, 3);
    m << 1, 1, 0, 0, 1, 1, 1, 0, 1;  // rows sum to zero mod 2
    CHECK(rank_mod2(m) == 2);
    CHECK(rank_mod2(Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>::Identity(4, 4)) == 4);
}

TEST_CASE("Schubert cell dimensions") {
    CHECK(schubert_cell_dims(WeightVector({0, 0})) == std::vector<int>{0});
    auto s = schubert_cell_dims(WeightVector({1, -1}));
    std::sort(s.begin(), s.end());
    CHECK(s == std::vector<int>{0, 2});
    s = schubert_cell_dims(WeightVector({1, 0, -1}));
    std::sort(s.begin(), s.end());
    CHECK(s == std::vector<int>{0, 2, 2, 4, 4, 6});
    s = schubert_cell_dims(WeightVector({1, 1, -2}));
    std::sort(s.begin(), s.end());
    CHECK(s == std::vector<int>{0, 2, 4});
}

TEST_CASE("perfect complex for the loop-space critical structure") {
    const CascadeComplexData c0 = perfect_complex_for_weights(2, 0);
    REQUIRE(c0.generators.size() == 1);
    CHECK(c0.generators[0].degree == 0);

    const CascadeComplexData c = perfect_complex_for_weights(2, 2);
    std::vector<int> degrees;
    for (const auto& g : c.generators) degrees.push_back(g.degree);
    std::sort(degrees.begin(), degrees.end());
    CHECK(degrees == std::vector<int>{0, 2, 4});
    // Omega SU(2): one class in each even degree
    CHECK(homology_mod2(c) == std::vector<int>{1, 0, 1, 0, 1});

    for (int r : {2, 3})
        for (int bound : {0, 2, 4, 6}) {
            const CascadeComplexData p = perfect_complex_for_weights(r, bound);
            for (const auto& g : p.generators) CHECK(g.degree % 2 == 0);
            for (const auto& [k, d] : p.differential) CHECK(d.cast<int>().sum() == 0);
        }
    CHECK_THROWS(perfect_complex_for_weights(4, 2));
}
