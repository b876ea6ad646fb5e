#include <doctest.h>

#include <cstdio>
#include <map>
#include <random>

#include "splitlab/corpus.hpp"

using namespace splitlab;

namespace {
WeightVector W(std::vector<int> v) { return WeightVector(std::move(v)); }

double field_diff(const ChartField& a, const ChartField& b) {
    REQUIRE(a.data.size() == b.data.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < a.data.size(); ++k) worst = std::max(worst, (a.data[k] - b.data[k]).cwiseAbs().maxCoeff());
    return worst;
}

double connection_diff(const TwoChartConnection& a, const TwoChartConnection& b) {
    return std::max({field_diff(a.north_rho, b.north_rho), field_diff(a.north_theta, b.north_theta),
                     field_diff(a.south_rho, b.south_rho), field_diff(a.south_theta, b.south_theta),
                     field_diff(a.transition, b.transition)});
}

// through text, as a file would
json reparse(const json& j) { return json::parse(j.dump()); }
}  // namespace

TEST_CASE("loop round trip") {
    std::mt19937_64 rng(1);
    const DiscreteLoop a = geodesic_loop(W({2, -1, -1}), random_unitary(3, rng), 32);
    const DiscreteLoop b = loop_from_json(reparse(to_json(a)));
    REQUIRE(b.size() == a.size());
    CHECK(b.spec.rank == 3);
    CHECK(b.spec.special);
    for (int k = 0; k < a.size(); ++k) CHECK((a.samples[k] - b.samples[k]).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("laurent round trip") {
    std::mt19937_64 rng(2);
    const LaurentLoop a = planted_factorization(W({2, -1, -1}), rng);
    const LaurentLoop b = laurent_from_json(reparse(to_json(a)));
    REQUIRE(b.degree == a.degree);
    for (int k = -a.degree; k <= a.degree; ++k) CHECK((a.coeff(k) - b.coeff(k)).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(splitting_type(b) == W({2, -1, -1}));
}

TEST_CASE("connection round trip keeps metadata") {
    std::mt19937_64 rng(3);
    SphereGrid grid;
    grid.m_rho = 40;
    grid.n_theta = 16;
    const TwoChartConnection a = complex_gauge_perturb(
        make_split_connection(W({1, -1}), grid),
        gauge_field(grid, random_gauge_generator(GroupSpec(2, true), rng, 0.1, false)));
    const TwoChartConnection b = connection_from_json(reparse(to_json(a)));
    CHECK(connection_diff(a, b) <= 1e-12);
    CHECK(b.grid.m_rho == 40);
    CHECK(b.label == a.label);
    CHECK(b.construction == a.construction);
}

TEST_CASE("foreign sign convention is rejected") {
    json j = to_json(LaurentLoop::monomial_diag({1, -1}));
    j["convention"] = "z=exp(+2 pi i t)";
    json entry = {{"kind", "laurent"}, {"laurent", j}, {"convention", "z=exp(+2 pi i t)"}};
    CHECK_THROWS_AS(corpus_entry_from_json(entry), ValidationError);
}

TEST_CASE("gauge generator round trip") {
    std::mt19937_64 rng(4);
    const GaugeGenerator a = random_gauge_generator(GroupSpec(3, false), rng, 0.2, false, GaugeShape::General, Chart::South);
    const GaugeGenerator b = gauge_generator_from_json(reparse(to_json(a)));
    CHECK(b.chart == Chart::South);
    CHECK(b.rho_a == a.rho_a);
    CHECK(b.rho_b == a.rho_b);
    REQUIRE(b.cos_c.size() == a.cos_c.size());
    for (std::size_t n = 0; n < a.cos_c.size(); ++n) {
        CHECK((a.cos_c[n] - b.cos_c[n]).norm() <= 1e-12);
        CHECK((a.sin_d[n] - b.sin_d[n]).norm() <= 1e-12);
    }
}

TEST_CASE("family round trip") {
    const ConnectionFamily a = su2_degree_generator_family(16, 2);
    const ConnectionFamily b = family_from_json(reparse(to_json(a)));
    CHECK(b.samples.size() == a.samples.size());
    CHECK(b.basepoint == a.basepoint);
    CHECK(b.sphere_dim == 2);
    for (std::size_t s = 0; s < a.samples.size(); ++s)
        for (int k = 0; k < a.samples[s].size(); ++k)
            CHECK((a.samples[s].samples[k] - b.samples[s].samples[k]).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("corpus: composition and recipe round trip") {
    CorpusOptions opt;
    opt.grid.m_rho = 40;
    opt.grid.n_theta = 16;
    const Corpus c = generate_corpus(opt);
    std::map<std::string, int> counts;
    for (const auto& e : c.entries) ++counts[e.subfamily];
    CHECK(c.entries.size() == 54);
    CHECK(counts["split"] == 12);
    CHECK(counts["unitary-gauge"] == 8);
    CHECK(counts["complex-diagonal"] == 8);
    CHECK(counts["complex-generic"] == 12);
    CHECK(counts["planted"] == 14);

    // same seed, same corpus
    CHECK(to_json(generate_corpus(opt)).dump() == to_json(c).dump());

    const Corpus back = corpus_from_json(reparse(to_json(c)));
    REQUIRE(back.entries.size() == c.entries.size());
    for (std::size_t k = 0; k < c.entries.size(); ++k) {
        const CorpusEntry& e = c.entries[k];
        CHECK(back.entries[k].label == e.label);
        if (e.is_connection() && !e.steps.empty())
            CHECK(connection_diff(build_connection(e), build_connection(back.entries[k])) <= 1e-12);
    }
    // materialized entries carry full field data
    const CorpusEntry& g = c.entries[20];
    REQUIRE(g.is_connection());
    const CorpusEntry m = corpus_entry_from_json(reparse(to_json(g, true)));
    REQUIRE(m.connection);
    CHECK(connection_diff(*m.connection, build_connection(g)) <= 1e-12);
}

TEST_CASE("file helpers") {
    const std::string path = "splitlab_io_test.json";
    write_json_file(path, to_json(LaurentLoop::monomial_diag({1, -1})), 2);
    CHECK(splitting_type(laurent_from_json(read_json_file(path))) == W({1, -1}));
    std::remove(path.c_str());
    CHECK_THROWS(read_json_file("does/not/exist.json"));
}

TEST_CASE("evaluate_entry on planted and split entries") {
    const Corpus c = generate_corpus(CorpusOptions{});
    PipelineConfig cfg;
    int checked = 0;
    for (const auto& e : c.entries) {
        if (e.subfamily == "planted" && e.label.rank() == 2) {
            const EntryResult r = evaluate_entry(e, cfg);
            CHECK(r.agree());
            CHECK(r.monotone);
            ++checked;
        }
        if (e.subfamily == "split" && e.label == W({2, -2})) {
            const EntryResult r = evaluate_entry(e, cfg);
            CHECK(r.agree());
            CHECK(r.has_bundle);
            CHECK(r.chern.value == 0);
            REQUIRE(r.winding);
            CHECK(*r.winding == 0);
            CHECK(r.gromov.satisfied);
            ++checked;
        }
    }
    CHECK(checked == 7);
}
