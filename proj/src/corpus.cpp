#include "splitlab/corpus.hpp"

#include <algorithm>
#include <cmath>

namespace splitlab {

namespace {

bool is_traceless(const WeightVector& d) { return d.sum() == 0; }

CorpusEntry split_entry(const WeightVector& d, const SphereGrid& grid, const std::string& subfamily) {
    CorpusEntry e;
    e.label = d;
    e.special = is_traceless(d);
    e.grid = grid;
    e.subfamily = subfamily;
    e.name = subfamily + d.str();
    return e;
}

}  // namespace

Corpus generate_corpus(const CorpusOptions& opt) {
    opt.grid.validate();
    if (opt.max_amplitude <= 0.0 || opt.max_amplitude > 0.3)
        throw ValidationError("generate_corpus: amplitude must lie in (0, 0.3]");
    Corpus c;
    c.seed = opt.seed;
    std::mt19937_64 rng(opt.seed);
    const auto W = [](std::vector<int> v) { return WeightVector(std::move(v)); };

    const std::vector<WeightVector> split = {W({0, 0}),        W({1, -1}),    W({2, -2}),        W({3, -3}),
                                             W({1, 0, -1}),    W({2, -1, -1}), W({1, 1, -2}),    W({3, 0, -3}),
                                             W({1, 1, -1, -1}), W({2, 1, -1, -2}), W({1, 0}),     W({2, 0})};
    for (const auto& d : split) c.entries.push_back(split_entry(d, opt.grid, "split"));

    auto gauged = [&](const WeightVector& d, const std::string& sub, bool complex, GaugeShape shape, double amp,
                      Chart chart) {
        CorpusEntry e = split_entry(d, opt.grid, sub);
        e.amplitude = amp;
        const GroupSpec spec(d.rank(), e.special);
        e.steps.push_back({complex, random_gauge_generator(spec, rng, amp, !complex, shape, chart)});
        e.name += "#" + std::to_string(c.entries.size());
        c.entries.push_back(std::move(e));
    };
    const double a = opt.max_amplitude;
    for (const auto& d : {W({0, 0}), W({1, -1}), W({2, -2}), W({2, -1, -1}), W({1, 0, -1}), W({2, 1, -1, -2})})
        gauged(d, "unitary-gauge", false, GaugeShape::General, a, Chart::North);
    gauged(W({1, -1}), "unitary-gauge", false, GaugeShape::General, a, Chart::South);
    gauged(W({2, 0}), "unitary-gauge", false, GaugeShape::General, a, Chart::North);

    for (const auto& d : {W({1, -1}), W({2, -2}), W({3, -3}), W({2, -1, -1}), W({1, 0, -1}), W({1, 1, -1, -1})})
        gauged(d, "complex-diagonal", true, GaugeShape::Diagonal, a, Chart::North);
    gauged(W({1, -1}), "complex-diagonal", true, GaugeShape::Diagonal, a, Chart::South);
    gauged(W({2, -1, -1}), "complex-diagonal", true, GaugeShape::Diagonal, a, Chart::South);

    // jumping examples with max |d_i| = 1 and 2 under generic complexified gauges
    const std::vector<double> amps = {0.01, 0.05, 0.1, 0.3};
    for (const auto& d : {W({1, -1}), W({1, 0, -1}), W({2, -2}), W({2, -1, -1})})
        for (std::size_t k = 0; k < 3; ++k)
            gauged(d, "complex-generic", true, GaugeShape::General, std::min(a, amps[(k + (d.max_abs() == 2)) % 4]),
                   k == 2 ? Chart::South : Chart::North);

    const std::vector<WeightVector> planted = {W({0, 0}),         W({1, -1}),     W({2, -2}),         W({3, -3}),
                                               W({1, 0, -1}),     W({2, -1, -1}), W({1, 1, -2}),      W({3, 0, -3}),
                                               W({2, 1, -3}),     W({1, 1, -1, -1}), W({2, 1, -1, -2}), W({3, -1, -1, -1}),
                                               W({1, 0}),         W({2, -1})};
    for (const auto& d : planted) {
        CorpusEntry e = split_entry(d, opt.grid, "planted");
        e.name += "#" + std::to_string(c.entries.size());
        e.laurent = planted_factorization(d, rng, 1, 0.5);
        c.entries.push_back(std::move(e));
    }
    return c;
}

TwoChartConnection build_connection(const CorpusEntry& e) {
    if (!e.is_connection()) throw ValidationError("build_connection: entry " + e.name + " is a loop");
    if (e.connection) return *e.connection;
    TwoChartConnection a = make_split_connection(e.label, e.grid, e.special);
    for (const auto& s : e.steps) {
        const GaugeField h = gauge_field(e.grid, s.generator);
        a = s.complex ? complex_gauge_perturb(a, h) : unitary_gauge_transform(a, h);
    }
    a.label = e.label.d;
    a.construction = e.subfamily;
    return a;
}

json to_json(const CorpusEntry& e, bool materialize) {
    json j = {{"name", e.name},       {"subfamily", e.subfamily}, {"label", to_json(e.label)},
              {"special", e.special}, {"amplitude", e.amplitude}, {"convention", kConventionTag}};
    if (e.laurent) {
        j["kind"] = "laurent";
        j["laurent"] = to_json(*e.laurent);
        return j;
    }
    if (e.loop) {
        j["kind"] = "loop";
        j["loop"] = to_json(*e.loop);
        return j;
    }
    j["kind"] = "connection";
    j["grid"] = to_json(e.grid);
    if (materialize || e.connection) {
        j["connection"] = to_json(build_connection(e));
        return j;
    }
    json steps = json::array();
    for (const auto& s : e.steps)
        steps.push_back({{"gauge", s.complex ? "complex" : "unitary"}, {"generator", to_json(s.generator)}});
    j["steps"] = steps;
    return j;
}

CorpusEntry corpus_entry_from_json(const json& j) {
    CorpusEntry e;
    e.name = j.value("name", std::string{});
    e.subfamily = j.value("subfamily", std::string{"file"});
    e.amplitude = j.value("amplitude", 0.0);
    if (j.contains("convention") && j.at("convention").get<std::string>() != kConventionTag)
        throw ValidationError("corpus entry " + e.name + ": written under a different sign convention");
    const std::string kind = j.value("kind", std::string{});
    if (kind == "laurent") {
        e.laurent = laurent_from_json(j.at("laurent"));
        e.label = j.contains("label") ? weights_from_json(j.at("label")) : splitting_type(*e.laurent);
        e.special = j.value("special", e.label.sum() == 0);
        return e;
    }
    if (kind == "loop") {
        e.loop = loop_from_json(j.at("loop"));
        if (j.contains("label")) e.label = weights_from_json(j.at("label"));
        e.special = e.loop->spec.special;
        return e;
    }
    if (kind != "connection") throw ValidationError("corpus entry " + e.name + ": unknown kind '" + kind + "'");
    e.grid = grid_from_json(j.at("grid"));
    if (j.contains("connection")) {
        e.connection = connection_from_json(j.at("connection"));
        e.label = WeightVector(e.connection->label);
        e.special = e.connection->spec.special;
    } else {
        e.label = weights_from_json(j.at("label"));
        e.special = j.value("special", e.label.sum() == 0);
        for (const auto& s : j.value("steps", json::array())) {
            const std::string g = s.at("gauge").get<std::string>();
            if (g != "complex" && g != "unitary") throw ValidationError("corpus entry " + e.name + ": bad gauge kind");
            e.steps.push_back({g == "complex", gauge_generator_from_json(s.at("generator"))});
        }
    }
    if (j.contains("label") && !(weights_from_json(j.at("label")) == e.label))
        throw ValidationError("corpus entry " + e.name + ": label disagrees with connection metadata");
    return e;
}

json to_json(const Corpus& c, bool materialize) {
    json entries = json::array();
    for (const auto& e : c.entries) entries.push_back(to_json(e, materialize));
    return {{"type", "corpus"}, {"seed", c.seed}, {"convention", kConventionTag}, {"entries", entries}};
}

Corpus corpus_from_json(const json& j) {
    Corpus c;
    c.seed = j.value("seed", 0u);
    if (j.contains("convention") && j.at("convention").get<std::string>() != kConventionTag)
        throw ValidationError("corpus: written under a different sign convention");
    for (const auto& e : j.at("entries")) c.entries.push_back(corpus_entry_from_json(e));
    return c;
}

LaurentLoop laurent_of_loop(const DiscreteLoop& loop, double loose) {
    try {
        return loop_to_laurent_auto(loop, 1e-10);
    } catch (const SmoothnessError&) {
        return loop_to_laurent_auto(loop, loose);
    }
}

DiscreteLoop pipeline_loop(const CorpusEntry& e, const PipelineConfig& cfg) {
    if (e.laurent) return unitary_representative(*e.laurent, cfg.rays, e.special);
    if (e.loop) return *e.loop;
    return radial_trivialization(build_connection(e), cfg.rays);
}

EntryResult evaluate_entry(const CorpusEntry& e, const PipelineConfig& cfg) {
    EntryResult r;
    r.name = e.name;
    r.subfamily = e.subfamily;
    r.label = e.label;
    DiscreteLoop loop;
    try {
        if (e.is_connection()) {
            const TwoChartConnection a = build_connection(e);
            const SphereMetric g = round_metric(a.grid, cfg.area);
            r.has_bundle = true;
            r.chern = chern_integral(a);
            r.gromov = gromov_check(a, g, e.label.d.empty() ? WeightVector(std::vector<int>(a.spec.rank, 0)) : e.label);
            r.ym = ym_energy(a, g);
            loop = radial_trivialization(a, cfg.rays);
        } else {
            loop = pipeline_loop(e, cfg);
        }
    } catch (const std::exception& ex) {
        r.flow_error = r.toeplitz_error = ex.what();
        return r;
    }

    try {
        const LaurentLoop lg = e.laurent ? *e.laurent : laurent_of_loop(loop, cfg.laurent_tol);
        r.toeplitz = splitting_type(lg);
        if (e.is_connection()) r.winding = det_winding(lg);
    } catch (const std::exception& ex) {
        r.toeplitz_error = ex.what();
    }
    if (e.is_connection() && !r.winding) {
        try {
            r.winding = det_winding(laurent_of_loop(loop, 1e-6));
        } catch (const std::exception&) {
        }
    }

    try {
        const FlowTrace t = run_flow(loop, cfg.flow);
        r.flow_steps = t.steps_taken;
        r.snapped = t.snapped;
        r.converged = t.converged;
        r.final_energy = t.energies.back();
        r.monotone = true;
        for (std::size_t k = 1; k < t.energies.size(); ++k) {
            const double inc = t.energies[k] - t.energies[k - 1];
            r.max_energy_increase = std::max(r.max_energy_increase, inc);
            if (inc > 1e-12 * std::max(1.0, t.energies[k - 1])) r.monotone = false;  // round-off allowance
        }
        if (t.converged) r.flow = extract_weights(t.final_loop, cfg.flow.snap_tol);
        else r.flow_error = "flow did not converge";
    } catch (const std::exception& ex) {
        r.flow_error = ex.what();
    }
    if (r.has_bundle && e.label.d.empty() && (r.toeplitz || r.flow)) {
        // unlabeled connection: compare against the computed splitting type
        r.gromov.rhs = (r.toeplitz ? *r.toeplitz : *r.flow).max_abs();
        r.gromov.satisfied = r.gromov.lhs >= r.gromov.rhs - 1e-3;
    }
    return r;
}

std::vector<EntryResult> evaluate_corpus(const Corpus& c, const PipelineConfig& cfg) {
    std::vector<EntryResult> out(c.entries.size());
    const int n = static_cast<int>(c.entries.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < n; ++i) out[i] = evaluate_entry(c.entries[i], cfg);
    return out;
}

}  // namespace splitlab
