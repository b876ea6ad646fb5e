// Acceptance run: one PASS/FAIL line per criterion.
//
// Exit code 0 when every criterion passes except those listed with
// --known-failures (which are still reported as FAIL), 2 otherwise.

#include <chrono>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "splitlab/corpus.hpp"

using namespace splitlab;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* title;
    double budget_s;  // runtime limit, <= 0 for none
    std::function<Outcome()> run;
};

std::string fmt(double v, int prec = 3) {
    std::ostringstream os;
    os << std::setprecision(prec) << v;
    return os.str();
}

// criteria 3, 4, 6 and 7 share one corpus evaluation
struct CorpusRun {
    Corpus corpus;
    std::vector<EntryResult> results;
    double seconds = 0.0;
};

const CorpusRun& corpus_run() {
    static const CorpusRun run = [] {
        CorpusRun r;
        const auto t0 = std::chrono::steady_clock::now();
        r.corpus = generate_corpus(CorpusOptions{});
        r.results = evaluate_corpus(r.corpus, PipelineConfig{});
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    }();
    return run;
}

Outcome geodesic_energy() {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> rank(1, 4), w(-3, 3);
    double worst = 0.0;
    for (int c = 0; c < 20; ++c) {
        std::vector<int> d(rank(rng));
        for (auto& x : d) x = w(rng);
        const WeightVector wd(d);
        const double e = loop_energy(geodesic_loop(wd, random_unitary(wd.rank(), rng), 512, false));
        worst = std::max(worst, std::abs(e - wd.sum_squares()) / std::max(1, wd.sum_squares()));
    }
    return {worst <= 1e-5, "20 cases, worst relative error " + fmt(worst)};
}

Outcome gradient_check() {
    std::mt19937_64 rng(2);
    const double eps = 1e-4;
    double worst = 0.0;
    for (int c = 0; c < 20; ++c) {
        const WeightVector d = c % 2 ? WeightVector({1, -1}) : WeightVector({2, -1, -1});
        const DiscreteLoop base = geodesic_loop(d, random_unitary(d.rank(), rng, true), 48);
        const DiscreteLoop l = retract(base, random_tangent(base.spec, 48, rng, 0.2));
        const LoopTangent g = energy_gradient(l);
        for (int k = 0; k < 20; ++k) {
            const LoopTangent eta = random_tangent(l.spec, l.size(), rng);
            LoopTangent plus = eta, minus = eta;
            for (auto& x : plus) x *= eps;
            for (auto& x : minus) x *= -eps;
            const double fd = (loop_energy(retract(l, plus)) - loop_energy(retract(l, minus))) / (2.0 * eps);
            const double an = tangent_pairing(g, eta, l.spec);
            worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-3));
        }
    }
    return {worst <= 1e-5, "20 loops x 20 tangents, worst relative mismatch " + fmt(worst)};
}

Outcome splitting_triangle() {
    const CorpusRun& run = corpus_run();
    std::map<std::string, std::pair<int, int>> by_family;  // agree, total
    std::vector<std::string> bad;
    for (const auto& r : run.results) {
        auto& [ok, total] = by_family[r.subfamily];
        ++total;
        if (r.agree()) ++ok;
        else
            bad.push_back(r.name + " label " + r.label.str() + " flow " + (r.flow ? r.flow->str() : "-") +
                          " toeplitz " + (r.toeplitz ? r.toeplitz->str() : "-"));
    }
    std::ostringstream os;
    const int n = static_cast<int>(run.results.size());
    os << (n - static_cast<int>(bad.size())) << "/" << n << " agree (";
    bool first = true;
    for (const auto& [fam, c] : by_family) {
        os << (first ? "" : ", ") << fam << " " << c.first << "/" << c.second;
        first = false;
    }
    os << ")";
    for (const auto& b : bad) os << "\n    disagree: " << b;
    return {bad.empty() && n >= 50, os.str()};
}

Outcome monotone_flow() {
    const CorpusRun& run = corpus_run();
    const double grad_tol = FlowConfig{}.grad_tol;
    int nonmono = 0, off_level = 0, no_limit = 0;
    double worst_inc = 0.0, worst_gap = 0.0;
    for (const auto& r : run.results) {
        if (!r.monotone) ++nonmono;
        worst_inc = std::max(worst_inc, r.max_energy_increase);
        if (!r.flow) {
            ++no_limit;
            continue;
        }
        const double gap = std::abs(r.final_energy - r.flow->sum_squares());
        worst_gap = std::max(worst_gap, gap);
        if (gap > 10.0 * grad_tol) ++off_level;
    }
    std::ostringstream os;
    os << "non-monotone " << nonmono << ", largest step increase " << fmt(worst_inc) << ", limits off level "
       << off_level << " (worst gap " << fmt(worst_gap) << "), no limit " << no_limit;
    return {nonmono == 0 && off_level == 0 && no_limit == 0, os.str()};
}

Outcome morse_indices() {
    std::vector<CalibrationCase> cases;
    bool stable = true, above = true;
    std::ostringstream os;
    for (const auto& d : {WeightVector({1, -1}), WeightVector({2, -2}), WeightVector({3, -3}), WeightVector({1, 0, -1})}) {
        const Mat id = Mat::Identity(d.rank(), d.rank());
        const int lo = loop_hessian_negative_count(geodesic_loop(d, id, 128));
        const int hi = loop_hessian_negative_count(geodesic_loop(d, id, 256));
        stable = stable && lo == hi;
        if (d.max_abs() >= 2) above = above && hi > 2 * d.rank() - 2;
        cases.push_back({d, hi});
        os << d.str() << ": " << lo << "->" << hi << "  ";
    }
    const bool base = cases[0].oracle_index == 2;
    const auto readings = calibrate_formula_reading(cases);
    bool reproduces = std::find(readings.begin(), readings.end(), kCalibratedReading) != readings.end();
    for (const auto& c : cases) reproduces = reproduces && formula_morse_index(c.weights) == c.oracle_index;
    os << "reading " << reading_name(kCalibratedReading) << (reproduces ? " reproduces all" : " MISMATCH");
    return {stable && above && base && reproduces, os.str()};
}

Outcome chern_weil() {
    const CorpusRun& run = corpus_run();
    int n = 0, bad_residue = 0, bad_winding = 0;
    double worst = 0.0;
    for (const auto& r : run.results) {
        if (!r.has_bundle) continue;
        ++n;
        worst = std::max(worst, r.chern.residue);
        if (r.chern.residue >= 1e-3) ++bad_residue;
        if (!r.winding || r.chern.value != kConventionSign * *r.winding) ++bad_winding;
    }
    std::ostringstream os;
    os << n << " connections, worst residue " << fmt(worst) << ", residue failures " << bad_residue
       << ", chern != sign*winding " << bad_winding;
    return {n > 0 && bad_residue == 0 && bad_winding == 0, os.str()};
}

Outcome gromov_bound() {
    const CorpusRun& run = corpus_run();
    int n = 0, violated = 0, jumping1 = 0, jumping2 = 0;
    double slack = 1e300;
    for (std::size_t k = 0; k < run.results.size(); ++k) {
        const EntryResult& r = run.results[k];
        if (!r.has_bundle) continue;
        ++n;
        if (!r.gromov.satisfied) ++violated;
        slack = std::min(slack, r.gromov.lhs - r.gromov.rhs);
        const CorpusEntry& e = run.corpus.entries[k];
        const bool complex_gauge = std::any_of(e.steps.begin(), e.steps.end(), [](const GaugeStep& s) { return s.complex; });
        if (complex_gauge && e.label.max_abs() == 1) ++jumping1;
        if (complex_gauge && e.label.max_abs() == 2) ++jumping2;
    }
    std::ostringstream os;
    os << n << " connections, violations " << violated << ", smallest slack " << fmt(slack)
       << ", complex-gauge jumping examples max|d|=1: " << jumping1 << ", max|d|=2: " << jumping2;
    return {violated == 0 && jumping1 + jumping2 >= 10 && jumping1 > 0 && jumping2 > 0, os.str()};
}

Outcome zeta_realization() {
    const FlowConfig cfg;
    std::ostringstream os;
    bool ok = true;
    for (int n : {32, 64}) {
        const FamilyReport r = family_sup_energy(su2_degree_generator_family(n), cfg);
        ok = ok && r.sup_A == 2 && r.completeness == 1.0;
        os << "N=" << n << " sup_A " << r.sup_A << "  ";
    }
    const ConnectionFamily gen = su2_degree_generator_family(32);
    for (int k : {1, 2}) {
        const FamilyReport r = family_sup_energy(stabilize_family(gen, k), cfg);
        ok = ok && r.completeness == 1.0 && r.sup_A <= 2 && 2 <= 2 + k;
        os << "k=" << k << " sup_A " << r.sup_A << " <= 2 <= " << 2 + k << "  ";
    }
    return {ok, os.str()};
}

Outcome skeleton() {
    std::ostringstream os;
    bool ok = true;
    for (int r : {2, 3}) {
        // every traceless vector with entries in {-1, 0, 1}
        std::set<std::vector<int>> expected;
        std::vector<int> v(r, -1);
        for (;;) {
            int s = 0;
            for (int x : v) s += x;
            if (s == 0) expected.insert(WeightVector(v).d);
            int i = 0;
            while (i < r && v[i] == 1) v[i++] = -1;
            if (i == r) break;
            ++v[i];
        }
        std::set<std::vector<int>> got;
        for (const auto& w : skeleton_energy(2 * r - 2, r).weights) got.insert(w.d);
        ok = ok && got == expected;
        os << "r=" << r << ": " << got.size() << " weights" << (got == expected ? "" : " (MISMATCH)") << "  ";
    }
    return {ok, os.str()};
}

Outcome cascade() {
    std::ostringstream os;
    bool ok = true;
    const std::map<std::string, std::vector<int>> expected = {
        {"sphere-perfect", {1, 0, 1}}, {"sphere-z2", {1, 0, 1}}, {"torus", {1, 2, 1}}};
    for (const auto& [id, betti] : expected) {
        // build_cascade_complex raises ChainComplexError when d^2 != 0
        const CascadeComplexData c = build_cascade_complex(builtin_problem(id));
        ok = ok && c.betti == betti;
        os << id << " (";
        for (std::size_t k = 0; k < c.betti.size(); ++k) os << (k ? "," : "") << c.betti[k];
        os << ")  ";
    }
    const CascadeComplexData p = perfect_complex_for_weights(2, 2);
    std::vector<int> per_degree(5, 0);
    bool odd = false;
    for (const auto& g : p.generators) {
        if (g.degree % 2) odd = true;
        if (g.degree >= 0 && g.degree < 5) ++per_degree[g.degree];
    }
    const bool perfect = !odd && per_degree == std::vector<int>{1, 0, 1, 0, 1} && p.generators.size() == 3;
    os << "loop-space r=2 generators in degrees 0,2,4: " << (perfect ? "yes" : "no");
    return {ok && perfect, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"splitlab acceptance run"};
    std::vector<int> only, known;
    app.add_option("--only", only, "run just these criteria")->check(CLI::Range(1, 10));
    app.add_option("--known-failures", known, "criteria whose failure does not fail the run")->check(CLI::Range(1, 10));
    CLI11_PARSE(app, argc, argv);
    if (const char* s = std::getenv("SPLITLAB_THREADS"))
        if (std::atoi(s) >= 1) omp_set_num_threads(std::atoi(s));

    const std::vector<Criterion> criteria = {
        {1, "geodesic energy", 10, geodesic_energy},
        {2, "gradient correctness", 30, gradient_check},
        {3, "splitting triangle", 300, splitting_triangle},
        {4, "monotone flow", 0, monotone_flow},
        {5, "Morse indices", 300, morse_indices},
        {6, "Chern-Weil integrality", 0, chern_weil},
        {7, "Gromov bound", 0, gromov_bound},
        {8, "zeta realization", 600, zeta_realization},
        {9, "skeleton energy", 0, skeleton},
        {10, "cascade homology", 120, cascade},
    };
    bool unexpected = false;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& ex) {
            o = {false, std::string("error: ") + ex.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.id == 3) secs = std::max(secs, corpus_run().seconds);  // includes the shared corpus run
        if (c.budget_s > 0 && secs > c.budget_s) {
            o.pass = false;
            o.detail += " [over the " + fmt(c.budget_s) + " s budget]";
        }
        const bool is_known = std::find(known.begin(), known.end(), c.id) != known.end();
        std::cout << "criterion " << c.id << " " << (o.pass ? "PASS" : "FAIL") << " (" << c.title << ", "
                  << fmt(secs, 3) << " s)" << (!o.pass && is_known ? " [known]" : "") << ": " << o.detail
                  << std::endl;
        if (!o.pass && !is_known) unexpected = true;
    }
    return unexpected ? 2 : 0;
}
