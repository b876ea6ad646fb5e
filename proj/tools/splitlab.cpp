// splitlab command-line driver.
//
// Exit codes: 0 verified, 1 usage or input error, 2 verification failed,
// 3 numerical oracle did not settle.

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <omp.h>

#include <CLI11.hpp>

#include "splitlab/corpus.hpp"

using namespace splitlab;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kFailed = 2;
constexpr int kUnsettled = 3;

std::string opt_str(const std::optional<WeightVector>& w) { return w ? w->str() : "-"; }

// weights as "1 -1" in CSV cells (commas would split the cell)
std::string csv_weights(const std::optional<WeightVector>& w) {
    if (!w) return "";
    std::string s;
    for (std::size_t i = 0; i < w->d.size(); ++i) s += (i ? " " : "") + std::to_string(w->d[i]);
    return s;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << std::setprecision(12);
    return out;
}

void set_threads_from_env() {
    if (const char* s = std::getenv("SPLITLAB_THREADS")) {
        const int n = std::atoi(s);
        if (n >= 1) omp_set_num_threads(n);
    }
}

struct FlowFlags {
    double grad_tol = 1e-6;
    int max_steps = 20000;
    double snap_tol = 0.1;
    int rays = 64;

    void attach(CLI::App* app) {
        app->add_option("--grad-tol", grad_tol, "flow gradient tolerance")->check(CLI::Range(1e-12, 1e-2));
        app->add_option("--max-steps", max_steps, "flow step budget")->check(CLI::Range(1, 1000000));
        app->add_option("--snap-tol", snap_tol, "weight snapping tolerance")->check(CLI::Range(1e-6, 0.5));
        app->add_option("--rays", rays, "loop samples (rays of the radial trivialization)")->check(CLI::Range(16, 1024));
    }
    PipelineConfig pipeline() const {
        PipelineConfig p;
        p.flow.grad_tol = grad_tol;
        p.flow.max_steps = max_steps;
        p.flow.snap_tol = snap_tol;
        p.rays = rays;
        return p;
    }
};

// Anything splitlab writes: corpus, corpus entry, connection, Laurent loop or sampled loop.
Corpus load_entries(const std::string& path) {
    const json j = read_json_file(path);
    const std::string type = j.value("type", std::string{});
    if (type == "corpus") return corpus_from_json(j);
    Corpus c;
    if (j.contains("kind")) {
        c.entries.push_back(corpus_entry_from_json(j));
        return c;
    }
    CorpusEntry e;
    e.name = path;
    e.subfamily = "file";
    if (type == "connection") {
        e.connection = connection_from_json(j);
        e.grid = e.connection->grid;
        e.label = WeightVector(e.connection->label);
        e.special = e.connection->spec.special;
    } else if (type == "laurent") {
        e.laurent = laurent_from_json(j);
        e.special = det_winding(*e.laurent) == 0;
    } else if (type == "loop") {
        e.loop = loop_from_json(j);
        e.special = e.loop->spec.special;
    } else {
        throw ValidationError(path + ": unrecognised content type '" + type + "'");
    }
    c.entries.push_back(std::move(e));
    return c;
}

json result_json(const EntryResult& r) {
    json j = {{"name", r.name},
              {"subfamily", r.subfamily},
              {"label", r.label.d},
              {"flow", r.flow ? json(r.flow->d) : json(nullptr)},
              {"toeplitz", r.toeplitz ? json(r.toeplitz->d) : json(nullptr)},
              {"agree", r.agree()},
              {"snapped", r.snapped},
              {"monotone", r.monotone},
              {"final_energy", r.final_energy}};
    if (!r.flow_error.empty()) j["flow_error"] = r.flow_error;
    if (!r.toeplitz_error.empty()) j["toeplitz_error"] = r.toeplitz_error;
    if (r.has_bundle) {
        j["chern"] = r.chern.value;
        j["chern_residue"] = r.chern.residue;
        j["det_winding"] = r.winding ? json(*r.winding) : json(nullptr);
        j["gromov_lhs"] = r.gromov.lhs;
        j["gromov_rhs"] = r.gromov.rhs;
        j["ym_energy"] = r.ym;
    }
    return j;
}

int cmd_split(const std::string& input, const FlowFlags& ff, const std::string& csv, const std::string& js) {
    const Corpus c = load_entries(input);
    const auto results = evaluate_corpus(c, ff.pipeline());
    int agree = 0;
    std::cout << std::left << std::setw(30) << "entry" << std::setw(18) << "label" << std::setw(18) << "flow"
              << std::setw(18) << "toeplitz" << std::setw(12) << "energy"
              << "agree\n";
    for (const auto& r : results) {
        agree += r.agree();
        std::cout << std::setw(30) << r.name << std::setw(18) << (r.label.d.empty() ? "-" : r.label.str())
                  << std::setw(18) << opt_str(r.flow) << std::setw(18) << opt_str(r.toeplitz) << std::setw(12)
                  << r.final_energy << (r.agree() ? "yes" : "NO") << "\n";
        if (!r.flow_error.empty()) std::cout << "    flow: " << r.flow_error << "\n";
        if (!r.toeplitz_error.empty()) std::cout << "    toeplitz: " << r.toeplitz_error << "\n";
    }
    std::cout << agree << "/" << results.size() << " entries agree\n";
    if (!csv.empty()) {
        auto out = open_out(csv);
        out << "name,subfamily,label,flow,toeplitz,final_energy,snapped,monotone,agree\n";
        for (const auto& r : results)
            out << r.name << "," << r.subfamily << "," << csv_weights(r.label.d.empty() ? std::nullopt : std::optional(r.label))
                << "," << csv_weights(r.flow) << "," << csv_weights(r.toeplitz) << "," << r.final_energy << ","
                << r.snapped << "," << r.monotone << "," << r.agree() << "\n";
    }
    if (!js.empty()) {
        json arr = json::array();
        for (const auto& r : results) arr.push_back(result_json(r));
        write_json_file(js, {{"entries", arr}, {"agree", agree}, {"total", results.size()}}, 2);
    }
    return agree == static_cast<int>(results.size()) ? kOk : kFailed;
}

int cmd_index(const std::vector<int>& w, int n, const std::string& js) {
    const WeightVector d(w);
    const bool special = d.sum() == 0;
    const int r = d.rank();
    const Mat q = Mat::Identity(r, r);
    const auto lo = loop_hessian_spectrum(geodesic_loop(d, q, n, special));
    const auto hi = loop_hessian_spectrum(geodesic_loop(d, q, 2 * n, special));
    json out = {{"weights", d.d}, {"n", n}, {"oracle", lo.negative}, {"oracle_refined", hi.negative},
                {"bound_2r_minus_2", 2 * r - 2}, {"reading", reading_name(kCalibratedReading)}};
    std::cout << "weights " << d.str() << ", N = " << n << " and " << 2 * n << "\n";
    std::cout << "  hessian oracle:      " << lo.negative << " / " << hi.negative << "\n";
    int code = kOk;
    if (lo.negative != hi.negative) {
        std::cout << "  oracle not stable under N doubling; refine N\n";
        code = kUnsettled;
    }
    if (d.is_constant()) {
        std::cout << "  formula: not applicable to the constant class (index 0)\n";
        out["formula"] = nullptr;
        if (lo.negative != 0 && code == kOk) code = kFailed;
    } else {
        const int f = formula_morse_index(d);
        out["formula"] = f;
        out["formula_global_offset"] = formula_morse_index(d, FormulaReading::GlobalOffset);
        std::cout << "  formula (" << reading_name(kCalibratedReading) << "): " << f << "\n";
        std::cout << "  2r-2 = " << 2 * r - 2 << ", index " << (lo.negative > 2 * r - 2 ? ">" : "<=") << " 2r-2\n";
        if (f != lo.negative && code == kOk) code = kFailed;
    }
    out["agree"] = code == kOk;
    if (!js.empty()) write_json_file(js, out, 2);
    return code;
}

ConnectionFamily builtin_family(const std::string& name, int resolution, int stabilize) {
    if (name == "generator") return stabilize_family(su2_degree_generator_family(resolution), stabilize);
    if (name == "constant") return constant_family(GroupSpec(2 + stabilize, true), 8, resolution);
    throw ValidationError("unknown built-in family '" + name + "' (generator, constant)");
}

int cmd_zeta(const std::vector<std::string>& files, const std::vector<std::string>& builtins, int resolution,
             int stabilize, const FlowFlags& ff, const std::string& csv, const std::string& js) {
    std::vector<ConnectionFamily> fams;
    for (const auto& f : files) fams.push_back(family_from_json(read_json_file(f)));
    for (const auto& b : builtins) fams.push_back(builtin_family(b, resolution, stabilize));
    if (fams.empty()) throw ValidationError("zeta: give --family or --builtin");
    const FlowConfig cfg = ff.pipeline().flow;
    std::vector<FamilyReport> reps;
    for (const auto& f : fams) reps.push_back(family_sup_energy(f, cfg));
    ZetaBound z;
    z.best_family = 0;
    for (std::size_t i = 0; i < reps.size(); ++i) {
        z.family_sups.push_back(reps[i].sup_A);
        if (i == 0 || reps[i].sup_A < z.upper_bound) {
            z.upper_bound = reps[i].sup_A;
            z.best_family = static_cast<int>(i);
        }
    }
    bool complete = true;
    json summary = {{"upper_bound", z.upper_bound}, {"best_family", fams[z.best_family].name}};
    json per = json::array();
    for (std::size_t i = 0; i < fams.size(); ++i) {
        const auto& rep = reps[i];
        complete = complete && rep.completeness == 1.0 && rep.oracle_disagreements == 0;
        std::cout << fams[i].name << ": sup |u|_A = " << rep.sup_A << ", sup |u|_A,inf = " << rep.sup_inf
                  << ", completeness " << rep.completeness << ", oracle " << rep.oracle_checked - rep.oracle_disagreements
                  << "/" << rep.oracle_checked << "\n";
        per.push_back({{"name", fams[i].name},
                       {"class", fams[i].class_tag},
                       {"samples", fams[i].samples.size()},
                       {"sup_A", rep.sup_A},
                       {"sup_inf", rep.sup_inf},
                       {"completeness", rep.completeness},
                       {"oracle_checked", rep.oracle_checked},
                       {"oracle_disagreements", rep.oracle_disagreements}});
    }
    summary["families"] = per;
    std::cout << "zeta_YM upper bound: " << z.upper_bound << " (" << fams[z.best_family].name << ")\n";
    if (!csv.empty()) {
        auto out = open_out(csv);
        out << "family,index,weights,u_A,u_inf,flow_energy,snapped,oracle,error\n";
        for (std::size_t i = 0; i < fams.size(); ++i)
            for (const auto& s : reps[i].per_sample)
                out << fams[i].name << "," << s.index << "," << csv_weights(s.weights) << "," << s.u_A << "," << s.u_inf
                    << "," << s.flow_energy << "," << s.snapped << "," << csv_weights(s.oracle) << ",\"" << s.error
                    << "\"\n";
    }
    if (!js.empty()) write_json_file(js, summary, 2);
    return complete ? kOk : kFailed;
}

int cmd_gromov(const std::string& input, const FlowFlags& ff, double area, const std::string& csv,
               const std::string& js) {
    Corpus c = input.empty() ? generate_corpus({}) : load_entries(input);
    std::erase_if(c.entries, [](const CorpusEntry& e) { return !e.is_connection(); });
    PipelineConfig cfg = ff.pipeline();
    cfg.area = area;
    const auto results = evaluate_corpus(c, cfg);
    int ok = 0;
    std::cout << std::left << std::setw(30) << "entry" << std::setw(18) << "label" << std::setw(14) << "lhs"
              << std::setw(8) << "rhs"
              << "satisfied\n";
    for (const auto& r : results) {
        ok += r.gromov.satisfied;
        std::cout << std::setw(30) << r.name << std::setw(18) << r.label.str() << std::setw(14) << r.gromov.lhs
                  << std::setw(8) << r.gromov.rhs << (r.gromov.satisfied ? "yes" : "NO") << "\n";
    }
    std::cout << ok << "/" << results.size() << " satisfied\n";
    if (!csv.empty()) {
        auto out = open_out(csv);
        out << "name,subfamily,label,lhs,rhs,satisfied,ym_energy,chern\n";
        for (const auto& r : results)
            out << r.name << "," << r.subfamily << "," << csv_weights(r.label) << "," << r.gromov.lhs << ","
                << r.gromov.rhs << "," << r.gromov.satisfied << "," << r.ym << "," << r.chern.value << "\n";
    }
    if (!js.empty()) write_json_file(js, {{"satisfied", ok}, {"total", results.size()}}, 2);
    return ok == static_cast<int>(results.size()) ? kOk : kFailed;
}

int cmd_cascade(const std::string& problem, int rank, int bound, int shooting, const std::string& csv,
                const std::string& js) {
    CascadeComplexData c;
    try {
        if (problem == "loop-space") {
            c = perfect_complex_for_weights(rank, bound);
        } else {
            MorseBottProblem p = builtin_problem(problem);
            p.shooting_samples = shooting;
            c = build_cascade_complex(p);
        }
    } catch (const ChainComplexError& e) {
        std::cout << e.what() << "\n";
        return kFailed;
    } catch (const RefineResolutionError& e) {
        std::cout << e.what() << "\n";
        return kUnsettled;
    }
    std::cout << "generators:\n";
    for (const auto& g : c.generators) std::cout << "  " << std::left << std::setw(28) << g.label << "degree " << g.degree << "\n";
    for (const auto& [k, d] : c.differential)
        if (d.size() > 0) std::cout << "d_" << k << " =\n" << d.cast<int>() << "\n";
    std::cout << "mod-2 Betti numbers:";
    for (int b : c.betti) std::cout << " " << b;
    std::cout << "\n";
    if (!csv.empty()) {
        auto out = open_out(csv);
        std::vector<int> gens(c.betti.size(), 0);
        for (const auto& g : c.generators) ++gens[g.degree];
        out << "degree,generators,betti\n";
        for (std::size_t k = 0; k < c.betti.size(); ++k) out << k << "," << gens[k] << "," << c.betti[k] << "\n";
    }
    if (!js.empty()) {
        json j = to_json(c);
        j["problem"] = problem;
        write_json_file(js, j, 2);
    }
    return kOk;
}

struct GenFlags {
    std::string kind = "corpus";
    std::string out;
    unsigned seed = 20240611;
    double amplitude = 0.3;
    int m_rho = 160;
    int n_theta = 64;
    std::vector<int> weights;
    int resolution = 64;
    int stabilize = 0;
    bool materialize = false;
};

int cmd_corpus_gen(const GenFlags& g) {
    SphereGrid grid;
    grid.m_rho = g.m_rho;
    grid.n_theta = g.n_theta;
    grid.validate();
    json j;
    if (g.kind == "corpus") {
        CorpusOptions opt;
        opt.seed = g.seed;
        opt.grid = grid;
        opt.max_amplitude = g.amplitude;
        const Corpus c = generate_corpus(opt);
        j = to_json(c, g.materialize);
        std::cout << c.entries.size() << " entries\n";
    } else if (g.kind == "split" || g.kind == "trivial") {
        const WeightVector d = g.kind == "trivial" ? WeightVector(std::vector<int>(g.weights.empty() ? 2 : g.weights.size(), 0))
                                                   : WeightVector(g.weights);
        if (d.d.empty()) throw ValidationError("corpus-gen split: --weights required");
        TwoChartConnection a = make_split_connection(d, grid, d.sum() == 0);
        a.construction = g.kind;
        j = to_json(a);
    } else if (g.kind == "planted") {
        if (g.weights.empty()) throw ValidationError("corpus-gen planted: --weights required");
        std::mt19937_64 rng(g.seed);
        j = to_json(planted_factorization(WeightVector(g.weights), rng));
    } else if (g.kind == "generator-family" || g.kind == "constant-family") {
        j = to_json(builtin_family(g.kind == "generator-family" ? "generator" : "constant", g.resolution, g.stabilize));
    } else {
        throw ValidationError("unknown corpus kind '" + g.kind + "'");
    }
    write_json_file(g.out, j);
    std::cout << "wrote " << g.out << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    set_threads_from_env();
    CLI::App app{"splitlab - splitting types of bundles over the two-sphere"};
    app.set_config("--config", "", "TOML or INI file mirroring the command-line flags");
    app.require_subcommand(1);
    std::cout << std::setprecision(10);

    FlowFlags ff;
    std::string input, csv, js;

    auto* split = app.add_subcommand("split", "splitting type of a loop, connection or corpus by flow and Toeplitz rank");
    split->add_option("-i,--input", input, "JSON file written by corpus-gen")->required()->check(CLI::ExistingFile);
    ff.attach(split);
    split->add_option("--csv", csv, "per-entry table");
    split->add_option("--json", js, "summary");

    std::vector<int> weights;
    int n = 128;
    auto* index = app.add_subcommand("index", "Morse index of a geodesic loop: formula vs Hessian oracle");
    index->add_option("-w,--weights", weights, "weights, comma separated")->required()->delimiter(',');
    index->add_option("-n,--samples", n, "loop samples; the oracle also runs at 2N")->check(CLI::Range(16, 512));
    index->add_option("--json", js, "summary");

    std::vector<std::string> fam_files, builtins;
    int resolution = 64, stabilize = 0;
    auto* zeta = app.add_subcommand("zeta", "upper bound for zeta_YM from sampled families");
    zeta->add_option("-f,--family", fam_files, "family JSON file (repeatable)")->check(CLI::ExistingFile);
    zeta->add_option("-b,--builtin", builtins, "built-in family: generator, constant (repeatable)");
    zeta->add_option("--resolution", resolution, "loop samples of built-in families")->check(CLI::Range(16, 1024));
    zeta->add_option("--stabilize", stabilize, "block-stabilize built-in families by k")->check(CLI::Range(0, 4));
    ff.attach(zeta);
    zeta->add_option("--csv", csv, "per-sample table");
    zeta->add_option("--json", js, "summary");

    double area = 0.0;
    auto* gromov = app.add_subcommand("gromov", "curvature lower bound on a connection corpus");
    gromov->add_option("-i,--input", input, "corpus or connection file (default: generated corpus)")
        ->check(CLI::ExistingFile);
    gromov->add_option("--area", area, "sphere area, default 4 pi")->check(CLI::NonNegativeNumber);
    ff.attach(gromov);
    gromov->add_option("--csv", csv, "per-entry table");
    gromov->add_option("--json", js, "summary");

    std::string problem = "torus";
    int rank = 2, bound = 2, shooting = 96;
    auto* cascade = app.add_subcommand("cascade", "mod-2 cascade Morse-Bott complex and its homology");
    cascade->add_option("-p,--problem", problem, "torus, sphere-perfect, sphere-z2 or loop-space")
        ->check(CLI::IsMember({"torus", "sphere-perfect", "sphere-z2", "loop-space"}));
    cascade->add_option("--rank", rank, "loop-space rank")->check(CLI::Range(1, 3));
    cascade->add_option("--bound", bound, "loop-space index bound")->check(CLI::Range(0, 12));
    cascade->add_option("--shooting", shooting, "shots per unstable family")->check(CLI::Range(8, 4096));
    cascade->add_option("--csv", csv, "Betti table");
    cascade->add_option("--json", js, "complex");

    GenFlags gen;
    auto* cgen = app.add_subcommand("corpus-gen", "write corpora, connections, loops or families");
    cgen->add_option("-k,--kind", gen.kind, "corpus, split, trivial, planted, generator-family, constant-family")
        ->check(CLI::IsMember({"corpus", "split", "trivial", "planted", "generator-family", "constant-family"}));
    cgen->add_option("-o,--out", gen.out, "output JSON")->required();
    cgen->add_option("--seed", gen.seed, "random seed");
    cgen->add_option("--amplitude", gen.amplitude, "largest gauge amplitude")->check(CLI::Range(1e-6, 0.3));
    cgen->add_option("--m-rho", gen.m_rho, "colatitude intervals (multiple of 40)")->check(CLI::Range(40, 1600));
    cgen->add_option("--n-theta", gen.n_theta, "longitude samples (even)")->check(CLI::Range(8, 1024));
    cgen->add_option("-w,--weights", gen.weights, "weights for split/planted, comma separated")->delimiter(',');
    cgen->add_option("--resolution", gen.resolution, "loop samples for families")->check(CLI::Range(16, 1024));
    cgen->add_option("--stabilize", gen.stabilize, "block-stabilize the family by k")->check(CLI::Range(0, 4));
    cgen->add_flag("--materialize", gen.materialize, "store full field data instead of gauge recipes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);  // prints help or the parse error
        return rc == 0 ? kOk : kUsage;
    }
    try {
        if (*split) return cmd_split(input, ff, csv, js);
        if (*index) return cmd_index(weights, n, js);
        if (*zeta) return cmd_zeta(fam_files, builtins, resolution, stabilize, ff, csv, js);
        if (*gromov) return cmd_gromov(input, ff, area, csv, js);
        if (*cascade) return cmd_cascade(problem, rank, bound, shooting, csv, js);
        if (*cgen) return cmd_corpus_gen(gen);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
    return kUsage;
}
