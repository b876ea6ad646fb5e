#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splitlab/io.hpp"

namespace splitlab {

/// One gauge move applied to a split connection.
struct GaugeStep {
    bool complex = false;  // false: unitary gauge, true: complexified gauge
    GaugeGenerator generator;
};

/// A corpus entry with a planted splitting type. Connections are stored as a
/// recipe (split connection + gauge moves) unless `connection` holds full
/// field data; planted Birkhoff factorizations are stored as Laurent loops.
struct CorpusEntry {
    std::string name;
    std::string subfamily;  // split, unitary-gauge, complex-diagonal, complex-generic, planted, file
    WeightVector label;
    bool special = true;
    SphereGrid grid;
    std::vector<GaugeStep> steps;
    std::optional<TwoChartConnection> connection;
    std::optional<LaurentLoop> laurent;
    std::optional<DiscreteLoop> loop;  // sampled loop read from a file, label may be empty
    double amplitude = 0.0;

    bool is_connection() const { return !laurent && !loop; }
};

struct Corpus {
    unsigned seed = 0;
    std::vector<CorpusEntry> entries;
};

struct CorpusOptions {
    unsigned seed = 20240611;
    SphereGrid grid;
    double max_amplitude = 0.3;
};

/// Fixed mix of split, unitary-gauge, complex-gauge and planted-factorization entries.
Corpus generate_corpus(const CorpusOptions& opt);

TwoChartConnection build_connection(const CorpusEntry& e);

json to_json(const CorpusEntry& e, bool materialize = false);
CorpusEntry corpus_entry_from_json(const json& j);
json to_json(const Corpus& c, bool materialize = false);
Corpus corpus_from_json(const json& j);

struct PipelineConfig {
    FlowConfig flow;
    int rays = 64;          // samples of the radial trivialization / unitary representative
    double laurent_tol = 1e-8;
    double area = 0.0;      // <= 0: round unit sphere
};

/// Both splitting paths plus the bundle checks for one entry.
struct EntryResult {
    std::string name, subfamily;
    WeightVector label;
    std::optional<WeightVector> flow, toeplitz;
    std::string flow_error, toeplitz_error;
    bool snapped = false;
    bool converged = false;
    bool monotone = false;
    double max_energy_increase = 0.0;  // over the recorded sequence
    double final_energy = 0.0;         // energy of the flow limit
    int flow_steps = 0;
    // connections only
    bool has_bundle = false;
    ChernResult chern;
    std::optional<int> winding;  // det_winding of the Laurent form of Rad
    GromovRecord gromov;
    double ym = 0.0;

    /// Both paths succeeded, agree with each other and with the label when there is one.
    bool agree() const {
        return flow && toeplitz && *flow == *toeplitz && (label.d.empty() || *flow == label);
    }
};

EntryResult evaluate_entry(const CorpusEntry& e, const PipelineConfig& cfg);

/// Entries are independent; evaluated in parallel, results keep the input order.
std::vector<EntryResult> evaluate_corpus(const Corpus& c, const PipelineConfig& cfg);

/// Loop handed to the flow path: Rad(A) for connections, the unitary inner
/// factor for Laurent loops, the samples themselves for sampled loops.
DiscreteLoop pipeline_loop(const CorpusEntry& e, const PipelineConfig& cfg);

/// Tries decay tolerances 1e-10 then `loose`.
LaurentLoop laurent_of_loop(const DiscreteLoop& loop, double loose = 1e-8);

}  // namespace splitlab
