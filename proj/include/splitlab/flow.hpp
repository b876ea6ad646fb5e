#pragma once

#include <optional>
#include <string>
#include <vector>

#include "splitlab/loopspace.hpp"

namespace splitlab {

class NotConvergedError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Metric in which the descent direction is taken.
enum class FlowMetric {
    L2,      // gamma <- gamma exp(-step * energy_gradient(gamma))
    Kahler,  // exact time-step of the Kahler-metric gradient flow; keeps Birkhoff strata
};

struct FlowConfig {
    double step_size = 0.0;  // <= 0 selects default_step(N, metric)
    int max_steps = 20000;
    double grad_tol = 1e-6;
    double snap_tol = 0.1;
    // Kahler flow only: gradient level below which a closest approach to a
    // critical manifold may be snapped onto it.
    double snap_grad = 0.1;
    bool adaptive = true;
    FlowMetric metric = FlowMetric::Kahler;
    double perturbation = 0.0;  // optional random kick before flowing
    unsigned seed = 0;
};

double default_step(int n, FlowMetric metric);

struct FlowTrace {
    std::vector<double> energies;
    DiscreteLoop final_loop;
    int steps_taken = 0;
    bool converged = false;
    bool snapped = false;
    double final_grad_norm = 0.0;
    double closest_grad_norm = 0.0;  // smallest gradient norm met before snapping
};

FlowTrace run_flow(const DiscreteLoop& start, const FlowConfig& cfg);

/// Integer weights of a (near-)geodesic loop. Throws NotConvergedError.
WeightVector extract_weights(const DiscreteLoop& loop, double snap_tol);

/// The geodesic loop of weight d closest to a near-geodesic loop.
DiscreteLoop project_to_geodesic(const DiscreteLoop& loop, const WeightVector& d);

/// One exact step of length delta of the Kahler gradient flow: rotate the
/// loop's Laurent expansion by z -> e^delta z and take the unitary factor.
DiscreteLoop kahler_flow_step(const DiscreteLoop& loop, double delta);

struct SampleOutcome {
    std::optional<WeightVector> weights;
    double energy = 0.0;       // |u|_A = sum d_i^2 when weights are present
    double flow_energy = 0.0;  // last recorded flow energy
    bool converged = false;
    bool snapped = false;
    std::string error;
};

SampleOutcome flow_and_extract(const DiscreteLoop& loop, const FlowConfig& cfg);

/// Samples are processed independently; results keep the input order.
std::vector<SampleOutcome> energy_profile_of_family(const std::vector<DiscreteLoop>& family,
                                                    const FlowConfig& cfg);
std::vector<SampleOutcome> energy_profile_of_family_serial(const std::vector<DiscreteLoop>& family,
                                                           const FlowConfig& cfg);

}  // namespace splitlab
