#include "splitlab/flow.hpp"

#include "splitlab/birkhoff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Eigenvalues>

namespace splitlab {

namespace {
constexpr double kPi = std::numbers::pi;
}

double default_step(int n, FlowMetric metric) {
    // L2: half the explicit stability limit of the discrete Laplacian
    return metric == FlowMetric::L2 ? 0.5 * kPi * kPi / (static_cast<double>(n) * n) : 0.2;
}

DiscreteLoop kahler_flow_step(const DiscreteLoop& loop, double delta) {
    const int cap = loop.size() / 4;  // dilating modes near the Nyquist limit is badly conditioned
    LaurentLoop lg = [&] {
        for (double tol : {1e-12, 1e-10, 1e-8}) {
            try {
                LaurentLoop g = loop_to_laurent_auto(loop, tol);
                if (g.degree <= cap) return g;
            } catch (const SmoothnessError&) {
            }
        }
        // small high-frequency residue (e.g. quadratic terms of a noisy loop):
        // low-pass to degree N/4; the caller rejects the step if energy goes up
        if (fourier_tail(loop, cap) <= 1e-4) return truncated_laurent(loop, cap);
        throw SmoothnessError("kahler_flow_step: loop is not smooth enough for the Kahler flow");
    }();
    const double t = std::exp(delta);
    for (int k = -lg.degree; k <= lg.degree; ++k) lg.coeff(k) *= std::pow(t, k);
    DiscreteLoop out = unitary_representative(lg, loop.size(), loop.spec.special);
    out.spec = loop.spec;
    return out;
}

namespace {

LoopTangent scaled(const LoopTangent& xi, double s) {
    LoopTangent out(xi.size());
    for (std::size_t k = 0; k < xi.size(); ++k) out[k] = s * xi[k];
    return out;
}

DiscreteLoop take_step(const DiscreteLoop& loop, FlowMetric metric, double step) {
    if (metric == FlowMetric::L2) return retract(loop, scaled(energy_gradient(loop), -step));
    return kahler_flow_step(loop, step);
}

struct State {
    DiscreteLoop loop;
    double energy;
    double grad;
};

// Closest approach: the gradient norm went down to a local minimum. Walk back
// to the last state whose energy is not below the critical value so that the
// snap keeps the energy sequence monotone.
bool try_snap(const std::vector<State>& history, const FlowConfig& cfg, FlowTrace& trace) {
    const std::size_t n = history.size();
    if (n < 3) return false;
    const State& mid = history[n - 2];
    if (!(mid.grad < cfg.snap_grad && mid.grad < history[n - 3].grad && mid.grad < history[n - 1].grad))
        return false;
    WeightVector d;
    try {
        d = extract_weights(mid.loop, cfg.snap_tol);
    } catch (const NotConvergedError&) {
        return false;
    }
    const double critical = d.sum_squares();
    for (std::size_t i = n - 1; i-- > 0;) {
        const State& s = history[i];
        if (s.energy < critical - 1e-12) continue;
        if (s.energy - critical > cfg.snap_tol) return false;
        try {
            if (!(extract_weights(s.loop, cfg.snap_tol) == d)) return false;
        } catch (const NotConvergedError&) {
            return false;
        }
        // drop energies recorded after the snap point
        trace.energies.resize(trace.energies.size() - (n - 1 - i));
        trace.final_loop = project_to_geodesic(s.loop, d);
        trace.energies.push_back(loop_energy(trace.final_loop));
        trace.final_grad_norm = tangent_norm(energy_gradient(trace.final_loop), trace.final_loop.spec);
        trace.closest_grad_norm = mid.grad;
        trace.snapped = true;
        trace.converged = trace.final_grad_norm < cfg.grad_tol;
        return true;
    }
    return false;
}

}  // namespace

FlowTrace run_flow(const DiscreteLoop& start, const FlowConfig& cfg) {
    validate_loop(start);
    const int n = start.size();
    const double max_step = cfg.step_size > 0 ? cfg.step_size : default_step(n, cfg.metric);
    FlowTrace trace;
    DiscreteLoop loop = start;
    if (cfg.perturbation > 0.0) {
        std::mt19937_64 rng(cfg.seed);
        loop = retract(loop, random_tangent(loop.spec, n, rng, cfg.perturbation / n));
    }
    double energy = loop_energy(loop);
    double gnorm = tangent_norm(energy_gradient(loop), loop.spec);
    trace.energies.push_back(energy);
    trace.closest_grad_norm = gnorm;
    std::vector<State> history;
    const bool snapping = cfg.metric == FlowMetric::Kahler;
    if (snapping) history.push_back({loop, energy, gnorm});
    double step = max_step;
    const double l2_step = default_step(n, FlowMetric::L2);
    for (int it = 0;; ++it) {
        trace.final_grad_norm = gnorm;
        if (gnorm < cfg.grad_tol) {
            trace.converged = true;
            break;
        }
        if (it >= cfg.max_steps) break;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving) {
            try {
                DiscreteLoop trial;
                try {
                    trial = take_step(loop, cfg.metric, step);
                } catch (const SmoothnessError&) {
                    if (cfg.metric != FlowMetric::Kahler) throw;
                    // too rough for the Kahler step: heat-flow steps smooth it first
                    trial = take_step(loop, FlowMetric::L2, std::min(step, l2_step));
                }
                const double e = loop_energy(trial);
                if (!cfg.adaptive || e <= energy) {
                    loop = std::move(trial);
                    energy = e;
                    accepted = true;
                    break;
                }
            } catch (const BranchCutError&) {
                if (!cfg.adaptive) throw;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no descent left at machine precision
        gnorm = tangent_norm(energy_gradient(loop), loop.spec);
        trace.energies.push_back(energy);
        trace.closest_grad_norm = std::min(trace.closest_grad_norm, gnorm);
        ++trace.steps_taken;
        if (cfg.adaptive) step = std::min(max_step, step * 1.25);
        if (snapping) {
            history.push_back({loop, energy, gnorm});
            if (history.size() > 12) history.erase(history.begin());
            if (gnorm >= cfg.grad_tol && try_snap(history, cfg, trace)) return trace;
        }
    }
    trace.final_loop = std::move(loop);
    return trace;
}

WeightVector extract_weights(const DiscreteLoop& loop, double snap_tol) {
    const int n = loop.size();
    const int r = loop.spec.rank;
    const auto logs = transition_logs(loop);
    Mat mean = Mat::Zero(r, r);
    for (const auto& x : logs) mean += x;
    mean /= static_cast<double>(n);
    double spread = 0.0;
    for (const auto& x : logs) spread = std::max(spread, op_norm(x - mean));
    if (spread * n / (2.0 * kPi) > snap_tol)
        throw NotConvergedError("extract_weights: logarithmic velocity is not constant");
    // eigenvalues of N * mean / (2 pi i)
    const Mat h = (cplx(0.0, -1.0) * static_cast<double>(n) / (2.0 * kPi)) * mean;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
    std::vector<int> w;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double v = es.eigenvalues()(i);
        const double nearest = std::round(v);
        if (std::abs(v - nearest) > snap_tol)
            throw NotConvergedError("extract_weights: eigenvalue " + std::to_string(v) +
                                    " not within snap tolerance of an integer");
        w.push_back(static_cast<int>(nearest));
    }
    return WeightVector(std::move(w));
}

DiscreteLoop project_to_geodesic(const DiscreteLoop& loop, const WeightVector& d) {
    const int n = loop.size();
    const int r = loop.spec.rank;
    const auto logs = transition_logs(loop);
    Mat mean = Mat::Zero(r, r);
    for (const auto& x : logs) mean += x;
    const Mat h = (cplx(0.0, -1.0) / (2.0 * kPi)) * mean;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (h + h.adjoint()));
    // eigenvalues ascend; weights are stored descending
    Mat q(r, r);
    for (int i = 0; i < r; ++i) q.col(i) = es.eigenvectors().col(r - 1 - i);
    DiscreteLoop out = geodesic_loop(d, q, n, loop.spec.special);
    out.spec = loop.spec;
    return out;
}

SampleOutcome flow_and_extract(const DiscreteLoop& loop, const FlowConfig& cfg) {
    SampleOutcome out;
    try {
        const FlowTrace trace = run_flow(loop, cfg);
        out.converged = trace.converged;
        out.snapped = trace.snapped;
        out.flow_energy = trace.energies.back();
        if (!trace.converged) {
            out.error = "flow did not converge in " + std::to_string(cfg.max_steps) + " steps";
            return out;
        }
        out.weights = extract_weights(trace.final_loop, cfg.snap_tol);
        out.energy = out.weights->sum_squares();
    } catch (const std::exception& e) {
        out.error = e.what();
    }
    return out;
}

std::vector<SampleOutcome> energy_profile_of_family_serial(const std::vector<DiscreteLoop>& family,
                                                           const FlowConfig& cfg) {
    std::vector<SampleOutcome> out;
    out.reserve(family.size());
    for (const auto& loop : family) out.push_back(flow_and_extract(loop, cfg));
    return out;
}

std::vector<SampleOutcome> energy_profile_of_family(const std::vector<DiscreteLoop>& family,
                                                    const FlowConfig& cfg) {
    std::vector<SampleOutcome> out(family.size());
    const int count = static_cast<int>(family.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (int i = 0; i < count; ++i) out[i] = flow_and_extract(family[i], cfg);
    return out;
}

}  // namespace splitlab
