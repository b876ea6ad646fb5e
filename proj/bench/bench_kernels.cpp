// Wall-clock comparison of the OpenMP kernels against their serial references.
// Usage: bench_kernels [repeats]; thread count from SPLITLAB_THREADS or OMP_NUM_THREADS.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include <omp.h>

#include "splitlab/bundle.hpp"
#include "splitlab/flow.hpp"
#include "splitlab/invariants.hpp"

using namespace splitlab;

namespace {

double best_of(int repeats, const std::function<void()>& f) {
    double best = 1e300;
    for (int k = 0; k < repeats; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        f();
        best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    }
    return best;
}

void row(const char* name, int repeats, const std::function<void()>& par, const std::function<void()>& ser) {
    const double p = best_of(repeats, par), s = best_of(repeats, ser);
    std::printf("%-28s %12.4f %12.4f %8.2fx\n", name, s * 1e3, p * 1e3, s / p);
}

volatile double sink = 0.0;

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::max(1, std::atoi(argv[1])) : 3;
    if (const char* s = std::getenv("SPLITLAB_THREADS"))
        if (std::atoi(s) >= 1) omp_set_num_threads(std::atoi(s));
    std::printf("threads: %d, best of %d\n", omp_get_max_threads(), repeats);
    std::printf("%-28s %12s %12s %9s\n", "kernel", "serial ms", "parallel ms", "speedup");

    std::mt19937_64 rng(7);
    const WeightVector d({2, 1, -1, -2});
    const DiscreteLoop base = geodesic_loop(d, random_unitary(4, rng, true), 1024);
    const DiscreteLoop loop = retract(base, random_tangent(base.spec, 1024, rng, 0.2));
    row("loop_energy N=1024 r=4", repeats, [&] { sink = loop_energy(loop); }, [&] { sink = loop_energy_serial(loop); });
    row("energy_gradient N=1024 r=4", repeats, [&] { sink = energy_gradient(loop)[1](0, 0).real(); },
        [&] { sink = energy_gradient_serial(loop)[1](0, 0).real(); });

    const DiscreteLoop small = geodesic_loop(WeightVector({1, -1}), Mat::Identity(2, 2), 48);
    row("loop_hessian N=48 r=2", repeats, [&] { sink = loop_hessian(small)(0, 0); },
        [&] { sink = loop_hessian_serial(small)(0, 0); });

    const SphereGrid grid;
    const TwoChartConnection a = complex_gauge_perturb(
        make_split_connection(WeightVector({2, -1, -1}), grid),
        gauge_field(grid, random_gauge_generator(GroupSpec(3, true), rng, 0.1, false)));
    row("radial_trivialization 64", repeats, [&] { sink = radial_trivialization(a, 64).samples[3](0, 0).real(); },
        [&] { sink = radial_trivialization_serial(a, 64).samples[3](0, 0).real(); });

    const ConnectionFamily fam = su2_degree_generator_family(32);
    row("energy profile (66 loops)", 1, [&] { sink = energy_profile_of_family(fam.samples, FlowConfig{}).size(); },
        [&] { sink = energy_profile_of_family_serial(fam.samples, FlowConfig{}).size(); });
    return 0;
}
