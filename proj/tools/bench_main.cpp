// Timing comparison of the serial reference kernels against the
// OpenMP-parallel ones, with an equality check on the results.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "absorbmc/lattice_walk.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

double time_evolution(const absorbmc::TruncatedChain& chain, int steps,
                      absorbmc::Execution exec, double* checksum) {
    absorbmc::Evolution ev(chain, absorbmc::Site{0, 0, 0});
    const double t0 = now_seconds();
    for (int k = 0; k < steps; ++k) ev.step(exec);
    const double t1 = now_seconds();
    *checksum = ev.at(chain.absorber().m) + ev.sink();
    return t1 - t0;
}

}  // namespace

int main(int argc, char** argv) {
    int radius = 48;
    int steps = 48;
    long long walkers = 200000;
    for (int i = 1; i + 1 < argc; i += 2) {
        const std::string key = argv[i];
        if (key == "--radius") radius = std::atoi(argv[i + 1]);
        else if (key == "--steps") steps = std::atoi(argv[i + 1]);
        else if (key == "--walkers") walkers = std::atoll(argv[i + 1]);
    }

#ifdef _OPENMP
    std::printf("threads: %d\n", omp_get_max_threads());
#else
    std::printf("threads: 1 (OpenMP disabled)\n");
#endif

    const absorbmc::WalkConfig cfg3{3, 0.5, 1.0, 1.0};
    const absorbmc::AbsorberSpec abs3{{4, 0, 0}, 0.5};
    const auto chain = absorbmc::build_chain(cfg3, abs3, radius);
    std::printf("3-D evolution: radius %d, %zu states, %d steps\n", radius, chain.state_count(),
                steps);

    double sum_serial = 0.0, sum_parallel = 0.0;
    const double t_serial = time_evolution(chain, steps, absorbmc::Execution::Serial, &sum_serial);
    const double t_parallel =
        time_evolution(chain, steps, absorbmc::Execution::Parallel, &sum_parallel);
    std::printf("  serial    %8.3f s\n", t_serial);
    std::printf("  parallel  %8.3f s   speedup %.2fx   |diff| %.3g\n", t_parallel,
                t_serial / t_parallel, std::abs(sum_serial - sum_parallel));

    const std::vector<int> ns{16, 32, 64};
    std::printf("Monte Carlo: %lld walkers, 64 steps\n", walkers);
#ifdef _OPENMP
    const int max_threads = omp_get_max_threads();
    omp_set_num_threads(1);
#endif
    const double m0 = now_seconds();
    const auto mc1 = absorbmc::monte_carlo(cfg3, abs3, {2, 0, 0}, ns, walkers, 42);
    const double m1 = now_seconds();
#ifdef _OPENMP
    omp_set_num_threads(max_threads);
#endif
    const auto mcN = absorbmc::monte_carlo(cfg3, abs3, {2, 0, 0}, ns, walkers, 42);
    const double m2 = now_seconds();
    double max_diff = 0.0;
    for (std::size_t j = 0; j < ns.size(); ++j)
        max_diff = std::max(max_diff, std::abs(mc1.probability[j] - mcN.probability[j]));
    std::printf("  1 thread  %8.3f s\n", m1 - m0);
    std::printf("  parallel  %8.3f s   speedup %.2fx   |diff| %.3g\n", m2 - m1,
                (m1 - m0) / (m2 - m1), max_diff);
    return 0;
}
