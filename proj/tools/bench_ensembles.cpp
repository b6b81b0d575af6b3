// Benchmarks the replica-ensemble map in its serial and OpenMP-parallel
// forms on a representative kernel (one-interval moment changes on the
// canonical 1d preset) and verifies both produce bit-identical results.

#include <chrono>
#include <cstdlib>
#include <iostream>

#include "switchdiff/estimators.hpp"
#include "switchdiff/experiments.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace switchdiff;

int main(int argc, char** argv) {
    long n = argc > 1 ? std::atol(argv[1]) : 20000;
    if (n < 1000) n = 1000;

    const Preset& preset = preset_catalogue("canonical-1d");
    const DriftSpec spec =
        canonical_model(preset.params, preset.kappa_minus, preset.kappa_plus);
    EngineConfig cfg;
    const ModelParams p = preset.params;
    const auto x0 = radial_point(p.d, 5.0 * p.M1);

    auto kernel = [&](long, Rng& rng) {
        std::vector<double> x = x0;
        const double hold = sample_holding_time(0, p, rng);
        integrate_between_jumps(x, 0, hold, p, spec, cfg, rng);
        return norm2(x);
    };

    auto timed = [&](bool parallel) {
        const auto t0 = std::chrono::steady_clock::now();
        auto vals = map_replicas<double>(n, 1, 0xBE7C4ull, parallel, kernel);
        const auto t1 = std::chrono::steady_clock::now();
        return std::pair(std::chrono::duration<double>(t1 - t0).count(),
                         std::move(vals));
    };

    const auto [t_serial, v_serial] = timed(false);
    const auto [t_parallel, v_parallel] = timed(true);

    int threads = 1;
#ifdef _OPENMP
#pragma omp parallel
#pragma omp single
    threads = omp_get_num_threads();
#endif

    std::cout << "replicas:        " << n << "\n"
              << "serial:          " << t_serial << " s ("
              << static_cast<double>(n) / t_serial << " replicas/s)\n"
              << "parallel (" << threads << "t):   " << t_parallel << " s ("
              << static_cast<double>(n) / t_parallel << " replicas/s)\n"
              << "speedup:         " << t_serial / t_parallel << "x\n"
              << "bit-identical:   "
              << (v_serial == v_parallel ? "yes" : "NO") << "\n";
    return v_serial == v_parallel ? 0 : 1;
}
