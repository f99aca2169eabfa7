// Times the serial reference objective against the OpenMP kernel on one
// batch at encoder-sized inputs. Usage: bench_objective [repeats]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <numeric>

#include <omp.h>

#include "annmix/objective.hpp"
#include "annmix/oracle.hpp"

using namespace annmix;

namespace {

template <typename Fn>
double best_of(int repeats, Fn&& fn) {
    double best = 1e300;
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    const int repeats = argc > 1 ? std::atoi(argv[1]) : 5;
    SimulationSpec s;
    s.feature_dim = 768;
    s.hidden_dim = 16;
    s.num_items = 64;
    s.num_annotators = 40;
    s.annotations_per_item = 4;
    const Simulation sim = simulate(s);

    std::vector<std::size_t> batch(128);
    std::iota(batch.begin(), batch.end(), std::size_t{0});
    std::printf("threads=%d batch=%zu D=768 H=128\n", omp_get_max_threads(), batch.size());
    for (auto effects : {EffectsMode::Fixed, EffectsMode::Intercepts, EffectsMode::Slopes}) {
        const ModelSpec spec{effects, s.scale, 768, 128};
        Rng rng(1);
        const FittedModel model =
            FittedModel::initial(spec, {sim.dataset.annotators().begin(), sim.dataset.annotators().end()}, rng);
        const std::size_t n = sim.dataset.records().size();
        const double serial = best_of(repeats, [&] { (void)objective_and_gradient_reference(model, sim.dataset, batch, n); });
        const double parallel = best_of(repeats, [&] { (void)objective_and_gradient(model, sim.dataset, batch, n); });
        std::printf("%-10s serial %8.2f ms  openmp %8.2f ms  speedup %.2fx\n", to_string(effects).c_str(), serial,
                    parallel, serial / parallel);
    }
    return 0;
}
