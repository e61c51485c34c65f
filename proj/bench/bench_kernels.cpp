#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>

#include "tppfit/dataset.hpp"
#include "tppfit/evaluation.hpp"
#include "tppfit/fitter.hpp"
#include "tppfit/laws.hpp"

using namespace tppfit;

namespace {

template <class F>
double seconds(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* name, double serial, double parallel, bool equal) {
    std::printf("%-22s serial %8.3f s  parallel %8.3f s  speedup %5.2fx  results %s\n", name, serial, parallel,
                parallel > 0 ? serial / parallel : 0.0, equal ? "identical" : "DIFFER");
}

}  // namespace

int main() {
    std::printf("threads: %d\n", omp_get_max_threads());
    const LawParams truth = LawParams::make(LawKind::Chinchilla, {406.4, 410.7, 1.69, 0.34, 0.28});
    const auto sizes = log_space(5e6, 8e7, 14);
    const auto tokens = log_space(1e7, 3e8, 12);
    const auto grid = generate_grid(truth, sizes, tokens, {0.005, 7});

    FitConfig cfg;
    FitResult fs, fp;
    cfg.execution = Execution::Serial;
    const double ts = seconds([&] { fs = fit(grid, LawKind::Chinchilla, cfg); });
    cfg.execution = Execution::Parallel;
    const double tp = seconds([&] { fp = fit(grid, LawKind::Chinchilla, cfg); });
    report("fit (100 restarts)", ts, tp, fs == fp);

    auto syn = synthetic_sweep(truth, {1, 2, 4, 8}, log_space(1e7, 1e9, 10));
    syn.design.max_subsets = 12;
    const auto& holdout = syn.holdout;
    const auto& design = syn.design;
    FitConfig sc;
    sc.restarts = 10;
    SweepResult rs, rp;
    sc.execution = Execution::Serial;
    const double ss = seconds([&] { rs = regime_a_sweep(truth, {1, 2, 4, 8}, holdout, {100.0}, {0, 1}, sc, design); });
    sc.execution = Execution::Parallel;
    const double sp = seconds([&] { rp = regime_a_sweep(truth, {1, 2, 4, 8}, holdout, {100.0}, {0, 1}, sc, design); });
    bool same = rs.records.size() == rp.records.size();
    for (std::size_t i = 0; same && i < rs.records.size(); ++i)
        same = rs.records[i].rmse_co == rp.records[i].rmse_co && rs.records[i].rmse_nc == rp.records[i].rmse_nc;
    report("subset sweep (24 tasks)", ss, sp, same);
    return (fs == fp && same) ? 0 : 1;
}
