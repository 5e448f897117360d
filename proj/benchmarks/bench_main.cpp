#include <benchmark/benchmark.h>

#include <random>

#include "beamkit/beamformers.hpp"
#include "beamkit/cxlinalg.hpp"
#include "beamkit/experiment.hpp"
#include "beamkit/roomsim.hpp"
#include "beamkit/stft.hpp"

using namespace beamkit;

namespace {

Waveform noise(std::size_t channels, double seconds) {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g(0.0, 0.3);
    Waveform w(16000.0, channels, static_cast<std::size_t>(seconds * 16000.0));
    for (auto& c : w.channels)
        for (auto& v : c) v = g(rng);
    return w;
}

const ConditionContext& condition() {
    static const ConditionContext ctx = [] {
        Scenario s = load_scenario(std::string(BEAMKIT_PRESET_DIR) + "/standard.yaml");
        s.duration_s = 3.0;
        return prepare_condition(s, SteeringMode::DirectPathRtf, StftConfig{});
    }();
    return ctx;
}

}  // namespace

static void BM_StftAnalyze(benchmark::State& state) {
    const auto w = noise(static_cast<std::size_t>(state.range(0)), 5.0);
    for (auto _ : state) benchmark::DoNotOptimize(analyze(w));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(w.num_samples() * w.num_channels()));
}
BENCHMARK(BM_StftAnalyze)->Arg(1)->Arg(6)->Unit(benchmark::kMillisecond);

static void BM_StftRoundTrip(benchmark::State& state) {
    const auto w = noise(6, 20.0);
    for (auto _ : state) benchmark::DoNotOptimize(synthesize(analyze(w)));
}
BENCHMARK(BM_StftRoundTrip)->Unit(benchmark::kMillisecond);

static void BM_WeightedCovariance(benchmark::State& state) {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    const auto m = state.range(0);
    Eigen::MatrixXcd y(m, 600);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = {g(rng), g(rng)};
    std::vector<double> lambdas(600);
    for (auto& l : lambdas) l = std::abs(g(rng));
    for (auto _ : state) benchmark::DoNotOptimize(weighted_covariance(y, lambdas, 0.5, 1e-6));
}
BENCHMARK(BM_WeightedCovariance)->Arg(2)->Arg(6)->Arg(12);

static void BM_Mpdr(benchmark::State& state) {
    const auto& ctx = condition();
    for (auto _ : state) benchmark::DoNotOptimize(mpdr_weights(ctx.mixture, ctx.steering));
}
BENCHMARK(BM_Mpdr)->Unit(benchmark::kMillisecond);

static void BM_CggdMldr(benchmark::State& state) {
    const auto& ctx = condition();
    CggdConfig cfg;
    cfg.shape_p = 0.5;
    cfg.max_iterations = static_cast<std::size_t>(state.range(0));
    cfg.convergence_tol = 0.0;
    for (auto _ : state) benchmark::DoNotOptimize(cggd_mldr(ctx.mixture, ctx.steering, cfg));
}
BENCHMARK(BM_CggdMldr)->Arg(1)->Arg(3)->Arg(7)->Unit(benchmark::kMillisecond);

static void BM_ImageMethodRir(benchmark::State& state) {
    const double rt60 = static_cast<double>(state.range(0)) / 1000.0;
    const Eigen::Vector3d room(6.0, 10.0, 4.0), src(3.0, 7.0, 2.0), mic(3.0, 5.0, 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(image_method_rir(room, src, mic, rt60, 16000.0));
}
BENCHMARK(BM_ImageMethodRir)->Arg(160)->Arg(320)->Arg(640)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
