// Acceptance checks. Prints one PASS/FAIL line per criterion; `--only <id>` runs a single
// criterion (1..8, or 7a..7d). Exit status is nonzero when any selected check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "beamkit/beamformers.hpp"
#include "beamkit/cxlinalg.hpp"
#include "beamkit/experiment.hpp"
#include "beamkit/metrics.hpp"
#include "beamkit/roomsim.hpp"
#include "beamkit/stft.hpp"
#include "oracles.hpp"

using namespace beamkit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string preset(const std::string& name) { return std::string(BEAMKIT_PRESET_DIR) + "/" + name; }

fs::path work_dir() {
    const auto dir = fs::path(BEAMKIT_ACCEPTANCE_DIR);
    fs::create_directories(dir);
    return dir;
}

const Scenario& standard() {
    static const Scenario s = load_scenario(preset("standard.yaml"));
    return s;
}

const ConditionContext& standard_condition() {
    static const ConditionContext ctx =
        prepare_condition(standard(), SteeringMode::DirectPathRtf, StftConfig{}, (work_dir() / "cache").string());
    return ctx;
}

CggdConfig iterate(double p, std::size_t iterations, double loading = 1e-6) {
    CggdConfig cfg;
    cfg.shape_p = p;
    cfg.max_iterations = iterations;
    cfg.convergence_tol = 0.0;
    cfg.loading = loading;
    cfg.keep_history = true;
    return cfg;
}

Outcome c1_stft_round_trip() {
    std::mt19937_64 rng(1);
    Waveform w(16000.0, 6, 20 * 16000);
    for (auto& c : w.channels) c = oracle::random_signal(rng, w.num_samples());
    const auto t0 = Clock::now();
    const auto y = synthesize(analyze(w));
    const double elapsed = seconds_since(t0);
    // Interior: skip one frame at each end.
    const std::size_t edge = StftConfig{}.frame_len;
    double num = 0.0, den = 0.0;
    for (std::size_t m = 0; m < 6; ++m)
        for (std::size_t i = edge; i + edge < w.num_samples(); ++i) {
            const double d = y.channels[m][i] - w.channels[m][i];
            num += d * d;
            den += w.channels[m][i] * w.channels[m][i];
        }
    const double err = std::sqrt(num / den);
    return {err <= 1e-10 && elapsed < 2.0, fmt("rel L2 %.2e (<= 1e-10), %.3f s (< 2 s)", err, elapsed)};
}

Outcome c2_distortionless() {
    const auto& ctx = standard_condition();
    double worst = max_distortionless_error(mpdr_weights(ctx.mixture, ctx.steering), ctx.steering);
    worst = std::max(worst, max_distortionless_error(oracle_mvdr_weights(ctx.interference_plus_noise, ctx.steering),
                                                     ctx.steering));
    std::size_t checked = 2;
    for (double p : {0.0, 0.25, 0.5, 1.0, 1.5, 2.0}) {
        const auto out = cggd_mldr(ctx.mixture, ctx.steering, iterate(p, 7));
        for (const auto& w : out.weight_history) {
            worst = std::max(worst, max_distortionless_error(w, ctx.steering));
            ++checked;
        }
    }
    return {worst <= 1e-8, fmt("max |w^H h - 1| = %.2e over %zu weight sets (<= 1e-8)", worst, checked)};
}

Outcome c3_reductions() {
    const auto& ctx = standard_condition();
    const std::size_t iterations = 3;
    const auto mpdr = mpdr_weights(ctx.mixture, ctx.steering);
    const auto gauss = cggd_mldr(ctx.mixture, ctx.steering, iterate(2.0, iterations));
    double dev2 = 0.0;
    for (const auto& w : gauss.weight_history)
        for (std::size_t k = 0; k < w.num_bins(); ++k)
            dev2 = std::max(dev2, (w[k] - mpdr[k]).norm() / mpdr[k].norm());

    const auto cfg = iterate(0.0, iterations);
    const auto mldr = cggd_mldr(ctx.mixture, ctx.steering, cfg);
    double dev0 = 0.0;
    for (std::size_t k = 0; k < ctx.mixture.num_bins(); ++k) {
        const auto y = ctx.mixture.bin_matrix(k);
        const auto ref = oracle::mldr_reference(y, ctx.steering[k], iterations, cfg.loading, floor_for_bin(y, cfg));
        for (std::size_t i = 0; i <= iterations; ++i)
            dev0 = std::max(dev0, (mldr.weight_history[i][k] - ref[i]).norm() / ref[i].norm());
    }
    return {dev2 <= 1e-8 && dev0 <= 1e-8,
            fmt("p=2 vs MPDR %.2e, p=0 vs MLDR reference %.2e (<= 1e-8, all bins, iterations 0..%zu)", dev2, dev0,
                iterations)};
}

Outcome c4_mpdr_optimality() {
    std::mt19937_64 rng(4);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index m = 2 + trial % 3;
        const HermitianMatrix r(oracle::random_pd(rng, m));
        const Eigen::VectorXcd h = oracle::random_vector(rng, m);
        const auto w = distortionless_solution(r, h, 0.0);
        const double closed = (w.adjoint() * r.matrix() * w)(0, 0).real();
        const double numeric = oracle::nullspace_min_power(r.matrix(), h);
        worst = std::max(worst, std::abs(closed - numeric) / numeric);
    }
    return {worst <= 1e-6, fmt("max relative power gap %.2e over 100 instances (<= 1e-6)", worst)};
}

Outcome c5_ratio_iff() {
    const auto t0 = Clock::now();
    RobustnessScenario base;
    base.frames_noise_only = 60.0;
    base.frames_with_speech = 40.0;
    base.noise_psd = 0.2;
    base.floor_delta = 1e-3;
    std::vector<double> speech, ps;
    for (int i = 0; i < 50; ++i) speech.push_back(base.floor_delta * std::pow(10.0, -2.0 + 4.0 * i / 49.0));
    for (int j = 0; j < 20; ++j) ps.push_back(2.0 * j / 20.0);
    speech[24] = base.floor_delta;  // grid point exactly on the floor
    const auto cells = ratio_dominance_check(base, speech, ps);
    std::size_t mismatches = 0;
    double eq_dev = 0.0;
    for (const auto& c : cells) {
        const double diff = c.r_p - c.r_2;
        if (c.speech_psd == base.floor_delta) {
            eq_dev = std::max(eq_dev, std::abs(diff) / c.r_2);
            if (!c.dominates) ++mismatches;
        } else {
            const int want = c.speech_psd > base.floor_delta ? 1 : -1;
            const int got = diff > 0.0 ? 1 : (diff < 0.0 ? -1 : 0);
            if (want != got || c.dominates != (want > 0)) ++mismatches;
        }
    }
    const std::vector<double> two{2.0};
    for (const auto& c : ratio_dominance_check(base, speech, two)) eq_dev = std::max(eq_dev, std::abs(c.r_p - c.r_2) / c.r_2);
    const double elapsed = seconds_since(t0);
    return {mismatches == 0 && eq_dev <= 1e-12 && elapsed < 1.0,
            fmt("%zu sign mismatches in %zu cells, equality dev %.1e (<= 1e-12), %.4f s", mismatches, cells.size(),
                eq_dev, elapsed)};
}

Outcome c6_image_method() {
    const auto& s = standard();
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> ux(0.2, 5.8), uy(0.2, 9.8), uz(0.2, 3.8);
    double worst_arrival = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Vector3d a(ux(rng), uy(rng), uz(rng)), b(ux(rng), uy(rng), uz(rng));
        const double expect = (a - b).norm() / kSpeedOfSound * s.sample_rate;
        const auto h = image_method_rir(s.room_dims, a, b, 0.32, s.sample_rate);
        std::size_t peak = 0;
        for (std::size_t i = 0; i < std::min(h.size(), static_cast<std::size_t>(expect) + 5); ++i)
            if (std::abs(h[i]) > std::abs(h[peak])) peak = i;
        worst_arrival = std::max(worst_arrival, std::abs(static_cast<double>(peak) - expect));
    }
    std::string decay;
    double worst_ratio = 0.0;
    for (double rt : {0.16, 0.32, 0.64}) {
        const auto& src = s.sources[0].position;
        const auto& mic = s.mics[0];
        const auto h = image_method_rir(s.room_dims, src, mic, rt, s.sample_rate);
        const auto start = static_cast<std::size_t>((src - mic).norm() / kSpeedOfSound * s.sample_rate) - 4;
        const auto edc = oracle::schroeder_db(h, start);
        std::size_t i = 0;
        while (i < edc.size() && edc[i] > -60.0) ++i;
        const double t60 = static_cast<double>(i) / s.sample_rate;
        worst_ratio = std::max(worst_ratio, std::abs(t60 / rt - 1.0));
        decay += fmt(" %.2f->%.3f", rt, t60);
    }
    return {worst_arrival <= 1.0 && worst_ratio <= 0.2,
            fmt("arrival error %.2f samples (<= 1); T60 s:%s (max dev %.0f%%, <= 20%%)", worst_arrival, decay.c_str(),
                100.0 * worst_ratio)};
}

// Criterion 7 runs the shipped sweep presets and reads their reports.
struct Sweep {
    EvalReport report;
    double seconds = 0.0;
};

const Sweep& sweep(const std::string& name) {
    static std::map<std::string, Sweep> done;
    if (auto it = done.find(name); it != done.end()) return it->second;
    auto spec = load_run_spec(preset(name + ".yaml"));
    spec.output_dir = (work_dir() / name).string();
    spec.cache_dir = (work_dir() / "cache").string();
    spec.write_audio = false;
    const auto t0 = Clock::now();
    auto result = run(spec);
    Sweep out{std::move(result.report), seconds_since(t0)};
    return done.emplace(name, std::move(out)).first->second;
}

double sdr(const EvalReport& r, const std::string& bf, double p, double sinr, double rt, std::size_t it) {
    return r.at(bf, p, sinr, rt, it).si_sdr_improvement_db;
}

Outcome c7a_iterations() {
    const auto& r = sweep("sweep_iterations").report;
    const double cggd = sdr(r, "cggd", 0.5, 0.0, 0.16, 3);
    const double mpdr = sdr(r, "mpdr", 2.0, 0.0, 0.16, 0);
    const double mldr = sdr(r, "mldr", 0.0, 0.0, 0.16, 3);
    const double oracle = sdr(r, "oracle_mvdr", 2.0, 0.0, 0.16, 0);
    double best_other = -1e300;
    for (const auto& rec : r.records())
        if (rec.beamformer != "oracle_mvdr") best_other = std::max(best_other, rec.si_sdr_improvement_db);
    const bool pass = cggd >= mpdr + 1.0 && cggd >= mldr && oracle >= best_other;
    return {pass, fmt("SI-SDR impr: CGGD(0.5)@3 %.2f, MPDR %.2f, MLDR@3 %.2f, oracle %.2f (best non-oracle %.2f) dB",
                      cggd, mpdr, mldr, oracle, best_other)};
}

Outcome c7b_convergence() {
    const auto& r = sweep("sweep_iterations").report;
    std::string trace;
    for (std::size_t i = 1; i <= 7; ++i) trace += fmt(" %.3f", r.at("cggd", 0.5, 0.0, 0.16, i).weight_delta);
    const double delta3 = r.at("cggd", 0.5, 0.0, 0.16, 3).weight_delta;
    const double sdr2 = sdr(r, "cggd", 0.5, 0.0, 0.16, 2), sdr3 = sdr(r, "cggd", 0.5, 0.0, 0.16, 3),
                 sdr7 = sdr(r, "cggd", 0.5, 0.0, 0.16, 7);
    return {delta3 < 1e-2, fmt("max_k relative weight change at iteration 3 = %.3f (< 1e-2); per iteration:%s; "
                               "SI-SDR impr @2/@3/@7 = %.2f/%.2f/%.2f dB",
                               delta3, trace.c_str(), sdr2, sdr3, sdr7)};
}

Outcome c7c_sinr() {
    const auto& r = sweep("sweep_sinr").report;
    const std::vector<double> grid{-5.0, 0.0, 5.0, 10.0};
    bool pass = true;
    std::string mp, cg;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double m = sdr(r, "mpdr", 2.0, grid[i], 0.16, 0);
        const double c = sdr(r, "cggd", 0.5, grid[i], 0.16, 3);
        if (i > 0 && m > sdr(r, "mpdr", 2.0, grid[i - 1], 0.16, 0)) pass = false;
        if (c < m) pass = false;
        mp += fmt(" %.2f", m);
        cg += fmt(" %.2f", c);
    }
    return {pass, fmt("MPDR over -5..10 dB:%s; CGGD(0.5)@3:%s", mp.c_str(), cg.c_str())};
}

Outcome c7d_rt60() {
    const auto& r = sweep("sweep_rt60").report;
    auto gap = [&](double rt) { return sdr(r, "cggd", 0.5, 0.0, rt, 3) - sdr(r, "mldr", 0.0, 0.0, rt, 3); };
    const double g0 = gap(0.0), g160 = gap(0.16), g640 = gap(0.64);
    return {g0 > g640 && g160 > g640,
            fmt("CGGD(0.5)-MLDR gap @3: 0 ms %.2f, 160 ms %.2f, 320 ms %.2f, 480 ms %.2f, 640 ms %.2f dB", g0, g160,
                gap(0.32), gap(0.48), g640)};
}

Outcome c8_monotone_cost() {
    const auto& ctx = standard_condition();
    const std::size_t iterations = 7;
    std::size_t violations = 0, checks = 0;
    double worst = -1e300;
    for (double p : {0.0, 0.5, 1.0, 1.5}) {
        const auto cfg = iterate(p, iterations, 0.0);
        const auto out = cggd_mldr(ctx.mixture, ctx.steering, cfg);
        for (std::size_t k = 0; k < ctx.mixture.num_bins(); ++k) {
            const auto y = ctx.mixture.bin_matrix(k);
            const double delta = floor_for_bin(y, cfg);
            for (std::size_t i = 0; i < iterations; ++i) {
                const auto& w_old = out.weight_history[i][k];
                const auto& w_new = out.weight_history[i + 1][k];
                std::vector<double> lambdas(static_cast<std::size_t>(y.cols()));
                for (Eigen::Index l = 0; l < y.cols(); ++l) lambdas[static_cast<std::size_t>(l)] = std::norm(w_old.dot(y.col(l)));
                const double before = weighted_output_power(w_old, y, lambdas, p, delta);
                const double after = weighted_output_power(w_new, y, lambdas, p, delta);
                const double rel = (after - before) / before;
                worst = std::max(worst, rel);
                ++checks;
                if (rel > 1e-9) ++violations;
            }
        }
    }
    return {violations == 0, fmt("%zu of %zu (p, bin, iteration) updates increase the cost; max relative change %+.2e "
                                 "(tolerance 1e-9)",
                                 violations, checks, worst)};
}

}  // namespace

int main(int argc, char** argv) {
    std::string only;
    for (int i = 1; i < argc; ++i)
        if (std::string(argv[i]) == "--only" && i + 1 < argc) only = argv[++i];

    const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
        {"1", c1_stft_round_trip}, {"2", c2_distortionless},   {"3", c3_reductions}, {"4", c4_mpdr_optimality},
        {"5", c5_ratio_iff},       {"6", c6_image_method},     {"7a", c7a_iterations}, {"7b", c7b_convergence},
        {"7c", c7c_sinr},          {"7d", c7d_rt60},           {"8", c8_monotone_cost}};

    bool all = true, any = false;
    bool seven = true, seven_ran = false;
    for (const auto& [id, fn] : checks) {
        const bool is_seven = id[0] == '7';
        if (!only.empty() && only != id && !(only == "7" && is_seven)) continue;
        any = true;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", id.c_str(), o.detail.c_str());
        std::fflush(stdout);
        all = all && o.pass;
        if (is_seven) {
            seven = seven && o.pass;
            seven_ran = true;
        }
    }
    if (seven_ran && (only.empty() || only == "7")) {
        double total = 0.0;
        for (const char* n : {"sweep_iterations", "sweep_sinr", "sweep_rt60"}) total += sweep(n).seconds;
        const bool fast = total < 300.0;
        std::printf("%s criterion 7: a-d %s, sweep runtime %.1f s (< 300 s)\n", seven && fast ? "PASS" : "FAIL",
                    seven ? "hold" : "do not all hold", total);
        all = all && fast;
    }
    if (!any) {
        std::fprintf(stderr, "unknown criterion '%s'\n", only.c_str());
        return 2;
    }
    return all ? 0 : 1;
}
