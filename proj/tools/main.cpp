#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "beamkit/errors.hpp"
#include "beamkit/experiment.hpp"
#include "beamkit/metrics.hpp"
#include "beamkit/parallel.hpp"
#include "beamkit/roomsim.hpp"
#include "beamkit/wav.hpp"

namespace fs = std::filesystem;
using namespace beamkit;

namespace {

struct Common {
    std::string config;
    std::string out = "out";
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
};

struct BeamformerOpts {
    std::string beamformer = "cggd";
    double p = 0.5;
    std::size_t iterations = 3;
    std::string steering = "direct_path_rtf";
    std::string input;
};

std::string cache_dir_from_env() {
    const char* v = std::getenv("BEAMKIT_CACHE_DIR");
    return v ? v : "";
}

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
    cmd->add_option("--config", c.config, "Scenario or run-spec file")->required()->check(CLI::ExistingFile);
    if (with_out) cmd->add_option("--out", c.out, "Output directory");
    cmd->add_option("--seed", c.seed, "Override the scenario seed");
    cmd->add_flag("--deterministic", c.deterministic, "Single-threaded execution");
}

void add_beamformer(CLI::App* cmd, BeamformerOpts& b) {
    cmd->add_option("--beamformer", b.beamformer, "mpdr, mldr, cggd or oracle_mvdr")
        ->check(CLI::IsMember({"mpdr", "mldr", "cggd", "oracle_mvdr"}));
    cmd->add_option("--p", b.p, "CGGD shape parameter")->check(CLI::Range(0.0, 2.0));
    cmd->add_option("--iterations", b.iterations, "Iteration count for mldr/cggd")->check(CLI::PositiveNumber);
    cmd->add_option("--steering", b.steering, "freefield, direct_path_rtf or full_rtf")
        ->check(CLI::IsMember({"freefield", "direct_path_rtf", "full_rtf"}));
}

Scenario scenario_from(const Common& c) {
    Scenario s = load_scenario(c.config);
    if (c.seed) s.seed = *c.seed;
    return s;
}

BeamformerSpec spec_from(const BeamformerOpts& b) {
    const auto id = b.beamformer == "cggd" ? "cggd:" + std::to_string(b.p) : b.beamformer;
    return parse_beamformers({id}, {}).front();
}

void apply_common(const Common& c) {
    if (c.deterministic) set_max_threads(1);
}

int cmd_simulate(const Common& c) {
    apply_common(c);
    const Scenario s = scenario_from(c);
    auto scene = load_cached_scene(cache_dir_from_env(), s);
    if (!scene) {
        scene = render_scenario(s);
        store_cached_scene(cache_dir_from_env(), s, *scene);
    }
    const fs::path out(c.out);
    fs::create_directories(out / "rirs");
    write_wav((out / "mixture.wav").string(), scene->mixture);
    write_wav((out / "desired_image.wav").string(), scene->desired_image);
    write_wav((out / "interference_plus_noise.wav").string(), scene->interference_plus_noise_image);
    for (std::size_t j = 0; j < scene->rirs.size(); ++j) {
        for (std::size_t m = 0; m < scene->rirs[j].size(); ++m) {
            Waveform h(s.sample_rate, 1, 0);
            h.channels[0] = scene->rirs[j][m];
            write_wav((out / "rirs" / ("src" + std::to_string(j) + "_mic" + std::to_string(m) + ".wav")).string(), h);
        }
    }
    std::ofstream(out / "scenario.yaml") << serialize_scenario(s);
    std::cout << "rendered " << s.name << ": " << scene->mixture.num_channels() << " channels, "
              << scene->mixture.num_samples() << " samples, input SINR " << scene->realized_sinr_db << " dB\n";
    return 0;
}

ConditionContext prepare(const BeamformerOpts& b, const Scenario& s) {
    ConditionContext ctx = prepare_condition(s, steering_mode_from_string(b.steering), StftConfig{},
                                             cache_dir_from_env());
    if (!b.input.empty()) {
        const Waveform y = read_wav(b.input);
        if (y.num_channels() != s.mics.size())
            throw DimensionError("input has " + std::to_string(y.num_channels()) + " channels, scenario has " +
                                 std::to_string(s.mics.size()));
        ctx.mixture = analyze(y, StftConfig{});
    }
    return ctx;
}

int cmd_enhance(const Common& c, const BeamformerOpts& b) {
    apply_common(c);
    const Scenario s = scenario_from(c);
    const ConditionContext ctx = prepare(b, s);
    const auto bf = spec_from(b);
    const auto out = run_beamformer(ctx, bf, b.iterations, 1e-6, 1e-6, 0.0);
    for (const auto& w : out.warnings) std::cerr << "warning: " << w << '\n';
    fs::create_directories(c.out);
    const auto path = fs::path(c.out) / "enhanced.wav";
    write_wav(path.string(), synthesize(out.estimate));
    std::cout << "wrote " << path.string() << " (" << bf.id() << ", p=" << bf.shape() << ", "
              << out.iterations_run << " iterations)\n";
    return 0;
}

int cmd_evaluate(const Common& c, const BeamformerOpts& b) {
    apply_common(c);
    const Scenario s = scenario_from(c);
    const ConditionContext ctx = prepare(b, s);
    const auto bf = spec_from(b);
    const auto out = run_beamformer(ctx, bf, b.iterations, 1e-6, 1e-6, 0.0);
    EvalReport report;
    const auto hash = config_hash(serialize_scenario(s) + bf.id() + std::to_string(bf.shape()) + b.steering);
    for (std::size_t i = 0; i < out.weight_history.size(); ++i) {
        const auto m = evaluate_weights(ctx, out.weight_history[i]);
        EvalRecord r;
        r.beamformer = bf.id();
        r.p = bf.shape();
        r.input_sinr_db = s.input_sinr_db;
        r.rt60 = s.rt60;
        r.iteration = i;
        r.si_sdr_improvement_db = m.si_sdr_improvement_db;
        r.output_sinr_improvement_db = m.output_sinr_improvement_db;
        r.weight_delta = i == 0 ? 0.0 : out.per_iteration_weight_delta[i - 1];
        r.seed = s.seed;
        r.config_hash = hash;
        r.version = library_version();
        std::cout << "iteration " << i << ": SI-SDR improvement " << m.si_sdr_improvement_db
                  << " dB, output SINR improvement " << m.output_sinr_improvement_db << " dB\n";
        report.add(std::move(r));
    }
    report.write(c.out);
    return 0;
}

int cmd_sweep(const Common& c, bool out_given) {
    apply_common(c);
    RunSpec spec = load_run_spec(c.config);
    if (c.seed) {
        spec.seed = *c.seed;
        spec.scenario.seed = *c.seed;
    }
    if (out_given) spec.output_dir = c.out;
    if (spec.cache_dir.empty()) spec.cache_dir = cache_dir_from_env();
    const auto result = run(spec, [](const std::string& msg) { std::cerr << msg << '\n'; });
    std::cout << "wrote " << result.report.size() << " rows to " << spec.output_dir << '\n';
    if (result.failed_conditions > 0) {
        std::cerr << result.failed_conditions << " condition(s) failed; see failures.csv\n";
        return 1;
    }
    return 0;
}

int cmd_validate(const std::string& path) {
    const auto diags = validate_config_file(path);
    for (const auto& d : diags) std::cout << format_diagnostic(d) << '\n';
    if (diags.empty()) std::cout << path << ": ok\n";
    return diags.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"beamkit: distortionless beamformers and room-acoustics sweeps"};
    app.set_version_flag("--version", library_version());
    app.require_subcommand(1);

    Common sim_c, enh_c, eval_c, sweep_c;
    BeamformerOpts enh_b, eval_b;
    std::string validate_path;

    auto* sim = app.add_subcommand("simulate", "Render a scenario to WAV files");
    add_common(sim, sim_c);

    auto* enh = app.add_subcommand("enhance", "Run one beamformer and write the enhanced signal");
    add_common(enh, enh_c);
    add_beamformer(enh, enh_b);
    enh->add_option("--input", enh_b.input, "Mixture WAV to enhance instead of the rendered one")
        ->check(CLI::ExistingFile);

    auto* eval = app.add_subcommand("evaluate", "Per-iteration metrics of one beamformer on a scenario");
    add_common(eval, eval_c);
    add_beamformer(eval, eval_b);

    auto* sweep = app.add_subcommand("sweep", "Run a grid sweep from a run spec");
    add_common(sweep, sweep_c);

    auto* val = app.add_subcommand("validate", "Check a scenario or run spec without rendering");
    val->add_option("--config", validate_path, "Scenario or run-spec file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) return cmd_simulate(sim_c);
        if (*enh) return cmd_enhance(enh_c, enh_b);
        if (*eval) return cmd_evaluate(eval_c, eval_b);
        if (*sweep) return cmd_sweep(sweep_c, sweep->count("--out") > 0);
        if (*val) return cmd_validate(validate_path);
    } catch (const beamkit::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
