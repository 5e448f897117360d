#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "beamkit/beamformers.hpp"
#include "beamkit/report.hpp"
#include "beamkit/roomsim.hpp"

namespace beamkit {

enum class BeamformerKind { Mpdr, Mldr, Cggd, OracleMvdr };

struct BeamformerSpec {
    BeamformerKind kind = BeamformerKind::Mpdr;
    double p = 2.0;  ///< meaningful for Cggd only; Mldr is fixed at 0

    std::string id() const;
    double shape() const;
};

/// Parses "mpdr", "mldr", "oracle_mvdr", "cggd" (expanded over p_grid) or "cggd:<p>".
std::vector<BeamformerSpec> parse_beamformers(const std::vector<std::string>& ids, const std::vector<double>& p_grid);

/// A grid sweep: every (input SINR, rt60) pair renders one scene, and every beamformer
/// runs on it.
struct RunSpec {
    std::string scenario_path;
    Scenario scenario;
    std::vector<BeamformerSpec> beamformers;
    std::vector<double> p_grid;
    std::vector<double> sinr_grid_db;
    std::vector<double> rt60_grid_s;
    std::size_t iterations = 7;
    std::string output_dir = "out";
    std::uint64_t seed = 1;
    SteeringMode steering = SteeringMode::DirectPathRtf;
    StftConfig stft;
    double loading = 1e-6;
    double relative_floor = 1e-6;
    /// 0 runs exactly `iterations` updates.
    double convergence_tol = 0.0;
    bool write_audio = true;
    /// Scene cache directory; empty disables caching.
    std::string cache_dir;

    /// Throws ConfigError on empty grids or unknown beamformers.
    void validate() const;
    /// Hash over the scenario and every sweep parameter.
    std::string hash() const;
};

/// Parses a run spec file; its scenario path is relative to the file itself.
RunSpec load_run_spec(const std::string& path);
std::vector<Diagnostic> validate_run_spec_file(const std::string& path);
/// True when the file is a run spec (has a top-level `scenario` key) rather than a scenario.
bool is_run_spec_file(const std::string& path);
/// Dispatches to validate_run_spec_file or validate_scenario_file.
std::vector<Diagnostic> validate_config_file(const std::string& path);

struct RunResult {
    EvalReport report;
    std::size_t failed_conditions = 0;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Renders each grid condition, runs every beamformer, records per-iteration SI-SDR and
/// output-SINR improvements, and rewrites the report in output_dir after every condition.
/// Module errors are recorded per condition and the sweep continues.
RunResult run(const RunSpec& spec, const ProgressFn& progress = {});

/// Metrics of one set of weights on a rendered scene.
struct ConditionContext {
    SceneAudio scene;
    SteeringVector steering;
    StftTensor mixture;
    StftTensor desired;
    StftTensor interference_plus_noise;
    Waveform reference_image;     ///< desired image at the reference mic
    double baseline_si_sdr = 0.0; ///< SI-SDR of the reference-mic mixture
    std::size_t reference_mic = 0;
};

ConditionContext prepare_condition(const Scenario& s, SteeringMode mode, const StftConfig& stft,
                                   const std::string& cache_dir = "");

struct WeightMetrics {
    double si_sdr_improvement_db = 0.0;
    double output_sinr_improvement_db = 0.0;
};

WeightMetrics evaluate_weights(const ConditionContext& ctx, const BeamWeights& w);

/// Runs one beamformer on a prepared condition. For the iterative kinds the result keeps
/// the full weight history.
EnhancedOutput run_beamformer(const ConditionContext& ctx, const BeamformerSpec& bf, std::size_t iterations,
                              double loading, double relative_floor, double convergence_tol);

/// Binary scene cache keyed by the canonical scenario text.
std::optional<SceneAudio> load_cached_scene(const std::string& cache_dir, const Scenario& s);
void store_cached_scene(const std::string& cache_dir, const Scenario& s, const SceneAudio& scene);

}  // namespace beamkit
