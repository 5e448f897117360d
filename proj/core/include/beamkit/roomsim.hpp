#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamkit/beamformers.hpp"
#include "beamkit/stft.hpp"

namespace beamkit {

inline constexpr double kSpeedOfSound = 343.0;  // m/s

enum class SourceRole { Desired, Interference };

enum class SignalKind { SpeechLike, TonalChirp, White };

std::string to_string(SignalKind kind);
SignalKind signal_kind_from_string(const std::string& name);

/// Where a source's dry signal comes from.
struct SignalSpec {
    std::optional<SignalKind> synthetic = SignalKind::SpeechLike;
    std::uint64_t seed = 0;  ///< combined with the scenario seed
    std::string file;        ///< used when `synthetic` is empty; relative to the config file
};

struct SourceSpec {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    SourceRole role = SourceRole::Interference;
    SignalSpec signal;
};

struct Scenario {
    std::string name = "scenario";
    Eigen::Vector3d room_dims{6.0, 10.0, 4.0};
    double rt60 = 0.0;
    std::vector<Eigen::Vector3d> mics;
    std::vector<SourceSpec> sources;
    double sample_rate = 16000.0;
    double duration_s = 10.0;
    double input_sinr_db = 0.0;
    std::uint64_t seed = 0;
    /// Spatially white sensor noise relative to the desired image at the reference mic;
    /// empty disables it.
    std::optional<double> sensor_noise_snr_db = 40.0;
    std::size_t reference_mic = 0;
    /// Cap on total reflection order; negative selects it from the -80 dB cutoff alone.
    int max_order = -1;
    /// Directory that relative signal paths resolve against.
    std::string base_dir = ".";
    /// Config key path -> source line, filled by the loader for diagnostics.
    std::map<std::string, int> key_lines;

    Eigen::Vector3d array_center() const;
    const SourceSpec& desired() const;
};

/// One configuration problem, located in the config file when known.
struct Diagnostic {
    std::string file;
    int line = 0;  ///< 1-based; 0 when unknown
    std::string key;
    std::string kind;  ///< "schema", "geometry", "infeasible-rt60", ...
    std::string message;
};

std::string format_diagnostic(const Diagnostic& d);

/// Physics checks without rendering: positions inside the room, M >= 2, exactly one
/// desired source, rt60 >= 0 and achievable.
std::vector<Diagnostic> check_scenario(const Scenario& s, const std::string& file = "");

/// Throws the first problem from check_scenario as GeometryError / InfeasibleRt60Error / ConfigError.
void validate_scenario(const Scenario& s);

/// Sabine-formula uniform wall absorption for the room and rt60 (0 for rt60 == 0).
double sabine_absorption(const Eigen::Vector3d& room_dims, double rt60);

/// Pressure reflection coefficient of every wall for the requested rt60.
/// Throws InfeasibleRt60Error when the Sabine absorption exceeds 1.
double wall_reflection_coefficient(const Eigen::Vector3d& room_dims, double rt60);

struct RirOptions {
    int max_order = -1;
    double cutoff_db = 80.0;  ///< images weaker than this below the direct path are dropped
    double speed_of_sound = kSpeedOfSound;
};

/// Image-source room impulse response of a shoebox room with uniform walls.
/// Fractional delays use a Hann-windowed sinc spanning +/-4 samples. rt60 == 0 is anechoic.
std::vector<double> image_method_rir(const Eigen::Vector3d& room_dims, const Eigen::Vector3d& src,
                                     const Eigen::Vector3d& mic, double rt60, double sample_rate,
                                     const RirOptions& opts = {});

struct SceneAudio {
    Waveform mixture;
    Waveform desired_image;
    Waveform interference_plus_noise_image;
    std::vector<std::vector<std::vector<double>>> rirs;  ///< [source][mic]
    double realized_sinr_db = 0.0;                       ///< at the reference mic
};

/// Renders every source through its RIRs and calibrates the interference-plus-noise
/// component to the target input SINR at the reference microphone.
SceneAudio render_scenario(const Scenario& s);

enum class SteeringMode { FreeField, DirectPathRtf, FullRtf };

std::string to_string(SteeringMode mode);
SteeringMode steering_mode_from_string(const std::string& name);

/// Desired-source steering vectors for an STFT with the given frame length.
SteeringVector steering_from_scenario(const Scenario& s, SteeringMode mode, std::size_t frame_len);
/// Same, reusing RIRs from an already rendered scene (only used for the RTF modes).
SteeringVector steering_from_scenario(const Scenario& s, SteeringMode mode, std::size_t frame_len,
                                      const SceneAudio& scene);

/// Deterministic mono test signal: speech-like modulated harmonics, a linear chirp,
/// or Gaussian white noise.
Waveform synth_test_signal(SignalKind kind, double duration_s, double sample_rate, std::uint64_t seed);

// Scenario config files (YAML; JSON is accepted as a YAML subset).

/// Parses a scenario file. Throws ConfigError (with file:line) on schema errors.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& base_dir = ".",
                        const std::string& file_label = "<string>");
/// Schema and physics diagnostics for a file without rendering.
std::vector<Diagnostic> validate_scenario_file(const std::string& path);
/// Canonical YAML with absolute positions; loading it yields an equivalent scenario.
std::string serialize_scenario(const Scenario& s);

}  // namespace beamkit
