#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "beamkit/beamformers.hpp"
#include "beamkit/roomsim.hpp"
#include "beamkit/stft.hpp"

namespace beamkit {

/// Idealized stationary model of a weighted covariance: L1 frames without speech and
/// L2 frames with speech of constant PSDs.
struct RobustnessScenario {
    double frames_noise_only = 0.0;   ///< L1
    double frames_with_speech = 1.0;  ///< L2
    double speech_psd = 1.0;          ///< lambda_s
    double noise_psd = 1.0;           ///< lambda_v
    double floor_delta = 1e-3;        ///< delta
    double shape_p = 0.5;

    double input_sinr() const { return speech_psd / noise_psd; }
};

/// Ratio of the interference-plus-noise to speech coefficients of the weighted covariance,
///   r_p = (L1 rho + L2 lambda_s^{p/2} / eps) / (L2 lambda_s^{p/2}),
/// with rho = lambda_v / delta^{1 - p/2} and eps = lambda_s / lambda_v. Larger is more robust.
/// Throws UndefinedRatioError when lambda_s == 0 or L2 == 0.
double robustness_ratio(const RobustnessScenario& rs);

struct DominanceCell {
    double speech_psd = 0.0;
    double shape_p = 0.0;
    double r_p = 0.0;
    double r_2 = 0.0;
    bool dominates = false;  ///< r_p >= r_2, ties within kRatioEqualityTolerance included
};

/// Relative tolerance under which r_p and r_2 count as equal.
inline constexpr double kRatioEqualityTolerance = 1e-12;

/// Evaluates r_p against r_2 over a speech-PSD x shape grid, everything else from `base`.
/// Row-major: speech PSD outer, p inner.
std::vector<DominanceCell> ratio_dominance_check(const RobustnessScenario& base,
                                                 std::span<const double> speech_psd_grid,
                                                 std::span<const double> p_grid);

/// Value returned by si_sdr for a perfect (distortion-free) estimate.
inline constexpr double kSiSdrCapDb = 80.0;

/// Scale-invariant SDR in dB of a single-channel estimate against a reference; no mean
/// removal. Capped to +/-kSiSdrCapDb. Throws MetricError for a zero reference.
double si_sdr(const Waveform& reference, const Waveform& estimate);

struct SinrOptions {
    /// Frames whose desired-speech energy at the reference mic lies this far below the
    /// loudest frame are excluded.
    double activity_threshold_db = -40.0;
};

/// 10 log10(|w^H X|^2 / |w^H V|^2) minus the same ratio at the reference microphone,
/// both summed over all bins of speech-active frames.
double output_sinr_improvement(const SceneAudio& scene, const BeamWeights& w, const StftConfig& stft,
                               std::size_t reference_mic, const SinrOptions& opts = {});

/// Same, from precomputed spectra of the desired and interference-plus-noise images.
double output_sinr_improvement(const StftTensor& desired, const StftTensor& interference_plus_noise,
                               const BeamWeights& w, std::size_t reference_mic, const SinrOptions& opts = {});

}  // namespace beamkit
