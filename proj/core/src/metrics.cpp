#include "beamkit/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "beamkit/errors.hpp"

namespace beamkit {

double robustness_ratio(const RobustnessScenario& rs) {
    if (!(rs.shape_p >= 0.0 && rs.shape_p <= 2.0)) throw DomainError("shape p must lie in [0, 2]");
    if (!(rs.frames_noise_only >= 0.0)) throw DomainError("L1 must be >= 0");
    if (!(rs.noise_psd > 0.0) || !std::isfinite(rs.noise_psd)) throw DomainError("noise PSD must be positive");
    if (!(rs.floor_delta > 0.0)) throw DomainError("floor delta must be positive");
    if (!(rs.speech_psd >= 0.0) || !std::isfinite(rs.speech_psd)) throw DomainError("speech PSD must be finite");
    if (!(rs.frames_with_speech > 0.0)) throw UndefinedRatioError("ratio undefined without speech frames");
    if (rs.speech_psd == 0.0) throw UndefinedRatioError("ratio undefined for zero speech PSD");

    const double p = rs.shape_p;
    const double rho = rs.noise_psd / std::pow(rs.floor_delta, 1.0 - p / 2.0);
    const double eps = rs.input_sinr();
    const double speech_term = rs.frames_with_speech * std::pow(rs.speech_psd, p / 2.0);
    return (rs.frames_noise_only * rho + speech_term / eps) / speech_term;
}

std::vector<DominanceCell> ratio_dominance_check(const RobustnessScenario& base,
                                                 std::span<const double> speech_psd_grid,
                                                 std::span<const double> p_grid) {
    std::vector<DominanceCell> out;
    out.reserve(speech_psd_grid.size() * p_grid.size());
    for (double lambda_s : speech_psd_grid) {
        RobustnessScenario gaussian = base;
        gaussian.speech_psd = lambda_s;
        gaussian.shape_p = 2.0;
        const double r2 = robustness_ratio(gaussian);
        for (double p : p_grid) {
            RobustnessScenario rs = gaussian;
            rs.shape_p = p;
            const double rp = robustness_ratio(rs);
            out.push_back({lambda_s, p, rp, r2, rp >= r2 * (1.0 - kRatioEqualityTolerance)});
        }
    }
    return out;
}

double si_sdr(const Waveform& reference, const Waveform& estimate) {
    if (reference.num_channels() != 1 || estimate.num_channels() != 1)
        throw DimensionError("si_sdr expects single-channel signals");
    if (reference.num_samples() != estimate.num_samples())
        throw DimensionError("si_sdr reference and estimate lengths differ");
    const auto& s = reference.channels[0];
    const auto& e = estimate.channels[0];

    double ss = 0.0, es = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        ss += s[i] * s[i];
        es += e[i] * s[i];
    }
    if (!(ss > 0.0)) throw MetricError("si_sdr reference is all zeros");
    const double alpha = es / ss;
    double target = 0.0, distortion = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double t = alpha * s[i];
        target += t * t;
        distortion += (e[i] - t) * (e[i] - t);
    }
    if (target == 0.0) return -kSiSdrCapDb;
    if (distortion <= target * std::pow(10.0, -kSiSdrCapDb / 10.0)) return kSiSdrCapDb;
    return std::clamp(10.0 * std::log10(target / distortion), -kSiSdrCapDb, kSiSdrCapDb);
}

double output_sinr_improvement(const StftTensor& x, const StftTensor& v, const BeamWeights& w,
                               std::size_t reference_mic, const SinrOptions& opts) {
    if (x.num_channels() == 0 || v.num_channels() == 0) throw MetricError("missing ground-truth images");
    if (x.num_channels() != v.num_channels() || x.num_bins() != v.num_bins() || x.num_frames() != v.num_frames())
        throw DimensionError("desired and interference spectra differ in shape");
    if (w.num_bins() != x.num_bins()) throw DimensionError("weights and spectra differ in bin count");
    if (reference_mic >= x.num_channels()) throw DomainError("reference microphone out of range");

    const std::size_t bins = x.num_bins(), frames = x.num_frames(), mics = x.num_channels();
    std::vector<double> frame_energy(frames, 0.0);
    for (std::size_t k = 0; k < bins; ++k)
        for (std::size_t l = 0; l < frames; ++l) frame_energy[l] += std::norm(x(reference_mic, k, l));
    const double loudest = *std::max_element(frame_energy.begin(), frame_energy.end());
    if (!(loudest > 0.0)) throw MetricError("desired image is silent");
    const double threshold = loudest * std::pow(10.0, opts.activity_threshold_db / 10.0);

    double out_x = 0.0, out_v = 0.0, in_x = 0.0, in_v = 0.0;
    for (std::size_t k = 0; k < bins; ++k) {
        for (std::size_t l = 0; l < frames; ++l) {
            if (frame_energy[l] < threshold) continue;
            cplx sx{}, sv{};
            for (std::size_t m = 0; m < mics; ++m) {
                const cplx wc = std::conj(w[k](static_cast<Eigen::Index>(m)));
                sx += wc * x(m, k, l);
                sv += wc * v(m, k, l);
            }
            out_x += std::norm(sx);
            out_v += std::norm(sv);
            in_x += std::norm(x(reference_mic, k, l));
            in_v += std::norm(v(reference_mic, k, l));
        }
    }
    if (!(out_v > 0.0) || !(in_v > 0.0))
        throw MetricError("interference-plus-noise power is zero; output SINR undefined");
    return 10.0 * std::log10(out_x / out_v) - 10.0 * std::log10(in_x / in_v);
}

double output_sinr_improvement(const SceneAudio& scene, const BeamWeights& w, const StftConfig& stft,
                               std::size_t reference_mic, const SinrOptions& opts) {
    if (scene.desired_image.num_samples() == 0 || scene.interference_plus_noise_image.num_samples() == 0)
        throw MetricError("missing ground-truth images");
    return output_sinr_improvement(analyze(scene.desired_image, stft),
                                   analyze(scene.interference_plus_noise_image, stft), w, reference_mic, opts);
}

}  // namespace beamkit
