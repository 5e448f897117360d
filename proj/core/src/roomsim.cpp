#include "beamkit/roomsim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "beamkit/errors.hpp"
#include "beamkit/parallel.hpp"
#include "beamkit/wav.hpp"
#include "fft.hpp"

namespace beamkit {

Eigen::Vector3d Scenario::array_center() const {
    if (mics.empty()) throw GeometryError("scenario has no microphones");
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& m : mics) c += m;
    return c / static_cast<double>(mics.size());
}

const SourceSpec& Scenario::desired() const {
    for (const auto& s : sources)
        if (s.role == SourceRole::Desired) return s;
    throw ConfigError("scenario has no desired source");
}

std::string format_diagnostic(const Diagnostic& d) {
    std::ostringstream os;
    if (!d.file.empty()) os << d.file << ':';
    if (d.line > 0) os << d.line << ':';
    if (!d.file.empty() || d.line > 0) os << ' ';
    os << d.kind;
    if (!d.key.empty()) os << " [" << d.key << ']';
    os << ": " << d.message;
    return os.str();
}

namespace {

double room_volume(const Eigen::Vector3d& d) { return d.x() * d.y() * d.z(); }

double room_surface(const Eigen::Vector3d& d) {
    return 2.0 * (d.x() * d.y() + d.x() * d.z() + d.y() * d.z());
}

bool strictly_inside(const Eigen::Vector3d& p, const Eigen::Vector3d& room) {
    for (int i = 0; i < 3; ++i)
        if (!(p(i) > 0.0 && p(i) < room(i))) return false;
    return true;
}

std::string vec_str(const Eigen::Vector3d& v) {
    std::ostringstream os;
    os << '[' << v.x() << ", " << v.y() << ", " << v.z() << ']';
    return os.str();
}

int line_of(const Scenario& s, const std::string& key) {
    // Walk up the key path until a recorded line is found.
    std::string k = key;
    while (!k.empty()) {
        if (auto it = s.key_lines.find(k); it != s.key_lines.end()) return it->second;
        const auto cut = k.find_last_of(".[");
        if (cut == std::string::npos) break;
        k.resize(cut);
    }
    return 0;
}

}  // namespace

double sabine_absorption(const Eigen::Vector3d& room_dims, double rt60) {
    if (rt60 <= 0.0) return 1.0;
    return 24.0 * std::numbers::ln10 * room_volume(room_dims) / (kSpeedOfSound * room_surface(room_dims) * rt60);
}

double wall_reflection_coefficient(const Eigen::Vector3d& room_dims, double rt60) {
    if (rt60 < 0.0) throw DomainError("rt60 must be >= 0");
    if (rt60 == 0.0) return 0.0;
    const double alpha = sabine_absorption(room_dims, rt60);
    if (alpha > 1.0)
        throw InfeasibleRt60Error("rt60 " + std::to_string(rt60) + " s needs Sabine absorption " +
                                  std::to_string(alpha) + " > 1 for this room");
    // Image paths travelling in direction u meet walls at a rate sum_i |u_i| / L_i per metre,
    // so the late energy is a direction-average of exponentials rather than a single one.
    // Pick the per-reflection energy loss that puts the Schroeder curve of that average at
    // -60 dB after rt60.
    constexpr int kGrid = 96;
    std::vector<double> rates;
    std::vector<double> weights;
    rates.reserve(kGrid * kGrid);
    weights.reserve(kGrid * kGrid);
    for (int i = 0; i < kGrid; ++i) {
        const double theta = (i + 0.5) * (std::numbers::pi / 2.0) / kGrid;
        for (int j = 0; j < kGrid; ++j) {
            const double phi = (j + 0.5) * (std::numbers::pi / 2.0) / kGrid;
            const Eigen::Vector3d u(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
            rates.push_back(kSpeedOfSound * (u.x() / room_dims.x() + u.y() / room_dims.y() + u.z() / room_dims.z()));
            weights.push_back(std::sin(theta));
        }
    }
    // Schroeder level at rt60 for an energy loss g per reflection: sum w e^{-g r T}/r / sum w/r.
    auto level = [&](double g) {
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < rates.size(); ++i) {
            num += weights[i] * std::exp(-g * rates[i] * rt60) / rates[i];
            den += weights[i] / rates[i];
        }
        return num / den;
    };
    const double target = 1e-6;
    double lo = 0.0, hi = 1.0;
    while (level(hi) > target) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (level(mid) > target ? lo : hi) = mid;
    }
    return std::exp(-0.25 * (lo + hi));
}

std::vector<Diagnostic> check_scenario(const Scenario& s, const std::string& file) {
    std::vector<Diagnostic> out;
    auto add = [&](const std::string& key, const std::string& kind, const std::string& msg) {
        out.push_back({file, line_of(s, key), key, kind, msg});
    };

    bool room_ok = true;
    for (int i = 0; i < 3; ++i) {
        if (!(s.room_dims(i) > 0.0) || !std::isfinite(s.room_dims(i))) {
            add("room_dims", "geometry", "room dimensions must be positive, got " + vec_str(s.room_dims));
            room_ok = false;
            break;
        }
    }
    if (!(s.sample_rate > 0.0)) add("sample_rate", "schema", "sample_rate must be positive");
    if (!(s.duration_s > 0.0)) add("duration_s", "schema", "duration_s must be positive");
    if (!std::isfinite(s.input_sinr_db)) add("input_sinr_db", "schema", "input_sinr_db must be finite");
    if (s.mics.size() < 2) add("array", "geometry", "need at least 2 microphones");
    if (s.reference_mic >= s.mics.size() && !s.mics.empty())
        add("reference_mic", "schema", "reference_mic out of range");

    if (room_ok) {
        for (std::size_t i = 0; i < s.mics.size(); ++i)
            if (!strictly_inside(s.mics[i], s.room_dims))
                add("array.mics[" + std::to_string(i) + "]", "geometry",
                    "microphone " + std::to_string(i) + " at " + vec_str(s.mics[i]) + " is outside the room");
        for (std::size_t i = 0; i < s.sources.size(); ++i)
            if (!strictly_inside(s.sources[i].position, s.room_dims))
                add("sources[" + std::to_string(i) + "]", "geometry",
                    "source " + std::to_string(i) + " at " + vec_str(s.sources[i].position) +
                        " is outside the room");
    }

    const auto desired = std::count_if(s.sources.begin(), s.sources.end(),
                                       [](const SourceSpec& src) { return src.role == SourceRole::Desired; });
    if (desired != 1)
        add("sources", "schema", "exactly one desired source required, found " + std::to_string(desired));

    if (!(s.rt60 >= 0.0) || !std::isfinite(s.rt60)) {
        add("rt60", "schema", "rt60 must be >= 0");
    } else if (room_ok && s.rt60 > 0.0) {
        const double alpha = sabine_absorption(s.room_dims, s.rt60);
        if (alpha > 1.0)
            add("rt60", "infeasible-rt60",
                "rt60 " + std::to_string(s.rt60) + " s requires Sabine absorption " + std::to_string(alpha) +
                    " > 1 for a " + vec_str(s.room_dims) + " m room");
    }
    return out;
}

void validate_scenario(const Scenario& s) {
    const auto diags = check_scenario(s);
    if (diags.empty()) return;
    const auto& d = diags.front();
    const auto msg = format_diagnostic(d);
    if (d.kind == "geometry") throw GeometryError(msg);
    if (d.kind == "infeasible-rt60") throw InfeasibleRt60Error(msg);
    throw ConfigError(msg);
}

std::vector<double> image_method_rir(const Eigen::Vector3d& room, const Eigen::Vector3d& src,
                                     const Eigen::Vector3d& mic, double rt60, double fs, const RirOptions& opts) {
    if (!(fs > 0.0)) throw DomainError("sample rate must be positive");
    for (int i = 0; i < 3; ++i)
        if (!(room(i) > 0.0)) throw GeometryError("room dimensions must be positive");
    if (!strictly_inside(src, room)) throw GeometryError("source " + vec_str(src) + " is outside the room");
    if (!strictly_inside(mic, room)) throw GeometryError("microphone " + vec_str(mic) + " is outside the room");
    const double beta = wall_reflection_coefficient(room, rt60);
    const double c = opts.speed_of_sound;

    const double direct = (src - mic).norm();
    if (!(direct > 0.0)) throw GeometryError("source and microphone coincide");
    const double direct_amp = 1.0 / (4.0 * std::numbers::pi * direct);
    const double amp_floor = direct_amp * std::pow(10.0, -opts.cutoff_db / 20.0);

    // Reverberant energy falls 60 dB per rt60, so the cutoff is reached after
    // rt60 * cutoff/60 past the direct path.
    const double t_max = direct / c + rt60 * opts.cutoff_db / 60.0;
    const double r_max = c * t_max + c / fs;
    const auto length = static_cast<std::size_t>(std::ceil(t_max * fs)) + 6;
    std::vector<double> h(length, 0.0);

    int max_order = opts.max_order;
    if (beta == 0.0) max_order = 0;

    std::array<int, 3> n_lim{};
    for (int i = 0; i < 3; ++i) n_lim[i] = static_cast<int>(std::ceil(r_max / (2.0 * room(i)))) + 1;
    const int order_cap = max_order >= 0 ? max_order : 1 << 30;
    std::vector<double> beta_pow;
    auto beta_to = [&](int n) {
        while (static_cast<int>(beta_pow.size()) <= n)
            beta_pow.push_back(beta_pow.empty() ? 1.0 : beta_pow.back() * beta);
        return beta_pow[static_cast<std::size_t>(n)];
    };

    constexpr double kHalfWidth = 4.0;
    auto add_tap = [&](double delay, double amp) {
        const double nearest = std::round(delay);
        if (std::abs(delay - nearest) < 1e-9) {
            if (nearest >= 0 && nearest < static_cast<double>(length)) h[static_cast<std::size_t>(nearest)] += amp;
            return;
        }
        const auto lo = static_cast<long>(std::ceil(delay - kHalfWidth));
        const auto hi = static_cast<long>(std::floor(delay + kHalfWidth));
        for (long n = lo; n <= hi; ++n) {
            if (n < 0 || n >= static_cast<long>(length)) continue;
            const double x = static_cast<double>(n) - delay;
            const double px = std::numbers::pi * x;
            const double sinc = std::sin(px) / px;
            const double win = 0.5 * (1.0 + std::cos(px / kHalfWidth));
            h[static_cast<std::size_t>(n)] += amp * sinc * win;
        }
    };

    for (int nx = -n_lim[0]; nx <= n_lim[0]; ++nx) {
        for (int qx = 0; qx <= 1; ++qx) {
            const double dx = (1 - 2 * qx) * src.x() + 2.0 * nx * room.x() - mic.x();
            const int ox = std::abs(nx - qx) + std::abs(nx);
            if (ox > order_cap || std::abs(dx) > r_max) continue;
            for (int ny = -n_lim[1]; ny <= n_lim[1]; ++ny) {
                for (int qy = 0; qy <= 1; ++qy) {
                    const double dy = (1 - 2 * qy) * src.y() + 2.0 * ny * room.y() - mic.y();
                    const int oy = ox + std::abs(ny - qy) + std::abs(ny);
                    if (oy > order_cap) continue;
                    const double dxy2 = dx * dx + dy * dy;
                    if (dxy2 > r_max * r_max) continue;
                    for (int nz = -n_lim[2]; nz <= n_lim[2]; ++nz) {
                        for (int qz = 0; qz <= 1; ++qz) {
                            const double dz = (1 - 2 * qz) * src.z() + 2.0 * nz * room.z() - mic.z();
                            const int order = oy + std::abs(nz - qz) + std::abs(nz);
                            if (order > order_cap) continue;
                            const double dist = std::sqrt(dxy2 + dz * dz);
                            if (dist > r_max) continue;
                            const double amp = beta_to(order) / (4.0 * std::numbers::pi * dist);
                            if (amp < amp_floor || amp == 0.0) continue;
                            add_tap(dist / c * fs, amp);
                        }
                    }
                }
            }
        }
    }
    return h;
}

std::string to_string(SteeringMode mode) {
    switch (mode) {
        case SteeringMode::FreeField: return "freefield";
        case SteeringMode::DirectPathRtf: return "direct_path_rtf";
        case SteeringMode::FullRtf: return "full_rtf";
    }
    return "unknown";
}

SteeringMode steering_mode_from_string(const std::string& name) {
    if (name == "freefield") return SteeringMode::FreeField;
    if (name == "direct_path_rtf") return SteeringMode::DirectPathRtf;
    if (name == "full_rtf") return SteeringMode::FullRtf;
    throw ConfigError("unknown steering mode '" + name + "'");
}

namespace {

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = a * 0x9E3779B97F4A7C15ULL + b + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<double> load_source_signal(const Scenario& s, const SourceSpec& src, std::size_t index,
                                       std::size_t length) {
    std::vector<double> x;
    if (src.signal.synthetic) {
        const auto w = synth_test_signal(*src.signal.synthetic, s.duration_s, s.sample_rate,
                                         mix_seed(s.seed, src.signal.seed * 1000 + index));
        x = w.channels[0];
    } else {
        std::string path = src.signal.file;
        if (!path.empty() && path.front() != '/') path = s.base_dir + "/" + path;
        const auto w = read_wav(path);
        if (std::abs(w.sample_rate - s.sample_rate) > 1e-9)
            throw IoError(path, "sample rate " + std::to_string(w.sample_rate) + " does not match scenario rate " +
                                    std::to_string(s.sample_rate));
        x = w.channels.at(0);
    }
    x.resize(length, 0.0);
    return x;
}

double power(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc / static_cast<double>(std::max<std::size_t>(x.size(), 1));
}

}  // namespace

SceneAudio render_scenario(const Scenario& s) {
    validate_scenario(s);
    const auto length = static_cast<std::size_t>(std::llround(s.duration_s * s.sample_rate));
    const std::size_t mics = s.mics.size();
    const std::size_t nsrc = s.sources.size();
    const std::size_t ref = s.reference_mic;

    RirOptions opts;
    opts.max_order = s.max_order;
    SceneAudio out;
    out.rirs.assign(nsrc, std::vector<std::vector<double>>(mics));
    std::vector<std::vector<double>> dry(nsrc);
    for (std::size_t j = 0; j < nsrc; ++j) dry[j] = load_source_signal(s, s.sources[j], j, length);

    parallel_for(nsrc * mics, [&](std::size_t idx) {
        const std::size_t j = idx / mics, m = idx % mics;
        out.rirs[j][m] = image_method_rir(s.room_dims, s.sources[j].position, s.mics[m], s.rt60, s.sample_rate, opts);
    });

    // images[j][m]
    std::vector<std::vector<std::vector<double>>> images(nsrc, std::vector<std::vector<double>>(mics));
    parallel_for(nsrc * mics, [&](std::size_t idx) {
        const std::size_t j = idx / mics, m = idx % mics;
        auto y = detail::fft_convolve(dry[j], out.rirs[j][m]);
        y.resize(length);
        images[j][m] = std::move(y);
    });

    Waveform desired(s.sample_rate, mics, length);
    Waveform interference(s.sample_rate, mics, length);
    bool has_interference = false;
    for (std::size_t j = 0; j < nsrc; ++j) {
        auto& target = s.sources[j].role == SourceRole::Desired ? desired : interference;
        has_interference |= s.sources[j].role == SourceRole::Interference;
        for (std::size_t m = 0; m < mics; ++m)
            for (std::size_t n = 0; n < length; ++n) target.channels[m][n] += images[j][m][n];
    }

    const double p_desired = power(desired.channels[ref]);
    if (!(p_desired > 0.0)) throw ConfigError("desired source is silent at the reference microphone");

    Waveform noise(s.sample_rate, mics, length);
    if (s.sensor_noise_snr_db) {
        std::mt19937_64 rng(mix_seed(s.seed, 0xA11CE));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const double sigma = std::sqrt(p_desired * std::pow(10.0, -*s.sensor_noise_snr_db / 10.0));
        for (std::size_t m = 0; m < mics; ++m)
            for (std::size_t n = 0; n < length; ++n) noise.channels[m][n] = sigma * gauss(rng);
    }

    // Scale the interference so that P_x / (g^2 P_i + P_n) hits the target; without
    // interferers the sensor noise itself is scaled.
    const double target = std::pow(10.0, s.input_sinr_db / 10.0);
    const double p_noise = power(noise.channels[ref]);
    const double p_interf = has_interference ? power(interference.channels[ref]) : 0.0;
    double g_interf = 1.0, g_noise = 1.0;
    if (p_interf > 0.0) {
        const double needed = p_desired / target - p_noise;
        if (!(needed > 0.0))
            throw ConfigError("input SINR " + std::to_string(s.input_sinr_db) +
                              " dB is above the sensor-noise SNR; lower it or disable sensor noise");
        g_interf = std::sqrt(needed / p_interf);
    } else if (p_noise > 0.0) {
        g_noise = std::sqrt(p_desired / target / p_noise);
    }

    Waveform ipn(s.sample_rate, mics, length);
    for (std::size_t m = 0; m < mics; ++m)
        for (std::size_t n = 0; n < length; ++n)
            ipn.channels[m][n] = g_interf * interference.channels[m][n] + g_noise * noise.channels[m][n];

    // Keep the mixture inside full scale; both components share the gain.
    double peak = 0.0;
    for (std::size_t m = 0; m < mics; ++m)
        for (std::size_t n = 0; n < length; ++n)
            peak = std::max(peak, std::abs(desired.channels[m][n] + ipn.channels[m][n]));
    if (peak > 0.9) {
        const double g = 0.9 / peak;
        for (std::size_t m = 0; m < mics; ++m)
            for (std::size_t n = 0; n < length; ++n) {
                desired.channels[m][n] *= g;
                ipn.channels[m][n] *= g;
            }
    }

    Waveform mixture(s.sample_rate, mics, length);
    for (std::size_t m = 0; m < mics; ++m)
        for (std::size_t n = 0; n < length; ++n)
            mixture.channels[m][n] = desired.channels[m][n] + ipn.channels[m][n];

    const double p_v = power(ipn.channels[ref]);
    out.realized_sinr_db = p_v > 0.0 ? 10.0 * std::log10(power(desired.channels[ref]) / p_v)
                                     : std::numeric_limits<double>::infinity();
    out.mixture = std::move(mixture);
    out.desired_image = std::move(desired);
    out.interference_plus_noise_image = std::move(ipn);
    return out;
}

namespace {

// H(k) = sum_n h[n] e^{-j 2 pi k n / N} for k = 0..N/2, any RIR length.
Eigen::VectorXcd transfer_at_bins(const std::vector<double>& h, std::size_t frame_len) {
    const std::size_t bins = frame_len / 2 + 1;
    const std::size_t q = std::max<std::size_t>(1, (h.size() + frame_len - 1) / frame_len);
    const std::size_t n = frame_len * q;
    detail::RealFft fft(n);
    std::vector<double> buf(n, 0.0);
    std::copy(h.begin(), h.end(), buf.begin());
    std::vector<cplx> spec(fft.num_bins());
    fft.forward(buf, spec);
    Eigen::VectorXcd out(static_cast<Eigen::Index>(bins));
    for (std::size_t k = 0; k < bins; ++k) out(static_cast<Eigen::Index>(k)) = spec[k * q];
    return out;
}

SteeringVector rtf_from_rirs(const Scenario& s, const std::vector<std::vector<double>>& rirs, bool truncate,
                             std::size_t frame_len) {
    const std::size_t mics = rirs.size();
    std::size_t cut = 0;
    if (truncate) {
        const auto& src = s.desired().position;
        double first = std::numeric_limits<double>::infinity();
        for (const auto& m : s.mics) first = std::min(first, (src - m).norm() / kSpeedOfSound * s.sample_rate);
        cut = static_cast<std::size_t>(std::ceil(first + 0.008 * s.sample_rate)) + 4;
    }
    std::vector<Eigen::VectorXcd> columns(mics);
    for (std::size_t m = 0; m < mics; ++m) {
        std::vector<double> h = rirs[m];
        if (truncate && h.size() > cut) h.resize(cut);
        columns[m] = transfer_at_bins(h, frame_len);
    }
    const std::size_t bins = frame_len / 2 + 1;
    std::vector<Eigen::VectorXcd> per_bin(bins, Eigen::VectorXcd(static_cast<Eigen::Index>(mics)));
    for (std::size_t k = 0; k < bins; ++k)
        for (std::size_t m = 0; m < mics; ++m)
            per_bin[k](static_cast<Eigen::Index>(m)) = columns[m](static_cast<Eigen::Index>(k));
    return SteeringVector(std::move(per_bin), s.reference_mic, SteeringNormalization::ReferenceChannel);
}

std::vector<std::vector<double>> desired_rirs(const Scenario& s) {
    RirOptions opts;
    opts.max_order = s.max_order;
    std::vector<std::vector<double>> rirs(s.mics.size());
    parallel_for(s.mics.size(), [&](std::size_t m) {
        rirs[m] = image_method_rir(s.room_dims, s.desired().position, s.mics[m], s.rt60, s.sample_rate, opts);
    });
    return rirs;
}

}  // namespace

SteeringVector steering_from_scenario(const Scenario& s, SteeringMode mode, std::size_t frame_len) {
    validate_scenario(s);
    if (mode == SteeringMode::FreeField) {
        const Eigen::Vector3d center = s.array_center();
        const Eigen::Vector3d u = (s.desired().position - center).normalized();
        const std::size_t bins = frame_len / 2 + 1;
        std::vector<Eigen::VectorXcd> per_bin(bins, Eigen::VectorXcd(static_cast<Eigen::Index>(s.mics.size())));
        for (std::size_t k = 0; k < bins; ++k) {
            const double omega = 2.0 * std::numbers::pi * bin_frequency(k, frame_len, s.sample_rate);
            for (std::size_t m = 0; m < s.mics.size(); ++m) {
                // Plane wave from direction u reaches mics further along u earlier.
                const double tau = -(s.mics[m] - center).dot(u) / kSpeedOfSound;
                per_bin[k](static_cast<Eigen::Index>(m)) = std::polar(1.0, -omega * tau);
            }
        }
        return SteeringVector(std::move(per_bin), s.reference_mic, SteeringNormalization::ReferenceChannel);
    }
    return rtf_from_rirs(s, desired_rirs(s), mode == SteeringMode::DirectPathRtf, frame_len);
}

SteeringVector steering_from_scenario(const Scenario& s, SteeringMode mode, std::size_t frame_len,
                                      const SceneAudio& scene) {
    if (mode == SteeringMode::FreeField) return steering_from_scenario(s, mode, frame_len);
    validate_scenario(s);
    std::size_t desired_index = 0;
    while (s.sources[desired_index].role != SourceRole::Desired) ++desired_index;
    if (scene.rirs.size() != s.sources.size()) throw DimensionError("scene RIRs do not match the scenario");
    return rtf_from_rirs(s, scene.rirs[desired_index], mode == SteeringMode::DirectPathRtf, frame_len);
}

}  // namespace beamkit
