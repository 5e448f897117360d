#include "beamkit/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "beamkit/errors.hpp"
#include "beamkit/metrics.hpp"
#include "beamkit/wav.hpp"

namespace beamkit {

std::string BeamformerSpec::id() const {
    switch (kind) {
        case BeamformerKind::Mpdr: return "mpdr";
        case BeamformerKind::Mldr: return "mldr";
        case BeamformerKind::Cggd: return "cggd";
        case BeamformerKind::OracleMvdr: return "oracle_mvdr";
    }
    return "unknown";
}

double BeamformerSpec::shape() const {
    switch (kind) {
        case BeamformerKind::Mldr: return 0.0;
        case BeamformerKind::Cggd: return p;
        default: return 2.0;
    }
}

std::vector<BeamformerSpec> parse_beamformers(const std::vector<std::string>& ids, const std::vector<double>& p_grid) {
    std::vector<BeamformerSpec> out;
    for (const auto& id : ids) {
        if (id == "mpdr") out.push_back({BeamformerKind::Mpdr, 2.0});
        else if (id == "mldr") out.push_back({BeamformerKind::Mldr, 0.0});
        else if (id == "oracle_mvdr" || id == "oracle") out.push_back({BeamformerKind::OracleMvdr, 2.0});
        else if (id == "cggd") {
            if (p_grid.empty()) throw ConfigError("'cggd' needs a non-empty p_grid");
            for (double p : p_grid) out.push_back({BeamformerKind::Cggd, p});
        } else if (id.rfind("cggd:", 0) == 0) {
            double p = 0.0;
            try {
                p = std::stod(id.substr(5));
            } catch (const std::exception&) {
                throw ConfigError("bad shape in beamformer id '" + id + "'");
            }
            out.push_back({BeamformerKind::Cggd, p});
        } else {
            throw ConfigError("unknown beamformer '" + id + "'");
        }
    }
    for (const auto& bf : out)
        if (!(bf.p >= 0.0 && bf.p <= 2.0)) throw ConfigError("shape p must lie in [0, 2]");
    return out;
}

void RunSpec::validate() const {
    if (beamformers.empty()) throw ConfigError("beamformer list is empty");
    if (sinr_grid_db.empty()) throw ConfigError("sinr_grid_db is empty");
    if (rt60_grid_s.empty()) throw ConfigError("rt60_grid_s is empty");
    if (iterations < 1) throw ConfigError("iterations must be >= 1");
    cola_constant(stft.window, stft.frame_len, stft.hop);
    for (double rt : rt60_grid_s) {
        Scenario s = scenario;
        s.rt60 = rt;
        s.input_sinr_db = sinr_grid_db.front();
        validate_scenario(s);
    }
}

std::string RunSpec::hash() const {
    std::ostringstream os;
    os << serialize_scenario(scenario);
    for (const auto& bf : beamformers) os << bf.id() << ':' << bf.shape() << ';';
    for (double v : sinr_grid_db) os << "s" << v;
    for (double v : rt60_grid_s) os << "r" << v;
    os << "|I" << iterations << "|seed" << seed << '|' << to_string(steering) << '|' << stft.frame_len << '/'
       << stft.hop << '/' << to_string(stft.window) << "|L" << loading << "|d" << relative_floor << "|tol"
       << convergence_tol;
    return config_hash(os.str());
}

namespace {

std::vector<double> double_list(const YAML::Node& n, const std::string& key, const std::string& file) {
    if (!n.IsSequence())
        throw ConfigError(file + ":" + std::to_string(n.Mark().line + 1) + ": " + key + " must be a list");
    std::vector<double> out;
    for (const auto& v : n) out.push_back(v.as<double>());
    return out;
}

}  // namespace

RunSpec load_run_spec(const std::string& path) {
    YAML::Node root;
    try {
        root = YAML::LoadFile(path);
    } catch (const YAML::BadFile&) {
        throw IoError(path, "cannot open run spec");
    } catch (const YAML::Exception& e) {
        throw ConfigError(path + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    static const std::set<std::string> known{"scenario", "beamformers", "p_grid", "sinr_grid_db", "rt60_grid_s",
                                             "iterations", "output_dir", "seed", "steering", "stft", "loading",
                                             "relative_floor", "convergence_tol", "write_audio", "cache_dir"};
    for (const auto& kv : root) {
        const auto k = kv.first.as<std::string>();
        if (!known.contains(k))
            throw ConfigError(path + ":" + std::to_string(kv.first.Mark().line + 1) + ": unknown key '" + k + "'");
    }
    if (!root["scenario"]) throw ConfigError(path + ": missing required key 'scenario'");

    RunSpec spec;
    const auto base = std::filesystem::path(path).parent_path();
    try {
        auto scen = root["scenario"].as<std::string>();
        spec.scenario_path = std::filesystem::path(scen).is_absolute() ? scen : (base / scen).string();
        spec.scenario = load_scenario(spec.scenario_path);
        if (root["p_grid"]) spec.p_grid = double_list(root["p_grid"], "p_grid", path);
        std::vector<std::string> ids{"mpdr", "mldr", "cggd", "oracle_mvdr"};
        if (root["beamformers"]) ids = root["beamformers"].as<std::vector<std::string>>();
        if (spec.p_grid.empty()) spec.p_grid = {0.5};
        spec.beamformers = parse_beamformers(ids, spec.p_grid);
        spec.sinr_grid_db = root["sinr_grid_db"] ? double_list(root["sinr_grid_db"], "sinr_grid_db", path)
                                                 : std::vector<double>{spec.scenario.input_sinr_db};
        spec.rt60_grid_s = root["rt60_grid_s"] ? double_list(root["rt60_grid_s"], "rt60_grid_s", path)
                                               : std::vector<double>{spec.scenario.rt60};
        if (root["iterations"]) spec.iterations = root["iterations"].as<std::size_t>();
        if (root["output_dir"]) {
            const auto out = root["output_dir"].as<std::string>();
            spec.output_dir = std::filesystem::path(out).is_absolute() ? out : (base / out).string();
        }
        spec.seed = root["seed"] ? root["seed"].as<std::uint64_t>() : spec.scenario.seed;
        if (root["steering"]) spec.steering = steering_mode_from_string(root["steering"].as<std::string>());
        if (auto st = root["stft"]) {
            if (st["frame_len"]) spec.stft.frame_len = st["frame_len"].as<std::size_t>();
            if (st["hop"]) spec.stft.hop = st["hop"].as<std::size_t>();
            if (st["window"]) spec.stft.window = window_from_string(st["window"].as<std::string>());
        }
        if (root["loading"]) spec.loading = root["loading"].as<double>();
        if (root["relative_floor"]) spec.relative_floor = root["relative_floor"].as<double>();
        if (root["convergence_tol"]) spec.convergence_tol = root["convergence_tol"].as<double>();
        if (root["write_audio"]) spec.write_audio = root["write_audio"].as<bool>();
        if (root["cache_dir"]) spec.cache_dir = root["cache_dir"].as<std::string>();
    } catch (const YAML::Exception& e) {
        throw ConfigError(path + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    spec.scenario.seed = spec.seed;
    return spec;
}

std::vector<Diagnostic> validate_run_spec_file(const std::string& path) {
    RunSpec spec;
    try {
        spec = load_run_spec(path);
    } catch (const ConfigError& e) {
        // Scenario schema errors surface here too; report the scenario file on its own.
        std::vector<Diagnostic> out;
        try {
            YAML::Node root = YAML::LoadFile(path);
            if (root["scenario"]) {
                const auto scen = root["scenario"].as<std::string>();
                const auto full = std::filesystem::path(scen).is_absolute()
                                      ? scen
                                      : (std::filesystem::path(path).parent_path() / scen).string();
                auto diags = validate_scenario_file(full);
                if (!diags.empty()) return diags;
            }
        } catch (const std::exception&) {
        }
        out.push_back({path, 0, "", "schema", e.what()});
        return out;
    } catch (const Error& e) {
        return {{path, 0, "", "io", e.what()}};
    }
    auto diags = validate_scenario_file(spec.scenario_path);
    if (!diags.empty()) return diags;
    for (double rt : spec.rt60_grid_s) {
        Scenario s = spec.scenario;
        s.rt60 = rt;
        for (auto d : check_scenario(s, spec.scenario_path)) {
            d.message += " (rt60_grid_s entry " + std::to_string(rt) + ")";
            diags.push_back(std::move(d));
        }
    }
    try {
        spec.validate();
    } catch (const Error& e) {
        if (diags.empty()) diags.push_back({path, 0, "", "schema", e.what()});
    }
    return diags;
}

bool is_run_spec_file(const std::string& path) {
    try {
        const YAML::Node root = YAML::LoadFile(path);
        return root.IsMap() && root["scenario"];
    } catch (const YAML::Exception&) {
        return false;
    }
}

std::vector<Diagnostic> validate_config_file(const std::string& path) {
    return is_run_spec_file(path) ? validate_run_spec_file(path) : validate_scenario_file(path);
}

namespace {

constexpr char kCacheMagic[8] = {'B', 'K', 'S', 'C', 'E', 'N', 'E', '1'};

void write_waveform(std::ostream& os, const Waveform& w) {
    const std::uint64_t ch = w.num_channels(), n = w.num_samples();
    os.write(reinterpret_cast<const char*>(&w.sample_rate), sizeof(double));
    os.write(reinterpret_cast<const char*>(&ch), sizeof ch);
    os.write(reinterpret_cast<const char*>(&n), sizeof n);
    for (const auto& c : w.channels) os.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

bool read_waveform(std::istream& is, Waveform& w) {
    std::uint64_t ch = 0, n = 0;
    is.read(reinterpret_cast<char*>(&w.sample_rate), sizeof(double));
    is.read(reinterpret_cast<char*>(&ch), sizeof ch);
    is.read(reinterpret_cast<char*>(&n), sizeof n);
    if (!is || ch > 4096 || n > (1ULL << 34)) return false;
    w.channels.assign(ch, std::vector<double>(n));
    for (auto& c : w.channels) is.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(n * sizeof(double)));
    return static_cast<bool>(is);
}

std::filesystem::path cache_file(const std::string& dir, const Scenario& s) {
    return std::filesystem::path(dir) / ("scene-" + config_hash(serialize_scenario(s) + library_version()) + ".bin");
}

}  // namespace

std::optional<SceneAudio> load_cached_scene(const std::string& cache_dir, const Scenario& s) {
    if (cache_dir.empty()) return std::nullopt;
    std::ifstream is(cache_file(cache_dir, s), std::ios::binary);
    if (!is) return std::nullopt;
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kCacheMagic, 8) != 0) return std::nullopt;
    SceneAudio scene;
    if (!read_waveform(is, scene.mixture) || !read_waveform(is, scene.desired_image) ||
        !read_waveform(is, scene.interference_plus_noise_image))
        return std::nullopt;
    Waveform rirs;
    std::uint64_t sources = 0;
    is.read(reinterpret_cast<char*>(&sources), sizeof sources);
    if (!is || sources > 1024) return std::nullopt;
    scene.rirs.resize(sources);
    for (auto& per_mic : scene.rirs) {
        if (!read_waveform(is, rirs)) return std::nullopt;
        per_mic = rirs.channels;
    }
    is.read(reinterpret_cast<char*>(&scene.realized_sinr_db), sizeof(double));
    if (!is) return std::nullopt;
    return scene;
}

void store_cached_scene(const std::string& cache_dir, const Scenario& s, const SceneAudio& scene) {
    if (cache_dir.empty()) return;
    std::filesystem::create_directories(cache_dir);
    const auto path = cache_file(cache_dir, s);
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw IoError(tmp, "cannot write scene cache");
        os.write(kCacheMagic, 8);
        write_waveform(os, scene.mixture);
        write_waveform(os, scene.desired_image);
        write_waveform(os, scene.interference_plus_noise_image);
        const std::uint64_t sources = scene.rirs.size();
        os.write(reinterpret_cast<const char*>(&sources), sizeof sources);
        for (const auto& per_mic : scene.rirs) {
            // RIRs of one source can differ in length per mic; pad to a rectangle.
            std::size_t len = 0;
            for (const auto& h : per_mic) len = std::max(len, h.size());
            Waveform w(1.0, per_mic.size(), len);
            for (std::size_t m = 0; m < per_mic.size(); ++m)
                std::copy(per_mic[m].begin(), per_mic[m].end(), w.channels[m].begin());
            write_waveform(os, w);
        }
        os.write(reinterpret_cast<const char*>(&scene.realized_sinr_db), sizeof(double));
        if (!os) throw IoError(tmp, "scene cache write failed");
    }
    std::filesystem::rename(tmp, path);
}

ConditionContext prepare_condition(const Scenario& s, SteeringMode mode, const StftConfig& stft,
                                   const std::string& cache_dir) {
    ConditionContext ctx;
    if (auto cached = load_cached_scene(cache_dir, s)) {
        ctx.scene = std::move(*cached);
    } else {
        ctx.scene = render_scenario(s);
        store_cached_scene(cache_dir, s, ctx.scene);
    }
    ctx.reference_mic = s.reference_mic;
    ctx.steering = steering_from_scenario(s, mode, stft.frame_len, ctx.scene);
    ctx.mixture = analyze(ctx.scene.mixture, stft);
    ctx.desired = analyze(ctx.scene.desired_image, stft);
    ctx.interference_plus_noise = analyze(ctx.scene.interference_plus_noise_image, stft);
    ctx.reference_image = ctx.scene.desired_image.channel(s.reference_mic);
    ctx.baseline_si_sdr = si_sdr(ctx.reference_image, ctx.scene.mixture.channel(s.reference_mic));
    return ctx;
}

WeightMetrics evaluate_weights(const ConditionContext& ctx, const BeamWeights& w) {
    WeightMetrics m;
    const Waveform estimate = synthesize(apply_weights(w, ctx.mixture));
    m.si_sdr_improvement_db = si_sdr(ctx.reference_image, estimate) - ctx.baseline_si_sdr;
    m.output_sinr_improvement_db =
        output_sinr_improvement(ctx.desired, ctx.interference_plus_noise, w, ctx.reference_mic);
    return m;
}

EnhancedOutput run_beamformer(const ConditionContext& ctx, const BeamformerSpec& bf, std::size_t iterations,
                              double loading, double relative_floor, double convergence_tol) {
    if (bf.kind == BeamformerKind::Mpdr || bf.kind == BeamformerKind::OracleMvdr) {
        EnhancedOutput out;
        out.weights = bf.kind == BeamformerKind::Mpdr
                          ? mpdr_weights(ctx.mixture, ctx.steering, loading)
                          : oracle_mvdr_weights(ctx.interference_plus_noise, ctx.steering, loading);
        out.weight_history.push_back(out.weights);
        out.estimate = apply_weights(out.weights, ctx.mixture);
        return out;
    }
    CggdConfig cfg;
    cfg.shape_p = bf.shape();
    cfg.max_iterations = iterations;
    cfg.loading = loading;
    cfg.relative_floor = relative_floor;
    cfg.convergence_tol = convergence_tol;
    cfg.keep_history = true;
    return cggd_mldr(ctx.mixture, ctx.steering, cfg);
}

RunResult run(const RunSpec& spec, const ProgressFn& progress) {
    spec.validate();
    RunResult result;
    const std::string hash = spec.hash();
    const std::string version = library_version();
    std::filesystem::create_directories(spec.output_dir);

    for (double rt60 : spec.rt60_grid_s) {
        for (double sinr : spec.sinr_grid_db) {
            Scenario s = spec.scenario;
            s.rt60 = rt60;
            s.input_sinr_db = sinr;
            s.seed = spec.seed;
            char label[64];
            std::snprintf(label, sizeof label, "sinr%+.1fdB_rt%03.0fms", sinr, rt60 * 1000.0);
            if (progress) progress(std::string("condition ") + label);

            std::optional<ConditionContext> ctx;
            try {
                ctx = prepare_condition(s, spec.steering, spec.stft, spec.cache_dir);
            } catch (const Error& e) {
                for (const auto& bf : spec.beamformers)
                    result.report.add_failure({bf.id(), bf.shape(), sinr, rt60, e.what()});
                ++result.failed_conditions;
                result.report.write(spec.output_dir);
                continue;
            }

            for (const auto& bf : spec.beamformers) {
                try {
                    const auto out = run_beamformer(*ctx, bf, spec.iterations, spec.loading, spec.relative_floor,
                                                    spec.convergence_tol);
                    for (std::size_t i = 0; i < out.weight_history.size(); ++i) {
                        const auto metrics = evaluate_weights(*ctx, out.weight_history[i]);
                        EvalRecord r;
                        r.beamformer = bf.id();
                        r.p = bf.shape();
                        r.input_sinr_db = sinr;
                        r.rt60 = rt60;
                        r.iteration = i;
                        r.si_sdr_improvement_db = metrics.si_sdr_improvement_db;
                        r.output_sinr_improvement_db = metrics.output_sinr_improvement_db;
                        r.weight_delta = i == 0 ? 0.0 : out.per_iteration_weight_delta[i - 1];
                        r.seed = spec.seed;
                        r.config_hash = hash;
                        r.version = version;
                        result.report.add(std::move(r));
                    }
                    if (spec.write_audio) {
                        const auto dir = std::filesystem::path(spec.output_dir) / "audio" / label;
                        std::filesystem::create_directories(dir);
                        char name[64];
                        std::snprintf(name, sizeof name, "%s_p%.2f.wav", bf.id().c_str(), bf.shape());
                        write_wav((dir / name).string(), synthesize(out.estimate), SampleFormat::Float32);
                    }
                } catch (const Error& e) {
                    result.report.add_failure({bf.id(), bf.shape(), sinr, rt60, e.what()});
                    ++result.failed_conditions;
                }
            }
            result.report.write(spec.output_dir);
        }
    }
    return result;
}

}  // namespace beamkit
