#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "beamkit/errors.hpp"
#include "beamkit/roomsim.hpp"

namespace beamkit {

namespace {

class ScenarioParser {
public:
    ScenarioParser(std::string file, std::string base_dir) : file_(std::move(file)) {
        scenario_.base_dir = std::move(base_dir);
    }

    Scenario parse(const YAML::Node& root) {
        if (!root.IsMap()) {
            fail(root, "", "top level must be a mapping");
            return scenario_;
        }
        allow(root, "", {"name", "sample_rate", "duration_s", "room_dims", "rt60", "input_sinr_db", "seed",
                         "sensor_noise_snr_db", "reference_mic", "max_order", "array", "sources"});

        if (auto n = root["name"]) scenario_.name = scalar<std::string>(n, "name", scenario_.name);
        read(root, "sample_rate", scenario_.sample_rate);
        read(root, "duration_s", scenario_.duration_s);
        read(root, "rt60", scenario_.rt60);
        read(root, "input_sinr_db", scenario_.input_sinr_db);
        if (auto n = root["seed"]) scenario_.seed = scalar<std::uint64_t>(n, "seed", 0);
        if (auto n = root["reference_mic"]) scenario_.reference_mic = scalar<std::size_t>(n, "reference_mic", 0);
        if (auto n = root["max_order"]) scenario_.max_order = scalar<int>(n, "max_order", -1);
        if (auto n = root["sensor_noise_snr_db"]) {
            mark("sensor_noise_snr_db", n);
            if (n.IsNull() || (n.IsScalar() && (n.Scalar() == "off" || n.Scalar() == "none")))
                scenario_.sensor_noise_snr_db.reset();
            else
                scenario_.sensor_noise_snr_db = scalar<double>(n, "sensor_noise_snr_db", 40.0);
        }

        if (auto n = root["room_dims"]) {
            mark("room_dims", n);
            scenario_.room_dims = vec3(n, "room_dims");
        } else {
            fail(root, "room_dims", "missing required key");
        }

        if (auto n = root["array"]) parse_array(n);
        else fail(root, "array", "missing required key");

        if (auto n = root["sources"]) parse_sources(n);
        else fail(root, "sources", "missing required key");
        return scenario_;
    }

    const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    void fail(const YAML::Node& at, const std::string& key, const std::string& msg) {
        const int line = at.Mark().is_null() ? 0 : at.Mark().line + 1;
        diags_.push_back({file_, line, key, "schema", msg});
    }

    void mark(const std::string& key, const YAML::Node& n) {
        if (!n.Mark().is_null()) scenario_.key_lines[key] = n.Mark().line + 1;
    }

    void allow(const YAML::Node& map, const std::string& prefix, std::initializer_list<const char*> keys) {
        const std::set<std::string> known(keys.begin(), keys.end());
        for (const auto& kv : map) {
            const auto k = kv.first.as<std::string>();
            if (!known.contains(k)) fail(kv.first, prefix.empty() ? k : prefix + "." + k, "unknown key '" + k + "'");
        }
    }

    template <typename T>
    T scalar(const YAML::Node& n, const std::string& key, T fallback) {
        try {
            if (!n.IsScalar()) throw YAML::Exception(n.Mark(), "expected a scalar");
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, key, "invalid value");
            return fallback;
        }
    }

    void read(const YAML::Node& map, const char* key, double& out) {
        if (auto n = map[key]) {
            mark(key, n);
            out = scalar<double>(n, key, out);
        }
    }

    Eigen::Vector3d vec3(const YAML::Node& n, const std::string& key) {
        if (!n.IsSequence() || n.size() != 3) {
            fail(n, key, "expected a list of 3 numbers");
            return Eigen::Vector3d::Zero();
        }
        Eigen::Vector3d v;
        for (int i = 0; i < 3; ++i) v(i) = scalar<double>(n[static_cast<std::size_t>(i)], key, 0.0);
        return v;
    }

    void parse_array(const YAML::Node& n) {
        mark("array", n);
        if (!n.IsMap()) {
            fail(n, "array", "expected a mapping with 'mics' or 'ula'");
            return;
        }
        allow(n, "array", {"mics", "ula"});
        if (auto mics = n["mics"]) {
            if (!mics.IsSequence()) {
                fail(mics, "array.mics", "expected a list of positions");
                return;
            }
            for (std::size_t i = 0; i < mics.size(); ++i) {
                const auto key = "array.mics[" + std::to_string(i) + "]";
                mark(key, mics[i]);
                scenario_.mics.push_back(vec3(mics[i], key));
            }
        } else if (auto ula = n["ula"]) {
            allow(ula, "array.ula", {"center", "count", "spacing", "axis_deg"});
            const Eigen::Vector3d center = ula["center"] ? vec3(ula["center"], "array.ula.center")
                                                         : Eigen::Vector3d(0.5 * scenario_.room_dims);
            const auto count = ula["count"] ? scalar<int>(ula["count"], "array.ula.count", 0) : 0;
            const double spacing = ula["spacing"] ? scalar<double>(ula["spacing"], "array.ula.spacing", 0.0) : 0.0;
            const double axis = ula["axis_deg"] ? scalar<double>(ula["axis_deg"], "array.ula.axis_deg", 0.0) : 0.0;
            if (count < 1) fail(ula, "array.ula.count", "count must be a positive integer");
            if (!(spacing > 0.0)) fail(ula, "array.ula.spacing", "spacing must be positive");
            const double a = axis * std::numbers::pi / 180.0;
            const Eigen::Vector3d dir(std::cos(a), std::sin(a), 0.0);
            for (int i = 0; i < count; ++i) {
                const double offset = (i - 0.5 * (count - 1)) * spacing;
                scenario_.mics.push_back(center + offset * dir);
            }
            ula_axis_ = a;
        } else {
            fail(n, "array", "needs either 'mics' or 'ula'");
        }
    }

    void parse_sources(const YAML::Node& n) {
        mark("sources", n);
        if (!n.IsSequence()) {
            fail(n, "sources", "expected a list of sources");
            return;
        }
        for (std::size_t i = 0; i < n.size(); ++i) {
            const auto key = "sources[" + std::to_string(i) + "]";
            const auto& node = n[i];
            mark(key, node);
            if (!node.IsMap()) {
                fail(node, key, "expected a mapping");
                continue;
            }
            allow(node, key, {"role", "position", "polar", "signal"});
            SourceSpec src;
            const auto role = node["role"] ? scalar<std::string>(node["role"], key + ".role", "") : "";
            if (role == "desired") src.role = SourceRole::Desired;
            else if (role == "interference") src.role = SourceRole::Interference;
            else fail(node, key + ".role", "role must be 'desired' or 'interference'");

            if (auto p = node["position"]) {
                src.position = vec3(p, key + ".position");
            } else if (auto polar = node["polar"]) {
                allow(polar, key + ".polar", {"azimuth_deg", "distance", "elevation_deg"});
                const double az = polar["azimuth_deg"] ? scalar<double>(polar["azimuth_deg"], key + ".polar", 0.0) : 0.0;
                const double dist = polar["distance"] ? scalar<double>(polar["distance"], key + ".polar", 0.0) : 0.0;
                const double el = polar["elevation_deg"] ? scalar<double>(polar["elevation_deg"], key + ".polar", 0.0) : 0.0;
                if (!(dist > 0.0)) fail(polar, key + ".polar.distance", "distance must be positive");
                if (scenario_.mics.empty()) {
                    fail(polar, key + ".polar", "polar positions need the array defined first");
                } else {
                    // Azimuth 0 is broadside to the array axis, positive toward the axis direction.
                    const double a = az * std::numbers::pi / 180.0, e = el * std::numbers::pi / 180.0;
                    const Eigen::Vector3d axis(std::cos(ula_axis_), std::sin(ula_axis_), 0.0);
                    const Eigen::Vector3d broadside(-std::sin(ula_axis_), std::cos(ula_axis_), 0.0);
                    const Eigen::Vector3d dir = std::cos(e) * (std::cos(a) * broadside + std::sin(a) * axis) +
                                                std::sin(e) * Eigen::Vector3d::UnitZ();
                    src.position = scenario_.array_center() + dist * dir;
                }
            } else {
                fail(node, key, "needs 'position' or 'polar'");
            }

            if (auto sig = node["signal"]) {
                allow(sig, key + ".signal", {"synthetic", "file", "seed"});
                if (auto f = sig["file"]) {
                    src.signal.synthetic.reset();
                    src.signal.file = scalar<std::string>(f, key + ".signal.file", "");
                } else if (auto syn = sig["synthetic"]) {
                    try {
                        src.signal.synthetic = signal_kind_from_string(scalar<std::string>(syn, key + ".signal", ""));
                    } catch (const ConfigError& e) {
                        fail(syn, key + ".signal.synthetic", e.what());
                    }
                }
                if (auto s = sig["seed"]) src.signal.seed = scalar<std::uint64_t>(s, key + ".signal.seed", 0);
            }
            scenario_.sources.push_back(std::move(src));
        }
    }

    std::string file_;
    Scenario scenario_;
    std::vector<Diagnostic> diags_;
    double ula_axis_ = 0.0;
};

std::string join_diagnostics(const std::vector<Diagnostic>& diags) {
    std::ostringstream os;
    for (std::size_t i = 0; i < diags.size(); ++i) os << (i ? "\n" : "") << format_diagnostic(diags[i]);
    return os.str();
}

std::pair<Scenario, std::vector<Diagnostic>> parse_with_diagnostics(const std::string& text, const std::string& base,
                                                                    const std::string& label) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        return {Scenario{}, {{label, e.mark.is_null() ? 0 : e.mark.line + 1, "", "schema", e.msg}}};
    }
    ScenarioParser parser(label, base);
    Scenario s = parser.parse(root);
    return {std::move(s), parser.diagnostics()};
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path, "cannot open scenario file");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string parent_dir(const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    return parent.empty() ? "." : parent.string();
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& base_dir, const std::string& file_label) {
    auto [s, diags] = parse_with_diagnostics(text, base_dir, file_label);
    if (!diags.empty()) throw ConfigError(join_diagnostics(diags));
    return s;
}

Scenario load_scenario(const std::string& path) {
    return parse_scenario(read_text(path), parent_dir(path), path);
}

std::vector<Diagnostic> validate_scenario_file(const std::string& path) {
    std::string text;
    try {
        text = read_text(path);
    } catch (const IoError& e) {
        return {{path, 0, "", "io", e.what()}};
    }
    auto [s, diags] = parse_with_diagnostics(text, parent_dir(path), path);
    if (!diags.empty()) return diags;
    auto physics = check_scenario(s, path);
    for (std::size_t j = 0; j < s.sources.size(); ++j) {
        const auto& sig = s.sources[j].signal;
        if (sig.synthetic) continue;
        const std::string full = !sig.file.empty() && sig.file.front() == '/' ? sig.file : s.base_dir + "/" + sig.file;
        if (!std::filesystem::exists(full)) {
            const auto key = "sources[" + std::to_string(j) + "]";
            const auto it = s.key_lines.find(key);
            physics.push_back({path, it == s.key_lines.end() ? 0 : it->second, key + ".signal.file", "io",
                               "signal file not found: " + full});
        }
    }
    return physics;
}

std::string serialize_scenario(const Scenario& s) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    auto vec = [&](const Eigen::Vector3d& v) {
        out << YAML::Flow << YAML::BeginSeq << v.x() << v.y() << v.z() << YAML::EndSeq;
    };
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << s.name;
    out << YAML::Key << "sample_rate" << YAML::Value << s.sample_rate;
    out << YAML::Key << "duration_s" << YAML::Value << s.duration_s;
    out << YAML::Key << "room_dims" << YAML::Value;
    vec(s.room_dims);
    out << YAML::Key << "rt60" << YAML::Value << s.rt60;
    out << YAML::Key << "input_sinr_db" << YAML::Value << s.input_sinr_db;
    out << YAML::Key << "seed" << YAML::Value << s.seed;
    out << YAML::Key << "sensor_noise_snr_db" << YAML::Value;
    if (s.sensor_noise_snr_db) out << *s.sensor_noise_snr_db;
    else out << YAML::Null;
    out << YAML::Key << "reference_mic" << YAML::Value << s.reference_mic;
    out << YAML::Key << "max_order" << YAML::Value << s.max_order;
    out << YAML::Key << "array" << YAML::Value << YAML::BeginMap << YAML::Key << "mics" << YAML::Value << YAML::BeginSeq;
    for (const auto& m : s.mics) vec(m);
    out << YAML::EndSeq << YAML::EndMap;
    out << YAML::Key << "sources" << YAML::Value << YAML::BeginSeq;
    for (const auto& src : s.sources) {
        out << YAML::BeginMap;
        out << YAML::Key << "role" << YAML::Value << (src.role == SourceRole::Desired ? "desired" : "interference");
        out << YAML::Key << "position" << YAML::Value;
        vec(src.position);
        out << YAML::Key << "signal" << YAML::Value << YAML::BeginMap;
        if (src.signal.synthetic) out << YAML::Key << "synthetic" << YAML::Value << to_string(*src.signal.synthetic);
        else out << YAML::Key << "file" << YAML::Value << src.signal.file;
        out << YAML::Key << "seed" << YAML::Value << src.signal.seed;
        out << YAML::EndMap << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace beamkit
