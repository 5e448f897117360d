#include "beamkit/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "beamkit/errors.hpp"

namespace beamkit {

std::string library_version() { return std::string("beamkit ") + BEAMKIT_VERSION_STRING; }

std::string config_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    // Write-then-rename so a crash never leaves a half-written report.
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary);
        if (!os) throw IoError(tmp, "cannot open for writing");
        os << text;
        if (!os) throw IoError(tmp, "write failed");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace

void EvalReport::add(EvalRecord r) {
    if (!std::isfinite(r.p) || !std::isfinite(r.input_sinr_db) || !std::isfinite(r.rt60) ||
        !std::isfinite(r.si_sdr_improvement_db) || !std::isfinite(r.output_sinr_improvement_db) ||
        !std::isfinite(r.weight_delta))
        throw ConfigError("report record for '" + r.beamformer + "' has non-finite entries");
    Key key{r.beamformer, r.p, r.input_sinr_db, r.rt60, r.iteration};
    if (rows_.contains(key)) throw ConfigError("duplicate report record for '" + r.beamformer + "'");
    rows_.emplace(std::move(key), std::move(r));
}

void EvalReport::add_failure(ConditionFailure failure) { failures_.push_back(std::move(failure)); }

std::vector<EvalRecord> EvalReport::records() const {
    std::vector<EvalRecord> out;
    out.reserve(rows_.size());
    for (const auto& [key, row] : rows_) out.push_back(row);
    return out;
}

const EvalRecord& EvalReport::at(const std::string& beamformer, double p, double input_sinr_db, double rt60,
                                 std::size_t iteration) const {
    return rows_.at(Key{beamformer, p, input_sinr_db, rt60, iteration});
}

std::string EvalReport::to_csv() const {
    std::ostringstream os;
    os << "beamformer,p,input_sinr_db,rt60_s,iteration,si_sdr_improvement_db,output_sinr_improvement_db,"
          "weight_delta,seed,config_hash,version\n";
    for (const auto& [key, r] : rows_) {
        os << r.beamformer << ',' << num(r.p) << ',' << num(r.input_sinr_db) << ',' << num(r.rt60) << ','
           << r.iteration << ',' << num(r.si_sdr_improvement_db) << ',' << num(r.output_sinr_improvement_db) << ','
           << num(r.weight_delta) << ',' << r.seed << ',' << r.config_hash << ',' << r.version << '\n';
    }
    return os.str();
}

std::string EvalReport::to_json() const {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& [key, r] : rows_) {
        rows.push_back({{"beamformer", r.beamformer},
                        {"p", r.p},
                        {"input_sinr_db", r.input_sinr_db},
                        {"rt60_s", r.rt60},
                        {"iteration", r.iteration},
                        {"si_sdr_improvement_db", r.si_sdr_improvement_db},
                        {"output_sinr_improvement_db", r.output_sinr_improvement_db},
                        {"weight_delta", r.weight_delta},
                        {"seed", r.seed},
                        {"config_hash", r.config_hash},
                        {"version", r.version}});
    }
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const auto& f : failures_) {
        failures.push_back({{"beamformer", f.beamformer},
                            {"p", f.p},
                            {"input_sinr_db", f.input_sinr_db},
                            {"rt60_s", f.rt60},
                            {"message", f.message}});
    }
    nlohmann::ordered_json doc = {{"records", rows}, {"failures", failures}};
    return doc.dump(2) + "\n";
}

void EvalReport::write(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    write_file(base / "report.csv", to_csv());
    write_file(base / "report.json", to_json());
    if (!failures_.empty()) {
        std::ostringstream os;
        os << "beamformer,p,input_sinr_db,rt60_s,message\n";
        for (const auto& f : failures_) {
            std::string msg = f.message;
            for (auto& c : msg)
                if (c == '"') c = '\'';
            os << f.beamformer << ',' << num(f.p) << ',' << num(f.input_sinr_db) << ',' << num(f.rt60) << ",\""
               << msg << "\"\n";
        }
        write_file(base / "failures.csv", os.str());
    }
}

}  // namespace beamkit
