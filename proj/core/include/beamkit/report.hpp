#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <vector>

namespace beamkit {

/// Library version string stamped into every report row.
std::string library_version();

/// 64-bit FNV-1a of a byte string, rendered as 16 hex digits.
std::string config_hash(const std::string& text);

/// One (beamformer, condition, iteration) measurement.
struct EvalRecord {
    std::string beamformer;  ///< "mpdr", "mldr", "cggd", "oracle_mvdr"
    double p = 2.0;
    double input_sinr_db = 0.0;
    double rt60 = 0.0;
    std::size_t iteration = 0;
    double si_sdr_improvement_db = 0.0;
    double output_sinr_improvement_db = 0.0;
    double weight_delta = 0.0;  ///< max_k relative change of this iteration's update; 0 at iteration 0
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string version;
};

struct ConditionFailure {
    std::string beamformer;
    double p = 2.0;
    double input_sinr_db = 0.0;
    double rt60 = 0.0;
    std::string message;
};

/// Sweep results keyed by (beamformer, p, input SINR, rt60, iteration) and always written
/// in key order, so the output does not depend on evaluation order.
///
/// CSV columns:
///   beamformer,p,input_sinr_db,rt60_s,iteration,si_sdr_improvement_db,
///   output_sinr_improvement_db,weight_delta,seed,config_hash,version
class EvalReport {
public:
    using Key = std::tuple<std::string, double, double, double, std::size_t>;

    /// Throws ConfigError on a duplicate key or a non-finite metric.
    void add(EvalRecord record);
    void add_failure(ConditionFailure failure);

    std::vector<EvalRecord> records() const;
    const std::vector<ConditionFailure>& failures() const noexcept { return failures_; }
    std::size_t size() const noexcept { return rows_.size(); }

    /// Lookup; throws std::out_of_range when absent.
    const EvalRecord& at(const std::string& beamformer, double p, double input_sinr_db, double rt60,
                         std::size_t iteration) const;

    std::string to_csv() const;
    std::string to_json() const;
    /// Writes report.csv and report.json (plus failures.csv when non-empty) into dir.
    void write(const std::string& dir) const;

private:
    std::map<Key, EvalRecord> rows_;
    std::vector<ConditionFailure> failures_;
};

}  // namespace beamkit
