#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "beamkit/cxlinalg.hpp"
#include "beamkit/stft.hpp"

namespace beamkit {

enum class SteeringNormalization {
    ReferenceChannel,  ///< h_ref(k) == 1 (relative transfer function)
    UnitNorm,          ///< ||h(k)|| == 1
};

/// Per-bin desired-source transfer vectors h(k), normalized on construction.
class SteeringVector {
public:
    SteeringVector() = default;
    /// Throws DomainError on an all-zero vector, a zero reference entry (RTF mode)
    /// or mismatched channel counts.
    SteeringVector(std::vector<Eigen::VectorXcd> per_bin, std::size_t reference_channel = 0,
                   SteeringNormalization normalization = SteeringNormalization::ReferenceChannel);

    std::size_t num_bins() const noexcept { return h_.size(); }
    std::size_t num_channels() const noexcept { return h_.empty() ? 0 : static_cast<std::size_t>(h_[0].size()); }
    std::size_t reference_channel() const noexcept { return reference_; }
    SteeringNormalization normalization() const noexcept { return normalization_; }
    const Eigen::VectorXcd& operator[](std::size_t k) const { return h_[k]; }

private:
    std::vector<Eigen::VectorXcd> h_;
    std::size_t reference_ = 0;
    SteeringNormalization normalization_ = SteeringNormalization::ReferenceChannel;
};

/// Per-bin spatial filters w(k); output is w(k)^H y(k, l).
struct BeamWeights {
    std::vector<Eigen::VectorXcd> per_bin;

    std::size_t num_bins() const noexcept { return per_bin.size(); }
    const Eigen::VectorXcd& operator[](std::size_t k) const { return per_bin[k]; }

    /// Weights that pass channel m unchanged at every bin.
    static BeamWeights channel_selector(std::size_t num_bins, std::size_t num_channels, std::size_t m);
};

/// max_k |w(k)^H h(k) - 1|
double max_distortionless_error(const BeamWeights& w, const SteeringVector& h);

/// max_k ||a(k) - b(k)|| / ||b(k)||
double max_relative_change(const BeamWeights& a, const BeamWeights& b);

struct CggdConfig {
    double shape_p = 0.5;
    /// Absolute floor on the speech PSD estimate. When unset, each bin uses
    /// relative_floor * (mean per-channel, per-frame noisy power of that bin).
    std::optional<double> floor_delta;
    double relative_floor = 1e-6;
    std::size_t max_iterations = 10;
    /// Diagonal loading relative to trace(R)/M.
    double loading = 1e-6;
    /// Stop once max_k relative weight change drops below this; 0 runs exactly max_iterations.
    double convergence_tol = 1e-4;
    /// Keep w^0 .. w^I in EnhancedOutput::weight_history.
    bool keep_history = false;

    void validate() const;
};

struct EnhancedOutput {
    StftTensor estimate;  ///< single channel, S^I(k, l)
    BeamWeights weights;  ///< w^I
    std::size_t iterations_run = 0;
    std::vector<double> per_iteration_weight_delta;  ///< max_k relative change, one per iteration
    std::vector<BeamWeights> weight_history;         ///< w^0 .. w^I when requested
    std::vector<std::string> warnings;
};

/// S(k, l) = w(k)^H y(k, l) as a one-channel tensor.
StftTensor apply_weights(const BeamWeights& w, const StftTensor& y);

/// R^{-1} h / (h^H R^{-1} h) with R^{-1} h from solve_regularized, then rescaled so that
/// w^H h == 1 to rounding.
Eigen::VectorXcd distortionless_solution(const HermitianMatrix& r, const Eigen::VectorXcd& h, double loading,
                                         std::size_t bin = 0);

BeamWeights mpdr_weights(std::span<const HermitianMatrix> r, const SteeringVector& h, double loading = 1e-6);
/// MPDR with per-bin sample covariances of the noisy mixture.
BeamWeights mpdr_weights(const StftTensor& y, const SteeringVector& h, double loading = 1e-6);

/// Same closed form on the exactly known interference-plus-noise covariance.
BeamWeights oracle_mvdr_weights(std::span<const HermitianMatrix> r_vv, const SteeringVector& h,
                                double loading = 1e-6);
BeamWeights oracle_mvdr_weights(const StftTensor& interference_plus_noise, const SteeringVector& h,
                                double loading = 1e-6);

/// |s_hat|^(2 - p); returns 1 for p == 2 even when s_hat == 0.
double lambda_update(cplx s_hat, double p);

/// Floor delta used at one bin: cfg.floor_delta if set, else the relative rule.
double floor_for_bin(const Eigen::MatrixXcd& frames, const CggdConfig& cfg);

/// sum_l |w^H y_l|^2 / max(lambda_l, delta)^(1 - p/2): the cost minimized by each w-update.
double weighted_output_power(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& frames,
                             std::span<const double> lambdas, double p, double delta);

/// Iterative maximum-likelihood distortionless beamformer under a complex generalized
/// Gaussian speech prior.
///
/// Starts from MPDR weights, then alternates
///   S^i = (w^i)^H y,  lambda = |S^i|^2,
///   R = sum_l y y^H / max(lambda_l, delta)^(1 - p/2),
///   w^{i+1} = R^{-1} h / (h^H R^{-1} h)
/// independently per bin. p = 2 reproduces MPDR, p = 0 the MLDR weighting.
EnhancedOutput cggd_mldr(const StftTensor& y, const SteeringVector& h, const CggdConfig& cfg);

}  // namespace beamkit
