#include "beamkit/beamformers.hpp"

#include <algorithm>
#include <cmath>

#include "beamkit/errors.hpp"
#include "beamkit/parallel.hpp"

namespace beamkit {

SteeringVector::SteeringVector(std::vector<Eigen::VectorXcd> per_bin, std::size_t reference_channel,
                               SteeringNormalization normalization)
    : h_(std::move(per_bin)), reference_(reference_channel), normalization_(normalization) {
    if (h_.empty()) throw EmptyInputError("steering vector has no bins");
    const auto m = h_[0].size();
    if (m == 0) throw EmptyInputError("steering vector has no channels");
    if (reference_ >= static_cast<std::size_t>(m)) throw DomainError("reference channel out of range");
    for (std::size_t k = 0; k < h_.size(); ++k) {
        auto& hk = h_[k];
        if (hk.size() != m) throw DimensionError("steering vectors have differing channel counts");
        if (!hk.allFinite()) throw DomainError("non-finite steering vector at bin " + std::to_string(k));
        if (hk.squaredNorm() == 0.0) throw DomainError("all-zero steering vector at bin " + std::to_string(k));
        if (normalization_ == SteeringNormalization::ReferenceChannel) {
            const cplx ref = hk(static_cast<Eigen::Index>(reference_));
            if (std::abs(ref) == 0.0)
                throw DomainError("zero reference-channel entry at bin " + std::to_string(k));
            hk /= ref;
            hk(static_cast<Eigen::Index>(reference_)) = 1.0;
        } else {
            hk /= hk.norm();
        }
    }
}

BeamWeights BeamWeights::channel_selector(std::size_t num_bins, std::size_t num_channels, std::size_t m) {
    BeamWeights w;
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(num_channels));
    e(static_cast<Eigen::Index>(m)) = 1.0;
    w.per_bin.assign(num_bins, e);
    return w;
}

double max_distortionless_error(const BeamWeights& w, const SteeringVector& h) {
    if (w.num_bins() != h.num_bins()) throw DimensionError("weights and steering differ in bin count");
    double worst = 0.0;
    for (std::size_t k = 0; k < w.num_bins(); ++k)
        worst = std::max(worst, std::abs(w[k].dot(h[k]) - 1.0));
    return worst;
}

double max_relative_change(const BeamWeights& a, const BeamWeights& b) {
    if (a.num_bins() != b.num_bins()) throw DimensionError("weights differ in bin count");
    double worst = 0.0;
    for (std::size_t k = 0; k < a.num_bins(); ++k) {
        const double ref = b[k].norm();
        worst = std::max(worst, ref > 0.0 ? (a[k] - b[k]).norm() / ref : (a[k] - b[k]).norm());
    }
    return worst;
}

void CggdConfig::validate() const {
    if (!(shape_p >= 0.0 && shape_p <= 2.0)) throw DomainError("shape p must lie in [0, 2]");
    if (floor_delta && !(*floor_delta >= 0.0 && std::isfinite(*floor_delta)))
        throw DomainError("floor delta must be finite and >= 0");
    if (!(relative_floor >= 0.0) || !std::isfinite(relative_floor))
        throw DomainError("relative floor must be finite and >= 0");
    if (max_iterations < 1) throw DomainError("max_iterations must be >= 1");
    if (!(loading >= 0.0) || !std::isfinite(loading)) throw DomainError("loading must be finite and >= 0");
    if (!(convergence_tol >= 0.0)) throw DomainError("convergence tolerance must be >= 0");
}

StftTensor apply_weights(const BeamWeights& w, const StftTensor& y) {
    if (w.num_bins() != y.num_bins()) throw DimensionError("weights and STFT differ in bin count");
    StftTensor out = y.like(1);
    const auto m = static_cast<Eigen::Index>(y.num_channels());
    for (std::size_t k = 0; k < y.num_bins(); ++k) {
        if (w[k].size() != m) throw DimensionError("weights and STFT differ in channel count");
        for (std::size_t l = 0; l < y.num_frames(); ++l) {
            cplx acc{};
            for (Eigen::Index c = 0; c < m; ++c)
                acc += std::conj(w[k](c)) * y(static_cast<std::size_t>(c), k, l);
            out(0, k, l) = acc;
        }
    }
    return out;
}

Eigen::VectorXcd distortionless_solution(const HermitianMatrix& r, const Eigen::VectorXcd& h, double loading,
                                         std::size_t bin) {
    const Eigen::VectorXcd x = solve_regularized(r, h, loading, bin);
    const cplx denom = h.dot(x);  // h^H R^{-1} h
    if (!(std::abs(denom) > 0.0) || !std::isfinite(std::abs(denom)))
        throw SingularMatrixError(bin, "degenerate distortionless normalization");
    Eigen::VectorXcd w = x / denom;
    // Absorb the residual rounding so that w^H h == 1.
    const cplx gain = w.dot(h);
    w /= std::conj(gain);
    return w;
}

BeamWeights mpdr_weights(std::span<const HermitianMatrix> r, const SteeringVector& h, double loading) {
    if (r.size() != h.num_bins()) throw DimensionError("covariance and steering differ in bin count");
    BeamWeights w;
    w.per_bin.resize(r.size());
    parallel_for(r.size(), [&](std::size_t k) { w.per_bin[k] = distortionless_solution(r[k], h[k], loading, k); });
    return w;
}

namespace {

std::vector<HermitianMatrix> bin_covariances(const StftTensor& y) {
    std::vector<HermitianMatrix> r(y.num_bins());
    parallel_for(y.num_bins(), [&](std::size_t k) { r[k] = sample_covariance(y.bin_matrix(k)); });
    return r;
}

}  // namespace

BeamWeights mpdr_weights(const StftTensor& y, const SteeringVector& h, double loading) {
    const auto r = bin_covariances(y);
    return mpdr_weights(r, h, loading);
}

BeamWeights oracle_mvdr_weights(std::span<const HermitianMatrix> r_vv, const SteeringVector& h, double loading) {
    return mpdr_weights(r_vv, h, loading);
}

BeamWeights oracle_mvdr_weights(const StftTensor& interference_plus_noise, const SteeringVector& h,
                                double loading) {
    const auto r = bin_covariances(interference_plus_noise);
    return mpdr_weights(r, h, loading);
}

double lambda_update(cplx s_hat, double p) {
    if (!(p >= 0.0 && p <= 2.0)) throw DomainError("shape p must lie in [0, 2]");
    if (p == 2.0) return 1.0;
    return std::pow(std::abs(s_hat), 2.0 - p);
}

double floor_for_bin(const Eigen::MatrixXcd& frames, const CggdConfig& cfg) {
    if (cfg.floor_delta) return *cfg.floor_delta;
    const double mean_power = frames.squaredNorm() / static_cast<double>(frames.size());
    return cfg.relative_floor * mean_power;
}

double weighted_output_power(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& frames,
                             std::span<const double> lambdas, double p, double delta) {
    if (lambdas.size() != static_cast<std::size_t>(frames.cols()))
        throw DimensionError("lambda count does not match frame count");
    const Eigen::RowVectorXcd s = w.adjoint() * frames;
    double cost = 0.0;
    for (Eigen::Index l = 0; l < frames.cols(); ++l)
        cost += std::norm(s(l)) * frame_weight(lambdas[static_cast<std::size_t>(l)], p, delta);
    return cost;
}

EnhancedOutput cggd_mldr(const StftTensor& y, const SteeringVector& h, const CggdConfig& cfg) {
    cfg.validate();
    if (y.num_bins() != h.num_bins()) throw DimensionError("STFT and steering differ in bin count");
    if (y.num_channels() != h.num_channels()) throw DimensionError("STFT and steering differ in channel count");

    EnhancedOutput out;
    if (y.num_frames() < y.num_channels())
        out.warnings.push_back("only " + std::to_string(y.num_frames()) + " frames for " +
                               std::to_string(y.num_channels()) + " channels; covariances may be ill-conditioned");

    const std::size_t bins = y.num_bins();
    std::vector<Eigen::MatrixXcd> frames(bins);
    std::vector<double> delta(bins);
    BeamWeights w;
    w.per_bin.resize(bins);
    parallel_for(bins, [&](std::size_t k) {
        frames[k] = y.bin_matrix(k);
        delta[k] = floor_for_bin(frames[k], cfg);
        w.per_bin[k] = distortionless_solution(sample_covariance(frames[k]), h[k], cfg.loading, k);
    });
    if (cfg.keep_history) out.weight_history.push_back(w);

    std::vector<double> change(bins);
    for (std::size_t i = 0; i < cfg.max_iterations; ++i) {
        BeamWeights next;
        next.per_bin.resize(bins);
        parallel_for(bins, [&](std::size_t k) {
            const Eigen::RowVectorXcd s = w[k].adjoint() * frames[k];
            std::vector<double> lambda(static_cast<std::size_t>(s.size()));
            for (Eigen::Index l = 0; l < s.size(); ++l) lambda[static_cast<std::size_t>(l)] = std::norm(s(l));
            const auto r = weighted_covariance(frames[k], lambda, cfg.shape_p, delta[k]);
            next.per_bin[k] = distortionless_solution(r.matrix, h[k], cfg.loading, k);
            if (!next.per_bin[k].allFinite()) throw DivergedError(i + 1, k);
            const double ref = w[k].norm();
            change[k] = (next.per_bin[k] - w[k]).norm() / ref;
        });
        for (std::size_t k = 0; k < bins; ++k)
            if (!std::isfinite(change[k])) throw DivergedError(i + 1, k);

        const double worst = *std::max_element(change.begin(), change.end());
        w = std::move(next);
        out.per_iteration_weight_delta.push_back(worst);
        out.iterations_run = i + 1;
        if (cfg.keep_history) out.weight_history.push_back(w);
        if (cfg.convergence_tol > 0.0 && worst < cfg.convergence_tol) break;
    }

    out.estimate = apply_weights(w, y);
    out.weights = std::move(w);
    return out;
}

}  // namespace beamkit
