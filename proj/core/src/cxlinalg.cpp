#include "beamkit/cxlinalg.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "beamkit/errors.hpp"

namespace beamkit {

namespace {

void enforce_hermitian(Eigen::MatrixXcd& a) {
    const Eigen::Index n = a.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        a(i, i) = {a(i, i).real(), 0.0};
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const std::complex<double> upper = 0.5 * (a(i, j) + std::conj(a(j, i)));
            a(i, j) = upper;
            a(j, i) = std::conj(upper);
        }
    }
}

// Accumulates the upper triangle of sum_l weight_l * y_l y_l^H, then mirrors it.
// Fixed loop order: frames outer, entries inner.
template <typename WeightFn>
Eigen::MatrixXcd accumulate(const Eigen::MatrixXcd& frames, WeightFn&& weight) {
    const Eigen::Index m = frames.rows();
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(m, m);
    for (Eigen::Index l = 0; l < frames.cols(); ++l) {
        const double wl = weight(l);
        for (Eigen::Index i = 0; i < m; ++i) {
            const std::complex<double> yi = frames(i, l) * wl;
            for (Eigen::Index j = i; j < m; ++j) r(i, j) += yi * std::conj(frames(j, l));
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        r(i, i) = {r(i, i).real(), 0.0};
        for (Eigen::Index j = i + 1; j < m; ++j) r(j, i) = std::conj(r(i, j));
    }
    return r;
}

}  // namespace

HermitianMatrix::HermitianMatrix(std::size_t dim)
    : m_(Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim))) {}

HermitianMatrix::HermitianMatrix(const Eigen::MatrixXcd& a) : m_(a) {
    if (a.rows() != a.cols()) throw DimensionError("Hermitian matrix must be square");
    if (!a.allFinite()) throw DomainError("Hermitian matrix has non-finite entries");
    enforce_hermitian(m_);
}

HermitianMatrix HermitianMatrix::identity(std::size_t dim) {
    return HermitianMatrix(Eigen::MatrixXcd::Identity(static_cast<Eigen::Index>(dim),
                                                      static_cast<Eigen::Index>(dim)));
}

HermitianMatrix HermitianMatrix::scaled(double s) const {
    HermitianMatrix out;
    out.m_ = m_ * s;
    return out;
}

HermitianMatrix sample_covariance(const Eigen::MatrixXcd& frames) {
    if (frames.cols() == 0 || frames.rows() == 0) throw EmptyInputError("no frames for covariance");
    if (!frames.allFinite()) throw DomainError("non-finite frame data");
    return HermitianMatrix(accumulate(frames, [](Eigen::Index) { return 1.0; }));
}

double frame_weight(double lambda, double p, double delta) {
    if (!(p >= 0.0 && p <= 2.0)) throw DomainError("shape p must lie in [0, 2]");
    if (p == 2.0) return 1.0;
    const double floored = std::max(lambda, delta);
    if (floored <= 0.0) throw NumericGuardError("zero weighting denominator: set a positive floor delta");
    return 1.0 / std::pow(floored, 1.0 - p / 2.0);
}

WeightedCovariance weighted_covariance(const Eigen::MatrixXcd& frames, std::span<const double> lambdas,
                                       double p, double delta) {
    if (!(p >= 0.0 && p <= 2.0)) throw DomainError("shape p must lie in [0, 2]");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw DomainError("floor delta must be finite and >= 0");
    if (frames.cols() == 0 || frames.rows() == 0) throw EmptyInputError("no frames for covariance");
    if (lambdas.size() != static_cast<std::size_t>(frames.cols()))
        throw DimensionError("lambda count does not match frame count");
    for (double lam : lambdas)
        if (!(lam >= 0.0) || !std::isfinite(lam)) throw DomainError("lambdas must be finite and >= 0");

    WeightedCovariance out;
    out.frame_count = static_cast<std::size_t>(frames.cols());
    out.shape_p = p;
    out.floor_delta = delta;
    if (p == 2.0) {
        out.matrix = sample_covariance(frames);
        return out;
    }
    if (!frames.allFinite()) throw DomainError("non-finite frame data");
    std::vector<double> weights(lambdas.size());
    for (std::size_t l = 0; l < lambdas.size(); ++l) weights[l] = frame_weight(lambdas[l], p, delta);
    out.matrix = HermitianMatrix(accumulate(frames, [&](Eigen::Index l) {
        return weights[static_cast<std::size_t>(l)];
    }));
    return out;
}

Eigen::VectorXcd solve_regularized(const HermitianMatrix& r, const Eigen::VectorXcd& h, double loading,
                                   std::size_t bin) {
    const auto m = static_cast<Eigen::Index>(r.dim());
    if (h.size() != m) throw DimensionError("steering vector length does not match covariance size");
    if (!(loading >= 0.0)) throw DomainError("diagonal loading must be >= 0");

    Eigen::MatrixXcd a = r.matrix();
    const double load = loading * r.trace() / static_cast<double>(m);
    if (load > 0.0) a.diagonal().array() += load;

    Eigen::LLT<Eigen::MatrixXcd> llt(a);
    if (llt.info() != Eigen::Success) throw SingularMatrixError(bin, "Cholesky factorization failed");
    // LLT succeeds on tiny positive pivots; reject pivots at rounding level of the trace.
    const double pivot_floor = 1e-14 * std::max(a.diagonal().real().maxCoeff(), 0.0);
    const auto diag = llt.matrixLLT().diagonal().real();
    if (!(diag.array().square().minCoeff() > pivot_floor))
        throw SingularMatrixError(bin, "covariance is numerically singular");
    Eigen::VectorXcd x = llt.solve(h);
    if (!x.allFinite()) throw SingularMatrixError(bin, "non-finite solution");
    return x;
}

double min_eigenvalue(const HermitianMatrix& r) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r.matrix(), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace beamkit
