#pragma once

#include <cstddef>
#include <optional>
#include <span>

#include <Eigen/Dense>

namespace beamkit {

/// Complex M x M matrix that is exactly Hermitian.
///
/// Construction from an arbitrary matrix replaces it with (A + A^H) / 2, which makes
/// entries(i, j) == conj(entries(j, i)) bit-for-bit and zeroes the diagonal imaginary parts.
class HermitianMatrix {
public:
    HermitianMatrix() = default;
    explicit HermitianMatrix(std::size_t dim);
    explicit HermitianMatrix(const Eigen::MatrixXcd& a);

    static HermitianMatrix identity(std::size_t dim);

    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    const Eigen::MatrixXcd& matrix() const noexcept { return m_; }
    std::complex<double> operator()(std::size_t i, std::size_t j) const {
        return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    double trace() const { return m_.diagonal().real().sum(); }

    HermitianMatrix scaled(double s) const;

private:
    Eigen::MatrixXcd m_;
};

/// Frame-weighted covariance with the parameters that produced it.
struct WeightedCovariance {
    HermitianMatrix matrix;
    std::size_t frame_count = 0;
    double shape_p = 2.0;
    double floor_delta = 0.0;
};

/// Sum over frames of y y^H; `frames` is M x L (one column per frame). No 1/L factor.
HermitianMatrix sample_covariance(const Eigen::MatrixXcd& frames);

/// Sum over frames of y y^H / max(lambda_l, delta)^(1 - p/2).
///
/// For p == 2 the result is bit-identical to sample_covariance. Throws DomainError for
/// p outside [0, 2], negative lambdas or delta, and NumericGuardError when a zero
/// denominator would occur (delta == 0, lambda_l == 0, p < 2).
WeightedCovariance weighted_covariance(const Eigen::MatrixXcd& frames, std::span<const double> lambdas,
                                       double p, double delta);

/// Per-frame weight 1 / max(lambda, delta)^(1 - p/2) used by weighted_covariance.
double frame_weight(double lambda, double p, double delta);

/// Solves (R + loading * trace(R)/M * I) x = h with a Cholesky factorization.
///
/// `bin` is only used to label a SingularMatrixError.
Eigen::VectorXcd solve_regularized(const HermitianMatrix& r, const Eigen::VectorXcd& h, double loading,
                                   std::size_t bin = 0);

/// Smallest eigenvalue (used by tests and PSD diagnostics).
double min_eigenvalue(const HermitianMatrix& r);

}  // namespace beamkit
