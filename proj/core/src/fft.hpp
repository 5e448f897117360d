#pragma once

// Thin RAII wrapper over FFTW's real-to-complex transforms. Internal to the library.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace beamkit::detail {

class RealFft {
public:
    explicit RealFft(std::size_t n);
    ~RealFft();
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const noexcept { return n_; }
    std::size_t num_bins() const noexcept { return n_ / 2 + 1; }

    /// Unnormalized forward DFT of n real samples into n/2+1 bins.
    void forward(std::span<const double> in, std::span<std::complex<double>> out);
    /// Unnormalized inverse (no 1/n) of n/2+1 bins into n real samples.
    void inverse(std::span<const std::complex<double>> in, std::span<double> out);

private:
    std::size_t n_;
    double* real_ = nullptr;
    void* spec_ = nullptr;
    void* fwd_ = nullptr;
    void* inv_ = nullptr;
};

/// Linear convolution via FFT; result length a.size() + b.size() - 1.
std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b);

}  // namespace beamkit::detail
