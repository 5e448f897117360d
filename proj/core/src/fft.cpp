#include "fft.hpp"

#include <algorithm>
#include <cstring>
#include <mutex>
#include <new>

#include <fftw3.h>

namespace beamkit::detail {

namespace {
// The FFTW planner is not re-entrant; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
    real_ = fftw_alloc_real(n);
    auto* spec = fftw_alloc_complex(n / 2 + 1);
    spec_ = spec;
    if (real_ == nullptr || spec == nullptr) throw std::bad_alloc();
    std::lock_guard lock(planner_mutex());
    fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
        fftw_destroy_plan(static_cast<fftw_plan>(inv_));
    }
    fftw_free(real_);
    fftw_free(spec_);
}

void RealFft::forward(std::span<const double> in, std::span<std::complex<double>> out) {
    std::copy(in.begin(), in.begin() + static_cast<std::ptrdiff_t>(n_), real_);
    fftw_execute(static_cast<fftw_plan>(fwd_));
    std::memcpy(out.data(), spec_, sizeof(fftw_complex) * num_bins());
}

void RealFft::inverse(std::span<const std::complex<double>> in, std::span<double> out) {
    // c2r destroys its input, so always work from the owned buffer.
    std::memcpy(spec_, in.data(), sizeof(fftw_complex) * num_bins());
    fftw_execute(static_cast<fftw_plan>(inv_));
    std::copy(real_, real_ + n_, out.begin());
}

std::vector<double> fft_convolve(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) return {};
    const std::size_t out_len = a.size() + b.size() - 1;
    std::size_t n = 1;
    while (n < out_len) n <<= 1;

    RealFft fft(n);
    std::vector<double> buf(n, 0.0);
    std::vector<std::complex<double>> fa(fft.num_bins()), fb(fft.num_bins());
    std::copy(a.begin(), a.end(), buf.begin());
    fft.forward(buf, fa);
    std::fill(buf.begin(), buf.end(), 0.0);
    std::copy(b.begin(), b.end(), buf.begin());
    fft.forward(buf, fb);
    for (std::size_t i = 0; i < fa.size(); ++i) fa[i] *= fb[i];
    fft.inverse(fa, buf);

    std::vector<double> out(out_len);
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < out_len; ++i) out[i] = buf[i] * scale;
    return out;
}

}  // namespace beamkit::detail
