#include "mdlshrink/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>

namespace mdl {
namespace {

// FFTW planning is not thread-safe; desk-scale transforms are cheap enough to
// serialize the whole call.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

CVec run_dft_1d(const CVec& in, int sign) {
    const std::size_t n = in.size();
    if (n == 0) throw std::invalid_argument("fft: empty input");
    CVec out(n);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_plan plan = fftw_plan_dft_1d(
            static_cast<int>(n),
            reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
            reinterpret_cast<fftw_complex*>(out.data()), sign,
            FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (auto& v : out) v *= scale;
    return out;
}

CVec run_dft_2d(const CVec& in, std::size_t rows, std::size_t cols, int sign) {
    if (rows * cols != in.size() || in.empty())
        throw std::invalid_argument("fft2: shape does not match data");
    CVec out(in.size());
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_plan plan = fftw_plan_dft_2d(
            static_cast<int>(rows), static_cast<int>(cols),
            reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
            reinterpret_cast<fftw_complex*>(out.data()), sign,
            FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
        fftw_execute(plan);
        fftw_destroy_plan(plan);
    }
    const double scale = 1.0 / std::sqrt(static_cast<double>(in.size()));
    for (auto& v : out) v *= scale;
    return out;
}

CVec to_complex(const Vec& x) {
    CVec z(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) z[i] = {x[i], 0.0};
    return z;
}

Vec real_part(const CVec& z) {
    Vec x(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) x[i] = z[i].real();
    return x;
}

}  // namespace

CVec fft(const Vec& x) { return run_dft_1d(to_complex(x), FFTW_FORWARD); }

CVec fft(const CVec& x) { return run_dft_1d(x, FFTW_FORWARD); }

CVec ifft(const CVec& X) { return run_dft_1d(X, FFTW_BACKWARD); }

Vec ifft_real(const CVec& X) { return real_part(run_dft_1d(X, FFTW_BACKWARD)); }

CVec fft2(const Vec& x, std::size_t rows, std::size_t cols) {
    return run_dft_2d(to_complex(x), rows, cols, FFTW_FORWARD);
}

Vec ifft2_real(const CVec& X, std::size_t rows, std::size_t cols) {
    return real_part(run_dft_2d(X, rows, cols, FFTW_BACKWARD));
}

Vec power_spectrum(const Vec& x) {
    CVec X = fft(x);
    Vec p(X.size());
    for (std::size_t i = 0; i < X.size(); ++i) p[i] = std::norm(X[i]);
    return p;
}

}  // namespace mdl
