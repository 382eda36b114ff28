#pragma once

#include <complex>
#include <cstddef>

#include "mdlshrink/common.hpp"

namespace mdl {

using CVec = std::vector<std::complex<double>>;

// Unitary DFT: X[k] = n^{-1/2} Σ_j x[j] e^{-2πi jk/n}. The full (redundant)
// spectrum is returned so indexing matches textbook formulas; Parseval holds
// exactly: ‖X‖₂ = ‖x‖₂.
CVec fft(const Vec& x);
CVec fft(const CVec& x);
CVec ifft(const CVec& X);
// Inverse of fft() for spectra of real signals; the imaginary residue is dropped.
Vec ifft_real(const CVec& X);

// 2-D unitary DFT of a row-major rows×cols grid; X[k1*cols + k2].
CVec fft2(const Vec& x, std::size_t rows, std::size_t cols);
Vec ifft2_real(const CVec& X, std::size_t rows, std::size_t cols);

// |fft(x)[k]|² for all k.
Vec power_spectrum(const Vec& x);

}  // namespace mdl
