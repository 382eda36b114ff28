#pragma once
// Test-signal generation, noise injection, metrics, and dataset I/O.

#include <array>
#include <optional>
#include <string>

#include "mdlshrink/common.hpp"

namespace mdl {

// A real 1-D signal or row-major 2-D image, optionally carrying the noiseless
// truth and the noise level sigma = tau^{-1/2} that was injected.
struct Dataset {
  Vec values;
  std::array<std::size_t, 2> shape{0, 0};  // shape[1] == 0 means 1-D
  Vec truth;                               // empty when absent
  double noise_sigma = 0.0;                // 0 when unknown

  bool is_2d() const { return shape[1] != 0; }
  std::size_t size() const { return is_2d() ? shape[0] * shape[1] : shape[0]; }
  void validate() const;
};

struct MetricsRow {
  double rmse_scaled = 0.0;
  double snr_hat_db = 0.0;
  double sparsity_fraction = 0.0;
  double nu_estimate = std::nan("");  // NaN when not applicable
  double tv = std::nan("");           // NaN when not applicable
};

// Raw Donoho-Johnstone closed forms at a point t in [0, 1).
double dj_formula(const std::string& name, double t);

// Samples the named closed form at t_i = i/n and rescales to mean square 1
// (||theta||^2 = n), so a target SNR alone fixes the noise variance.
Dataset gen_test_signal(const std::string& name, std::size_t n);

// Adds i.i.d. N(0, tau^{-1}) noise with tau^{-1} = ||theta||^2 / (N 10^{snr/10}).
Dataset add_noise_at_snr(const Dataset& truth, double snr_db, std::uint64_t seed);

// rmse_scaled = sqrt(||theta - est||^2 * tau / N); snr_hat in dB; sparsity = d/N.
MetricsRow metrics(const Dataset& estimate, const Dataset& truth, double tau_inv,
                   std::size_t d);

// Discrete total variation of a 2-D dataset, periodic wrap at the edges.
double tv_measure(const Dataset& image);

// 8-bit binary PGM (P5).
Dataset read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Dataset& img);

// Signals as CSV of decimals, one value per line.
Dataset read_csv_signal(const std::string& path);
void write_csv_signal(const std::string& path, const Dataset& sig);

}  // namespace mdl
