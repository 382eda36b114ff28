#pragma once
// Coefficient-wise estimators: classical thresholds, SURE machinery, and the
// generalized-Gaussian MAP solver with its lookup-table interpolation.

#include <string>

#include "mdlshrink/common.hpp"
#include "mdlshrink/wavelet.hpp"

namespace mdl {

enum class ThresholdKind { Hard, Soft, Firm };

// Piecewise threshold rules. Firm interpolates between t and t2 (t2 > t);
// the other kinds ignore t2.
double threshold(double x, ThresholdKind kind, double t, double t2 = 0.0);

// sigma * sqrt(2 ln n), n >= 2.
double universal_threshold(std::size_t n, double sigma);

// median(|c_i|) / 0.6745; throws when every coefficient is zero.
double median_noise_sigma(const Vec& highpass);

// Stein's unbiased risk estimate for soft thresholding of unit-variance data:
// SURE(x, t) = n - 2 #{|x_i| < t} + sum min(|x_i|, t)^2.
double sure_value(const Vec& x, double t);

// argmin of SURE over t in {0} ∪ {|x_i| <= t_max} ∪ {t_max}; ties break to
// the smaller threshold.
double sure_threshold(const Vec& x, double t_max);

// --- generalized Gaussian machinery -----------------------------------------

// Two-parameter generalized Gaussian prior with shape nu in (0,2] and
// precision lambda (variance 1/lambda).
struct GGDPrior {
    double nu = 1.0;
    double lambda = 1.0;
    double eta = 0.0;   // η(ν) = sqrt(Γ(3/ν)/Γ(1/ν))
    double c_nu = 0.0;  // C_ν = η(ν)^ν

    static GGDPrior make(double nu, double lambda);
    double log_density(double theta) const;
};

// Lookup table for the normalized MAP problem min (x̄-θ̄)² + |θ̄|^ν: parallel
// grids of x̄ and the minimizer θ̄*. Immutable once built.
struct MapTable {
    double nu = 0.0;
    Vec xbar;      // strictly increasing
    Vec thetabar;  // nondecreasing, starts at the step size for ν < 1
    double step = 0.0;  // Δθ̄* used to build the grid
    double tbar = 0.0;  // normalized threshold t̄_ν (0 when ν > 1)
    double sbar = 0.0;  // step discontinuity s̄_ν (0 when ν >= 1)

    void dump_csv(const std::string& path) const;
    static MapTable load_csv(const std::string& path);
};

// Normalized threshold t̄_ν = 2^{-1/(2-ν)}(2-ν)(2-2ν)^{-(1-ν)/(2-ν)}, 0 < ν <= 1.
double ggd_normalized_threshold(double nu);

// Step discontinuity s̄_ν solving t̄_ν = s̄ + (ν/2) s̄^{ν-1} on the stable
// branch, 0 < ν < 1.
double ggd_step(double nu);

// Recommended grid step for the θ̄* table: the posterior-optimal parameter
// precision transformed into normalized units, with the signal-to-noise
// factor clamped to >= 1. nd_omega = (n/d)·Ω(λ,τ).
double ggd_table_step(double nu, std::size_t n, double nd_omega);

// Builds the (x̄, θ̄*) table for 0 < ν < 2. Node count is capped at 10^6; the
// estimator solves the inverse map directly beyond the table's last node.
MapTable ggd_map_table_build(double nu, double grid_step);

// MAP estimate of theta from x ~ N(theta, 1/tau) under the prior. Uses the
// table (table.nu must equal prior.nu) for 0 < ν < 2 and the exact linear
// shrinkage for ν = 2. Odd in x.
double ggd_map_estimate(double x, const GGDPrior& prior, double tau,
                        const MapTable& table);

// --- subband denoisers --------------------------------------------------------

struct DenoiseResult {
    Vec coeffs;               // estimate in the transform domain
    std::size_t d = 0;        // nonzero coefficients in the estimate
    Vec per_band_threshold;   // threshold applied per band (0 = untouched)
};

// Hard threshold every non-scaling coefficient at sigma * sqrt(2 ln N).
DenoiseResult riskshrink_denoise(const Vec& coeffs, const BandMap& bands, double sigma);

// Hybrid SURE/universal soft thresholding per subband (non-scaling bands).
DenoiseResult sureshrink_denoise(const Vec& coeffs, const BandMap& bands, double sigma);

// --- hyperparameter estimators -------------------------------------------------

// Moment estimator of the prior variance: 1/λ* = max(0, mean(x²) - tau_inv).
// Returns 1/λ*; zero means "no signal detected".
double lambda_moment(const Vec& x, double tau_inv);

// ML precision given d selected coefficients under shape nu:
// λ* = (d+2)^{2/ν} / (ν^{2/ν} η(ν)² (Σ|θ_i|^ν)^{2/ν}).
double lambda_ml_ggd(const Vec& theta_star, double nu);

// Moment-ratio shape estimate: solves m₁²/m₂ = Γ(2/ν)²/(Γ(1/ν)Γ(3/ν)) by
// bisection on (0.05, 2]; degenerate inputs clamp to 2.
double nu_estimate(const Vec& theta_star);

// Coefficient indices grouped by band, derived from map.band_of.
std::vector<std::vector<std::size_t>> band_indices(const BandMap& map);

// A band holds scaling (approx) content iff every axis node is the pure
// lowpass path; such bands are exempt from thresholding.
bool is_scaling_band(const Band& band);

}  // namespace mdl
