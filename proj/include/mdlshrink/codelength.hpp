#pragma once
// Invariant-MDL codelength machinery: the Laplace-approximated marginal of a
// d-term model, bounds on its renormalization constant, the Q + Δ_d split of
// the total description length, the NML reference codelength, and the
// diagnostic quantities (ζ, κ, ξ, ω, X) that certify the approximations.
//
// Conventions used throughout this header:
//   * x is the full coefficient vector (length n); a model γ_d keeps the d
//     components listed in ModelIndex::selected and treats the rest as noise.
//   * x∥ = selected components, x⊥ = the rest; r = ‖x∥-θ*‖² / ‖x⊥‖².
//   * τ is the noise precision, λ the prior precision, ν ∈ (0,2] the prior
//     shape; (n/d)Ω(λ,τ) = τ/λ is the per-coefficient SNR factor.
//   * All codelengths are in nats (natural log); CLI layers convert to bits.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "mdlshrink/common.hpp"
#include "mdlshrink/estimators.hpp"

namespace mdl {

// --- model index and fitted parameters ---------------------------------------

// Which coefficients a model keeps. Invariant: 0 < d < n, d == selected.size(),
// selected sorted ascending with no duplicates, each index < n.
struct ModelIndex {
    std::vector<std::size_t> selected;
    std::size_t d = 0;
    std::size_t n = 0;

    static ModelIndex make(std::vector<std::size_t> selected, std::size_t n);
};

// Joint invariant estimates (θ*, τ*, λ*): the fixed point of
//   θ* = MAP(x∥; τ, λ),   1/τ = (‖x⊥‖² + ‖x∥-θ*‖²)/(n-d+2),   λ = λ*(θ*).
struct InvariantFit {
    Vec theta_star;          // length d, aligned with ModelIndex::selected
    double tau_star = 0.0;
    double lambda_star = 0.0;
    double x_perp_norm2 = 0.0;
    double x_par_norm2 = 0.0;
    double residual_norm2 = 0.0;  // ‖x∥ - θ*‖²
    std::size_t iterations = 0;
    bool converged = false;
};

// Invariant noise precision τ* = (n-d+2) / (‖x⊥‖² + ‖x∥-θ*‖²).
double tau_star(double x_perp_norm2, double residual_norm2, std::size_t n,
                std::size_t d);

// Runs the (θ, τ, λ) fixed point for shape nu. Starts from θ = x∥ and
// τ = (n-d+2)/‖x⊥‖². Components shrunk exactly to zero are legal here but make
// the Laplace machinery below reject the model.
InvariantFit fit_invariant(const Vec& x, const ModelIndex& gamma, double nu,
                           std::size_t max_iter = 60);

// --- prior geometry (generalized Gaussian) ------------------------------------

// Ψ(θ,λ) = -log( π(θ|λ) |E(λ)|^{-1/2} ) with E(λ) = νd/(4λ²) the prior Fisher
// information; the invariant λ* minimizes Ψ over λ.
double ggd_psi(const Vec& theta, double lambda, double nu);

// ∂²Ψ/∂λ² at general (θ, λ):
// ((d+2)/2) λ^{-2} (1 + (ν/(d+2))(ν/2-1) [η(ν)λ^{1/2}R_ν]^ν), R_ν^ν = Σ|θ_i|^ν.
double ggd_psi_lambda_lambda(const Vec& theta, double lambda, double nu);

// |Ψ_λλ(θ*,λ*)|^{1/2} = sqrt(ν(d+2)/4) / λ*, the root of the λ-Hessian at the
// stationary point.
double psi_lambda_lambda_ggd(double lambda_star, double nu, std::size_t d);

// Third-over-(3/2)-power λ-derivative ratio at the stationary point,
// ω = |Ψ_λλλ|/|Ψ_λλ|^{3/2} = 8 |(ν/2-1)(ν/2-2)/2 - 1| / (ν^{3/2} sqrt(d+2));
// the relative error of the λ-Laplace integral.
double omega_ggd(double nu, std::size_t d);

// log ∫_Θ π(θ|λ*(θ)) / |Ψ_λλ(θ,λ*(θ))|^{1/2} dθ over the shell
// Θ = { r_ν^ν < Σ|θ_i|^ν < R_ν^ν }, with λ*(θ) the stationary λ of the
// integration variable. Closed form:
//   sqrt(ν/(d+2)) η^{-2} e^{-(d+2)/ν} ((d+2)/ν)^{(d+2)/ν} / Γ(d/ν)
//     · r_ν^{-2} (1 - (r_ν/R_ν)²).
double log_theta_shell_integral(double nu, std::size_t d, double r_nu,
                                double R_nu);

// --- intervals ----------------------------------------------------------------

struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    double mid() const { return 0.5 * (lo + hi); }
    bool contains(double v) const { return lo <= v && v <= hi; }
};

// Integration ranges entering the marginal and the renormalization constant.
// Invariants: τ* ∈ i_tau, λ* ∈ i_lambda, 0 < r_nu < R_nu.
struct IntervalConfig {
    Interval i_tau;               // noise-precision range
    Interval i_lambda;            // prior-precision range
    Interval j_tau_star;          // τ*-range of the renormalization integral
    double r_nu = 0.0;            // inner shell radius of Θ*
    double R_nu = 0.0;            // outer shell radius of Θ*
    double k_tauhat = 2.0;        // log-domain τ̂ grid parameter, 0 < k < log N
    bool shell_clamped = false;   // r_nu collided with R_nu and was clamped
};

// Effective posterior-concentration exponent N entering the interval widths:
//   N = (n-d+2)/2 + Σ τ*(x∥(i)-θ*_i)(2θ*_i-x∥(i))
//     + Σ C_ν ν(ν-1) [ (τ*/λ*)^{-ν/2} |√τ* θ*_i|^{ν-1} sgn θ*_i
//                      - |√λ* θ*_i|^ν / 4 ]
//     - Σ μ_i² τ* θ*_i² / 4,
// with μ_i = C_ν ν(ν-1) (τ*/λ*)^{-ν/2} |√τ* θ*_i|^{ν-2}.
double exponent_N(const Vec& x_par, const Vec& theta_star, double tau_star,
                  double lambda_star, double nu, std::size_t n);

// Builds the standard ranges from a fit: with a = log(N)/sqrt(N),
//   I_τ = [τ* e^{-a}, τ* e^{+a}],
//   I_λ = λ* [1-w, 1+w],  w = min(2 c_lambda / sqrt(ν(d+2)), 0.75),
//   J_τ* = I_τ,  r_ν = 1/sqrt(τ*),  R_ν = (Σ|θ*_i|^ν)^{1/ν}.
IntervalConfig make_intervals(const Vec& x_par, const Vec& theta_star,
                              double tau_star, double lambda_star, double nu,
                              std::size_t n, double c_lambda = 1.0,
                              double k_tauhat = 2.0);

// --- approximation diagnostics -------------------------------------------------

// Operating windows observed on well-posed denoising runs; outside them the
// codelength is still computed but flagged.
inline constexpr double kKappaWindow = 5e-2;   // κ upper bound
inline constexpr double kXiWindow = 3.0;       // ξ upper bound (1+ξ ≤ 4)
inline constexpr double kOmegaWindow = 0.5;    // ω upper bound
inline constexpr double kZetaWindow = 5e-2;    // ζ upper bound

// Correction terms certifying the Laplace approximation of the marginal.
// Hard validity requires ζ < 1 (series converges), X < 1 (renormalization
// bounds hold) and r < 1 (parameter Hessian positive definite).
struct Diagnostics {
    double zeta = 0.0;                    // prior-curvature perturbation, C4
    double kappa_bound = 0.0;             // θ-integral relative error bound
    double xi_bound = 0.0;                // tail / threshold relative error bound
    double omega = 0.0;                   // λ-integral relative error
    double X = 0.0;                       // Hessian off-center contraction
    double N_big = 0.0;                   // posterior-concentration exponent
    double min_standardized_theta = 0.0;  // inf_i |√τ* θ*_i|
    double r_ratio = 0.0;                 // ‖x∥-θ*‖² / ‖x⊥‖²
    bool zeta_ok = false;                 // ζ < 1
    bool X_ok = false;                    // X < 1
    bool hessian_ok = false;              // r < 1
    bool xi_claim_ok = false;             // geometric-series premise of ξ bound

    bool valid() const { return zeta_ok && X_ok && hessian_ok; }
    bool in_operating_range() const {
        return valid() && xi_claim_ok && zeta <= kZetaWindow &&
               kappa_bound <= kKappaWindow && xi_bound <= kXiWindow &&
               omega <= kOmegaWindow;
    }
};

// Everything the codelength ops need, computed once per (x, γ, ν).
struct ModelEvaluation {
    ModelIndex gamma;
    double nu = 1.0;
    InvariantFit fit;
    IntervalConfig intervals;
    Diagnostics diag;
};

// Fits the invariant estimates, builds the default intervals and computes the
// diagnostics. Never throws on invalid diagnostics; callers check diag flags.
// Zero components in θ* are reported via diag (min_standardized_theta == 0 and
// zeta_ok == false) rather than by throwing.
ModelEvaluation evaluate_model(const Vec& x, const ModelIndex& gamma, double nu);

// Same, but with caller-supplied intervals (τ*, λ* must lie inside them).
ModelEvaluation evaluate_model(const Vec& x, const ModelIndex& gamma, double nu,
                               const IntervalConfig& intervals);

// --- marginals -----------------------------------------------------------------

// Laplace approximation of log m(x|I_τ,I_λ), the invariant marginal of the
// model γ under a generalized-Gaussian prior with shape prior.nu (the prior's
// λ is profiled out, not read from the argument):
//   log m = ((d+2)/2) log 2π + log f(x|τ*,θ*) + log π(θ*|λ*)
//           - log|I_τ| - log|I_λ| - ½ log|H| - ½ log Ψ_λλ(θ*,λ*)
//           + Σ log Φ(√τ*|θ*_i|),
// where |H| = ((n-d+2)/2) (τ*)^{d-2} (1-r)/(1+r). Throws std::domain_error
// when a fitted θ*_i is exactly zero, ζ ≥ 1 or r ≥ 1 (singular Hessian).
std::pair<double, Diagnostics> marginal_laplace(const Vec& x,
                                                const ModelIndex& gamma,
                                                const GGDPrior& prior,
                                                const IntervalConfig& intervals);

// Flat-prior marginal over (θ, τ) only: θ* = x∥, the prior factor and the
// Φ products are 1, and log m = ((d+1)/2) log 2π + log f(x|τ*,x∥) - log|I_τ|
// - ½ log|H|.
double marginal_laplace_flat(const Vec& x, const ModelIndex& gamma,
                             const Interval& i_tau);

// --- renormalization constant ---------------------------------------------------

// Two-sided bounds on log C_γ for the generalized-Gaussian prior:
//   hi = log((n-d)/(n-d+2)) + (d/2)ζ + ½ log 2π + log ∫∫
//   lo = hi - dζ - ((n-d)/2) d C_ν²ν² (τ*/λ*)^{-h(ν)} / (n-d+2)
//          + d log Φ(√τ* inf_i|θ*_i|),
// where log ∫∫ = log_theta_shell_integral - log|I_λ| and h(ν) = ν for ν ≤ 1,
// ν/2 above. Requires X < 1 (throws std::domain_error otherwise).
Interval log_C_gamma_bounds(const Vec& x, const ModelEvaluation& ev);

// Flat-prior renormalization constant, exact:
//   log C = log((n-d)/(n-d+2)) + ½ log 2π - log(|Ψ_λλ|^{1/2} |I_λ|)
// with the formal Gaussian-shape λ-geometry λ* = (d+2)/‖x∥‖²,
// |Ψ_λλ|^{1/2} = sqrt((d+2)/2)/λ*.
double log_C_gamma_flat(std::size_t n, std::size_t d, double x_par_norm2,
                        const Interval& i_lambda);

// --- entropies and the model-class prior ----------------------------------------

// Differential entropy of the d-variate generalized-Gaussian prior:
// S = -d log( ν η(ν) λ^{1/2} / (2Γ(1/ν)) ) + d/ν.
double entropy_ggd(const GGDPrior& prior, std::size_t d);

// Entropy of the Jeffreys reference over ‖θ‖₂ ≤ R, τ ∈ (0, τ*) with the
// scale-invariant measure dθ dτ/τ, as used for the model-class comparison:
// S = log( sqrt(n/2) ((d-2)/2) π^{d/2} R^d / Γ(d/2+1) ) + 1
//     - ½ log(n/2) / sqrt(n/2).  Requires d ≥ 3.
double entropy_jeffreys(std::size_t n, std::size_t d, double R);

// Sentinel for model_class_log_D's nu_q: compare against the Jeffreys
// reference (enters the closed form as shape 2, but is never "the same
// family" as p, so the penalty always applies).
inline constexpr double kJeffreysReference = 0.0;

// log of the model-class prior density D(p,q) at the plug-in ratio α* = 1:
//   log D = -log A + (d/4) log B,
//   A = (4 C_λ / (d-2)) sqrt((1+ν_p/ν_q) / (ν_p(d+2))),
//   B = 4 C_λ² (1+ν_p/ν_q) / (ν_p(d+2)).
// nu_q == kJeffreysReference selects the Jeffreys reference (ν_q = 2 in the
// formula); p ≡ q (equal GGD shapes) returns 0 (the constant density drops).
// Requires d ≥ 3 and C_λ ∈ (0,1].
double model_class_log_D(double nu_p, double nu_q, std::size_t d,
                         double c_lambda);

// --- parameter discretizations ---------------------------------------------------

// Coarsest parameter grids keeping the relative posterior-density error within
// sqrt(c_θ² + c_τ² + c_λ²):
//   Δτ   = τ (2/√n) Ω^{-1/2} c_τ
//   Δθ_i = (τ^{-1/2}/√d) c_θ (1 + sqrt((d/n) τ θ_i² / Ω) c_τ/c_θ)
//   Δλ   = (2/sqrt(ν(d+2))) λ* c_λ
// where omega_snr = Ω(λ*,τ*) = (d/n)(τ/λ*).
struct Discretization {
    double d_tau = 0.0;
    Vec d_theta;
    double d_lambda = 0.0;
};

Discretization discretizations(double tau, double lambda_star,
                               const Vec& theta_star, double nu,
                               double omega_snr, std::size_t n, double c_theta,
                               double c_tau, double c_lambda);

// --- the Q + Δ_d codelength split -------------------------------------------------

// Smooth part of the total codelength (everything that ranks models; nats):
//   Q = -log D + (n-d+2)/2 + log(|I_τ||I_λ|) - ((n-d+1)/2) log((n-d+2)/2π)
//       + ((n-d+2)/2) log ‖x⊥‖² - log[ (π(θ*|λ*)/Ψ_λλ^{1/2}) / ∫∫ ].
// The -log D term uses the Jeffreys reference with C_λ = c_lambda and is
// applied for d ≥ 3 (the α-integral diverges below).
double codelength_Q(const Vec& x, const ModelEvaluation& ev,
                    double c_lambda = 1.0);

// Precision overhead interval: the exact Δ_d terms with the renormalization
// bounds and the ±(d/2)ζ curvature slack folded in,
//   Δ_d = log C_γ - log ∫∫ + ((n-d+2)/2) log(1+r) - (3/2) log 2π - ½ log 2
//         + ½ log((1-r)/(1+r)) - Σ log Φ(√τ*|θ*_i|) ± (d/2)ζ.
// Requires r < 1 and valid diagnostics (throws std::domain_error otherwise).
Interval codelength_Delta_d(const Vec& x, const ModelEvaluation& ev);

// Full report for one model. L_total = Q + mid(Δ_d) + model_index_cost where
// model_index_cost = n log 2 + log n covers the index vector γ_d and d itself
// and is the same for every d (it never affects ranking).
struct CodelengthReport {
    double L_total = 0.0;  // nats
    double Q = 0.0;
    Interval delta_d;
    Interval log_C;
    double log_D = 0.0;
    double tau_star = 0.0;
    double lambda_star = 0.0;
    double nu = 1.0;
    double model_index_cost = 0.0;
    std::size_t d = 0;
    std::size_t n = 0;
    Diagnostics diag;
};

// Computes the report; preconditions are the per-op ones above (valid
// diagnostics, r < 1, nonzero θ*).
CodelengthReport codelength_total(const Vec& x, const ModelEvaluation& ev,
                                  double c_lambda = 1.0);
CodelengthReport codelength_total(const Vec& x, const ModelIndex& gamma,
                                  double nu, double c_lambda = 1.0);

// One-line JSON rendering of a report (keys mirror the field names).
std::string codelength_report_json(const CodelengthReport& report);

// --- NML reference ----------------------------------------------------------------

// Normalized-maximum-likelihood codelength of the model γ with flat prior,
// evaluated at the invariant estimates (θ* = x∥, τ* = (n-d+2)/‖x⊥‖²):
//   L' = -log f(x|θ*,τ*) - ((d+1)/2) log 2π
//        + log ∫_{‖θ‖≤‖x∥‖, τ∈I_τ} sqrt(n/2) τ^{d/2-1} dθ dτ.
// The overload without i_tau builds the default range from N = (n-d+2)/2.
// Throws std::invalid_argument when d == 0 and std::domain_error when
// ‖x∥‖ = 0 or ‖x⊥‖ = 0.
double nml_codelength(const Vec& x, const ModelIndex& gamma,
                      const Interval& i_tau);
double nml_codelength(const Vec& x, const ModelIndex& gamma);

// Flat-prior invariant codelength over the same region and τ-range:
// exactly log((n-d)/(n-d+2)) + ½ log 2π longer than nml_codelength.
double flat_jeffreys_codelength(const Vec& x, const ModelIndex& gamma,
                                const Interval& i_tau);
double flat_jeffreys_codelength(const Vec& x, const ModelIndex& gamma);

// --- posterior bias -----------------------------------------------------------------

// Leading-order posterior-mean offsets at the invariant estimates. theta_bias
// is E{θ_i} - θ*_i; tau_rel_bias the relative offset of E{τ}. Both vanish for
// ν = 1 and ν = 2.
struct PosteriorBias {
    Vec theta_bias;
    double tau_rel_bias = 0.0;
};

PosteriorBias posterior_bias(const Vec& theta_star, double tau_star,
                             const GGDPrior& prior, std::size_t n);

}  // namespace mdl
