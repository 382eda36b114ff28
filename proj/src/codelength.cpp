// Invariant-MDL codelength machinery. Formula reference: the Laplace expansion
// of the model marginal around the invariant estimates (θ*, τ*, λ*), its
// correction diagnostics, the renormalization-constant bounds, and the NML
// reference codelength. All logs are natural.

#include "mdlshrink/codelength.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace mdl {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2π)
constexpr double kInf = std::numeric_limits<double>::infinity();

// Fixed-point and containment tolerances.
constexpr double kFitRelTol = 1e-12;
constexpr double kContainSlack = 1e-9;

double sgn(double v) { return (v > 0.0) - (v < 0.0); }

// One MAP lookup table per shape, built lazily. Accuracy does not depend on
// the grid step (the estimator polishes to machine precision), so a single
// conservative step per shape serves every (τ, λ). The Gaussian shape uses
// the exact linear rule and never consults the table, so it gets a stub.
const MapTable& cached_map_table(double nu) {
    thread_local std::map<double, MapTable> cache;
    auto it = cache.find(nu);
    if (it == cache.end()) {
        MapTable t;
        if (nu < 2.0) t = ggd_map_table_build(nu, ggd_table_step(nu, 4096, 1.0));
        it = cache.emplace(nu, std::move(t)).first;
    }
    return it->second;
}

double sum_abs_pow(const Vec& v, double p) {
    double s = 0.0;
    for (double x : v) s += std::pow(std::fabs(x), p);
    return s;
}

// Σ_i log π(θ_i | λ) under the shape-ν prior.
double log_prior_density(const Vec& theta, double nu, double lambda) {
    const GGDPrior prior = GGDPrior::make(nu, lambda);
    double s = 0.0;
    for (double t : theta) s += prior.log_density(t);
    return s;
}

// log|H(x, θ*, τ*)| = log((n-d+2)/2) + (d-2) log τ* + log((1-r)/(1+r)).
double log_det_hessian(double tau, double r, std::size_t n, std::size_t d) {
    if (r >= 1.0)
        throw std::domain_error("codelength: singular parameter Hessian (r >= 1)");
    const double nd2 = static_cast<double>(n - d) + 2.0;
    return std::log(nd2 / 2.0) + (static_cast<double>(d) - 2.0) * std::log(tau) +
           std::log1p(-r) - std::log1p(r);
}

// h(ν): exponent of the SNR factor in the contraction bound.
double h_of_nu(double nu) { return nu <= 1.0 ? nu : 0.5 * nu; }

// Upper bound on the tail correction ξ at one τ-endpoint, and the validity of
// the geometric-series premise it rests on. lambda is the fitted λ*.
struct XiAtTau {
    double bound = 0.0;
    bool claim_ok = true;
};

XiAtTau xi_at_tau(const Vec& x_par, double tau1, double lambda, double nu,
                  double eta, double c_nu) {
    const double d = static_cast<double>(x_par.size());
    const double claim_factor = 2.0 * c_nu * nu / std::sqrt(2.0 * M_PI);
    double arg = d * (0.5 + std::log(2.0));
    double l_sum = 0.0;
    bool claim_ok = true;
    for (double xi : x_par) {
        const double ax = std::fabs(xi);
        const double sx = std::sqrt(tau1) * ax;
        if (sx <= 0.0) return {kInf, false};
        arg += -0.5 * tau1 * xi * xi - std::log(sx);
        arg += std::pow(eta * eta * lambda * xi * xi, 0.5 * nu);
        const double l_nu =
            nu <= 1.0 ? std::pow(sx, nu - 1.0) * std::pow(lambda / tau1, 0.5 * nu)
                      : std::sqrt(lambda / tau1) * (1.0 + ax * std::sqrt(lambda));
        if (claim_factor * l_nu > 1.0) claim_ok = false;
        l_sum += l_nu;
    }
    arg += claim_factor * l_sum;
    if (arg > 700.0) return {kInf, claim_ok};
    const double inner = std::exp(arg);
    if (inner > 700.0) return {kInf, claim_ok};
    return {std::expm1(inner), claim_ok};
}

Diagnostics compute_diagnostics(const Vec& x_par, const InvariantFit& fit,
                                const IntervalConfig& iv, double nu,
                                std::size_t n) {
    const std::size_t d = x_par.size();
    const double dd = static_cast<double>(d);
    const double nd2 = static_cast<double>(n - d) + 2.0;
    const double tau = fit.tau_star;
    const double lambda = fit.lambda_star;
    const GGDPrior prior = GGDPrior::make(nu, lambda);
    const double eta = prior.eta, c_nu = prior.c_nu;
    const double lam_over_tau = lambda / tau;  // = ((n/d)Ω)^{-1}

    Diagnostics g;
    g.omega = omega_ggd(nu, d);
    g.r_ratio = fit.residual_norm2 / fit.x_perp_norm2;
    g.hessian_ok = g.r_ratio < 1.0;
    g.N_big = exponent_N(x_par, fit.theta_star, tau, lambda, nu, n);

    // ζ = sup_i C_ν ν|ν-1| (λ/τ)^{ν/2} |√τ θ*_i|^{ν-2}; zero components make
    // the expansion ill-posed for ν < 2 and are flagged through ζ = ∞.
    g.min_standardized_theta = kInf;
    g.zeta = 0.0;
    const double zeta_pref = c_nu * nu * std::fabs(nu - 1.0) *
                             std::pow(lam_over_tau, 0.5 * nu);
    for (double t : fit.theta_star) {
        const double s = std::sqrt(tau) * std::fabs(t);
        g.min_standardized_theta = std::min(g.min_standardized_theta, s);
        if (s <= 0.0) {
            g.zeta = kInf;  // a zero component leaves no neighbourhood to expand in
            continue;
        }
        g.zeta = std::max(g.zeta, zeta_pref * std::pow(s, nu - 2.0));
    }
    g.zeta_ok = g.zeta < 1.0;

    // κ bound: curvature, occupancy and cross terms of the θ-integral.
    const double n_eff = std::max(g.N_big, 1.0);
    double sum1 = 0.0, sum2 = 0.0, sum3 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double th = fit.theta_star[i];
        const double s = std::sqrt(tau) * std::fabs(th);
        const double w = std::exp(-0.5 * s * s);
        if (s > 0.0)
            sum1 += std::pow(s, nu - 1.0) * sgn(th) * (1.0 + 2.0 / (s * s)) * w;
        sum2 += s * s * w;
        sum3 += std::sqrt(tau) * (x_par[i] - 0.5 * th) * w;
    }
    const double zeta_fin = std::isfinite(g.zeta) ? g.zeta : 1.0;
    const double term1 = (4.0 / 3.0) * (1.0 + zeta_fin) * c_nu * nu *
                         std::fabs(nu - 1.0) * std::fabs(nu - 2.0) *
                         std::pow(lam_over_tau, 0.5 * nu) * std::fabs(sum1);
    const double term2 = sum2 / n_eff;
    const double term3 = sum3 * sum3 / (std::sqrt(2.0 * M_PI) * n_eff);
    g.kappa_bound = term1 + term2 + term3;

    // ξ bound: worst case over the two τ-interval endpoints.
    const XiAtTau lo = xi_at_tau(x_par, iv.i_tau.lo, lambda, nu, eta, c_nu);
    const XiAtTau hi = xi_at_tau(x_par, iv.i_tau.hi, lambda, nu, eta, c_nu);
    g.xi_bound = std::max(lo.bound, hi.bound);
    g.xi_claim_ok = lo.claim_ok && hi.claim_ok;

    // X: contraction of the Hessian determinant over the renormalization region.
    if (g.zeta_ok) {
        g.X = (dd / nd2) * 2.0 * c_nu * c_nu * nu * nu *
              std::pow(lam_over_tau, h_of_nu(nu)) / (1.0 - g.zeta);
    } else {
        g.X = kInf;
    }
    g.X_ok = g.X < 1.0;
    return g;
}

void check_model(const Vec& x, const ModelIndex& gamma) {
    if (gamma.n != x.size())
        throw std::invalid_argument("codelength: model index length mismatch");
}

// Gathers x∥ and ‖x⊥‖² in one pass over the sorted index list.
void split_model(const Vec& x, const ModelIndex& gamma, Vec& x_par,
                 double& x_perp_norm2) {
    x_par.clear();
    x_par.reserve(gamma.d);
    x_perp_norm2 = 0.0;
    std::size_t next = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (next < gamma.selected.size() && gamma.selected[next] == i) {
            x_par.push_back(x[i]);
            ++next;
        } else {
            x_perp_norm2 += x[i] * x[i];
        }
    }
}

double interval_log_width(const Interval& iv, const char* what) {
    const double w = iv.width();
    if (!(w > 0.0))
        throw std::domain_error(std::string("codelength: empty interval ") + what);
    return std::log(w);
}

void require_contains(const Interval& iv, double v, const char* what) {
    if (v < iv.lo * (1.0 - kContainSlack) || v > iv.hi * (1.0 + kContainSlack))
        throw std::domain_error(std::string("codelength: ") + what +
                                " outside its interval");
}

// log ∫∫ = log ∫_{Θ*×J_τ*} (π/Ψ_λλ^{1/2}) dθ dτ / (|I_τ||I_λ|); the integrand
// is τ-free and J_τ* = I_τ, so the τ-factor cancels.
double log_double_integral(const ModelEvaluation& ev) {
    return log_theta_shell_integral(ev.nu, ev.gamma.d, ev.intervals.r_nu,
                                    ev.intervals.R_nu) -
           interval_log_width(ev.intervals.i_lambda, "I_lambda");
}

// Default τ-range around a given τ* from a concentration exponent N.
Interval default_tau_interval(double tau, double n_exponent) {
    const double n_eff = std::max(n_exponent, 3.0);
    const double a = std::log(n_eff) / std::sqrt(n_eff);
    return {tau * std::exp(-a), tau * std::exp(a)};
}

std::string json_number(double v) {
    if (!std::isfinite(v)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

// --- model index and fitted parameters ---------------------------------------

ModelIndex ModelIndex::make(std::vector<std::size_t> selected, std::size_t n) {
    if (selected.empty() || selected.size() >= n)
        throw std::invalid_argument("ModelIndex: need 0 < d < n");
    if (!std::is_sorted(selected.begin(), selected.end()))
        throw std::invalid_argument("ModelIndex: indices must be sorted");
    for (std::size_t i = 0; i < selected.size(); ++i) {
        if (selected[i] >= n)
            throw std::invalid_argument("ModelIndex: index out of range");
        if (i > 0 && selected[i] == selected[i - 1])
            throw std::invalid_argument("ModelIndex: duplicate index");
    }
    ModelIndex m;
    m.d = selected.size();
    m.n = n;
    m.selected = std::move(selected);
    return m;
}

double tau_star(double x_perp_norm2, double residual_norm2, std::size_t n,
                std::size_t d) {
    if (d == 0 || d >= n) throw std::invalid_argument("tau_star: need 0 < d < n");
    if (x_perp_norm2 < 0.0 || residual_norm2 < 0.0)
        throw std::invalid_argument("tau_star: negative norm");
    const double total = x_perp_norm2 + residual_norm2;
    if (total <= 0.0) throw std::domain_error("tau_star: zero residual energy");
    return (static_cast<double>(n - d) + 2.0) / total;
}

InvariantFit fit_invariant(const Vec& x, const ModelIndex& gamma, double nu,
                           std::size_t max_iter) {
    check_model(x, gamma);
    InvariantFit fit;
    split_model(x, gamma, fit.theta_star, fit.x_perp_norm2);
    const Vec x_par = fit.theta_star;  // start from the unshrunk coefficients
    fit.x_par_norm2 = norm2_sq(x_par);
    if (fit.x_perp_norm2 <= 0.0)
        throw std::domain_error("fit_invariant: zero out-of-model energy");
    if (sum_abs_pow(x_par, nu) <= 0.0)
        throw std::domain_error("fit_invariant: all selected coefficients zero");

    const MapTable& table = cached_map_table(nu);
    double tau = tau_star(fit.x_perp_norm2, 0.0, gamma.n, gamma.d);
    double lambda = lambda_ml_ggd(fit.theta_star, nu);
    for (fit.iterations = 1; fit.iterations <= max_iter; ++fit.iterations) {
        const GGDPrior prior = GGDPrior::make(nu, lambda);
        double resid = 0.0;
        for (std::size_t i = 0; i < x_par.size(); ++i) {
            fit.theta_star[i] = ggd_map_estimate(x_par[i], prior, tau, table);
            resid += sqr(x_par[i] - fit.theta_star[i]);
        }
        fit.residual_norm2 = resid;
        const double tau_next = tau_star(fit.x_perp_norm2, resid, gamma.n, gamma.d);
        if (sum_abs_pow(fit.theta_star, nu) <= 0.0) {
            // Every component shrank to zero: no prior scale left to estimate.
            tau = tau_next;
            break;
        }
        const double lambda_next = lambda_ml_ggd(fit.theta_star, nu);
        const bool done = std::fabs(tau_next - tau) <= kFitRelTol * tau &&
                          std::fabs(lambda_next - lambda) <= kFitRelTol * lambda;
        tau = tau_next;
        lambda = lambda_next;
        if (done) {
            fit.converged = true;
            break;
        }
    }
    fit.tau_star = tau;
    fit.lambda_star = lambda;
    return fit;
}

// --- prior geometry -----------------------------------------------------------

double ggd_psi(const Vec& theta, double lambda, double nu) {
    if (theta.empty()) throw std::invalid_argument("ggd_psi: empty theta");
    const double d = static_cast<double>(theta.size());
    return 0.5 * std::log(nu * d / 4.0) - std::log(lambda) -
           log_prior_density(theta, nu, lambda);
}

double ggd_psi_lambda_lambda(const Vec& theta, double lambda, double nu) {
    if (theta.empty())
        throw std::invalid_argument("ggd_psi_lambda_lambda: empty theta");
    if (lambda <= 0.0)
        throw std::invalid_argument("ggd_psi_lambda_lambda: lambda must be positive");
    const double d = static_cast<double>(theta.size());
    const double eta = std::sqrt(std::exp(std::lgamma(3.0 / nu) - std::lgamma(1.0 / nu)));
    const double rnu = std::pow(eta * std::sqrt(lambda), nu) * sum_abs_pow(theta, nu);
    return 0.5 * (d + 2.0) / (lambda * lambda) *
           (1.0 + (nu / (d + 2.0)) * (0.5 * nu - 1.0) * rnu);
}

double psi_lambda_lambda_ggd(double lambda_star, double nu, std::size_t d) {
    if (lambda_star <= 0.0)
        throw std::invalid_argument("psi_lambda_lambda_ggd: lambda must be positive");
    if (nu <= 0.0 || nu > 2.0)
        throw std::invalid_argument("psi_lambda_lambda_ggd: nu must be in (0,2]");
    return std::sqrt(nu * (static_cast<double>(d) + 2.0) / 4.0) / lambda_star;
}

double omega_ggd(double nu, std::size_t d) {
    if (nu <= 0.0 || nu > 2.0)
        throw std::invalid_argument("omega_ggd: nu must be in (0,2]");
    const double third = std::fabs((0.5 * nu - 1.0) * (0.5 * nu - 2.0) / 2.0 - 1.0);
    return 8.0 * third /
           (std::pow(nu, 1.5) * std::sqrt(static_cast<double>(d) + 2.0));
}

double log_theta_shell_integral(double nu, std::size_t d, double r_nu,
                                double R_nu) {
    if (nu <= 0.0 || nu > 2.0)
        throw std::invalid_argument("log_theta_shell_integral: nu must be in (0,2]");
    if (!(0.0 < r_nu && r_nu < R_nu))
        throw std::invalid_argument("log_theta_shell_integral: need 0 < r < R");
    const double dd = static_cast<double>(d);
    const double k = (dd + 2.0) / nu;
    const double log_eta2 = std::lgamma(3.0 / nu) - std::lgamma(1.0 / nu);
    const double ratio = r_nu / R_nu;
    return 0.5 * (std::log(nu) - std::log(dd + 2.0)) - log_eta2 - k +
           k * std::log(k) - std::lgamma(dd / nu) - 2.0 * std::log(r_nu) +
           std::log1p(-ratio * ratio);
}

// --- intervals ------------------------------------------------------------------

double exponent_N(const Vec& x_par, const Vec& theta_star, double tau_star,
                  double lambda_star, double nu, std::size_t n) {
    const std::size_t d = theta_star.size();
    if (x_par.size() != d)
        throw std::invalid_argument("exponent_N: length mismatch");
    if (d == 0 || d >= n) throw std::invalid_argument("exponent_N: need 0 < d < n");
    const double c_nu =
        std::pow(std::exp(std::lgamma(3.0 / nu) - std::lgamma(1.0 / nu)), 0.5 * nu);
    const double snr_inv = std::pow(lambda_star / tau_star, 0.5 * nu);
    double acc = 0.5 * (static_cast<double>(n - d) + 2.0);
    for (std::size_t i = 0; i < d; ++i) {
        const double th = theta_star[i];
        const double s = std::sqrt(tau_star) * std::fabs(th);
        acc += tau_star * (x_par[i] - th) * (2.0 * th - x_par[i]);
        if (s > 0.0) {
            const double mu = c_nu * nu * (nu - 1.0) * snr_inv * std::pow(s, nu - 2.0);
            acc += c_nu * nu * (nu - 1.0) *
                   (snr_inv * std::pow(s, nu - 1.0) * sgn(th) -
                    0.25 * std::pow(std::sqrt(lambda_star) * std::fabs(th), nu));
            acc -= 0.25 * mu * mu * s * s;
        }
    }
    return acc;
}

IntervalConfig make_intervals(const Vec& x_par, const Vec& theta_star,
                              double tau_star, double lambda_star, double nu,
                              std::size_t n, double c_lambda, double k_tauhat) {
    if (tau_star <= 0.0 || lambda_star <= 0.0)
        throw std::invalid_argument("make_intervals: estimates must be positive");
    IntervalConfig iv;
    iv.k_tauhat = k_tauhat;
    const double n_big =
        exponent_N(x_par, theta_star, tau_star, lambda_star, nu, n);
    iv.i_tau = default_tau_interval(tau_star, n_big);
    iv.j_tau_star = iv.i_tau;

    const double d = static_cast<double>(theta_star.size());
    const double w = std::min(2.0 * c_lambda / std::sqrt(nu * (d + 2.0)), 0.75);
    iv.i_lambda = {lambda_star * (1.0 - w), lambda_star * (1.0 + w)};

    iv.r_nu = 1.0 / std::sqrt(tau_star);
    iv.R_nu = std::pow(sum_abs_pow(theta_star, nu), 1.0 / nu);
    if (iv.r_nu >= iv.R_nu) {
        iv.r_nu = 0.5 * iv.R_nu;
        iv.shell_clamped = true;
    }
    return iv;
}

// --- evaluation ------------------------------------------------------------------

ModelEvaluation evaluate_model(const Vec& x, const ModelIndex& gamma, double nu) {
    ModelEvaluation ev;
    ev.gamma = gamma;
    ev.nu = nu;
    ev.fit = fit_invariant(x, gamma, nu);
    Vec x_par;
    double x_perp = 0.0;
    split_model(x, gamma, x_par, x_perp);
    ev.intervals = make_intervals(x_par, ev.fit.theta_star, ev.fit.tau_star,
                                  ev.fit.lambda_star, nu, gamma.n);
    ev.diag = compute_diagnostics(x_par, ev.fit, ev.intervals, nu, gamma.n);
    return ev;
}

ModelEvaluation evaluate_model(const Vec& x, const ModelIndex& gamma, double nu,
                               const IntervalConfig& intervals) {
    ModelEvaluation ev;
    ev.gamma = gamma;
    ev.nu = nu;
    ev.fit = fit_invariant(x, gamma, nu);
    require_contains(intervals.i_tau, ev.fit.tau_star, "tau*");
    require_contains(intervals.i_lambda, ev.fit.lambda_star, "lambda*");
    ev.intervals = intervals;
    Vec x_par;
    double x_perp = 0.0;
    split_model(x, gamma, x_par, x_perp);
    ev.diag = compute_diagnostics(x_par, ev.fit, ev.intervals, nu, gamma.n);
    return ev;
}

// --- marginals --------------------------------------------------------------------

std::pair<double, Diagnostics> marginal_laplace(const Vec& x,
                                                const ModelIndex& gamma,
                                                const GGDPrior& prior,
                                                const IntervalConfig& intervals) {
    const ModelEvaluation ev = evaluate_model(x, gamma, prior.nu, intervals);
    const std::size_t n = gamma.n, d = gamma.d;
    if (ev.diag.min_standardized_theta <= 0.0)
        throw std::domain_error("marginal_laplace: a fitted component is zero");
    if (!ev.diag.zeta_ok)
        throw std::domain_error("marginal_laplace: zeta >= 1");
    const double tau = ev.fit.tau_star, lambda = ev.fit.lambda_star;
    const double log_f = 0.5 * static_cast<double>(n) * (std::log(tau) - kLog2Pi) -
                         0.5 * (static_cast<double>(n - d) + 2.0);
    double log_m = 0.5 * (static_cast<double>(d) + 2.0) * kLog2Pi + log_f +
                   log_prior_density(ev.fit.theta_star, prior.nu, lambda) -
                   interval_log_width(intervals.i_tau, "I_tau") -
                   interval_log_width(intervals.i_lambda, "I_lambda") -
                   0.5 * log_det_hessian(tau, ev.diag.r_ratio, n, d) -
                   std::log(psi_lambda_lambda_ggd(lambda, prior.nu, d));
    for (double t : ev.fit.theta_star)
        log_m += std::log(normal_cdf(std::sqrt(tau) * std::fabs(t)));
    return {log_m, ev.diag};
}

double marginal_laplace_flat(const Vec& x, const ModelIndex& gamma,
                             const Interval& i_tau) {
    check_model(x, gamma);
    Vec x_par;
    double x_perp = 0.0;
    split_model(x, gamma, x_par, x_perp);
    if (x_perp <= 0.0)
        throw std::domain_error("marginal_laplace_flat: zero out-of-model energy");
    const std::size_t n = gamma.n, d = gamma.d;
    const double tau = tau_star(x_perp, 0.0, n, d);
    require_contains(i_tau, tau, "tau*");
    const double log_f = 0.5 * static_cast<double>(n) * (std::log(tau) - kLog2Pi) -
                         0.5 * (static_cast<double>(n - d) + 2.0);
    return 0.5 * (static_cast<double>(d) + 1.0) * kLog2Pi + log_f -
           interval_log_width(i_tau, "I_tau") -
           0.5 * log_det_hessian(tau, 0.0, n, d);
}

// --- renormalization constant --------------------------------------------------

Interval log_C_gamma_bounds(const Vec& x, const ModelEvaluation& ev) {
    const std::size_t n = ev.gamma.n, d = ev.gamma.d;
    if (!ev.diag.zeta_ok)
        throw std::domain_error("log_C_gamma_bounds: zeta >= 1");
    if (!ev.diag.X_ok) throw std::domain_error("log_C_gamma_bounds: X >= 1");
    (void)x;
    const double dd = static_cast<double>(d);
    const double nd2 = static_cast<double>(n - d) + 2.0;
    const double base = std::log((nd2 - 2.0) / nd2) + 0.5 * kLog2Pi +
                        log_double_integral(ev);
    const double zeta_slack = 0.5 * dd * ev.diag.zeta;
    const double c_nu2nu2 =
        std::pow(std::exp(std::lgamma(3.0 / ev.nu) - std::lgamma(1.0 / ev.nu)),
                 ev.nu) *
        ev.nu * ev.nu;
    const double contraction =
        0.5 * (nd2 - 2.0) * dd * c_nu2nu2 *
        std::pow(ev.fit.lambda_star / ev.fit.tau_star, h_of_nu(ev.nu)) / nd2;
    const double tail =
        dd * std::log(normal_cdf(ev.diag.min_standardized_theta));
    Interval b;
    b.hi = base + zeta_slack;
    b.lo = base - zeta_slack - contraction + tail;
    return b;
}

double log_C_gamma_flat(std::size_t n, std::size_t d, double x_par_norm2,
                        const Interval& i_lambda) {
    if (d == 0 || d >= n)
        throw std::invalid_argument("log_C_gamma_flat: need 0 < d < n");
    if (x_par_norm2 <= 0.0)
        throw std::domain_error("log_C_gamma_flat: zero in-model energy");
    const double nd2 = static_cast<double>(n - d) + 2.0;
    const double lambda = (static_cast<double>(d) + 2.0) / x_par_norm2;
    const double psi_sqrt =
        std::sqrt((static_cast<double>(d) + 2.0) / 2.0) / lambda;
    return std::log((nd2 - 2.0) / nd2) + 0.5 * kLog2Pi - std::log(psi_sqrt) -
           interval_log_width(i_lambda, "I_lambda");
}

// --- entropies and the model-class prior ------------------------------------------

double entropy_ggd(const GGDPrior& prior, std::size_t d) {
    if (d == 0) throw std::invalid_argument("entropy_ggd: d must be positive");
    const double log_norm = std::log(prior.nu * prior.eta / 2.0) -
                            std::lgamma(1.0 / prior.nu) +
                            0.5 * std::log(prior.lambda);
    return static_cast<double>(d) * (1.0 / prior.nu - log_norm);
}

double entropy_jeffreys(std::size_t n, std::size_t d, double R) {
    if (d < 3) throw std::invalid_argument("entropy_jeffreys: d must be >= 3");
    if (n < 2) throw std::invalid_argument("entropy_jeffreys: n must be >= 2");
    if (R <= 0.0) throw std::invalid_argument("entropy_jeffreys: R must be positive");
    const double dd = static_cast<double>(d);
    const double half_log_n2 = 0.5 * std::log(0.5 * static_cast<double>(n));
    return half_log_n2 + std::log(0.5 * (dd - 2.0)) + 0.5 * dd * std::log(M_PI) +
           dd * std::log(R) - std::lgamma(0.5 * dd + 1.0) + 1.0 -
           half_log_n2 / std::sqrt(0.5 * static_cast<double>(n));
}

double model_class_log_D(double nu_p, double nu_q, std::size_t d,
                         double c_lambda) {
    if (d < 3) throw std::invalid_argument("model_class_log_D: d must be >= 3");
    if (nu_p <= 0.0 || nu_p > 2.0)
        throw std::invalid_argument("model_class_log_D: nu_p must be in (0,2]");
    if (c_lambda <= 0.0 || c_lambda > 1.0)
        throw std::invalid_argument("model_class_log_D: C_lambda must be in (0,1]");
    double q_shape = 2.0;
    if (nu_q != kJeffreysReference) {
        if (nu_q <= 0.0 || nu_q > 2.0)
            throw std::invalid_argument("model_class_log_D: nu_q must be in (0,2]");
        if (std::fabs(nu_p - nu_q) < 1e-12) return 0.0;  // p ≡ q: constant density
        q_shape = nu_q;
    }
    const double dd = static_cast<double>(d);
    const double ratio = 1.0 + nu_p / q_shape;
    const double b = 4.0 * c_lambda * c_lambda * ratio / (nu_p * (dd + 2.0));
    const double log_a = std::log(4.0 * c_lambda / (dd - 2.0)) +
                         0.5 * std::log(ratio / (nu_p * (dd + 2.0)));
    return -log_a + 0.25 * dd * std::log(b);
}

// --- parameter discretizations ------------------------------------------------------

Discretization discretizations(double tau, double lambda_star,
                               const Vec& theta_star, double nu,
                               double omega_snr, std::size_t n, double c_theta,
                               double c_tau, double c_lambda) {
    if (tau <= 0.0 || lambda_star <= 0.0 || omega_snr <= 0.0)
        throw std::invalid_argument("discretizations: scales must be positive");
    if (theta_star.empty())
        throw std::invalid_argument("discretizations: empty theta");
    if (c_theta <= 0.0 || c_tau <= 0.0 || c_lambda <= 0.0 || c_theta > 1.0 ||
        c_tau > 1.0 || c_lambda > 1.0)
        throw std::invalid_argument("discretizations: precision constants in (0,1]");
    const double d = static_cast<double>(theta_star.size());
    const double nn = static_cast<double>(n);
    Discretization q;
    q.d_tau = tau * (2.0 / std::sqrt(nn)) / std::sqrt(omega_snr) * c_tau;
    q.d_lambda = 2.0 / std::sqrt(nu * (d + 2.0)) * lambda_star * c_lambda;
    q.d_theta.reserve(theta_star.size());
    const double base = c_theta / std::sqrt(tau * d);
    for (double th : theta_star) {
        const double drift =
            std::sqrt((d / nn) * tau * th * th / omega_snr) * c_tau / c_theta;
        q.d_theta.push_back(base * (1.0 + drift));
    }
    return q;
}

// --- the Q + Δ_d codelength split ----------------------------------------------------

double codelength_Q(const Vec& x, const ModelEvaluation& ev, double c_lambda) {
    (void)x;
    const std::size_t n = ev.gamma.n, d = ev.gamma.d;
    const double nd2 = static_cast<double>(n - d) + 2.0;
    const double log_d_term =
        d >= 3 ? model_class_log_D(ev.nu, kJeffreysReference, d, c_lambda) : 0.0;
    const double log_prior_geometry =
        log_prior_density(ev.fit.theta_star, ev.nu, ev.fit.lambda_star) -
        std::log(psi_lambda_lambda_ggd(ev.fit.lambda_star, ev.nu, d)) -
        log_double_integral(ev);
    return -log_d_term + 0.5 * nd2 +
           interval_log_width(ev.intervals.i_tau, "I_tau") +
           interval_log_width(ev.intervals.i_lambda, "I_lambda") -
           0.5 * (nd2 - 1.0) * (std::log(nd2) - kLog2Pi) +
           0.5 * nd2 * std::log(ev.fit.x_perp_norm2) - log_prior_geometry;
}

Interval codelength_Delta_d(const Vec& x, const ModelEvaluation& ev) {
    const std::size_t d = ev.gamma.d;
    const double nd2 = static_cast<double>(ev.gamma.n - d) + 2.0;
    if (!ev.diag.valid())
        throw std::domain_error("codelength_Delta_d: invalid diagnostics");
    const double r = ev.diag.r_ratio;
    double base = 0.5 * nd2 * std::log1p(r) - 1.5 * kLog2Pi -
                  0.5 * std::log(2.0) +
                  0.5 * (std::log1p(-r) - std::log1p(r)) -
                  log_double_integral(ev);
    const double tau = ev.fit.tau_star;
    for (double t : ev.fit.theta_star)
        base -= std::log(normal_cdf(std::sqrt(tau) * std::fabs(t)));
    const Interval log_c = log_C_gamma_bounds(x, ev);
    const double slack = 0.5 * static_cast<double>(d) * ev.diag.zeta;
    return {base + log_c.lo - slack, base + log_c.hi + slack};
}

CodelengthReport codelength_total(const Vec& x, const ModelEvaluation& ev,
                                  double c_lambda) {
    if (!ev.diag.valid())
        throw std::domain_error("codelength_total: invalid diagnostics");
    CodelengthReport rep;
    rep.d = ev.gamma.d;
    rep.n = ev.gamma.n;
    rep.nu = ev.nu;
    rep.tau_star = ev.fit.tau_star;
    rep.lambda_star = ev.fit.lambda_star;
    rep.diag = ev.diag;
    rep.Q = codelength_Q(x, ev, c_lambda);
    rep.delta_d = codelength_Delta_d(x, ev);
    rep.log_C = log_C_gamma_bounds(x, ev);
    rep.log_D = rep.d >= 3
                    ? model_class_log_D(ev.nu, kJeffreysReference, rep.d, c_lambda)
                    : 0.0;
    rep.model_index_cost = static_cast<double>(rep.n) * std::log(2.0) +
                           std::log(static_cast<double>(rep.n));
    rep.L_total = rep.Q + rep.delta_d.mid() + rep.model_index_cost;
    return rep;
}

CodelengthReport codelength_total(const Vec& x, const ModelIndex& gamma,
                                  double nu, double c_lambda) {
    return codelength_total(x, evaluate_model(x, gamma, nu), c_lambda);
}

std::string codelength_report_json(const CodelengthReport& r) {
    std::string s = "{";
    auto field = [&s](const char* k, const std::string& v, bool comma = true) {
        s += '"';
        s += k;
        s += "\":";
        s += v;
        if (comma) s += ',';
    };
    auto pair_str = [](const Interval& iv) {
        return "[" + json_number(iv.lo) + "," + json_number(iv.hi) + "]";
    };
    field("L_total", json_number(r.L_total));
    field("Q", json_number(r.Q));
    field("delta_d", pair_str(r.delta_d));
    field("log_C", pair_str(r.log_C));
    field("log_D", json_number(r.log_D));
    field("tau_star", json_number(r.tau_star));
    field("lambda_star", json_number(r.lambda_star));
    field("nu", json_number(r.nu));
    field("model_index_cost", json_number(r.model_index_cost));
    field("d", std::to_string(r.d));
    field("n", std::to_string(r.n));
    std::string diag = "{";
    diag += "\"zeta\":" + json_number(r.diag.zeta) + ",";
    diag += "\"kappa_bound\":" + json_number(r.diag.kappa_bound) + ",";
    diag += "\"xi_bound\":" + json_number(r.diag.xi_bound) + ",";
    diag += "\"omega\":" + json_number(r.diag.omega) + ",";
    diag += "\"X\":" + json_number(r.diag.X) + ",";
    diag += "\"N_big\":" + json_number(r.diag.N_big) + ",";
    diag += "\"min_standardized_theta\":" +
            json_number(r.diag.min_standardized_theta) + ",";
    diag += "\"r_ratio\":" + json_number(r.diag.r_ratio) + ",";
    diag += std::string("\"valid\":") + (r.diag.valid() ? "true" : "false") + ",";
    diag += std::string("\"in_operating_range\":") +
            (r.diag.in_operating_range() ? "true" : "false");
    diag += "}";
    field("diagnostics", diag, false);
    s += "}";
    return s;
}

// --- NML reference ---------------------------------------------------------------

double nml_codelength(const Vec& x, const ModelIndex& gamma,
                      const Interval& i_tau) {
    check_model(x, gamma);
    if (gamma.d == 0) throw std::invalid_argument("nml_codelength: d == 0");
    Vec x_par;
    double x_perp = 0.0;
    split_model(x, gamma, x_par, x_perp);
    const double x_par_norm2 = norm2_sq(x_par);
    if (x_par_norm2 <= 0.0)
        throw std::domain_error("nml_codelength: zero in-model energy");
    if (x_perp <= 0.0)
        throw std::domain_error("nml_codelength: zero out-of-model energy");
    const std::size_t n = gamma.n, d = gamma.d;
    const double dd = static_cast<double>(d);
    const double tau = tau_star(x_perp, 0.0, n, d);
    require_contains(i_tau, tau, "tau*");
    const double neg_log_f = 0.5 * static_cast<double>(n) * (kLog2Pi - std::log(tau)) +
                             0.5 * (static_cast<double>(n - d) + 2.0);
    // log ∫ sqrt(n/2) τ^{d/2-1} over the ball ‖θ‖ ≤ ‖x∥‖ and τ ∈ I_τ.
    const double log_ball = 0.5 * dd * std::log(M_PI) +
                            0.5 * dd * std::log(x_par_norm2) -
                            std::lgamma(0.5 * dd + 1.0);
    if (!(i_tau.hi > i_tau.lo && i_tau.lo > 0.0))
        throw std::domain_error("nml_codelength: empty tau interval");
    const double log_tau_int =
        std::log(2.0 / dd) + 0.5 * dd * std::log(i_tau.hi) +
        std::log1p(-std::exp(0.5 * dd * std::log(i_tau.lo / i_tau.hi)));
    const double log_region = 0.5 * std::log(0.5 * static_cast<double>(n)) +
                              log_ball + log_tau_int;
    return neg_log_f - 0.5 * (dd + 1.0) * kLog2Pi + log_region;
}

double nml_codelength(const Vec& x, const ModelIndex& gamma) {
    check_model(x, gamma);
    Vec x_par;
    double x_perp = 0.0;
    split_model(x, gamma, x_par, x_perp);
    if (x_perp <= 0.0)
        throw std::domain_error("nml_codelength: zero out-of-model energy");
    const double tau = tau_star(x_perp, 0.0, gamma.n, gamma.d);
    const double n_flat = 0.5 * (static_cast<double>(gamma.n - gamma.d) + 2.0);
    return nml_codelength(x, gamma, default_tau_interval(tau, n_flat));
}

double flat_jeffreys_codelength(const Vec& x, const ModelIndex& gamma,
                                const Interval& i_tau) {
    const double nd2 = static_cast<double>(gamma.n - gamma.d) + 2.0;
    return nml_codelength(x, gamma, i_tau) + std::log((nd2 - 2.0) / nd2) +
           0.5 * kLog2Pi;
}

double flat_jeffreys_codelength(const Vec& x, const ModelIndex& gamma) {
    const double nd2 = static_cast<double>(gamma.n - gamma.d) + 2.0;
    return nml_codelength(x, gamma) + std::log((nd2 - 2.0) / nd2) +
           0.5 * kLog2Pi;
}

// --- posterior bias -----------------------------------------------------------------

PosteriorBias posterior_bias(const Vec& theta_star, double tau_star,
                             const GGDPrior& prior, std::size_t n) {
    const std::size_t d = theta_star.size();
    if (d == 0) throw std::invalid_argument("posterior_bias: empty theta");
    if (d >= n) throw std::invalid_argument("posterior_bias: need d < n");
    if (tau_star <= 0.0)
        throw std::invalid_argument("posterior_bias: tau must be positive");
    const double nu = prior.nu;
    const double shape_factor = nu * (nu - 1.0) * (nu - 2.0);
    PosteriorBias out;
    out.theta_bias.assign(d, 0.0);
    if (shape_factor == 0.0) return out;  // ν = 1 and ν = 2 are exactly unbiased

    const double snr_inv = std::pow(prior.lambda / tau_star, 0.5 * nu);
    Vec s(d), w(d);
    double cross = 0.0, tau_sum = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        s[i] = std::sqrt(tau_star) * std::fabs(theta_star[i]);
        w[i] = std::exp(-0.5 * s[i] * s[i]);
        cross += std::pow(s[i], nu - 1.0) * sgn(theta_star[i]) * w[i];
        tau_sum += std::pow(s[i], nu - 2.0) *
                   (sgn(theta_star[i]) + s[i] * sgn(theta_star[i]) * w[i]);
    }
    const double pref = prior.c_nu * shape_factor * snr_inv /
                        (6.0 * std::sqrt(2.0 * M_PI) * std::sqrt(tau_star));
    for (std::size_t i = 0; i < d; ++i) {
        const double others =
            cross - std::pow(s[i], nu - 1.0) * sgn(theta_star[i]) * w[i];
        out.theta_bias[i] = pref * w[i] * (sgn(theta_star[i]) + others);
    }
    out.tau_rel_bias =
        shape_factor * tau_sum / (static_cast<double>(n - d) / snr_inv);
    return out;
}

}  // namespace mdl
