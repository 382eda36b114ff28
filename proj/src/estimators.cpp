#include "mdlshrink/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mdl {
namespace {

double sgn(double x) { return (x > 0.0) - (x < 0.0); }

// x̄ as a function of θ̄* > 0 on the stationary branch.
double xbar_of_thetabar(double nu, double tb) {
    return tb + 0.5 * nu * std::pow(tb, nu - 1.0);
}

// d x̄ / d θ̄* on the branch.
double dxbar_dthetabar(double nu, double tb) {
    return 1.0 + 0.5 * nu * (nu - 1.0) * std::pow(tb, nu - 2.0);
}

// Solves x̄(θ̄) = target on the monotone upper branch by safeguarded
// Newton within the bracket [lo, hi] (x̄(lo) <= target <= x̄(hi)). The
// tolerance is relative to the target because the caller rescales by a
// normalization factor that can be very large.
double invert_xbar(double nu, double target, double lo, double hi, double start) {
    if (hi <= lo) return lo;
    double tb = std::clamp(start, lo, hi);
    if (tb <= 0.0) tb = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double fx = xbar_of_thetabar(nu, tb) - target;
        if (std::fabs(fx) <= 1e-15 * target) return tb;
        if (fx > 0.0) hi = tb;
        else lo = tb;
        const double deriv = dxbar_dthetabar(nu, tb);
        double next = (deriv > 1e-12 && std::isfinite(deriv)) ? tb - fx / deriv
                                                              : 0.5 * (lo + hi);
        if (!(next > lo && next < hi) || next == tb) next = 0.5 * (lo + hi);
        if (next == tb) return tb;  // bracket exhausted at machine precision
        tb = next;
    }
    return tb;
}

}  // namespace

double threshold(double x, ThresholdKind kind, double t, double t2) {
    if (t <= 0.0) throw std::invalid_argument("threshold: t must be positive");
    const double a = std::fabs(x);
    switch (kind) {
        case ThresholdKind::Hard:
            return a >= t ? x : 0.0;
        case ThresholdKind::Soft:
            return a >= t ? x - sgn(x) * t : 0.0;
        case ThresholdKind::Firm:
            if (t2 <= t) throw std::invalid_argument("threshold: firm requires t2 > t");
            if (a < t) return 0.0;
            if (a >= t2) return x;
            return sgn(x) * t2 * (a - t) / (t2 - t);
    }
    throw std::logic_error("threshold: unknown kind");
}

double universal_threshold(std::size_t n, double sigma) {
    if (n < 2) throw std::invalid_argument("universal_threshold: n must be at least 2");
    if (sigma <= 0.0) throw std::invalid_argument("universal_threshold: sigma must be positive");
    return sigma * std::sqrt(2.0 * std::log(static_cast<double>(n)));
}

double median_noise_sigma(const Vec& highpass) {
    if (highpass.empty()) throw std::invalid_argument("median_noise_sigma: empty input");
    Vec a(highpass.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::fabs(highpass[i]);
    std::sort(a.begin(), a.end());
    const std::size_t n = a.size();
    const double med = (n % 2 == 1) ? a[n / 2] : 0.5 * (a[n / 2 - 1] + a[n / 2]);
    if (med <= 0.0) throw std::invalid_argument("median_noise_sigma: degenerate (zero median)");
    return med / 0.6745;
}

double sure_value(const Vec& x, double t) {
    if (t < 0.0) throw std::invalid_argument("sure_value: negative threshold");
    const double n = static_cast<double>(x.size());
    double below = 0.0, acc = 0.0;
    for (double v : x) {
        const double a = std::fabs(v);
        if (a < t) below += 1.0;
        acc += sqr(std::min(a, t));
    }
    return n - 2.0 * below + acc;
}

double sure_threshold(const Vec& x, double t_max) {
    if (t_max < 0.0) throw std::invalid_argument("sure_threshold: negative bound");
    Vec candidates{0.0, t_max};
    for (double v : x) {
        const double a = std::fabs(v);
        if (a <= t_max) candidates.push_back(a);
    }
    std::sort(candidates.begin(), candidates.end());
    double best_t = 0.0, best = std::numeric_limits<double>::infinity();
    for (double t : candidates) {
        const double s = sure_value(x, t);
        if (s < best - 1e-12) {
            best = s;
            best_t = t;
        }
    }
    return best_t;
}

// --- generalized Gaussian machinery -----------------------------------------

GGDPrior GGDPrior::make(double nu, double lambda) {
    if (nu <= 0.0 || nu > 2.0) throw std::invalid_argument("GGDPrior: nu must be in (0,2]");
    if (lambda <= 0.0) throw std::invalid_argument("GGDPrior: lambda must be positive");
    GGDPrior p;
    p.nu = nu;
    p.lambda = lambda;
    p.eta = std::sqrt(std::exp(std::lgamma(3.0 / nu) - std::lgamma(1.0 / nu)));
    p.c_nu = std::pow(p.eta, nu);
    return p;
}

double GGDPrior::log_density(double theta) const {
    const double norm =
        std::log(nu * eta / 2.0) - std::lgamma(1.0 / nu) + 0.5 * std::log(lambda);
    return norm - std::pow(eta * std::sqrt(lambda) * std::fabs(theta), nu);
}

double ggd_normalized_threshold(double nu) {
    if (nu <= 0.0 || nu > 1.0)
        throw std::invalid_argument("ggd_normalized_threshold: nu must be in (0,1]");
    if (nu == 1.0) return 0.5;
    const double e = (1.0 - nu) / (2.0 - nu);
    return std::pow(2.0, -1.0 / (2.0 - nu)) * (2.0 - nu) * std::pow(2.0 - 2.0 * nu, -e);
}

double ggd_step(double nu) {
    if (nu <= 0.0 || nu >= 1.0) throw std::invalid_argument("ggd_step: nu must be in (0,1)");
    const double tbar = ggd_normalized_threshold(nu);
    // The stationary branch is born at the fold point θ̄₀ where dx̄/dθ̄ = 0;
    // s̄ is the branch solution of x̄(s̄) = t̄ above the fold.
    const double fold = std::pow(0.5 * nu * (1.0 - nu), 1.0 / (2.0 - nu));
    double lo = fold, hi = tbar;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (xbar_of_thetabar(nu, mid) > tbar) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

double ggd_table_step(double nu, std::size_t n, double nd_omega) {
    if (nu <= 0.0 || nu >= 2.0) throw std::invalid_argument("ggd_table_step: nu must be in (0,2)");
    if (n == 0) throw std::invalid_argument("ggd_table_step: n must be positive");
    const double ratio = std::max(1.0, nd_omega);
    const double eta = std::sqrt(std::exp(std::lgamma(3.0 / nu) - std::lgamma(1.0 / nu)));
    const double base = ratio / (std::pow(2.0, 2.0 / nu) * eta * eta);
    return std::pow(base, 0.5 * nu / (2.0 - nu)) / std::sqrt(static_cast<double>(n));
}

MapTable ggd_map_table_build(double nu, double grid_step) {
    if (nu <= 0.0 || nu >= 2.0)
        throw std::invalid_argument("ggd_map_table_build: nu must be in (0,2)");
    if (grid_step <= 0.0)
        throw std::invalid_argument("ggd_map_table_build: step must be positive");
    MapTable t;
    t.nu = nu;
    t.step = grid_step;
    if (nu < 1.0) {
        t.tbar = ggd_normalized_threshold(nu);
        t.sbar = ggd_step(nu);
    } else if (nu == 1.0) {
        t.tbar = 0.5;
    }
    const double start = (nu < 1.0) ? t.sbar : 0.0;
    const double extent = 64.0;
    const std::size_t cap = 1000000;
    std::size_t nodes =
        static_cast<std::size_t>(std::ceil((extent - start) / grid_step)) + 1;
    nodes = std::min(nodes, cap);
    t.thetabar.resize(nodes);
    t.xbar.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        const double tb = start + static_cast<double>(i) * grid_step;
        t.thetabar[i] = tb;
        t.xbar[i] = (tb == 0.0) ? (nu == 1.0 ? 0.5 : 0.0) : xbar_of_thetabar(nu, tb);
    }
    return t;
}

double ggd_map_estimate(double x, const GGDPrior& prior, double tau,
                        const MapTable& table) {
    if (prior.lambda <= 0.0 || tau <= 0.0)
        throw std::invalid_argument("ggd_map_estimate: lambda and tau must be positive");
    if (x == 0.0) return 0.0;
    const double nu = prior.nu;
    if (nu == 2.0)  // exact linear shrinkage
        return x * tau / (tau + 2.0 * prior.eta * prior.eta * prior.lambda);
    if (table.nu != nu)
        throw std::invalid_argument("ggd_map_estimate: table built for a different nu");

    const double Lambda = 2.0 * prior.c_nu * std::pow(prior.lambda, 0.5 * nu) / tau;
    const double scale = std::pow(Lambda, 1.0 / (2.0 - nu));
    const double xb = std::fabs(x) / scale;
    if (nu <= 1.0 && xb < table.tbar) return 0.0;

    double tb;
    if (xb >= table.xbar.back()) {
        // Beyond the table the inverse map stays well conditioned.
        tb = invert_xbar(nu, xb, table.thetabar.back(), xb, xb);
    } else {
        const auto it = std::upper_bound(table.xbar.begin(), table.xbar.end(), xb);
        const std::size_t j = static_cast<std::size_t>(it - table.xbar.begin());
        if (j == 0) {
            tb = table.thetabar.front();
        } else {
            // Linear interpolation gives the start; a bracketed Newton polish
            // removes the interpolation error, which matters near θ̄ = 0 for
            // ν > 1 where the rescaling amplifies it.
            const double x0 = table.xbar[j - 1], x1 = table.xbar[j];
            const double t0 = table.thetabar[j - 1], t1 = table.thetabar[j];
            const double guess = t0 + (xb - x0) * (t1 - t0) / (x1 - x0);
            tb = invert_xbar(nu, xb, t0, t1, guess);
        }
    }
    return sgn(x) * tb * scale;
}

void MapTable::dump_csv(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f.precision(17);
    f << "nu,step,tbar,sbar\n" << nu << "," << step << "," << tbar << "," << sbar << "\n";
    f << "xbar,thetabar\n";
    for (std::size_t i = 0; i < xbar.size(); ++i) f << xbar[i] << "," << thetabar[i] << "\n";
}

MapTable MapTable::load_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    MapTable t;
    std::string line;
    std::getline(f, line);  // header
    std::getline(f, line);
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf", &t.nu, &t.step, &t.tbar, &t.sbar) != 4)
        throw std::runtime_error(path + ": malformed table header");
    std::getline(f, line);  // column names
    while (std::getline(f, line)) {
        double xb, tb;
        if (std::sscanf(line.c_str(), "%lf,%lf", &xb, &tb) != 2)
            throw std::runtime_error(path + ": malformed table row");
        t.xbar.push_back(xb);
        t.thetabar.push_back(tb);
    }
    if (t.xbar.empty()) throw std::runtime_error(path + ": empty table");
    return t;
}

// --- subband denoisers --------------------------------------------------------

std::vector<std::vector<std::size_t>> band_indices(const BandMap& map) {
    std::vector<std::vector<std::size_t>> idx(map.bands.size());
    for (std::size_t b = 0; b < map.bands.size(); ++b) idx[b].reserve(map.bands[b].count);
    for (std::size_t i = 0; i < map.band_of.size(); ++i)
        idx[static_cast<std::size_t>(map.band_of[i])].push_back(i);
    return idx;
}

bool is_scaling_band(const Band& band) {
    return band.m1 == 0 && band.m2 == 0;
}

DenoiseResult riskshrink_denoise(const Vec& coeffs, const BandMap& bands, double sigma) {
    const double t = universal_threshold(coeffs.size(), sigma);
    DenoiseResult r;
    r.coeffs = coeffs;
    r.per_band_threshold.assign(bands.bands.size(), 0.0);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
        const Band& band = bands.bands[static_cast<std::size_t>(bands.band_of[i])];
        if (is_scaling_band(band)) continue;
        r.coeffs[i] = threshold(coeffs[i], ThresholdKind::Hard, t);
    }
    for (std::size_t b = 0; b < bands.bands.size(); ++b)
        if (!is_scaling_band(bands.bands[b])) r.per_band_threshold[b] = t;
    for (double v : r.coeffs)
        if (v != 0.0) ++r.d;
    return r;
}

DenoiseResult sureshrink_denoise(const Vec& coeffs, const BandMap& bands, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("sureshrink_denoise: sigma must be positive");
    DenoiseResult r;
    r.coeffs = coeffs;
    r.per_band_threshold.assign(bands.bands.size(), 0.0);
    const auto idx = band_indices(bands);
    for (std::size_t b = 0; b < bands.bands.size(); ++b) {
        if (is_scaling_band(bands.bands[b]) || idx[b].empty()) continue;
        const double d = static_cast<double>(idx[b].size());
        Vec u(idx[b].size());
        for (std::size_t k = 0; k < u.size(); ++k) u[k] = coeffs[idx[b][k]] / sigma;
        const double t_univ = std::sqrt(2.0 * std::log(d));
        // Hybrid rule: fall back to the universal threshold when the subband
        // looks too sparse for SURE to be reliable.
        const double s2 = (norm2_sq(u) - d) / d;
        const double sparse_cut = std::pow(std::log2(d), 1.5) / std::sqrt(d);
        double t_sub;
        if (s2 <= sparse_cut) {
            t_sub = t_univ;
        } else {
            t_sub = std::min(sure_threshold(u, t_univ), t_univ);
        }
        r.per_band_threshold[b] = t_sub * sigma;
        if (t_sub > 0.0)
            for (std::size_t k : idx[b])
                r.coeffs[k] = threshold(coeffs[k], ThresholdKind::Soft, t_sub * sigma);
    }
    for (double v : r.coeffs)
        if (v != 0.0) ++r.d;
    return r;
}

// --- hyperparameter estimators -------------------------------------------------

double lambda_moment(const Vec& x, double tau_inv) {
    if (x.empty()) throw std::invalid_argument("lambda_moment: empty input");
    if (tau_inv < 0.0) throw std::invalid_argument("lambda_moment: negative noise variance");
    return std::max(0.0, norm2_sq(x) / static_cast<double>(x.size()) - tau_inv);
}

double lambda_ml_ggd(const Vec& theta_star, double nu) {
    if (theta_star.empty()) throw std::invalid_argument("lambda_ml_ggd: empty input");
    if (nu <= 0.0 || nu > 2.0) throw std::invalid_argument("lambda_ml_ggd: nu must be in (0,2]");
    double s = 0.0;
    for (double v : theta_star) s += std::pow(std::fabs(v), nu);
    if (s <= 0.0) throw std::invalid_argument("lambda_ml_ggd: all-zero coefficients");
    const double d = static_cast<double>(theta_star.size());
    const double eta2 = std::exp(std::lgamma(3.0 / nu) - std::lgamma(1.0 / nu));
    return std::pow(d + 2.0, 2.0 / nu) / (std::pow(nu, 2.0 / nu) * eta2 * std::pow(s, 2.0 / nu));
}

namespace {

// Γ(2/ν)² / (Γ(1/ν) Γ(3/ν)), the population m₁²/m₂ of a GGD; increasing in ν.
double ggd_moment_ratio(double nu) {
    return std::exp(2.0 * std::lgamma(2.0 / nu) - std::lgamma(1.0 / nu) -
                    std::lgamma(3.0 / nu));
}

}  // namespace

double nu_estimate(const Vec& theta_star) {
    std::size_t nonzero = 0;
    double m1 = 0.0, m2 = 0.0;
    for (double v : theta_star) {
        if (v != 0.0) ++nonzero;
        m1 += std::fabs(v);
        m2 += sqr(v);
    }
    if (nonzero < 16) throw std::invalid_argument("nu_estimate: needs at least 16 nonzero entries");
    const double n = static_cast<double>(theta_star.size());
    const double ratio = sqr(m1 / n) / (m2 / n);
    double lo = 0.05, hi = 2.0;
    if (ratio >= ggd_moment_ratio(hi)) return 2.0;
    if (ratio <= ggd_moment_ratio(lo)) return lo;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (ggd_moment_ratio(mid) < ratio) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace mdl
