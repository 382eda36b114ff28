#include "mdlshrink/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "mdlshrink/fft.hpp"

namespace mdl {
namespace {

// Least-asymmetric Daubechies lowpass taps, derived by spectral factorization
// of the Daubechies half-band polynomial with the minimum-phase-nonlinearity
// root selection, printed at 20 significant digits (QMF residual < 1e-60
// before rounding to double).
const Vec kHaar = {0.70710678118654752440, 0.70710678118654752440};

const Vec kSymmlet12 = {
    -0.0078007083250323804142, 0.0017677118642540077410,
    0.044724901770781384663,   -0.021060292512370847992,
    -0.072637522786376583464,  0.33792942172816583271,
    0.78764114102865099607,    0.49105594192797373304,
    -0.048311742585698054971,  -0.11799011114852002540,
    0.0034907120842221625153,  0.015404109327044824299,
};

const Vec kSymmlet16 = {
    -0.0033824159510050025955,  -0.00054213233180001068935,
    0.031695087811525991431,    0.0076074873249766081919,
    -0.14329423835127266284,    -0.061273359067811077843,
    0.48135965125905339159,     0.77718575169962802862,
    0.36444189483617893676,     -0.051945838107881800736,
    -0.027219029917103486322,   0.049137179673730286787,
    0.0038087520138944894631,   -0.014952258337062199118,
    -0.00030292051472413308126, 0.0018899503327676891843,
};

const Vec kSymmlet20 = {
    -0.00045932942100465204019, 0.000057036083618495006815,
    0.0045931735853117919475,   -0.00080435893201645129606,
    -0.020354939812311110745,   0.0057649120335811496720,
    0.049994972077375156277,    -0.031990056882428113921,
    -0.035536740473819585816,   0.38382676106707632626,
    0.76951003702109793678,     0.47169066693844291000,
    -0.070880535783231572286,   -0.15949427888491060946,
    0.011609893903711318064,    0.045927239231091508585,
    -0.0014653825813046105136,  -0.0086412992770221502610,
    0.000095632670722852730785, 0.00077015980911445982258,
};

Vec mirror_highpass(const Vec& h) {
    const std::size_t L = h.size();
    Vec g(L);
    for (std::size_t k = 0; k < L; ++k) {
        const double sign = (k % 2 == 0) ? 1.0 : -1.0;
        g[k] = sign * h[L - 1 - k];
    }
    return g;
}

void require_power_of_two(std::size_t n, const char* who) {
    if (n == 0 || !is_power_of_two(n))
        throw std::invalid_argument(std::string(who) + ": length must be a power of two");
}

int full_depth(std::size_t n) { return static_cast<int>(ilog2(n)); }

int resolve_depth(std::size_t n, int depth, const char* who) {
    const int J = full_depth(n);
    if (depth < 0) return J;
    if (depth > J) throw std::invalid_argument(std::string(who) + ": depth exceeds log2(n)");
    return depth;
}

// --- 2-D helpers on a row-major n×n grid -----------------------------------

Vec get_row(const Vec& grid, std::size_t n, std::size_t r, std::size_t c0, std::size_t len) {
    Vec v(len);
    for (std::size_t j = 0; j < len; ++j) v[j] = grid[r * n + c0 + j];
    return v;
}

void set_row(Vec& grid, std::size_t n, std::size_t r, std::size_t c0, const Vec& v) {
    for (std::size_t j = 0; j < v.size(); ++j) grid[r * n + c0 + j] = v[j];
}

Vec get_col(const Vec& grid, std::size_t n, std::size_t c, std::size_t r0, std::size_t len) {
    Vec v(len);
    for (std::size_t i = 0; i < len; ++i) v[i] = grid[(r0 + i) * n + c];
    return v;
}

void set_col(Vec& grid, std::size_t n, std::size_t c, std::size_t r0, const Vec& v) {
    for (std::size_t i = 0; i < v.size(); ++i) grid[(r0 + i) * n + c] = v[i];
}

// One separable analysis step on the s×s block at (r0, c0): every row becomes
// [approx | detail], then every column.
void block_step_forward(Vec& grid, std::size_t n, const FilterPair& f, std::size_t r0,
                        std::size_t c0, std::size_t s) {
    Vec a, d, merged(s);
    for (std::size_t r = 0; r < s; ++r) {
        Vec row = get_row(grid, n, r0 + r, c0, s);
        dwt_step(row, f, a, d);
        std::copy(a.begin(), a.end(), merged.begin());
        std::copy(d.begin(), d.end(), merged.begin() + s / 2);
        set_row(grid, n, r0 + r, c0, merged);
    }
    for (std::size_t c = 0; c < s; ++c) {
        Vec col = get_col(grid, n, c0 + c, r0, s);
        dwt_step(col, f, a, d);
        std::copy(a.begin(), a.end(), merged.begin());
        std::copy(d.begin(), d.end(), merged.begin() + s / 2);
        set_col(grid, n, c0 + c, r0, merged);
    }
}

void block_step_inverse(Vec& grid, std::size_t n, const FilterPair& f, std::size_t r0,
                        std::size_t c0, std::size_t s) {
    for (std::size_t c = 0; c < s; ++c) {
        Vec col = get_col(grid, n, c0 + c, r0, s);
        Vec a(col.begin(), col.begin() + s / 2);
        Vec d(col.begin() + s / 2, col.end());
        set_col(grid, n, c0 + c, r0, idwt_step(a, d, f));
    }
    for (std::size_t r = 0; r < s; ++r) {
        Vec row = get_row(grid, n, r0 + r, c0, s);
        Vec a(row.begin(), row.begin() + s / 2);
        Vec d(row.begin() + s / 2, row.end());
        set_row(grid, n, r0 + r, c0, idwt_step(a, d, f));
    }
}

// Full-depth 1-D DWT applied along both axes of the block at (r0, c0).
void block_tensor_forward(Vec& grid, std::size_t n, const FilterPair& f, std::size_t r0,
                          std::size_t c0, std::size_t s) {
    for (std::size_t r = 0; r < s; ++r)
        set_row(grid, n, r0 + r, c0, dwt_forward(get_row(grid, n, r0 + r, c0, s), f));
    for (std::size_t c = 0; c < s; ++c)
        set_col(grid, n, c0 + c, r0, dwt_forward(get_col(grid, n, c0 + c, r0, s), f));
}

void block_tensor_inverse(Vec& grid, std::size_t n, const FilterPair& f, std::size_t r0,
                          std::size_t c0, std::size_t s) {
    for (std::size_t c = 0; c < s; ++c)
        set_col(grid, n, c0 + c, r0, dwt_inverse(get_col(grid, n, c0 + c, r0, s), f));
    for (std::size_t r = 0; r < s; ++r)
        set_row(grid, n, r0 + r, c0, dwt_inverse(get_row(grid, n, r0 + r, c0, s), f));
}

Vec get_block(const Vec& grid, std::size_t n, std::size_t r0, std::size_t c0, std::size_t s) {
    Vec b(s * s);
    for (std::size_t r = 0; r < s; ++r)
        for (std::size_t c = 0; c < s; ++c) b[r * s + c] = grid[(r0 + r) * n + c0 + c];
    return b;
}

void set_block(Vec& grid, std::size_t n, std::size_t r0, std::size_t c0, std::size_t s,
               const Vec& b) {
    for (std::size_t r = 0; r < s; ++r)
        for (std::size_t c = 0; c < s; ++c) grid[(r0 + r) * n + c0 + c] = b[r * s + c];
}

}  // namespace

// --- FilterPair -------------------------------------------------------------

FilterPair FilterPair::by_name(std::string_view name) {
    const Vec* h = nullptr;
    if (name == "haar") h = &kHaar;
    else if (name == "symmlet12") h = &kSymmlet12;
    else if (name == "symmlet16") h = &kSymmlet16;
    else if (name == "symmlet20") h = &kSymmlet20;
    if (h == nullptr)
        throw std::invalid_argument("unknown filter name: " + std::string(name));
    FilterPair f{std::string(name), *h, mirror_highpass(*h)};
    f.validate();
    return f;
}

void FilterPair::validate() const {
    const std::size_t L = h.size();
    if (L < 2 || L % 2 != 0)
        throw std::invalid_argument("filter length must be even and at least 2");
    double norm = 0.0;
    for (double v : h) norm += v * v;
    if (std::fabs(norm - 1.0) > 1e-12)
        throw std::invalid_argument("lowpass filter is not unit norm");
    for (std::size_t m = 1; 2 * m < L; ++m) {
        double acc = 0.0;
        for (std::size_t k = 0; k + 2 * m < L; ++k) acc += h[k] * h[k + 2 * m];
        if (std::fabs(acc) > 1e-10)
            throw std::invalid_argument("lowpass filter violates the even-shift orthogonality");
    }
    const Vec expected_g = mirror_highpass(h);
    if (g.size() != L) throw std::invalid_argument("highpass filter length mismatch");
    for (std::size_t k = 0; k < L; ++k)
        if (std::fabs(g[k] - expected_g[k]) > 1e-14)
            throw std::invalid_argument("highpass filter is not the conjugate mirror of h");
}

// --- 1-D DWT ----------------------------------------------------------------

void dwt_step(const Vec& x, const FilterPair& f, Vec& approx, Vec& detail) {
    const std::size_t n = x.size();
    if (n < 2 || n % 2 != 0) throw std::invalid_argument("dwt_step: length must be even");
    const std::size_t half = n / 2;
    const std::size_t L = f.h.size();
    approx.assign(half, 0.0);
    detail.assign(half, 0.0);
    for (std::size_t k = 0; k < half; ++k) {
        double a = 0.0, d = 0.0;
        for (std::size_t m = 0; m < L; ++m) {
            const double v = x[(2 * k + m) % n];
            a += f.h[m] * v;
            d += f.g[m] * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
}

Vec idwt_step(const Vec& approx, const Vec& detail, const FilterPair& f) {
    const std::size_t half = approx.size();
    if (detail.size() != half) throw std::invalid_argument("idwt_step: half lengths differ");
    const std::size_t n = 2 * half;
    const std::size_t L = f.h.size();
    Vec x(n, 0.0);
    for (std::size_t k = 0; k < half; ++k) {
        for (std::size_t m = 0; m < L; ++m) {
            const std::size_t i = (2 * k + m) % n;
            x[i] += f.h[m] * approx[k] + f.g[m] * detail[k];
        }
    }
    return x;
}

Vec dwt_forward(const Vec& x, const FilterPair& f, int depth) {
    const std::size_t n = x.size();
    require_power_of_two(n, "dwt_forward");
    const int D = resolve_depth(n, depth, "dwt_forward");
    Vec out(n);
    Vec cur = x;
    Vec a, d;
    for (int l = 1; l <= D; ++l) {
        dwt_step(cur, f, a, d);
        std::copy(d.begin(), d.end(), out.begin() + (n >> l));
        cur = a;
    }
    std::copy(cur.begin(), cur.end(), out.begin());
    return out;
}

Vec dwt_inverse(const Vec& c, const FilterPair& f, int depth) {
    const std::size_t n = c.size();
    require_power_of_two(n, "dwt_inverse");
    const int D = resolve_depth(n, depth, "dwt_inverse");
    Vec cur(c.begin(), c.begin() + (n >> D));
    for (int l = D; l >= 1; --l) {
        const Vec d(c.begin() + (n >> l), c.begin() + 2 * (n >> l));
        cur = idwt_step(cur, d, f);
    }
    return cur;
}

// --- 2-D DWT ----------------------------------------------------------------

Vec dwt2_forward(const Vec& img, std::size_t n, const FilterPair& f, int depth) {
    require_power_of_two(n, "dwt2_forward");
    if (img.size() != n * n) throw std::invalid_argument("dwt2_forward: not an n×n image");
    const int D = resolve_depth(n, depth, "dwt2_forward");
    Vec grid = img;
    for (int l = 0; l < D; ++l) block_step_forward(grid, n, f, 0, 0, n >> l);
    return grid;
}

Vec dwt2_inverse(const Vec& c, std::size_t n, const FilterPair& f, int depth) {
    require_power_of_two(n, "dwt2_inverse");
    if (c.size() != n * n) throw std::invalid_argument("dwt2_inverse: not an n×n grid");
    const int D = resolve_depth(n, depth, "dwt2_inverse");
    Vec grid = c;
    for (int l = D - 1; l >= 0; --l) block_step_inverse(grid, n, f, 0, 0, n >> l);
    return grid;
}

// --- packets ----------------------------------------------------------------

std::pair<std::size_t, std::size_t> packet_band(std::size_t n, int level, std::size_t m) {
    require_power_of_two(n, "packet_band");
    if (level < 0 || level > full_depth(n) || m >= (std::size_t{1} << level))
        throw std::invalid_argument("packet_band: node outside the tree");
    std::size_t fi = 0;
    bool rev = false;
    for (int b = level - 1; b >= 0; --b) {
        const bool highpass = (m >> b) & 1u;
        if (!highpass) {
            fi = 2 * fi + (rev ? 1 : 0);
        } else {
            fi = 2 * fi + (rev ? 0 : 1);
            rev = !rev;
        }
    }
    const std::size_t width2 = n >> level;  // band width in half-bin units
    return {fi * width2, (fi + 1) * width2};
}

std::pair<std::size_t, std::size_t> band_bins(std::size_t lo2, std::size_t hi2,
                                              std::size_t n) {
    const std::size_t k_lo = lo2 / 2;
    const std::size_t k_hi = std::min(n / 2, (hi2 + 1) / 2);
    return {k_lo, k_hi};
}

namespace {

using LeafKey = std::pair<int, std::size_t>;

void packet_forward_rec(const Vec& block, int level, std::size_t m,
                        const std::map<LeafKey, const PacketLeaf*>& leaves,
                        const FilterPair& f, Vec& out) {
    auto it = leaves.find({level, m});
    if (it != leaves.end()) {
        std::copy(block.begin(), block.end(), out.begin() + it->second->offset);
        return;
    }
    if (block.size() < 2)
        throw std::invalid_argument("packet_forward: leaves do not cover the tree");
    Vec a, d;
    dwt_step(block, f, a, d);
    packet_forward_rec(a, level + 1, 2 * m, leaves, f, out);
    packet_forward_rec(d, level + 1, 2 * m + 1, leaves, f, out);
}

Vec packet_inverse_rec(const Vec& c, int level, std::size_t m,
                       const std::map<LeafKey, const PacketLeaf*>& leaves,
                       const FilterPair& f, std::size_t block_size) {
    auto it = leaves.find({level, m});
    if (it != leaves.end()) {
        const PacketLeaf& leaf = *it->second;
        return Vec(c.begin() + leaf.offset, c.begin() + leaf.offset + leaf.size);
    }
    if (block_size < 2)
        throw std::invalid_argument("packet_inverse: leaves do not cover the tree");
    Vec a = packet_inverse_rec(c, level + 1, 2 * m, leaves, f, block_size / 2);
    Vec d = packet_inverse_rec(c, level + 1, 2 * m + 1, leaves, f, block_size / 2);
    return idwt_step(a, d, f);
}

std::map<LeafKey, const PacketLeaf*> leaf_lookup(const PacketBasis& basis) {
    std::map<LeafKey, const PacketLeaf*> lookup;
    for (const PacketLeaf& leaf : basis.leaves) lookup[{leaf.level, leaf.m}] = &leaf;
    return lookup;
}

}  // namespace

Vec packet_forward(const Vec& x, const FilterPair& f, const PacketBasis& basis) {
    if (x.size() != basis.n) throw std::invalid_argument("packet_forward: length mismatch");
    require_power_of_two(basis.n, "packet_forward");
    Vec out(basis.n, 0.0);
    packet_forward_rec(x, 0, 0, leaf_lookup(basis), f, out);
    return out;
}

Vec packet_inverse(const Vec& c, const FilterPair& f, const PacketBasis& basis) {
    if (c.size() != basis.n) throw std::invalid_argument("packet_inverse: length mismatch");
    require_power_of_two(basis.n, "packet_inverse");
    return packet_inverse_rec(c, 0, 0, leaf_lookup(basis), f, basis.n);
}

double entropy_cost(const Vec& y) {
    double s = 0.0;
    for (double v : y) {
        const double e = v * v;
        if (e > 0.0) s -= e * std::log(e);
    }
    return s;
}

PacketBasis best_basis_1d(const Vec& x, const FilterPair& f, int max_depth,
                          const BandPredicate& selectable) {
    const std::size_t n = x.size();
    require_power_of_two(n, "best_basis_1d");
    const int D = resolve_depth(n, max_depth, "best_basis_1d");
    const double inf = std::numeric_limits<double>::infinity();

    // Full packet table: rows[l] holds all 2^l blocks side by side.
    std::vector<Vec> rows(D + 1);
    rows[0] = x;
    for (int l = 0; l < D; ++l) {
        rows[l + 1].assign(n, 0.0);
        const std::size_t bs = n >> l;
        Vec a, d;
        for (std::size_t m = 0; m < (std::size_t{1} << l); ++m) {
            const Vec block(rows[l].begin() + m * bs, rows[l].begin() + (m + 1) * bs);
            dwt_step(block, f, a, d);
            std::copy(a.begin(), a.end(), rows[l + 1].begin() + m * bs);
            std::copy(d.begin(), d.end(), rows[l + 1].begin() + m * bs + bs / 2);
        }
    }

    auto leaf_cost = [&](int l, std::size_t m) -> double {
        const auto [lo2, hi2] = packet_band(n, l, m);
        if (!selectable(lo2, hi2)) return inf;
        const std::size_t bs = n >> l;
        const Vec block(rows[l].begin() + m * bs, rows[l].begin() + (m + 1) * bs);
        return entropy_cost(block);
    };

    std::vector<std::vector<double>> best(D + 1);
    std::vector<std::vector<char>> keep(D + 1);
    best[D].resize(std::size_t{1} << D);
    keep[D].assign(std::size_t{1} << D, 1);
    for (std::size_t m = 0; m < best[D].size(); ++m) best[D][m] = leaf_cost(D, m);
    for (int l = D - 1; l >= 0; --l) {
        best[l].resize(std::size_t{1} << l);
        keep[l].assign(std::size_t{1} << l, 0);
        for (std::size_t m = 0; m < best[l].size(); ++m) {
            const double as_leaf = leaf_cost(l, m);
            const double split = best[l + 1][2 * m] + best[l + 1][2 * m + 1];
            if (as_leaf <= split) {
                best[l][m] = as_leaf;
                keep[l][m] = 1;
            } else {
                best[l][m] = split;
            }
        }
    }
    if (!(best[0][0] < inf))
        throw std::runtime_error("best_basis_1d: no admissible disjoint cover");

    PacketBasis basis;
    basis.n = n;
    std::vector<LeafKey> stack{{0, 0}};
    while (!stack.empty()) {
        auto [l, m] = stack.back();
        stack.pop_back();
        if (l == D || keep[l][m]) {
            basis.leaves.push_back({l, m, m * (n >> l), n >> l});
        } else {
            stack.push_back({l + 1, 2 * m});
            stack.push_back({l + 1, 2 * m + 1});
        }
    }
    std::sort(basis.leaves.begin(), basis.leaves.end(),
              [](const PacketLeaf& a, const PacketLeaf& b) { return a.offset < b.offset; });
    return basis;
}

// --- 2-D packets -------------------------------------------------------------

namespace {

using LeafKey2 = std::tuple<int, std::size_t, std::size_t>;

struct QuadView {
    std::size_t r0, c0, s;
};

void packet2_forward_rec(Vec& grid, std::size_t n, const FilterPair& f, int level,
                         std::size_t m1, std::size_t m2,
                         const std::map<LeafKey2, const PacketLeaf2*>& leaves) {
    if (leaves.count({level, m1, m2})) return;  // block stays as the leaf content
    const std::size_t s = n >> level;
    if (s < 2) throw std::invalid_argument("packet2_forward: leaves do not cover the tree");
    block_step_forward(grid, n, f, m1 * s, m2 * s, s);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c)
            packet2_forward_rec(grid, n, f, level + 1, 2 * m1 + r, 2 * m2 + c, leaves);
}

void packet2_inverse_rec(Vec& grid, std::size_t n, const FilterPair& f, int level,
                         std::size_t m1, std::size_t m2,
                         const std::map<LeafKey2, const PacketLeaf2*>& leaves) {
    if (leaves.count({level, m1, m2})) return;
    const std::size_t s = n >> level;
    if (s < 2) throw std::invalid_argument("packet2_inverse: leaves do not cover the tree");
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t c = 0; c < 2; ++c)
            packet2_inverse_rec(grid, n, f, level + 1, 2 * m1 + r, 2 * m2 + c, leaves);
    block_step_inverse(grid, n, f, m1 * s, m2 * s, s);
}

std::map<LeafKey2, const PacketLeaf2*> leaf_lookup2(const PacketBasis2& basis) {
    std::map<LeafKey2, const PacketLeaf2*> lookup;
    for (const PacketLeaf2& leaf : basis.leaves) lookup[{leaf.level, leaf.m1, leaf.m2}] = &leaf;
    return lookup;
}

}  // namespace

Vec packet2_forward(const Vec& img, std::size_t n, const FilterPair& f,
                    const PacketBasis2& basis) {
    require_power_of_two(n, "packet2_forward");
    if (img.size() != n * n || basis.n != n)
        throw std::invalid_argument("packet2_forward: shape mismatch");
    Vec grid = img;
    packet2_forward_rec(grid, n, f, 0, 0, 0, leaf_lookup2(basis));
    return grid;
}

Vec packet2_inverse(const Vec& c, std::size_t n, const FilterPair& f,
                    const PacketBasis2& basis) {
    require_power_of_two(n, "packet2_inverse");
    if (c.size() != n * n || basis.n != n)
        throw std::invalid_argument("packet2_inverse: shape mismatch");
    Vec grid = c;
    packet2_inverse_rec(grid, n, f, 0, 0, 0, leaf_lookup2(basis));
    return grid;
}

PacketBasis2 best_basis_2d(const Vec& img, std::size_t n, const FilterPair& f,
                           int max_depth, const BandPredicate2& selectable) {
    require_power_of_two(n, "best_basis_2d");
    if (img.size() != n * n) throw std::invalid_argument("best_basis_2d: not an n×n image");
    const int D = resolve_depth(n, max_depth, "best_basis_2d");
    const double inf = std::numeric_limits<double>::infinity();

    // grids[l] holds every level-l block in place.
    std::vector<Vec> grids(D + 1);
    grids[0] = img;
    for (int l = 0; l < D; ++l) {
        grids[l + 1] = grids[l];
        const std::size_t s = n >> l;
        for (std::size_t m1 = 0; m1 < (std::size_t{1} << l); ++m1)
            for (std::size_t m2 = 0; m2 < (std::size_t{1} << l); ++m2)
                block_step_forward(grids[l + 1], n, f, m1 * s, m2 * s, s);
    }

    auto leaf_cost = [&](int l, std::size_t m1, std::size_t m2) -> double {
        const auto [f1_lo, f1_hi] = packet_band(n, l, m1);
        const auto [f2_lo, f2_hi] = packet_band(n, l, m2);
        if (!selectable(f1_lo, f1_hi, f2_lo, f2_hi)) return inf;
        const std::size_t s = n >> l;
        return entropy_cost(get_block(grids[l], n, m1 * s, m2 * s, s));
    };

    const auto node_count = [](int l) { return std::size_t{1} << (2 * l); };
    auto idx = [](int l, std::size_t m1, std::size_t m2) { return (m1 << l) + m2; };
    std::vector<std::vector<double>> best(D + 1);
    std::vector<std::vector<char>> keep(D + 1);
    best[D].resize(node_count(D));
    keep[D].assign(node_count(D), 1);
    for (std::size_t m1 = 0; m1 < (std::size_t{1} << D); ++m1)
        for (std::size_t m2 = 0; m2 < (std::size_t{1} << D); ++m2)
            best[D][idx(D, m1, m2)] = leaf_cost(D, m1, m2);
    for (int l = D - 1; l >= 0; --l) {
        best[l].resize(node_count(l));
        keep[l].assign(node_count(l), 0);
        for (std::size_t m1 = 0; m1 < (std::size_t{1} << l); ++m1) {
            for (std::size_t m2 = 0; m2 < (std::size_t{1} << l); ++m2) {
                double split = 0.0;
                for (std::size_t r = 0; r < 2; ++r)
                    for (std::size_t c = 0; c < 2; ++c)
                        split += best[l + 1][idx(l + 1, 2 * m1 + r, 2 * m2 + c)];
                const double as_leaf = leaf_cost(l, m1, m2);
                if (as_leaf <= split) {
                    best[l][idx(l, m1, m2)] = as_leaf;
                    keep[l][idx(l, m1, m2)] = 1;
                } else {
                    best[l][idx(l, m1, m2)] = split;
                }
            }
        }
    }
    if (!(best[0][0] < inf))
        throw std::runtime_error("best_basis_2d: no admissible disjoint cover");

    PacketBasis2 basis;
    basis.n = n;
    std::vector<LeafKey2> stack{{0, 0, 0}};
    while (!stack.empty()) {
        auto [l, m1, m2] = stack.back();
        stack.pop_back();
        if (l == D || keep[l][idx(l, m1, m2)]) {
            basis.leaves.push_back({l, m1, m2});
        } else {
            for (std::size_t r = 0; r < 2; ++r)
                for (std::size_t c = 0; c < 2; ++c)
                    stack.push_back({l + 1, 2 * m1 + r, 2 * m2 + c});
        }
    }
    return basis;
}

// --- mirror basis -------------------------------------------------------------

Vec mirror_forward(const Vec& x, const FilterPair& f) {
    const std::size_t n = x.size();
    require_power_of_two(n, "mirror_forward");
    if (n < 2) throw std::invalid_argument("mirror_forward: length must be at least 2");
    Vec a, d;
    dwt_step(x, f, a, d);
    const Vec wa = dwt_forward(a, f);
    const Vec wd = dwt_forward(d, f);
    Vec out;
    out.reserve(n);
    out.insert(out.end(), wa.begin(), wa.end());
    out.insert(out.end(), wd.begin(), wd.end());
    return out;
}

Vec mirror_inverse(const Vec& c, const FilterPair& f) {
    const std::size_t n = c.size();
    require_power_of_two(n, "mirror_inverse");
    if (n < 2) throw std::invalid_argument("mirror_inverse: length must be at least 2");
    const Vec wa(c.begin(), c.begin() + n / 2);
    const Vec wd(c.begin() + n / 2, c.end());
    return idwt_step(dwt_inverse(wa, f), dwt_inverse(wd, f), f);
}

Vec mirror2_forward(const Vec& img, std::size_t n, const FilterPair& f) {
    require_power_of_two(n, "mirror2_forward");
    if (img.size() != n * n) throw std::invalid_argument("mirror2_forward: not an n×n image");
    if (n < 4) throw std::invalid_argument("mirror2_forward: image side must be at least 4");
    Vec grid = img;
    const std::size_t M = n / 2;
    block_step_forward(grid, n, f, 0, 0, n);
    Vec ll = get_block(grid, n, 0, 0, M);
    set_block(grid, n, 0, 0, M, dwt2_forward(ll, M, f));
    block_tensor_forward(grid, n, f, 0, M, M);
    block_tensor_forward(grid, n, f, M, 0, M);
    block_tensor_forward(grid, n, f, M, M, M);
    return grid;
}

Vec mirror2_inverse(const Vec& c, std::size_t n, const FilterPair& f) {
    require_power_of_two(n, "mirror2_inverse");
    if (c.size() != n * n) throw std::invalid_argument("mirror2_inverse: not an n×n grid");
    if (n < 4) throw std::invalid_argument("mirror2_inverse: image side must be at least 4");
    Vec grid = c;
    const std::size_t M = n / 2;
    Vec ll = get_block(grid, n, 0, 0, M);
    set_block(grid, n, 0, 0, M, dwt2_inverse(ll, M, f));
    block_tensor_inverse(grid, n, f, 0, M, M);
    block_tensor_inverse(grid, n, f, M, 0, M);
    block_tensor_inverse(grid, n, f, M, M, M);
    block_step_inverse(grid, n, f, 0, 0, n);
    return grid;
}

// --- uniform basis handle ------------------------------------------------------

WaveletBasis make_dwt_basis(const FilterPair& f, std::size_t n, bool two_d, int depth) {
    require_power_of_two(n, "make_dwt_basis");
    WaveletBasis b;
    b.filters = f;
    b.kind = BasisKind::Dwt;
    b.two_d = two_d;
    b.n = n;
    b.depth = resolve_depth(n, depth, "make_dwt_basis");
    return b;
}

WaveletBasis make_mirror_basis(const FilterPair& f, std::size_t n, bool two_d) {
    require_power_of_two(n, "make_mirror_basis");
    if (n < (two_d ? std::size_t{4} : std::size_t{2}))
        throw std::invalid_argument("make_mirror_basis: n too small");
    WaveletBasis b;
    b.filters = f;
    b.kind = BasisKind::Mirror;
    b.two_d = two_d;
    b.n = n;
    return b;
}

WaveletBasis make_packet_basis(const FilterPair& f, PacketBasis leaves) {
    require_power_of_two(leaves.n, "make_packet_basis");
    std::size_t covered = 0;
    for (const PacketLeaf& leaf : leaves.leaves) covered += leaf.size;
    if (covered != leaves.n)
        throw std::invalid_argument("make_packet_basis: leaves do not cover the signal");
    WaveletBasis b;
    b.filters = f;
    b.kind = BasisKind::Packet;
    b.two_d = false;
    b.n = leaves.n;
    b.packet = std::move(leaves);
    return b;
}

WaveletBasis make_packet_basis(const FilterPair& f, PacketBasis2 leaves) {
    require_power_of_two(leaves.n, "make_packet_basis");
    std::size_t covered = 0;
    for (const PacketLeaf2& leaf : leaves.leaves) {
        const std::size_t s = leaves.n >> leaf.level;
        covered += s * s;
    }
    if (covered != leaves.n * leaves.n)
        throw std::invalid_argument("make_packet_basis: leaves do not cover the image");
    WaveletBasis b;
    b.filters = f;
    b.kind = BasisKind::Packet;
    b.two_d = true;
    b.n = leaves.n;
    b.packet2 = std::move(leaves);
    return b;
}

Vec basis_forward(const Vec& x, const WaveletBasis& b) {
    switch (b.kind) {
        case BasisKind::Dwt:
            return b.two_d ? dwt2_forward(x, b.n, b.filters, b.depth)
                           : dwt_forward(x, b.filters, b.depth);
        case BasisKind::Mirror:
            return b.two_d ? mirror2_forward(x, b.n, b.filters)
                           : mirror_forward(x, b.filters);
        case BasisKind::Packet:
            return b.two_d ? packet2_forward(x, b.n, b.filters, b.packet2)
                           : packet_forward(x, b.filters, b.packet);
    }
    throw std::logic_error("basis_forward: unknown kind");
}

Vec basis_inverse(const Vec& c, const WaveletBasis& b) {
    switch (b.kind) {
        case BasisKind::Dwt:
            return b.two_d ? dwt2_inverse(c, b.n, b.filters, b.depth)
                           : dwt_inverse(c, b.filters, b.depth);
        case BasisKind::Mirror:
            return b.two_d ? mirror2_inverse(c, b.n, b.filters)
                           : mirror_inverse(c, b.filters);
        case BasisKind::Packet:
            return b.two_d ? packet2_inverse(c, b.n, b.filters, b.packet2)
                           : packet_inverse(c, b.filters, b.packet);
    }
    throw std::logic_error("basis_inverse: unknown kind");
}

// --- band maps ------------------------------------------------------------------

namespace {

Band make_band_1d(std::size_t n, int level, std::size_t m, std::size_t offset,
                  std::size_t count, bool mirror) {
    Band band;
    band.level1 = level;
    band.m1 = m;
    const auto [lo2, hi2] = packet_band(n, level, m);
    band.f1_lo2 = lo2;
    band.f1_hi2 = hi2;
    band.count = count;
    band.offset = offset;
    band.mirror = mirror;
    return band;
}

// Per-axis leaf descriptors of the half-block full DWT used by the mirror
// cascade: (global level, global packet index, offset within the half, size).
struct AxisLeaf {
    int level;
    std::size_t m;
    std::size_t offset;
    std::size_t size;
};

std::vector<AxisLeaf> mirror_axis_leaves(std::size_t n, bool mirror_half) {
    const int J = full_depth(n);
    const std::size_t M = n / 2;
    std::vector<AxisLeaf> out;
    if (!mirror_half) {
        out.push_back({J, 0, 0, 1});
        for (std::size_t c = 1; c <= M / 2; c *= 2) {
            const int level = J - static_cast<int>(ilog2(c));
            out.push_back({level, 1, c, c});
        }
    } else {
        out.push_back({J, std::size_t{1} << (J - 1), 0, 1});
        for (std::size_t c = 1; c <= M / 2; c *= 2) {
            const int level = J - static_cast<int>(ilog2(c));
            out.push_back({level, (std::size_t{1} << (level - 1)) + 1, c, c});
        }
    }
    return out;
}

void fill_rect(BandMap& map, std::size_t n, std::size_t band_index, std::size_t r0,
               std::size_t c0, std::size_t rows, std::size_t cols) {
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c)
            map.band_of[(r0 + r) * n + c0 + c] = static_cast<std::int32_t>(band_index);
}

Band make_band_2d(std::size_t n, const AxisLeaf& ax1, const AxisLeaf& ax2, bool mirror) {
    Band band;
    band.level1 = ax1.level;
    band.m1 = ax1.m;
    band.level2 = ax2.level;
    band.m2 = ax2.m;
    const auto [f1_lo, f1_hi] = packet_band(n, ax1.level, ax1.m);
    const auto [f2_lo, f2_hi] = packet_band(n, ax2.level, ax2.m);
    band.f1_lo2 = f1_lo;
    band.f1_hi2 = f1_hi;
    band.f2_lo2 = f2_lo;
    band.f2_hi2 = f2_hi;
    band.count = ax1.size * ax2.size;
    band.mirror = mirror;
    return band;
}

BandMap bands_dwt_1d(const WaveletBasis& b) {
    BandMap map;
    map.band_of.assign(b.n, 0);
    const int D = b.depth;
    map.bands.push_back(make_band_1d(b.n, D, 0, 0, b.n >> D, false));
    for (int l = D; l >= 1; --l)
        map.bands.push_back(make_band_1d(b.n, l, 1, b.n >> l, b.n >> l, false));
    for (std::size_t bi = 0; bi < map.bands.size(); ++bi)
        for (std::size_t i = 0; i < map.bands[bi].count; ++i)
            map.band_of[map.bands[bi].offset + i] = static_cast<std::int32_t>(bi);
    return map;
}

BandMap bands_mirror_1d(const WaveletBasis& b) {
    BandMap map;
    map.band_of.assign(b.n, 0);
    const std::size_t M = b.n / 2;
    for (const AxisLeaf& leaf : mirror_axis_leaves(b.n, false))
        map.bands.push_back(make_band_1d(b.n, leaf.level, leaf.m, leaf.offset, leaf.size, false));
    for (const AxisLeaf& leaf : mirror_axis_leaves(b.n, true))
        map.bands.push_back(
            make_band_1d(b.n, leaf.level, leaf.m, M + leaf.offset, leaf.size, true));
    for (std::size_t bi = 0; bi < map.bands.size(); ++bi)
        for (std::size_t i = 0; i < map.bands[bi].count; ++i)
            map.band_of[map.bands[bi].offset + i] = static_cast<std::int32_t>(bi);
    return map;
}

BandMap bands_packet_1d(const WaveletBasis& b) {
    BandMap map;
    map.band_of.assign(b.n, 0);
    for (const PacketLeaf& leaf : b.packet.leaves)
        map.bands.push_back(make_band_1d(b.n, leaf.level, leaf.m, leaf.offset, leaf.size, false));
    for (std::size_t bi = 0; bi < map.bands.size(); ++bi)
        for (std::size_t i = 0; i < map.bands[bi].count; ++i)
            map.band_of[map.bands[bi].offset + i] = static_cast<std::int32_t>(bi);
    return map;
}

BandMap bands_dwt_2d(const WaveletBasis& b) {
    BandMap map;
    map.band_of.assign(b.n * b.n, 0);
    const int D = b.depth;
    const std::size_t n = b.n;
    AxisLeaf approx{D, 0, 0, n >> D};
    map.bands.push_back(make_band_2d(n, approx, approx, false));
    fill_rect(map, n, 0, 0, 0, n >> D, n >> D);
    for (int l = D; l >= 1; --l) {
        const std::size_t s = n >> l;
        const AxisLeaf lo{l, 0, 0, s};
        const AxisLeaf hi{l, 1, 0, s};
        map.bands.push_back(make_band_2d(n, lo, hi, false));   // rows low, cols high
        fill_rect(map, n, map.bands.size() - 1, 0, s, s, s);
        map.bands.push_back(make_band_2d(n, hi, lo, false));
        fill_rect(map, n, map.bands.size() - 1, s, 0, s, s);
        map.bands.push_back(make_band_2d(n, hi, hi, false));
        fill_rect(map, n, map.bands.size() - 1, s, s, s, s);
    }
    return map;
}

BandMap bands_mirror_2d(const WaveletBasis& b) {
    BandMap map;
    const std::size_t n = b.n;
    const std::size_t M = n / 2;
    map.band_of.assign(n * n, 0);

    // Low-low quadrant: isotropic 2-D DWT bands; per-axis nodes are the
    // lowpass-branch scaling/wavelet nodes shifted one level down globally.
    const int DM = full_depth(M);
    AxisLeaf approx{DM + 1, 0, 0, 1};
    map.bands.push_back(make_band_2d(n, approx, approx, false));
    fill_rect(map, n, 0, 0, 0, 1, 1);
    for (int l = DM; l >= 1; --l) {
        const std::size_t s = M >> l;
        const AxisLeaf lo{l + 1, 0, 0, s};
        const AxisLeaf hi{l + 1, 1, 0, s};
        map.bands.push_back(make_band_2d(n, lo, hi, false));
        fill_rect(map, n, map.bands.size() - 1, 0, s, s, s);
        map.bands.push_back(make_band_2d(n, hi, lo, false));
        fill_rect(map, n, map.bands.size() - 1, s, 0, s, s);
        map.bands.push_back(make_band_2d(n, hi, hi, false));
        fill_rect(map, n, map.bands.size() - 1, s, s, s, s);
    }

    // Tensor quadrants: products of the per-axis half-block leaf families.
    const auto lo_leaves = mirror_axis_leaves(n, false);
    const auto hi_leaves = mirror_axis_leaves(n, true);
    auto add_quadrant = [&](const std::vector<AxisLeaf>& ax1, std::size_t r0,
                            const std::vector<AxisLeaf>& ax2, std::size_t c0) {
        for (const AxisLeaf& a1 : ax1) {
            for (const AxisLeaf& a2 : ax2) {
                map.bands.push_back(make_band_2d(n, a1, a2, true));
                fill_rect(map, n, map.bands.size() - 1, r0 + a1.offset, c0 + a2.offset,
                          a1.size, a2.size);
            }
        }
    };
    add_quadrant(lo_leaves, 0, hi_leaves, M);
    add_quadrant(hi_leaves, M, lo_leaves, 0);
    add_quadrant(hi_leaves, M, hi_leaves, M);
    return map;
}

BandMap bands_packet_2d(const WaveletBasis& b) {
    BandMap map;
    const std::size_t n = b.n;
    map.band_of.assign(n * n, 0);
    for (const PacketLeaf2& leaf : b.packet2.leaves) {
        const std::size_t s = n >> leaf.level;
        AxisLeaf a1{leaf.level, leaf.m1, 0, s};
        AxisLeaf a2{leaf.level, leaf.m2, 0, s};
        map.bands.push_back(make_band_2d(n, a1, a2, false));
        fill_rect(map, n, map.bands.size() - 1, leaf.m1 * s, leaf.m2 * s, s, s);
    }
    return map;
}

}  // namespace

BandMap basis_bands(const WaveletBasis& b) {
    switch (b.kind) {
        case BasisKind::Dwt:
            return b.two_d ? bands_dwt_2d(b) : bands_dwt_1d(b);
        case BasisKind::Mirror:
            return b.two_d ? bands_mirror_2d(b) : bands_mirror_1d(b);
        case BasisKind::Packet:
            return b.two_d ? bands_packet_2d(b) : bands_packet_1d(b);
    }
    throw std::logic_error("basis_bands: unknown kind");
}

Vec packet_atom(std::size_t n, const FilterPair& f, int level, std::size_t m,
                std::size_t k) {
    require_power_of_two(n, "packet_atom");
    if (level < 0 || level > full_depth(n) || m >= (std::size_t{1} << level))
        throw std::invalid_argument("packet_atom: node outside the tree");
    const std::size_t block = n >> level;
    if (k >= block) throw std::invalid_argument("packet_atom: coefficient outside block");
    Vec cur(block, 0.0);
    cur[k] = 1.0;
    std::size_t mm = m;
    for (int l = level; l >= 1; --l) {
        const Vec zeros(cur.size(), 0.0);
        cur = (mm % 2 == 0) ? idwt_step(cur, zeros, f) : idwt_step(zeros, cur, f);
        mm /= 2;
    }
    return cur;
}

Vec atom_power_spectrum(std::size_t n, const FilterPair& f, int level, std::size_t m) {
    return power_spectrum(packet_atom(n, f, level, m));
}

Vec unit_vector(std::size_t n, std::size_t i) {
    Vec v(n, 0.0);
    v.at(i) = 1.0;
    return v;
}

}  // namespace mdl
