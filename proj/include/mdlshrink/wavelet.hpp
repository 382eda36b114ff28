#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <utility>

#include "mdlshrink/common.hpp"

namespace mdl {

// Orthonormal conjugate-mirror filter pair. h is the lowpass; the highpass is
// always derived as g[k] = (-1)^k h[L-1-k]. Embedded tables: haar and the
// least-asymmetric Daubechies family with 12/16/20 taps (symmlet12/16/20).
struct FilterPair {
    std::string name;
    Vec h;
    Vec g;

    // Throws std::invalid_argument for an unknown name.
    static FilterPair by_name(std::string_view name);

    // Checks even length, unit norm (1e-12), the orthonormality conditions
    // Σ h[k]h[k+2m] = δ_{m,0} (1e-10), and the mirror relation for g.
    // Throws std::invalid_argument on violation.
    void validate() const;
};

// ---------------------------------------------------------------------------
// Plain periodic (circular) DWT on a power-of-two length. Coefficient layout:
// [approx_D | detail_D | detail_{D-1} | ... | detail_1] where detail_1 is the
// finest band (n/2 entries) and detail_L sits at offset n >> L. depth = -1
// selects full depth log2(n), taking the approximation down to one value.
Vec dwt_forward(const Vec& x, const FilterPair& f, int depth = -1);
Vec dwt_inverse(const Vec& c, const FilterPair& f, int depth = -1);

// One periodic filter-bank step (x must have even length) and its transpose.
void dwt_step(const Vec& x, const FilterPair& f, Vec& approx, Vec& detail);
Vec idwt_step(const Vec& approx, const Vec& detail, const FilterPair& f);

// 2-D separable DWT of a row-major n×n image with the usual nested quadrant
// layout (approximation block in the top-left corner at every level).
Vec dwt2_forward(const Vec& img, std::size_t n, const FilterPair& f, int depth = -1);
Vec dwt2_inverse(const Vec& c, std::size_t n, const FilterPair& f, int depth = -1);

// ---------------------------------------------------------------------------
// Wavelet packets, natural (Paley) indexing: node (level, m) owns coefficient
// block [m·n/2^level, (m+1)·n/2^level); its lowpass child is (level+1, 2m) and
// highpass child (level+1, 2m+1).
//
// Frequency bands are reported in half-bin units: a band [lo2, hi2) ⊂ [0, n]
// stands for the one-sided DFT index interval [lo2/2, hi2/2] ⊂ [0, n/2].
// Half-bin granularity is needed because a size-1 leaf covers half a bin.
// Highpass decimation mirrors the spectrum of the child block; the flip is
// tracked so the bands of any disjoint node cover tile [0, n] exactly.
std::pair<std::size_t, std::size_t> packet_band(std::size_t n, int level, std::size_t m);

// Inclusive DFT-bin range [k_lo, k_hi] generously covering a half-bin band.
std::pair<std::size_t, std::size_t> band_bins(std::size_t lo2, std::size_t hi2,
                                              std::size_t n);

struct PacketLeaf {
    int level = 0;
    std::size_t m = 0;
    std::size_t offset = 0;  // block position in the coefficient vector
    std::size_t size = 0;    // block length n >> level
};

struct PacketBasis {
    std::size_t n = 0;
    std::vector<PacketLeaf> leaves;  // disjoint cover of [0, n), sorted by offset
};

Vec packet_forward(const Vec& x, const FilterPair& f, const PacketBasis& basis);
Vec packet_inverse(const Vec& c, const FilterPair& f, const PacketBasis& basis);

// Additive entropy cost S_e(y) = -Σ y_i² ln y_i² with 0·ln 0 := 0, evaluated
// on raw (unnormalized) coefficients.
double entropy_cost(const Vec& y);

// Admissibility predicate on one-sided frequency bands in half-bin units.
using BandPredicate = std::function<bool(std::size_t lo2, std::size_t hi2)>;

// Minimum-entropy admissible packet basis via bottom-up dynamic programming
// (O(n log n) node visits). A node may be kept as a leaf only if `selectable`
// accepts its band; ties between keeping and splitting go to the leaf.
// Throws std::runtime_error when no admissible disjoint cover exists.
PacketBasis best_basis_1d(const Vec& x, const FilterPair& f, int max_depth,
                          const BandPredicate& selectable);

// 2-D quad-tree packets on n×n images: node (level, m1, m2) owns the square
// block rows [m1·s, (m1+1)·s) × cols [m2·s, (m2+1)·s), s = n >> level, and
// splits into four children by one separable filter-bank step.
struct PacketLeaf2 {
    int level = 0;
    std::size_t m1 = 0;
    std::size_t m2 = 0;
};
struct PacketBasis2 {
    std::size_t n = 0;
    std::vector<PacketLeaf2> leaves;
};

// Predicate on frequency rectangles (axis1 band, axis2 band), half-bin units.
using BandPredicate2 = std::function<bool(std::size_t f1_lo2, std::size_t f1_hi2,
                                          std::size_t f2_lo2, std::size_t f2_hi2)>;

Vec packet2_forward(const Vec& img, std::size_t n, const FilterPair& f,
                    const PacketBasis2& basis);
Vec packet2_inverse(const Vec& c, std::size_t n, const FilterPair& f,
                    const PacketBasis2& basis);
PacketBasis2 best_basis_2d(const Vec& img, std::size_t n, const FilterPair& f,
                           int max_depth, const BandPredicate2& selectable);

// ---------------------------------------------------------------------------
// Mirror wavelet basis: one filter-bank step, then a full-depth DWT on the
// lowpass half (ordinary wavelets, bands accumulating at DC) and a full-depth
// DWT on the highpass half, whose decimation alias mirrors the spectrum so the
// resulting bands accumulate toward the Nyquist frequency. Layout:
// [lowpass half: approx + details coarse→fine | mirror half: Nyquist atom +
//  mirror details widest→narrowest], each half of length n/2.
Vec mirror_forward(const Vec& x, const FilterPair& f);
Vec mirror_inverse(const Vec& c, const FilterPair& f);

// 2-D separable mirror basis: after one separable step, the low-low quadrant
// carries the standard isotropic 2-D DWT while each of the three remaining
// quadrants is expanded by full-depth 1-D DWTs along both axes (anisotropic
// tensor bands, mirror-ordered along any highpass axis).
Vec mirror2_forward(const Vec& img, std::size_t n, const FilterPair& f);
Vec mirror2_inverse(const Vec& c, std::size_t n, const FilterPair& f);

// ---------------------------------------------------------------------------
// Uniform basis handle used by the estimation and restoration layers.
enum class BasisKind { Dwt, Mirror, Packet };

struct WaveletBasis {
    FilterPair filters;
    BasisKind kind = BasisKind::Dwt;
    bool two_d = false;
    std::size_t n = 0;    // signal length, or image side when two_d
    int depth = -1;       // Dwt only; -1 = full depth
    PacketBasis packet;   // Packet, 1-D
    PacketBasis2 packet2; // Packet, 2-D
};

WaveletBasis make_dwt_basis(const FilterPair& f, std::size_t n, bool two_d = false,
                            int depth = -1);
WaveletBasis make_mirror_basis(const FilterPair& f, std::size_t n, bool two_d = false);
WaveletBasis make_packet_basis(const FilterPair& f, PacketBasis leaves);
WaveletBasis make_packet_basis(const FilterPair& f, PacketBasis2 leaves);

Vec basis_forward(const Vec& x, const WaveletBasis& b);
Vec basis_inverse(const Vec& c, const WaveletBasis& b);

// Per-band structure of a basis. All atoms of one band are translates of a
// single packet atom per axis, so they share their magnitude spectrum. 1-D
// bands are contiguous runs [offset, offset+count); 2-D bands are rectangles
// of the coefficient grid, resolved through band_of.
struct Band {
    int level1 = 0;                       // axis-1 packet node of the atoms
    std::size_t m1 = 0;
    int level2 = -1;                      // axis-2 node; level2 < 0 in 1-D
    std::size_t m2 = 0;
    std::size_t f1_lo2 = 0, f1_hi2 = 0;   // frequency rectangle, half-bin units
    std::size_t f2_lo2 = 0, f2_hi2 = 0;
    std::size_t count = 0;
    std::size_t offset = 0;               // 1-D bases only
    bool mirror = false;                  // any axis from the mirror half
};
struct BandMap {
    std::vector<Band> bands;
    std::vector<std::int32_t> band_of;    // coefficient index -> band index
};
BandMap basis_bands(const WaveletBasis& b);

// Synthesized atom of coefficient k of packet node (level, m) on a length-n
// axis (inverse cascade of a unit coefficient).
Vec packet_atom(std::size_t n, const FilterPair& f, int level, std::size_t m,
                std::size_t k = 0);

// |DFT|² (unitary) of the k=0 atom of node (level, m); length n.
Vec atom_power_spectrum(std::size_t n, const FilterPair& f, int level, std::size_t m);

Vec unit_vector(std::size_t n, std::size_t i);

}  // namespace mdl
