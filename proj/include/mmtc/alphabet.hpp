#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mmtc/common.hpp"

namespace mmtc {

enum class Modulation { QPSK };

Modulation parse_modulation(std::string_view name);

/// Constellation A plus the inactivity symbol 0.
///
/// Symbols of the augmented set are addressed by an index into A_0:
/// index 0 is the zero symbol, index a+1 is active point a. Bit labels use
/// the antipodal convention: +1 stands for logical 0, -1 for logical 1.
struct AugmentedAlphabet {
    std::vector<cplx> active_points;
    std::vector<std::vector<int>> bit_labels;  // per active point, bits_per_symbol entries in {+1,-1}
    int bits_per_symbol = 0;

    static constexpr int kZero = 0;

    int active_size() const { return static_cast<int>(active_points.size()); }
    int size() const { return active_size() + 1; }
    cplx point(int idx0) const { return idx0 == kZero ? cplx{0.0, 0.0} : active_points[idx0 - 1]; }
    bool is_zero(int idx0) const { return idx0 == kZero; }

    // Antipodal label value (+1/-1) of bit z of active point a.
    int label(int active_idx, int z) const { return bit_labels[active_idx][z]; }

    // Active point carrying the given logical bits (0/1), bits_per_symbol of them.
    int map_bits(std::span<const std::uint8_t> bits) const;
    // Logical bits (0/1) of active point a.
    void unmap(int active_idx, std::span<std::uint8_t> out) const;
};

AugmentedAlphabet build_alphabet(Modulation mod);

}  // namespace mmtc
