#include "mmtc/alphabet.hpp"

#include <cmath>
#include <string>

namespace mmtc {

Modulation parse_modulation(std::string_view name) {
    if (name == "QPSK" || name == "qpsk") return Modulation::QPSK;
    throw ConfigError("unsupported modulation '" + std::string(name) + "'");
}

AugmentedAlphabet build_alphabet(Modulation mod) {
    AugmentedAlphabet a;
    switch (mod) {
        case Modulation::QPSK: {
            const double s = 1.0 / std::sqrt(2.0);
            // Gray: first bit picks the sign of the real part, second the imaginary part.
            a.bits_per_symbol = 2;
            a.active_points = {{s, s}, {-s, s}, {-s, -s}, {s, -s}};
            a.bit_labels = {{+1, +1}, {-1, +1}, {-1, -1}, {+1, -1}};
            return a;
        }
    }
    throw ConfigError("unsupported modulation");
}

int AugmentedAlphabet::map_bits(std::span<const std::uint8_t> bits) const {
    require(static_cast<int>(bits.size()) == bits_per_symbol, "map_bits: wrong bit count");
    for (int a = 0; a < active_size(); ++a) {
        bool match = true;
        for (int z = 0; z < bits_per_symbol; ++z) {
            const int antipodal = bits[z] ? -1 : +1;
            if (bit_labels[a][z] != antipodal) {
                match = false;
                break;
            }
        }
        if (match) return a;
    }
    throw ContractViolation("map_bits: no point carries this label");
}

void AugmentedAlphabet::unmap(int active_idx, std::span<std::uint8_t> out) const {
    for (int z = 0; z < bits_per_symbol; ++z) out[z] = bit_labels[active_idx][z] < 0 ? 1 : 0;
}

}  // namespace mmtc
