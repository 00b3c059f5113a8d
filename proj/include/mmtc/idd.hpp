#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mmtc/alphabet.hpp"
#include "mmtc/detector.hpp"

namespace mmtc {

class LdpcCode;
struct FrameRealization;

inline constexpr double kLlrClip = 30.0;

// prior(0) = 1 - p; prior(a) = p * prod_z [1 + exp(-a^z L_e^z)]^-1.
std::vector<double> symbol_priors(std::span<const double> L_e, double p, const AugmentedAlphabet& alphabet);

// Complex Gaussian density (1 / (pi zeta2)) exp(-|d - mu x|^2 / zeta2).
double likelihood(cplx d_hat, cplx mu, double zeta2, cplx x_bar);

struct ExtrinsicResult {
    std::vector<double> llr;  // one per bit
    bool underflow = false;   // some bit had no surviving hypothesis
};

// L_c^z = log sum_{A_z^+1} P(d|x) Pr(x) / sum_{A_z^-1} P(d|x) Pr(x) - L_e^z.
// The zero symbol belongs to neither hypothesis set.
ExtrinsicResult extrinsic_llr(cplx d_hat, cplx mu, double zeta2, std::span<const double> priors,
                              std::span<const double> L_e, const AugmentedAlphabet& alphabet);

/// Bit LLRs exchanged between detector and decoder for one frame.
struct LlrFrame {
    int num_devices = 0;
    int periods = 0;
    int bits_per_symbol = 0;
    std::vector<double> from_decoder;   // L_e
    std::vector<double> from_detector;  // L_c
    int iteration = 0;

    LlrFrame() = default;
    LlrFrame(int N, int D, int bps)
        : num_devices(N), periods(D), bits_per_symbol(bps),
          from_decoder(static_cast<std::size_t>(N) * D * bps, 0.0),
          from_detector(static_cast<std::size_t>(N) * D * bps, 0.0) {}

    // Bits of device n in coded order (period-major, bit-minor).
    std::span<double> decoder(int n) { return slice(from_decoder, n); }
    std::span<double> detector(int n) { return slice(from_detector, n); }
    std::span<const double> decoder(int n) const { return slice(from_decoder, n); }

private:
    template <typename V>
    static auto slice(V& v, int n, int len) {
        return std::span(v.data() + static_cast<std::size_t>(n) * len, static_cast<std::size_t>(len));
    }
    std::span<double> slice(std::vector<double>& v, int n) { return slice(v, n, periods * bits_per_symbol); }
    std::span<const double> slice(const std::vector<double>& v, int n) const {
        return slice(v, n, periods * bits_per_symbol);
    }
};

struct IddParams {
    int iterations = 2;
    int max_spa_iters = 20;
};

struct IddResult {
    std::vector<std::vector<std::uint8_t>> decoded;  // per device message bits after the last iteration
    std::vector<std::uint64_t> bit_errors;           // per outer iteration, active devices only
    std::uint64_t bits_per_iteration = 0;
    DataSoft last;                                   // detector output of the last iteration
    std::uint64_t llr_underflows = 0;
};

// Outer detection/decoding loop. Iteration 1 starts from L_e = 0.
IddResult idd_run(const FrameRealization& frame, FrameDetector& detector, const LdpcCode& code,
                  const AugmentedAlphabet& alphabet, const std::vector<double>& activity, const IddParams& params);

}  // namespace mmtc
