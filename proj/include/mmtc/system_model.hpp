#pragma once

#include <cstdint>
#include <vector>

#include "mmtc/alphabet.hpp"
#include "mmtc/common.hpp"

namespace mmtc {

class LdpcCode;
class Rng;

struct SystemConfig {
    int N = 64;  // devices
    int M = 32;  // spreading factor / receive dimension
    std::vector<double> activity_prob = std::vector<double>(64, 0.2);
    double noise_var = 1.0;
    double symbol_var = 1.0;
    double csi_error_var = 0.0;
    int pilot_len = 192;
    int data_len = 32;

    int frame_len() const { return pilot_len + data_len; }

    // Throws ConfigError naming the offending field.
    void validate() const;
};

/// One simulated transmission. Columns of X, V and Y are symbol periods;
/// the first pilot_len periods carry pilots, the rest carry data.
struct FrameRealization {
    CMat H;
    CMat H_hat;
    std::vector<std::uint8_t> active;  // per device
    CMat pilots;                       // N x pilot_len assigned pilot symbols (known to the receiver)
    Eigen::MatrixXi symbols;           // N x T indices into A_0
    CMat X;                            // N x T transmitted symbols
    CMat V;                            // M x T noise
    CMat Y;                            // M x T received
    std::vector<std::vector<std::uint8_t>> info_bits;   // per device
    std::vector<std::vector<std::uint8_t>> coded_bits;  // per device, data_len * bits_per_symbol
    int pilot_len = 0;
    int data_len = 0;

    int num_devices() const { return static_cast<int>(X.rows()); }
    int num_active() const;
    auto pilot_rx() const { return Y.leftCols(pilot_len); }
    auto data_rx() const { return Y.rightCols(data_len); }
};

// Draws one frame. With a code, each device's data section carries
// data_len * bits_per_symbol / n codewords; otherwise the data bits are uncoded.
FrameRealization draw_frame(const SystemConfig& cfg, const AugmentedAlphabet& alphabet, Rng& rng,
                            const LdpcCode* code = nullptr);

CMat corrupt_csi(const CMat& H, double sigma_e2, Rng& rng);

// sigma_v^2 = N * rate * sigma_x^2 / 10^(snr_db / 10)
double snr_to_noise_var(double snr_db, int N, double rate, double sigma_x2);

}  // namespace mmtc
