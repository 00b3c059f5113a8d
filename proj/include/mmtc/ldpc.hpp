#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mmtc/common.hpp"

namespace mmtc {

class Rng;

/// Binary LDPC code with a systematic encoder.
///
/// Bits are stored as 0/1 bytes. Channel LLRs follow log P(b=0)/P(b=1),
/// so a positive LLR favours logical 0 (antipodal +1).
class LdpcCode {
public:
    struct BuildParams {
        int n = 256;
        int m = 128;
        int col_weight = 6;
        int max_attempts = 200;
    };

    struct Metadata {
        std::uint64_t seed = 0;
        int attempts = 0;
        // Rows whose weight differs from n*col_weight/m. Zero when the row
        // degrees came out exactly regular.
        int irregular_rows = 0;
        int rank = 0;
    };

    // Builds from an explicit parity structure (list of row indices per column).
    LdpcCode(int m, std::vector<std::vector<int>> col_rows);

    static LdpcCode build(const BuildParams& p, std::uint64_t seed);

    int n() const { return n_; }
    int m() const { return m_; }
    int k() const { return n_ - m_; }  // message length
    double rate() const { return static_cast<double>(k()) / n_; }
    int edges() const { return static_cast<int>(edge_var_.size()); }

    const std::vector<std::vector<int>>& col_rows() const { return col_rows_; }
    const std::vector<std::vector<int>>& row_cols() const { return row_cols_; }
    const Metadata& metadata() const { return meta_; }

    std::vector<std::uint8_t> encode(std::span<const std::uint8_t> message) const;
    std::vector<std::uint8_t> extract_message(std::span<const std::uint8_t> codeword) const;
    bool syndrome_ok(std::span<const std::uint8_t> bits) const;

    // Dense k x n generator (one row per message bit) consistent with encode().
    std::vector<std::vector<std::uint8_t>> generator() const;

    // Alist (MacKay) sparse-matrix text format.
    void write_alist(std::ostream& os) const;
    static LdpcCode read_alist(std::istream& is);

    // Positions of the systematic message bits inside a codeword.
    const std::vector<int>& message_positions() const { return info_pos_; }

private:
    friend class SpaDecoder;

    void derive_encoder();

    int n_ = 0;
    int m_ = 0;
    std::vector<std::vector<int>> col_rows_;
    std::vector<std::vector<int>> row_cols_;

    // Edges grouped by check node; edge e connects check edge_check_[e] and var edge_var_[e].
    std::vector<int> check_start_;
    std::vector<int> edge_var_;
    std::vector<std::vector<int>> var_edges_;

    std::vector<int> info_pos_;    // message bits
    std::vector<int> frozen_pos_;  // free columns pinned to 0 (rank deficiency of H)
    std::vector<int> parity_pos_;  // pivot columns
    // For each pivot: bit mask over free columns (info_pos_ then frozen_pos_ order).
    std::vector<std::vector<std::uint64_t>> parity_rows_;
    Metadata meta_;
};

struct SpaResult {
    std::vector<double> posterior;
    std::vector<double> extrinsic;  // posterior - channel input
    std::vector<std::uint8_t> hard;
    bool converged = false;
    int iterations = 0;
};

/// Flooding sum-product decoder (tanh rule).
class SpaDecoder {
public:
    explicit SpaDecoder(const LdpcCode& code) : code_(&code) {}

    SpaResult decode(std::span<const double> channel_llr, int max_iters) const;

private:
    const LdpcCode* code_;
};

}  // namespace mmtc
