#include "mmtc/ldpc.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mmtc/rng.hpp"

namespace mmtc {

namespace {

using Words = std::vector<std::uint64_t>;

bool get_bit(const Words& w, int i) { return (w[i >> 6] >> (i & 63)) & 1U; }
void flip_bit(Words& w, int i) { w[i >> 6] ^= (std::uint64_t{1} << (i & 63)); }
void set_bit(Words& w, int i) { w[i >> 6] |= (std::uint64_t{1} << (i & 63)); }

// Randomised column-by-column placement. Rows are drawn from the least
// loaded ones first; a row is rejected when it already shares a check with
// one of the rows picked for the same column (that would close a 4-cycle).
bool try_place(int n, int m, int wc, int row_cap, Rng& rng, std::vector<std::vector<int>>& cols) {
    std::vector<int> deg(m, 0);
    std::vector<std::uint8_t> pair(static_cast<std::size_t>(m) * m, 0);
    cols.assign(n, {});
    std::vector<int> cand(m);

    for (int c = 0; c < n; ++c) {
        bool placed = false;
        for (int retry = 0; retry < 64 && !placed; ++retry) {
            std::iota(cand.begin(), cand.end(), 0);
            std::shuffle(cand.begin(), cand.end(), rng.engine());
            std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) { return deg[a] < deg[b]; });

            std::vector<int> chosen;
            for (int r : cand) {
                if (deg[r] >= row_cap) continue;
                bool ok = true;
                for (int s : chosen) {
                    if (pair[static_cast<std::size_t>(r) * m + s]) {
                        ok = false;
                        break;
                    }
                }
                if (!ok) continue;
                chosen.push_back(r);
                if (static_cast<int>(chosen.size()) == wc) break;
            }
            if (static_cast<int>(chosen.size()) != wc) continue;

            for (int a : chosen) {
                ++deg[a];
                for (int b : chosen) {
                    if (a != b) pair[static_cast<std::size_t>(a) * m + b] = 1;
                }
            }
            std::sort(chosen.begin(), chosen.end());
            cols[c] = std::move(chosen);
            placed = true;
        }
        if (!placed) return false;
    }
    return true;
}

}  // namespace

LdpcCode::LdpcCode(int m, std::vector<std::vector<int>> col_rows)
    : n_(static_cast<int>(col_rows.size())), m_(m), col_rows_(std::move(col_rows)) {
    if (n_ <= m_ || m_ <= 0) throw ConfigError("LDPC: need n > m > 0");
    row_cols_.assign(m_, {});
    for (int c = 0; c < n_; ++c) {
        for (int r : col_rows_[c]) {
            if (r < 0 || r >= m_) throw ConfigError("LDPC: row index out of range");
            row_cols_[r].push_back(c);
        }
    }
    check_start_.assign(m_ + 1, 0);
    var_edges_.assign(n_, {});
    for (int r = 0; r < m_; ++r) {
        check_start_[r] = static_cast<int>(edge_var_.size());
        for (int c : row_cols_[r]) {
            var_edges_[c].push_back(static_cast<int>(edge_var_.size()));
            edge_var_.push_back(c);
        }
    }
    check_start_[m_] = static_cast<int>(edge_var_.size());
    derive_encoder();
}

LdpcCode LdpcCode::build(const BuildParams& p, std::uint64_t seed) {
    if (p.n <= p.m || p.m <= 0 || p.col_weight <= 0 || p.col_weight > p.m)
        throw ConfigError("LDPC: invalid dimensions");
    const int edges = p.n * p.col_weight;
    const int row_target = (edges + p.m - 1) / p.m;

    Rng rng(mix64(seed ^ 0x1d9cULL));
    std::vector<std::vector<int>> cols;
    for (int attempt = 1; attempt <= p.max_attempts; ++attempt) {
        // Exact regular rows first; allow one extra edge per row once that stalls.
        const int cap = attempt <= p.max_attempts / 2 ? row_target : row_target + 1;
        if (!try_place(p.n, p.m, p.col_weight, cap, rng, cols)) continue;

        LdpcCode code(p.m, std::move(cols));
        code.meta_.seed = seed;
        code.meta_.attempts = attempt;
        const bool divisible = edges % p.m == 0;
        for (const auto& row : code.row_cols_) {
            const int w = static_cast<int>(row.size());
            if (divisible ? w != row_target : (w != row_target && w != row_target - 1)) ++code.meta_.irregular_rows;
        }
        return code;
    }
    throw ConfigError("LDPC construction failed after " + std::to_string(p.max_attempts) +
                      " attempts (seed " + std::to_string(seed) + ")");
}

void LdpcCode::derive_encoder() {
    const int words = (n_ + 63) / 64;
    std::vector<Words> rows(m_, Words(words, 0));
    for (int r = 0; r < m_; ++r)
        for (int c : row_cols_[r]) flip_bit(rows[r], c);

    // Reduced row echelon form, pivoting from the last column backwards so
    // that parity bits gather at the tail of the codeword.
    std::vector<int> pivot_col;
    int rank = 0;
    for (int c = n_ - 1; c >= 0 && rank < m_; --c) {
        int piv = -1;
        for (int r = rank; r < m_; ++r) {
            if (get_bit(rows[r], c)) {
                piv = r;
                break;
            }
        }
        if (piv < 0) continue;
        std::swap(rows[rank], rows[piv]);
        for (int r = 0; r < m_; ++r) {
            if (r != rank && get_bit(rows[r], c)) {
                for (int w = 0; w < words; ++w) rows[r][w] ^= rows[rank][w];
            }
        }
        pivot_col.push_back(c);
        ++rank;
    }
    meta_.rank = rank;

    std::vector<std::uint8_t> is_pivot(n_, 0);
    for (int c : pivot_col) is_pivot[c] = 1;
    std::vector<int> free_cols;
    for (int c = 0; c < n_; ++c)
        if (!is_pivot[c]) free_cols.push_back(c);

    // A rank-deficient H leaves more free columns than message bits; the
    // surplus is pinned to zero.
    info_pos_.assign(free_cols.begin(), free_cols.begin() + k());
    frozen_pos_.assign(free_cols.begin() + k(), free_cols.end());
    parity_pos_ = pivot_col;

    const int nfree = static_cast<int>(free_cols.size());
    const int fwords = (nfree + 63) / 64;
    parity_rows_.assign(rank, Words(fwords, 0));
    for (int r = 0; r < rank; ++r) {
        for (int f = 0; f < nfree; ++f) {
            if (get_bit(rows[r], free_cols[f])) set_bit(parity_rows_[r], f);
        }
    }
}

std::vector<std::uint8_t> LdpcCode::encode(std::span<const std::uint8_t> message) const {
    require(static_cast<int>(message.size()) == k(), "encode: message length must be n - m");
    std::vector<std::uint8_t> cw(n_, 0);
    for (int i = 0; i < k(); ++i) cw[info_pos_[i]] = message[i] & 1U;
    for (std::size_t r = 0; r < parity_pos_.size(); ++r) {
        std::uint8_t acc = 0;
        const auto& mask = parity_rows_[r];
        for (int f = 0; f < k(); ++f)
            if (get_bit(mask, f)) acc ^= cw[info_pos_[f]];
        cw[parity_pos_[r]] = acc;
    }
    return cw;
}

std::vector<std::uint8_t> LdpcCode::extract_message(std::span<const std::uint8_t> codeword) const {
    require(static_cast<int>(codeword.size()) == n_, "extract_message: codeword length mismatch");
    std::vector<std::uint8_t> msg(k());
    for (int i = 0; i < k(); ++i) msg[i] = codeword[info_pos_[i]];
    return msg;
}

bool LdpcCode::syndrome_ok(std::span<const std::uint8_t> bits) const {
    for (const auto& row : row_cols_) {
        std::uint8_t acc = 0;
        for (int c : row) acc ^= bits[c];
        if (acc) return false;
    }
    return true;
}

std::vector<std::vector<std::uint8_t>> LdpcCode::generator() const {
    std::vector<std::vector<std::uint8_t>> g;
    g.reserve(k());
    std::vector<std::uint8_t> msg(k(), 0);
    for (int i = 0; i < k(); ++i) {
        msg[i] = 1;
        g.push_back(encode(msg));
        msg[i] = 0;
    }
    return g;
}

void LdpcCode::write_alist(std::ostream& os) const {
    std::size_t max_cw = 0;
    std::size_t max_rw = 0;
    for (const auto& c : col_rows_) max_cw = std::max(max_cw, c.size());
    for (const auto& r : row_cols_) max_rw = std::max(max_rw, r.size());
    os << n_ << ' ' << m_ << '\n' << max_cw << ' ' << max_rw << '\n';
    for (int c = 0; c < n_; ++c) os << col_rows_[c].size() << (c + 1 < n_ ? ' ' : '\n');
    for (int r = 0; r < m_; ++r) os << row_cols_[r].size() << (r + 1 < m_ ? ' ' : '\n');
    auto emit = [&os](const std::vector<int>& idx, std::size_t width) {
        for (std::size_t i = 0; i < width; ++i) {
            os << (i < idx.size() ? idx[i] + 1 : 0) << (i + 1 < width ? ' ' : '\n');
        }
    };
    for (const auto& c : col_rows_) emit(c, max_cw);
    for (const auto& r : row_cols_) emit(r, max_rw);
}

LdpcCode LdpcCode::read_alist(std::istream& is) {
    int n = 0;
    int m = 0;
    int max_cw = 0;
    int max_rw = 0;
    if (!(is >> n >> m >> max_cw >> max_rw) || n <= 0 || m <= 0)
        throw ConfigError("alist: malformed header");
    std::vector<int> cw(n);
    std::vector<int> rw(m);
    for (auto& v : cw) is >> v;
    for (auto& v : rw) is >> v;
    std::vector<std::vector<int>> cols(n);
    for (int c = 0; c < n; ++c) {
        for (int i = 0; i < max_cw; ++i) {
            int r = 0;
            is >> r;
            if (r > 0) cols[c].push_back(r - 1);
        }
        if (static_cast<int>(cols[c].size()) != cw[c]) throw ConfigError("alist: column weight mismatch");
    }
    // Row lists are redundant; read them to validate the file.
    for (int r = 0; r < m; ++r) {
        int count = 0;
        for (int i = 0; i < max_rw; ++i) {
            int c = 0;
            is >> c;
            if (c > 0) ++count;
        }
        if (count != rw[r]) throw ConfigError("alist: row weight mismatch");
    }
    if (!is) throw ConfigError("alist: truncated file");
    return LdpcCode(m, std::move(cols));
}

SpaResult SpaDecoder::decode(std::span<const double> channel_llr, int max_iters) const {
    const LdpcCode& code = *code_;
    require(static_cast<int>(channel_llr.size()) == code.n_, "spa_decode: LLR length mismatch");
    constexpr double kMsgClip = 40.0;
    constexpr double kTanhClip = 1.0 - 1e-15;

    const int E = code.edges();
    std::vector<double> v2c(E);
    std::vector<double> c2v(E, 0.0);
    std::vector<double> t(E);
    SpaResult res;
    res.posterior.assign(channel_llr.begin(), channel_llr.end());
    res.hard.assign(code.n_, 0);

    for (int e = 0; e < E; ++e) v2c[e] = channel_llr[code.edge_var_[e]];

    for (int it = 1; it <= std::max(1, max_iters); ++it) {
        // Check nodes: c2v = 2 atanh(prod over the other edges of tanh(v2c / 2)).
        for (int r = 0; r < code.m_; ++r) {
            const int b = code.check_start_[r];
            const int end = code.check_start_[r + 1];
            for (int e = b; e < end; ++e) t[e] = std::tanh(0.5 * std::clamp(v2c[e], -kMsgClip, kMsgClip));
            double prefix = 1.0;
            for (int e = b; e < end; ++e) {
                c2v[e] = prefix;
                prefix *= t[e];
            }
            double suffix = 1.0;
            for (int e = end - 1; e >= b; --e) {
                const double prod = std::clamp(c2v[e] * suffix, -kTanhClip, kTanhClip);
                c2v[e] = 2.0 * std::atanh(prod);
                suffix *= t[e];
            }
        }
        // Variable nodes.
        for (int v = 0; v < code.n_; ++v) {
            double sum = channel_llr[v];
            for (int e : code.var_edges_[v]) sum += c2v[e];
            res.posterior[v] = sum;
            res.hard[v] = sum < 0.0 ? 1 : 0;
            for (int e : code.var_edges_[v]) v2c[e] = sum - c2v[e];
        }
        res.iterations = it;
        if (code.syndrome_ok(res.hard)) {
            res.converged = true;
            break;
        }
    }
    res.extrinsic.resize(code.n_);
    for (int v = 0; v < code.n_; ++v) res.extrinsic[v] = res.posterior[v] - channel_llr[v];
    return res;
}

}  // namespace mmtc
