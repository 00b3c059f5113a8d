#include "mmtc/system_model.hpp"

#include <cmath>
#include <string>

#include "mmtc/ldpc.hpp"
#include "mmtc/rng.hpp"

namespace mmtc {

void SystemConfig::validate() const {
    if (N < 1) throw ConfigError("system.N must be >= 1");
    if (M < 1) throw ConfigError("system.M must be >= 1");
    if (static_cast<int>(activity_prob.size()) != N)
        throw ConfigError("system.activity_prob must have N entries");
    for (double p : activity_prob) {
        if (!(p > 0.0 && p <= 1.0)) throw ConfigError("system.activity_prob entries must be in (0,1]");
    }
    if (!(noise_var >= 0.0)) throw ConfigError("system.noise_var must be >= 0");
    if (!(symbol_var > 0.0)) throw ConfigError("system.symbol_var must be > 0");
    if (!(csi_error_var >= 0.0)) throw ConfigError("system.csi_error_var must be >= 0");
    if (pilot_len < 0) throw ConfigError("system.pilot_len must be >= 0");
    if (data_len < 1) throw ConfigError("system.data_len must be >= 1");
}

int FrameRealization::num_active() const {
    int n = 0;
    for (auto a : active) n += a ? 1 : 0;
    return n;
}

FrameRealization draw_frame(const SystemConfig& cfg, const AugmentedAlphabet& alphabet, Rng& rng,
                            const LdpcCode* code) {
    cfg.validate();
    const int N = cfg.N;
    const int M = cfg.M;
    const int P = cfg.pilot_len;
    const int D = cfg.data_len;
    const int T = P + D;
    const int bps = alphabet.bits_per_symbol;
    const double amp = std::sqrt(cfg.symbol_var);

    FrameRealization f;
    f.pilot_len = P;
    f.data_len = D;

    f.active.resize(N);
    for (int n = 0; n < N; ++n) f.active[n] = rng.bernoulli(cfg.activity_prob[n]) ? 1 : 0;

    f.H.resize(M, N);
    for (int n = 0; n < N; ++n)
        for (int m = 0; m < M; ++m) f.H(m, n) = rng.complex_normal(1.0);

    f.symbols.setZero(N, T);
    f.pilots.resize(N, P);
    for (int n = 0; n < N; ++n) {
        for (int t = 0; t < P; ++t) {
            const int a = rng.uniform_int(0, alphabet.active_size() - 1);
            f.pilots(n, t) = alphabet.active_points[a];
            if (f.active[n]) f.symbols(n, t) = a + 1;
        }
    }

    const int coded_per_dev = D * bps;
    f.info_bits.assign(N, {});
    f.coded_bits.assign(N, {});
    for (int n = 0; n < N; ++n) {
        auto& coded = f.coded_bits[n];
        coded.reserve(coded_per_dev);
        if (code != nullptr) {
            if (coded_per_dev % code->n() != 0)
                throw ConfigError("data_len * bits_per_symbol must be a multiple of the code length");
            const int ncw = coded_per_dev / code->n();
            for (int c = 0; c < ncw; ++c) {
                std::vector<std::uint8_t> msg(code->k());
                for (auto& b : msg) b = rng.bernoulli(0.5) ? 1 : 0;
                auto cw = code->encode(msg);
                f.info_bits[n].insert(f.info_bits[n].end(), msg.begin(), msg.end());
                coded.insert(coded.end(), cw.begin(), cw.end());
            }
        } else {
            for (int i = 0; i < coded_per_dev; ++i) coded.push_back(rng.bernoulli(0.5) ? 1 : 0);
            f.info_bits[n] = coded;
        }
        if (f.active[n]) {
            for (int t = 0; t < D; ++t) {
                const int a = alphabet.map_bits(std::span<const std::uint8_t>(coded).subspan(t * bps, bps));
                f.symbols(n, P + t) = a + 1;
            }
        }
    }

    f.X.resize(N, T);
    for (int n = 0; n < N; ++n)
        for (int t = 0; t < T; ++t) f.X(n, t) = amp * alphabet.point(f.symbols(n, t));

    f.V.resize(M, T);
    for (int t = 0; t < T; ++t)
        for (int m = 0; m < M; ++m) f.V(m, t) = rng.complex_normal(cfg.noise_var);

    f.Y.noalias() = f.H * f.X;
    f.Y += f.V;

    // CSI error comes last so perfect and imperfect runs share H, X and V.
    f.H_hat = cfg.csi_error_var > 0.0 ? corrupt_csi(f.H, cfg.csi_error_var, rng) : f.H;
    return f;
}

CMat corrupt_csi(const CMat& H, double sigma_e2, Rng& rng) {
    if (!(sigma_e2 >= 0.0)) throw ConfigError("csi_error_var must be >= 0");
    CMat out = H;
    if (sigma_e2 == 0.0) return out;
    for (Eigen::Index c = 0; c < H.cols(); ++c)
        for (Eigen::Index r = 0; r < H.rows(); ++r) out(r, c) += rng.complex_normal(sigma_e2);
    return out;
}

double snr_to_noise_var(double snr_db, int N, double rate, double sigma_x2) {
    if (!std::isfinite(snr_db)) throw ConfigError("snr_db must be finite");
    if (N < 1) throw ConfigError("N must be >= 1");
    if (!(rate > 0.0 && rate <= 1.0)) throw ConfigError("rate must be in (0,1]");
    return N * rate * sigma_x2 / std::pow(10.0, snr_db / 10.0);
}

}  // namespace mmtc
