#include "mmtc/idd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "mmtc/ldpc.hpp"
#include "mmtc/system_model.hpp"

namespace mmtc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Jacobian logarithm: log(exp(a) + exp(b)).
double max_star(double a, double b) {
    if (a == kNegInf) return b;
    if (b == kNegInf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(-std::abs(a - b)));
}

}  // namespace

std::vector<double> symbol_priors(std::span<const double> L_e, double p, const AugmentedAlphabet& alphabet) {
    require(static_cast<int>(L_e.size()) == alphabet.bits_per_symbol, "symbol_priors: one LLR per bit");
    require(p >= 0.0 && p <= 1.0, "symbol_priors: activity probability must be in [0,1]");
    std::vector<double> pr(alphabet.size());
    pr[AugmentedAlphabet::kZero] = 1.0 - p;
    for (int a = 0; a < alphabet.active_size(); ++a) {
        double prob = 1.0;
        for (int z = 0; z < alphabet.bits_per_symbol; ++z) {
            const double l = std::clamp(L_e[z], -kLlrClip, kLlrClip);
            prob /= 1.0 + std::exp(-alphabet.label(a, z) * l);
        }
        pr[a + 1] = p * prob;
    }
    return pr;
}

double likelihood(cplx d_hat, cplx mu, double zeta2, cplx x_bar) {
    require(zeta2 > 0.0, "likelihood: zeta2 must be positive");
    return std::exp(-std::norm(d_hat - mu * x_bar) / zeta2) / (std::numbers::pi * zeta2);
}

ExtrinsicResult extrinsic_llr(cplx d_hat, cplx mu, double zeta2, std::span<const double> priors,
                              std::span<const double> L_e, const AugmentedAlphabet& alphabet) {
    require(static_cast<int>(priors.size()) == alphabet.size(), "extrinsic_llr: priors must cover A_0");
    require(static_cast<int>(L_e.size()) == alphabet.bits_per_symbol, "extrinsic_llr: one a-priori LLR per bit");
    const double z2 = std::max(zeta2, 1e-300);
    ExtrinsicResult out;
    out.llr.assign(alphabet.bits_per_symbol, 0.0);

    // log P(d|x) + log Pr(x) per active point; the 1/(pi zeta2) factor cancels.
    std::vector<double> metric(alphabet.active_size());
    for (int a = 0; a < alphabet.active_size(); ++a) {
        const double pr = priors[a + 1];
        metric[a] = pr > 0.0 ? -std::norm(d_hat - mu * alphabet.active_points[a]) / z2 + std::log(pr) : kNegInf;
    }
    for (int z = 0; z < alphabet.bits_per_symbol; ++z) {
        double num = kNegInf;
        double den = kNegInf;
        for (int a = 0; a < alphabet.active_size(); ++a) {
            if (alphabet.label(a, z) > 0) {
                num = max_star(num, metric[a]);
            } else {
                den = max_star(den, metric[a]);
            }
        }
        if (num == kNegInf || den == kNegInf) {
            out.underflow = true;
            continue;
        }
        const double l = num - den - std::clamp(L_e[z], -kLlrClip, kLlrClip);
        out.llr[z] = std::clamp(l, -kLlrClip, kLlrClip);
    }
    return out;
}

IddResult idd_run(const FrameRealization& frame, FrameDetector& detector, const LdpcCode& code,
                  const AugmentedAlphabet& alphabet, const std::vector<double>& activity, const IddParams& params) {
    require(params.iterations >= 1, "idd_run: need at least one outer iteration");
    const int N = frame.num_devices();
    const int D = frame.data_len;
    const int bps = alphabet.bits_per_symbol;
    const int coded_len = D * bps;
    require(coded_len % code.n() == 0, "idd_run: data section must hold whole codewords");
    const int ncw = coded_len / code.n();
    require(static_cast<int>(activity.size()) == N, "idd_run: one activity probability per device");

    LlrFrame llr(N, D, bps);
    SymbolPriors priors(N, D, alphabet.size());
    SpaDecoder decoder(code);
    IddResult res;
    res.decoded.assign(N, {});
    for (int n = 0; n < N; ++n)
        if (frame.active[n]) res.bits_per_iteration += static_cast<std::uint64_t>(ncw) * code.k();

    for (int it = 1; it <= params.iterations; ++it) {
        llr.iteration = it;
        for (int n = 0; n < N; ++n) {
            const auto Le = llr.decoder(n);
            for (int t = 0; t < D; ++t) {
                const auto pr = symbol_priors(Le.subspan(static_cast<std::size_t>(t) * bps, bps), activity[n], alphabet);
                std::copy(pr.begin(), pr.end(), priors.at(n, t).begin());
            }
        }

        DataSoft soft = detector.detect_data(frame, &priors);

        std::uint64_t errors = 0;
        for (int n = 0; n < N; ++n) {
            auto Lc = llr.detector(n);
            auto Le = llr.decoder(n);
            for (int t = 0; t < D; ++t) {
                const auto off = static_cast<std::size_t>(t) * bps;
                const auto ex = extrinsic_llr(soft.soft(n, t), soft.mu(n, t), soft.zeta2(n, t), priors.at(n, t),
                                              Le.subspan(off, bps), alphabet);
                if (ex.underflow) ++res.llr_underflows;
                std::copy(ex.llr.begin(), ex.llr.end(), Lc.begin() + static_cast<std::ptrdiff_t>(off));
            }

            auto& decoded = res.decoded[n];
            decoded.clear();
            for (int c = 0; c < ncw; ++c) {
                const auto off = static_cast<std::size_t>(c) * code.n();
                const auto out = decoder.decode(std::span<const double>(Lc).subspan(off, code.n()), params.max_spa_iters);
                for (int i = 0; i < code.n(); ++i) Le[off + i] = std::clamp(out.extrinsic[i], -kLlrClip, kLlrClip);
                const auto msg = code.extract_message(out.hard);
                decoded.insert(decoded.end(), msg.begin(), msg.end());
            }
            if (frame.active[n]) {
                for (std::size_t i = 0; i < decoded.size(); ++i) errors += decoded[i] != frame.info_bits[n][i] ? 1 : 0;
            }
        }
        res.bit_errors.push_back(errors);
        res.last = std::move(soft);
    }
    return res;
}

}  // namespace mmtc
