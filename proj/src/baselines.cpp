#include "mmtc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mmtc/op_count.hpp"

namespace mmtc {

namespace {

// Noise variance used inside the MMSE solves; keeps noiseless runs solvable.
constexpr double kMinNoise = 1e-12;
constexpr double kMinGain = 1e-12;

std::uint64_t u64(Eigen::Index v) { return static_cast<std::uint64_t>(v); }

}  // namespace

LinearDetector make_lmmse(const CMat& H, const RVec& variance, double noise_var) {
    const Eigen::Index M = H.rows();
    const Eigen::Index N = H.cols();
    require(variance.size() == N, "make_lmmse: one variance per column required");
    require((variance.array() > 0.0).all(), "make_lmmse: variances must be positive");
    const double s2 = std::max(noise_var, kMinNoise);

    LinearDetector out;
    out.variance = variance;
    if (N <= M) {
        // W = (H^H H + s2 D^-1)^-1 H^H
        CMat B = H.adjoint() * H;
        for (Eigen::Index n = 0; n < N; ++n) B(n, n) += s2 / variance(n);
        Eigen::LLT<CMat> llt(B);
        if (llt.info() != Eigen::Success) throw NumericalError("LMMSE: system matrix not positive definite");
        out.W = llt.solve(H.adjoint());
        ops::charge(u64(N * N * M + N * N * N / 6 + N * N * M));
    } else {
        // W = D H^H (H D H^H + s2 I)^-1
        CMat A = H * variance.asDiagonal() * H.adjoint();
        A.diagonal().array() += s2;
        Eigen::LLT<CMat> llt(A);
        if (llt.info() != Eigen::Success) throw NumericalError("LMMSE: system matrix not positive definite");
        const CMat X = llt.solve(H);
        out.W = variance.asDiagonal() * X.adjoint();
        ops::charge(u64(M * M * N + M * M * M / 6 + M * M * N));
    }
    if (!out.W.allFinite()) throw NumericalError("LMMSE: non-finite filter");

    out.mu.resize(N);
    out.zeta2.resize(N);
    for (Eigen::Index n = 0; n < N; ++n) {
        const cplx gain = (out.W.row(n) * H.col(n))(0);
        const double mu = std::clamp(gain.real(), 0.0, 1.0);
        out.mu(n) = mu;
        out.zeta2(n) = std::max(variance(n) * mu * (1.0 - mu), kZeta2Floor);
    }
    ops::charge(u64(N * M));
    return out;
}

std::vector<double> activity_priors(double p, const AugmentedAlphabet& alphabet) {
    std::vector<double> pr(alphabet.size(), p / alphabet.active_size());
    pr[AugmentedAlphabet::kZero] = 1.0 - p;
    return pr;
}

LinearFrameDetector::LinearFrameDetector(const AugmentedAlphabet& alphabet, const CMat& H_eff,
                                         std::vector<double> activity, double noise_var)
    : alphabet_(alphabet), activity_(std::move(activity)) {
    require(static_cast<Eigen::Index>(activity_.size()) == H_eff.cols(), "LMMSE: one activity per device");
    RVec var(H_eff.cols());
    for (Eigen::Index n = 0; n < var.size(); ++n) var(n) = activity_[n];
    lin_ = make_lmmse(H_eff, var, noise_var);
}

LinearFrameDetector LinearFrameDetector::oracle(const AugmentedAlphabet& alphabet, const CMat& H_eff,
                                                const std::vector<std::uint8_t>& support, double noise_var) {
    require(static_cast<Eigen::Index>(support.size()) == H_eff.cols(), "oracle LMMSE: support size mismatch");
    LinearFrameDetector det;
    det.alphabet_ = alphabet;
    det.support_ = support;
    det.activity_.assign(support.size(), 1.0);
    const Eigen::Index N = H_eff.cols();
    det.lin_.W = CMat::Zero(N, H_eff.rows());
    det.lin_.variance = RVec::Zero(N);
    det.lin_.mu = RVec::Zero(N);
    det.lin_.zeta2 = RVec::Constant(N, 1.0);

    std::vector<Eigen::Index> cols;
    for (Eigen::Index n = 0; n < N; ++n)
        if (support[n]) cols.push_back(n);
    if (cols.empty()) return det;

    CMat Hs(H_eff.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) Hs.col(static_cast<Eigen::Index>(i)) = H_eff.col(cols[i]);
    const LinearDetector sub = make_lmmse(Hs, RVec::Ones(Hs.cols()), noise_var);
    for (std::size_t i = 0; i < cols.size(); ++i) {
        const auto si = static_cast<Eigen::Index>(i);
        det.lin_.W.row(cols[i]) = sub.W.row(si);
        det.lin_.variance(cols[i]) = 1.0;
        det.lin_.mu(cols[i]) = sub.mu(si);
        det.lin_.zeta2(cols[i]) = sub.zeta2(si);
    }
    return det;
}

PeriodOutput LinearFrameDetector::detect_symbol_period(const CVec& y, const SymbolPriors* priors, int period) const {
    const Eigen::Index N = lin_.W.rows();
    PeriodOutput out;
    out.soft = lin_.W * y;
    ops::charge(u64(N * lin_.W.cols()));
    out.decisions.setZero(N);
    out.mu = lin_.mu.cast<cplx>();
    out.zeta2 = lin_.zeta2;
    const bool oracle = !support_.empty();
    std::vector<double> pr;
    for (Eigen::Index n = 0; n < N; ++n) {
        const int dn = static_cast<int>(n);
        if (oracle && !support_[n]) {
            out.soft(n) = 0.0;
            continue;
        }
        if (priors) {
            const auto src = priors->at(dn, period);
            pr.assign(src.begin(), src.end());
        } else {
            pr = activity_priors(activity_[n], alphabet_);
        }
        if (oracle) {
            // Known active: restrict to A.
            pr[AugmentedAlphabet::kZero] = 0.0;
            double s = 0.0;
            for (double v : pr) s += v;
            if (s <= 0.0) std::fill(pr.begin() + 1, pr.end(), 1.0);
        }
        const double mu = lin_.mu(n);
        if (mu <= kMinGain) {
            out.decisions(n) = slice(0.0, alphabet_, pr, 1.0);
            continue;
        }
        out.decisions(n) = slice(out.soft(n) / mu, alphabet_, pr, lin_.zeta2(n) / (mu * mu));
    }
    return out;
}

DataSoft LinearFrameDetector::detect_data(const FrameRealization& frame, const SymbolPriors* priors) {
    const int N = static_cast<int>(lin_.W.rows());
    DataSoft out;
    out.resize(N, frame.data_len);
    for (int t = 0; t < frame.data_len; ++t) {
        const PeriodOutput po = detect_symbol_period(frame.Y.col(frame.pilot_len + t), priors, t);
        out.decisions.col(t) = po.decisions;
        out.soft.col(t) = po.soft;
        out.mu.col(t) = po.mu;
        out.zeta2.col(t) = po.zeta2;
    }
    return out;
}

SicDetector::SicDetector(const AugmentedAlphabet& alphabet, const CMat& H_eff, std::vector<double> activity,
                         double noise_var, const SicParams& params)
    : alphabet_(alphabet), H_(H_eff), activity_(std::move(activity)), params_(params) {
    const int N = static_cast<int>(H_.cols());
    const Eigen::Index M = H_.rows();
    require(static_cast<int>(activity_.size()) == N, "SIC: one activity per device");
    if (params_.list) {
        params_.list_params.sac.validate();
        if (params_.list_params.K < 1 || params_.list_params.K > alphabet_.size())
            throw ConfigError("list size K must be in [1, |A_0|]");
    }
    const double s2 = std::max(noise_var, kMinNoise);
    default_priors_.resize(N);
    for (int n = 0; n < N; ++n) default_priors_[n] = activity_priors(activity_[n], alphabet_);

    RVec norms(N);
    for (int n = 0; n < N; ++n) norms(n) = H_.col(n).squaredNorm();
    ops::charge(u64(N * M));

    std::vector<int> remaining(N);
    std::iota(remaining.begin(), remaining.end(), 0);
    if (params_.ordering == SicOrdering::Norm) {
        std::stable_sort(remaining.begin(), remaining.end(), [&](int a, int b) { return norms(a) > norms(b); });
    }

    // Stage filter for `d` against the devices in `rest` (which includes d).
    struct Stage {
        CVec g;
        double mu;
        double zeta2;
    };
    auto stage_filter = [&](int d, const std::vector<int>& rest) -> Stage {
        if (params_.filter == SicFilter::MatchedFilter) {
            const CVec h = H_.col(d);
            const double nh = norms(d);
            if (nh <= 0.0) return {CVec::Zero(M), 0.0, 1.0};
            double interf = 0.0;
            for (int j : rest) {
                if (j == d) continue;
                interf += activity_[j] * std::norm(h.dot(H_.col(j)));
            }
            ops::charge(u64(M * static_cast<Eigen::Index>(rest.size())));
            return {h / nh, 1.0, std::max(interf / (nh * nh) + s2 / nh, kZeta2Floor)};
        }
        CMat Hs(M, static_cast<Eigen::Index>(rest.size()));
        RVec v(static_cast<Eigen::Index>(rest.size()));
        Eigen::Index pos = 0;
        for (std::size_t i = 0; i < rest.size(); ++i) {
            Hs.col(static_cast<Eigen::Index>(i)) = H_.col(rest[i]);
            v(static_cast<Eigen::Index>(i)) = activity_[rest[i]];
            if (rest[i] == d) pos = static_cast<Eigen::Index>(i);
        }
        const LinearDetector lin = make_lmmse(Hs, v, s2);
        return {lin.W.row(pos).adjoint(), lin.mu(pos), lin.zeta2(pos)};
    };

    std::vector<int> rest = remaining;
    for (int s = 0; s < N; ++s) {
        int d = rest.front();
        if (params_.ordering == SicOrdering::Sinr) {
            double best = -1.0;
            for (int j : rest) {
                const Stage st = stage_filter(j, rest);
                const double sinr = st.mu * st.mu / st.zeta2;
                if (sinr > best) {
                    best = sinr;
                    d = j;
                }
            }
        }
        const Stage st = stage_filter(d, rest);
        order_.push_back(d);
        g_.push_back(st.g);
        mu_.push_back(st.mu);
        zeta2_.push_back(st.zeta2);
        rest.erase(std::find(rest.begin(), rest.end(), d));
    }
}

int SicDetector::decide(int stage, cplx z, std::span<const double> prior) const {
    const double mu = mu_[stage];
    if (mu <= kMinGain) return slice(0.0, alphabet_, prior, 1.0);
    return slice(z / mu, alphabet_, prior, zeta2_[stage] / (mu * mu));
}

PeriodOutput SicDetector::detect_symbol_period(const CVec& y, const SymbolPriors* priors, int period) {
    const int N = static_cast<int>(H_.cols());
    const auto M = u64(H_.rows());
    PeriodOutput out;
    out.decisions.setZero(N);
    out.soft.setZero(N);
    out.mu.setZero(N);
    out.zeta2.setOnes(N);

    auto prior_of = [&](int dev) -> std::span<const double> {
        return priors ? priors->at(dev, period) : std::span<const double>(default_priors_[dev]);
    };

    CVec r = y;
    Eigen::VectorXi decided = Eigen::VectorXi::Zero(N);
    for (int s = 0; s < N; ++s) {
        const int d = order_[s];
        const cplx z = g_[s].dot(r);
        ops::charge(M);
        const int sliced = decide(s, z, prior_of(d));
        int idx = sliced;

        if (params_.list) {
            ++stats_.stages;
            const double mu = mu_[s];
            const cplx u = mu > kMinGain ? z / mu : cplx{0.0, 0.0};
            if (!sac_reliable(u, alphabet_, params_.list_params.sac).reliable) {
                ++stats_.unreliable_stages;
                const double var = mu > kMinGain ? zeta2_[s] / (mu * mu) : 1.0;
                const auto cands = build_candidate_list(u, alphabet_, params_.list_params.K, prior_of(d), var);
                auto continue_sic = [&](int j, const CVec& rj) {
                    const cplx zj = g_[j].dot(rj);
                    ops::charge(M);
                    return decide(j, zj, prior_of(order_[j]));
                };
                ListEvent ev;
                ev.stage = s;
                ev.device = d;
                ev.candidates = cands;
                double best = std::numeric_limits<double>::infinity();
                Eigen::VectorXi branch;
                for (std::size_t k = 0; k < cands.size(); ++k) {
                    branch = decided;
                    const double res = extend_branch(r, H_, order_, s, cands[k], alphabet_, continue_sic, branch);
                    ev.residuals.push_back(res);
                    if (observer_) ev.branches.push_back(branch);
                    if (res < best) {
                        best = res;
                        ev.k_opt = static_cast<int>(k);
                    }
                }
                const auto it = std::find(cands.begin(), cands.end(), sliced);
                if (it == cands.end()) {
                    ++stats_.slice_not_listed;
                } else if (ev.residuals[ev.k_opt] > ev.residuals[it - cands.begin()]) {
                    ++stats_.dominance_violations;
                }
                if (observer_) observer_(ev);
                idx = cands[ev.k_opt];
            }
        }

        out.decisions(d) = idx;
        out.soft(d) = z;
        out.mu(d) = mu_[s];
        out.zeta2(d) = zeta2_[s];
        decided(d) = idx;
        if (idx != AugmentedAlphabet::kZero) {
            r -= H_.col(d) * alphabet_.point(idx);
            ops::charge(M);
        }
    }
    return out;
}

DataSoft SicDetector::detect_data(const FrameRealization& frame, const SymbolPriors* priors) {
    const int N = static_cast<int>(H_.cols());
    DataSoft out;
    out.resize(N, frame.data_len);
    for (int t = 0; t < frame.data_len; ++t) {
        const PeriodOutput po = detect_symbol_period(frame.Y.col(frame.pilot_len + t), priors, t);
        out.decisions.col(t) = po.decisions;
        out.soft.col(t) = po.soft;
        out.mu.col(t) = po.mu;
        out.zeta2.col(t) = po.zeta2;
    }
    return out;
}

namespace {

CMat effective_channel(const CMat& H_hat, const SystemConfig& cfg) { return std::sqrt(cfg.symbol_var) * H_hat; }

}  // namespace

SymbolDecisions lmmse_detect(const CVec& y, const CMat& H_hat, const SystemConfig& cfg,
                             const AugmentedAlphabet& alphabet) {
    const LinearFrameDetector det(alphabet, effective_channel(H_hat, cfg), cfg.activity_prob, cfg.noise_var);
    const PeriodOutput po = det.detect_symbol_period(y);
    return {po.decisions, po.soft};
}

SymbolDecisions oracle_lmmse_detect(const CVec& y, const CMat& H_hat, const std::vector<std::uint8_t>& support,
                                    const SystemConfig& cfg, const AugmentedAlphabet& alphabet) {
    const auto det = LinearFrameDetector::oracle(alphabet, effective_channel(H_hat, cfg), support, cfg.noise_var);
    const PeriodOutput po = det.detect_symbol_period(y);
    return {po.decisions, po.soft};
}

SymbolDecisions sa_sic_detect(const CVec& y, const CMat& H_hat, const SystemConfig& cfg,
                              const AugmentedAlphabet& alphabet, SicFilter filter, SicOrdering ordering) {
    SicParams p;
    p.filter = filter;
    p.ordering = ordering;
    SicDetector det(alphabet, effective_channel(H_hat, cfg), cfg.activity_prob, cfg.noise_var, p);
    const PeriodOutput po = det.detect_symbol_period(y);
    return {po.decisions, po.soft};
}

SymbolDecisions aa_mf_sic_detect(const CVec& y, const CMat& H_hat, const SystemConfig& cfg,
                                 const AugmentedAlphabet& alphabet, const SacConfig& sac, int K,
                                 const ListObserver& observer) {
    SicParams p;
    p.filter = SicFilter::Mmse;
    p.list = true;
    p.list_params.K = K;
    p.list_params.sac = sac;
    SicDetector det(alphabet, effective_channel(H_hat, cfg), cfg.activity_prob, cfg.noise_var, p);
    det.set_observer(observer);
    const PeriodOutput po = det.detect_symbol_period(y);
    return {po.decisions, po.soft};
}

}  // namespace mmtc
