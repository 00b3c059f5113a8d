#include "mmtc/adaptive_detector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmtc/system_model.hpp"

namespace mmtc {

std::string_view to_string(AdaptiveVariant v) {
    switch (v) {
        case AdaptiveVariant::AA_RLS: return "aa_rls";
        case AdaptiveVariant::AA_CL_RLS: return "aa_cl_rls";
        case AdaptiveVariant::AA_RLS_DF: return "aa_rls_df";
        case AdaptiveVariant::AA_CL_DF: return "aa_cl_df";
    }
    return "?";
}

AdaptiveDetector::AdaptiveDetector(AdaptiveVariant variant, const AugmentedAlphabet& alphabet, FilterBank bank,
                                   CMat H_hat, const ListParams& list)
    : variant_(variant), alphabet_(alphabet), trained_(bank), bank_(std::move(bank)), H_(std::move(H_hat)),
      list_(list) {
    if (uses_feedback(variant_) != bank_.feedback())
        throw ConfigError("adaptive detector: bank structure does not match the variant");
    require(H_.rows() == bank_.rx_dim() && H_.cols() == bank_.num_devices(),
            "adaptive detector: channel estimate dimensions do not match the bank");
    list_.sac.validate();
    if (list_.K < 1 || list_.K > alphabet_.size()) throw ConfigError("list size K must be in [1, |A_0|]");
    input_.resize(bank_.filter_len());
    fb_.reserve(bank_.num_devices());
}

AdaptiveDetector::Calibrated AdaptiveDetector::calibrate(int device, cplx z) const {
    const cplx g = bank_.output_gain(device);
    if (std::abs(g) < kMinOutputGain) return {cplx{0.0, 0.0}, 1.0};
    return {z / g, std::max(bank_.output_var(device) / std::norm(g), kZeta2Floor)};
}

int AdaptiveDetector::decide_stage(int stage, cplx z, const CVec& residual, const SymbolPriors* priors, int period,
                                   const Eigen::VectorXi& decided) {
    const auto& order = bank_.order();
    const int d = order[stage];
    auto prior_of = [&](int dev) -> std::span<const double> {
        return priors ? priors->at(dev, period) : std::span<const double>{};
    };

    const Calibrated c = calibrate(d, z);
    const int sliced = slice(c.u, alphabet_, prior_of(d), c.var);
    if (!uses_list(variant_)) return sliced;

    ++stats_.stages;
    // The reliability test looks at the raw filter output.
    if (sac_reliable(z, alphabet_, list_.sac).reliable) return sliced;
    ++stats_.unreliable_stages;

    const auto cands = build_candidate_list(c.u, alphabet_, list_.K, prior_of(d), c.var);
    const auto M = static_cast<std::uint64_t>(bank_.rx_dim());
    auto continue_sic = [&](int j, const CVec& r) {
        const int dj = order[j];
        const Calibrated cj = calibrate(dj, bank_.feedforward(dj).dot(r));
        ops::charge(M);
        return slice(cj.u, alphabet_, prior_of(dj), cj.var);
    };

    ListEvent ev;
    ev.stage = stage;
    ev.device = d;
    ev.candidates = cands;
    int k_opt = 0;
    double best = std::numeric_limits<double>::infinity();
    Eigen::VectorXi branch;
    for (std::size_t k = 0; k < cands.size(); ++k) {
        branch = decided;
        const double res = extend_branch(residual, H_, order, stage, cands[k], alphabet_, continue_sic, branch);
        ev.residuals.push_back(res);
        if (observer_) ev.branches.push_back(branch);
        if (res < best) {
            best = res;
            k_opt = static_cast<int>(k);
        }
    }
    ev.k_opt = k_opt;

    const auto it = std::find(cands.begin(), cands.end(), sliced);
    if (it == cands.end()) {
        ++stats_.slice_not_listed;
    } else if (ev.residuals[k_opt] > ev.residuals[it - cands.begin()]) {
        ++stats_.dominance_violations;
    }
    if (observer_) observer_(ev);
    return cands[k_opt];
}

PeriodOutput AdaptiveDetector::detect_symbol_period(const CVec& y, const SymbolPriors* priors, int period) {
    const int N = bank_.num_devices();
    require(y.size() == bank_.rx_dim(), "detect_symbol_period: received vector length mismatch");
    if (track_equiv_ && static_cast<int>(equiv_.size()) != N) equiv_.assign(N, EquivalentChannelStats(bank_.filter_len()));

    PeriodOutput out;
    out.decisions.setZero(N);
    out.soft.setZero(N);
    out.mu.setOnes(N);
    out.zeta2.setOnes(N);

    const std::vector<int> order = bank_.order();
    const bool list = uses_list(variant_);
    const auto M = static_cast<std::uint64_t>(bank_.rx_dim());
    CVec residual;
    if (list) residual = y;
    Eigen::VectorXi decided = Eigen::VectorXi::Zero(N);
    fb_.clear();

    for (int s = 0; s < N; ++s) {
        const int d = order[s];
        bank_.build_input(y, fb_, s + 1, input_);
        const cplx z = bank_.output(d, input_);
        const int idx = decide_stage(s, z, residual, priors, period, decided);
        const cplx x = alphabet_.point(idx);

        out.decisions(d) = idx;
        out.soft(d) = z;
        if (track_equiv_) {
            equiv_[d].update(bank_.weights(d), input_, x, bank_.hyper().lambda);
            out.mu(d) = equiv_[d].mu();
            out.zeta2(d) = equiv_[d].zeta2();
        } else {
            out.zeta2(d) = std::max(bank_.mse(d), kZeta2Floor);
        }

        // Decision-directed adaptation with the (list-refined) decision.
        bank_.rls_update(d, input_, x);

        fb_.push_back(x);
        decided(d) = idx;
        if (list && idx != AugmentedAlphabet::kZero) {
            residual -= H_.col(d) * x;
            ops::charge(M);
        }
    }
    if (reorder_) bank_.refresh_order();
    return out;
}

std::vector<double> AdaptiveDetector::activity(const std::vector<double>& prior) const {
    require(static_cast<int>(prior.size()) == trained_.num_devices(), "activity: one probability per device");
    std::vector<double> post(prior.size());
    for (std::size_t n = 0; n < prior.size(); ++n) post[n] = trained_.activity_posterior(static_cast<int>(n), prior[n]);
    return post;
}

DataSoft AdaptiveDetector::detect_data(const FrameRealization& frame, const SymbolPriors* priors) {
    if (restart_ || first_run_) {
        bank_ = trained_;
        equiv_.clear();
    }
    first_run_ = false;
    const int N = bank_.num_devices();
    const int D = frame.data_len;
    DataSoft out;
    out.resize(N, D);
    CVec y(bank_.rx_dim());
    for (int t = 0; t < D; ++t) {
        y = frame.Y.col(frame.pilot_len + t);
        const PeriodOutput po = detect_symbol_period(y, priors, t);
        out.decisions.col(t) = po.decisions;
        out.soft.col(t) = po.soft;
        out.mu.col(t) = po.mu;
        out.zeta2.col(t) = po.zeta2;
    }
    return out;
}

}  // namespace mmtc
