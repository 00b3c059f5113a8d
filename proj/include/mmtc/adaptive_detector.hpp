#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "mmtc/alphabet.hpp"
#include "mmtc/detector.hpp"
#include "mmtc/equivalent_channel.hpp"
#include "mmtc/list_detect.hpp"
#include "mmtc/rls.hpp"

namespace mmtc {

enum class AdaptiveVariant { AA_RLS, AA_CL_RLS, AA_RLS_DF, AA_CL_DF };

constexpr bool uses_feedback(AdaptiveVariant v) {
    return v == AdaptiveVariant::AA_RLS_DF || v == AdaptiveVariant::AA_CL_DF;
}
constexpr bool uses_list(AdaptiveVariant v) {
    return v == AdaptiveVariant::AA_CL_RLS || v == AdaptiveVariant::AA_CL_DF;
}
std::string_view to_string(AdaptiveVariant v);

struct ListParams {
    int K = 4;
    SacConfig sac;
};

struct PeriodOutput {
    Eigen::VectorXi decisions;  // per device, index into A_0
    CVec soft;                  // filter outputs
    CVec mu;
    RVec zeta2;
};

/// Activity-aware adaptive SIC detector over a pilot-trained FilterBank.
///
/// Each symbol period walks the devices in the bank's detection order: the
/// filter output is tested against the SAC, unreliable stages go through
/// the constellation list, and the chosen symbol both drives the
/// decision-directed RLS update and feeds the later stages.
class AdaptiveDetector : public FrameDetector {
public:
    // `bank` must already be trained; it is kept as the restart snapshot.
    AdaptiveDetector(AdaptiveVariant variant, const AugmentedAlphabet& alphabet, FilterBank bank, CMat H_hat,
                     const ListParams& list);

    AdaptiveVariant variant() const { return variant_; }
    FilterBank& bank() { return bank_; }
    const FilterBank& bank() const { return bank_; }
    const ListStats& list_stats() const { return stats_; }

    void set_observer(ListObserver obs) { observer_ = std::move(obs); }
    // Track Eq. (16)-(17) statistics; needed for soft outputs in IDD.
    void set_track_equivalent_channel(bool on) { track_equiv_ = on; }
    // Restart every detect_data call from the pilot-trained snapshot.
    void set_restart_from_pilots(bool on) { restart_ = on; }
    // Re-rank the detection order after every data period. Off keeps the
    // order reached at the end of training.
    void set_reorder_in_data(bool on) { reorder_ = on; }

    // One symbol period. priors/period select the prior table row; pass
    // nullptr for uniform priors.
    PeriodOutput detect_symbol_period(const CVec& y, const SymbolPriors* priors = nullptr, int period = 0);

    DataSoft detect_data(const FrameRealization& frame, const SymbolPriors* priors) override;
    // p_n combined with the pilot-phase evidence of the trained bank.
    std::vector<double> activity(const std::vector<double>& prior) const override;

private:
    // Below this output gain a filter carries no usable signal.
    static constexpr double kMinOutputGain = 1e-3;

    // Soft value rescaled to the constellation, with its noise variance.
    struct Calibrated {
        cplx u;
        double var;
    };
    Calibrated calibrate(int device, cplx z) const;

    int decide_stage(int stage, cplx z, const CVec& residual, const SymbolPriors* priors, int period,
                     const Eigen::VectorXi& decided);

    AdaptiveVariant variant_;
    AugmentedAlphabet alphabet_;
    FilterBank trained_;
    FilterBank bank_;
    CMat H_;
    ListParams list_;
    ListObserver observer_;
    ListStats stats_;
    bool track_equiv_ = false;
    bool restart_ = true;
    bool reorder_ = false;
    bool first_run_ = true;
    std::vector<EquivalentChannelStats> equiv_;
    CVec input_;
    std::vector<cplx> fb_;
};

}  // namespace mmtc
