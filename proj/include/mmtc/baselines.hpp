#pragma once

#include <span>
#include <vector>

#include "mmtc/adaptive_detector.hpp"
#include "mmtc/alphabet.hpp"
#include "mmtc/detector.hpp"
#include "mmtc/list_detect.hpp"
#include "mmtc/system_model.hpp"

namespace mmtc {

/// Linear MMSE filter W = D H^H (H D H^H + s2 I)^-1 with per-device input
/// variances D. mu and zeta2 describe the biased output z = mu x + noise.
struct LinearDetector {
    CMat W;  // N x M
    RVec variance;
    RVec mu;
    RVec zeta2;
};

LinearDetector make_lmmse(const CMat& H, const RVec& variance, double noise_var);

// Default activity-aware priors over A_0: 1 - p for zero, p / |A| per point.
std::vector<double> activity_priors(double p, const AugmentedAlphabet& alphabet);

/// LMMSE over all devices with activity-scaled variances, or the oracle
/// variant restricted to the true support.
class LinearFrameDetector : public FrameDetector {
public:
    // Activity-aware LMMSE: variances p_n, MAP slicing over A_0.
    LinearFrameDetector(const AugmentedAlphabet& alphabet, const CMat& H_eff, std::vector<double> activity,
                        double noise_var);
    // Oracle: full variance on `support`, slicing over A; others output 0.
    static LinearFrameDetector oracle(const AugmentedAlphabet& alphabet, const CMat& H_eff,
                                      const std::vector<std::uint8_t>& support, double noise_var);

    const LinearDetector& filter() const { return lin_; }
    PeriodOutput detect_symbol_period(const CVec& y, const SymbolPriors* priors = nullptr, int period = 0) const;
    DataSoft detect_data(const FrameRealization& frame, const SymbolPriors* priors) override;

private:
    LinearFrameDetector() = default;

    AugmentedAlphabet alphabet_;
    LinearDetector lin_;
    std::vector<double> activity_;
    std::vector<std::uint8_t> support_;  // empty unless oracle
};

enum class SicFilter { MatchedFilter, Mmse };
enum class SicOrdering { Norm, Sinr };

struct SicParams {
    SicFilter filter = SicFilter::MatchedFilter;
    SicOrdering ordering = SicOrdering::Norm;
    bool list = false;
    ListParams list_params;
};

/// Channel-domain SIC with MAP slicing over A_0 (SA-SIC), optionally with
/// per-stage MMSE filters, the SAC test and the constellation list
/// (AA-MF-SIC). Stage filters depend only on the channel and the ordering,
/// so they are computed once per frame.
class SicDetector : public FrameDetector {
public:
    SicDetector(const AugmentedAlphabet& alphabet, const CMat& H_eff, std::vector<double> activity, double noise_var,
                const SicParams& params);

    const std::vector<int>& order() const { return order_; }
    const ListStats& list_stats() const { return stats_; }
    void set_observer(ListObserver obs) { observer_ = std::move(obs); }

    PeriodOutput detect_symbol_period(const CVec& y, const SymbolPriors* priors = nullptr, int period = 0);
    DataSoft detect_data(const FrameRealization& frame, const SymbolPriors* priors) override;

private:
    int decide(int stage, cplx z, std::span<const double> prior) const;

    AugmentedAlphabet alphabet_;
    CMat H_;
    std::vector<double> activity_;
    SicParams params_;
    std::vector<int> order_;
    std::vector<CVec> g_;  // stage filters
    std::vector<double> mu_;
    std::vector<double> zeta2_;
    std::vector<std::vector<double>> default_priors_;  // per device
    ListObserver observer_;
    ListStats stats_;
};

// Convenience single-vector entry points. Channel estimates are scaled by
// sqrt(symbol_var) internally; decisions are A_0 indices.
struct SymbolDecisions {
    Eigen::VectorXi decisions;
    CVec soft;
};

SymbolDecisions lmmse_detect(const CVec& y, const CMat& H_hat, const SystemConfig& cfg,
                             const AugmentedAlphabet& alphabet);
SymbolDecisions oracle_lmmse_detect(const CVec& y, const CMat& H_hat, const std::vector<std::uint8_t>& support,
                                    const SystemConfig& cfg, const AugmentedAlphabet& alphabet);
SymbolDecisions sa_sic_detect(const CVec& y, const CMat& H_hat, const SystemConfig& cfg,
                              const AugmentedAlphabet& alphabet, SicFilter filter = SicFilter::MatchedFilter,
                              SicOrdering ordering = SicOrdering::Norm);
SymbolDecisions aa_mf_sic_detect(const CVec& y, const CMat& H_hat, const SystemConfig& cfg,
                                 const AugmentedAlphabet& alphabet, const SacConfig& sac, int K,
                                 const ListObserver& observer = {});

}  // namespace mmtc
