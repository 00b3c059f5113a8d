#pragma once

#include "mmtc/common.hpp"

namespace mmtc {

inline constexpr double kZeta2Floor = 1e-10;

/// Gaussian model d = mu * x + b of a filter output.
///
/// The cross-correlation and input-correlation sums are exponentially
/// weighted; mu and zeta2 are evaluated with the current filter against the
/// whole weighted history and normalised by the weight sums so that they
/// are a gain and a per-sample variance.
class EquivalentChannelStats {
public:
    EquivalentChannelStats() = default;
    explicit EquivalentChannelStats(int dim) { reset(dim); }

    void reset(int dim);

    // Folds in (y, x_ref) with forgetting lambda and re-evaluates mu and
    // zeta2 for filter w.
    void update(const CVec& w, const CVec& y, cplx x_ref, double lambda);

    cplx mu() const { return mu_; }
    double zeta2() const { return zeta2_; }

    // Unnormalised weighted sums, sum lambda^(t-p) y[p] x[p]^* and sum lambda^(t-p) y y^H.
    const CVec& cross() const { return cross_; }
    CMat corr() const { return corr_.selfadjointView<Eigen::Upper>(); }
    double symbol_energy() const { return sx_; }
    double weight_sum() const { return sw_; }

private:
    CVec cross_;
    CMat corr_;  // upper triangle valid
    double sx_ = 0.0;
    double sw_ = 0.0;
    cplx mu_{0.0, 0.0};
    double zeta2_ = kZeta2Floor;
};

}  // namespace mmtc
