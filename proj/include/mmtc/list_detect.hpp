#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mmtc/alphabet.hpp"
#include "mmtc/common.hpp"
#include "mmtc/op_count.hpp"

namespace mmtc {

enum class SacMode { Normal, AlwaysReliable, AlwaysUnreliable };

/// Shadow-area constraint. A soft value is reliable when it falls inside
/// the zero disk (radius 1 - 1/lambda) or inside a disk of radius 1/lambda
/// around an active point; the zero disk is tested first.
struct SacConfig {
    double lambda_rel = 2.0;
    SacMode mode = SacMode::Normal;

    double zero_radius() const { return 1.0 - 1.0 / lambda_rel; }
    double active_radius() const { return 1.0 / lambda_rel; }
    void validate() const;
};

struct SacDecision {
    bool reliable = false;
    int nearest = 0;  // index into A_0
};

// Slicer metric over A_0: |z - x|^2 / zeta2 - log prior(x). With empty or
// uniform priors this is nearest-neighbour slicing. Points with zero prior
// are never chosen.
double slice_metric(cplx z, cplx x, double prior, double zeta2, bool use_prior);

// argmax prior(x) exp(-|z - x|^2 / zeta2) over A_0; ties prefer the zero
// symbol, then the lowest label.
int slice(cplx z, const AugmentedAlphabet& alphabet, std::span<const double> priors = {}, double zeta2 = 1.0);

SacDecision sac_reliable(cplx z, const AugmentedAlphabet& alphabet, const SacConfig& sac);

// K distinct points of A_0, best slicer metric first (plain distance when
// no priors are given). Points with zero prior are dropped, so the list may
// be shorter than K in that case.
std::vector<int> build_candidate_list(cplx z, const AugmentedAlphabet& alphabet, int K,
                                      std::span<const double> priors = {}, double zeta2 = 1.0);

// k_opt = argmin ||y - H b^k||^2, first index on ties. Branches hold A_0
// indices per device.
int select_branch(const CVec& y, const CMat& H, const AugmentedAlphabet& alphabet,
                  const std::vector<Eigen::VectorXi>& branches);

/// One list invocation, reported to observers.
struct ListEvent {
    int stage = 0;   // 0-based position in the detection order
    int device = 0;
    std::vector<int> candidates;
    std::vector<Eigen::VectorXi> branches;  // A_0 indices per device; undetected devices stay 0
    std::vector<double> residuals;          // ||y - H b^k||^2 as tracked incrementally
    int k_opt = 0;
};
using ListObserver = std::function<void(const ListEvent&)>;

struct ListStats {
    std::uint64_t stages = 0;
    std::uint64_t unreliable_stages = 0;
    // Unreliable stages where the chosen branch left a larger residual than
    // the branch seeded with the plain slice decision.
    std::uint64_t dominance_violations = 0;
    // Unreliable stages where the slice decision was not among the candidates.
    std::uint64_t slice_not_listed = 0;

    ListStats& operator+=(const ListStats& o) {
        stages += o.stages;
        unreliable_stages += o.unreliable_stages;
        dominance_violations += o.dominance_violations;
        slice_not_listed += o.slice_not_listed;
        return *this;
    }
};

/// Completes a branch seeded with candidate `cand` at position `stage` of
/// `order` by conventional SIC in the channel domain.
///
/// `residual` must hold y minus the contributions of the already-detected
/// devices order[0..stage-1]; `branch` must already carry their decisions.
/// decide(j, r) returns the A_0 index chosen for stage j given the cancelled
/// vector r. Returns ||y - H b||^2.
template <typename Decide>
double extend_branch(const CVec& residual, const CMat& H, std::span<const int> order, int stage, int cand,
                     const AugmentedAlphabet& alphabet, Decide&& decide, Eigen::VectorXi& branch) {
    const auto M = static_cast<std::uint64_t>(H.rows());
    CVec r = residual;
    const int d0 = order[stage];
    branch(d0) = cand;
    if (cand != AugmentedAlphabet::kZero) {
        r -= H.col(d0) * alphabet.point(cand);
        ops::charge(M);
    }
    for (int j = stage + 1; j < static_cast<int>(order.size()); ++j) {
        const int d = order[j];
        const int idx = decide(j, static_cast<const CVec&>(r));
        branch(d) = idx;
        if (idx != AugmentedAlphabet::kZero) {
            r -= H.col(d) * alphabet.point(idx);
            ops::charge(M);
        }
    }
    ops::charge(M);
    return r.squaredNorm();
}

}  // namespace mmtc
