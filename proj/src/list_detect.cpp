#include "mmtc/list_detect.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mmtc {

void SacConfig::validate() const {
    if (!(lambda_rel > 1.0)) throw ConfigError("list.lambda_rel must be > 1");
}

double slice_metric(cplx z, cplx x, double prior, double zeta2, bool use_prior) {
    const double d2 = std::norm(z - x);
    if (!use_prior) return d2;
    if (prior <= 0.0) return std::numeric_limits<double>::infinity();
    return d2 / zeta2 - std::log(prior);
}

namespace {

bool priors_informative(std::span<const double> priors) {
    if (priors.empty()) return false;
    return std::any_of(priors.begin(), priors.end(), [&](double p) { return p != priors.front(); });
}

}  // namespace

int slice(cplx z, const AugmentedAlphabet& alphabet, std::span<const double> priors, double zeta2) {
    const bool use_prior = priors_informative(priors);
    require(!use_prior || static_cast<int>(priors.size()) == alphabet.size(), "slice: priors must cover A_0");
    int best = 0;
    double best_m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < alphabet.size(); ++i) {
        const double m = slice_metric(z, alphabet.point(i), use_prior ? priors[i] : 1.0, zeta2, use_prior);
        if (m < best_m) {
            best_m = m;
            best = i;
        }
    }
    return best;
}

SacDecision sac_reliable(cplx z, const AugmentedAlphabet& alphabet, const SacConfig& sac) {
    SacDecision out;
    if (std::abs(z) <= sac.zero_radius()) {
        out.reliable = true;
        out.nearest = AugmentedAlphabet::kZero;
    } else {
        double best = std::numeric_limits<double>::infinity();
        for (int a = 0; a < alphabet.active_size(); ++a) {
            const double d = std::abs(z - alphabet.active_points[a]);
            if (d < best) {
                best = d;
                out.nearest = a + 1;
            }
        }
        out.reliable = best <= sac.active_radius();
        if (!out.reliable) out.nearest = slice(z, alphabet);
    }
    if (sac.mode == SacMode::AlwaysReliable) out.reliable = true;
    if (sac.mode == SacMode::AlwaysUnreliable) out.reliable = false;
    return out;
}

std::vector<int> build_candidate_list(cplx z, const AugmentedAlphabet& alphabet, int K,
                                      std::span<const double> priors, double zeta2) {
    if (K < 1 || K > alphabet.size()) throw ConfigError("list size K must be in [1, |A_0|]");
    const bool use_prior = priors_informative(priors);
    std::vector<double> metric(alphabet.size());
    for (int i = 0; i < alphabet.size(); ++i)
        metric[i] = slice_metric(z, alphabet.point(i), use_prior ? priors[i] : 1.0, zeta2, use_prior);
    std::vector<int> idx(alphabet.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return metric[a] < metric[b]; });
    std::vector<int> out;
    for (int i : idx) {
        if (static_cast<int>(out.size()) == K) break;
        if (std::isinf(metric[i])) break;
        out.push_back(i);
    }
    return out;
}

int select_branch(const CVec& y, const CMat& H, const AugmentedAlphabet& alphabet,
                  const std::vector<Eigen::VectorXi>& branches) {
    require(!branches.empty(), "select_branch: no branches");
    int best = 0;
    double best_r = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < branches.size(); ++k) {
        CVec x(branches[k].size());
        for (Eigen::Index n = 0; n < x.size(); ++n) x(n) = alphabet.point(branches[k](n));
        const double r = (y - H * x).squaredNorm();
        if (r < best_r) {
            best_r = r;
            best = static_cast<int>(k);
        }
    }
    return best;
}

}  // namespace mmtc
