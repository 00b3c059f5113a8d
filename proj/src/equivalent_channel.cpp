#include "mmtc/equivalent_channel.hpp"

#include <algorithm>

#include "mmtc/op_count.hpp"

namespace mmtc {

void EquivalentChannelStats::reset(int dim) {
    cross_ = CVec::Zero(dim);
    corr_ = CMat::Zero(dim, dim);
    sx_ = 0.0;
    sw_ = 0.0;
    mu_ = {0.0, 0.0};
    zeta2_ = kZeta2Floor;
}

void EquivalentChannelStats::update(const CVec& w, const CVec& y, cplx x_ref, double lambda) {
    require(w.size() == y.size() && y.size() == cross_.size(), "EquivalentChannelStats: dimension mismatch");
    const auto L = static_cast<std::uint64_t>(y.size());

    cross_ = lambda * cross_ + y * std::conj(x_ref);
    if (lambda != 1.0) corr_.triangularView<Eigen::Upper>() *= lambda;
    corr_.selfadjointView<Eigen::Upper>().rankUpdate(y, 1.0);
    sx_ = lambda * sx_ + std::norm(x_ref);
    sw_ = lambda * sw_ + 1.0;
    ops::charge(L * L + L);

    mu_ = sx_ > 0.0 ? w.dot(cross_) / sx_ : cplx{0.0, 0.0};
    const double power = w.dot(corr_.selfadjointView<Eigen::Upper>() * w).real() / sw_;
    ops::charge(L * L + 2 * L);
    zeta2_ = std::max(power - std::norm(mu_) * sx_ / sw_, kZeta2Floor);
    if (!std::isfinite(zeta2_)) zeta2_ = kZeta2Floor;
}

}  // namespace mmtc
