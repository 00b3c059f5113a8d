#include "mmtc/rls.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmtc/op_count.hpp"

namespace mmtc {

RlsHyperParams RlsHyperParams::preset(const std::string& name) {
    if (name == "std") return standard();
    if (name == "reg") return regularized();
    throw ConfigError("rls.preset must be \"std\" or \"reg\"");
}

void RlsHyperParams::validate() const {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("lambda must be in (0,1]");
    if (!(gamma >= 0.0)) throw ConfigError("gamma must be >= 0");
    if (!(beta > 0.0)) throw ConfigError("beta must be > 0");
    if (!(delta > 0.0)) throw ConfigError("delta must be > 0");
}

CVec augment_input(const CVec& y, std::span<const cplx> prior_decisions, int stage, int num_devices) {
    require(stage >= 1 && stage <= num_devices, "augment_input: stage out of range");
    require(static_cast<int>(prior_decisions.size()) == stage - 1, "augment_input: need stage-1 decisions");
    if (stage == 1) return y;
    CVec out = CVec::Zero(y.size() + num_devices);
    out.head(y.size()) = y;
    for (int i = 0; i < stage - 1; ++i) out(y.size() + i) = prior_decisions[i];
    return out;
}

CVec kalman_gain(const CMat& P, const CVec& y, double lambda) {
    require(P.rows() == P.cols() && P.rows() == y.size(), "kalman_gain: dimension mismatch");
    CVec u = P * y;
    const cplx denom = lambda + y.dot(u);
    ops::charge(static_cast<std::uint64_t>(y.size() * y.size() + 2 * y.size()));
    if (!is_finite(denom) || denom.real() <= 0.0) throw NumericalError("kalman_gain: bad denominator");
    return u / denom.real();
}

CVec zero_attraction(const CVec& w, double gamma, double beta) {
    CVec adj = CVec::Zero(w.size());
    if (gamma == 0.0) return adj;
    const double band = 1.0 / beta;
    for (Eigen::Index p = 0; p < w.size(); ++p) {
        const double mag = std::abs(w(p));
        if (mag == 0.0 || mag > band) continue;
        const double step = std::min(mag, gamma * beta * (beta - beta * beta * mag));
        adj(p) = -step * (w(p) / mag);
    }
    return adj;
}

FilterBank::FilterBank(int num_devices, int rx_dim, bool feedback, const RlsHyperParams& hp)
    : N_(num_devices), M_(rx_dim), L_(feedback ? rx_dim + num_devices : rx_dim), feedback_(feedback), hp_(hp) {
    hp_.validate();
    require(N_ >= 1 && M_ >= 1, "FilterBank: empty dimensions");
    w_.assign(N_, CVec::Zero(L_));
    P_.assign(N_, CMat::Identity(L_, L_) / hp_.delta);
    Pscale_.assign(N_, 1.0);
    J_.assign(N_, 0.0);
    Jw_.assign(N_, 0.0);
    out_.assign(N_, OutputStats{});
    order_.resize(N_);
    std::iota(order_.begin(), order_.end(), 0);
    u_.resize(L_);
    k_.resize(L_);
}

CMat FilterBank::inv_corr(int n) const {
    return Pscale_[n] * CMat(P_[n].selfadjointView<Eigen::Upper>());
}

double FilterBank::regularized_cost(int n) const {
    double l0 = 0.0;
    for (Eigen::Index p = 0; p < w_[n].size(); ++p) l0 += 1.0 - std::exp(-hp_.beta * std::abs(w_[n](p)));
    return J_[n] + hp_.gamma * l0;
}

double FilterBank::mse(int n) const { return Jw_[n] > 0.0 ? J_[n] / Jw_[n] : 0.0; }

double FilterBank::activity_llr(int n) const {
    const auto& o = out_[n];
    if (o.w <= 0.0 || o.dd <= 0.0 || o.zz <= 0.0) return 0.0;
    const double explained = std::norm(o.cross) / o.dd;
    const double residual = std::max(o.zz - explained, 1e-300);
    return std::min(o.w * explained / residual - 1.0, 700.0);
}

cplx FilterBank::output_gain(int n) const {
    const auto& o = out_[n];
    return o.dd > 0.0 ? o.cross / o.dd : cplx{0.0, 0.0};
}

double FilterBank::output_var(int n) const {
    const auto& o = out_[n];
    if (o.w <= 0.0) return 1.0;
    const cplx g = output_gain(n);
    return std::max((o.zz - std::norm(g) * o.dd) / o.w, 0.0);
}

void FilterBank::build_input(const CVec& y, std::span<const cplx> prior_decisions, int stage, CVec& out) const {
    out.setZero(L_);
    out.head(M_) = y;
    if (!feedback_ || stage <= 1) return;
    const int nfb = std::min<int>(stage - 1, static_cast<int>(prior_decisions.size()));
    for (int i = 0; i < nfb; ++i) out(M_ + i) = prior_decisions[i];
}

cplx FilterBank::output(int n, const CVec& input) const {
    ops::charge(static_cast<std::uint64_t>(L_));
    return w_[n].dot(input);
}

void FilterBank::reset_device(int n) {
    w_[n].setZero();
    P_[n] = CMat::Identity(L_, L_) / hp_.delta;
    Pscale_[n] = 1.0;
    ++resets_;
}

FilterBank::UpdateResult FilterBank::rls_update(int n, const CVec& input, cplx desired) {
    require(n >= 0 && n < N_, "rls_update: device out of range");
    require(input.size() == L_, "rls_update: input length must equal filter length");
    const auto L = static_cast<std::uint64_t>(L_);
    UpdateResult res;
    CVec& w = w_[n];
    CMat& Q = P_[n];
    double& scale = Pscale_[n];

    // Trailing zeros of the input (unfilled or silent feedback stages) do
    // not touch P, so the products run over the nonzero prefix only. The
    // operation count stays that of the full-length recursion.
    Eigen::Index a = L_;
    while (a > 0 && input(a - 1) == cplx{0.0, 0.0}) --a;

    // Kalman gain (Alg. 1 step 2), with u = P y = scale * Q y.
    const auto x = input.head(a);
    u_.head(a).noalias() = Q.topLeftCorner(a, a).selfadjointView<Eigen::Upper>() * x;
    u_.tail(L_ - a).noalias() = Q.topRightCorner(a, L_ - a).adjoint() * x;
    const double quad = x.dot(u_.head(a)).real();
    const double denom = hp_.lambda + scale * quad;
    ops::charge(L * L + L);
    if (!std::isfinite(denom) || denom <= 0.0 || !u_.allFinite()) {
        reset_device(n);
        res.reset = true;
        return res;
    }
    k_ = u_ * (scale / denom);
    ops::charge(L);

    // Filter output and a-priori error (steps 3-4).
    res.output = w.dot(input);
    res.error = desired - res.output;
    ops::charge(L);

    // Coefficient update with zero attraction on the previous weights (step 5).
    const CVec attract = zero_attraction(w, hp_.gamma, hp_.beta);
    w += k_ * std::conj(res.error);
    w += attract;
    ops::charge(L);

    // P <- (P - k y^H P) / lambda. For Hermitian P, y^H P = u^H, so
    // Q <- Q - (scale / denom) q q^H with q = Q y, and scale <- scale / lambda.
    Eigen::Index b = L_;
    while (b > 0 && u_(b - 1) == cplx{0.0, 0.0}) --b;
    Q.topLeftCorner(b, b).selfadjointView<Eigen::Upper>().rankUpdate(u_.head(b), -scale / denom);
    scale /= hp_.lambda;
    if (scale > 1e64) {
        Q.triangularView<Eigen::Upper>() *= scale;
        scale = 1.0;
    }
    ops::charge(L * L);

    if (!w.allFinite() || !Q.diagonal().allFinite()) {
        reset_device(n);
        res.reset = true;
        return res;
    }

    res.post_error = desired - w.dot(input);
    ops::charge(L);
    J_[n] = hp_.lambda * J_[n] + std::norm(res.post_error);
    if (!calibrating_) return res;
    auto& o = out_[n];
    o.w = hp_.lambda * o.w + 1.0;
    o.cross = hp_.lambda * o.cross + res.output * std::conj(desired);
    o.dd = hp_.lambda * o.dd + std::norm(desired);
    o.zz = hp_.lambda * o.zz + std::norm(res.output);
    Jw_[n] = hp_.lambda * Jw_[n] + 1.0;
    return res;
}

int FilterBank::select_detection_order(std::span<const int> remaining) const {
    require(!remaining.empty(), "select_detection_order: empty candidate set");
    int best = -1;
    double best_cost = 0.0;
    for (int j : remaining) {
        const double c = regularized_order_ ? regularized_cost(j) : J_[j];
        if (best < 0 || c < best_cost || (c == best_cost && j < best)) {
            best = j;
            best_cost = c;
        }
    }
    return best;
}

void FilterBank::refresh_order() {
    std::vector<double> key(N_);
    for (int j = 0; j < N_; ++j) key[j] = regularized_order_ ? regularized_cost(j) : J_[j];
    std::iota(order_.begin(), order_.end(), 0);
    // Same result as repeated select_detection_order: ascending cost, lowest index on ties.
    std::stable_sort(order_.begin(), order_.end(), [&](int a, int b) { return key[a] < key[b]; });
}

double FilterBank::activity_posterior(int n, double prior) const {
    if (prior >= 1.0) return 1.0;
    if (prior <= 0.0) return 0.0;
    const double logit = std::log(prior / (1.0 - prior)) + activity_llr(n);
    return std::max(1.0 / (1.0 + std::exp(-logit)), 1e-300);
}

void FilterBank::train_on_pilots(const CMat& pilots, const CMat& rx, std::span<const double> activity_prior) {
    if (pilots.rows() != N_ || rx.rows() != M_ || pilots.cols() != rx.cols())
        throw ConfigError("train_on_pilots: pilot/received dimensions do not match the bank");
    if (!activity_prior.empty() && static_cast<int>(activity_prior.size()) != N_)
        throw ConfigError("train_on_pilots: one activity probability per device");
    const bool gated = feedback_ && !activity_prior.empty();
    CVec input(L_);
    CVec y(M_);
    std::vector<cplx> fb;
    fb.reserve(N_);
    calibrating_ = true;
    for (Eigen::Index t = 0; t < pilots.cols(); ++t) {
        y = rx.col(t);
        fb.clear();
        for (int s = 0; s < N_; ++s) {
            const int d = order_[s];
            build_input(y, fb, s + 1, input);
            rls_update(d, input, pilots(d, t));
            // Feedback slots only mean something once the order is fixed.
            const bool on = !gated || (t >= order_periods_ && activity_posterior(d, activity_prior[d]) >= 0.5);
            fb.push_back(on ? pilots(d, t) : cplx{0.0, 0.0});
        }
        if (order_periods_ == 0 || t < order_periods_) refresh_order();
    }
    calibrating_ = false;
}

}  // namespace mmtc
