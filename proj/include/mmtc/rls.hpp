#pragma once

#include <span>
#include <string>
#include <vector>

#include "mmtc/common.hpp"

namespace mmtc {

struct RlsHyperParams {
    double lambda = 0.92;  // forgetting factor, (0,1]
    double gamma = 1e-4;   // l0 weight
    double beta = 10.0;    // zero-attraction range (band |w| <= 1/beta)
    double delta = 0.7;    // P starts at I / delta

    // Plain RLS, no sparsity penalty.
    static RlsHyperParams standard() { return {0.998, 0.0, 10.0, 0.5}; }
    // l0-regularised RLS.
    static RlsHyperParams regularized() { return {0.92, 1e-4, 10.0, 0.7}; }
    static RlsHyperParams preset(const std::string& name);

    void validate() const;
};

// Eq. (3) input: stage 1 gets y unchanged; later stages get y followed by
// the decisions of the earlier stages, zero padded to M + num_devices.
CVec augment_input(const CVec& y, std::span<const cplx> prior_decisions, int stage, int num_devices);

// k = P y / (lambda + y^H P y)
CVec kalman_gain(const CMat& P, const CVec& y, double lambda);

// Additive l0 zero-attraction step: -gamma*beta*sgn(w)*max(0, beta - beta^2 |w|),
// capped so a coefficient is never pushed past zero.
CVec zero_attraction(const CVec& w, double gamma, double beta);

/// Per-device l0-RLS filters for successive detection.
///
/// Every filter is stored at a fixed length: M for the plain structure, or
/// M + N with a feedback section for decision feedback. Inverse correlation
/// matrices are kept Hermitian by updating only their upper triangle.
class FilterBank {
public:
    struct UpdateResult {
        cplx output;       // w^H y before the update
        cplx error;        // a-priori error, desired - output
        cplx post_error;   // desired - w_new^H y
        bool reset = false;
    };

    FilterBank(int num_devices, int rx_dim, bool feedback, const RlsHyperParams& hp);

    int num_devices() const { return N_; }
    int rx_dim() const { return M_; }
    int filter_len() const { return L_; }
    bool feedback() const { return feedback_; }
    const RlsHyperParams& hyper() const { return hp_; }

    const CVec& weights(int n) const { return w_[n]; }
    auto feedforward(int n) const { return w_[n].head(M_); }
    CMat inv_corr(int n) const;
    double cost(int n) const { return J_[n]; }
    // Cost with the smooth l0 surrogate added; used for ordering.
    double regularized_cost(int n) const;
    // Exponentially weighted mean square error, J normalised by its weight sum.
    double mse(int n) const;
    // Calibration of the a-priori output d~ = w^H y against the pilots seen
    // in training, exponentially weighted: d~ ~ gain * d + noise of output_var.
    cplx output_gain(int n) const;
    double output_var(int n) const;
    // Log-likelihood ratio of "device n transmitted its pilots" against
    // "silent", from the training outputs: a one-parameter complex Gaussian
    // fit, so it is w*rho^2/(1-rho^2) - 1 with rho the output/pilot correlation.
    double activity_llr(int n) const;
    const std::vector<int>& order() const { return order_; }
    int resets() const { return resets_; }

    void set_use_regularized_order(bool on) { regularized_order_ = on; }
    // Training refreshes the order only over the first `periods` pilot
    // periods; 0 refreshes after every period.
    void set_order_periods(int periods) { order_periods_ = periods; }

    // Fills `out` (length filter_len) with the Eq. (3) input for a stage.
    void build_input(const CVec& y, std::span<const cplx> prior_decisions, int stage, CVec& out) const;

    cplx output(int n, const CVec& input) const;

    // One l0-RLS step for device n against `desired`.
    UpdateResult rls_update(int n, const CVec& input, cplx desired);

    int select_detection_order(std::span<const int> remaining) const;
    void refresh_order();

    // Runs the training recursion over pilot periods.
    // pilots: N x P assigned symbols, rx: M x P received samples.
    //
    // With `activity_prior` (one p_n per device), an earlier stage's pilot is
    // fed back only while that device's running activity posterior is at
    // least 1/2, so the feedback section sees what detection will later feed
    // it (zero for silent devices). Gated feedback starts once the order
    // stops being refreshed. Without a prior every assigned pilot is fed back.
    void train_on_pilots(const CMat& pilots, const CMat& rx, std::span<const double> activity_prior = {});

    // p_n combined with activity_llr(n).
    double activity_posterior(int n, double prior) const;

    // Test hook: overwrite costs directly.
    void set_cost(int n, double j) { J_[n] = j; }

private:
    void reset_device(int n);

    int N_;
    int M_;
    int L_;
    bool feedback_;
    bool regularized_order_ = true;
    int order_periods_ = 0;
    RlsHyperParams hp_;
    std::vector<CVec> w_;
    // P_n = Pscale_[n] * P_[n]; the forgetting division only touches the
    // scalar. Upper triangle valid.
    std::vector<CMat> P_;
    std::vector<double> Pscale_;
    std::vector<double> J_;
    std::vector<double> Jw_;  // sum of forgetting weights behind J
    struct OutputStats {
        cplx cross{0.0, 0.0};  // sum d~ d*
        double dd = 0.0;       // sum |d|^2
        double zz = 0.0;       // sum |d~|^2
        double w = 0.0;        // sum of weights
    };
    bool calibrating_ = false;  // output statistics only track known (pilot) symbols
    std::vector<OutputStats> out_;
    std::vector<int> order_;
    int resets_ = 0;
    CVec u_;  // scratch
    CVec k_;
};

}  // namespace mmtc
