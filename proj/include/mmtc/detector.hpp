#pragma once

#include <span>
#include <string>
#include <vector>

#include "mmtc/common.hpp"

namespace mmtc {

struct FrameRealization;

/// Symbol priors over A_0 for every (device, data period).
class SymbolPriors {
public:
    SymbolPriors() = default;
    SymbolPriors(int num_devices, int periods, int alphabet_size)
        : N_(num_devices), D_(periods), S_(alphabet_size),
          p_(static_cast<std::size_t>(num_devices) * periods * alphabet_size, 0.0) {}

    int num_devices() const { return N_; }
    int periods() const { return D_; }
    int alphabet_size() const { return S_; }

    std::span<double> at(int n, int t) { return {p_.data() + offset(n, t), static_cast<std::size_t>(S_)}; }
    std::span<const double> at(int n, int t) const {
        return {p_.data() + offset(n, t), static_cast<std::size_t>(S_)};
    }

private:
    std::size_t offset(int n, int t) const {
        return (static_cast<std::size_t>(t) * N_ + n) * static_cast<std::size_t>(S_);
    }
    int N_ = 0;
    int D_ = 0;
    int S_ = 0;
    std::vector<double> p_;
};

/// Detector output over a frame's data section (N x data_len each).
/// soft is the filter output d, modelled as mu * x + noise of variance zeta2.
struct DataSoft {
    Eigen::MatrixXi decisions;  // indices into A_0
    CMat soft;
    CMat mu;
    Eigen::MatrixXd zeta2;

    void resize(int N, int D) {
        decisions.setZero(N, D);
        soft.setZero(N, D);
        mu.setZero(N, D);
        zeta2.setOnes(N, D);
    }
};

/// A detector bound to one frame. detect_data may be called repeatedly
/// (once per outer IDD iteration) with updated priors.
class FrameDetector {
public:
    virtual ~FrameDetector() = default;
    virtual DataSoft detect_data(const FrameRealization& frame, const SymbolPriors* priors) = 0;
    // Activity probabilities to build priors from. Detectors that observe
    // the pilots may sharpen the a-priori p_n into a per-frame posterior.
    virtual std::vector<double> activity(const std::vector<double>& prior) const { return prior; }
};

}  // namespace mmtc
