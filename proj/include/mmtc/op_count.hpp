#pragma once

#include <cstdint>

namespace mmtc {

/// Complex-multiplication counter.
///
/// Kernels charge their nominal cost (e.g. an inner product of length L
/// charges L) to a thread-local tally. A harness trial runs on a single
/// thread, so reading the tally before and after a trial gives that trial's
/// exact count regardless of how trials are scheduled.
namespace ops {

inline thread_local std::uint64_t cmults = 0;

inline void charge(std::uint64_t n) { cmults += n; }
inline std::uint64_t read() { return cmults; }

}  // namespace ops

// Measures the cmults charged while it is alive.
class OpScope {
public:
    OpScope() : start_(ops::read()) {}
    std::uint64_t elapsed() const { return ops::read() - start_; }

private:
    std::uint64_t start_;
};

}  // namespace mmtc
