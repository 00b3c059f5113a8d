#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mmtc/baselines.hpp"
#include "mmtc/idd.hpp"
#include "mmtc/ldpc.hpp"
#include "mmtc/rng.hpp"
#include "mmtc/system_model.hpp"

using namespace mmtc;

namespace {

const AugmentedAlphabet& qpsk() {
    static const auto a = build_alphabet(Modulation::QPSK);
    return a;
}

const LdpcCode& code() {
    static const LdpcCode c = LdpcCode::build({}, 0x1d9c);
    return c;
}

int point_with_labels(const AugmentedAlphabet& a, int l0, int l1) {
    for (int i = 0; i < a.active_size(); ++i)
        if (a.label(i, 0) == l0 && a.label(i, 1) == l1) return i + 1;
    return -1;
}

FrameRealization coded_frame(int N, int M, double p, double noise_var, std::uint64_t seed) {
    SystemConfig cfg;
    cfg.N = N;
    cfg.M = M;
    cfg.activity_prob.assign(N, p);
    cfg.pilot_len = 0;
    cfg.data_len = 128;
    cfg.noise_var = noise_var;
    Rng rng(seed);
    return draw_frame(cfg, qpsk(), rng, &code());
}

}  // namespace

TEST_CASE("symbol priors") {
    const std::vector<double> zero{0.0, 0.0};
    auto pr = symbol_priors(zero, 0.3, qpsk());
    CHECK(pr[0] == doctest::Approx(0.7));
    for (int a = 1; a < 5; ++a) CHECK(pr[a] == doctest::Approx(0.075));

    pr = symbol_priors(zero, 1.0, qpsk());
    CHECK(pr[0] == 0.0);
    for (int a = 1; a < 5; ++a) CHECK(pr[a] == doctest::Approx(0.25));

    const std::vector<double> sat{1e6, 1e6};
    pr = symbol_priors(sat, 0.5, qpsk());
    CHECK(pr[0] == doctest::Approx(0.5));
    CHECK(pr[point_with_labels(qpsk(), +1, +1)] == doctest::Approx(0.5).epsilon(1e-9));

    Rng rng(1);
    for (int t = 0; t < 200; ++t) {
        const std::vector<double> le{100 * rng.normal(), 100 * rng.normal()};
        const auto q = symbol_priors(le, rng.uniform(), qpsk());
        double s = 0.0;
        for (double v : q) s += v;
        CHECK(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("likelihood") {
    const cplx mu{0.8, 0.1}, x{0.7, -0.7};
    CHECK(likelihood(mu * x, mu, 0.5, x) == doctest::Approx(1.0 / (std::numbers::pi * 0.5)));
    CHECK(likelihood(mu * x, mu, 1.0 / std::numbers::pi, x) == doctest::Approx(1.0));
    const double z2 = 0.3;
    const cplx off = mu * x + std::sqrt(z2);
    CHECK(likelihood(off, mu, z2, x) == doctest::Approx(std::exp(-1.0) / (std::numbers::pi * z2)));

    // Integrates to one.
    const double h = 0.01;
    double sum = 0.0;
    for (double re = -4.0; re < 4.0; re += h)
        for (double im = -4.0; im < 4.0; im += h) sum += likelihood({re + h / 2, im + h / 2}, mu, z2, x);
    CHECK(std::abs(sum * h * h - 1.0) < 1e-3);
}

TEST_CASE("extrinsic llr") {
    const std::vector<double> zero{0.0, 0.0};
    const auto pr = symbol_priors(zero, 0.5, qpsk());

    auto flat = extrinsic_llr({0.3, -0.2}, 1.0, 1e12, pr, zero, qpsk());
    for (double l : flat.llr) CHECK(std::abs(l) < 1e-9);

    const cplx on = qpsk().point(point_with_labels(qpsk(), +1, +1));
    const auto peak = extrinsic_llr(on, 1.0, 0.01, pr, zero, qpsk());
    CHECK(peak.llr[0] >= 10.0);
    CHECK(peak.llr[1] >= 10.0);

    const auto sym = extrinsic_llr({0.0, 0.0}, 1.0, 0.5, pr, zero, qpsk());
    for (double l : sym.llr) CHECK(std::abs(l) < 1e-12);
}

TEST_CASE("extrinsic llr antisymmetry") {
    AugmentedAlphabet neg = qpsk();
    for (auto& lab : neg.bit_labels)
        for (auto& b : lab) b = -b;
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
        const cplx d = rng.complex_normal(1.0);
        const cplx mu{0.5 + rng.uniform(), 0.0};
        const double z2 = 0.1 + rng.uniform();
        const double p = 0.1 + 0.8 * rng.uniform();
        const std::vector<double> le{3 * rng.normal(), 3 * rng.normal()};
        const std::vector<double> le_neg{-le[0], -le[1]};
        const auto a = extrinsic_llr(d, mu, z2, symbol_priors(le, p, qpsk()), le, qpsk());
        const auto b = extrinsic_llr(d, mu, z2, symbol_priors(le_neg, p, neg), le_neg, neg);
        for (int z = 0; z < 2; ++z) CHECK(a.llr[z] == doctest::Approx(-b.llr[z]).epsilon(1e-9));
    }
}

TEST_CASE("single outer iteration is detect then decode") {
    const auto f = coded_frame(3, 6, 0.7, 0.4, 11);
    const std::vector<double> act(3, 0.7);
    LinearFrameDetector det(qpsk(), f.H_hat, act, 0.4);
    const auto res = idd_run(f, det, code(), qpsk(), act, {1, 20});

    SymbolPriors pr(3, 128, qpsk().size());
    const std::vector<double> zero{0.0, 0.0};
    for (int n = 0; n < 3; ++n) {
        const auto row = symbol_priors(zero, 0.7, qpsk());
        for (int t = 0; t < 128; ++t) std::copy(row.begin(), row.end(), pr.at(n, t).begin());
    }
    const DataSoft soft = det.detect_data(f, &pr);
    const SpaDecoder dec(code());
    for (int n = 0; n < 3; ++n) {
        std::vector<double> lc;
        for (int t = 0; t < 128; ++t) {
            const auto ex = extrinsic_llr(soft.soft(n, t), soft.mu(n, t), soft.zeta2(n, t), pr.at(n, t), zero, qpsk());
            lc.insert(lc.end(), ex.llr.begin(), ex.llr.end());
        }
        const auto out = dec.decode(lc, 20);
        CHECK(code().extract_message(out.hard) == res.decoded[n]);
    }
}

TEST_CASE("noiseless frame decodes cleanly") {
    const auto f = coded_frame(2, 4, 1.0, 1e-6, 12);
    const std::vector<double> act(2, 1.0);
    LinearFrameDetector det(qpsk(), f.H_hat, act, 1e-6);
    const auto res = idd_run(f, det, code(), qpsk(), act, {2, 20});
    REQUIRE(res.bit_errors.size() == 2);
    CHECK(res.bit_errors[0] == 0);
    CHECK(res.bits_per_iteration == 2u * code().k());
}

TEST_CASE("a device with prior(0) = 1 is never detected") {
    const auto f = coded_frame(3, 4, 0.5, 0.5, 13);
    std::vector<double> act(3, 0.5);
    act[1] = 0.0;
    LinearFrameDetector det(qpsk(), f.H_hat, std::vector<double>(3, 0.5), 0.5);
    const auto res = idd_run(f, det, code(), qpsk(), act, {2, 10});
    CHECK((res.last.decisions.row(1).array() == 0).all());
}
