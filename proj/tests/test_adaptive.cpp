#include <doctest.h>

#include <cmath>

#include "mmtc/adaptive_detector.hpp"
#include "mmtc/baselines.hpp"
#include "mmtc/equivalent_channel.hpp"
#include "mmtc/rls.hpp"
#include "mmtc/rng.hpp"
#include "mmtc/system_model.hpp"

using namespace mmtc;

namespace {

const AugmentedAlphabet& qpsk() {
    static const auto a = build_alphabet(Modulation::QPSK);
    return a;
}

RlsHyperParams plain(double lambda, double delta) { return {lambda, 0.0, 10.0, delta}; }

CVec random_vec(int n, Rng& rng) {
    CVec v(n);
    for (auto& x : v) x = rng.complex_normal(1.0);
    return v;
}

// Frame with a caller-chosen channel, every device active.
FrameRealization frame_with(const CMat& H, int pilots, int data, double noise_var, std::uint64_t seed) {
    SystemConfig cfg;
    cfg.N = static_cast<int>(H.cols());
    cfg.M = static_cast<int>(H.rows());
    cfg.activity_prob.assign(cfg.N, 1.0);
    cfg.pilot_len = pilots;
    cfg.data_len = data;
    cfg.noise_var = noise_var;
    Rng rng(seed);
    auto f = draw_frame(cfg, qpsk(), rng);
    f.H = H;
    f.H_hat = H;
    f.Y = H * f.X + f.V;
    return f;
}

}  // namespace

TEST_CASE("augmented input") {
    const CVec y = CVec::Constant(1, cplx{1.0, 1.0});
    CHECK(augment_input(y, {}, 1, 3) == y);

    CVec y2(2);
    y2 << cplx{1, 0}, cplx{2, 0};
    const cplx c{3, -1};
    const CVec out = augment_input(y2, std::vector<cplx>{c}, 2, 3);
    REQUIRE(out.size() == 5);
    CHECK(out(0) == y2(0));
    CHECK(out(1) == y2(1));
    CHECK(out(2) == c);
    CHECK(out(3) == cplx{0, 0});
    CHECK(out(4) == cplx{0, 0});

    const std::vector<cplx> dec(2, cplx{1, 1});
    const CVec last = augment_input(y2, dec, 3, 3);
    CHECK(last.size() == 5);
    CHECK(last(3) == cplx{1, 1});
    CHECK(last(4) == cplx{0, 0});

    CHECK_THROWS_AS(augment_input(y2, {}, 0, 3), ContractViolation);
    CHECK_THROWS_AS(augment_input(y2, {}, 2, 3), ContractViolation);
}

TEST_CASE("kalman gain") {
    CVec y(2);
    y << 1.0, 0.0;
    const CVec k = kalman_gain(CMat::Identity(2, 2), y, 1.0);
    CHECK(k(0).real() == doctest::Approx(0.5));
    CHECK(std::abs(k(1)) == 0.0);

    const CMat P = CMat::Identity(1, 1) / 0.7;
    const CVec k1 = kalman_gain(P, CVec::Ones(1), 0.92);
    CHECK(k1(0).real() == doctest::Approx(0.60829).epsilon(1e-4));

    CHECK(kalman_gain(CMat::Identity(3, 3), CVec::Zero(3), 0.9).norm() == 0.0);
}

TEST_CASE("zero attraction") {
    CVec w(4);
    w << 0.05, 0.2, 0.0, cplx{0.0, -0.03};
    const CVec adj = zero_attraction(w, 1e-4, 10.0);
    CHECK(adj(0).real() == doctest::Approx(-0.005));
    CHECK((w(0) + adj(0)).real() == doctest::Approx(0.045));
    CHECK(adj(1) == cplx{0, 0});
    CHECK(adj(2) == cplx{0, 0});
    // Opposes the phase of the coefficient.
    CHECK(adj(3).imag() > 0.0);
    CHECK(std::abs(adj(3).real()) < 1e-18);

    CHECK(zero_attraction(w, 0.0, 10.0).isZero());

    Rng rng(2);
    for (int t = 0; t < 500; ++t) {
        const cplx c = rng.complex_normal(0.05);
        CVec v = CVec::Constant(1, c);
        const cplx a = zero_attraction(v, 1e-2, 10.0)(0);
        if (std::abs(c) > 0.1) {
            CHECK(a == cplx{0, 0});
        } else {
            CHECK(std::abs(c + a) <= std::abs(c));
        }
    }
}

TEST_CASE("scalar rls step") {
    FilterBank bank(1, 1, false, plain(0.92, 0.7));
    const auto r = bank.rls_update(0, CVec::Ones(1), cplx{1.0, 0.0});
    CHECK(r.output == cplx{0, 0});
    CHECK(bank.weights(0)(0).real() == doctest::Approx(0.60829).epsilon(1e-4));
}

TEST_CASE("rls converges on a noiseless channel") {
    FilterBank bank(1, 1, false, plain(0.92, 0.7));
    const cplx h = std::polar(1.0, 0.7);
    Rng rng(3);
    double err = 1.0;
    for (int i = 0; i < 50; ++i) {
        const cplx x = qpsk().active_points[rng.uniform_int(0, 3)];
        err = std::abs(bank.rls_update(0, CVec::Constant(1, h * x), x).error);
    }
    CHECK(err < 1e-3);
}

TEST_CASE("rls matches the weighted normal equations") {
    Rng rng(12);
    for (int dim : {1, 4}) {
        for (int sys = 0; sys < 25; ++sys) {
            const double lambda = 0.95 + 0.05 * rng.uniform();
            const double delta = 0.5;
            FilterBank bank(1, dim, false, plain(lambda, delta));
            const CVec h = random_vec(dim, rng);
            CMat R = CMat::Zero(dim, dim);
            CVec p = CVec::Zero(dim);
            const int T = 200;
            for (int t = 0; t < T; ++t) {
                const CVec y = random_vec(dim, rng);
                const cplx d = h.dot(y) + rng.complex_normal(0.01);
                bank.rls_update(0, y, d);
                R = lambda * R + y * y.adjoint();
                p = lambda * p + y * std::conj(d);
            }
            R += std::pow(lambda, T) * delta * CMat::Identity(dim, dim);
            const CVec w = R.ldlt().solve(p);
            CHECK((bank.weights(0) - w).norm() / w.norm() < 1e-6);

            const CMat P = bank.inv_corr(0);
            CHECK((P - P.adjoint()).norm() < 1e-9 * P.norm());
        }
    }
}

TEST_CASE("zero attraction shrinks an idle filter") {
    // desired = 0 for a device that never transmits.
    RlsHyperParams with = RlsHyperParams::regularized();
    RlsHyperParams without = with;
    without.gamma = 0.0;
    FilterBank a(1, 4, false, with);
    FilterBank b(1, 4, false, without);
    Rng rng(8);
    for (int t = 0; t < 100; ++t) {
        const CVec y = random_vec(4, rng) * 0.1;
        const cplx d = rng.complex_normal(1e-2);
        a.rls_update(0, y, d);
        b.rls_update(0, y, d);
    }
    CHECK(a.weights(0).cwiseAbs().mean() < b.weights(0).cwiseAbs().mean());
}

TEST_CASE("detection order") {
    FilterBank bank(10, 2, false, plain(0.99, 0.5));
    bank.set_use_regularized_order(false);
    bank.set_cost(3, 0.2);
    bank.set_cost(7, 0.05);
    bank.set_cost(9, 0.4);
    const std::vector<int> s{3, 7, 9};
    CHECK(bank.select_detection_order(s) == 7);
    CHECK(bank.select_detection_order(std::vector<int>{5}) == 5);

    FilterBank eq(4, 2, false, plain(0.99, 0.5));
    eq.set_use_regularized_order(false);
    for (int n = 0; n < 4; ++n) eq.set_cost(n, 1.0);
    CHECK(eq.select_detection_order(std::vector<int>{2, 1, 3}) == 1);

    // Argmin is invariant to adding a constant to every cost.
    for (int n = 0; n < 10; ++n) bank.set_cost(n, bank.cost(n) + 5.0);
    CHECK(bank.select_detection_order(s) == 7);
    CHECK_THROWS_AS(bank.select_detection_order(std::vector<int>{}), ContractViolation);
}

TEST_CASE("pilot training") {
    CMat H(2, 2);
    H << cplx{1.0, 0.2}, cplx{0.3, -0.1}, cplx{-0.2, 0.4}, cplx{0.9, 0.0};

    SUBCASE("noiseless training detects the pilots") {
        const auto f = frame_with(H, 64, 8, 0.0, 5);
        FilterBank bank(2, 2, false, RlsHyperParams::standard());
        bank.train_on_pilots(f.pilots, f.pilot_rx());
        AdaptiveDetector det(AdaptiveVariant::AA_RLS, qpsk(), bank, H, {});
        for (int t = 0; t < 64; ++t) {
            const auto out = det.detect_symbol_period(f.Y.col(t));
            for (int n = 0; n < 2; ++n) CHECK(out.decisions(n) == f.symbols(n, t));
        }
    }

    SUBCASE("zero pilots leave the bank untouched") {
        FilterBank bank(2, 2, true, RlsHyperParams::standard());
        bank.train_on_pilots(CMat(2, 0), CMat(2, 0));
        CHECK(bank.weights(0).isZero());
        CHECK(bank.weights(1).isZero());
    }

    SUBCASE("two passes equal one pass over the doubled sequence") {
        const auto f = frame_with(H, 32, 1, 0.1, 6);
        FilterBank once(2, 2, true, plain(1.0, 0.5));
        FilterBank twice = once;
        CMat p2(2, 64), y2(2, 64);
        p2 << f.pilots, f.pilots;
        y2 << f.pilot_rx(), f.pilot_rx();
        once.train_on_pilots(p2, y2);
        twice.train_on_pilots(f.pilots, f.pilot_rx());
        twice.train_on_pilots(f.pilots, f.pilot_rx());
        for (int n = 0; n < 2; ++n) CHECK((once.weights(n) - twice.weights(n)).norm() < 1e-8);
    }

    SUBCASE("dimension mismatch") {
        FilterBank bank(2, 2, false, RlsHyperParams::standard());
        CHECK_THROWS_AS(bank.train_on_pilots(CMat(3, 4), CMat(2, 4)), ConfigError);
    }
}

TEST_CASE("noiseless orthogonal detection, every variant") {
    CMat H(2, 2);
    H << 1.0, 0.0, 0.0, 1.0;
    const auto f = frame_with(H, 64, 16, 0.0, 9);
    for (auto v : {AdaptiveVariant::AA_RLS, AdaptiveVariant::AA_CL_RLS, AdaptiveVariant::AA_RLS_DF,
                   AdaptiveVariant::AA_CL_DF}) {
        FilterBank bank(2, 2, uses_feedback(v), RlsHyperParams::standard());
        bank.train_on_pilots(f.pilots, f.pilot_rx());
        AdaptiveDetector det(v, qpsk(), bank, H, {});
        const DataSoft out = det.detect_data(f, nullptr);
        CHECK(out.decisions == f.symbols.rightCols(16));
    }
}

TEST_CASE("one-candidate list is plain slicing") {
    SystemConfig cfg;
    cfg.N = 8;
    cfg.M = 6;
    cfg.activity_prob.assign(8, 0.5);
    cfg.pilot_len = 48;
    cfg.data_len = 16;
    cfg.noise_var = 0.3;
    Rng rng(14);
    const auto f = draw_frame(cfg, qpsk(), rng);
    FilterBank bank(8, 6, true, RlsHyperParams::standard());
    bank.train_on_pilots(f.pilots, f.pilot_rx(), cfg.activity_prob);
    ListParams one;
    one.K = 1;
    AdaptiveDetector cl(AdaptiveVariant::AA_CL_DF, qpsk(), bank, f.H_hat, one);
    AdaptiveDetector df(AdaptiveVariant::AA_RLS_DF, qpsk(), bank, f.H_hat, one);
    const auto a = cl.detect_data(f, nullptr);
    const auto b = df.detect_data(f, nullptr);
    CHECK(a.decisions == b.decisions);
    CHECK((a.soft - b.soft).norm() == 0.0);
}

TEST_CASE("silent devices are detected as silent") {
    SystemConfig cfg;
    cfg.N = 4;
    cfg.M = 8;
    cfg.activity_prob.assign(4, 0.2);
    cfg.pilot_len = 192;
    cfg.data_len = 8;
    cfg.noise_var = snr_to_noise_var(10.0, cfg.N, 1.0, 1.0);
    long zeros = 0, total = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Rng rng(100 + trial);
        auto f = draw_frame(cfg, qpsk(), rng);
        f.X.setZero();
        f.symbols.setZero();
        std::fill(f.active.begin(), f.active.end(), 0);
        f.Y = f.V;
        FilterBank bank(4, 8, true, RlsHyperParams::standard());
        bank.train_on_pilots(f.pilots, f.pilot_rx(), cfg.activity_prob);
        AdaptiveDetector det(AdaptiveVariant::AA_CL_DF, qpsk(), bank, f.H_hat, {});
        const auto post = det.activity(cfg.activity_prob);
        SymbolPriors pr(4, 8, qpsk().size());
        for (int n = 0; n < 4; ++n) {
            const auto row = activity_priors(post[n], qpsk());
            for (int t = 0; t < 8; ++t) std::copy(row.begin(), row.end(), pr.at(n, t).begin());
        }
        const auto out = det.detect_data(f, &pr);
        zeros += (out.decisions.array() == 0).count();
        total += out.decisions.size();
    }
    CHECK(static_cast<double>(zeros) / total >= 0.99);
}

TEST_CASE("gated feedback waits for the order to freeze") {
    SystemConfig cfg;
    cfg.N = 6;
    cfg.M = 4;
    cfg.activity_prob.assign(6, 0.5);
    cfg.pilot_len = 48;
    cfg.data_len = 1;
    cfg.noise_var = 0.05;
    Rng rng(77);
    const auto f = draw_frame(cfg, qpsk(), rng);

    // Refreshing over every pilot period leaves no period with feedback.
    FilterBank frozen(6, 4, true, RlsHyperParams::standard());
    frozen.set_order_periods(cfg.pilot_len);
    frozen.train_on_pilots(f.pilots, f.pilot_rx(), cfg.activity_prob);
    for (int n = 0; n < 6; ++n) CHECK(frozen.weights(n).tail(6).isZero(0.0));

    // Without a prior every pilot is fed back from the first period.
    FilterBank ungated(6, 4, true, RlsHyperParams::standard());
    ungated.set_order_periods(cfg.pilot_len);
    ungated.train_on_pilots(f.pilots, f.pilot_rx());
    double taps = 0.0;
    for (int n = 0; n < 6; ++n) taps += ungated.weights(n).tail(6).norm();
    CHECK(taps > 0.0);
}

TEST_CASE("activity posterior") {
    CMat H(4, 2);
    H << 1.0, 0.2, 0.1, 1.0, cplx{0, 0.5}, 0.3, -0.4, cplx{0.2, 0.7};
    auto f = frame_with(H, 64, 1, 0.05, 4);
    // Device 1 stays silent.
    f.X.row(1).setZero();
    f.Y = H * f.X + f.V;
    FilterBank bank(2, 4, false, RlsHyperParams::standard());
    bank.train_on_pilots(f.pilots, f.pilot_rx());
    CHECK(bank.activity_posterior(0, 0.2) > 0.99);
    CHECK(bank.activity_posterior(1, 0.2) < 0.5);
    CHECK(bank.activity_posterior(1, 1.0) == 1.0);
}

TEST_CASE("equivalent channel statistics") {
    EquivalentChannelStats s(1);
    s.update(CVec::Ones(1), CVec::Ones(1), cplx{1.0, 0.0}, 1.0);
    CHECK(s.mu().real() == doctest::Approx(1.0));
    CHECK(s.zeta2() == kZeta2Floor);

    EquivalentChannelStats z(2);
    Rng rng(1);
    for (int t = 0; t < 10; ++t) z.update(CVec::Ones(2), random_vec(2, rng), cplx{0.0, 0.0}, 0.9);
    CHECK(std::abs(z.mu()) == 0.0);

    EquivalentChannelStats g(1);
    const cplx h{0.8, -0.3};
    const cplx w{0.5, 0.25};
    for (int t = 0; t < 100; ++t) {
        const cplx x = qpsk().active_points[rng.uniform_int(0, 3)];
        g.update(CVec::Constant(1, w), CVec::Constant(1, h * x), x, 0.92);
    }
    CHECK(std::abs(g.mu() - std::conj(w) * h) < 1e-3);
}
