#include <doctest.h>

#include <cmath>

#include "mmtc/alphabet.hpp"
#include "mmtc/rng.hpp"
#include "mmtc/system_model.hpp"

using namespace mmtc;

TEST_CASE("qpsk alphabet") {
    const auto a = build_alphabet(Modulation::QPSK);
    CHECK(a.active_size() == 4);
    CHECK(a.size() == 5);
    CHECK(a.bits_per_symbol == 2);
    CHECK(a.point(AugmentedAlphabet::kZero) == cplx{0.0, 0.0});

    double energy = 0.0;
    for (const auto& x : a.active_points) {
        energy += std::norm(x);
        CHECK(std::abs(std::abs(x.real()) - 1.0 / std::sqrt(2.0)) < 1e-15);
    }
    CHECK(energy / 4.0 == doctest::Approx(1.0));

    // Gray: horizontal and vertical neighbours differ in one bit.
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            if (std::abs(a.active_points[i] - a.active_points[j]) > 1.5 || i == j) continue;
            int diff = 0;
            for (int z = 0; z < 2; ++z) diff += a.label(i, z) != a.label(j, z);
            CHECK(diff == 1);
        }

    for (int i = 0; i < 4; ++i) {
        std::uint8_t bits[2];
        a.unmap(i, bits);
        CHECK(a.map_bits(bits) == i);
    }
    CHECK_THROWS_AS(parse_modulation("16qam"), ConfigError);
}

TEST_CASE("frame construction") {
    const auto a = build_alphabet(Modulation::QPSK);
    SystemConfig cfg;
    cfg.N = 8;
    cfg.M = 4;
    cfg.activity_prob.assign(8, 0.5);
    cfg.pilot_len = 6;
    cfg.data_len = 5;
    cfg.noise_var = 0.3;

    Rng rng(7);
    const auto f = draw_frame(cfg, a, rng);
    CHECK((f.Y - (f.H * f.X + f.V)).norm() < 1e-12);
    for (int n = 0; n < cfg.N; ++n) {
        if (f.active[n]) continue;
        CHECK(f.X.row(n).norm() == 0.0);
        CMat H2 = f.H;
        H2.col(n).setZero();
        CHECK((H2 * f.X + f.V - f.Y).norm() < 1e-12);
    }

    Rng again(7);
    const auto g = draw_frame(cfg, a, again);
    CHECK(f.Y == g.Y);
    CHECK(f.symbols == g.symbols);
}

TEST_CASE("frame activity") {
    const auto a = build_alphabet(Modulation::QPSK);
    SystemConfig cfg;
    cfg.N = 6;
    cfg.M = 2;
    cfg.activity_prob.assign(6, 1.0);
    cfg.pilot_len = 2;
    cfg.data_len = 2;
    Rng rng(1);
    const auto f = draw_frame(cfg, a, rng);
    for (auto act : f.active) CHECK(act == 1);

    cfg.N = 10000;
    cfg.M = 1;
    cfg.activity_prob.assign(cfg.N, 0.5);
    cfg.pilot_len = 1;
    cfg.data_len = 1;
    Rng rng2(3);
    const int k = draw_frame(cfg, a, rng2).num_active();
    CHECK(k >= 4600);
    CHECK(k <= 5400);
}

TEST_CASE("identity channel, no noise") {
    const auto a = build_alphabet(Modulation::QPSK);
    SystemConfig cfg;
    cfg.N = 1;
    cfg.M = 1;
    cfg.activity_prob = {1.0};
    cfg.noise_var = 0.0;
    cfg.pilot_len = 3;
    cfg.data_len = 3;
    Rng rng(11);
    auto f = draw_frame(cfg, a, rng);
    CHECK(f.V.norm() == 0.0);
    CHECK((f.Y - f.H * f.X).norm() < 1e-15);
}

TEST_CASE("csi corruption") {
    Rng rng(5);
    CMat H = CMat::Random(3, 4);
    CHECK(corrupt_csi(H, 0.0, rng) == H);

    const int rows = 100, cols = 1000;
    CMat Z = CMat::Zero(rows, cols);
    const double s2 = 0.5 / 5.0;
    const CMat E = corrupt_csi(Z, s2, rng);
    CHECK(E.squaredNorm() / (rows * cols) == doctest::Approx(s2).epsilon(0.03));
}

TEST_CASE("snr to noise variance") {
    CHECK(snr_to_noise_var(0.0, 1, 1.0, 1.0) == doctest::Approx(1.0));
    CHECK(snr_to_noise_var(17.0, 100, 0.5, 1.0) == doctest::Approx(0.99763).epsilon(1e-5));
    CHECK(snr_to_noise_var(10.0, 10, 1.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("system config validation") {
    SystemConfig cfg;
    cfg.activity_prob.assign(3, 0.2);
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = SystemConfig{};
    cfg.activity_prob[4] = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("substreams") {
    auto a = Rng::substream(1, 2, "frame");
    auto b = Rng::substream(1, 2, "frame");
    auto c = Rng::substream(1, 3, "frame");
    auto d = Rng::substream(1, 2, "csi");
    const double va = a.normal();
    CHECK(va == b.normal());
    CHECK(va != c.normal());
    CHECK(va != d.normal());
}
