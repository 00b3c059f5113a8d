#include <doctest.h>

#include <sstream>

#include "mmtc/config.hpp"
#include "mmtc/harness.hpp"

using namespace mmtc;

namespace {

ExperimentConfig tiny() {
    Json doc = default_config_json();
    apply_override(doc, "system.N=8");
    apply_override(doc, "system.M=6");
    apply_override(doc, "system.pilot_len=32");
    apply_override(doc, "system.data_len=16");
    apply_override(doc, "trials=6");
    apply_override(doc, "snr_db=[6,12]");
    return config_from_json(doc);
}

std::string csv_of(const ExperimentConfig& cfg, const ExperimentResult& res) {
    std::ostringstream os;
    write_csv(os, cfg, res);
    return os.str();
}

}  // namespace

TEST_CASE("csv layout") {
    const auto cfg = tiny();
    const auto res = run_experiment(cfg);
    const std::string csv = csv_of(cfg, res);
    CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
    const auto rows = std::count(csv.begin(), csv.end(), '\n');
    CHECK(rows == 1 + static_cast<long>(cfg.detectors.size() * cfg.snr_db.size()));
    for (const auto& r : res.records) {
        CHECK(r.trials_run == 6);
        CHECK(r.symbol_errors <= r.active_symbols);
        CHECK(r.false_alarms <= r.inactive_symbols);
        CHECK(r.detected_symbols == 6u * 8u * 16u);
    }
}

TEST_CASE("reruns are byte identical, serial or parallel") {
    auto cfg = tiny();
    const std::string a = csv_of(cfg, run_experiment(cfg));
    CHECK(a == csv_of(cfg, run_experiment(cfg)));
    CHECK(a == csv_of(cfg, run_experiment_serial(cfg)));
    for (int t : {1, 2, 3}) {
        cfg.threads = t;
        CHECK(a == csv_of(cfg, run_experiment(cfg)));
    }
    cfg.seed = 99;
    CHECK(a != csv_of(cfg, run_experiment(cfg)));
}

TEST_CASE("coded runs") {
    Json doc = default_config_json();
    apply_override(doc, "system.N=6");
    apply_override(doc, "system.M=6");
    apply_override(doc, "system.pilot_len=32");
    apply_override(doc, "trials=2");
    apply_override(doc, "snr_db=[10]");
    apply_override(doc, "coded=true");
    apply_override(doc, R"(detectors=["lmmse","aa_cl_df"])");
    const auto cfg = config_from_json(doc);
    CHECK(cfg.system.data_len == 128);
    const auto res = run_experiment(cfg);
    for (const auto& r : res.records) {
        CHECK(r.iteration_bit_errors.size() == 2);
        CHECK(iteration_ber(r, 2).has_value());
    }
}

TEST_CASE("rates and merging") {
    MetricsRecord a;
    CHECK_FALSE(nser(a).has_value());
    CHECK_FALSE(cmults_per_symbol(a).has_value());
    a.symbol_errors = 3;
    a.active_symbols = 30;
    a.iteration_bit_errors = {4, 2};
    MetricsRecord b;
    b.symbol_errors = 1;
    b.active_symbols = 10;
    b.iteration_bit_errors = {1, 1};
    MetricsRecord ab = a;
    ab += b;
    MetricsRecord ba = b;
    ba += a;
    CHECK(*nser(ab) == doctest::Approx(0.1));
    CHECK(ab.iteration_bit_errors == ba.iteration_bit_errors);
    CHECK(ab.symbol_errors == ba.symbol_errors);
}

TEST_CASE("binomial slack") {
    CHECK(le_with_slack(10, 1000, 20, 1000));
    CHECK(le_with_slack(22, 1000, 20, 1000));
    CHECK_FALSE(le_with_slack(60, 1000, 20, 1000));
    CHECK(le_with_slack(0, 1000, 0, 1000));
}

TEST_CASE("oracle lmmse never loses to lmmse") {
    Json doc = default_config_json();
    apply_override(doc, "trials=1000");
    apply_override(doc, "snr_db=[4,12]");
    apply_override(doc, "system.pilot_len=0");
    apply_override(doc, R"(detectors=["oracle_lmmse","lmmse"])");
    const auto cfg = config_from_json(doc);
    const auto res = run_experiment(cfg);
    for (double snr : cfg.snr_db) {
        const auto& o = res.at(DetectorKind::OracleLmmse, snr);
        const auto& l = res.at(DetectorKind::Lmmse, snr);
        CHECK(le_with_slack(o.symbol_errors, o.active_symbols, l.symbol_errors, l.active_symbols));
    }
}

TEST_CASE("configuration") {
    SUBCASE("defaults") {
        const auto cfg = config_from_json(default_config_json());
        CHECK(cfg.system.N == 64);
        CHECK(cfg.system.M == 32);
        CHECK(cfg.detectors.size() == 8);
        CHECK(cfg.snr_db.size() == 9);
        CHECK(cfg.system.data_len == 32);
    }
    SUBCASE("overrides") {
        Json doc = default_config_json();
        apply_override(doc, "system.N=16");
        apply_override(doc, "csi=imperfect");
        apply_override(doc, "rls.preset=reg");
        const auto cfg = config_from_json(doc);
        CHECK(cfg.system.N == 16);
        CHECK(cfg.system.activity_prob.size() == 16);
        CHECK(cfg.csi == CsiMode::Imperfect);
        CHECK(cfg.rls.lambda == doctest::Approx(0.92));
    }
    SUBCASE("errors name the field") {
        Json doc = default_config_json();
        CHECK_THROWS_AS(apply_override(doc, "system.Q=3"), ConfigError);
        CHECK_THROWS_AS(apply_override(doc, "nonsense"), ConfigError);
        apply_override(doc, "rls.lambda=1.5");
        try {
            config_from_json(doc);
            FAIL("accepted lambda > 1");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("lambda") != std::string::npos);
        }
        Json d2 = default_config_json();
        apply_override(d2, R"(detectors=["zf"])");
        CHECK_THROWS_AS(config_from_json(d2), ConfigError);
        Json d3 = default_config_json();
        apply_override(d3, "coded=true");
        apply_override(d3, "system.data_len=100");
        CHECK_THROWS_AS(config_from_json(d3), ConfigError);
    }
    SUBCASE("seed from the environment wins") {
        const auto cfg = load_config("", {"seed=5"}, std::string("77"));
        CHECK(cfg.seed == 77);
        CHECK_THROWS_AS(load_config("", {}, std::string("abc")), ConfigError);
    }
    SUBCASE("round trip") {
        Json doc = default_config_json();
        apply_override(doc, "list.K=3");
        apply_override(doc, "rls.gamma=0.001");
        const auto a = config_from_json(doc);
        const auto b = config_from_json(config_to_json(a));
        CHECK(config_to_json(a) == config_to_json(b));
    }
}
