#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmtc/adaptive_detector.hpp"
#include "mmtc/baselines.hpp"
#include "mmtc/ldpc.hpp"
#include "mmtc/list_detect.hpp"
#include "mmtc/rls.hpp"
#include "mmtc/system_model.hpp"

namespace mmtc {

enum class DetectorKind { Lmmse, OracleLmmse, SaSic, AaMfSic, AaRls, AaClRls, AaRlsDf, AaClDf };

std::string_view to_string(DetectorKind k);
DetectorKind parse_detector(std::string_view name);
std::optional<AdaptiveVariant> adaptive_variant(DetectorKind k);
const std::vector<DetectorKind>& all_detectors();

enum class CsiMode { Perfect, Imperfect };
std::string_view to_string(CsiMode c);
CsiMode parse_csi(std::string_view name);

struct IddOptions {
    int iterations = 2;
    int spa_max_iters = 20;
    bool restart_from_pilots = true;
};

struct LdpcOptions {
    LdpcCode::BuildParams build;
    std::uint64_t seed = 0x1d9c;
    std::string alist;  // load this file instead of constructing, when set
};

struct ExperimentConfig {
    SystemConfig system;  // noise_var and csi_error_var are set per SNR point
    Modulation modulation = Modulation::QPSK;
    std::vector<DetectorKind> detectors;
    std::vector<double> snr_db;
    int trials = 2000;
    bool coded = false;
    IddOptions idd;
    std::uint64_t seed = 1;
    CsiMode csi = CsiMode::Perfect;
    double csi_error_ratio = 0.2;  // sigma_e^2 / sigma_v^2 under imperfect CSI
    ListParams list;
    RlsHyperParams rls = RlsHyperParams::standard();
    bool regularized_order = true;
    bool reorder_in_data = false;
    int order_periods = 32;  // see FilterBank::set_order_periods
    SicOrdering sic_ordering = SicOrdering::Norm;
    LdpcOptions ldpc;
    int threads = 0;  // 0: OpenMP default

    double code_rate() const;
    // Throws ConfigError naming the offending field.
    void validate() const;
};

/// Integer counters for one (detector, SNR) point. Addition is exact and
/// commutative, so the merge order of trials never matters.
struct MetricsRecord {
    DetectorKind detector = DetectorKind::Lmmse;
    double snr_db = 0.0;
    std::uint64_t trials_run = 0;
    std::uint64_t trials_skipped = 0;
    std::uint64_t symbol_errors = 0;
    std::uint64_t active_symbols = 0;
    std::uint64_t bit_errors = 0;
    std::uint64_t bit_count = 0;
    std::uint64_t false_alarms = 0;
    std::uint64_t inactive_symbols = 0;
    std::uint64_t missed = 0;
    std::uint64_t complex_mults = 0;
    std::uint64_t detected_symbols = 0;  // N * data_len per trial
    std::uint64_t rls_resets = 0;
    std::uint64_t llr_underflows = 0;
    std::vector<std::uint64_t> iteration_bit_errors;  // coded runs, per outer iteration
    ListStats list;

    MetricsRecord& operator+=(const MetricsRecord& o);
};

// Rates; nullopt when the denominator is zero.
std::optional<double> nser(const MetricsRecord& r);
std::optional<double> ber(const MetricsRecord& r);
std::optional<double> iteration_ber(const MetricsRecord& r, int iteration);  // 1-based
std::optional<double> false_alarm_rate(const MetricsRecord& r);
std::optional<double> miss_rate(const MetricsRecord& r);
std::optional<double> cmults_per_symbol(const MetricsRecord& r);

struct Diagnostic {
    std::string kind;  // "skipped_trial", "rls_reset", "llr_underflow"
    DetectorKind detector = DetectorKind::Lmmse;
    double snr_db = 0.0;
    std::uint64_t trial = 0;
    std::uint64_t count = 0;
    std::string message;
};

struct ExperimentResult {
    std::vector<MetricsRecord> records;  // detector-major, then SNR grid order
    std::vector<Diagnostic> diagnostics;

    const MetricsRecord& at(DetectorKind k, double snr_db) const;
};

// Builds (or loads) the code an experiment uses.
LdpcCode make_code(const LdpcOptions& opts);

// Trials run in parallel; the result is identical to run_experiment_serial.
ExperimentResult run_experiment(const ExperimentConfig& cfg);
ExperimentResult run_experiment_serial(const ExperimentConfig& cfg);

// Single trial at one SNR point, all configured detectors. Exposed for tests.
std::vector<MetricsRecord> run_trial(const ExperimentConfig& cfg, std::size_t snr_index, std::uint64_t trial,
                                     const AugmentedAlphabet& alphabet, const LdpcCode* code,
                                     std::vector<Diagnostic>* diagnostics = nullptr);

inline constexpr std::string_view kCsvHeader =
    "variant,snr_db,csi,coded,idd_iter,trials,nser,ber,fa_rate,miss_rate,cmults_per_symbol,seed";

void write_csv(std::ostream& os, const ExperimentConfig& cfg, const ExperimentResult& res);
void write_diagnostics(std::ostream& os, const ExperimentResult& res);

// Two-sided binomial check: a <= b within `sigmas` standard deviations of
// the difference of two independent proportions.
bool le_with_slack(std::uint64_t err_a, std::uint64_t n_a, std::uint64_t err_b, std::uint64_t n_b,
                   double sigmas = 2.0);

}  // namespace mmtc
