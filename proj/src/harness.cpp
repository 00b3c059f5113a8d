#include "mmtc/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <ostream>

#include <omp.h>

#include "mmtc/idd.hpp"
#include "mmtc/op_count.hpp"
#include "mmtc/rng.hpp"

namespace mmtc {

namespace {

struct DetectorName {
    DetectorKind kind;
    std::string_view name;
};

constexpr std::array<DetectorName, 8> kDetectorNames{{
    {DetectorKind::Lmmse, "lmmse"},
    {DetectorKind::OracleLmmse, "oracle_lmmse"},
    {DetectorKind::SaSic, "sa_sic"},
    {DetectorKind::AaMfSic, "aa_mf_sic"},
    {DetectorKind::AaRls, "aa_rls"},
    {DetectorKind::AaClRls, "aa_cl_rls"},
    {DetectorKind::AaRlsDf, "aa_rls_df"},
    {DetectorKind::AaClDf, "aa_cl_df"},
}};

std::string fmt_rate(const std::optional<double>& v) {
    if (!v) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6e", *v);
    return buf;
}

std::string fmt_num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

// Hard bits of a decision; a zero decision falls back to the quadrant of the soft value.
void decision_bits(const AugmentedAlphabet& alphabet, int idx, cplx soft, std::span<std::uint8_t> out) {
    int a = idx - 1;
    if (idx == AugmentedAlphabet::kZero) {
        double best = std::numeric_limits<double>::infinity();
        for (int j = 0; j < alphabet.active_size(); ++j) {
            const double d = std::norm(soft - alphabet.active_points[j]);
            if (d < best) {
                best = d;
                a = j;
            }
        }
    }
    alphabet.unmap(a, out);
}

void count_symbols(const FrameRealization& frame, const DataSoft& soft, MetricsRecord& rec) {
    const int N = frame.num_devices();
    const int P = frame.pilot_len;
    for (int n = 0; n < N; ++n) {
        for (int t = 0; t < frame.data_len; ++t) {
            const int truth = frame.symbols(n, P + t);
            const int dec = soft.decisions(n, t);
            if (frame.active[n]) {
                ++rec.active_symbols;
                if (dec != truth) ++rec.symbol_errors;
                if (dec == AugmentedAlphabet::kZero) ++rec.missed;
            } else {
                ++rec.inactive_symbols;
                if (dec != AugmentedAlphabet::kZero) ++rec.false_alarms;
            }
        }
    }
    rec.detected_symbols += static_cast<std::uint64_t>(N) * frame.data_len;
}

void count_uncoded_bits(const FrameRealization& frame, const DataSoft& soft, const AugmentedAlphabet& alphabet,
                        MetricsRecord& rec) {
    const int bps = alphabet.bits_per_symbol;
    std::vector<std::uint8_t> bits(bps);
    for (int n = 0; n < frame.num_devices(); ++n) {
        if (!frame.active[n]) continue;
        for (int t = 0; t < frame.data_len; ++t) {
            decision_bits(alphabet, soft.decisions(n, t), soft.soft(n, t), bits);
            for (int z = 0; z < bps; ++z) {
                if (bits[z] != frame.coded_bits[n][static_cast<std::size_t>(t) * bps + z]) ++rec.bit_errors;
                ++rec.bit_count;
            }
        }
    }
}

SymbolPriors activity_prior_table(const std::vector<double>& activity, int D, const AugmentedAlphabet& alphabet) {
    const int N = static_cast<int>(activity.size());
    SymbolPriors pr(N, D, alphabet.size());
    const std::vector<double> zero_llr(alphabet.bits_per_symbol, 0.0);
    for (int n = 0; n < N; ++n) {
        const auto p = symbol_priors(zero_llr, activity[n], alphabet);
        for (int t = 0; t < D; ++t) std::copy(p.begin(), p.end(), pr.at(n, t).begin());
    }
    return pr;
}

// Pilot-trained banks shared by the adaptive detectors of one trial.
struct TrainedBank {
    std::optional<FilterBank> bank;
    std::uint64_t cost = 0;
};

}  // namespace

std::string_view to_string(DetectorKind k) {
    for (const auto& d : kDetectorNames)
        if (d.kind == k) return d.name;
    return "?";
}

DetectorKind parse_detector(std::string_view name) {
    for (const auto& d : kDetectorNames)
        if (d.name == name) return d.kind;
    throw ConfigError("unknown detector '" + std::string(name) + "'");
}

std::optional<AdaptiveVariant> adaptive_variant(DetectorKind k) {
    switch (k) {
        case DetectorKind::AaRls: return AdaptiveVariant::AA_RLS;
        case DetectorKind::AaClRls: return AdaptiveVariant::AA_CL_RLS;
        case DetectorKind::AaRlsDf: return AdaptiveVariant::AA_RLS_DF;
        case DetectorKind::AaClDf: return AdaptiveVariant::AA_CL_DF;
        default: return std::nullopt;
    }
}

const std::vector<DetectorKind>& all_detectors() {
    static const std::vector<DetectorKind> all = [] {
        std::vector<DetectorKind> v;
        for (const auto& d : kDetectorNames) v.push_back(d.kind);
        return v;
    }();
    return all;
}

std::string_view to_string(CsiMode c) { return c == CsiMode::Perfect ? "perfect" : "imperfect"; }

CsiMode parse_csi(std::string_view name) {
    if (name == "perfect") return CsiMode::Perfect;
    if (name == "imperfect") return CsiMode::Imperfect;
    throw ConfigError("csi must be 'perfect' or 'imperfect'");
}

double ExperimentConfig::code_rate() const {
    if (!coded) return 1.0;
    return static_cast<double>(ldpc.build.n - ldpc.build.m) / ldpc.build.n;
}

void ExperimentConfig::validate() const {
    SystemConfig s = system;
    s.noise_var = 1.0;
    s.validate();
    if (detectors.empty()) throw ConfigError("detectors must not be empty");
    if (snr_db.empty()) throw ConfigError("snr_db grid must not be empty");
    for (double v : snr_db)
        if (!std::isfinite(v)) throw ConfigError("snr_db entries must be finite");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (!(csi_error_ratio >= 0.0)) throw ConfigError("csi_error_ratio must be >= 0");
    list.sac.validate();
    const int alphabet_size = build_alphabet(modulation).size();
    if (list.K < 1 || list.K > alphabet_size) throw ConfigError("list.K must be in [1, |A_0|]");
    rls.validate();
    if (threads < 0) throw ConfigError("threads must be >= 0");
    if (coded) {
        if (idd.iterations < 1) throw ConfigError("idd.iterations must be >= 1");
        if (idd.spa_max_iters < 1) throw ConfigError("idd.spa_max_iters must be >= 1");
        const int bps = build_alphabet(modulation).bits_per_symbol;
        if (ldpc.alist.empty()) {
            if (ldpc.build.n < 2 || ldpc.build.m < 1 || ldpc.build.m >= ldpc.build.n)
                throw ConfigError("ldpc: need 0 < m < n");
            if ((system.data_len * bps) % ldpc.build.n != 0)
                throw ConfigError("system.data_len * bits_per_symbol must be a multiple of ldpc.n");
        }
    }
}

MetricsRecord& MetricsRecord::operator+=(const MetricsRecord& o) {
    trials_run += o.trials_run;
    trials_skipped += o.trials_skipped;
    symbol_errors += o.symbol_errors;
    active_symbols += o.active_symbols;
    bit_errors += o.bit_errors;
    bit_count += o.bit_count;
    false_alarms += o.false_alarms;
    inactive_symbols += o.inactive_symbols;
    missed += o.missed;
    complex_mults += o.complex_mults;
    detected_symbols += o.detected_symbols;
    rls_resets += o.rls_resets;
    llr_underflows += o.llr_underflows;
    if (iteration_bit_errors.size() < o.iteration_bit_errors.size())
        iteration_bit_errors.resize(o.iteration_bit_errors.size(), 0);
    for (std::size_t i = 0; i < o.iteration_bit_errors.size(); ++i) iteration_bit_errors[i] += o.iteration_bit_errors[i];
    list += o.list;
    return *this;
}

std::optional<double> nser(const MetricsRecord& r) { return ratio(r.symbol_errors, r.active_symbols); }
std::optional<double> ber(const MetricsRecord& r) { return ratio(r.bit_errors, r.bit_count); }
std::optional<double> iteration_ber(const MetricsRecord& r, int iteration) {
    if (iteration < 1 || iteration > static_cast<int>(r.iteration_bit_errors.size())) return std::nullopt;
    return ratio(r.iteration_bit_errors[iteration - 1], r.bit_count);
}
std::optional<double> false_alarm_rate(const MetricsRecord& r) { return ratio(r.false_alarms, r.inactive_symbols); }
std::optional<double> miss_rate(const MetricsRecord& r) { return ratio(r.missed, r.active_symbols); }
std::optional<double> cmults_per_symbol(const MetricsRecord& r) {
    return ratio(r.complex_mults, r.detected_symbols);
}

const MetricsRecord& ExperimentResult::at(DetectorKind k, double snr_db) const {
    for (const auto& r : records)
        if (r.detector == k && r.snr_db == snr_db) return r;
    throw ContractViolation("no record for " + std::string(to_string(k)) + " at " + fmt_num(snr_db) + " dB");
}

LdpcCode make_code(const LdpcOptions& opts) {
    if (!opts.alist.empty()) {
        std::ifstream in(opts.alist);
        if (!in) throw ConfigError("ldpc.alist: cannot open '" + opts.alist + "'");
        return LdpcCode::read_alist(in);
    }
    return LdpcCode::build(opts.build, opts.seed);
}

std::vector<MetricsRecord> run_trial(const ExperimentConfig& cfg, std::size_t snr_index, std::uint64_t trial,
                                     const AugmentedAlphabet& alphabet, const LdpcCode* code,
                                     std::vector<Diagnostic>* diagnostics) {
    const double snr = cfg.snr_db.at(snr_index);
    SystemConfig sys = cfg.system;
    sys.noise_var = snr_to_noise_var(snr, sys.N, cfg.coded && code ? code->rate() : cfg.code_rate(), sys.symbol_var);
    sys.csi_error_var = cfg.csi == CsiMode::Imperfect ? cfg.csi_error_ratio * sys.noise_var : 0.0;

    std::vector<MetricsRecord> out(cfg.detectors.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i].detector = cfg.detectors[i];
        out[i].snr_db = snr;
    }
    auto note = [&](std::string kind, DetectorKind k, std::uint64_t count, std::string msg) {
        if (diagnostics) diagnostics->push_back({std::move(kind), k, snr, trial, count, std::move(msg)});
    };

    // The frame depends on the trial only, so every detector and every SNR
    // point sees the same channel, data and unit-variance noise draws.
    Rng rng = Rng::substream(cfg.seed, trial, "frame");
    FrameRealization frame;
    try {
        frame = draw_frame(sys, alphabet, rng, cfg.coded ? code : nullptr);
    } catch (const std::exception& e) {
        for (auto& r : out) {
            ++r.trials_skipped;
            note("skipped_trial", r.detector, 1, e.what());
        }
        return out;
    }
    const CMat H_eff = std::sqrt(sys.symbol_var) * frame.H_hat;

    std::array<TrainedBank, 2> banks;  // [plain, feedback]
    auto trained_bank = [&](bool feedback) -> TrainedBank& {
        TrainedBank& tb = banks[feedback ? 1 : 0];
        if (!tb.bank) {
            OpScope scope;
            FilterBank b(sys.N, sys.M, feedback, cfg.rls);
            b.set_use_regularized_order(cfg.regularized_order);
            b.set_order_periods(cfg.order_periods);
            b.train_on_pilots(frame.pilots, frame.pilot_rx(), sys.activity_prob);
            tb.cost = scope.elapsed();
            tb.bank = std::move(b);
        }
        return tb;
    };

    for (std::size_t i = 0; i < cfg.detectors.size(); ++i) {
        MetricsRecord& rec = out[i];
        const DetectorKind kind = cfg.detectors[i];
        try {
            std::uint64_t cost = 0;
            std::unique_ptr<FrameDetector> det;
            AdaptiveDetector* adaptive = nullptr;
            SicDetector* sic = nullptr;
            {
                if (const auto v = adaptive_variant(kind)) {
                    TrainedBank& tb = trained_bank(uses_feedback(*v));
                    cost += tb.cost;
                    OpScope scope;
                    auto a = std::make_unique<AdaptiveDetector>(*v, alphabet, *tb.bank, H_eff, cfg.list);
                    a->set_track_equivalent_channel(cfg.coded);
                    a->set_restart_from_pilots(cfg.idd.restart_from_pilots);
                    a->set_reorder_in_data(cfg.reorder_in_data);
                    adaptive = a.get();
                    det = std::move(a);
                    cost += scope.elapsed();
                } else {
                    OpScope scope;
                    switch (kind) {
                        case DetectorKind::Lmmse:
                            det = std::make_unique<LinearFrameDetector>(alphabet, H_eff, sys.activity_prob,
                                                                        sys.noise_var);
                            break;
                        case DetectorKind::OracleLmmse:
                            det = std::make_unique<LinearFrameDetector>(
                                LinearFrameDetector::oracle(alphabet, H_eff, frame.active, sys.noise_var));
                            break;
                        default: {
                            SicParams p;
                            p.ordering = cfg.sic_ordering;
                            if (kind == DetectorKind::AaMfSic) {
                                p.filter = SicFilter::Mmse;
                                p.list = true;
                                p.list_params = cfg.list;
                            }
                            auto s = std::make_unique<SicDetector>(alphabet, H_eff, sys.activity_prob, sys.noise_var, p);
                            sic = s.get();
                            det = std::move(s);
                        }
                    }
                    cost += scope.elapsed();
                }
            }

            OpScope scope;
            if (cfg.coded) {
                IddParams ip;
                ip.iterations = cfg.idd.iterations;
                ip.max_spa_iters = cfg.idd.spa_max_iters;
                const IddResult res = idd_run(frame, *det, *code, alphabet, det->activity(sys.activity_prob), ip);
                count_symbols(frame, res.last, rec);
                rec.bit_errors += res.bit_errors.back();
                rec.bit_count += res.bits_per_iteration;
                rec.iteration_bit_errors.assign(res.bit_errors.begin(), res.bit_errors.end());
                rec.llr_underflows += res.llr_underflows;
                if (res.llr_underflows > 0) note("llr_underflow", kind, res.llr_underflows, "");
            } else {
                const SymbolPriors priors =
                    activity_prior_table(det->activity(sys.activity_prob), frame.data_len, alphabet);
                const DataSoft soft = det->detect_data(frame, &priors);
                count_symbols(frame, soft, rec);
                count_uncoded_bits(frame, soft, alphabet, rec);
            }
            cost += scope.elapsed();
            rec.complex_mults += cost;
            if (adaptive) {
                rec.list += adaptive->list_stats();
                const auto resets = static_cast<std::uint64_t>(adaptive->bank().resets());
                rec.rls_resets += resets;
                if (resets > 0) note("rls_reset", kind, resets, "inverse correlation reinitialised");
            }
            if (sic) rec.list += sic->list_stats();
            ++rec.trials_run;
        } catch (const std::exception& e) {
            rec = MetricsRecord{};
            rec.detector = kind;
            rec.snr_db = snr;
            rec.trials_skipped = 1;
            note("skipped_trial", kind, 1, e.what());
        }
    }
    return out;
}

namespace {

struct Job {
    std::vector<MetricsRecord> records;
    std::vector<Diagnostic> diagnostics;
};

ExperimentResult merge(const ExperimentConfig& cfg, const std::vector<Job>& jobs) {
    const std::size_t S = cfg.snr_db.size();
    const std::size_t V = cfg.detectors.size();
    ExperimentResult res;
    res.records.resize(V * S);
    for (std::size_t v = 0; v < V; ++v) {
        for (std::size_t s = 0; s < S; ++s) {
            auto& r = res.records[v * S + s];
            r.detector = cfg.detectors[v];
            r.snr_db = cfg.snr_db[s];
        }
    }
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const std::size_t s = j / static_cast<std::size_t>(cfg.trials);
        for (std::size_t v = 0; v < V && v < jobs[j].records.size(); ++v) res.records[v * S + s] += jobs[j].records[v];
        res.diagnostics.insert(res.diagnostics.end(), jobs[j].diagnostics.begin(), jobs[j].diagnostics.end());
    }
    return res;
}

ExperimentResult run_impl(const ExperimentConfig& cfg, bool parallel) {
    cfg.validate();
    const AugmentedAlphabet alphabet = build_alphabet(cfg.modulation);
    std::optional<LdpcCode> code;
    if (cfg.coded) {
        code = make_code(cfg.ldpc);
        if ((cfg.system.data_len * alphabet.bits_per_symbol) % code->n() != 0)
            throw ConfigError("system.data_len * bits_per_symbol must be a multiple of the code length");
    }
    const LdpcCode* cp = code ? &*code : nullptr;

    const auto trials = static_cast<std::int64_t>(cfg.trials);
    const auto njobs = static_cast<std::int64_t>(cfg.snr_db.size()) * trials;
    std::vector<Job> jobs(static_cast<std::size_t>(njobs));
    auto work = [&](std::int64_t j) {
        Job& job = jobs[static_cast<std::size_t>(j)];
        job.records = run_trial(cfg, static_cast<std::size_t>(j / trials), static_cast<std::uint64_t>(j % trials),
                                alphabet, cp, &job.diagnostics);
    };

    if (parallel) {
        const int threads = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
        // Eigen must not spawn its own threads inside a trial.
        Eigen::setNbThreads(1);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
        for (std::int64_t j = 0; j < njobs; ++j) work(j);
    } else {
        for (std::int64_t j = 0; j < njobs; ++j) work(j);
    }
    return merge(cfg, jobs);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) { return run_impl(cfg, true); }
ExperimentResult run_experiment_serial(const ExperimentConfig& cfg) { return run_impl(cfg, false); }

void write_csv(std::ostream& os, const ExperimentConfig& cfg, const ExperimentResult& res) {
    os << kCsvHeader << '\n';
    const int idd_iter = cfg.coded ? cfg.idd.iterations : 0;
    for (const auto& r : res.records) {
        os << to_string(r.detector) << ',' << fmt_num(r.snr_db) << ',' << to_string(cfg.csi) << ','
           << (cfg.coded ? 1 : 0) << ',' << idd_iter << ',' << r.trials_run << ',' << fmt_rate(nser(r)) << ','
           << fmt_rate(ber(r)) << ',' << fmt_rate(false_alarm_rate(r)) << ',' << fmt_rate(miss_rate(r)) << ',';
        if (const auto c = cmults_per_symbol(r)) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.1f", *c);
            os << buf;
        } else {
            os << "NA";
        }
        os << ',' << cfg.seed << '\n';
    }
}

void write_diagnostics(std::ostream& os, const ExperimentResult& res) {
    for (const auto& d : res.diagnostics) {
        os << "kind=" << d.kind << " variant=" << to_string(d.detector) << " snr_db=" << fmt_num(d.snr_db)
           << " trial=" << d.trial << " count=" << d.count;
        if (!d.message.empty()) os << " message=\"" << d.message << '"';
        os << '\n';
    }
}

bool le_with_slack(std::uint64_t err_a, std::uint64_t n_a, std::uint64_t err_b, std::uint64_t n_b, double sigmas) {
    require(n_a > 0 && n_b > 0, "le_with_slack: empty sample");
    const double pa = static_cast<double>(err_a) / static_cast<double>(n_a);
    const double pb = static_cast<double>(err_b) / static_cast<double>(n_b);
    const double sd = std::sqrt(pa * (1.0 - pa) / static_cast<double>(n_a) + pb * (1.0 - pb) / static_cast<double>(n_b));
    return pa <= pb + sigmas * sd;
}

}  // namespace mmtc
