// Command-line front end for the mMTC detection simulator.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmtc/config.hpp"
#include "mmtc/harness.hpp"

namespace fs = std::filesystem;
using namespace mmtc;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kRuntimeError = 2, kPartial = 3 };

std::optional<std::string> env_seed() {
    if (const char* s = std::getenv("MMTC_SEED")) return std::string(s);
    return std::nullopt;
}

std::string rate(const std::optional<double>& v) {
    if (!v) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4e", *v);
    return buf;
}

void print_summary(const std::string& title, const ExperimentResult& res) {
    std::printf("%s\n", title.c_str());
    std::printf("  %-13s %7s %8s %12s %12s %12s %14s\n", "variant", "snr_db", "trials", "nser", "ber", "fa_rate",
                "cmults/symbol");
    for (const auto& r : res.records) {
        const auto c = cmults_per_symbol(r);
        std::printf("  %-13s %7g %8llu %12s %12s %12s %14.0f\n", std::string(to_string(r.detector)).c_str(), r.snr_db,
                    static_cast<unsigned long long>(r.trials_run), rate(nser(r)).c_str(), rate(ber(r)).c_str(),
                    rate(false_alarm_rate(r)).c_str(), c ? *c : 0.0);
    }
}

bool any_skipped(const ExperimentResult& res) {
    for (const auto& r : res.records)
        if (r.trials_skipped > 0) return true;
    return false;
}

// Writes results and diagnostics; returns false on I/O failure.
bool write_outputs(const fs::path& dir, const std::string& stem, const ExperimentConfig& cfg,
                   const ExperimentResult& res) {
    std::ofstream csv(dir / (stem + ".csv"));
    write_csv(csv, cfg, res);
    std::ofstream diag(dir / (stem + ".diagnostics.log"));
    write_diagnostics(diag, res);
    csv.close();
    diag.close();
    return csv.good() && diag.good();
}

int cmd_run(const std::string& config, const std::vector<std::string>& sets, const fs::path& out) {
    const ExperimentConfig cfg = load_config(config, sets, env_seed());
    fs::create_directories(out);
    const ExperimentResult res = run_experiment(cfg);
    if (!write_outputs(out, "results", cfg, res)) {
        std::cerr << "error: could not write results to " << out << '\n';
        return kRuntimeError;
    }
    print_summary("results (" + std::string(to_string(cfg.csi)) + " CSI, " + (cfg.coded ? "coded" : "uncoded") + ")",
                  res);
    return any_skipped(res) ? kPartial : kOk;
}

int cmd_sweep(const std::string& config, const std::vector<std::string>& sets, const fs::path& out) {
    const Json doc = load_config_doc(config, sets, env_seed());
    std::vector<std::pair<std::string, ExperimentConfig>> runs;
    for (const bool coded : {false, true}) {
        for (const char* csi : {"perfect", "imperfect"}) {
            Json d = doc;
            d["coded"] = coded;
            d["csi"] = csi;
            runs.emplace_back(std::string(coded ? "coded_" : "uncoded_") + csi, config_from_json(d));
        }
    }
    fs::create_directories(out);
    bool partial = false;
    for (const auto& [stem, cfg] : runs) {
        const ExperimentResult res = run_experiment(cfg);
        if (!write_outputs(out, stem, cfg, res)) {
            std::cerr << "error: could not write " << stem << " to " << out << '\n';
            return kRuntimeError;
        }
        print_summary(stem, res);
        partial = partial || any_skipped(res);
    }
    return partial ? kPartial : kOk;
}

int cmd_complexity(const std::string& config, const std::vector<std::string>& sets, const fs::path& out,
                   const std::vector<int>& sizes, int trials, double snr) {
    const Json doc = load_config_doc(config, sets, env_seed());
    fs::create_directories(out);
    std::ofstream csv(out / "complexity.csv");
    csv << "variant,N,M,trials,cmults_per_symbol\n";
    std::vector<ExperimentResult> results;
    std::vector<ExperimentConfig> cfgs;
    for (int n : sizes) {
        Json d = doc;
        d["system"]["N"] = n;
        d["system"]["M"] = n;
        d["trials"] = trials;
        d["snr_db"] = Json::array({snr});
        const ExperimentConfig cfg = config_from_json(d);
        results.push_back(run_experiment(cfg));
        cfgs.push_back(cfg);
    }

    std::printf("complex multiplications per detected symbol (N = M, %g dB)\n  %-13s", snr, "variant");
    for (int n : sizes) std::printf(" %12s", ("N=" + std::to_string(n)).c_str());
    std::printf("\n");
    const auto& dets = cfgs.front().detectors;
    for (std::size_t v = 0; v < dets.size(); ++v) {
        std::printf("  %-13s", std::string(to_string(dets[v])).c_str());
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            const auto& r = results[i].records[v];
            const auto c = cmults_per_symbol(r);
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.1f", c ? *c : 0.0);
            csv << to_string(dets[v]) << ',' << sizes[i] << ',' << sizes[i] << ',' << r.trials_run << ','
                << (c ? buf : "NA") << '\n';
            std::printf(" %12.0f", c ? *c : 0.0);
        }
        std::printf("\n");
    }
    csv.close();
    if (!csv.good()) {
        std::cerr << "error: could not write complexity.csv\n";
        return kRuntimeError;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Activity-aware adaptive detection simulator for grant-free mMTC uplinks"};
    app.require_subcommand(1);

    std::string config;
    std::vector<std::string> sets;
    std::string out = ".";
    auto common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("-c,--config", config, "JSON configuration file")->check(CLI::ExistingFile);
        sub->add_option("--set", sets, "Override a config field, e.g. --set system.N=64")->take_all();
        if (with_out) sub->add_option("-o,--out", out, "Output directory")->capture_default_str();
    };

    auto* run = app.add_subcommand("run", "Run one experiment and write results.csv");
    common(run, true);
    auto* sweep = app.add_subcommand("sweep", "Uncoded/coded x perfect/imperfect CSI sweeps");
    common(sweep, true);
    auto* cx = app.add_subcommand("complexity", "Complex multiplications per symbol versus N (N = M)");
    common(cx, true);
    std::vector<int> sizes{16, 32, 64, 128};
    int cx_trials = 3;
    double cx_snr = 12.0;
    cx->add_option("--sizes", sizes, "Values of N")->capture_default_str();
    cx->add_option("--trials", cx_trials, "Trials per size")->capture_default_str();
    cx->add_option("--snr", cx_snr, "SNR in dB")->capture_default_str();
    auto* val = app.add_subcommand("validate-config", "Check a config and print the resolved form");
    common(val, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (val->parsed()) {
            const ExperimentConfig cfg = load_config(config, sets, env_seed());
            std::cout << config_to_json(cfg).dump(2) << '\n';
            return kOk;
        }
        if (run->parsed()) return cmd_run(config, sets, out);
        if (sweep->parsed()) return cmd_sweep(config, sets, out);
        if (cx->parsed()) return cmd_complexity(config, sets, out, sizes, cx_trials, cx_snr);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}
