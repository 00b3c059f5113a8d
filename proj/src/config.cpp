#include "mmtc/config.hpp"

#include <fstream>

namespace mmtc {

namespace {

const char* kind_name(Json::value_t t) {
    switch (t) {
        case Json::value_t::null: return "null";
        case Json::value_t::object: return "object";
        case Json::value_t::array: return "array";
        case Json::value_t::string: return "string";
        case Json::value_t::boolean: return "boolean";
        case Json::value_t::number_integer:
        case Json::value_t::number_unsigned: return "integer";
        case Json::value_t::number_float: return "number";
        default: return "value";
    }
}

// Recursive merge; every key of `over` must exist in `base`.
void merge_into(Json& base, const Json& over, const std::string& prefix) {
    if (!over.is_object()) throw ConfigError((prefix.empty() ? "config" : prefix) + " must be an object");
    for (auto it = over.begin(); it != over.end(); ++it) {
        const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key())) throw ConfigError("unknown config field '" + key + "'");
        Json& slot = base[it.key()];
        if (slot.is_object() && it.value().is_object()) {
            merge_into(slot, it.value(), key);
        } else {
            slot = it.value();
        }
    }
}

const Json& field(const Json& doc, const std::string& dotted) {
    const Json* cur = &doc;
    std::size_t start = 0;
    while (true) {
        const auto dot = dotted.find('.', start);
        const std::string part = dotted.substr(start, dot - start);
        if (!cur->is_object() || !cur->contains(part)) throw ConfigError("missing config field '" + dotted + "'");
        cur = &(*cur)[part];
        if (dot == std::string::npos) return *cur;
        start = dot + 1;
    }
}

template <typename T>
T get(const Json& doc, const std::string& key) {
    const Json& v = field(doc, key);
    try {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError("");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError("");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError("");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError("");
        }
        return v.get<T>();
    } catch (const std::exception&) {
        throw ConfigError("config field '" + key + "' has the wrong type (" + kind_name(v.type()) + ")");
    }
}

std::uint64_t parse_seed(const Json& v, const std::string& key) {
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        try {
            std::size_t pos = 0;
            const auto out = std::stoull(s, &pos, 0);
            if (pos == s.size()) return out;
        } catch (const std::exception&) {
        }
    }
    throw ConfigError("config field '" + key + "' must be a non-negative 64-bit integer");
}

}  // namespace

Json default_config_json() {
    const SystemConfig sys;
    const ExperimentConfig e;
    const LdpcCode::BuildParams lp;
    return Json{
        {"system",
         {{"N", sys.N},
          {"M", sys.M},
          {"activity_prob", 0.2},
          {"symbol_var", sys.symbol_var},
          {"pilot_len", sys.pilot_len},
          {"data_len", nullptr}}},
        {"modulation", "qpsk"},
        {"detectors", Json::array({"lmmse", "oracle_lmmse", "sa_sic", "aa_mf_sic", "aa_rls", "aa_cl_rls",
                                   "aa_rls_df", "aa_cl_df"})},
        {"snr_db", Json::array({0, 2, 4, 6, 8, 10, 12, 14, 16})},
        {"trials", e.trials},
        {"coded", false},
        {"idd",
         {{"iterations", e.idd.iterations},
          {"spa_max_iters", e.idd.spa_max_iters},
          {"restart_from_pilots", e.idd.restart_from_pilots}}},
        {"seed", e.seed},
        {"csi", "perfect"},
        {"csi_error_ratio", e.csi_error_ratio},
        {"list", {{"K", e.list.K}, {"sac_lambda", e.list.sac.lambda_rel}, {"sac_mode", "normal"}}},
        {"rls",
         {{"preset", "std"},
          {"lambda", nullptr},
          {"gamma", nullptr},
          {"beta", nullptr},
          {"delta", nullptr},
          {"regularized_order", true},
          {"reorder_in_data", false},
          {"order_periods", e.order_periods}}},
        {"sic_ordering", "norm"},
        {"ldpc", {{"n", lp.n}, {"m", lp.m}, {"col_weight", lp.col_weight}, {"seed", e.ldpc.seed}, {"alist", ""}}},
        {"threads", 0},
    };
}

void apply_override(Json& cfg, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) throw ConfigError("override must look like key=value: '" +
                                                                   std::string(assignment) + "'");
    const std::string key(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));
    Json value = Json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;

    Json* cur = &cfg;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot - start);
        if (!cur->is_object() || !cur->contains(part)) throw ConfigError("unknown config field '" + key + "'");
        cur = &(*cur)[part];
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    *cur = std::move(value);
}

Json merge_config(const Json& user) {
    Json out = default_config_json();
    if (!user.is_null()) merge_into(out, user, "");
    return out;
}

ExperimentConfig config_from_json(const Json& doc) {
    ExperimentConfig c;
    c.coded = get<bool>(doc, "coded");

    auto& s = c.system;
    s.N = get<int>(doc, "system.N");
    s.M = get<int>(doc, "system.M");
    if (s.N < 1) throw ConfigError("system.N must be >= 1");
    const Json& ap = field(doc, "system.activity_prob");
    if (ap.is_number()) {
        s.activity_prob.assign(s.N, ap.get<double>());
    } else if (ap.is_array()) {
        s.activity_prob.clear();
        for (const auto& v : ap) {
            if (!v.is_number()) throw ConfigError("system.activity_prob entries must be numbers");
            s.activity_prob.push_back(v.get<double>());
        }
    } else {
        throw ConfigError("system.activity_prob must be a number or an array");
    }
    s.symbol_var = get<double>(doc, "system.symbol_var");
    s.pilot_len = get<int>(doc, "system.pilot_len");
    const Json& dl = field(doc, "system.data_len");
    s.data_len = dl.is_null() ? (c.coded ? 128 : 32) : get<int>(doc, "system.data_len");

    c.modulation = parse_modulation(get<std::string>(doc, "modulation"));
    c.detectors.clear();
    const Json& dets = field(doc, "detectors");
    if (!dets.is_array()) throw ConfigError("detectors must be an array of names");
    for (const auto& d : dets) {
        if (!d.is_string()) throw ConfigError("detectors must be an array of names");
        c.detectors.push_back(parse_detector(d.get<std::string>()));
    }
    const Json& grid = field(doc, "snr_db");
    c.snr_db.clear();
    if (grid.is_number()) {
        c.snr_db.push_back(grid.get<double>());
    } else if (grid.is_array()) {
        for (const auto& v : grid) {
            if (!v.is_number()) throw ConfigError("snr_db entries must be numbers");
            c.snr_db.push_back(v.get<double>());
        }
    } else {
        throw ConfigError("snr_db must be a number or an array");
    }
    c.trials = get<int>(doc, "trials");
    c.idd.iterations = get<int>(doc, "idd.iterations");
    c.idd.spa_max_iters = get<int>(doc, "idd.spa_max_iters");
    c.idd.restart_from_pilots = get<bool>(doc, "idd.restart_from_pilots");
    c.seed = parse_seed(field(doc, "seed"), "seed");
    c.csi = parse_csi(get<std::string>(doc, "csi"));
    c.csi_error_ratio = get<double>(doc, "csi_error_ratio");

    c.list.K = get<int>(doc, "list.K");
    c.list.sac.lambda_rel = get<double>(doc, "list.sac_lambda");
    const std::string mode = get<std::string>(doc, "list.sac_mode");
    if (mode == "normal") {
        c.list.sac.mode = SacMode::Normal;
    } else if (mode == "always_reliable") {
        c.list.sac.mode = SacMode::AlwaysReliable;
    } else if (mode == "always_unreliable") {
        c.list.sac.mode = SacMode::AlwaysUnreliable;
    } else {
        throw ConfigError("list.sac_mode must be normal, always_reliable or always_unreliable");
    }

    c.rls = RlsHyperParams::preset(get<std::string>(doc, "rls.preset"));
    auto opt = [&](const char* key, double& dst) {
        if (!field(doc, key).is_null()) dst = get<double>(doc, key);
    };
    opt("rls.lambda", c.rls.lambda);
    opt("rls.gamma", c.rls.gamma);
    opt("rls.beta", c.rls.beta);
    opt("rls.delta", c.rls.delta);
    c.regularized_order = get<bool>(doc, "rls.regularized_order");
    c.reorder_in_data = get<bool>(doc, "rls.reorder_in_data");
    c.order_periods = get<int>(doc, "rls.order_periods");
    if (c.order_periods < 0) throw ConfigError("rls.order_periods must be >= 0");

    const std::string ord = get<std::string>(doc, "sic_ordering");
    if (ord == "norm") {
        c.sic_ordering = SicOrdering::Norm;
    } else if (ord == "sinr") {
        c.sic_ordering = SicOrdering::Sinr;
    } else {
        throw ConfigError("sic_ordering must be 'norm' or 'sinr'");
    }

    c.ldpc.build.n = get<int>(doc, "ldpc.n");
    c.ldpc.build.m = get<int>(doc, "ldpc.m");
    c.ldpc.build.col_weight = get<int>(doc, "ldpc.col_weight");
    c.ldpc.seed = parse_seed(field(doc, "ldpc.seed"), "ldpc.seed");
    c.ldpc.alist = get<std::string>(doc, "ldpc.alist");
    c.threads = get<int>(doc, "threads");

    c.validate();
    return c;
}

Json config_to_json(const ExperimentConfig& c) {
    Json dets = Json::array();
    for (auto d : c.detectors) dets.push_back(std::string(to_string(d)));
    Json ap = Json::array();
    for (double p : c.system.activity_prob) ap.push_back(p);
    const char* mode = c.list.sac.mode == SacMode::Normal           ? "normal"
                       : c.list.sac.mode == SacMode::AlwaysReliable ? "always_reliable"
                                                                    : "always_unreliable";
    return Json{
        {"system",
         {{"N", c.system.N},
          {"M", c.system.M},
          {"activity_prob", ap},
          {"symbol_var", c.system.symbol_var},
          {"pilot_len", c.system.pilot_len},
          {"data_len", c.system.data_len}}},
        {"modulation", "qpsk"},
        {"detectors", dets},
        {"snr_db", c.snr_db},
        {"trials", c.trials},
        {"coded", c.coded},
        {"idd",
         {{"iterations", c.idd.iterations},
          {"spa_max_iters", c.idd.spa_max_iters},
          {"restart_from_pilots", c.idd.restart_from_pilots}}},
        {"seed", c.seed},
        {"csi", std::string(to_string(c.csi))},
        {"csi_error_ratio", c.csi_error_ratio},
        {"list", {{"K", c.list.K}, {"sac_lambda", c.list.sac.lambda_rel}, {"sac_mode", mode}}},
        {"rls",
         {{"preset", "std"},
          {"lambda", c.rls.lambda},
          {"gamma", c.rls.gamma},
          {"beta", c.rls.beta},
          {"delta", c.rls.delta},
          {"regularized_order", c.regularized_order},
          {"reorder_in_data", c.reorder_in_data},
          {"order_periods", c.order_periods}}},
        {"sic_ordering", c.sic_ordering == SicOrdering::Norm ? "norm" : "sinr"},
        {"ldpc",
         {{"n", c.ldpc.build.n},
          {"m", c.ldpc.build.m},
          {"col_weight", c.ldpc.build.col_weight},
          {"seed", c.ldpc.seed},
          {"alist", c.ldpc.alist}}},
        {"threads", c.threads},
    };
}

Json load_config_doc(const std::string& path, const std::vector<std::string>& overrides,
                     std::optional<std::string> env_seed) {
    Json user;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file '" + path + "'");
        try {
            user = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
        }
    }
    Json doc = merge_config(user);
    for (const auto& o : overrides) apply_override(doc, o);
    if (env_seed && !env_seed->empty()) doc["seed"] = *env_seed;
    return doc;
}

ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides,
                             std::optional<std::string> env_seed) {
    return config_from_json(load_config_doc(path, overrides, std::move(env_seed)));
}

}  // namespace mmtc
