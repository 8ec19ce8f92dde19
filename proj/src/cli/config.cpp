#include "moluq/cli/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "moluq/common/error.hpp"
#include "moluq/common/hash.hpp"

namespace moluq::cli {

namespace {

struct SchemaEntry {
    const char* key;
    const char* paper_default;
    const char* desk_default;  // nullptr = same as paper
};

// Paper constants are the paper-profile defaults; the desk profile shrinks
// only what dominates runtime (network width, epochs).
constexpr SchemaEntry kSchema[] = {
    {"profile", "paper", "desk"},
    {"master_seed", "20240101", nullptr},
    {"datasets", "", nullptr},
    {"clogp.generate", "false", nullptr},
    {"splits.random", "8", nullptr},
    {"splits.scaffold", "true", nullptr},
    {"estimators", "all", nullptr},
    {"workers", "1", nullptr},
    {"ensemble.size", "16", nullptr},
    {"bootstrap.fraction", "0.25", nullptr},
    {"snapshot.period", "3", nullptr},
    {"dropout.rates", "0.10;0.20", nullptr},
    {"dropout.passes", "16", nullptr},
    {"distance.k", "8", nullptr},
    {"forest.trees", "128", nullptr},
    {"forest.min_leaf", "3", nullptr},
    {"gp.noise", "0.1", nullptr},
    {"gp.prior_variance", "1.0", nullptr},
    {"fingerprint.length", "2048", nullptr},
    {"fingerprint.radius", "3", nullptr},
    {"net.hidden", "300", "64"},
    {"net.message_steps", "3", nullptr},
    {"net.dense_layers", "2", nullptr},
    {"net.epochs", "50", "30"},
    {"net.batch", "50", "32"},
    {"net.lr_max", "5e-3", nullptr},
    {"net.lr_init", "5e-4", nullptr},
    {"net.warmup_fraction", "0.1", nullptr},
    {"net.patience", "5", nullptr},
    {"mve.variance_floor", "1e-6", nullptr},
};

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ';')) {
        for (auto& piece : {item}) {
            std::istringstream comma(piece);
            std::string sub;
            while (std::getline(comma, sub, ',')) {
                const std::string t = trim(sub);
                if (!t.empty()) out.push_back(t);
            }
        }
    }
    return out;
}

bool known_key(const std::string& key) {
    for (const auto& e : kSchema) {
        if (key == e.key) return true;
    }
    return false;
}

int to_int(const std::map<std::string, std::string>& kv, const char* key) {
    const std::string& v = kv.at(key);
    try {
        std::size_t used = 0;
        const int out = std::stoi(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(std::string(key) + ": expected an integer, got '" + v + "'");
    }
}

double to_double(const std::map<std::string, std::string>& kv, const char* key) {
    const std::string& v = kv.at(key);
    try {
        std::size_t used = 0;
        const double out = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return out;
    } catch (const std::exception&) {
        throw ConfigError(std::string(key) + ": expected a number, got '" + v + "'");
    }
}

bool to_bool(const std::map<std::string, std::string>& kv, const char* key) {
    const std::string& v = kv.at(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(std::string(key) + ": expected true/false, got '" + v + "'");
}

}  // namespace

std::string Config::hash() const {
    std::string canonical;
    for (const auto& [k, v] : effective) {
        canonical += k;
        canonical += '=';
        canonical += v;
        canonical += '\n';
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical)));
    return buf;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_text(buffer.str());
}

Config Config::from_text(const std::string& text) {
    // Pass 1: raw keys from the file.
    std::map<std::string, std::string> raw;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (!known_key(key)) {
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" +
                              key + "'");
        }
        if (raw.count(key)) {
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" +
                              key + "'");
        }
        raw[key] = value;
    }

    // Pass 2: profile defaults, then explicit keys.
    std::string profile = "paper";
    if (auto it = raw.find("profile"); it != raw.end()) profile = it->second;
    if (profile != "paper" && profile != "desk") {
        throw ConfigError("profile: expected 'paper' or 'desk', got '" + profile + "'");
    }
    std::map<std::string, std::string> kv;
    for (const auto& e : kSchema) {
        kv[e.key] = (profile == "desk" && e.desk_default != nullptr) ? e.desk_default
                                                                     : e.paper_default;
    }
    kv["profile"] = profile;
    for (const auto& [k, v] : raw) kv[k] = v;

    Config c;
    c.effective = kv;
    c.profile = profile;
    c.master_seed = static_cast<std::uint64_t>(std::stoull(kv.at("master_seed")));
    c.dataset_paths = split_list(kv.at("datasets"));
    c.generate_clogp = to_bool(kv, "clogp.generate");
    c.random_splits = to_int(kv, "splits.random");
    c.scaffold_split = to_bool(kv, "splits.scaffold");
    c.workers = to_int(kv, "workers");

    const auto estimator_list = split_list(kv.at("estimators"));
    if (estimator_list.empty()) throw ConfigError("estimators: empty list");
    if (estimator_list.size() == 1 && estimator_list[0] == "all") {
        c.estimators = uq::full_roster();
    } else {
        for (const auto& id : estimator_list) {
            if (!uq::is_known_estimator(id)) {
                throw ConfigError("estimators: unknown id '" + id + "'");
            }
        }
        c.estimators = estimator_list;
    }

    uq::EstimatorConfig& e = c.estimator;
    e.ensemble_size = to_int(kv, "ensemble.size");
    e.bootstrap_fraction = to_double(kv, "bootstrap.fraction");
    e.snapshot_period = to_int(kv, "snapshot.period");
    e.dropout_rates.clear();
    for (const auto& r : split_list(kv.at("dropout.rates"))) {
        try {
            e.dropout_rates.push_back(std::stod(r));
        } catch (const std::exception&) {
            throw ConfigError("dropout.rates: bad rate '" + r + "'");
        }
    }
    if (e.dropout_rates.size() != 2) {
        throw ConfigError("dropout.rates: expected exactly two rates");
    }
    e.dropout_passes = to_int(kv, "dropout.passes");
    e.knn_k = to_int(kv, "distance.k");
    e.forest_trees = to_int(kv, "forest.trees");
    e.forest_min_leaf = to_int(kv, "forest.min_leaf");
    e.gp_noise = to_double(kv, "gp.noise");
    e.gp_prior_variance = to_double(kv, "gp.prior_variance");
    e.fingerprint_length = to_int(kv, "fingerprint.length");
    e.fingerprint_radius = to_int(kv, "fingerprint.radius");
    e.net.hidden_size = to_int(kv, "net.hidden");
    e.net.message_steps = to_int(kv, "net.message_steps");
    e.net.dense_layers = to_int(kv, "net.dense_layers");
    e.net.variance_floor = to_double(kv, "mve.variance_floor");
    e.schedule.epochs = to_int(kv, "net.epochs");
    e.schedule.batch_size = to_int(kv, "net.batch");
    e.schedule.lr_max = to_double(kv, "net.lr_max");
    e.schedule.lr_init = to_double(kv, "net.lr_init");
    e.schedule.warmup_fraction = to_double(kv, "net.warmup_fraction");
    e.schedule.patience = to_int(kv, "net.patience");

    if (c.random_splits < 0) throw ConfigError("splits.random: must be >= 0");
    if (c.random_splits == 0 && !c.scaffold_split) {
        throw ConfigError("no splits configured");
    }
    if (c.workers < 1) throw ConfigError("workers: must be >= 1");
    if (e.ensemble_size < 2) throw ConfigError("ensemble.size: must be >= 2");
    if (!(e.bootstrap_fraction > 0.0 && e.bootstrap_fraction <= 1.0)) {
        throw ConfigError("bootstrap.fraction: must be in (0,1]");
    }
    if (e.fingerprint_length < 8) throw ConfigError("fingerprint.length: must be >= 8");
    if (e.fingerprint_radius < 0) throw ConfigError("fingerprint.radius: must be >= 0");
    for (double r : e.dropout_rates) {
        if (!(r > 0.0 && r < 1.0)) throw ConfigError("dropout.rates: rates must be in (0,1)");
    }
    return c;
}

std::string Config::schema_text() {
    std::ostringstream out;
    out << "key\tpaper_default\tdesk_default\n";
    for (const auto& e : kSchema) {
        out << e.key << '\t' << e.paper_default << '\t'
            << (e.desk_default != nullptr ? e.desk_default : e.paper_default) << '\n';
    }
    return out.str();
}

}  // namespace moluq::cli
