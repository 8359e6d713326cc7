#include "audit/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace audit {

namespace {

struct TomlValue {
    std::string raw;             // scalar token (unquoted strings kept as-is)
    bool is_string = false;
    std::vector<TomlValue> array;
    bool is_array = false;
    int line = 0;
};

[[noreturn]] void fail(int line, const std::string& msg) {
    throw std::invalid_argument("config line " + std::to_string(line) + ": " + msg);
}

std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Drops a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_str = !in_str;
        if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

TomlValue parse_scalar(const std::string& tok, int line) {
    TomlValue v;
    v.line = line;
    if (tok.size() >= 2 && tok.front() == '"' && tok.back() == '"') {
        v.is_string = true;
        v.raw = tok.substr(1, tok.size() - 2);
        if (v.raw.find('"') != std::string::npos) fail(line, "escaped quotes are not supported");
    } else {
        v.raw = tok;
        if (v.raw.empty()) fail(line, "empty value");
    }
    return v;
}

TomlValue parse_value(const std::string& text, int line) {
    std::string t = strip(text);
    if (t.empty()) fail(line, "missing value");
    if (t.front() != '[') return parse_scalar(t, line);
    if (t.back() != ']') fail(line, "unterminated array");
    TomlValue v;
    v.is_array = true;
    v.line = line;
    std::string inner = strip(t.substr(1, t.size() - 2));
    if (inner.empty()) return v;
    std::size_t start = 0;
    bool in_str = false;
    for (std::size_t i = 0; i <= inner.size(); ++i) {
        if (i < inner.size() && inner[i] == '"') in_str = !in_str;
        if (i == inner.size() || (inner[i] == ',' && !in_str)) {
            v.array.push_back(parse_scalar(strip(inner.substr(start, i - start)), line));
            start = i + 1;
        }
    }
    return v;
}

std::map<std::string, TomlValue> parse_toml(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file " + path);
    std::map<std::string, TomlValue> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        std::string t = strip(strip_comment(line));
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') fail(lineno, "malformed section header");
            continue;  // sections only organize the file; keys are global
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos) fail(lineno, "expected key = value");
        std::string key = strip(t.substr(0, eq));
        if (key.empty()) fail(lineno, "empty key");
        if (kv.count(key)) fail(lineno, "duplicate key '" + key + "'");
        kv[key] = parse_value(t.substr(eq + 1), lineno);
    }
    return kv;
}

long to_int(const TomlValue& v, const std::string& key) {
    if (v.is_string || v.is_array) fail(v.line, "'" + key + "' must be an integer");
    try {
        std::size_t pos = 0;
        long x = std::stol(v.raw, &pos);
        if (pos != v.raw.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        fail(v.line, "'" + key + "' is not an integer: " + v.raw);
    }
}

double to_double(const TomlValue& v, const std::string& key) {
    if (v.is_string || v.is_array) fail(v.line, "'" + key + "' must be a number");
    try {
        std::size_t pos = 0;
        double x = std::stod(v.raw, &pos);
        if (pos != v.raw.size()) throw std::invalid_argument("");
        return x;
    } catch (...) {
        fail(v.line, "'" + key + "' is not a number: " + v.raw);
    }
}

std::string to_str(const TomlValue& v, const std::string& key) {
    if (!v.is_string) fail(v.line, "'" + key + "' must be a quoted string");
    return v.raw;
}

}  // namespace

AuditConfig load_config(const std::string& path) {
    auto kv = parse_toml(path);
    AuditConfig cfg;
    for (const auto& [key, v] : kv) {
        if (key == "mode") {
            cfg.mode = to_str(v, key);
            if (cfg.mode != "timeseries" && cfg.mode != "attributes")
                fail(v.line, "mode must be \"timeseries\" or \"attributes\"");
        } else if (key == "feature_count") {
            cfg.feature_count = static_cast<int>(to_int(v, key));
        } else if (key == "time_points") {
            cfg.time_points = static_cast<int>(to_int(v, key));
        } else if (key == "schema") {
            cfg.schema_path = to_str(v, key);
        } else if (key == "train") {
            cfg.train_path = to_str(v, key);
        } else if (key == "synth") {
            cfg.synth_path = to_str(v, key);
        } else if (key == "holdout") {
            cfg.holdout_path = to_str(v, key);
        } else if (key == "aux") {
            cfg.aux_path = to_str(v, key);
        } else if (key == "attacks") {
            if (!v.is_array) fail(v.line, "attacks must be an array of strings");
            cfg.roster.clear();
            for (const auto& e : v.array) cfg.roster.push_back(attack_from_string(to_str(e, key)));
            if (cfg.roster.empty()) fail(v.line, "attack roster is empty");
        } else if (key == "generators") {
            if (!v.is_array) fail(v.line, "generators must be an array of strings");
            cfg.generators.clear();
            for (const auto& e : v.array)
                cfg.generators.push_back(generator_from_string(to_str(e, key)));
            if (cfg.generators.empty()) fail(v.line, "generator list is empty");
        } else if (key == "jitter_sigma") {
            cfg.jitter_sigma = to_double(v, key);
        } else if (key == "n_aux") {
            cfg.n_aux = static_cast<int>(to_int(v, key));
        } else if (key == "sweep_sizes") {
            if (!v.is_array) fail(v.line, "sweep_sizes must be an array of integers");
            cfg.sweep_sizes.clear();
            for (const auto& e : v.array)
                cfg.sweep_sizes.push_back(static_cast<int>(to_int(e, key)));
            if (cfg.sweep_sizes.empty()) fail(v.line, "sweep_sizes is empty");
        } else if (key == "bootstrap_k") {
            cfg.bootstrap_k = static_cast<int>(to_int(v, key));
        } else if (key == "seed") {
            cfg.master_seed = static_cast<std::uint64_t>(to_int(v, key));
        } else if (key == "out_dir") {
            cfg.out_dir = to_str(v, key);
        } else if (key == "n_synth_cap") {
            cfg.n_synth_cap = static_cast<int>(to_int(v, key));
        } else if (key == "pca_components") {
            cfg.pca_components = static_cast<int>(to_int(v, key));
        } else if (key == "flow_epochs") {
            cfg.flow_epochs = static_cast<int>(to_int(v, key));
        } else if (key == "flow_fit_cap") {
            cfg.flow_fit_cap = static_cast<int>(to_int(v, key));
        } else if (key == "clf_epochs") {
            cfg.clf_epochs = static_cast<int>(to_int(v, key));
        } else if (key == "dtw_band") {
            cfg.dtw_band = static_cast<int>(to_int(v, key));
        } else if (key == "dtw_synth_cap") {
            cfg.dtw_synth_cap = static_cast<int>(to_int(v, key));
        } else if (key == "jobs") {
            cfg.jobs = static_cast<int>(to_int(v, key));
        } else {
            fail(v.line, "unknown key '" + key + "'");
        }
    }
    if (cfg.feature_count < 1 || cfg.time_points < 1)
        throw std::invalid_argument("config: feature_count and time_points must be positive");
    if (cfg.n_aux < 1 || cfg.bootstrap_k < 1)
        throw std::invalid_argument("config: n_aux and bootstrap_k must be positive");
    for (int n : cfg.sweep_sizes)
        if (n < 2) throw std::invalid_argument("config: sweep sizes must be at least 2");
    return cfg;
}

void save_config(const AuditConfig& cfg, const std::string& path) {
    std::ostringstream out;
    out << "mode = \"" << cfg.mode << "\"\n";
    out << "feature_count = " << cfg.feature_count << "\n";
    out << "time_points = " << cfg.time_points << "\n";
    if (!cfg.schema_path.empty()) out << "schema = \"" << cfg.schema_path << "\"\n";
    if (!cfg.train_path.empty()) out << "train = \"" << cfg.train_path << "\"\n";
    if (!cfg.synth_path.empty()) out << "synth = \"" << cfg.synth_path << "\"\n";
    if (!cfg.holdout_path.empty()) out << "holdout = \"" << cfg.holdout_path << "\"\n";
    if (!cfg.aux_path.empty()) out << "aux = \"" << cfg.aux_path << "\"\n";
    out << "attacks = [";
    for (std::size_t i = 0; i < cfg.roster.size(); ++i)
        out << (i ? ", " : "") << '"' << to_string(cfg.roster[i]) << '"';
    out << "]\n";
    out << "generators = [";
    for (std::size_t i = 0; i < cfg.generators.size(); ++i)
        out << (i ? ", " : "") << '"' << to_string(cfg.generators[i]) << '"';
    out << "]\n";
    out << "jitter_sigma = " << cfg.jitter_sigma << "\n";
    out << "n_aux = " << cfg.n_aux << "\n";
    out << "sweep_sizes = [";
    for (std::size_t i = 0; i < cfg.sweep_sizes.size(); ++i)
        out << (i ? ", " : "") << cfg.sweep_sizes[i];
    out << "]\n";
    out << "bootstrap_k = " << cfg.bootstrap_k << "\n";
    out << "seed = " << cfg.master_seed << "\n";
    out << "out_dir = \"" << cfg.out_dir << "\"\n";
    out << "n_synth_cap = " << cfg.n_synth_cap << "\n";
    out << "pca_components = " << cfg.pca_components << "\n";
    out << "flow_epochs = " << cfg.flow_epochs << "\n";
    out << "flow_fit_cap = " << cfg.flow_fit_cap << "\n";
    out << "clf_epochs = " << cfg.clf_epochs << "\n";
    out << "dtw_band = " << cfg.dtw_band << "\n";
    out << "dtw_synth_cap = " << cfg.dtw_synth_cap << "\n";
    out << "jobs = " << cfg.jobs << "\n";
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write config " + path);
    f << out.str();
}

}  // namespace audit
