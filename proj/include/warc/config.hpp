#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "warc/io.hpp"
#include "warc/model.hpp"

namespace warc {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parsed INI-style configuration: [section] headers, key = value lines,
/// '#' or ';' comments. run() consumes keys through KeyTable, which also
/// rejects unknown ones.
struct RawConfig {
    // section -> key -> value
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& sec, const std::string& key) const {
        auto s = sections.find(sec);
        return s != sections.end() && s->second.count(key) > 0;
    }

    void set(const std::string& sec, const std::string& key, const std::string& value) {
        sections[sec][key] = value;
    }

    /// Stable text form used for the config hash.
    std::string canonical() const {
        std::string out;
        for (const auto& [sec, kv] : sections)
            for (const auto& [k, v] : kv) out += sec + "." + k + "=" + v + "\n";
        return out;
    }
    std::uint64_t hash() const { return fnv1a64(canonical()); }
};

namespace detail {
inline std::string trim(const std::string& s) {
    const size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}
}  // namespace detail

/// Parse configuration text, collecting all syntax errors.
inline RawConfig parse_config_text(const std::string& text, std::vector<std::string>& errors) {
    RawConfig cfg;
    std::string section;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const size_t hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                errors.push_back("line " + std::to_string(lineno) + ": malformed section header");
                continue;
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section.empty())
                errors.push_back("line " + std::to_string(lineno) + ": empty section name");
            cfg.sections[section];
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) {
            errors.push_back("line " + std::to_string(lineno) + ": empty key");
            continue;
        }
        if (section.empty()) {
            errors.push_back("line " + std::to_string(lineno) + ": key outside any section");
            continue;
        }
        if (cfg.sections[section].count(key))
            errors.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        cfg.sections[section][key] = value;
    }
    return cfg;
}

/// Typed, validated access to one section. Every key that is read is
/// marked consumed; finish() reports the leftovers as unknown keys.
class KeyTable {
public:
    KeyTable(const RawConfig& cfg, std::string section, std::vector<std::string>& errors)
        : section_(std::move(section)), errors_(&errors) {
        auto it = cfg.sections.find(section_);
        if (it != cfg.sections.end()) kv_ = it->second;
    }

    bool has(const std::string& key) const { return kv_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback) {
        consumed_.insert(key);
        auto it = kv_.find(key);
        return it == kv_.end() ? fallback : it->second;
    }

    double get_double(const std::string& key, double fallback) {
        consumed_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        try {
            size_t pos = 0;
            const double v = std::stod(it->second, &pos);
            if (pos != it->second.size()) throw std::invalid_argument("trailing text");
            return v;
        } catch (const std::exception&) {
            fail(key, "not a number: '" + it->second + "'");
            return fallback;
        }
    }

    int get_int(const std::string& key, int fallback) {
        consumed_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        try {
            size_t pos = 0;
            const long v = std::stol(it->second, &pos, 10);
            if (pos != it->second.size()) throw std::invalid_argument("trailing text");
            return static_cast<int>(v);
        } catch (const std::exception&) {
            fail(key, "not an integer: '" + it->second + "'");
            return fallback;
        }
    }

    bool get_bool(const std::string& key, bool fallback) {
        consumed_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        fail(key, "not a boolean: '" + it->second + "'");
        return fallback;
    }

    std::vector<double> get_list(const std::string& key, std::vector<double> fallback) {
        consumed_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        std::vector<double> out;
        std::stringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = detail::trim(tok);
            if (tok.empty()) continue;
            try {
                out.push_back(std::stod(tok));
            } catch (const std::exception&) {
                fail(key, "not a number list: '" + it->second + "'");
                return fallback;
            }
        }
        return out;
    }

    std::vector<std::string> get_string_list(const std::string& key,
                                             std::vector<std::string> fallback) {
        consumed_.insert(key);
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        std::vector<std::string> out;
        std::stringstream ss(it->second);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            tok = detail::trim(tok);
            if (!tok.empty()) out.push_back(tok);
        }
        return out;
    }

    void require(const std::string& key) {
        if (!kv_.count(key)) fail(key, "missing required key");
        consumed_.insert(key);
    }

    void fail(const std::string& key, const std::string& why) {
        errors_->push_back("[" + section_ + "] " + key + ": " + why);
    }

    void finish() {
        for (const auto& [k, v] : kv_)
            if (!consumed_.count(k)) errors_->push_back("[" + section_ + "] unknown key '" + k + "'");
    }

private:
    std::string section_;
    std::map<std::string, std::string> kv_;
    std::set<std::string> consumed_;
    std::vector<std::string>* errors_;
};

/// Model parameters from the [model] section: either the simplified knobs
/// (J, Jprime, m, phi/phi_pi_units, epsilon) or the full hopping table
/// t1..t10 / phi1..phi10.
inline ModelParams model_from_config(const RawConfig& cfg, std::vector<std::string>& errors,
                                     const ModelParams& fallback) {
    KeyTable kt(cfg, "model", errors);
    const bool full_table = kt.has("t1");
    ModelParams p = fallback;
    if (full_table) {
        for (int i = 1; i <= 10; ++i) {
            p.t[i - 1] = kt.get_double("t" + std::to_string(i), 0.0);
            p.phi[i - 1] = wrap_phase(kt.get_double("phi" + std::to_string(i), 0.0));
            if (p.t[i - 1] < 0.0) kt.fail("t" + std::to_string(i), "amplitude must be >= 0");
        }
        p.m = kt.get_double("m", fallback.m);
        p.eps = kt.get_double("epsilon", fallback.eps);
    } else {
        // recover the simplified knobs of the fallback so partial overrides work
        const double j0 = fallback.t[0], jp0 = fallback.t[6], phi0 = fallback.phi[0];
        const double J = kt.get_double("J", j0);
        const double Jp = kt.get_double("Jprime", jp0);
        const double m = kt.get_double("m", fallback.m);
        double phi = phi0;
        if (kt.has("phi_pi_units"))
            phi = kt.get_double("phi_pi_units", 0.0) * pi;
        else
            phi = kt.get_double("phi", phi0);
        kt.get_double("phi_pi_units", 0.0);  // consume if present alongside
        const double eps = kt.get_double("epsilon", fallback.eps);
        if (J < 0.0) kt.fail("J", "must be >= 0");
        if (Jp < 0.0) kt.fail("Jprime", "must be >= 0");
        if (J >= 0.0 && Jp >= 0.0) {
            p = ModelParams::simplified(J, Jp, m, phi);
            p.eps = eps;
        }
    }
    kt.finish();
    return p;
}

}  // namespace warc
