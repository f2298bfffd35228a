#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stsinr/params.hpp"

namespace stsinr {

// Plain-text run configuration: `[section]` headers over `key = value`
// lines, `#` comments. Every key must be consumed by the study that runs;
// unknown keys are a hard error so typos cannot silently change a run.
class Config {
  public:
    static Config parse(const std::string& text) {
        Config cfg;
        cfg.raw_ = text;
        std::istringstream is(text);
        std::string line;
        std::string section;
        int line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            std::string s = strip(line);
            if (s.empty() || s[0] == '#') continue;
            if (s.front() == '[') {
                if (s.back() != ']')
                    throw std::invalid_argument("config line " + std::to_string(line_no) +
                                                ": malformed section header");
                section = strip(s.substr(1, s.size() - 2));
                if (section.empty())
                    throw std::invalid_argument("config line " + std::to_string(line_no) +
                                                ": empty section name");
                cfg.sections_[section];
                continue;
            }
            auto eq = s.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": expected key = value");
            std::string key = strip(s.substr(0, eq));
            std::string value = strip(s.substr(eq + 1));
            if (key.empty())
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": empty key");
            if (section.empty())
                throw std::invalid_argument("config line " + std::to_string(line_no) +
                                            ": key outside any section");
            auto& sec = cfg.sections_[section];
            if (sec.count(key))
                throw std::invalid_argument("config: duplicate key '" + key + "' in [" + section +
                                            "]");
            sec[key] = value;
        }
        return cfg;
    }

    bool has(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        return it != sections_.end() && it->second.count(key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        if (it == sections_.end() || !it->second.count(key))
            throw std::invalid_argument("config: missing key '" + key + "' in [" + section + "]");
        consumed_.insert(section + "." + key);
        return it->second.at(key);
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
        if (!has(section, key)) return fallback;
        return get_string(section, key);
    }

    double get_double(const std::string& section, const std::string& key) const {
        return parse_double(get_string(section, key), section, key);
    }
    double get_double(const std::string& section, const std::string& key, double fallback) const {
        if (!has(section, key)) return fallback;
        return get_double(section, key);
    }

    std::int64_t get_int(const std::string& section, const std::string& key) const {
        std::string v = get_string(section, key);
        try {
            std::size_t pos = 0;
            std::int64_t out = std::stoll(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing junk");
            return out;
        } catch (const std::exception&) {
            throw std::invalid_argument("config: key '" + key + "' in [" + section +
                                        "] is not an integer: " + v);
        }
    }
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const {
        if (!has(section, key)) return fallback;
        return get_int(section, key);
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        std::string v = get_string(section, key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw std::invalid_argument("config: key '" + key + "' in [" + section +
                                    "] is not a boolean: " + v);
    }

    std::vector<double> get_double_list(const std::string& section, const std::string& key) const {
        std::string v = get_string(section, key);
        std::vector<double> out;
        std::istringstream is(v);
        std::string item;
        while (std::getline(is, item, ',')) {
            std::string t = strip(item);
            if (t.empty()) continue;
            out.push_back(parse_double(t, section, key));
        }
        if (out.empty())
            throw std::invalid_argument("config: key '" + key + "' in [" + section +
                                        "] is an empty list");
        return out;
    }

    std::vector<int> get_int_list(const std::string& section, const std::string& key) const {
        std::vector<int> out;
        for (double d : get_double_list(section, key)) out.push_back(static_cast<int>(d));
        return out;
    }

    // Every present key must have been read by now.
    void ensure_all_consumed() const {
        for (const auto& [section, kv] : sections_)
            for (const auto& [key, value] : kv)
                if (!consumed_.count(section + "." + key))
                    throw std::invalid_argument("config: unknown key '" + key + "' in [" + section +
                                                "]");
    }

    const std::string& raw_text() const { return raw_; }

  private:
    static std::string strip(const std::string& s) {
        std::size_t b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return "";
        std::size_t e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    static double parse_double(const std::string& v, const std::string& section,
                               const std::string& key) {
        try {
            std::size_t pos = 0;
            double out = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument("trailing junk");
            return out;
        } catch (const std::exception&) {
            throw std::invalid_argument("config: key '" + key + "' in [" + section +
                                        "] is not a number: " + v);
        }
    }

    std::string raw_;
    std::map<std::string, std::map<std::string, std::string>> sections_;
    mutable std::set<std::string> consumed_;
};

// The [model] section shared by every study.
inline ModelParams model_from_config(const Config& cfg) {
    ModelParams p;
    p.lambda_m = cfg.get_double("model", "lambda");
    if (cfg.has("model", "grid_step")) p.grid_step = cfg.get_double("model", "grid_step");
    p.aloha_p = cfg.get_double("model", "aloha_p");
    p.fading_mu = cfg.get_double("model", "fading_mu");
    p.threshold = cfg.get_double("model", "threshold");
    p.pathloss_a = cfg.get_double("model", "pathloss_a", 1.0);
    p.pathloss_beta = cfg.get_double("model", "pathloss_beta");
    std::string noise = cfg.get_string("model", "noise", "off");
    if (noise == "off") {
        p.noise = NoiseSpec::off();
    } else if (noise == "constant") {
        p.noise = NoiseSpec::constant(cfg.get_double("model", "noise_level"));
    } else if (noise == "exponential") {
        p.noise = NoiseSpec::exponential(cfg.get_double("model", "noise_level"));
    } else {
        throw std::invalid_argument("config: noise must be off, constant or exponential");
    }
    p.window.width = cfg.get_double("model", "window_width");
    p.window.height = cfg.get_double("model", "window_height");
    std::string boundary = cfg.get_string("model", "boundary", "torus");
    if (boundary == "torus") {
        p.window.boundary = BoundaryMode::torus;
    } else if (boundary == "plane") {
        p.window.boundary = BoundaryMode::plane_with_guard;
        p.window.guard_margin = cfg.get_double("model", "guard_margin", 0.0);
    } else {
        throw std::invalid_argument("config: boundary must be torus or plane");
    }
    p.seed = static_cast<std::uint64_t>(cfg.get_int("model", "seed"));
    p.validate();
    return p;
}

}  // namespace stsinr
