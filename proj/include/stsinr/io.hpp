#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "stsinr/point_pattern.hpp"
#include "stsinr/random.hpp"

namespace stsinr {

// Shortest round-trippable decimal form; keeps replayed CSVs bit-identical.
inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fingerprint_of(const std::string& text) {
    std::uint64_t h = 0x5354534e52ull;  // arbitrary project salt
    for (unsigned char c : text) h = hash_combine(h, c);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path.string());
    os << content;
    if (!os) throw std::runtime_error("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path.string());
    std::string out((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return out;
}

inline std::string pattern_to_csv(const PointPattern& pattern) {
    std::ostringstream os;
    os << "id,x,y,origin\n";
    for (const auto& p : pattern.points)
        os << p.id << ',' << fmt_double(p.pos.x) << ',' << fmt_double(p.pos.y) << ','
           << to_string(p.origin) << '\n';
    return os.str();
}

inline PointPattern pattern_from_csv(const std::string& csv, const Window& window) {
    std::istringstream is(csv);
    std::string line;
    if (!std::getline(is, line) || line.find("id,x,y,origin") != 0)
        throw std::runtime_error("pattern_from_csv: missing header");
    PointPattern out;
    out.window = window;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string id_s, x_s, y_s, origin_s;
        if (!std::getline(row, id_s, ',') || !std::getline(row, x_s, ',') ||
            !std::getline(row, y_s, ',') || !std::getline(row, origin_s))
            throw std::runtime_error("pattern_from_csv: malformed row: " + line);
        PatternPoint p;
        p.id = std::stoi(id_s);
        p.pos = Vec2{std::stod(x_s), std::stod(y_s)};
        if (origin_s == "poisson")
            p.origin = PointOrigin::poisson;
        else if (origin_s == "grid")
            p.origin = PointOrigin::grid;
        else if (origin_s == "palm")
            p.origin = PointOrigin::palm;
        else
            throw std::runtime_error("pattern_from_csv: unknown origin: " + origin_s);
        out.points.push_back(p);
    }
    out.check_invariants();
    return out;
}

}  // namespace stsinr
