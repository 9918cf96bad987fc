#pragma once

// Minimal CSV reading for the flat numeric schemas used by the library.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "pcn/error.hpp"

namespace pcn::csv {

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        std::string_view f = line.substr(start, pos == std::string_view::npos ? pos : pos - start);
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '\t' || f.back() == '\r')) f.remove_suffix(1);
        out.push_back(f);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
T parse_field(std::string_view f, const std::string& file, std::size_t line, const char* name) {
    T v{};
    const auto* end = f.data() + f.size();
    auto [p, ec] = std::from_chars(f.data(), end, v);
    if (ec != std::errc() || p != end || f.empty())
        throw ParseError(file, line, std::string("bad ") + name + " '" + std::string(f) + "'");
    return v;
}

/// Calls row(fields, line_no) for each data row after checking the header.
template <class F>
void read(const std::filesystem::path& path, std::string_view header, F&& row) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    const std::string file = path.string();
    std::string line;
    std::size_t no = 0;
    bool seen_header = false;
    while (std::getline(in, line)) {
        ++no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!seen_header) {
            if (line != header) throw ParseError(file, no, "expected header '" + std::string(header) + "'");
            seen_header = true;
            continue;
        }
        row(split(line), no, file);
    }
    if (!seen_header) throw ParseError(file, no, "missing header");
}

}  // namespace pcn::csv
