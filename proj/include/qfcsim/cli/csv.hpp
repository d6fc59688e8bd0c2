#pragma once

// Comma-separated tables with a mandatory header row. Blank lines and lines
// starting with '#' are skipped. Every schema problem is collected and
// reported together, each with its line number.

#include "qfcsim/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace qfcsim::cli {

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t index_of(std::string_view name) const {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) throw ValidationError("no column '" + std::string(name) + "'");
        return static_cast<std::size_t>(it - columns.begin());
    }

    std::vector<double> column(std::string_view name) const {
        const auto idx = index_of(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r[idx]);
        return out;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Parses a table whose header must contain exactly `required` (any order).
inline Table parse_table(std::istream& in, const std::vector<std::string>& required,
                         const std::string& source = "<input>") {
    std::vector<std::string> problems;
    Table table;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    std::vector<std::size_t> order;  // table column -> file field

    while (std::getline(in, line)) {
        ++lineno;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = detail::split(t);
        if (!have_header) {
            have_header = true;
            for (const auto& f : fields)
                if (std::find(required.begin(), required.end(), f) == required.end())
                    problems.push_back("line " + std::to_string(lineno) + ": unexpected column '" +
                                       f + "'");
            for (const auto& r : required) {
                const auto it = std::find(fields.begin(), fields.end(), r);
                if (it == fields.end())
                    problems.push_back("line " + std::to_string(lineno) +
                                       ": missing required column '" + r + "'");
                else
                    order.push_back(static_cast<std::size_t>(it - fields.begin()));
            }
            table.columns = required;
            if (!problems.empty()) break;
            continue;
        }
        if (fields.size() != required.size()) {
            problems.push_back("line " + std::to_string(lineno) + ": expected " +
                               std::to_string(required.size()) + " fields, found " +
                               std::to_string(fields.size()));
            continue;
        }
        std::vector<double> row(required.size());
        bool ok = true;
        for (std::size_t c = 0; c < required.size(); ++c) {
            if (!detail::parse_double(fields[order[c]], row[c])) {
                problems.push_back("line " + std::to_string(lineno) + ", column '" + required[c] +
                                   "': not a finite number: '" + fields[order[c]] + "'");
                ok = false;
            }
        }
        if (ok) table.rows.push_back(std::move(row));
    }
    if (!have_header) problems.push_back("missing header row");
    else if (problems.empty() && table.rows.empty()) problems.push_back("table has no data rows");

    if (!problems.empty()) {
        std::string msg = "malformed table " + source + ":";
        for (const auto& p : problems) msg += "\n  " + p;
        throw ValidationError(msg);
    }
    return table;
}

inline Table read_table(const std::string& path, const std::vector<std::string>& required) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return parse_table(in, required, path);
}

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace qfcsim::cli
