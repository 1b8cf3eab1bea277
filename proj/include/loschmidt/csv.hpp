// Comma-delimited output with '#'-prefixed header comments, full double
// precision (17 significant digits), written atomically (temp file +
// rename) so parallel runs never expose partial files.
#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "loschmidt/common.hpp"

namespace loschmidt {

struct CsvTable {
    std::vector<std::string> comments;  // without the leading "# "
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

inline std::string format_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Shortest representation that round-trips; used for config echoes and
// file names, where 0.3 should read as 0.3.
inline std::string format_shortest(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline void write_csv(const std::string& path, const CsvTable& table) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw validation_error("cannot write '" + tmp.string() + "'");
        for (const std::string& c : table.comments) out << "# " << c << "\n";
        for (std::size_t i = 0; i < table.columns.size(); ++i)
            out << (i ? "," : "") << table.columns[i];
        out << "\n";
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << (i ? "," : "") << format_full(row[i]);
            out << "\n";
        }
        if (!out) throw validation_error("short write on '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw validation_error("cannot open '" + path + "'");
    CsvTable table;
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            table.comments.push_back(line.size() > 2 ? line.substr(2) : "");
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        if (!have_header) {
            while (std::getline(ss, cell, ',')) table.columns.push_back(cell);
            have_header = true;
            continue;
        }
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw validation_error("bad numeric cell '" + cell + "' in " + path);
            }
        }
        if (row.size() != table.columns.size())
            throw validation_error("ragged row in " + path);
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw validation_error("no header row in " + path);
    return table;
}

inline std::vector<double> csv_column(const CsvTable& table, const std::string& name) {
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (table.columns[c] != name) continue;
        std::vector<double> out;
        out.reserve(table.rows.size());
        for (const auto& row : table.rows) out.push_back(row[c]);
        return out;
    }
    throw analysis_error("column '" + name + "' not found");
}

}  // namespace loschmidt
