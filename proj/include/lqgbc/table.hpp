// SPDX-License-Identifier: Apache-2.0
//
// Deterministic tabular output: typed columns, rows in insertion order,
// floats at 17 significant digits, CSV written atomically (temp + rename).
#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace lqgbc {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ResultTable {
  public:
    using Cell = std::variant<std::string, long long, double>;

    explicit ResultTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<Cell> row) {
        if (row.size() != header_.size())
            throw std::invalid_argument("ResultTable: column count mismatch");
        rows_.push_back(std::move(row));
    }

    std::size_t rows() const { return rows_.size(); }
    const std::vector<std::string>& header() const { return header_; }
    const std::vector<Cell>& row(std::size_t i) const { return rows_.at(i); }

    static std::string format_cell(const Cell& c) {
        if (const auto* s = std::get_if<std::string>(&c)) return *s;
        if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", std::get<double>(c));
        return buf;
    }

    std::string to_csv() const {
        std::ostringstream out;
        for (std::size_t i = 0; i < header_.size(); ++i)
            out << (i ? "," : "") << header_[i];
        out << '\n';
        for (const auto& row : rows_) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << (i ? "," : "") << format_cell(row[i]);
            out << '\n';
        }
        return out.str();
    }

    void write_csv(const std::filesystem::path& path) const { write_atomic(path, to_csv()); }

    static void write_atomic(const std::filesystem::path& path, const std::string& content) {
        const std::filesystem::path tmp = path.string() + ".tmp";
        {
            std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
            if (!out) throw IoError("cannot open " + tmp.string());
            out << content;
            if (!out.flush()) throw IoError("write failed: " + tmp.string());
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec) throw IoError("rename failed: " + path.string() + ": " + ec.message());
    }

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

} // namespace lqgbc
