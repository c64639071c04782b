#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bandcast/errors.hpp"

namespace bandcast {

// Minimal CSV support for the stage files. Fields are comma-free by schema
// (ids and band labels are generated tokens), so no quoting is implemented.
// Doubles are written with shortest round-trip formatting, which keeps stage
// outputs byte-stable and lossless across reruns.

inline std::string format_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, p);
}

class CsvWriter {
  public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : path_(path) {
        out_.open(path, std::ios::binary | std::ios::trunc);
        if (!out_) throw IoError("cannot open for writing: " + path);
        write_row_strings(header);
    }

    void field(const std::string& v) { push(v); }
    void field(const char* v) { push(v); }
    void field(double v) { push(format_double(v)); }
    void field(int v) { push(std::to_string(v)); }
    void field(int64_t v) { push(std::to_string(v)); }
    void field(uint64_t v) { push(std::to_string(v)); }

    void end_row() {
        out_ << line_ << '\n';
        line_.clear();
        first_ = true;
    }

    void write_row_strings(const std::vector<std::string>& row) {
        for (const auto& f : row) push(f);
        end_row();
    }

    void close() {
        if (out_.is_open()) {
            out_.close();
            if (!out_) throw IoError("write failed: " + path_);
        }
    }

  private:
    void push(const std::string& v) {
        if (!first_) line_ += ',';
        line_ += v;
        first_ = false;
    }

    std::string path_;
    std::ofstream out_;
    std::string line_;
    bool first_ = true;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return static_cast<int>(i);
        throw ConfigError("missing CSV column: " + name);
    }
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingInputError("missing input file: " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty CSV: " + path);
    t.header = split_csv_line(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        t.rows.push_back(split_csv_line(line));
    }
    return t;
}

inline double parse_double(const std::string& s) {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("bad numeric field: '" + s + "'");
    return v;
}

inline int64_t parse_int(const std::string& s) {
    int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw ConfigError("bad integer field: '" + s + "'");
    return v;
}

}  // namespace bandcast
