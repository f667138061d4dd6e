#pragma once

// Output plumbing shared by the CLI: CSV at full round-trip precision and
// JSON artifacts, both carrying a schema version and the effective config.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "fbl/common.hpp"

namespace fbl {

using json = nlohmann::json;

inline constexpr int schema_version = 1;

// 17 significant digits: enough for exact binary64 round trips
inline std::string fmt_full(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

using ConfigEcho = std::map<std::string, std::string>;

class CsvWriter {
public:
    CsvWriter(std::ostream& os, const std::string& command, const ConfigEcho& config)
        : os_(os) {
        os_ << "# schema_version=" << schema_version << "\n";
        os_ << "# command=" << command << "\n";
        for (const auto& [k, v] : config) os_ << "# " << k << "=" << v << "\n";
    }

    void header(const std::vector<std::string>& cols) {
        for (std::size_t i = 0; i < cols.size(); ++i)
            os_ << (i ? "," : "") << cols[i];
        os_ << "\n";
    }

    CsvWriter& field(double v) { return raw(fmt_full(v)); }
    CsvWriter& field(int v) { return raw(std::to_string(v)); }
    CsvWriter& field(long v) { return raw(std::to_string(v)); }
    CsvWriter& field(long long v) { return raw(std::to_string(v)); }
    CsvWriter& field(bool v) { return raw(v ? "1" : "0"); }
    CsvWriter& field(const std::string& v) { return raw(v); }

    void end_row() {
        os_ << "\n";
        first_ = true;
    }

    void comment(const std::string& text) { os_ << "# " << text << "\n"; }

private:
    CsvWriter& raw(const std::string& s) {
        if (!first_) os_ << ",";
        first_ = false;
        os_ << s;
        return *this;
    }

    std::ostream& os_;
    bool first_ = true;
};

inline json artifact_envelope(const std::string& command, const ConfigEcho& config) {
    json j;
    j["schema_version"] = schema_version;
    j["command"] = command;
    json cfg = json::object();
    for (const auto& [k, v] : config) cfg[k] = v;
    j["config"] = cfg;
    return j;
}

// writes to the path, or stdout for "-"
struct OutputTarget {
    explicit OutputTarget(const std::string& path) : path_(path) {
        if (path_ != "-") {
            file_.open(path_);
            if (!file_) throw domain_error("cannot open output file: " + path_);
        }
    }
    std::ostream& stream() { return path_ == "-" ? std::cout : file_; }

private:
    std::string path_;
    std::ofstream file_;
};

}  // namespace fbl
