#include "gigfrail/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>
#include <vector>

namespace gigfrail {

CsvError::CsvError(std::size_t line, const std::string& what)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    s = s.substr(first, last - first + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return fields;
}

double parse_real(const std::string& field, std::size_t line, const std::string& column) {
    if (field.empty()) throw CsvError(line, "missing value in column '" + column + "'");
    double v = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    if (*begin == '+') ++begin;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw CsvError(line, "column '" + column + "': '" + field + "' is not a finite number");
    }
    return v;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
    std::string text;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    while (std::getline(in, text)) {
        ++line_no;
        if (!trim(text).empty()) {
            header = split(text);
            break;
        }
    }
    if (header.empty()) throw CsvError(0, "input is empty; a header row is required");
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
    if (header.size() < 3 || header[0] != "cluster_id" || header[1] != "time" || header[2] != "status") {
        throw CsvError(line_no, "header must start with cluster_id,time,status");
    }
    const std::vector<std::string> covariates(header.begin() + 3, header.end());

    std::vector<Cluster> clusters;
    std::unordered_map<std::string, std::size_t> index;
    while (std::getline(in, text)) {
        ++line_no;
        if (trim(text).empty()) continue;
        const auto fields = split(text);
        if (fields.size() != header.size()) {
            throw CsvError(line_no, "expected " + std::to_string(header.size()) + " fields, found " +
                                        std::to_string(fields.size()));
        }
        if (fields[0].empty()) throw CsvError(line_no, "missing cluster_id");
        Record r;
        r.time = parse_real(fields[1], line_no, "time");
        if (!(r.time > 0.0)) throw CsvError(line_no, "time must be positive");
        if (fields[2] == "0") {
            r.status = 0;
        } else if (fields[2] == "1") {
            r.status = 1;
        } else {
            throw CsvError(line_no, "status must be 0 or 1, found '" + fields[2] + "'");
        }
        for (std::size_t j = 0; j < covariates.size(); ++j) {
            r.x.push_back(parse_real(fields[3 + j], line_no, covariates[j]));
        }
        const auto [it, inserted] = index.emplace(fields[0], clusters.size());
        if (inserted) clusters.push_back(Cluster{fields[0], {}});
        clusters[it->second].records.push_back(std::move(r));
    }
    if (clusters.empty()) throw CsvError(0, "no data rows");
    try {
        return Dataset(std::move(clusters), covariates);
    } catch (const std::invalid_argument& e) {
        throw CsvError(0, e.what());
    }
}

Dataset read_dataset_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(0, "cannot open '" + path.string() + "'");
    try {
        return read_dataset_csv(in);
    } catch (const CsvError& e) {
        throw CsvError(e.line(), path.string() + ": " + e.what());
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
    out << "cluster_id,time,status";
    for (const auto& name : data.covariate_names()) out << ',' << name;
    out << '\n';
    for (const auto& c : data.clusters()) {
        for (const auto& r : c.records) {
            out << c.id << ',' << format_double(r.time) << ',' << r.status;
            for (double x : r.x) out << ',' << format_double(x);
            out << '\n';
        }
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    const auto status = std::filesystem::status(path, ec);
    if (std::filesystem::exists(status) && !std::filesystem::is_regular_file(status)) {
        // devices and pipes cannot be replaced by a rename
        std::ofstream out(path, std::ios::binary);
        if (!(out << content)) throw std::runtime_error("cannot write '" + path.string() + "'");
        return;
    }
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace gigfrail
