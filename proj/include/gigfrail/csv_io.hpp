#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "gigfrail/dataset.hpp"

namespace gigfrail {

/// Malformed input; `line` is the 1-based line of the file (0 if not tied to a line).
class CsvError : public std::runtime_error {
public:
    CsvError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Reads `cluster_id,time,status,<covariates...>` with a mandatory header.
/// Rows sharing a cluster_id form one cluster; clusters keep the order of
/// their first appearance.
Dataset read_dataset_csv(std::istream& in);
Dataset read_dataset_file(const std::filesystem::path& path);

void write_dataset_csv(std::ostream& out, const Dataset& data);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Writes to a sibling temporary file, then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace gigfrail
