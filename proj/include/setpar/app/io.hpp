#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "setpar/model.hpp"

namespace setpar::app {

/// Bad input file or configuration; the CLI maps it to exit code 2.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SeriesSelection {
    std::optional<std::string> column;
    std::size_t skip = 0;
    std::optional<std::size_t> first;
};

/// Counts from delimited text. Without a column: one integer per record, an optional
/// non-numeric header line. With a column: header row required, comma, semicolon or tab
/// separated. LF and CRLF line endings are accepted.
CountSeries read_counts(const std::filesystem::path& path, const SeriesSelection& selection = {});

/// Same rules applied to in-memory text; `source` names the input in error messages.
CountSeries parse_counts(const std::string& text, const SeriesSelection& selection,
                         const std::string& source);

/// 17 significant digits, enough to round-trip a double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

std::string sha256_hex(const std::string& bytes);

}  // namespace setpar::app
