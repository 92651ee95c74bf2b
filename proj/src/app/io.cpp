#include "setpar/app/io.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

namespace setpar::app {

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split_fields(const std::string& line) {
    char delim = ',';
    if (line.find(',') == std::string::npos) {
        if (line.find(';') != std::string::npos) delim = ';';
        else if (line.find('\t') != std::string::npos) delim = '\t';
    }
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, delim)) out.push_back(trim(field));
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

bool looks_numeric(const std::string& s) {
    if (s.empty()) return false;
    const char c = s.front();
    return std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.';
}

Count parse_count(const std::string& field, const std::string& source, std::size_t line_no) {
    const std::string where = source + ":" + std::to_string(line_no);
    const char* begin = field.data();
    const char* end = field.data() + field.size();
    if (begin != end && *begin == '+') ++begin;
    Count value = 0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw InputError(where + ": '" + field + "' is not an integer count");
    }
    if (value < 0) throw InputError(where + ": negative count " + field);
    return value;
}

}  // namespace

CountSeries parse_counts(const std::string& text, const SeriesSelection& selection,
                         const std::string& source) {
    std::vector<Count> values;
    std::istringstream in(text);
    std::string raw;
    std::size_t line_no = 0;
    std::optional<std::size_t> column_index;
    bool header_seen = false;
    while (std::getline(in, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        if (line_no == 1 && raw.rfind("\xEF\xBB\xBF", 0) == 0) raw.erase(0, 3);
        const std::string line = trim(raw);
        if (line.empty() || line.front() == '#') continue;

        if (selection.column) {
            const auto fields = split_fields(line);
            if (!column_index) {
                const auto it = std::find(fields.begin(), fields.end(), *selection.column);
                if (it == fields.end()) {
                    throw InputError(source + ":" + std::to_string(line_no) + ": no column named '" +
                                     *selection.column + "' in header");
                }
                column_index = static_cast<std::size_t>(it - fields.begin());
                continue;
            }
            if (*column_index >= fields.size()) {
                throw InputError(source + ":" + std::to_string(line_no) + ": missing column '" +
                                 *selection.column + "'");
            }
            values.push_back(parse_count(fields[*column_index], source, line_no));
            continue;
        }

        if (!header_seen && values.empty() && !looks_numeric(line)) {
            header_seen = true;
            continue;
        }
        values.push_back(parse_count(line, source, line_no));
    }

    if (selection.skip > values.size()) {
        throw InputError(source + ": cannot skip " + std::to_string(selection.skip) + " of " +
                         std::to_string(values.size()) + " records");
    }
    values.erase(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(selection.skip));
    if (selection.first) {
        if (*selection.first > values.size()) {
            throw InputError(source + ": requested " + std::to_string(*selection.first) +
                             " records but only " + std::to_string(values.size()) + " remain");
        }
        values.resize(*selection.first);
    }
    if (values.empty()) throw InputError(source + ": no counts found");
    return CountSeries(std::move(values));
}

CountSeries read_counts(const std::filesystem::path& path, const SeriesSelection& selection) {
    return parse_counts(read_file(path), selection, path.string());
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << content;
    if (!out) throw InputError("failed writing " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr);
    std::ostringstream out;
    for (unsigned int i = 0; i < len; ++i) {
        out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
    }
    return out.str();
}

}  // namespace setpar::app
