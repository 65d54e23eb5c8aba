#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace s3t::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws InputError naming the file when absent.
    std::size_t column(std::string_view name) const;
    std::string source;
};

/// Comma-separated, first line is the header. Blank lines are skipped;
/// fields are trimmed. No quoting.
Table read(std::istream& in, std::string source = "<stream>");
Table read_file(const std::string& path);

std::vector<std::string> split_line(std::string_view line);

/// Strict decimal parse; throws InputError with the context on failure.
double parse_double(std::string_view field, std::string_view context);
long parse_long(std::string_view field, std::string_view context);

}  // namespace s3t::csv
