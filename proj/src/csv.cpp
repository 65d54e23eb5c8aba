#include "s3t/csv.hpp"

#include "s3t/error.hpp"

#include <charconv>
#include <fstream>
#include <istream>

namespace s3t::csv {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                   : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::size_t Table::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw InputError(source + ": missing column '" + std::string(name) + "'");
}

Table read(std::istream& in, std::string source) {
    Table t;
    t.source = std::move(source);
    std::string line;
    bool have_header = false;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto fields = split_line(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
        } else {
            t.rows.push_back(std::move(fields));
        }
    }
    if (!have_header) throw InputError(t.source + ": empty file (header row required)");
    return t;
}

Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read(in, path);
}

double parse_double(std::string_view field, std::string_view context) {
    const auto s = trim(field);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        throw InputError(std::string(context) + ": cannot parse '" + std::string(field) + "' as a number");
    return value;
}

long parse_long(std::string_view field, std::string_view context) {
    const auto s = trim(field);
    long value = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        throw InputError(std::string(context) + ": cannot parse '" + std::string(field) + "' as an integer");
    return value;
}

}  // namespace s3t::csv
