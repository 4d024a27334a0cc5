#include "shapespline/csv.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace shapespline {

namespace {

std::string where(const std::string& source, long line) {
    return source + ":" + std::to_string(line) + ": ";
}

std::string trim(const std::string& text) {
    size_t lo = 0;
    size_t hi = text.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(text[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(text[hi - 1]))) --hi;
    return text.substr(lo, hi - lo);
}

double parse_double(const std::string& field, const std::string& source, long line, int column) {
    const std::string body = trim(field);
    if (body.empty())
        throw CsvError(where(source, line) + "field " + std::to_string(column) + " is empty");
    size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(body, &used);
    } catch (const std::exception&) {
        throw CsvError(where(source, line) + "field " + std::to_string(column) +
                       " is not a number: '" + body + "'");
    }
    if (used != body.size())
        throw CsvError(where(source, line) + "field " + std::to_string(column) +
                       " has trailing characters: '" + body + "'");
    return value;
}

} // namespace

std::string format_double(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::vector<std::string> split_csv_line(const std::string& line, const std::string& source,
                                        long line_number) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    bool was_quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    current += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
            was_quoted = true;
        } else if (c == ',') {
            fields.push_back(was_quoted ? current : trim(current));
            current.clear();
            was_quoted = false;
        } else {
            current += c;
        }
    }
    if (quoted) throw CsvError(where(source, line_number) + "unterminated quote");
    fields.push_back(was_quoted ? current : trim(current));
    return fields;
}

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string quoted = "\"";
    for (const char c : value) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

XySeries read_xy_csv(std::istream& in, const std::string& source) {
    XySeries series;
    std::string line;
    long line_number = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (!saw_header) {
            const auto header = split_csv_line(line, source, line_number);
            if (header.size() != 2 || trim(header[0]) != "x" || trim(header[1]) != "y")
                throw CsvError(where(source, line_number) + "expected header 'x,y', got '" +
                               line + "'");
            saw_header = true;
            continue;
        }
        const auto fields = split_csv_line(line, source, line_number);
        if (fields.size() != 2)
            throw CsvError(where(source, line_number) + "expected 2 fields, got " +
                           std::to_string(fields.size()));
        const double x = parse_double(fields[0], source, line_number, 1);
        const double y = parse_double(fields[1], source, line_number, 2);
        if (!series.x.empty() && !(x > series.x.back()))
            throw CsvError(where(source, line_number) + "x must be strictly increasing (" +
                           format_double(x) + " after " + format_double(series.x.back()) + ")");
        series.x.push_back(x);
        series.y.push_back(y);
    }
    if (!saw_header) throw CsvError(source + ":1: empty input, expected header 'x,y'");
    if (series.x.empty()) throw CsvError(source + ":" + std::to_string(line_number) +
                                         ": no data rows after the header");
    return series;
}

XySeries read_xy_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CsvError(path + ":0: cannot open file");
    return read_xy_csv(in, path);
}

void write_xy_csv(std::ostream& out, const XySeries& series) {
    out << "x,y\n";
    for (size_t i = 0; i < series.x.size(); ++i)
        out << format_double(series.x[i]) << ',' << format_double(series.y[i]) << '\n';
}

} // namespace shapespline
