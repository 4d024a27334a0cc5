#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

// Minimal CSV support for the data formats the tool speaks: an "x,y" series
// on input and numeric record tables on output.  Floating-point fields are
// written with 17 significant digits so emitted files round-trip exactly
// and reruns are byte-identical.

namespace shapespline {

// Malformed input; the message starts with "<source>:<line>: ".
class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// %.17g rendering used for every floating-point CSV field.
std::string format_double(double value);

// Splits one CSV line on commas, honoring double quotes ("" escapes a quote
// inside a quoted field) and trimming unquoted surrounding whitespace.
std::vector<std::string> split_csv_line(const std::string& line, const std::string& source,
                                        long line_number);

// Quotes a field for output when it contains a comma, quote, or newline.
std::string csv_field(const std::string& value);

struct XySeries {
    std::vector<double> x;
    std::vector<double> y;
};

// Parses a series with the exact header "x,y" and two numeric fields per
// row, x strictly increasing.  Blank lines are ignored.  `source` names the
// stream in diagnostics.  Throws CsvError with a line number on any defect.
XySeries read_xy_csv(std::istream& in, const std::string& source);
XySeries read_xy_csv_file(const std::string& path);

// Writes the series back with the "x,y" header.
void write_xy_csv(std::ostream& out, const XySeries& series);

} // namespace shapespline
