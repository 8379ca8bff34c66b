#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace glean::csv {

// RFC 4180-ish: fields quoted when they contain a comma, quote or newline.
std::string escape(const std::string& field);
void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Returns false at end of input. Quoted fields may span lines.
bool read_row(std::istream& in, std::vector<std::string>& fields);

std::string format_double(double v, int precision = 6);

}  // namespace glean::csv
