#ifndef LOOPLESS_CSV_HPP
#define LOOPLESS_CSV_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace loopless::csv {

/// RFC 4180 field: quoted when it contains a comma, quote, CR or LF.
std::string quote(std::string_view field);

/// Shortest round-trip decimal form.
std::string format_real(double v);
std::string format_optional(const std::optional<double>& v);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

/// Reads one RFC 4180 record (quoted fields may span lines). Returns false at
/// end of input.
bool read_row(std::istream& in, std::vector<std::string>& fields);

}  // namespace loopless::csv

#endif
