#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace corpuskit::detail {

// RFC 4180 subset: comma separator, double-quote quoting, "" escapes, LF or
// CRLF line ends. Quoted fields may span lines.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

std::string csv_field(std::string_view value);
std::string csv_row(const std::vector<std::string>& fields);

}  // namespace corpuskit::detail
