#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace annotab::csv {

// RFC-4180 style parsing: comma delimiter, double-quote quoting with ""
// escapes, CRLF or LF record separators. Input bytes are decoded as UTF-8
// with invalid sequences replaced by U+FFFD before parsing.
// Throws ParseError on unbalanced quotes or garbage after a closing quote.
std::vector<std::vector<std::string>> parse(std::string_view text);

// Serializes records back to RFC-4180 CSV (LF separators, minimal quoting).
std::string serialize(const std::vector<std::vector<std::string>>& records);

// Replaces invalid UTF-8 byte sequences with U+FFFD. Total: never fails.
std::string sanitize_utf8(std::string_view bytes);

}  // namespace annotab::csv
