#include "annotab/csv.hpp"

#include <cstdint>

#include "annotab/errors.hpp"

namespace annotab::csv {

namespace {

// Length of a valid UTF-8 sequence starting at p, or 0 if invalid.
std::size_t utf8_seq_len(const unsigned char* p, std::size_t avail) {
    unsigned char b = p[0];
    if (b < 0x80) return 1;
    std::size_t len;
    std::uint32_t min_cp;
    if ((b & 0xE0) == 0xC0) { len = 2; min_cp = 0x80; }
    else if ((b & 0xF0) == 0xE0) { len = 3; min_cp = 0x800; }
    else if ((b & 0xF8) == 0xF0) { len = 4; min_cp = 0x10000; }
    else return 0;
    if (avail < len) return 0;
    std::uint32_t cp = b & (0x7F >> len);
    for (std::size_t i = 1; i < len; ++i) {
        if ((p[i] & 0xC0) != 0x80) return 0;
        cp = (cp << 6) | (p[i] & 0x3F);
    }
    if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) return 0;
    return len;
}

}  // namespace

std::string sanitize_utf8(std::string_view bytes) {
    std::string out;
    out.reserve(bytes.size());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    std::size_t i = 0;
    while (i < bytes.size()) {
        std::size_t len = utf8_seq_len(p + i, bytes.size() - i);
        if (len == 0) {
            out += "\xEF\xBF\xBD";
            ++i;
        } else {
            out.append(bytes.substr(i, len));
            i += len;
        }
    }
    return out;
}

std::vector<std::vector<std::string>> parse(std::string_view raw) {
    std::string text = sanitize_utf8(raw);
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_was_quoted = false;
    bool any_content = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_was_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                } else {
                    in_quotes = false;
                    ++i;
                }
            } else {
                field += c;
                ++i;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty() || field_was_quoted) {
                    throw ParseError("quote inside unquoted field");
                }
                in_quotes = true;
                field_was_quoted = true;
                any_content = true;
                ++i;
                break;
            case ',':
                end_field();
                any_content = true;
                ++i;
                break;
            case '\r':
                if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
                [[fallthrough]];
            case '\n':
                end_record();
                ++i;
                break;
            default:
                if (field_was_quoted) {
                    throw ParseError("content after closing quote");
                }
                field += c;
                any_content = true;
                ++i;
                break;
        }
    }
    if (in_quotes) throw ParseError("unbalanced quote at end of input");
    if (!field.empty() || field_was_quoted || !record.empty()) {
        end_record();
    } else if (any_content && records.empty()) {
        end_record();
    }
    return records;
}

std::string serialize(const std::vector<std::vector<std::string>>& records) {
    std::string out;
    for (const auto& record : records) {
        for (std::size_t i = 0; i < record.size(); ++i) {
            if (i) out += ',';
            const std::string& f = record[i];
            bool needs_quote = f.find_first_of(",\"\r\n") != std::string::npos;
            if (needs_quote) {
                out += '"';
                for (char c : f) {
                    if (c == '"') out += '"';
                    out += c;
                }
                out += '"';
            } else {
                out += f;
            }
        }
        out += '\n';
    }
    return out;
}

}  // namespace annotab::csv
