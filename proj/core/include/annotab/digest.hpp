#pragma once

#include <string>
#include <string_view>

namespace annotab {

// SHA-256 of the given bytes, as a lowercase hex string.
std::string sha256_hex(std::string_view bytes);

// SHA-256 of a file's contents. Throws StoreIoError if unreadable.
std::string sha256_file(const std::string& path);

}  // namespace annotab
