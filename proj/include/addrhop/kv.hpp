#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace addrhop {

using KeyValues = std::map<std::string, std::string, std::less<>>;

// UTF-8 key=value lines; '#' starts a comment, blank lines are skipped,
// whitespace around keys and values is trimmed. Throws std::invalid_argument
// on a line without '=' or on a repeated key.
KeyValues parse_kv(std::string_view text);
// Throws std::runtime_error when the file cannot be opened.
KeyValues read_kv_file(const std::string& path);

const std::string& require(const KeyValues& kv, std::string_view key);

double parse_double(std::string_view text);
std::uint64_t parse_u64(std::string_view text);
std::uint64_t parse_hex64(std::string_view text);
std::string hex64(std::uint64_t v);

// Comma-separated list of doubles.
std::vector<double> parse_double_list(std::string_view text);

}  // namespace addrhop
