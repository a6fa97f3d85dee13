#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace medlink {

// Thrown when an input file or argument violates its documented format.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
bool file_exists(const std::string& path);

// Splits on '\n', dropping a trailing '\r' per line. A final empty line is ignored.
std::vector<std::string> split_lines(std::string_view text);

std::vector<std::string> split_ws(std::string_view text);
std::vector<std::string> split_char(std::string_view text, char sep);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

// FNV-1a over the raw bytes, used to fingerprint input files in reports.
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);
std::string file_hash_hex(const std::string& path);

// Decodes one UTF-8 codepoint starting at `i`; advances `i`. Invalid bytes
// decode as U+FFFD and advance by one.
char32_t decode_utf8(std::string_view s, std::size_t& i);
void encode_utf8(char32_t cp, std::string& out);
std::vector<char32_t> to_codepoints(std::string_view s);
std::string from_codepoints(const std::vector<char32_t>& cps);

}  // namespace medlink
