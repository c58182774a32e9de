#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace stage {

// Section/key-value text documents (scene files, retarget profiles, puppeteer configs).
//
//   # comment            ; also a comment
//   [section]
//   key = value
//
// Keys are unique within a section; sections keep their order of appearance.
struct KvEntry {
    std::string key;
    std::string value;
};

struct KvSection {
    std::string name;
    std::vector<KvEntry> entries;

    std::optional<std::string_view> get(std::string_view key) const;
};

class KvError : public std::runtime_error {
public:
    KvError(std::size_t line, const std::string& message);
    std::size_t line() const { return line_; }  // 0 when not tied to a line

private:
    std::size_t line_;
};

struct KvDocument {
    std::vector<KvSection> sections;

    const KvSection* section(std::string_view name) const;
};

KvDocument parse_kv(std::string_view text);

// Splits on ASCII whitespace.
std::vector<std::string> split_words(std::string_view text);

// Strict number parsing; throws KvError naming `what`.
double parse_double(std::string_view text, std::string_view what);
std::vector<double> parse_doubles(std::string_view text, std::size_t expected, std::string_view what);

}  // namespace stage
