#include "stage/core/kvdoc.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace stage {

KvError::KvError(std::size_t line, const std::string& message)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

std::optional<std::string_view> KvSection::get(std::string_view key) const {
    for (const KvEntry& e : entries) {
        if (e.key == key) return std::string_view(e.value);
    }
    return std::nullopt;
}

const KvSection* KvDocument::section(std::string_view name) const {
    for (const KvSection& s : sections) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

KvDocument parse_kv(std::string_view text) {
    // the INI reader only knows ';' comments
    std::string normalized;
    normalized.reserve(text.size());
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        const auto first = line.find_first_not_of(" \t");
        if (first != std::string_view::npos && line[first] == '#') {
            normalized += ';';
            normalized.append(line.substr(first + 1));
        } else {
            normalized.append(line);
        }
        if (end < text.size()) normalized += '\n';
        start = end + 1;
    }

    boost::property_tree::ptree tree;
    std::istringstream in(normalized);
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw KvError(e.line(), e.message());
    }

    KvDocument doc;
    for (const auto& [name, node] : tree) {
        if (node.empty() && !node.data().empty()) throw KvError(0, "key '" + name + "' appears outside any section");
        KvSection section{name, {}};
        for (const auto& [key, value] : node) section.entries.push_back({key, value.data()});
        doc.sections.push_back(std::move(section));
    }
    return doc;
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        const std::size_t s = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > s) out.emplace_back(text.substr(s, i - s));
    }
    return out;
}

double parse_double(std::string_view text, std::string_view what) {
    double v = 0.0;
    const char* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw KvError(0, "invalid " + std::string(what) + " '" + std::string(text) + "'");
    }
    return v;
}

std::vector<double> parse_doubles(std::string_view text, std::size_t expected, std::string_view what) {
    const auto words = split_words(text);
    if (words.size() != expected) {
        throw KvError(0, std::string(what) + " needs " + std::to_string(expected) + " numbers, got '" +
                             std::string(text) + "'");
    }
    std::vector<double> out;
    out.reserve(expected);
    for (const auto& w : words) out.push_back(parse_double(w, what));
    return out;
}

}  // namespace stage
