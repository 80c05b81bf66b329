#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace cfx {

/// A cell value: numeric for continuous features, text for categorical ones.
using Value = std::variant<double, std::string>;

inline bool is_numeric(const Value& v) { return std::holds_alternative<double>(v); }

inline double as_number(const Value& v) { return std::get<double>(v); }

inline const std::string& as_text(const Value& v) { return std::get<std::string>(v); }

/// Canonical numeric parse: the whole token must be consumed.
inline std::optional<double> parse_number(std::string_view text) {
    // Trim ASCII whitespace; std::from_chars accepts none of it.
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
        text.remove_suffix(1);
    if (text.empty()) return std::nullopt;
    double out = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    if (ec != std::errc() || ptr != last) return std::nullopt;
    if (std::isnan(out) || std::isinf(out)) return std::nullopt;
    return out;
}

/// Shortest round-trip formatting; integral values print without a decimal point.
inline std::string format_number(double v) {
    if (v == static_cast<long long>(v) && std::abs(v) < 1e15) {
        return std::to_string(static_cast<long long>(v));
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

inline std::string format_value(const Value& v) {
    return is_numeric(v) ? format_number(as_number(v)) : as_text(v);
}

inline bool values_equal(const Value& a, const Value& b) {
    if (a.index() != b.index()) return false;
    if (is_numeric(a)) return as_number(a) == as_number(b);
    return as_text(a) == as_text(b);
}

}  // namespace cfx
