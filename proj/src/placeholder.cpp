#include "toolplan/placeholder.hpp"

#include <charconv>

namespace toolplan {

namespace {

constexpr std::string_view kOpen = "{step_";

// Parses "{step_N}" at the start of `text`; returns N and the token length.
std::optional<std::pair<int, std::size_t>> match_at(std::string_view text) {
    if (!text.starts_with(kOpen)) return std::nullopt;
    std::size_t pos = kOpen.size();
    std::size_t digits_end = pos;
    while (digits_end < text.size() && text[digits_end] >= '0' && text[digits_end] <= '9') {
        ++digits_end;
    }
    if (digits_end == pos || digits_end >= text.size() || text[digits_end] != '}') {
        return std::nullopt;
    }
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + digits_end, value);
    if (ec != std::errc{}) return std::nullopt;
    return std::pair{value, digits_end + 1};
}

void collect(const Json& value, std::set<int>& out) {
    if (value.is_string()) {
        auto found = placeholders_in(value.get_ref<const std::string&>());
        out.insert(found.begin(), found.end());
    } else if (value.is_array() || value.is_object()) {
        for (const auto& item : value) collect(item, out);
    }
}

}  // namespace

std::optional<int> whole_placeholder(std::string_view text) {
    auto m = match_at(text);
    if (m && m->second == text.size()) return m->first;
    return std::nullopt;
}

std::set<int> placeholders_in(std::string_view text) {
    std::set<int> out;
    for (std::size_t pos = text.find(kOpen); pos != std::string_view::npos;
         pos = text.find(kOpen, pos + 1)) {
        if (auto m = match_at(text.substr(pos))) out.insert(m->first);
    }
    return out;
}

std::set<int> placeholders_in(const Json& value) {
    std::set<int> out;
    collect(value, out);
    return out;
}

std::string placeholder_token(int step) { return "{step_" + std::to_string(step) + "}"; }

}  // namespace toolplan
