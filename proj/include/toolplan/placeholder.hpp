#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "toolplan/io.hpp"

namespace toolplan {

/// N when `text` is exactly "{step_N}".
std::optional<int> whole_placeholder(std::string_view text);

/// Every N referenced by a "{step_N}" token inside `text`.
std::set<int> placeholders_in(std::string_view text);
inline std::set<int> placeholders_in(const std::string& text) { return placeholders_in(std::string_view(text)); }
inline std::set<int> placeholders_in(const char* text) { return placeholders_in(std::string_view(text)); }

/// Every N referenced anywhere inside a JSON value, recursing into arrays
/// and objects (keys are not scanned).
std::set<int> placeholders_in(const Json& value);

std::string placeholder_token(int step);

}  // namespace toolplan
