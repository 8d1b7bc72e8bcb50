#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "toolplan/io.hpp"

namespace toolplan {

enum class Severity { Warning, Error };

std::string_view to_string(Severity severity);

/// A validation result. Findings are data; callers decide what to do with
/// them. `step` is 0 when the finding is not tied to a plan step.
struct Finding {
    Severity severity = Severity::Error;
    int step = 0;
    std::string message;

    bool operator==(const Finding&) const = default;
};

bool has_errors(const std::vector<Finding>& findings);

enum class ArgType { String, Integer, Number, Boolean, Object, Array };

std::string_view to_string(ArgType type);
std::optional<ArgType> parse_arg_type(std::string_view name);

struct ArgSpec {
    std::string key;
    ArgType type = ArgType::String;
    bool required = false;

    bool operator==(const ArgSpec&) const = default;
};

struct ToolSpec {
    std::string name;
    std::string server;
    std::string description;
    std::vector<ArgSpec> args;
    std::string returns;

    const ArgSpec* find_arg(std::string_view key) const;
    bool operator==(const ToolSpec&) const = default;
};

struct ServerSpec {
    std::string name;
    std::string description;
    std::vector<ToolSpec> tools;

    bool operator==(const ServerSpec&) const = default;
};

/// Plans name servers with an "Agent" suffix (IoTAgent) while the catalog
/// uses short names (IoT). Lookups go through this canonical form.
std::string canonical_server(std::string_view name);

/// The label a plan writes after `#Agent`.
std::string agent_label(std::string_view server);

/// The fixed tool inventory. Immutable once built; construction validates
/// server and tool uniqueness.
class ToolCatalog {
public:
    ToolCatalog() = default;
    /// Throws DuplicateServer / DuplicateTool / SchemaViolation.
    ToolCatalog(std::vector<ServerSpec> servers, std::string version);

    static ToolCatalog from_json(const Json& doc);
    Json to_json() const;

    const std::vector<ServerSpec>& servers() const noexcept { return servers_; }
    const std::string& version() const noexcept { return version_; }

    std::size_t tool_count() const noexcept;
    bool empty() const noexcept { return servers_.empty(); }

    /// Accepts either the short or the Agent-suffixed name.
    const ServerSpec* find_server(std::string_view name) const;
    const ToolSpec* find_tool(std::string_view name) const;
    std::vector<const ToolSpec*> all_tools() const;

    bool operator==(const ToolCatalog&) const = default;

private:
    std::vector<ServerSpec> servers_;
    std::string version_;
};

ToolCatalog load_catalog(const std::filesystem::path& path);

/// Prompt text for the catalog section of the informed prompt. Byte-stable
/// for equal catalogs.
std::string serialize_catalog(const ToolCatalog& catalog);

/// Checks an argument object against the tool schema: missing required keys,
/// unknown keys, type mismatches. A whole-value `{step_N}` placeholder
/// matches any type since its value is only known at execution time.
std::vector<Finding> validate_args(const ToolSpec& tool, const Json& args, int step = 0);

struct NearMiss {
    std::string first;
    std::string second;
    double similarity = 0.0;
};

inline constexpr double kDefaultNearMissThreshold = 0.5;

/// Longest common prefix length divided by the longer name's length.
double prefix_similarity(std::string_view a, std::string_view b);

/// Unordered tool-name pairs with prefix_similarity >= threshold, sorted by
/// similarity descending, then by names.
std::vector<NearMiss> near_miss_pairs(const ToolCatalog& catalog,
                                      double threshold = kDefaultNearMissThreshold);

}  // namespace toolplan
