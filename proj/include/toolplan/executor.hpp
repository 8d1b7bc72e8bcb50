#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toolplan/catalog.hpp"
#include "toolplan/error.hpp"
#include "toolplan/io.hpp"
#include "toolplan/plan.hpp"

namespace toolplan {

/// Maps an argument object to the tool's output.
using StubResponder = std::function<Json(const Json& args)>;

/// Stub tools keyed by (server, tool). Every handler must name a tool the
/// catalog assigns to that server.
class ToolRegistry {
public:
    explicit ToolRegistry(ToolCatalog catalog);

    /// Throws UnknownHandler when the pair is not in the catalog.
    void register_handler(std::string_view server, std::string_view tool, StubResponder responder);

    /// Canned responses:
    ///   {"handlers": [{"server", "tool", "output", "cases": [{"when": {...}, "output"}]}]}
    /// A case applies when every `when` entry equals the argument of the same
    /// key; otherwise `output` is returned.
    static ToolRegistry from_json(const Json& doc, ToolCatalog catalog);

    const StubResponder* find(std::string_view server, std::string_view tool) const;
    const ToolCatalog& catalog() const noexcept { return catalog_; }
    std::size_t size() const noexcept { return handlers_.size(); }

private:
    ToolCatalog catalog_;
    std::map<ToolPair, StubResponder> handlers_;
};

ToolRegistry load_registry(const std::filesystem::path& path, ToolCatalog catalog);

/// One executed (or skipped) step.
struct TraceRecord {
    int step = 0;
    std::string server;
    std::string tool;
    Json resolved_args = Json::object();
    Json output;

    Json to_json() const;
    static TraceRecord from_json(const Json& j);
};

struct ExecutionStatus {
    bool ok = true;
    int failed_step = 0;
    ErrorKind reason = ErrorKind::InvalidInput;
    std::string message;
};

struct ExecutionResult {
    std::map<int, Json> step_outputs;
    std::map<int, Json> resolved_args;
    ExecutionStatus status;
    std::vector<TraceRecord> trace;

    bool ok() const noexcept { return status.ok; }
    Json to_json() const;
};

/// Execution order (the plan's own order). Throws ForwardDependency or
/// SelfDependency.
std::vector<int> check_dependencies(const Plan& plan);

/// A value that is exactly "{step_N}" becomes output N unchanged; a string
/// containing the token gets output N's text substituted. Throws
/// UnresolvedPlaceholder for references missing from `outputs`.
Json resolve_placeholders(const Json& args, const std::map<int, Json>& outputs);

/// Text form used for embedded substitution: strings verbatim, anything else
/// as compact JSON.
std::string render_output_text(const Json& output);

/// Runs steps in order, halting at the first failure. Non-actionable steps
/// record a null output and invoke nothing.
ExecutionResult execute_plan(const Plan& plan, const ToolRegistry& registry);

}  // namespace toolplan
