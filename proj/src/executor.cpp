#include "toolplan/executor.hpp"

#include "toolplan/placeholder.hpp"

namespace toolplan {

namespace {

ToolPair key_of(std::string_view server, std::string_view tool) {
    return {canonical_server(server), std::string(tool)};
}

StubResponder canned_responder(const Json& handler, const std::string& pointer) {
    if (!handler.contains("output")) {
        throw Error(ErrorKind::SchemaViolation, "registry handler without output at " + pointer,
                    std::nullopt, pointer + "/output");
    }
    std::vector<std::pair<Json, Json>> cases;
    if (auto it = handler.find("cases"); it != handler.end()) {
        if (!it->is_array()) {
            throw Error(ErrorKind::SchemaViolation, "cases must be an array at " + pointer,
                        std::nullopt, pointer + "/cases");
        }
        for (std::size_t i = 0; i < it->size(); ++i) {
            const Json& c = (*it)[i];
            if (!c.is_object() || !c.contains("when") || !c["when"].is_object() || !c.contains("output")) {
                const std::string p = pointer + "/cases/" + std::to_string(i);
                throw Error(ErrorKind::SchemaViolation, "malformed case at " + p, std::nullopt, p);
            }
            cases.emplace_back(c["when"], c["output"]);
        }
    }
    return [fallback = handler["output"], cases = std::move(cases)](const Json& args) -> Json {
        for (const auto& [when, output] : cases) {
            bool match = true;
            for (const auto& [k, v] : when.items()) {
                if (!args.contains(k) || args[k] != v) {
                    match = false;
                    break;
                }
            }
            if (match) return output;
        }
        return fallback;
    };
}

Json resolve_value(const Json& value, const std::map<int, Json>& outputs) {
    if (value.is_string()) {
        const auto& s = value.get_ref<const std::string&>();
        auto lookup = [&](int n) -> const Json& {
            auto it = outputs.find(n);
            if (it == outputs.end()) {
                throw Error(ErrorKind::UnresolvedPlaceholder,
                            "placeholder " + placeholder_token(n) + " has no output", std::nullopt,
                            placeholder_token(n));
            }
            return it->second;
        };
        if (auto whole = whole_placeholder(s)) return lookup(*whole);
        const auto refs = placeholders_in(s);
        if (refs.empty()) return value;
        std::string out = s;
        for (int n : refs) {
            const std::string token = placeholder_token(n);
            const std::string text = render_output_text(lookup(n));
            for (auto pos = out.find(token); pos != std::string::npos;
                 pos = out.find(token, pos + text.size())) {
                out.replace(pos, token.size(), text);
            }
        }
        return out;
    }
    if (value.is_array()) {
        Json out = Json::array();
        for (const auto& item : value) out.push_back(resolve_value(item, outputs));
        return out;
    }
    if (value.is_object()) {
        Json out = Json::object();
        for (const auto& [k, v] : value.items()) out[k] = resolve_value(v, outputs);
        return out;
    }
    return value;
}

}  // namespace

ToolRegistry::ToolRegistry(ToolCatalog catalog) : catalog_(std::move(catalog)) {}

void ToolRegistry::register_handler(std::string_view server, std::string_view tool,
                                    StubResponder responder) {
    const ToolSpec* spec = catalog_.find_tool(tool);
    if (!spec || canonical_server(spec->server) != canonical_server(server)) {
        throw Error(ErrorKind::UnknownHandler,
                    "handler " + std::string(server) + "." + std::string(tool) + " is not in the catalog",
                    std::nullopt, std::string(server) + "." + std::string(tool));
    }
    handlers_[key_of(server, tool)] = std::move(responder);
}

ToolRegistry ToolRegistry::from_json(const Json& doc, ToolCatalog catalog) {
    ToolRegistry registry(std::move(catalog));
    if (!doc.is_object() || !doc.contains("handlers") || !doc["handlers"].is_array()) {
        throw Error(ErrorKind::SchemaViolation, "registry must have a handlers array", std::nullopt,
                    "/handlers");
    }
    const Json& handlers = doc["handlers"];
    for (std::size_t i = 0; i < handlers.size(); ++i) {
        const std::string pointer = "/handlers/" + std::to_string(i);
        const Json& h = handlers[i];
        if (!h.is_object() || !h.contains("server") || !h["server"].is_string() ||
            !h.contains("tool") || !h["tool"].is_string()) {
            throw Error(ErrorKind::SchemaViolation, "handler needs server and tool at " + pointer,
                        std::nullopt, pointer);
        }
        registry.register_handler(h["server"].get<std::string>(), h["tool"].get<std::string>(),
                                  canned_responder(h, pointer));
    }
    return registry;
}

const StubResponder* ToolRegistry::find(std::string_view server, std::string_view tool) const {
    auto it = handlers_.find(key_of(server, tool));
    return it == handlers_.end() ? nullptr : &it->second;
}

ToolRegistry load_registry(const std::filesystem::path& path, ToolCatalog catalog) {
    Json doc;
    try {
        doc = Json::parse(read_text_file(path));
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::SchemaViolation, path.string() + ": not valid JSON: " + e.what());
    }
    return ToolRegistry::from_json(doc, std::move(catalog));
}

Json TraceRecord::to_json() const {
    return Json{{"step", step},
                {"server", server},
                {"tool", tool},
                {"resolved_args", resolved_args},
                {"output", output}};
}

TraceRecord TraceRecord::from_json(const Json& j) {
    try {
        TraceRecord r;
        r.step = j.at("step").get<int>();
        r.server = j.value("server", std::string{});
        r.tool = j.value("tool", std::string{});
        r.resolved_args = j.value("resolved_args", Json::object());
        r.output = j.value("output", Json());
        return r;
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::InvalidInput, std::string("malformed trace record: ") + e.what());
    }
}

Json ExecutionResult::to_json() const {
    Json outputs = Json::object();
    for (const auto& [i, v] : step_outputs) outputs[std::to_string(i)] = v;
    Json status_json{{"ok", status.ok}};
    if (!status.ok) {
        status_json["failed_step"] = status.failed_step;
        status_json["reason"] = to_string(status.reason);
        status_json["message"] = status.message;
    }
    return Json{{"status", std::move(status_json)}, {"step_outputs", std::move(outputs)}};
}

std::vector<int> check_dependencies(const Plan& plan) {
    std::vector<int> order;
    order.reserve(plan.steps.size());
    for (const auto& s : plan.steps) {
        for (int dep : s.dependencies) {
            if (dep == s.index) {
                throw Error(ErrorKind::SelfDependency,
                            "step " + std::to_string(s.index) + " depends on itself", s.index,
                            std::to_string(dep));
            }
            if (dep > s.index) {
                throw Error(ErrorKind::ForwardDependency,
                            "step " + std::to_string(s.index) + " depends on later step " +
                                std::to_string(dep),
                            s.index, std::to_string(dep));
            }
        }
        order.push_back(s.index);
    }
    return order;
}

Json resolve_placeholders(const Json& args, const std::map<int, Json>& outputs) {
    return resolve_value(args, outputs);
}

std::string render_output_text(const Json& output) {
    if (output.is_string()) return output.get<std::string>();
    return dump_compact(output);
}

ExecutionResult execute_plan(const Plan& plan, const ToolRegistry& registry) {
    ExecutionResult result;
    auto fail = [&](int step, ErrorKind reason, std::string message) {
        result.status = ExecutionStatus{false, step, reason, std::move(message)};
        return result;
    };

    try {
        check_dependencies(plan);
    } catch (const Error& e) {
        return fail(e.step().value_or(0), e.kind(), e.what());
    }

    for (const auto& step : plan.steps) {
        const int idx = step.index;
        if (!step.actionable()) {
            result.step_outputs[idx] = nullptr;
            result.resolved_args[idx] = step.args;
            result.trace.push_back({idx, step.server, step.tool, step.args, nullptr});
            continue;
        }
        const StubResponder* responder = registry.find(step.server, step.tool);
        if (!responder) {
            return fail(idx, ErrorKind::UnknownHandler,
                        "no handler for " + step.server + "." + step.tool);
        }
        Json resolved;
        try {
            resolved = resolve_placeholders(step.args, result.step_outputs);
        } catch (const Error& e) {
            return fail(idx, e.kind(), e.what());
        }
        // A handler is only registered for catalog tools, so the spec exists.
        const ToolSpec* spec = registry.catalog().find_tool(step.tool);
        auto findings = validate_args(*spec, resolved, idx);
        if (has_errors(findings)) {
            std::string message;
            for (const auto& f : findings) {
                if (!message.empty()) message += "; ";
                message += f.message;
            }
            return fail(idx, ErrorKind::ArgValidation, message);
        }
        Json output;
        try {
            output = (*responder)(resolved);
        } catch (const Error& e) {
            return fail(idx, e.kind(), e.what());
        } catch (const std::exception& e) {
            return fail(idx, ErrorKind::InvalidInput, e.what());
        }
        result.resolved_args[idx] = resolved;
        result.step_outputs[idx] = output;
        result.trace.push_back({idx, step.server, step.tool, std::move(resolved), std::move(output)});
    }
    return result;
}

}  // namespace toolplan
