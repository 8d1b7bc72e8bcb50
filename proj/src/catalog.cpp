#include "toolplan/catalog.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "toolplan/error.hpp"
#include "toolplan/placeholder.hpp"

namespace toolplan {

std::string_view to_string(Severity severity) {
    return severity == Severity::Error ? "error" : "warning";
}

bool has_errors(const std::vector<Finding>& findings) {
    return std::any_of(findings.begin(), findings.end(),
                       [](const Finding& f) { return f.severity == Severity::Error; });
}

namespace {

constexpr std::pair<ArgType, std::string_view> kTypeNames[] = {
    {ArgType::String, "string"}, {ArgType::Integer, "integer"}, {ArgType::Number, "number"},
    {ArgType::Boolean, "boolean"}, {ArgType::Object, "object"}, {ArgType::Array, "array"},
};

std::string_view json_type_name(const Json& v) {
    if (v.is_string()) return "string";
    if (v.is_number_integer()) return "integer";
    if (v.is_number()) return "number";
    if (v.is_boolean()) return "boolean";
    if (v.is_object()) return "object";
    if (v.is_array()) return "array";
    return "null";
}

bool matches_type(const Json& v, ArgType type) {
    switch (type) {
        case ArgType::String: return v.is_string();
        case ArgType::Integer: return v.is_number_integer();
        case ArgType::Number: return v.is_number();
        case ArgType::Boolean: return v.is_boolean();
        case ArgType::Object: return v.is_object();
        case ArgType::Array: return v.is_array();
    }
    return false;
}

[[noreturn]] void schema_error(const std::string& pointer, const std::string& what) {
    throw Error(ErrorKind::SchemaViolation, "catalog schema violation at " + pointer + ": " + what,
                std::nullopt, pointer);
}

const Json& require(const Json& obj, const char* key, const std::string& pointer) {
    if (!obj.is_object()) schema_error(pointer, "expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) schema_error(pointer + "/" + key, "missing required field");
    return *it;
}

std::string require_string(const Json& obj, const char* key, const std::string& pointer) {
    const auto& v = require(obj, key, pointer);
    if (!v.is_string() || v.get_ref<const std::string&>().empty()) {
        schema_error(pointer + "/" + key, "expected a non-empty string");
    }
    return v.get<std::string>();
}

std::string optional_string(const Json& obj, const char* key, const std::string& pointer) {
    auto it = obj.find(key);
    if (it == obj.end()) return {};
    if (!it->is_string()) schema_error(pointer + "/" + key, "expected a string");
    return it->get<std::string>();
}

const Json& require_array(const Json& obj, const char* key, const std::string& pointer) {
    const auto& v = require(obj, key, pointer);
    if (!v.is_array()) schema_error(pointer + "/" + key, "expected an array");
    return v;
}

std::string signature(const ToolSpec& tool) {
    std::string out = tool.name + "(";
    for (std::size_t i = 0; i < tool.args.size(); ++i) {
        const auto& a = tool.args[i];
        if (i) out += ", ";
        out += a.key;
        if (!a.required) out += "?";
        out += ": ";
        out += to_string(a.type);
    }
    out += ")";
    return out;
}

}  // namespace

std::string_view to_string(ArgType type) {
    for (const auto& [t, name] : kTypeNames) {
        if (t == type) return name;
    }
    return "string";
}

std::optional<ArgType> parse_arg_type(std::string_view name) {
    for (const auto& [t, n] : kTypeNames) {
        if (n == name) return t;
    }
    return std::nullopt;
}

const ArgSpec* ToolSpec::find_arg(std::string_view key) const {
    auto it = std::find_if(args.begin(), args.end(), [&](const ArgSpec& a) { return a.key == key; });
    return it == args.end() ? nullptr : &*it;
}

std::string canonical_server(std::string_view name) {
    constexpr std::string_view suffix = "Agent";
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
        name.remove_suffix(suffix.size());
    }
    return std::string(name);
}

std::string agent_label(std::string_view server) { return canonical_server(server) + "Agent"; }

ToolCatalog::ToolCatalog(std::vector<ServerSpec> servers, std::string version)
    : servers_(std::move(servers)), version_(std::move(version)) {
    std::set<std::string> server_names;
    std::set<std::string> tool_names;
    for (auto& server : servers_) {
        if (server.name.empty()) {
            throw Error(ErrorKind::SchemaViolation, "server with empty name");
        }
        if (!server_names.insert(canonical_server(server.name)).second) {
            throw Error(ErrorKind::DuplicateServer, "duplicate server " + server.name, std::nullopt,
                        server.name);
        }
        for (auto& tool : server.tools) {
            tool.server = server.name;
            if (tool.name.empty()) {
                throw Error(ErrorKind::SchemaViolation, "tool with empty name on server " + server.name);
            }
            if (!tool_names.insert(tool.name).second) {
                throw Error(ErrorKind::DuplicateTool, "duplicate tool " + tool.name, std::nullopt,
                            tool.name);
            }
            std::set<std::string> keys;
            for (const auto& arg : tool.args) {
                if (!keys.insert(arg.key).second) {
                    throw Error(ErrorKind::SchemaViolation,
                                "duplicate argument " + arg.key + " on tool " + tool.name,
                                std::nullopt, tool.name);
                }
            }
        }
    }
}

ToolCatalog ToolCatalog::from_json(const Json& doc) {
    if (!doc.is_object()) schema_error("", "expected a top-level object");
    std::string version;
    if (auto it = doc.find("version"); it != doc.end()) {
        if (!it->is_string()) schema_error("/version", "expected a string");
        version = it->get<std::string>();
    }
    const auto& servers_json = require_array(doc, "servers", "");
    std::vector<ServerSpec> servers;
    for (std::size_t s = 0; s < servers_json.size(); ++s) {
        const std::string sp = "/servers/" + std::to_string(s);
        const auto& sj = servers_json[s];
        ServerSpec server;
        server.name = require_string(sj, "name", sp);
        server.description = optional_string(sj, "description", sp);
        const auto& tools_json = require_array(sj, "tools", sp);
        for (std::size_t t = 0; t < tools_json.size(); ++t) {
            const std::string tp = sp + "/tools/" + std::to_string(t);
            const auto& tj = tools_json[t];
            ToolSpec tool;
            tool.name = require_string(tj, "name", tp);
            tool.server = server.name;
            tool.description = optional_string(tj, "description", tp);
            tool.returns = optional_string(tj, "returns", tp);
            const auto& args_json = require_array(tj, "args", tp);
            for (std::size_t a = 0; a < args_json.size(); ++a) {
                const std::string ap = tp + "/args/" + std::to_string(a);
                const auto& aj = args_json[a];
                ArgSpec arg;
                arg.key = require_string(aj, "key", ap);
                auto type = parse_arg_type(require_string(aj, "type", ap));
                if (!type) schema_error(ap + "/type", "unknown argument type");
                arg.type = *type;
                if (auto it = aj.find("required"); it != aj.end()) {
                    if (!it->is_boolean()) schema_error(ap + "/required", "expected a boolean");
                    arg.required = it->get<bool>();
                }
                tool.args.push_back(std::move(arg));
            }
            server.tools.push_back(std::move(tool));
        }
        servers.push_back(std::move(server));
    }
    return ToolCatalog(std::move(servers), std::move(version));
}

Json ToolCatalog::to_json() const {
    Json servers = Json::array();
    for (const auto& server : servers_) {
        Json tools = Json::array();
        for (const auto& tool : server.tools) {
            Json args = Json::array();
            for (const auto& a : tool.args) {
                args.push_back({{"key", a.key}, {"type", to_string(a.type)}, {"required", a.required}});
            }
            tools.push_back({{"name", tool.name},
                             {"description", tool.description},
                             {"args", std::move(args)},
                             {"returns", tool.returns}});
        }
        servers.push_back(
            {{"name", server.name}, {"description", server.description}, {"tools", std::move(tools)}});
    }
    return Json{{"version", version_}, {"servers", std::move(servers)}};
}

std::size_t ToolCatalog::tool_count() const noexcept {
    std::size_t n = 0;
    for (const auto& s : servers_) n += s.tools.size();
    return n;
}

const ServerSpec* ToolCatalog::find_server(std::string_view name) const {
    const std::string key = canonical_server(name);
    for (const auto& s : servers_) {
        if (canonical_server(s.name) == key) return &s;
    }
    return nullptr;
}

const ToolSpec* ToolCatalog::find_tool(std::string_view name) const {
    for (const auto& s : servers_) {
        for (const auto& t : s.tools) {
            if (t.name == name) return &t;
        }
    }
    return nullptr;
}

std::vector<const ToolSpec*> ToolCatalog::all_tools() const {
    std::vector<const ToolSpec*> out;
    for (const auto& s : servers_) {
        for (const auto& t : s.tools) out.push_back(&t);
    }
    return out;
}

ToolCatalog load_catalog(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw Error(ErrorKind::SchemaViolation, path.string() + ": not valid JSON: " + e.what(),
                    std::nullopt, "");
    }
    return ToolCatalog::from_json(doc);
}

std::string serialize_catalog(const ToolCatalog& catalog) {
    std::string out = "# Tool Catalog\n";
    if (!catalog.version().empty()) out += "version: " + catalog.version() + "\n";
    for (const auto& server : catalog.servers()) {
        out += "\n## Server " + server.name + " (#Agent: " + agent_label(server.name) + ")\n";
        if (!server.description.empty()) out += server.description + "\n";
        for (const auto& tool : server.tools) {
            out += "\n### " + signature(tool);
            if (!tool.returns.empty()) out += " -> " + tool.returns;
            out += "\n";
            if (!tool.args.empty()) {
                out += "Arguments:\n";
                for (const auto& a : tool.args) {
                    out += "- " + a.key + " (" + std::string(to_string(a.type)) +
                           (a.required ? ", required" : ", optional") + ")\n";
                }
            }
            if (!tool.description.empty()) out += "Description: " + tool.description + "\n";
        }
    }
    return out;
}

std::vector<Finding> validate_args(const ToolSpec& tool, const Json& args, int step) {
    std::vector<Finding> findings;
    if (!args.is_object()) {
        findings.push_back({Severity::Error, step, "arguments for " + tool.name + " must be a JSON object"});
        return findings;
    }
    for (const auto& spec : tool.args) {
        if (spec.required && !args.contains(spec.key)) {
            findings.push_back({Severity::Error, step, "missing required key " + spec.key});
        }
    }
    for (const auto& [key, value] : args.items()) {
        const ArgSpec* spec = tool.find_arg(key);
        if (!spec) {
            findings.push_back({Severity::Error, step, "unknown key " + key + " for tool " + tool.name});
            continue;
        }
        if (value.is_string() && whole_placeholder(value.get_ref<const std::string&>())) continue;
        if (!matches_type(value, spec->type)) {
            findings.push_back({Severity::Error, step,
                                "type mismatch for key " + key + ": expected " +
                                    std::string(to_string(spec->type)) + ", got " +
                                    std::string(json_type_name(value))});
        }
    }
    return findings;
}

double prefix_similarity(std::string_view a, std::string_view b) {
    const std::size_t longest = std::max(a.size(), b.size());
    if (longest == 0) return 1.0;
    std::size_t lcp = 0;
    while (lcp < a.size() && lcp < b.size() && a[lcp] == b[lcp]) ++lcp;
    return static_cast<double>(lcp) / static_cast<double>(longest);
}

std::vector<NearMiss> near_miss_pairs(const ToolCatalog& catalog, double threshold) {
    const auto tools = catalog.all_tools();
    std::vector<NearMiss> out;
    for (std::size_t i = 0; i < tools.size(); ++i) {
        for (std::size_t j = i + 1; j < tools.size(); ++j) {
            const double sim = prefix_similarity(tools[i]->name, tools[j]->name);
            if (sim < threshold) continue;
            auto [lo, hi] = std::minmax(tools[i]->name, tools[j]->name);
            out.push_back({lo, hi, sim});
        }
    }
    std::sort(out.begin(), out.end(), [](const NearMiss& x, const NearMiss& y) {
        if (x.similarity != y.similarity) return x.similarity > y.similarity;
        if (x.first != y.first) return x.first < y.first;
        return x.second < y.second;
    });
    return out;
}

}  // namespace toolplan
