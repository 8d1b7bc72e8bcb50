#include <gtest/gtest.h>

#include <filesystem>

#include "support/oracles.hpp"
#include "toolplan/catalog.hpp"
#include "toolplan/error.hpp"
#include "toolplan/prompts.hpp"

using namespace toolplan;
using toolplan::testing::fixture_catalog;

namespace {

std::size_t occurrences(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

ErrorKind load_error(const std::string& json) {
    try {
        ToolCatalog::from_json(Json::parse(json));
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an error";
    return ErrorKind::InvalidInput;
}

const ToolSpec& tool(const ToolCatalog& c, std::string_view name) {
    const ToolSpec* t = c.find_tool(name);
    if (!t) throw std::runtime_error("no tool " + std::string(name));
    return *t;
}

}  // namespace

TEST(LoadCatalog, FixtureMatchesInventory) {
    const auto catalog = fixture_catalog();
    ASSERT_EQ(catalog.servers().size(), 5u);
    EXPECT_EQ(catalog.tool_count(), 23u);
    const std::vector<std::pair<std::string, std::size_t>> expected = {
        {"IoT", 4}, {"FMSR", 2}, {"TSFM", 6}, {"Utilities", 3}, {"WorkOrder", 8}};
    for (std::size_t i = 0; i < expected.size(); ++i) {
        EXPECT_EQ(catalog.servers()[i].name, expected[i].first);
        EXPECT_EQ(catalog.servers()[i].tools.size(), expected[i].second);
    }
}

TEST(LoadCatalog, MissingFile) {
    try {
        load_catalog("/nonexistent/catalog.json");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::FileNotFound);
    }
}

TEST(LoadCatalog, DuplicateServerAndTool) {
    EXPECT_EQ(load_error(R"({"servers":[{"name":"IoT","tools":[]},{"name":"IoT","tools":[]}]})"),
              ErrorKind::DuplicateServer);
    EXPECT_EQ(load_error(R"({"servers":[{"name":"IoT","tools":[]},{"name":"IoTAgent","tools":[]}]})"),
              ErrorKind::DuplicateServer);
    EXPECT_EQ(load_error(R"({"servers":[{"name":"A","tools":[{"name":"t","args":[]}]},
                                        {"name":"B","tools":[{"name":"t","args":[]}]}]})"),
              ErrorKind::DuplicateTool);
}

TEST(LoadCatalog, MissingArgsIsSchemaViolationWithPointer) {
    try {
        ToolCatalog::from_json(Json::parse(R"({"servers":[{"name":"IoT","tools":[{"name":"sites"}]}]})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SchemaViolation);
        EXPECT_EQ(e.subject(), "/servers/0/tools/0/args");
    }
    EXPECT_EQ(load_error(R"({"servers":[{"name":"IoT","tools":[{"name":"s","args":[{"key":"a","type":"float"}]}]}]})"),
              ErrorKind::SchemaViolation);
    EXPECT_EQ(load_error(R"({"servers":[{"name":"IoT","tools":[{"name":"s","args":[{"key":"a","type":"string"},
                                                                                  {"key":"a","type":"string"}]}]}]})"),
              ErrorKind::SchemaViolation);
    EXPECT_EQ(load_error(R"({"version":"x"})"), ErrorKind::SchemaViolation);
}

TEST(LoadCatalog, JsonRoundTrip) {
    const auto catalog = fixture_catalog();
    EXPECT_EQ(ToolCatalog::from_json(catalog.to_json()), catalog);
}

TEST(CatalogLookup, CanonicalServerNames) {
    const auto catalog = fixture_catalog();
    EXPECT_EQ(canonical_server("IoTAgent"), "IoT");
    EXPECT_EQ(canonical_server("IoT"), "IoT");
    EXPECT_EQ(canonical_server("Agent"), "Agent");
    EXPECT_EQ(agent_label("FMSR"), "FMSRAgent");
    EXPECT_EQ(agent_label("FMSRAgent"), "FMSRAgent");
    ASSERT_NE(catalog.find_server("WorkOrderAgent"), nullptr);
    EXPECT_EQ(catalog.find_server("WorkOrderAgent")->name, "WorkOrder");
    EXPECT_EQ(catalog.find_server("Nope"), nullptr);
    EXPECT_EQ(tool(catalog, "assets").server, "IoT");
}

TEST(SerializeCatalog, NamesEverythingOnceAndIsStable) {
    const auto catalog = fixture_catalog();
    const std::string text = serialize_catalog(catalog);
    EXPECT_EQ(text, serialize_catalog(fixture_catalog()));
    for (const auto& server : catalog.servers()) {
        EXPECT_EQ(occurrences(text, "## Server " + server.name + " "), 1u) << server.name;
        for (const auto& t : server.tools) EXPECT_EQ(occurrences(text, "### " + t.name + "("), 1u) << t.name;
    }
}

TEST(SerializeCatalog, TokenBudget) {
    const std::size_t tokens = estimate_tokens(serialize_catalog(fixture_catalog()));
    EXPECT_GE(tokens, 1870u);
    EXPECT_LE(tokens, 2530u);
}

TEST(SerializeCatalog, EmptyCatalogIsHeaderOnly) {
    const std::string text = serialize_catalog(ToolCatalog{});
    EXPECT_EQ(text.rfind("# Tool Catalog", 0), 0u);
    EXPECT_EQ(text.find("## Server"), std::string::npos);
}

TEST(SerializeCatalog, DistinguishesCatalogs) {
    auto doc = fixture_catalog().to_json();
    doc["servers"][0]["tools"][0]["description"] = "changed";
    EXPECT_NE(serialize_catalog(ToolCatalog::from_json(doc)), serialize_catalog(fixture_catalog()));
}

TEST(ValidateArgs, Examples) {
    const auto catalog = fixture_catalog();
    const auto& assets = tool(catalog, "assets");
    EXPECT_TRUE(validate_args(assets, Json::parse(R"({"site_name":"MAIN"})")).empty());

    auto missing = validate_args(assets, Json::object());
    ASSERT_EQ(missing.size(), 1u);
    EXPECT_EQ(missing[0].message, "missing required key site_name");

    auto unknown = validate_args(assets, Json::parse(R"({"site_name":"MAIN","x":1})"));
    ASSERT_EQ(unknown.size(), 1u);
    EXPECT_NE(unknown[0].message.find("unknown key x"), std::string::npos);

    auto mismatch = validate_args(assets, Json::parse(R"({"site_name":5})"));
    ASSERT_EQ(mismatch.size(), 1u);
    EXPECT_NE(mismatch[0].message.find("type mismatch for key site_name"), std::string::npos);

    EXPECT_FALSE(validate_args(assets, Json::array()).empty());
}

TEST(ValidateArgs, PlaceholderIsWildcard) {
    const auto catalog = fixture_catalog();
    const auto& mapping = tool(catalog, "get_failure_mode_sensor_mapping");
    EXPECT_TRUE(validate_args(mapping, Json::parse(
        R"({"asset_name":"Chiller 6","failure_modes":"{step_3}","sensors":"{step_2}"})")).empty());
    EXPECT_FALSE(validate_args(mapping, Json::parse(
        R"({"asset_name":"Chiller 6","failure_modes":"see {step_3}","sensors":"{step_2}"})")).empty());
}

TEST(ValidateArgs, EmptyFindingsImplyKeyBounds) {
    // Property: no findings => required keys present and no foreign keys.
    const auto catalog = fixture_catalog();
    std::mt19937_64 rng(5);
    for (const ToolSpec* t : catalog.all_tools()) {
        for (int trial = 0; trial < 20; ++trial) {
            Json args = Json::object();
            for (const auto& a : t->args) {
                if (rng() % 3) args[a.key] = "{step_1}";
            }
            if (rng() % 4 == 0) args["stray"] = 1;
            if (!validate_args(*t, args).empty()) continue;
            for (const auto& a : t->args) {
                if (a.required) {
                    EXPECT_TRUE(args.contains(a.key));
                }
            }
            for (auto it = args.begin(); it != args.end(); ++it) EXPECT_NE(t->find_arg(it.key()), nullptr);
        }
    }
}

TEST(NearMiss, PrefixSimilarity) {
    EXPECT_DOUBLE_EQ(prefix_similarity("abc", "abd"), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(prefix_similarity("abc", "abc"), 1.0);
    EXPECT_DOUBLE_EQ(prefix_similarity("", ""), 1.0);
    EXPECT_DOUBLE_EQ(prefix_similarity("x", "y"), 0.0);
}

TEST(NearMiss, FixtureIncludesFailureModePair) {
    const auto pairs = near_miss_pairs(fixture_catalog());
    bool found = false;
    for (const auto& p : pairs) {
        if (p.first == "get_failure_mode_sensor_mapping" && p.second == "get_failure_modes") found = true;
        EXPECT_GE(p.similarity, kDefaultNearMissThreshold);
        EXPECT_LT(p.first, p.second);
    }
    EXPECT_TRUE(found);
    for (std::size_t i = 1; i < pairs.size(); ++i) EXPECT_GE(pairs[i - 1].similarity, pairs[i].similarity);
}

TEST(NearMiss, SingleToolCatalogIsEmpty) {
    ToolCatalog one({ServerSpec{"S", "", {ToolSpec{"abc", "S", "", {}, ""}}}}, "v");
    EXPECT_TRUE(near_miss_pairs(one).empty());
    ToolCatalog two({ServerSpec{"S", "", {ToolSpec{"abc", "S", "", {}, ""}, ToolSpec{"abd", "S", "", {}, ""}}}}, "v");
    const auto pairs = near_miss_pairs(two, 0.6);
    ASSERT_EQ(pairs.size(), 1u);
    EXPECT_DOUBLE_EQ(pairs[0].similarity, 2.0 / 3.0);
}
