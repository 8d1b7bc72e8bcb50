#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"
#include "toolplan/error.hpp"
#include "toolplan/io.hpp"
#include "toolplan/plan.hpp"

using namespace toolplan;
using toolplan::testing::fixture_catalog;
using toolplan::testing::fixture_path;

namespace {

Plan scenario_114() { return parse_plan(read_text_file(fixture_path("scenario_114.plan"))); }

ErrorKind kind_of(std::string_view text) {
    try {
        parse_plan(text);
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected an error for:\n" << text;
    return ErrorKind::InvalidInput;
}

bool has_message(const std::vector<Finding>& findings, std::string_view needle) {
    for (const auto& f : findings) {
        if (f.message.find(needle) != std::string::npos) return true;
    }
    return false;
}

}  // namespace

TEST(ParsePlan, Scenario114) {
    const Plan plan = scenario_114();
    ASSERT_EQ(plan.steps.size(), 4u);
    EXPECT_EQ(plan.steps[0].server, "IoTAgent");
    EXPECT_EQ(plan.steps[0].tool, "assets");
    EXPECT_EQ(plan.steps[0].args, Json::parse(R"({"site_name":"MAIN"})"));
    EXPECT_TRUE(plan.steps[0].dependencies.empty());
    EXPECT_EQ(plan.steps[3].dependencies, (std::vector<int>{2, 3}));
    EXPECT_EQ(plan.steps[3].args["failure_modes"], "{step_3}");
}

TEST(ParsePlan, EmptyInput) {
    EXPECT_EQ(kind_of(""), ErrorKind::EmptyInput);
    EXPECT_EQ(kind_of("  \n\t\n"), ErrorKind::EmptyInput);
}

TEST(ParsePlan, NoneStepIsNonActionable) {
    const Plan plan = parse_plan("#Task1: Summarize\n#Agent1: none\n#Tool1: none\n#Args1: none\n#Dependency1: none\n"
                                 "#ExpectedOutput1: summary\n");
    ASSERT_EQ(plan.steps.size(), 1u);
    EXPECT_FALSE(plan.steps[0].actionable());
    EXPECT_EQ(plan.steps[0].args, Json::object());
    EXPECT_EQ(parse_plan(render_plan(plan)), plan);
}

TEST(ParsePlan, MissingDependencyAndExpectedOutputDefault) {
    const Plan plan = parse_plan("#Task1: t\n#Agent1: IoTAgent\n#Tool1: sites\n");
    ASSERT_EQ(plan.steps.size(), 1u);
    EXPECT_TRUE(plan.steps[0].dependencies.empty());
    EXPECT_EQ(plan.steps[0].args, Json::object());
    EXPECT_EQ(plan.steps[0].expected_output, "");
}

TEST(ParsePlan, MissingToolNamesMarkerAndStep) {
    try {
        parse_plan("#Task1: a\n#Agent1: IoT\n#Tool1: sites\n\n#Task2: b\n#Agent2: IoT\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MalformedStep);
        EXPECT_EQ(e.step(), 2);
        EXPECT_EQ(e.subject(), "#Tool");
    }
}

TEST(ParsePlan, MalformedArgsCarriesText) {
    try {
        parse_plan("#Task1: a\n#Agent1: IoT\n#Tool1: assets\n#Args1: {\"site_name\": MAIN}\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MalformedArgs);
        EXPECT_EQ(e.step(), 1);
        EXPECT_NE(e.subject().find("MAIN"), std::string::npos);
    }
    EXPECT_EQ(kind_of("#Task1: a\n#Agent1: IoT\n#Tool1: assets\n#Args1: [1, 2]\n"), ErrorKind::MalformedArgs);
}

TEST(ParsePlan, ForwardAndSelfDependency) {
    EXPECT_EQ(kind_of("#Task1: a\n#Agent1: IoT\n#Tool1: sites\n#Dependency1: 2\n\n#Task2: b\n#Agent2: IoT\n#Tool2: sites\n"),
              ErrorKind::ForwardDependency);
    EXPECT_EQ(kind_of("#Task1: a\n#Agent1: IoT\n#Tool1: sites\n#Dependency1: 1\n"), ErrorKind::ForwardDependency);
}

TEST(ParsePlan, DependencySyntaxVariants) {
    const std::string base = "#Task1: a\n#Agent1: IoT\n#Tool1: sites\n\n#Task2: b\n#Agent2: IoT\n#Tool2: sites\n\n"
                             "#Task3: c\n#Agent3: IoT\n#Tool3: sites\n#Dependency3: ";
    for (const char* deps : {"1, 2", "#S1, #S2", "step_1,step_2", "S1, S2"}) {
        EXPECT_EQ(parse_plan(base + deps + "\n").steps[2].dependencies, (std::vector<int>{1, 2})) << deps;
    }
    EXPECT_TRUE(parse_plan(base + "None\n").steps[2].dependencies.empty());
    EXPECT_EQ(kind_of(base + "first\n"), ErrorKind::MalformedStep);
}

TEST(ParsePlan, WrongOrderAndStrayMarkers) {
    EXPECT_EQ(kind_of("#Task2: a\n#Agent2: IoT\n#Tool2: sites\n"), ErrorKind::MalformedStep);
    EXPECT_EQ(kind_of("#Agent1: IoT\n#Tool1: sites\n"), ErrorKind::MalformedStep);
    EXPECT_EQ(kind_of("#Task1: a\n#Agent2: IoT\n#Tool1: sites\n"), ErrorKind::MalformedStep);
    EXPECT_EQ(kind_of("just prose, no plan here"), ErrorKind::MalformedStep);
}

TEST(ParsePlan, IgnoresProseAndAcceptsMultilineArgs) {
    const Plan plan = parse_plan(
        "Here is the plan.\n\n#Task1: a\n#Agent1: IoTAgent\n#Tool1: sensors\n#Args1: {\n  \"site_name\": \"MAIN\",\n"
        "  \"asset_id\": \"Chiller 6\"\n}\n#Dependency1: none\n#ExpectedOutput1: sensors\n\nHope this helps.\n");
    ASSERT_EQ(plan.steps.size(), 1u);
    EXPECT_EQ(plan.steps[0].args["asset_id"], "Chiller 6");
}

TEST(ParsePlan, ErrorsAreTotal) {
    // Every prefix of a valid plan either parses or raises exactly one typed error.
    const std::string text = read_text_file(fixture_path("scenario_114.plan"));
    for (std::size_t n = 0; n <= text.size(); n += 7) {
        try {
            parse_plan(text.substr(0, n));
        } catch (const Error&) {
        } catch (...) {
            FAIL() << "untyped exception at prefix " << n;
        }
    }
}

TEST(RenderPlan, Scenario114HasFourTasksAndRoundTrips) {
    const Plan plan = scenario_114();
    const std::string text = render_plan(plan);
    std::size_t tasks = 0;
    for (auto pos = text.find("#Task"); pos != std::string::npos; pos = text.find("#Task", pos + 1)) ++tasks;
    EXPECT_EQ(tasks, 4u);
    EXPECT_EQ(parse_plan(text), plan);
    EXPECT_EQ(render_plan(parse_plan(text)), text);
}

TEST(RenderPlan, MinimalStepIsSixLines) {
    Plan plan;
    PlanStep s;
    s.task = "list sites";
    s.server = "IoTAgent";
    s.tool = "sites";
    plan.steps.push_back(s);
    const std::string text = render_plan(plan);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 6);
}

TEST(RenderPlan, RandomRoundTripFixpoint) {
    const auto catalog = fixture_catalog();
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        Plan plan = toolplan::testing::random_plan(rng, catalog, 5);
        if (plan.steps.empty()) continue;
        plan.steps.back().expected_output = "value " + std::to_string(i);
        const Plan back = parse_plan(render_plan(plan));
        ASSERT_EQ(back, plan) << render_plan(plan);
    }
}

TEST(ValidateStructure, Scenario114IsClean) {
    EXPECT_TRUE(validate_structure(scenario_114(), fixture_catalog()).empty());
}

TEST(ValidateStructure, OwnershipUnknownAndSelfDependency) {
    const auto catalog = fixture_catalog();
    Plan plan;
    PlanStep a;
    a.index = 1;
    a.server = "FMSR";
    a.tool = "assets";
    a.args = Json::parse(R"({"site_name":"MAIN"})");
    plan.steps.push_back(a);
    auto findings = validate_structure(plan, catalog);
    EXPECT_TRUE(has_message(findings, "tool not owned by server"));

    plan.steps[0].server = "Nope";
    EXPECT_TRUE(has_message(validate_structure(plan, catalog), "unknown server Nope"));
    plan.steps[0].server = "IoT";
    plan.steps[0].tool = "teleport";
    EXPECT_TRUE(has_message(validate_structure(plan, catalog), "unknown tool teleport"));

    plan.steps[0].tool = "assets";
    plan.steps[0].dependencies = {1};
    EXPECT_TRUE(has_message(validate_structure(plan, catalog), "self dependency"));
    plan.steps[0].dependencies = {};
    plan.steps[0].args = Json::object();
    EXPECT_TRUE(has_message(validate_structure(plan, catalog), "missing required key site_name"));
}

TEST(ValidateStructure, PlaceholderChecks) {
    const auto catalog = fixture_catalog();
    Plan plan = scenario_114();
    plan.steps[3].dependencies = {2};  // still references {step_3}
    auto findings = validate_structure(plan, catalog);
    ASSERT_FALSE(findings.empty());
    EXPECT_FALSE(has_errors(findings));
    EXPECT_EQ(findings[0].severity, Severity::Warning);

    plan = scenario_114();
    plan.steps[1].args["asset_id"] = "{step_4}";
    EXPECT_TRUE(has_errors(validate_structure(plan, catalog)));
}

TEST(ValidateStructure, FixtureGoldPlansHaveNoErrors) {
    const auto catalog = fixture_catalog();
    for (const auto& line : read_jsonl(fixture_path("corpus.jsonl"))) {
        const Plan plan = parse_plan(line["gold_plan"].get<std::string>());
        EXPECT_FALSE(has_errors(validate_structure(plan, catalog))) << line["id"];
    }
}

TEST(ExtractPairs, Scenario114) {
    const std::set<ToolPair> expected = {{"IoTAgent", "assets"},
                                         {"IoTAgent", "sensors"},
                                         {"FMSRAgent", "get_failure_modes"},
                                         {"FMSRAgent", "get_failure_mode_sensor_mapping"}};
    EXPECT_EQ(extract_actionable_pairs(scenario_114()), expected);
}

TEST(ExtractPairs, NoneOnlyAndDuplicates) {
    EXPECT_TRUE(extract_actionable_pairs(parse_plan("#Task1: x\n#Agent1: none\n#Tool1: none\n")).empty());
    const Plan twice = parse_plan(
        "#Task1: a\n#Agent1: IoTAgent\n#Tool1: assets\n#Args1: {\"site_name\":\"MAIN\"}\n\n"
        "#Task2: b\n#Agent2: IoTAgent\n#Tool2: assets\n#Args2: {\"site_name\":\"EAST\"}\n");
    EXPECT_EQ(extract_actionable_pairs(twice).size(), 1u);
}

TEST(ExtractPairs, CardinalityBoundedBySteps) {
    const auto catalog = fixture_catalog();
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
        const Plan p = toolplan::testing::random_plan(rng, catalog, 5);
        EXPECT_LE(extract_actionable_pairs(p).size(), p.steps.size());
    }
}
