#include <gtest/gtest.h>

#include "support/cli_runner.hpp"
#include "support/oracles.hpp"
#include "support/synthetic_corpus.hpp"
#include "toolplan/dataset.hpp"
#include "toolplan/io.hpp"

using namespace toolplan;
using toolplan::testing::fixture_path;
using toolplan::testing::run_cli;
using toolplan::testing::scratch_dir;

namespace {

const std::string kCorpus = fixture_path("corpus.jsonl");

Json read_json(const std::filesystem::path& p) { return Json::parse(read_text_file(p)); }

std::filesystem::path split_into(const std::filesystem::path& dir) {
    const auto r = run_cli({"split", "--corpus", kCorpus, "--out", dir.string()});
    EXPECT_EQ(r.code, 0) << r.err;
    return dir / "split_manifest.json";
}

}  // namespace

TEST(Cli, HelpListsSubcommands) {
    const auto r = run_cli({"--help"});
    EXPECT_EQ(r.code, 0);
    for (const char* sub : {"split", "build-data", "build-prompts", "evaluate", "execute", "retention", "report"}) {
        EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
    }
    EXPECT_NE(r.out.find("--catalog"), std::string::npos);
    EXPECT_NE(r.out.find("--seed"), std::string::npos);
}

TEST(Cli, UsageErrors) {
    EXPECT_EQ(run_cli({}).code, 2);
    EXPECT_EQ(run_cli({"frobnicate"}).code, 2);
    const auto dir = scratch_dir("cli_usage");
    const auto bad_fraction = run_cli({"split", "--corpus", kCorpus, "--fraction", "1.5", "--out", dir.string()});
    EXPECT_EQ(bad_fraction.code, 2);
    EXPECT_NE(bad_fraction.err.find("fraction"), std::string::npos);
    EXPECT_EQ(run_cli({"split", "--corpus", "/nope.jsonl", "--out", dir.string()}).code, 2);
    EXPECT_EQ(run_cli({"--catalog", "/nope.json", "build-prompts", "--query", "q", "--out", dir.string()}).code, 2);
}

TEST(Cli, SplitIsByteStable) {
    const auto a = scratch_dir("cli_split_a");
    const auto b = scratch_dir("cli_split_b");
    split_into(a);
    split_into(b);
    EXPECT_EQ(read_text_file(a / "split_manifest.json"), read_text_file(b / "split_manifest.json"));
    const Json m = read_json(a / "split_manifest.json");
    EXPECT_EQ(m["test_ids"].size(), 8u);
    EXPECT_EQ(m["train_ids"].size(), 32u);
}

TEST(Cli, SplitSyntheticCorpus) {
    const auto dir = scratch_dir("cli_split_152");
    toolplan::testing::write_corpus(dir / "corpus.jsonl", toolplan::testing::synthetic_corpus(152));
    const auto r = run_cli({"split", "--corpus", (dir / "corpus.jsonl").string(), "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json m = read_json(dir / "split_manifest.json");
    EXPECT_EQ(m["train_ids"].size(), 122u);
    EXPECT_EQ(m["test_ids"].size(), 30u);
}

TEST(Cli, BuildDataConfigs) {
    const auto dir = scratch_dir("cli_data");
    const auto manifest = split_into(dir);
    const auto c = run_cli({"build-data", "--corpus", kCorpus, "--manifest", manifest.string(), "--config", "C",
                            "--out", (dir / "c").string()});
    ASSERT_EQ(c.code, 0) << c.err;
    const Json stats = read_json(dir / "c" / "stats.json");
    EXPECT_EQ(stats["train"].get<std::size_t>() + stats["eval"].get<std::size_t>(),
              stats["pool_size"].get<std::size_t>());
    EXPECT_EQ(read_jsonl(dir / "c" / "train.jsonl").size(), stats["train"].get<std::size_t>());

    const auto b = run_cli({"build-data", "--corpus", kCorpus, "--manifest", manifest.string(), "--config", "B",
                            "--out", (dir / "b").string()});
    ASSERT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(read_json(dir / "b" / "stats.json")["with_scenario_id"], 0);

    // Train examples only ever name train scenarios.
    const auto m = SplitManifest::from_json(read_json(manifest));
    for (const auto& rec : read_jsonl(dir / "c" / "train.jsonl")) {
        if (!rec["scenario_id"].is_null()) {
            EXPECT_TRUE(m.is_train(rec["scenario_id"].get<std::string>()));
        }
    }
}

TEST(Cli, BuildDataMissingManifest) {
    const auto dir = scratch_dir("cli_data_missing");
    const auto r = run_cli({"build-data", "--corpus", kCorpus, "--manifest", (dir / "none.json").string(), "--out",
                            dir.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(std::filesystem::exists(dir / "train.jsonl"));
    EXPECT_EQ(run_cli({"build-data", "--corpus", kCorpus, "--out", dir.string()}).code, 2);
}

TEST(Cli, BuildDataTeacherWithoutEndpoint) {
    const auto dir = scratch_dir("cli_teacher");
    const auto manifest = split_into(dir);
    ::unsetenv("JUDGE_BASE_URL");
    const auto r = run_cli({"build-data", "--corpus", kCorpus, "--manifest", manifest.string(), "--teacher", "--out",
                            dir.string()});
    EXPECT_EQ(r.code, 1);
}

TEST(Cli, BuildPrompts) {
    const auto dir = scratch_dir("cli_prompts");
    const auto r = run_cli({"build-prompts", "--query",
                            "What are the failure modes of Chiller 6 that can be identified by analyzing the data "
                            "from the available sensors?",
                            "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json summary = read_json(dir / "prompt_summary.json");
    EXPECT_GE(summary["reduction_ratio"].get<double>(), 0.90);
    EXPECT_EQ(read_jsonl(dir / "prompts.jsonl").size(), 2u);
    EXPECT_EQ(run_cli({"build-prompts", "--query", "q", "--condition", "sideways", "--out", dir.string()}).code, 2);
}

TEST(Cli, EvaluateIdenticalCandidates) {
    const auto dir = scratch_dir("cli_eval_gold");
    const auto manifest = split_into(dir);
    const auto corpus = load_corpus(kCorpus);
    std::filesystem::create_directories(dir / "cands");
    for (const auto& s : corpus) write_text_file(dir / "cands" / (s.id + ".plan"), render_plan(s.gold_plan));
    const auto r = run_cli({"evaluate", "--corpus", kCorpus, "--manifest", manifest.string(), "--candidates",
                            (dir / "cands").string(), "--condition", "informed", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json report = read_json(dir / "eval_report.json");
    EXPECT_DOUBLE_EQ(report["aggregate"]["at_f1"].get<double>(), 1.0);
    EXPECT_EQ(report["rows"].size(), 8u);
}

TEST(Cli, EvaluateMissingCandidateNamesScenario) {
    const auto dir = scratch_dir("cli_eval_missing");
    const auto manifest = split_into(dir);
    std::filesystem::create_directories(dir / "cands");
    const auto r = run_cli({"evaluate", "--corpus", kCorpus, "--manifest", manifest.string(), "--candidates",
                            (dir / "cands").string(), "--out", dir.string()});
    EXPECT_EQ(r.code, 2);
    const Json m = read_json(manifest);
    EXPECT_NE(r.err.find(m["test_ids"][0].get<std::string>()), std::string::npos) << r.err;
}

TEST(Cli, EvaluateRecordsUnparseableCandidate) {
    const auto dir = scratch_dir("cli_eval_parse");
    const auto r = run_cli({"evaluate", "--corpus", kCorpus, "--manifest", fixture_path("judge_baseline/manifest.json"),
                            "--candidates", fixture_path("candidates"), "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const Json report = read_json(dir / "eval_report.json");
    EXPECT_EQ(report["rows"].size(), 30u);
    EXPECT_EQ(report["aggregate"]["parse_failures"], 1);
}

TEST(Cli, ExecuteScenario114) {
    const auto dir = scratch_dir("cli_exec");
    const auto r = run_cli({"execute", "--plan", fixture_path("scenario_114.plan"), "--registry",
                            fixture_path("assetops.registry.json"), "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(read_json(dir / "execution.json")["status"]["ok"].get<bool>());
    EXPECT_EQ(read_jsonl(dir / "trace.jsonl").size(), 4u);
}

TEST(Cli, RetentionModes) {
    const auto dir = scratch_dir("cli_retention");
    const std::string items = fixture_path("retention/items.jsonl");
    auto r = run_cli({"retention", "--items", items, "--base-grades", fixture_path("retention/qwen_base.grades.jsonl"),
                      "--ft-grades", fixture_path("retention/qwen_ft.grades.jsonl"), "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(read_json(dir / "retention_report.json")["retention"].get<double>(), 0.613, 0.0005);

    r = run_cli({"retention", "--items", items, "--out", dir.string()});
    EXPECT_EQ(r.code, 2);

    // Composition is enforced.
    auto lines = read_jsonl(items);
    lines.pop_back();
    write_text_file(dir / "short.jsonl", to_jsonl(lines));
    r = run_cli({"retention", "--items", (dir / "short.jsonl").string(), "--base-grades",
                 fixture_path("retention/qwen_base.grades.jsonl"), "--ft-grades",
                 fixture_path("retention/qwen_ft.grades.jsonl"), "--out", dir.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("HellaSwag=29"), std::string::npos) << r.err;
}

TEST(Cli, ReportSummarizes) {
    const auto dir = scratch_dir("cli_report");
    const auto manifest = split_into(dir);
    ASSERT_EQ(run_cli({"evaluate", "--corpus", kCorpus, "--manifest", manifest.string(), "--candidates",
                       fixture_path("candidates"), "--condition", "informed", "--out", (dir / "i").string()})
                  .code,
              0);
    const auto r = run_cli({"report", "--input", (dir / "i" / "eval_report.json").string(), "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string md = read_text_file(dir / "summary.md");
    EXPECT_NE(md.find("| informed | 8 |"), std::string::npos) << md;
    EXPECT_EQ(run_cli({"report", "--input", kCorpus, "--out", dir.string()}).code, 2);
}
