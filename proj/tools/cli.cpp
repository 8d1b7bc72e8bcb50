#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <vector>

#include "toolplan/catalog.hpp"
#include "toolplan/dataset.hpp"
#include "toolplan/error.hpp"
#include "toolplan/executor.hpp"
#include "toolplan/llm_client.hpp"
#include "toolplan/metrics.hpp"
#include "toolplan/plan.hpp"
#include "toolplan/prompts.hpp"

namespace toolplan::cli {

namespace fs = std::filesystem;

namespace {

/// Raised for bad flags or missing inputs; maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_file(const fs::path& path, const char* what) {
    if (path.empty()) throw UsageError(std::string(what) + " is required");
    if (!fs::exists(path)) throw UsageError(std::string(what) + " not found: " + path.string());
}

void require_fraction(double f, const char* flag) {
    if (!(f > 0.0 && f < 1.0)) {
        throw UsageError(std::string(flag) + " must lie strictly between 0 and 1, got " + std::to_string(f));
    }
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::EndpointError:
        case ErrorKind::TeacherUnavailable:
        case ErrorKind::MalformedVerdict:
        case ErrorKind::OutOfRangeScore:
            return kExitInternal;
        default:
            return kExitUsage;
    }
}

struct Context {
    RunConfig config;
    std::ostream& out;
    std::ostream& err;

    ToolCatalog catalog() const {
        require_file(config.catalog_path, "--catalog");
        return load_catalog(config.catalog_path);
    }
    PromptAssets prompt_assets() const { return PromptAssets::load(config.data_dir / "prompts"); }
    JudgePrompts judge_prompts() const { return JudgePrompts::load(config.data_dir / "prompts"); }
    std::vector<Scenario> corpus() const {
        require_file(config.corpus_path, "--corpus");
        return load_corpus(config.corpus_path);
    }
    void write(const fs::path& name, std::string_view content) const {
        const fs::path path = config.out_dir / name;
        write_text_file(path, content);
        out << "wrote " << path.string() << "\n";
    }
};

SplitManifest load_manifest(const fs::path& path) {
    require_file(path, "--manifest");
    try {
        return SplitManifest::from_json(Json::parse(read_text_file(path)));
    } catch (const Json::parse_error& e) {
        throw UsageError("manifest is not valid JSON: " + std::string(e.what()));
    }
}

std::unique_ptr<ChatEndpoint> make_judge_endpoint(const fs::path& stub_path) {
    if (!stub_path.empty()) {
        require_file(stub_path, "--judge-stub");
        return std::make_unique<StubEndpoint>(StubEndpoint::load(stub_path));
    }
    return std::make_unique<HttpChatEndpoint>(EndpointConfig::from_env());
}

JudgeOptions judge_options() {
    JudgeOptions options;
    if (const char* model = std::getenv("JUDGE_MODEL")) options.model = model;
    return options;
}

// ---------------------------------------------------------------------------

struct SplitArgs {
    double fraction = 0.2;
};

void cmd_split(const Context& ctx, const SplitArgs& args) {
    require_fraction(args.fraction, "--fraction");
    const auto scenarios = ctx.corpus();
    const auto manifest = stratified_split(scenarios, args.fraction, ctx.config.seed);
    ctx.write("split_manifest.json", dump_pretty(manifest.to_json()));
    ctx.out << "train " << manifest.train_ids.size() << ", test " << manifest.test_ids.size() << "\n";
}

struct BuildDataArgs {
    fs::path manifest;
    std::string config = "C";
    double eval_fraction = 0.05;
    bool no_paraphrases = false;
    bool teacher = false;
};

void cmd_build_data(const Context& ctx, const BuildDataArgs& args) {
    require_fraction(args.eval_fraction, "--eval-fraction");
    const auto config = parse_data_config(args.config);
    if (!config) throw UsageError("--config must be A, B or C");
    const auto manifest = load_manifest(args.manifest);
    const auto catalog = ctx.catalog();
    const auto scenarios = ctx.corpus();
    const auto assets = ctx.prompt_assets();
    const auto train = select_split(scenarios, manifest, true);

    std::unique_ptr<ChatEndpoint> teacher;
    if (args.teacher) teacher = std::make_unique<HttpChatEndpoint>(EndpointConfig::from_env());

    ExamplePools pools;
    ToolKnowledgeStats tk_stats;
    pools.tool_knowledge = build_tool_knowledge_examples(catalog, teacher.get(), &tk_stats);
    pools.plan = build_plan_examples(train, catalog, assets, !args.no_paraphrases);
    pools.execution = build_execution_examples(train, assets);

    const auto split = assemble_config(*config, pools, args.eval_fraction, ctx.config.seed);

    std::vector<SftExample> all = split.train;
    all.insert(all.end(), split.eval.begin(), split.eval.end());
    if (auto leaks = find_leaks(all, scenarios, manifest); !leaks.empty()) {
        throw std::runtime_error("split leakage detected: " + leaks.front());
    }

    auto to_records = [](const std::vector<SftExample>& v) {
        std::vector<Json> r;
        r.reserve(v.size());
        for (const auto& e : v) r.push_back(e.to_json());
        return r;
    };
    Json by_kind = Json::object();
    std::size_t with_scenario = 0;
    for (auto kind : {ExampleKind::ToolKnowledge, ExampleKind::Plan, ExampleKind::Execution}) {
        auto count = [&](const std::vector<SftExample>& v) {
            return std::count_if(v.begin(), v.end(), [&](const SftExample& e) { return e.kind == kind; });
        };
        by_kind[std::string(to_string(kind))] = {{"train", count(split.train)}, {"eval", count(split.eval)}};
    }
    for (const auto& e : all) with_scenario += e.scenario_id.has_value();

    Json stats{{"config", to_string(*config)},
               {"seed", ctx.config.seed},
               {"eval_fraction", args.eval_fraction},
               {"pool_size", all.size()},
               {"train", split.train.size()},
               {"eval", split.eval.size()},
               {"by_kind", std::move(by_kind)},
               {"with_scenario_id", with_scenario},
               {"pools",
                {{"tool_knowledge", pools.tool_knowledge.size()},
                 {"plan", pools.plan.size()},
                 {"execution", pools.execution.size()}}},
               {"teacher",
                {{"used", args.teacher},
                 {"accepted", tk_stats.teacher_accepted},
                 {"dropped", tk_stats.teacher_dropped}}}};

    ctx.write("train.jsonl", to_jsonl(to_records(split.train)));
    ctx.write("eval.jsonl", to_jsonl(to_records(split.eval)));
    ctx.write("stats.json", dump_pretty(stats));
    ctx.out << "config " << to_string(*config) << ": train " << split.train.size() << ", eval "
            << split.eval.size() << "\n";
}

struct BuildPromptsArgs {
    fs::path manifest;
    std::string query;
};

void cmd_build_prompts(const Context& ctx, const BuildPromptsArgs& args) {
    const auto catalog = ctx.catalog();
    const auto assets = ctx.prompt_assets();
    const std::string condition = ctx.config.condition.empty() ? "both" : ctx.config.condition;
    if (condition != "both" && condition != "informed" && condition != "description_free") {
        throw UsageError("--condition must be informed, description_free or both");
    }

    std::vector<std::pair<std::string, std::string>> queries;
    if (!args.query.empty()) {
        queries.emplace_back("query", args.query);
    } else {
        auto scenarios = ctx.corpus();
        if (!args.manifest.empty()) scenarios = select_split(scenarios, load_manifest(args.manifest), false);
        for (const auto& s : scenarios) queries.emplace_back(s.id, s.question);
    }
    if (queries.empty()) throw UsageError("no queries to build prompts for");

    std::vector<Json> records;
    std::size_t informed_total = 0, free_total = 0;
    for (const auto& [id, q] : queries) {
        const auto informed = build_informed_prompt(q, catalog, assets);
        const auto free = build_description_free_prompt(q, assets);
        informed_total += informed.token_estimate;
        free_total += free.token_estimate;
        if (condition != "description_free") {
            Json r = informed.to_json();
            r["id"] = id;
            records.push_back(std::move(r));
        }
        if (condition != "informed") {
            Json r = free.to_json();
            r["id"] = id;
            records.push_back(std::move(r));
        }
    }
    const double n = static_cast<double>(queries.size());
    const double ratio = reduction_ratio(informed_total, free_total);
    Json summary{{"prompts", queries.size()},
                 {"catalog_tokens", estimate_tokens(serialize_catalog(catalog))},
                 {"mean_informed_tokens", static_cast<double>(informed_total) / n},
                 {"mean_description_free_tokens", static_cast<double>(free_total) / n},
                 {"reduction_ratio", ratio}};
    ctx.write("prompts.jsonl", to_jsonl(records));
    ctx.write("prompt_summary.json", dump_pretty(summary));
    ctx.out << "reduction ratio " << fmt4(ratio) << "\n";
}

struct EvaluateArgs {
    fs::path manifest;
    fs::path candidates;
    bool with_judge = false;
    fs::path judge_stub;
    std::size_t concurrency = 4;
};

void cmd_evaluate(const Context& ctx, const EvaluateArgs& args) {
    const auto manifest = load_manifest(args.manifest);
    if (args.candidates.empty() || !fs::is_directory(args.candidates)) {
        throw UsageError("--candidates must be a directory of <scenario_id>.plan files");
    }
    const auto scenarios = ctx.corpus();
    const auto test = select_split(scenarios, manifest, false);
    if (test.size() != manifest.test_ids.size()) {
        throw UsageError("manifest lists test scenarios that are missing from the corpus");
    }

    std::vector<Plan> candidates(test.size());
    std::vector<std::optional<std::string>> parse_errors(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        const fs::path file = args.candidates / (test[i].id + ".plan");
        if (!fs::exists(file)) throw UsageError("missing candidate plan for scenario " + test[i].id);
        const std::string text = read_text_file(file);
        try {
            candidates[i] = parse_plan(text);
        } catch (const Error& e) {
            parse_errors[i] = std::string(to_string(e.kind())) + ": " + e.what();
            candidates[i].source_text = text;
        }
    }

    std::vector<ScenarioResult> rows;
    for (std::size_t i = 0; i < test.size(); ++i) {
        rows.push_back(evaluate_scenario(test[i].id, test[i].gold_plan, candidates[i]));
        rows.back().parse_error = parse_errors[i];
    }

    if (args.with_judge) {
        const auto catalog = ctx.catalog();
        const auto prompts = ctx.judge_prompts();
        const auto endpoint = make_judge_endpoint(args.judge_stub);
        const auto options = judge_options();
        run_bounded(test.size(), args.concurrency, [&](std::size_t i) {
            rows[i].judge_overall =
                judge_plan(test[i].question, test[i].gold_plan, candidates[i], catalog, *endpoint, prompts, options)
                    .overall;
        });
    }

    const auto report = aggregate_report(std::move(rows), ctx.config.condition);
    ctx.write("eval_report.json", dump_pretty(report.to_json()));
    ctx.write("eval_report.csv", report.to_csv());
    const auto& a = report.aggregate;
    ctx.out << "scenarios " << a.scenarios << ", AT-F1 " << fmt4(a.at_f1) << ", ArgKey-F1 " << fmt4(a.argkey_f1)
            << ", routing " << fmt4(a.routing) << ", tool selection " << fmt4(a.tool_selection);
    if (a.judge_overall) ctx.out << ", judge " << fmt4(*a.judge_overall);
    ctx.out << "\n";
}

struct ExecuteArgs {
    fs::path plan;
    fs::path registry;
};

void cmd_execute(const Context& ctx, const ExecuteArgs& args) {
    require_file(args.plan, "--plan");
    require_file(args.registry, "--registry");
    const auto catalog = ctx.catalog();
    const auto registry = load_registry(args.registry, catalog);
    const Plan plan = parse_plan(read_text_file(args.plan));

    const auto findings = validate_structure(plan, catalog);
    for (const auto& f : findings) {
        ctx.err << to_string(f.severity) << ": step " << f.step << ": " << f.message << "\n";
    }
    const auto result = execute_plan(plan, registry);

    Json doc = result.to_json();
    Json findings_json = Json::array();
    for (const auto& f : findings) {
        findings_json.push_back({{"severity", to_string(f.severity)}, {"step", f.step}, {"message", f.message}});
    }
    doc["findings"] = std::move(findings_json);
    std::vector<Json> trace;
    for (const auto& r : result.trace) trace.push_back(r.to_json());
    ctx.write("execution.json", dump_pretty(doc));
    ctx.write("trace.jsonl", to_jsonl(trace));
    if (result.ok()) {
        ctx.out << "success: " << result.step_outputs.size() << " steps\n";
    } else {
        ctx.out << "failed at step " << result.status.failed_step << " (" << to_string(result.status.reason)
                << "): " << result.status.message << "\n";
    }
}

struct RetentionArgs {
    fs::path items;
    fs::path base_grades;
    fs::path ft_grades;
    fs::path base_responses;
    fs::path ft_responses;
    fs::path judge_stub;
    std::size_t concurrency = 4;
    bool any_composition = false;
};

void cmd_retention(const Context& ctx, const RetentionArgs& args) {
    require_file(args.items, "--items");
    const auto items = load_mcq_items(args.items);
    if (!args.any_composition) {
        if (auto mismatch = composition_mismatch(items)) throw UsageError(*mismatch);
    }
    RetentionReport report;
    const bool graded = !args.base_grades.empty() || !args.ft_grades.empty();
    const bool responses = !args.base_responses.empty() || !args.ft_responses.empty();
    if (graded == responses) {
        throw UsageError("give either --base-grades/--ft-grades or --base-responses/--ft-responses");
    }
    if (graded) {
        require_file(args.base_grades, "--base-grades");
        require_file(args.ft_grades, "--ft-grades");
        report = compute_retention(items, load_grades(args.base_grades), load_grades(args.ft_grades));
    } else {
        require_file(args.base_responses, "--base-responses");
        require_file(args.ft_responses, "--ft-responses");
        const auto endpoint = make_judge_endpoint(args.judge_stub);
        report = run_retention(items, load_responses(args.base_responses), load_responses(args.ft_responses),
                               *endpoint, ctx.judge_prompts(), judge_options(), args.concurrency);
    }
    ctx.write("retention_report.json", dump_pretty(report.to_json()));
    ctx.out << "base " << fmt4(report.base.overall.accuracy()) << ", fine-tuned "
            << fmt4(report.finetuned.overall.accuracy()) << ", retention "
            << (report.retention ? fmt4(*report.retention) : std::string("n/a")) << ", forgotten "
            << report.forgotten.size() << ", learned " << report.learned.size() << "\n";
}

struct ReportArgs {
    std::vector<fs::path> inputs;
};

void cmd_report(const Context& ctx, const ReportArgs& args) {
    if (args.inputs.empty()) throw UsageError("--input is required");
    std::string csv = "condition,scenarios,at_f1,argkey_f1,routing_accuracy,tool_selection_accuracy,judge_overall\n";
    std::string md =
        "| condition | scenarios | AT-F1 | ArgKey-F1 | routing | tool selection | judge |\n"
        "|---|---|---|---|---|---|---|\n";
    for (const auto& path : args.inputs) {
        require_file(path, "--input");
        Json doc;
        try {
            doc = Json::parse(read_text_file(path));
        } catch (const Json::parse_error& e) {
            throw UsageError(path.string() + " is not valid JSON");
        }
        const auto report = EvalReport::from_json(doc);
        const auto& a = report.aggregate;
        const std::string name = report.condition.empty() ? path.stem().string() : report.condition;
        const std::string judge = a.judge_overall ? fmt4(*a.judge_overall) : "";
        csv += name + "," + std::to_string(a.scenarios) + "," + fmt4(a.at_f1) + "," + fmt4(a.argkey_f1) + "," +
               fmt4(a.routing) + "," + fmt4(a.tool_selection) + "," + judge + "\n";
        md += "| " + name + " | " + std::to_string(a.scenarios) + " | " + fmt4(a.at_f1) + " | " + fmt4(a.argkey_f1) +
              " | " + fmt4(a.routing) + " | " + fmt4(a.tool_selection) + " | " + (judge.empty() ? "-" : judge) +
              " |\n";
    }
    ctx.write("summary.csv", csv);
    ctx.write("summary.md", md);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Fixed-catalog tool-planning harness: data construction, prompts, evaluation, execution"};
    app.require_subcommand(1);
    app.fallthrough();

    RunConfig config;
    config.data_dir = default_data_dir();
    config.catalog_path = default_data_dir() / "assetops.catalog.json";
    app.add_option("--catalog", config.catalog_path, "Tool catalog JSON")->capture_default_str();
    app.add_option("--seed", config.seed, "Random seed for splits and shuffles")->capture_default_str();
    app.add_option("--out", config.out_dir, "Output directory")->capture_default_str();
    app.add_option("--data-dir", config.data_dir, "Directory holding prompts/ assets")->capture_default_str();

    std::function<void(const Context&)> action;

    SplitArgs split_args;
    auto* split = app.add_subcommand("split", "Pattern-aware stratified train/test split");
    split->add_option("--corpus", config.corpus_path, "Scenario corpus JSONL")->required();
    split->add_option("--fraction", split_args.fraction, "Test fraction")->capture_default_str();
    split->callback([&] { action = [&](const Context& c) { cmd_split(c, split_args); }; });

    BuildDataArgs data_args;
    auto* data = app.add_subcommand("build-data", "Build SFT examples and assemble a data config");
    data->add_option("--corpus", config.corpus_path, "Scenario corpus JSONL")->required();
    data->add_option("--manifest", data_args.manifest, "Split manifest JSON")->required();
    data->add_option("--config", data_args.config, "A (plan), B (tool knowledge) or C (all)")->capture_default_str();
    data->add_option("--eval-fraction", data_args.eval_fraction, "Held-out eval share")->capture_default_str();
    data->add_flag("--no-paraphrases", data_args.no_paraphrases, "Only the original question per scenario");
    data->add_flag("--teacher", data_args.teacher, "Paraphrase tool-knowledge questions via JUDGE_* endpoint");
    data->callback([&] { action = [&](const Context& c) { cmd_build_data(c, data_args); }; });

    BuildPromptsArgs prompt_args;
    auto* prompts = app.add_subcommand("build-prompts", "Build informed and description-free prompts");
    prompts->add_option("--corpus", config.corpus_path, "Scenario corpus JSONL");
    prompts->add_option("--manifest", prompt_args.manifest, "Restrict to test scenarios of this manifest");
    prompts->add_option("--query", prompt_args.query, "Build prompts for a single query");
    prompts->add_option("--condition", config.condition, "informed, description_free or both");
    prompts->callback([&] { action = [&](const Context& c) { cmd_build_prompts(c, prompt_args); }; });

    EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "Score candidate plans against gold plans");
    evaluate->add_option("--corpus", config.corpus_path, "Scenario corpus JSONL")->required();
    evaluate->add_option("--manifest", eval_args.manifest, "Split manifest JSON")->required();
    evaluate->add_option("--candidates", eval_args.candidates, "Directory of <scenario_id>.plan files")->required();
    evaluate->add_option("--condition", config.condition, "Label for the prompting condition");
    evaluate->add_flag("--with-judge", eval_args.with_judge, "Also score plans with the LLM judge");
    evaluate->add_option("--judge-stub", eval_args.judge_stub, "Offline judge rules (JSONL) instead of HTTP");
    evaluate->add_option("--concurrency", eval_args.concurrency, "Parallel judge requests")->capture_default_str();
    evaluate->callback([&] { action = [&](const Context& c) { cmd_evaluate(c, eval_args); }; });

    ExecuteArgs exec_args;
    auto* execute = app.add_subcommand("execute", "Run a plan against stub tools");
    execute->add_option("--plan", exec_args.plan, "Plan text file")->required();
    execute->add_option("--registry", exec_args.registry, "Stub registry JSON")->required();
    execute->callback([&] { action = [&](const Context& c) { cmd_execute(c, exec_args); }; });

    RetentionArgs ret_args;
    auto* retention = app.add_subcommand("retention", "MCQ capability retention");
    retention->add_option("--items", ret_args.items, "MCQ items JSONL")->required();
    retention->add_option("--base-grades", ret_args.base_grades, "Base model grades JSONL");
    retention->add_option("--ft-grades", ret_args.ft_grades, "Fine-tuned model grades JSONL");
    retention->add_option("--base-responses", ret_args.base_responses, "Base model responses JSONL");
    retention->add_option("--ft-responses", ret_args.ft_responses, "Fine-tuned model responses JSONL");
    retention->add_option("--judge-stub", ret_args.judge_stub, "Offline judge rules (JSONL) instead of HTTP");
    retention->add_option("--concurrency", ret_args.concurrency, "Parallel judge requests")->capture_default_str();
    retention->add_flag("--any-composition", ret_args.any_composition, "Skip the 40/30/30 composition check");
    retention->callback([&] { action = [&](const Context& c) { cmd_retention(c, ret_args); }; });

    ReportArgs report_args;
    auto* report = app.add_subcommand("report", "Compare aggregate metrics across evaluation reports");
    report->add_option("--input", report_args.inputs, "eval_report.json files")->required();
    report->callback([&] { action = [&](const Context& c) { cmd_report(c, report_args); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitUsage;
    }

    const Context ctx{config, out, err};
    try {
        action(ctx);
        return kExitOk;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        err << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace toolplan::cli
