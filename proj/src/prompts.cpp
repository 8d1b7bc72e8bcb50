#include "toolplan/prompts.hpp"

#include "toolplan/error.hpp"

#ifndef TOOLPLAN_DATA_DIR
#define TOOLPLAN_DATA_DIR "data"
#endif

namespace toolplan {

namespace {

constexpr std::string_view kSectionSeparator = "\n\n";

std::string trim_trailing_newlines(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

bool blank(std::string_view s) { return s.find_first_not_of(" \t\r\n") == std::string_view::npos; }

PromptBundle assemble(PromptCondition condition,
                      std::vector<std::pair<std::string_view, std::string>> parts,
                      const Tokenizer& tokenizer) {
    PromptBundle bundle;
    bundle.condition = condition;
    for (auto& [name, text] : parts) {
        PromptSection section{std::string(name), std::move(text), 0};
        section.token_estimate = tokenizer.count(section.text);
        bundle.token_estimate += section.token_estimate;
        if (!bundle.text.empty()) bundle.text += kSectionSeparator;
        bundle.text += section.text;
        bundle.sections.push_back(std::move(section));
    }
    return bundle;
}

}  // namespace

std::string_view to_string(PromptCondition condition) {
    return condition == PromptCondition::Informed ? "informed" : "description_free";
}

std::size_t CharHeuristicTokenizer::count(std::string_view text) const {
    return (text.size() + 3) / 4;
}

std::size_t estimate_tokens(std::string_view text) { return CharHeuristicTokenizer{}.count(text); }

PromptAssets PromptAssets::load(const std::filesystem::path& dir) {
    return PromptAssets{trim_trailing_newlines(read_text_file(dir / "preamble.txt")),
                        trim_trailing_newlines(read_text_file(dir / "output_format.txt"))};
}

std::filesystem::path default_data_dir() { return TOOLPLAN_DATA_DIR; }

std::filesystem::path default_prompt_dir() { return default_data_dir() / "prompts"; }

Json PromptBundle::to_json() const {
    Json sections_json = Json::array();
    for (const auto& s : sections) {
        sections_json.push_back({{"name", s.name}, {"token_estimate", s.token_estimate}, {"text", s.text}});
    }
    return Json{{"condition", to_string(condition)},
                {"token_estimate", token_estimate},
                {"sections", std::move(sections_json)},
                {"text", text}};
}

PromptBundle build_informed_prompt(std::string_view query, const ToolCatalog& catalog,
                                   const PromptAssets& assets, const Tokenizer& tokenizer) {
    if (blank(query)) throw Error(ErrorKind::EmptyQuery, "query is empty");
    return assemble(PromptCondition::Informed,
                    {{kSectionPreamble, assets.preamble},
                     {kSectionCatalog, trim_trailing_newlines(serialize_catalog(catalog))},
                     {kSectionOutputFormat, assets.output_format},
                     {kSectionQuery, "Question: " + std::string(query)}},
                    tokenizer);
}

PromptBundle build_informed_prompt(std::string_view query, const ToolCatalog& catalog,
                                   const PromptAssets& assets) {
    return build_informed_prompt(query, catalog, assets, CharHeuristicTokenizer{});
}

PromptBundle build_description_free_prompt(std::string_view query, const PromptAssets& assets,
                                           const Tokenizer& tokenizer) {
    if (blank(query)) throw Error(ErrorKind::EmptyQuery, "query is empty");
    return assemble(PromptCondition::DescriptionFree,
                    {{kSectionPreamble, assets.preamble},
                     {kSectionOutputFormat, assets.output_format},
                     {kSectionQuery, "Question: " + std::string(query)}},
                    tokenizer);
}

PromptBundle build_description_free_prompt(std::string_view query, const PromptAssets& assets) {
    return build_description_free_prompt(query, assets, CharHeuristicTokenizer{});
}

double reduction_ratio(std::size_t informed_tokens, std::size_t free_tokens) {
    if (informed_tokens == 0) {
        throw Error(ErrorKind::ZeroInformedTokens, "informed prompt has zero tokens");
    }
    return 1.0 - static_cast<double>(free_tokens) / static_cast<double>(informed_tokens);
}

double reduction_ratio(const PromptBundle& informed, const PromptBundle& free) {
    return reduction_ratio(informed.token_estimate, free.token_estimate);
}

}  // namespace toolplan
