#include "mmgen/prompts/prompts.hpp"

#include "mmgen/common/error.hpp"

#include <json.hpp>

namespace mmgen::prompts {

PromptId parse_prompt_id(std::string_view s) {
    if (s == "eval_pipeline") return PromptId::EvalPipeline;
    if (s == "extraction") return PromptId::Extraction;
    if (s == "summary") return PromptId::Summary;
    if (s == "reannotation") return PromptId::Reannotation;
    throw ConfigError("unknown prompt id \"" + std::string(s) + "\"");
}

std::string_view to_string(PromptId id) {
    switch (id) {
    case PromptId::EvalPipeline: return "eval_pipeline";
    case PromptId::Extraction: return "extraction";
    case PromptId::Summary: return "summary";
    case PromptId::Reannotation: return "reannotation";
    }
    return "";
}

std::string_view fixture_name(PromptId id) {
    switch (id) {
    case PromptId::EvalPipeline: return "eval_pipeline.txt";
    case PromptId::Extraction: return "extraction.txt";
    case PromptId::Summary: return "summary.txt";
    case PromptId::Reannotation: return "reannotation.txt";
    }
    return "";
}

std::string_view pinned_digest(PromptId id) {
    switch (id) {
    case PromptId::EvalPipeline:
        return "82b457314bd0dbcecc0988890a395391cdd22872cd16acf44d0986f209a3ecc8";
    case PromptId::Extraction:
        return "8ee9e45eab6c9ff3564abb1130afd343c32f8b27a6b4f1a07c93e148522385b1";
    case PromptId::Summary:
        return "4b338c6228544b7e45ce4b325fe4604532aad578483651928f4afdca8aa5a3be";
    case PromptId::Reannotation:
        return "617c181f9e2844255f986fbe2d99d4aca12caebd62e851c619c8dacfcf55934c";
    }
    return "";
}

PromptTemplate get_template(PromptId id) {
    ExpectedOutput out = ExpectedOutput::PatternJson;
    if (id == PromptId::EvalPipeline) out = ExpectedOutput::PlainCaption;
    if (id == PromptId::Summary) out = ExpectedOutput::SummaryJson;
    return {id, detail::embedded_text(id), out};
}

std::string render(PromptId id) { return std::string(detail::embedded_text(id)); }

std::string render_summary(const FrequencyEntries& ranked, std::optional<std::size_t> top_k) {
    nlohmann::ordered_json freq = nlohmann::ordered_json::object();
    const std::size_t limit = top_k ? std::min(*top_k, ranked.size()) : ranked.size();
    for (std::size_t i = 0; i < limit; ++i) freq[ranked[i].first] = ranked[i].second;
    std::string out = render(PromptId::Summary);
    out += "\n# Input Data\n";
    out += freq.dump(4);
    out += '\n';
    return out;
}

} // namespace mmgen::prompts
