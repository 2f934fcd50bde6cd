#include "mmgen/common/digest.hpp"
#include "mmgen/common/error.hpp"
#include "mmgen/common/fsutil.hpp"
#include "mmgen/prompts/annotation.hpp"
#include "mmgen/prompts/caption.hpp"
#include "mmgen/prompts/prompts.hpp"

#include <doctest.h>

#include <json.hpp>

using namespace mmgen;
using namespace mmgen::prompts;
namespace fs = std::filesystem;

namespace {

const std::map<PromptId, std::string> kDigests{
    {PromptId::EvalPipeline, "82b457314bd0dbcecc0988890a395391cdd22872cd16acf44d0986f209a3ecc8"},
    {PromptId::Extraction, "8ee9e45eab6c9ff3564abb1130afd343c32f8b27a6b4f1a07c93e148522385b1"},
    {PromptId::Summary, "4b338c6228544b7e45ce4b325fe4604532aad578483651928f4afdca8aa5a3be"},
    {PromptId::Reannotation, "617c181f9e2844255f986fbe2d99d4aca12caebd62e851c619c8dacfcf55934c"},
};

std::string words(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += (i ? " " : "") + std::string("w") + std::to_string(i);
    return s;
}

} // namespace

TEST_CASE("embedded prompts match the shipped fixtures and pinned digests") {
    for (const auto& [id, digest] : kDigests) {
        const std::string text = render(id);
        const std::string file = fsutil::read_text(fs::path(MMGEN_SOURCE_PROMPT_DIR) / std::string(fixture_name(id)));
        CHECK(text == file);
        CHECK(sha256_hex(text) == digest);
        CHECK(pinned_digest(id) == digest);
        CHECK(parse_prompt_id(to_string(id)) == id);
    }
    CHECK(render(PromptId::EvalPipeline).find("it should be between 20 to 60 words") != std::string::npos);
    CHECK(get_template(PromptId::EvalPipeline).expected_output == ExpectedOutput::PlainCaption);
    CHECK(get_template(PromptId::Extraction).expected_output == ExpectedOutput::PatternJson);
    CHECK(get_template(PromptId::Reannotation).expected_output == ExpectedOutput::PatternJson);
    CHECK(get_template(PromptId::Summary).expected_output == ExpectedOutput::SummaryJson);
    CHECK_THROWS(parse_prompt_id("nope"));
}

TEST_CASE("re-annotation prompt lists every taxonomy pattern") {
    const std::string text = render(PromptId::Reannotation);
    for (const char* p : {"Surreal", "Technology", "Natural", "Artistic", "Color", "Count", "Orientation", "Position",
                          "Contextual", "Text", "Symbol", "Geometry", "Motion"}) {
        CHECK_MESSAGE(text.find(p) != std::string::npos, p);
    }
}

TEST_CASE("summary prompt appends the ranked frequency map") {
    const FrequencyEntries ranked{{"Surreal", 2262}, {"Text", 1500}, {"Color", 900}};
    const std::string full = render_summary(ranked);
    const std::string base = render(PromptId::Summary);
    REQUIRE(full.starts_with(base));
    const auto tail = full.substr(base.size());
    REQUIRE(tail.starts_with("\n# Input Data\n"));
    const auto j = nlohmann::ordered_json::parse(tail.substr(std::string("\n# Input Data\n").size()));
    std::vector<std::string> keys;
    for (const auto& [k, v] : j.items()) keys.push_back(k);
    CHECK(keys == std::vector<std::string>{"Surreal", "Text", "Color"});
    CHECK(j["Surreal"] == 2262);
    CHECK(full.find("\"Surreal\": 2262") != std::string::npos);

    const auto top = render_summary(ranked, 2);
    CHECK(top.find("\"Color\"") == std::string::npos);
    CHECK(top.find("\"Text\": 1500") != std::string::npos);
}

TEST_CASE("caption word counting and range flag") {
    CHECK(count_words("") == 0);
    CHECK(count_words("   \n\t ") == 0);
    CHECK(count_words("a b  c\nd") == 4);
    CHECK(count_words("one two　three four") == 4);
    for (std::size_t n : {19u, 20u, 21u, 59u, 60u, 61u}) {
        const auto q = check_caption(words(n));
        CHECK(q.word_count == n);
        CHECK(q.in_range == (n >= kCaptionMinWords && n <= kCaptionMaxWords));
    }
}

TEST_CASE("caption boilerplate markers") {
    const auto clean = check_caption("A red fox " + words(25));
    CHECK_FALSE(clean.boilerplate_prefix);
    CHECK_FALSE(clean.boilerplate_suffix);
    CHECK(clean.markers.empty());

    const auto pre = check_caption("Here is a caption-prompt for the image: a red fox " + words(20));
    CHECK(pre.boilerplate_prefix);
    CHECK_FALSE(pre.markers.empty());

    const auto post = check_caption("A red fox " + words(25) + "\n\nThis caption captures the mood of the scene.");
    CHECK(post.boilerplate_suffix);
    CHECK_FALSE(post.boilerplate_prefix);
}

TEST_CASE("caption checking is total on arbitrary bytes") {
    std::string junk;
    for (int i = 0; i < 4096; ++i) junk.push_back(static_cast<char>((i * 131) & 0xFF));
    const std::string copy = junk;
    const auto q = check_caption(junk);
    CHECK(junk == copy);
    CHECK(q.word_count > 0);
    CHECK_NOTHROW(check_caption("\xF0\x9F"));
    CHECK_NOTHROW(check_caption(std::string(1, '\0')));
}

TEST_CASE("annotation parsing") {
    const std::string example = R"({
    "description": "A street sign reading 'dog' beside a leaning building.",
    "image_pattern": ["Text", "Structural and Physical Characteristics"],
    "pattern_detail": {
        "Text": "The image contains the text `dog'.",
        "Structural and Physical Characteristics": "The image includes buildings with prominent leaning features."
    }})";
    const auto a = parse_annotation(example, false);
    CHECK(a.image_pattern.size() == 2);
    CHECK(a.pattern_detail.at("Text").find("dog") != std::string::npos);
    CHECK_THROWS_AS(parse_annotation(example, true), UnknownPattern);

    const auto prose = parse_annotation("Sure! Here is the JSON {not json} you asked for:\n" + example + "\nThanks.", false);
    CHECK(prose == a);

    const std::string restricted = R"({"description": "Two signs.", "image_pattern": ["Text", "Count"],
        "pattern_detail": {"Text": "Signs read {STOP}.", "Count": "There are two signs."}})";
    const auto r = parse_annotation(restricted, true);
    CHECK(r.image_pattern == std::vector<std::string>{"Text", "Count"});
    CHECK(r.pattern_detail.at("Text") == "Signs read {STOP}.");

    CHECK_THROWS_AS(parse_annotation("no json at all", false), NoJsonFound);
    CHECK_THROWS_AS(parse_annotation(R"({"image_pattern": ["Text"], "pattern_detail": {"Text": "x"}})", false),
                    SchemaMismatch);
    CHECK_THROWS_AS(parse_annotation(R"({"description": "d", "image_pattern": ["Text"], "pattern_detail": {}})", false),
                    SchemaMismatch);
    CHECK_THROWS_AS(
        parse_annotation(R"({"description": "d", "image_pattern": "Text", "pattern_detail": {"Text": "x"}})", false),
        SchemaMismatch);
    CHECK_THROWS_AS(parse_annotation(R"({"description": "d", "image_pattern": ["Lighting"],
        "pattern_detail": {"Lighting": "soft light"}})", true),
                    UnknownPattern);

    const auto again = parse_annotation(serialize_annotation(r), true);
    CHECK(again == r);
}

TEST_CASE("json extraction skips braces inside strings") {
    const auto j = extract_json_object(R"(prefix "{" {"a": "}{", "b": {"c": 1}} trailing {"z": 2})");
    REQUIRE(j.has_value());
    CHECK(nlohmann::json::parse(*j)["b"]["c"] == 1);
    CHECK_FALSE(extract_json_object("{ unbalanced").has_value());
}

TEST_CASE("summary parsing") {
    const auto s = parse_summary(R"(Result: {"image_pattern": ["Surreal", "Text"],
        "pattern_detail": {"Surreal": "Dreamlike scenes.", "Text": "Written words."}})");
    CHECK(s.image_pattern == std::vector<std::string>{"Surreal", "Text"});
    CHECK_FALSE(s.raw.empty());
    CHECK_THROWS_AS(parse_summary("nothing"), NoJsonFound);
}
