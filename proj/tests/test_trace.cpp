#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "ragloop/trace.hpp"

using namespace ragloop;
using namespace ragloop::trace;

TEST_CASE("tag names and delimiters") {
    CHECK(tag_name(TagKind::Think) == "think");
    CHECK(tag_name(TagKind::Search) == "search");
    CHECK(tag_name(TagKind::Information) == "information");
    CHECK(tag_name(TagKind::Retrieval) == "retrieval");
    CHECK(tag_name(TagKind::Answer) == "answer");
    CHECK(open_tag(TagKind::Search) == "<search>");
    CHECK(close_tag(TagKind::Answer) == "</answer>");
}

TEST_CASE("scan_blocks finds complete blocks in offset order") {
    std::string text = "<think> plan </think>\n<search> who is it </search> tail";
    auto blocks = scan_blocks(text);
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0].kind == TagKind::Think);
    CHECK(blocks[0].content == "plan");
    CHECK(blocks[1].kind == TagKind::Search);
    CHECK(blocks[1].content == "who is it");
    CHECK(blocks[0].begin == 0);
    CHECK(text.substr(blocks[1].begin, blocks[1].end - blocks[1].begin) ==
          "<search> who is it </search>");
}

TEST_CASE("scan_blocks ignores unclosed and unopened tags") {
    CHECK(scan_blocks("<search> dangling").empty());
    CHECK(scan_blocks("dangling </search>").empty());
    auto blocks = scan_blocks("</search> <search> q </search>");
    REQUIRE(blocks.size() == 1);
    CHECK(blocks[0].content == "q");
}

TEST_CASE("first_block returns the earliest complete block of a kind") {
    std::string text = "<search> one </search> <search> two </search>";
    auto block = first_block(text, TagKind::Search);
    REQUIRE(block.has_value());
    CHECK(block->content == "one");
    CHECK_FALSE(first_block(text, TagKind::Answer).has_value());
}

TEST_CASE("matching is case-sensitive and attribute-free") {
    CHECK_FALSE(first_block("<Search> q </Search>", TagKind::Search).has_value());
    CHECK_FALSE(first_block("<search type=x> q </search>", TagKind::Search).has_value());
}

TEST_CASE("parse_next_action takes the first complete action block") {
    auto action = parse_next_action("<think> hm </think> <search> capital of peru </search>");
    CHECK(action.is_search());
    CHECK(action.text == "capital of peru");

    action = parse_next_action("<answer> Lima </answer> <search> later </search>");
    CHECK(action.is_answer());
    CHECK(action.text == "Lima");

    action = parse_next_action("<search> now </search> <answer> later </answer>");
    CHECK(action.is_search());
    CHECK(action.text == "now");
}

TEST_CASE("parse_next_action failure reasons") {
    auto action = parse_next_action("<think> only thought </think>");
    CHECK(action.is_malformed());
    CHECK(action.reason == "missing-tag");

    action = parse_next_action("<search> never closed");
    CHECK(action.is_malformed());
    CHECK(action.reason == "unclosed-tag");

    action = parse_next_action("<search>   </search>");
    CHECK(action.is_malformed());
    CHECK(action.reason == "empty-content");

    action = parse_next_action("<search> outer <answer> inner </answer> </search>");
    CHECK(action.is_malformed());
    CHECK(action.reason == "nested-tag");

    CHECK(parse_next_action("").is_malformed());
    CHECK(parse_next_action("plain text with no tags").reason == "missing-tag");
}

TEST_CASE("stop sequences cover both action close tags") {
    auto stops = stop_sequences();
    REQUIRE(stops.size() == 2);
    CHECK(stops[0] == "</search>");
    CHECK(stops[1] == "</answer>");
}

TEST_CASE("render_information_block format") {
    std::vector<Document> docs{
        {"d1", "First Title", "first body.", 0.0},
        {"d2", "Second", "second body text.", 0.0},
    };
    CHECK(render_information_block(docs) ==
          "Doc 1(Title: \"First Title\") first body.\n"
          "Doc 2(Title: \"Second\") second body text.");
    CHECK_THROWS_AS(render_information_block({}), EmptyDocumentSet);
}

TEST_CASE("split_information_block inverts the renderer") {
    std::vector<Document> docs{
        {"a", "Alpha", "alpha text", 0.0},
        {"b", "Beta (b)", "beta: text, with punctuation", 0.0},
    };
    auto pairs = split_information_block(render_information_block(docs));
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[0].first == "Alpha");
    CHECK(pairs[0].second == "alpha text");
    CHECK(pairs[1].first == "Beta (b)");
    CHECK(pairs[1].second == "beta: text, with punctuation");
}

TEST_CASE("document block round trip holds for generated inputs") {
    std::mt19937_64 gen(11);
    const std::string words[] = {"amber", "basalt", "cedar", "delta", "ember", "flint"};
    auto word = [&] { return words[gen() % 6]; };
    for (int round = 0; round < 200; ++round) {
        std::vector<Document> docs;
        std::size_t n = 1 + gen() % 5;
        for (std::size_t i = 0; i < n; ++i) {
            std::string title = word();
            for (std::size_t w = gen() % 3; w > 0; --w) title += " " + word();
            std::string body = word();
            for (std::size_t w = gen() % 8; w > 0; --w) body += " " + word();
            docs.push_back({"id" + std::to_string(i), title, body, 0.0});
        }
        auto pairs = split_information_block(render_information_block(docs));
        REQUIRE(pairs.size() == docs.size());
        for (std::size_t i = 0; i < docs.size(); ++i) {
            CHECK(pairs[i].first == docs[i].title);
            CHECK(pairs[i].second == docs[i].body);
        }
    }
}

TEST_CASE("trim strips surrounding whitespace only") {
    CHECK(trim("  a b  ") == "a b");
    CHECK(trim("\n\t x \r\n") == "x");
    CHECK(trim("") == "");
    CHECK(trim("   ") == "");
}

TEST_CASE("default templates carry their required placeholders") {
    TemplateSet templates = TemplateSet::defaults();
    for (TemplateId id : {TemplateId::BaseAgent, TemplateId::Extractor, TemplateId::JudgeMatch,
                          TemplateId::ReasoningScore}) {
        const std::string& text = templates.text(id);
        CHECK_FALSE(text.empty());
        for (const std::string& name : required_placeholders(id)) {
            CHECK(text.find("{" + name + "}") != std::string::npos);
        }
    }
}

TEST_CASE("render substitutes bindings exactly once") {
    TemplateSet templates = TemplateSet::defaults();
    templates.set(TemplateId::BaseAgent, "Q: {question} Q again: {question}");
    CHECK(templates.render(TemplateId::BaseAgent, {{"question", "why?"}}) ==
          "Q: why? Q again: why?");

    // A bound value is inserted verbatim, never re-expanded.
    templates.set(TemplateId::BaseAgent, "Q: {question}");
    CHECK(templates.render(TemplateId::BaseAgent, {{"question", "{question}"}}) ==
          "Q: {question}");
}

TEST_CASE("render rejects unbound placeholders") {
    TemplateSet templates = TemplateSet::defaults();
    CHECK_THROWS_AS(templates.render(TemplateId::BaseAgent, {}), UnboundPlaceholder);
    try {
        templates.render(TemplateId::Extractor, {{"question", "q"}, {"information", "i"}});
        FAIL("expected UnboundPlaceholder");
    } catch (const UnboundPlaceholder& e) {
        CHECK(e.name == "prev_cache");
    }
}

TEST_CASE("rendered defaults contain no leftover placeholder tokens") {
    TemplateSet templates = TemplateSet::defaults();
    TemplateSet::Bindings all{{"question", "q"},       {"information", "info"},
                              {"prev_cache", "cache"}, {"golds", "[\"g\"]"},
                              {"predicted", "p"},      {"think", "t"}};
    for (TemplateId id : {TemplateId::BaseAgent, TemplateId::Extractor, TemplateId::JudgeMatch,
                          TemplateId::ReasoningScore}) {
        TemplateSet::Bindings bindings;
        for (const std::string& name : required_placeholders(id)) bindings[name] = all[name];
        std::string rendered = templates.render(id, bindings);
        CHECK(rendered.find('{') == std::string::npos);
    }
}

TEST_CASE("template files on disk match the compiled-in defaults") {
    TemplateSet from_disk = TemplateSet::load_dir(RAGLOOP_PROMPTS_DIR);
    TemplateSet defaults = TemplateSet::defaults();
    for (TemplateId id : {TemplateId::BaseAgent, TemplateId::Extractor, TemplateId::JudgeMatch,
                          TemplateId::ReasoningScore}) {
        CHECK(from_disk.text(id) == defaults.text(id));
    }
}

TEST_CASE("load_dir rejects a directory with a template missing") {
    CHECK_THROWS_AS(TemplateSet::load_dir("/nonexistent/prompt/dir"), IoError);
}

TEST_CASE("forced answer suffix demands an answer block") {
    const std::string& suffix = forced_answer_suffix();
    CHECK(suffix.find("<answer>") != std::string::npos);
    CHECK(suffix.find("</answer>") != std::string::npos);
    CHECK(suffix.find("maximum number of times") != std::string::npos);
}
