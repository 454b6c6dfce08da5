#include <doctest.h>

#include <string>
#include <vector>

#include "ragloop/context.hpp"
#include "ragloop/trace.hpp"

using namespace ragloop;

TEST_CASE("no-information sentinel matching") {
    CHECK(is_no_information_sentinel("No helpful information found"));
    CHECK(is_no_information_sentinel("No helpful information found."));
    CHECK(is_no_information_sentinel("  no helpful information found  "));
    CHECK(is_no_information_sentinel("NO HELPFUL INFORMATION FOUND."));
    CHECK_FALSE(is_no_information_sentinel(""));
    CHECK_FALSE(is_no_information_sentinel("No helpful information found!!"));
    CHECK_FALSE(is_no_information_sentinel("There is no helpful information found"));
}

TEST_CASE("semantically empty cache") {
    MemoryCache cache;
    CHECK(cache.semantically_empty());
    cache.content = "  ";
    CHECK(cache.semantically_empty());
    cache.content = "No helpful information found.";
    CHECK(cache.semantically_empty());
    cache.content = "Jeff Sheehy is a supervisor.";
    CHECK_FALSE(cache.semantically_empty());
}

TEST_CASE("monotonicity holds for verbatim extension") {
    CHECK_FALSE(validate_monotonicity("old facts.", "old facts. new facts.").has_value());
    CHECK_FALSE(validate_monotonicity("", "anything").has_value());
    CHECK_FALSE(validate_monotonicity("same", "same").has_value());
}

TEST_CASE("monotonicity tolerates whitespace reflow") {
    CHECK_FALSE(validate_monotonicity("line one\nline two", "line one line two plus").has_value());
    CHECK_FALSE(validate_monotonicity("a  b\tc", "x a b c y").has_value());
}

TEST_CASE("monotonicity flags dropped content") {
    auto violation = validate_monotonicity("the first fact. the second fact.", "the second fact.");
    REQUIRE(violation.has_value());
    CHECK_FALSE(violation->empty());
    CHECK(validate_monotonicity("abc", "ab").has_value());
}

TEST_CASE("commit replaces content and bumps the revision") {
    MemoryCache cache;
    cache.episode_id = "ep";
    ExtractionOutcome outcome;
    outcome.new_content = "first extraction.";
    outcome.changed = true;

    cache = commit(std::move(cache), outcome, 0);
    CHECK(cache.content == "first extraction.");
    CHECK(cache.revision == 1);
    REQUIRE(cache.history.size() == 1);
    CHECK(cache.history[0].first == 0);
    CHECK(cache.history[0].second == "first extraction.");
}

TEST_CASE("commit without a content change keeps the revision") {
    MemoryCache cache;
    cache.content = "stable";
    cache.revision = 3;
    ExtractionOutcome outcome;
    outcome.new_content = "stable";

    cache = commit(std::move(cache), outcome, 5);
    CHECK(cache.revision == 3);
    CHECK(cache.history.size() == 1);
}

TEST_CASE("warn policy commits despite a violation") {
    MemoryCache cache;
    cache.content = "original fact.";
    cache.revision = 1;
    ExtractionOutcome outcome;
    outcome.new_content = "unrelated text.";
    outcome.changed = true;
    outcome.violation = "previous cache content was dropped";

    cache = commit(std::move(cache), outcome, 2, CachePolicy::Warn);
    CHECK(cache.content == "unrelated text.");
    CHECK(cache.revision == 2);
}

TEST_CASE("reject policy preserves the previous cache on a violation") {
    MemoryCache cache;
    cache.content = "original fact.";
    cache.revision = 1;
    ExtractionOutcome outcome;
    outcome.new_content = "unrelated text.";
    outcome.changed = true;
    outcome.violation = "previous cache content was dropped";

    cache = commit(std::move(cache), outcome, 2, CachePolicy::Reject);
    CHECK(cache.content == "original fact.");
    CHECK(cache.revision == 1);
    REQUIRE(cache.history.size() == 1);
    CHECK(cache.history[0].second == "original fact.");
}

TEST_CASE("cache policy names") {
    CHECK(cache_policy_name(CachePolicy::Warn) == "warn");
    CHECK(cache_policy_name(CachePolicy::Reject) == "reject");
}

// ---------------------------------------------------------------------------
// Contextualizer against scripted extractors
// ---------------------------------------------------------------------------

namespace {

std::vector<Document> sample_docs() {
    return {
        {"d1", "Jeff Sheehy", "Jeff Sheehy is a member of the Board.", 0.0},
        {"d2", "Ed Lee", "Ed Lee served as mayor of San Francisco.", 0.0},
    };
}

ScriptedLlmClient scripted(std::vector<PolicyStep> steps) {
    return ScriptedLlmClient(ScriptedPolicy{std::move(steps)});
}

}  // namespace

TEST_CASE("contextualize renders the extractor prompt and parses the block") {
    ScriptedLlmClient client = scripted(
        {{"- Previous Information: No helpful information found",
          "<information> Jeff Sheehy is a member. Ed Lee was mayor. </information>"}});
    auto templates = trace::TemplateSet::defaults();
    Contextualizer contextualizer(client, templates);

    MemoryCache cache;
    auto outcome = contextualizer.contextualize("who came first?", sample_docs(), cache);
    CHECK(outcome.new_content == "Jeff Sheehy is a member. Ed Lee was mayor.");
    CHECK(outcome.changed);
    CHECK_FALSE(outcome.violation.has_value());
    CHECK(outcome.usage.prompt_tokens > 0);
}

TEST_CASE("contextualize passes the previous cache through the prompt") {
    ScriptedLlmClient client = scripted(
        {{"- Previous Information: prior fact.",
          "<information> prior fact. and a new one. </information>"}});
    auto templates = trace::TemplateSet::defaults();
    Contextualizer contextualizer(client, templates);

    MemoryCache cache;
    cache.content = "prior fact.";
    auto outcome = contextualizer.contextualize("q", sample_docs(), cache);
    CHECK(outcome.new_content == "prior fact. and a new one.");
    CHECK_FALSE(outcome.violation.has_value());
}

TEST_CASE("contextualize repairs a stop-cut completion") {
    // A backend honoring the stop sequence returns the text without the
    // close tag; the block must still parse.
    ScriptedLlmClient client = scripted({{"", "<information> cut facts </information> extra"}});
    auto templates = trace::TemplateSet::defaults();
    Contextualizer contextualizer(client, templates);

    MemoryCache cache;
    auto outcome = contextualizer.contextualize("q", sample_docs(), cache);
    CHECK(outcome.new_content == "cut facts");
}

TEST_CASE("contextualize with no documents makes no backend call") {
    ScriptedLlmClient client = scripted({});
    auto templates = trace::TemplateSet::defaults();
    Contextualizer contextualizer(client, templates);

    MemoryCache cache;
    cache.content = "kept as is";
    auto outcome = contextualizer.contextualize("q", {}, cache);
    CHECK(outcome.new_content == "kept as is");
    CHECK_FALSE(outcome.changed);
    CHECK_FALSE(outcome.violation.has_value());
    CHECK(client.steps_consumed() == 0);
}

TEST_CASE("contextualize retries a reply without an information block") {
    ScriptedLlmClient client = scripted({
        {"", "no block here at all"},
        {"", "<information> second try worked </information>"},
    });
    auto templates = trace::TemplateSet::defaults();
    Contextualizer contextualizer(client, templates);

    MemoryCache cache;
    auto outcome = contextualizer.contextualize("q", sample_docs(), cache);
    CHECK(outcome.new_content == "second try worked");
    CHECK_FALSE(outcome.violation.has_value());
    CHECK(client.steps_consumed() == 2);
}

TEST_CASE("contextualize keeps the previous cache after two block-less replies") {
    ScriptedLlmClient client = scripted({
        {"", "still no block"},
        {"", "again nothing"},
    });
    auto templates = trace::TemplateSet::defaults();
    Contextualizer contextualizer(client, templates);

    MemoryCache cache;
    cache.content = "previous content";
    auto outcome = contextualizer.contextualize("q", sample_docs(), cache);
    CHECK(outcome.new_content == "previous content");
    CHECK_FALSE(outcome.changed);
    REQUIRE(outcome.violation.has_value());
    CHECK(outcome.violation->find("no information block") != std::string::npos);
}

TEST_CASE("contextualize flags a sentinel reply that would erase the cache") {
    ScriptedLlmClient client =
        scripted({{"", "<information> No helpful information found. </information>"}});
    auto templates = trace::TemplateSet::defaults();
    Contextualizer contextualizer(client, templates);

    MemoryCache cache;
    cache.content = "hard-won facts.";
    auto outcome = contextualizer.contextualize("q", sample_docs(), cache);
    REQUIRE(outcome.violation.has_value());
}

TEST_CASE("contextualize accepts the sentinel on an empty cache") {
    ScriptedLlmClient client =
        scripted({{"", "<information> No helpful information found </information>"}});
    auto templates = trace::TemplateSet::defaults();
    Contextualizer contextualizer(client, templates);

    MemoryCache cache;
    auto outcome = contextualizer.contextualize("q", sample_docs(), cache);
    CHECK(outcome.new_content == "No helpful information found");
    CHECK_FALSE(outcome.violation.has_value());
}

TEST_CASE("contextualize flags dropped cache content") {
    ScriptedLlmClient client =
        scripted({{"", "<information> a fresh start only </information>"}});
    auto templates = trace::TemplateSet::defaults();
    Contextualizer contextualizer(client, templates);

    MemoryCache cache;
    cache.content = "the original fact.";
    auto outcome = contextualizer.contextualize("q", sample_docs(), cache);
    CHECK(outcome.new_content == "a fresh start only");
    REQUIRE(outcome.violation.has_value());
}
