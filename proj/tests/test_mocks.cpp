#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "ragloop/eval.hpp"
#include "ragloop/mocks.hpp"

using namespace ragloop;

namespace {

GenerationRequest extractor_request(const std::string& prev_cache, const std::string& docs) {
    auto templates = trace::TemplateSet::defaults();
    GenerationRequest request;
    request.model_id = "extractor";
    request.prompt = templates.render(trace::TemplateId::Extractor,
                                      {{"question", "q?"},
                                       {"information", docs},
                                       {"prev_cache", prev_cache}});
    return request;
}

}  // namespace

TEST_CASE("faithful extractor appends one fact per new title") {
    mocks::FaithfulExtractor extractor;
    auto result = extractor.generate(extractor_request(
        "No helpful information found",
        "Doc 1(Title: \"Lima\") Lima is the capital.\nDoc 2(Title: \"Peru\") Peru is a country."));
    CHECK(result.text == "<information> Fact from Lima. Fact from Peru. </information>");

    result = extractor.generate(extractor_request(
        "Fact from Lima. Fact from Peru.",
        "Doc 1(Title: \"Peru\") repeat\nDoc 2(Title: \"Andes\") new"));
    CHECK(result.text ==
          "<information> Fact from Lima. Fact from Peru. Fact from Andes. </information>");

    result = extractor.generate(
        extractor_request("Fact from Lima.", "Doc 1(Title: \"Lima\") nothing new"));
    CHECK(result.text == "<information> Fact from Lima. </information>");

    result = extractor.generate(extractor_request("No helpful information found", ""));
    CHECK(result.text == "<information> No helpful information found </information>");
}

TEST_CASE("dropping extractor discards the previous cache") {
    mocks::DroppingExtractor extractor;
    auto result = extractor.generate(extractor_request(
        "Fact from Lima.", "Doc 1(Title: \"Andes\") mountains"));
    CHECK(result.text == "<information> Fact from Andes. </information>");
    CHECK(result.text.find("Lima") == std::string::npos);
}

TEST_CASE("dropping extractor trips the monotonicity validator") {
    mocks::DroppingExtractor client;
    auto templates = trace::TemplateSet::defaults();
    Contextualizer extractor(client, templates, {"extractor", 512, 0.0});
    MemoryCache cache;
    cache.content = "Fact from Lima.";
    cache.revision = 1;

    std::vector<Document> docs{{"d1", "Andes", "mountains", 1.0}};
    ExtractionOutcome outcome = extractor.contextualize("q?", docs, cache);
    REQUIRE(outcome.violation.has_value());
    MemoryCache rejected = commit(cache, outcome, 1, CachePolicy::Reject);
    CHECK(rejected.content == "Fact from Lima.");
    CHECK(rejected.revision == 1);
    CHECK(rejected.history.size() == 1);
}

TEST_CASE("rule judge matches by normalization and synonym table") {
    mocks::RuleJudge judge_client(
        std::vector<std::pair<std::string, std::string>>{{"2", "Two"}, {"950 Pesos", "P950"}});
    auto templates = trace::TemplateSet::defaults();
    Judge judge(judge_client, templates);

    CHECK(judge.llm_match("The Ed Lee", std::vector<std::string>{"Ed Lee"}).score == 1);
    CHECK(judge.llm_match("2", std::vector<std::string>{"Two"}).score == 1);
    CHECK(judge.llm_match("two", std::vector<std::string>{"2"}).score == 1);
    CHECK(judge.llm_match("950 pesos", std::vector<std::string>{"P950."}).score == 1);
    CHECK(judge.llm_match("P950", std::vector<std::string>{"950 Pesos"}).score == 1);
    CHECK(judge.llm_match("949 pesos", std::vector<std::string>{"P950"}).score == 0);
    CHECK(judge.llm_match("unrelated", std::vector<std::string>{"Ed Lee"}).score == 0);
}

TEST_CASE("rule judge scores reasoning prompts with a fixed three") {
    mocks::RuleJudge client;
    auto templates = trace::TemplateSet::defaults();
    GenerationRequest request;
    request.model_id = "judge";
    request.prompt = templates.render(trace::TemplateId::ReasoningScore,
                                      {{"question", "q?"},
                                       {"information", "Doc 1(Title: \"T\") body"},
                                       {"think", "I should search for T."}});
    auto result = client.generate(request);
    CHECK(result.text.find("Score: 3") != std::string::npos);
}

// ---------------------------------------------------------------------------
// Scenario registry
// ---------------------------------------------------------------------------

TEST_CASE("the scenario registry lists the five fixtures") {
    const auto& names = mocks::scenario_names();
    std::vector<std::string> expected{"appendix_baseline", "appendix_extractor",
                                      "duplicate_heavy", "disjoint", "batch_mixed"};
    CHECK(names == expected);
    for (const auto& name : names) {
        FAST_CHECK_UNARY(!mocks::fixture_scenario(name).dataset.empty());
    }
    CHECK_THROWS_AS(mocks::fixture_scenario("nope"), ConfigError);
}

TEST_CASE("every scenario expectation is reproduced by a live run") {
    for (const auto& name : mocks::scenario_names()) {
        mocks::FixtureScenario scenario = mocks::fixture_scenario(name);
        for (PipelineMode mode : scenario.modes()) {
            for (const auto& [qid, expected] : scenario.expected.at(mode)) {
                CAPTURE(name);
                CAPTURE(mode_name(mode));
                CAPTURE(qid);
                Episode episode = mocks::run_fixture_episode(scenario, mode, qid);
                CHECK(episode.retrieval_count == expected.retrieval_count);
                CHECK(episode.termination == expected.termination);
                if (expected.answer) {
                    REQUIRE(episode.final_answer.has_value());
                    CHECK(*episode.final_answer == *expected.answer);
                } else {
                    CHECK_FALSE(episode.final_answer.has_value());
                }
            }
        }
    }
}

TEST_CASE("fixture episodes are deterministic") {
    mocks::FixtureScenario scenario = mocks::fixture_scenario("duplicate_heavy");
    const std::string qid = scenario.dataset[0].qid;
    for (PipelineMode mode : scenario.modes()) {
        Episode a = mocks::run_fixture_episode(scenario, mode, qid, "ds");
        Episode b = mocks::run_fixture_episode(scenario, mode, qid, "ds");
        CHECK(episode_to_json(a) == episode_to_json(b));
    }
}

TEST_CASE("the appendix replay follows the documented trace") {
    mocks::FixtureScenario scenario = mocks::fixture_scenario("appendix_baseline");
    const std::string qid = scenario.dataset[0].qid;
    Episode episode = mocks::run_fixture_episode(scenario, PipelineMode::Baseline, qid);
    CHECK(episode.retrieval_count == 4);
    CHECK(episode.termination == Termination::Answered);
    REQUIRE(episode.final_answer.has_value());
    CHECK(*episode.final_answer == "Ed Lee");
    CHECK(exact_match(episode.final_answer, episode.gold_answers) == 1);

    mocks::FixtureScenario extractor = mocks::fixture_scenario("appendix_extractor");
    Episode distilled = mocks::run_fixture_episode(extractor, PipelineMode::Context,
                                                   extractor.dataset[0].qid);
    CHECK(distilled.retrieval_count == 2);
    CHECK(*distilled.final_answer == "Ed Lee");
    int committed = 0;
    for (const auto& turn : distilled.turns) {
        if (turn.executed && !turn.cache_snapshot.empty()) ++committed;
    }
    CHECK(committed == 2);
}

TEST_CASE("duplicate_heavy rewards the cache modes with fewer searches") {
    mocks::FixtureScenario scenario = mocks::fixture_scenario("duplicate_heavy");
    const std::string qid = scenario.dataset[0].qid;
    auto searches = [&](PipelineMode mode) {
        return mocks::run_fixture_episode(scenario, mode, qid).retrieval_count;
    };
    int baseline = searches(PipelineMode::Baseline);
    CHECK(searches(PipelineMode::Context) < baseline);
    CHECK(searches(PipelineMode::Hybrid) < baseline);
}

TEST_CASE("batch_mixed expectations split by question") {
    mocks::FixtureScenario scenario = mocks::fixture_scenario("batch_mixed");
    CHECK(scenario.dataset.size() == 10);
    const auto& expected = scenario.expected.at(PipelineMode::Baseline);
    int hits = 0;
    for (const auto& record : scenario.dataset) {
        Episode episode = mocks::run_fixture_episode(scenario, PipelineMode::Baseline,
                                                     record.qid);
        hits += exact_match(episode.final_answer, episode.gold_answers);
        CHECK(episode.retrieval_count == expected.at(record.qid).retrieval_count);
    }
    CHECK(hits == 6);
}

TEST_CASE("unknown question ids are rejected") {
    mocks::FixtureScenario scenario = mocks::fixture_scenario("disjoint");
    CHECK_THROWS_AS(
        mocks::run_fixture_episode(scenario, PipelineMode::Baseline, "no-such-qid"),
        ConfigError);
}
