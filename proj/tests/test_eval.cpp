#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ragloop/eval.hpp"
#include "ragloop/mocks.hpp"

using namespace ragloop;

// Expectations generated with the standard reading-comprehension normalizer
// (lowercase, strip ASCII punctuation, drop whole-word articles, collapse
// whitespace) and frozen here.
TEST_CASE("normalize_answer matches the frozen reference pairs") {
    const std::pair<const char*, const char*> pairs[] = {
        {"The Ed Lee", "ed lee"},
        {"ed lee", "ed lee"},
        {"P950.", "p950"},
        {"p950", "p950"},
        {"950 Pesos", "950 pesos"},
        {"A Tale of Two Cities", "tale of two cities"},
        {"an apple a day", "apple day"},
        {"THE THE THE", ""},
        {"  spaced   out  answer  ", "spaced out answer"},
        {"hyphen-ated", "hyphenated"},
        {"it's", "its"},
        {"don't stop", "dont stop"},
        {"U.S.A.", "usa"},
        {"co-operate", "cooperate"},
        {"(parenthetical)", "parenthetical"},
        {"answer!", "answer"},
        {"answer?!?", "answer"},
        {"semi;colon", "semicolon"},
        {"comma, separated, list", "comma separated list"},
        {"quote \"inside\"", "quote inside"},
        {"'single quoted'", "single quoted"},
        {"back`tick", "backtick"},
        {"at@sign", "atsign"},
        {"hash#tag", "hashtag"},
        {"dollar$", "dollar"},
        {"percent%", "percent"},
        {"caret^", "caret"},
        {"amp&ersand", "ampersand"},
        {"star*", "star"},
        {"under_score", "underscore"},
        {"equals=", "equals"},
        {"plus+", "plus"},
        {"brackets[x]", "bracketsx"},
        {"braces{y}", "bracesy"},
        {"pipe|", "pipe"},
        {"backslash\\", "backslash"},
        {"slash/path", "slashpath"},
        {"less<more>", "lessmore"},
        {"tilde~", "tilde"},
        {"the", ""},
        {"a", ""},
        {"an", ""},
        {"thea", "thea"},
        {"athe", "athe"},
        {"they", "they"},
        {"then", "then"},
        {"another", "another"},
        {"Ed Lee the Mayor", "ed lee mayor"},
        {"the-answer", "theanswer"},
        {"42", "42"},
        {"3.14", "314"},
        {"1,000,000", "1000000"},
        {"San Francisco Board of Supervisors", "san francisco board of supervisors"},
        {"January 2017", "january 2017"},
        {"tab\tseparated", "tab separated"},
        {"new\nline", "new line"},
        {"mixed   WHITE\t\nspace", "mixed white space"},
        {"caf\xc3\xa9 au lait", "caf\xc3\xa9 au lait"},
        {"na\xc3\xafve answer", "na\xc3\xafve answer"},
    };
    for (const auto& [input, expected] : pairs) {
        CAPTURE(input);
        CHECK(normalize_answer(input) == expected);
    }
}

TEST_CASE("exact_match compares normalized forms against any gold") {
    std::vector<std::string> golds{"Ed Lee", "Edwin M. Lee"};
    CHECK(exact_match(std::string("the ed lee"), golds) == 1);
    CHECK(exact_match(std::string("Edwin M Lee"), golds) == 1);
    CHECK(exact_match(std::string("Jeff Sheehy"), golds) == 0);
    CHECK(exact_match(std::nullopt, golds) == 0);
    CHECK(exact_match(std::string("anything"), {}) == 0);
}

TEST_CASE("judge reply parsing accepts the documented shape") {
    auto verdict = parse_judge_reply("Score: 1\nJustification: they are the same.", 0, 1);
    CHECK(verdict.score == 1);
    CHECK(verdict.justification == "they are the same.");

    verdict = parse_judge_reply("Some preamble.\nScore: 4\nJustification: solid reasoning", 1, 5);
    CHECK(verdict.score == 4);

    verdict = parse_judge_reply("Score:0", 0, 1);
    CHECK(verdict.score == 0);
    CHECK(verdict.justification.empty());

    verdict = parse_judge_reply("Score: \t 5", 1, 5);
    CHECK(verdict.score == 5);
}

TEST_CASE("judge reply parsing rejects junk") {
    CHECK_THROWS_AS(parse_judge_reply("no score here", 0, 1), JudgeParseError);
    CHECK_THROWS_AS(parse_judge_reply("Score: high", 0, 1), JudgeParseError);
    CHECK_THROWS_AS(parse_judge_reply("Score: 2.5", 1, 5), JudgeParseError);
    CHECK_THROWS_AS(parse_judge_reply("Score: 7", 1, 5), JudgeParseError);
    CHECK_THROWS_AS(parse_judge_reply("Score: -1", 0, 1), JudgeParseError);
    CHECK_THROWS_AS(parse_judge_reply("Score:", 0, 1), JudgeParseError);
}

namespace {

ScriptedLlmClient scripted(std::vector<PolicyStep> steps) {
    return ScriptedLlmClient(ScriptedPolicy{std::move(steps)});
}

}  // namespace

TEST_CASE("judge retries an unparseable reply once") {
    ScriptedLlmClient client = scripted({
        {"", "mumbling with no score"},
        {"", "Score: 1\nJustification: second attempt."},
    });
    auto templates = trace::TemplateSet::defaults();
    Judge judge(client, templates);
    auto verdict = judge.llm_match("ed lee", std::vector<std::string>{"Ed Lee"});
    CHECK(verdict.score == 1);
    CHECK(client.steps_consumed() == 2);
    CHECK(judge.usage().prompt_tokens > 0);
}

TEST_CASE("judge gives up after the retry") {
    ScriptedLlmClient client = scripted({
        {"", "nothing useful"},
        {"", "still nothing"},
    });
    auto templates = trace::TemplateSet::defaults();
    Judge judge(client, templates);
    CHECK_THROWS_AS(judge.llm_match("x", std::vector<std::string>{"y"}), JudgeParseError);
}

TEST_CASE("judge caches verdicts by prompt digest") {
    ScriptedLlmClient client = scripted({
        {"", "Score: 1\nJustification: cached."},
    });
    auto templates = trace::TemplateSet::defaults();
    JudgeCache cache;
    Judge judge(client, templates, {}, &cache);
    auto first = judge.llm_match("a", std::vector<std::string>{"a"});
    auto second = judge.llm_match("a", std::vector<std::string>{"a"});
    CHECK(first.score == second.score);
    CHECK(client.steps_consumed() == 1);
    CHECK(cache.size() == 1);
}

TEST_CASE("judge cache persists to a jsonl file") {
    std::string path = (std::filesystem::temp_directory_path() / "judge_cache_test.jsonl").string();
    std::remove(path.c_str());
    {
        JudgeCache cache(path);
        cache.put("k1", {1, "yes"});
        cache.put("k2", {0, "no"});
    }
    JudgeCache reloaded(path);
    CHECK(reloaded.size() == 2);
    auto verdict = reloaded.get("k1");
    REQUIRE(verdict.has_value());
    CHECK(verdict->score == 1);
    CHECK(verdict->justification == "yes");
    CHECK_FALSE(reloaded.get("missing").has_value());
    std::remove(path.c_str());
}

TEST_CASE("rule judge scores matches and synonyms") {
    mocks::RuleJudge client(std::vector<std::pair<std::string, std::string>>{{"2", "Two"}});
    auto templates = trace::TemplateSet::defaults();
    Judge judge(client, templates);
    CHECK(judge.llm_match("The Ed Lee", std::vector<std::string>{"ed lee"}).score == 1);
    CHECK(judge.llm_match("2", std::vector<std::string>{"Two"}).score == 1);
    CHECK(judge.llm_match("Two", std::vector<std::string>{"2"}).score == 1);
    CHECK(judge.llm_match("three", std::vector<std::string>{"2"}).score == 0);
}

// ---------------------------------------------------------------------------
// Episode scoring
// ---------------------------------------------------------------------------

namespace {

Episode answered_episode(const std::string& answer, int retrievals) {
    Episode episode;
    episode.episode_id = "ep-" + answer + std::to_string(retrievals);
    episode.question = "q?";
    episode.gold_answers = {"Lima"};
    episode.final_answer = answer;
    episode.termination = Termination::Answered;
    episode.retrieval_count = retrievals;
    for (int i = 0; i < retrievals; ++i) {
        TurnRecord turn;
        turn.index = i;
        turn.executed = true;
        turn.think = "step " + std::to_string(i);
        turn.shown_documents = {{"d" + std::to_string(i), "T", "body", 0.0}};
        turn.new_document_count = 1;
        episode.turns.push_back(std::move(turn));
    }
    TurnRecord final_turn;
    final_turn.index = retrievals;
    final_turn.think = "concluding";
    final_turn.action = trace::AgentAction::answer(answer);
    episode.turns.push_back(std::move(final_turn));
    return episode;
}

}  // namespace

TEST_CASE("score_episode computes em and collects counters") {
    Episode episode = answered_episode("the lima", 2);
    EvalRecord record = score_episode(episode);
    CHECK(record.em == 1);
    CHECK_FALSE(record.llm_match.has_value());
    CHECK(record.retrieval_count == 2);
    CHECK(record.new_document_counts == std::vector<int>{1, 1});
    CHECK(record.predicted == "the lima");
}

TEST_CASE("score_episode with no answer scores zero without a judge call") {
    Episode episode = answered_episode("x", 1);
    episode.final_answer.reset();
    episode.termination = Termination::TurnCapReached;

    ScriptedLlmClient client = scripted({});
    auto templates = trace::TemplateSet::defaults();
    Judge judge(client, templates);
    ScoreOptions options;
    options.judge = &judge;
    EvalRecord record = score_episode(episode, options);
    CHECK(record.em == 0);
    REQUIRE(record.llm_match.has_value());
    CHECK(*record.llm_match == 0);
    CHECK(client.steps_consumed() == 0);
}

TEST_CASE("skip_judge_on_em short-circuits exact matches") {
    Episode episode = answered_episode("Lima", 1);
    ScriptedLlmClient client = scripted({});
    auto templates = trace::TemplateSet::defaults();
    Judge judge(client, templates);
    ScoreOptions options;
    options.judge = &judge;
    options.skip_judge_on_em = true;
    EvalRecord record = score_episode(episode, options);
    CHECK(record.em == 1);
    REQUIRE(record.llm_match.has_value());
    CHECK(*record.llm_match == 1);
    CHECK(client.steps_consumed() == 0);
}

TEST_CASE("a judge that never parses leaves llm_match absent") {
    Episode episode = answered_episode("Lima", 1);
    ScriptedLlmClient client = scripted({
        {"", "word salad"},
        {"", "more salad"},
    });
    auto templates = trace::TemplateSet::defaults();
    Judge judge(client, templates);
    ScoreOptions options;
    options.judge = &judge;
    EvalRecord record = score_episode(episode, options);
    CHECK(record.em == 1);
    CHECK_FALSE(record.llm_match.has_value());
}

TEST_CASE("reasoning scores pair each injection with the following think") {
    Episode episode = answered_episode("Lima", 2);
    mocks::RuleJudge client;
    auto templates = trace::TemplateSet::defaults();
    Judge judge(client, templates);
    ScoreOptions options;
    options.judge = &judge;
    options.reasoning = true;
    EvalRecord record = score_episode(episode, options);
    REQUIRE(record.reasoning_scores.has_value());
    CHECK(record.reasoning_scores->size() == 2);
    for (int score : *record.reasoning_scores) CHECK(score == 3);
}

TEST_CASE("injected information payload follows the mode") {
    TurnRecord turn;
    turn.shown_documents = {{"d1", "T", "body text", 0.0}};
    turn.cache_snapshot = "cache contents";
    CHECK(injected_information_payload(PipelineMode::Baseline, turn) ==
          "Doc 1(Title: \"T\") body text");
    CHECK(injected_information_payload(PipelineMode::Dedup, turn) ==
          "Doc 1(Title: \"T\") body text");
    CHECK(injected_information_payload(PipelineMode::Context, turn) == "cache contents");
    CHECK(injected_information_payload(PipelineMode::Hybrid, turn) == "cache contents");

    TurnRecord empty_turn;
    CHECK(injected_information_payload(PipelineMode::Baseline, empty_turn) ==
          "No new documents found.");
    CHECK(injected_information_payload(PipelineMode::Context, empty_turn) ==
          "No helpful information found");
}

// ---------------------------------------------------------------------------
// Batch summary
// ---------------------------------------------------------------------------

namespace {

EvalRecord simple_record(const std::string& id, int em, int retrievals,
                         std::optional<int> llm = std::nullopt) {
    EvalRecord record;
    record.episode_id = id;
    record.question = "q";
    record.gold_answers = {"g"};
    record.predicted = "p";
    record.em = em;
    record.llm_match = llm;
    record.retrieval_count = retrievals;
    for (int i = 0; i < retrievals; ++i) record.new_document_counts.push_back(3 - i % 2);
    return record;
}

}  // namespace

TEST_CASE("summarize aggregates the documented statistics") {
    std::vector<EvalRecord> records{
        simple_record("a", 1, 2, 1),
        simple_record("b", 0, 3, 1),
        simple_record("c", 1, 2),
    };
    BatchSummary summary = summarize(records);
    CHECK(summary.n == 3);
    CHECK(summary.em_mean == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(summary.avg_retrievals == doctest::Approx(7.0 / 3.0).epsilon(1e-12));
    REQUIRE(summary.llm_match_mean.has_value());
    CHECK(summary.llm_match_n == 2);
    CHECK(*summary.llm_match_mean == doctest::Approx(1.0));
    CHECK_FALSE(summary.reasoning_score_mean.has_value());

    REQUIRE(summary.em_by_search_count.size() == 2);
    CHECK(summary.em_by_search_count[0].retrieval_count == 2);
    CHECK(summary.em_by_search_count[0].n == 2);
    CHECK(summary.em_by_search_count[0].em_mean == doctest::Approx(1.0));
    CHECK(summary.em_by_search_count[0].ci_half_width == doctest::Approx(0.0));
    CHECK(summary.em_by_search_count[1].retrieval_count == 3);
    CHECK(summary.em_by_search_count[1].n == 1);

    // Turn 0 saw 3 new docs in all three records; turn 1 saw 2 in two of
    // them; turn 2 saw 3 in one.
    CHECK(summary.heatmap.at(0).at(3) == 3);
    CHECK(summary.heatmap.at(1).at(2) == 3);
    CHECK(summary.heatmap.at(2).at(3) == 1);
}

TEST_CASE("summarize pins the closed-form ci half width") {
    std::vector<EvalRecord> records;
    for (int i = 0; i < 100; ++i) records.push_back(simple_record("r" + std::to_string(i),
                                                                  i < 50 ? 1 : 0, 1));
    BatchSummary summary = summarize(records);
    REQUIRE(summary.em_by_search_count.size() == 1);
    double expected = 1.96 * std::sqrt(0.5 * 0.5 / 100.0);
    CHECK(summary.em_by_search_count[0].ci_half_width ==
          doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::abs(summary.em_by_search_count[0].ci_half_width - 0.098) < 1e-5);
}

TEST_CASE("summarize pins the average retrieval count") {
    std::vector<EvalRecord> records{
        simple_record("a", 0, 2),
        simple_record("b", 0, 3),
        simple_record("c", 0, 2),
    };
    BatchSummary summary = summarize(records);
    CHECK(std::abs(summary.avg_retrievals - 2.3333333) < 1e-7);
}

TEST_CASE("summarize is permutation invariant bit for bit") {
    std::vector<EvalRecord> records;
    std::mt19937_64 gen(5);
    for (int i = 0; i < 40; ++i) {
        records.push_back(simple_record("r" + std::to_string(i), static_cast<int>(gen() % 2),
                                        1 + static_cast<int>(gen() % 4),
                                        gen() % 3 == 0 ? std::optional<int>(1) : std::nullopt));
    }
    BatchSummary base = summarize(records);
    nlohmann::json base_json = summary_to_json(base);
    for (int round = 0; round < 100; ++round) {
        std::shuffle(records.begin(), records.end(), gen);
        CHECK(summary_to_json(summarize(records)) == base_json);
    }
}

TEST_CASE("summarize rejects an empty batch") {
    CHECK_THROWS_AS(summarize(std::vector<EvalRecord>{}), EmptyBatch);
}

TEST_CASE("record json round trip") {
    EvalRecord record = simple_record("id", 1, 2, 0);
    record.llm_match_justification = "because";
    record.reasoning_scores = std::vector<int>{3, 4};
    EvalRecord back = record_from_json(record_to_json(record));
    CHECK(record_to_json(back) == record_to_json(record));

    EvalRecord sparse;
    sparse.episode_id = "sparse";
    sparse.em = 0;
    EvalRecord sparse_back = record_from_json(record_to_json(sparse));
    CHECK_FALSE(sparse_back.predicted.has_value());
    CHECK_FALSE(sparse_back.llm_match.has_value());
    CHECK_FALSE(sparse_back.reasoning_scores.has_value());
}

TEST_CASE("tsv reports are tab separated with headers") {
    std::vector<EvalRecord> records{simple_record("a", 1, 2), simple_record("b", 0, 1)};
    BatchSummary summary = summarize(records);

    std::string table = search_count_table_tsv(summary);
    CHECK(table.find("retrieval_count\tn\tem_mean\tci_half_width\n") == 0);
    CHECK(std::count(table.begin(), table.end(), '\n') == 3);

    std::string heatmap = heatmap_table_tsv(summary);
    CHECK(heatmap.find("turn\tnew_documents\tcount\n") == 0);
}
