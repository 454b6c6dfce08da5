#include "ragloop/mocks.hpp"

#include <algorithm>
#include <memory>
#include <sstream>

#include "ragloop/context.hpp"
#include "ragloop/eval.hpp"
#include "ragloop/trace.hpp"

namespace ragloop::mocks {

namespace {

std::string slice_between(const std::string& text, std::string_view after,
                          std::string_view before) {
    std::size_t begin = text.find(after);
    if (begin == std::string::npos) return {};
    begin += after.size();
    std::size_t end = before.empty() ? text.size() : text.find(before, begin);
    if (end == std::string::npos) end = text.size();
    return trace::trim(text.substr(begin, end - begin));
}

struct ExtractorInputs {
    std::vector<std::string> titles;  // in document order, duplicates removed
    std::string previous;             // empty when sentinel or absent
};

ExtractorInputs parse_extractor_prompt(const std::string& prompt) {
    ExtractorInputs inputs;
    std::string block =
        slice_between(prompt, "- Retrieved Information: ", "\n- Previous Information: ");
    for (const auto& [title, body] : trace::split_information_block(block)) {
        (void)body;
        if (std::find(inputs.titles.begin(), inputs.titles.end(), title) == inputs.titles.end())
            inputs.titles.push_back(title);
    }
    inputs.previous =
        slice_between(prompt, "\n- Previous Information: ", "\n\nNow you should analyze");
    if (is_no_information_sentinel(inputs.previous)) inputs.previous.clear();
    return inputs;
}

std::string fact_sentence(const std::string& title) { return "Fact from " + title + "."; }

GenerationResult reply(const GenerationRequest& request, std::string text) {
    GenerationResult result;
    result.usage.prompt_tokens = static_cast<long>(request.prompt.size());
    result.usage.completion_tokens = static_cast<long>(text.size());
    result.text = std::move(text);
    result.stop_reason = StopReason::EndOfSequence;
    return result;
}

std::string wrap_information(const std::string& content) {
    std::string payload = content.empty() ? std::string(kNoHelpfulInformation) : content;
    return trace::open_tag(trace::TagKind::Information) + " " + payload + " " +
           trace::close_tag(trace::TagKind::Information);
}

}  // namespace

GenerationResult FaithfulExtractor::generate(const GenerationRequest& request) {
    ExtractorInputs inputs = parse_extractor_prompt(request.prompt);
    std::string content = inputs.previous;
    for (const std::string& title : inputs.titles) {
        std::string sentence = fact_sentence(title);
        if (content.find(sentence) != std::string::npos) continue;
        if (!content.empty()) content += ' ';
        content += sentence;
    }
    return reply(request, wrap_information(content));
}

GenerationResult DroppingExtractor::generate(const GenerationRequest& request) {
    ExtractorInputs inputs = parse_extractor_prompt(request.prompt);
    std::string content;
    for (const std::string& title : inputs.titles) {
        if (!content.empty()) content += ' ';
        content += fact_sentence(title);
    }
    return reply(request, wrap_information(content));
}

RuleJudge::RuleJudge(std::vector<std::pair<std::string, std::string>> synonyms) {
    synonyms_.reserve(synonyms.size());
    for (const auto& [left, right] : synonyms)
        synonyms_.emplace_back(normalize_answer(left), normalize_answer(right));
}

GenerationResult RuleJudge::generate(const GenerationRequest& request) {
    if (request.prompt.find("Predicted Answer: ") == std::string::npos)
        return reply(request, "Score: 3\nJustification: Fixed rating, this judge only matches answers.");

    std::string predicted =
        slice_between(request.prompt, "Predicted Answer: ", "\nGround Truth Answers: ");
    std::string golds_text = slice_between(request.prompt, "\nGround Truth Answers: ", "");
    std::vector<std::string> golds;
    nlohmann::json parsed = nlohmann::json::parse(golds_text, nullptr, false);
    if (parsed.is_array()) {
        for (const auto& g : parsed) golds.push_back(g.get<std::string>());
    } else {
        golds.push_back(golds_text);
    }

    std::string norm = normalize_answer(predicted);
    bool match = false;
    std::string why = "the predicted answer does not match any ground truth answer.";
    for (const std::string& gold : golds) {
        if (norm == normalize_answer(gold)) {
            match = true;
            why = "the predicted answer equals a ground truth answer after normalization.";
            break;
        }
    }
    if (!match) {
        for (const std::string& gold : golds) {
            std::string gold_norm = normalize_answer(gold);
            for (const auto& [left, right] : synonyms_) {
                if ((norm == left && gold_norm == right) ||
                    (norm == right && gold_norm == left)) {
                    match = true;
                    why = "the pair is a listed synonym.";
                    break;
                }
            }
            if (match) break;
        }
    }
    std::ostringstream out;
    out << "Score: " << (match ? 1 : 0) << "\nJustification: " << (match ? "Match: " : "No match: ")
        << why;
    return reply(request, out.str());
}

// ---------------------------------------------------------------------------
// Scenario corpora
// ---------------------------------------------------------------------------

namespace {

Document doc(std::string id, std::string title, std::string body) {
    Document d;
    d.doc_id = std::move(id);
    d.title = std::move(title);
    d.body = std::move(body);
    return d;
}

/// Passages around the San Francisco Board of Supervisors question. Shared
/// vocabulary makes consecutive queries re-retrieve the same passages, which
/// is exactly the duplication the filtering modes are meant to remove.
Corpus supervisors_corpus() {
    Corpus corpus;
    corpus.source_uri = "fixture:supervisors";
    corpus.documents = {
        doc("sheehy1", "Jeff Sheehy",
            "Jeff Sheehy is a former member of the San Francisco Board of Supervisors "
            "representing Supervisorial District 8. He was appointed to the Board in January "
            "2017 by then-mayor Ed Lee to succeed Supervisor Scott Wiener."),
        doc("sheehy2", "Jeff Sheehy",
            "Following Scott Wiener's departure from the San Francisco Board of Supervisors "
            "due to his election to the California State Senate in 2016, Sheehy was appointed "
            "to fill out the remainder of his term by San Francisco Mayor Ed Lee."),
        doc("edlee1", "Ed Lee (politician)",
            "The Board of Supervisors nominated four people, former Mayor Art Agnos, Sheriff "
            "Michael Hennessey, former Board of Supervisors President Aaron Peskin, and Lee. "
            "At the January 7 meeting, the old board voted 10 to 1 to elect Lee as mayor, with "
            "outgoing Supervisor Chris Daly casting the lone no vote."),
        doc("edlee2", "Ed Lee (politician)",
            "Ed Lee took office as San Francisco city administrator in 2005 and was appointed "
            "on January 11, 2011 by the Board of Supervisors to serve out the remaining term "
            "of former Mayor Gavin Newsom."),
        doc("edlee3", "Ed Lee (politician)",
            "Lee said he would not run for a full term if appointed, a statement that helped "
            "him gain support for his appointment as mayor."),
        doc("edlee4", "Ed Lee (politician)",
            "In 1991 Lee was hired as Executive Director of the San Francisco Human Rights "
            "Commission. In 2010 a vacancy in the office of mayor was impending when incumbent "
            "Gavin Newsom was elected Lieutenant Governor of California."),
        doc("elec2018", "2018 San Francisco Board of Supervisors election",
            "Incumbent Supervisor Jeff Sheehy was eligible to run for reelection in the June "
            "5, 2018 special election but was defeated by Rafael Mandelman."),
        doc("kern", "Kern County Board of Supervisors",
            "Members of the Kern County Board of Supervisors have included George W. Parish "
            "from 1935 to 1938, C. W. Harty from 1939 to 1950, and John W. Holt."),
    };
    return corpus;
}

/// Three topic islands with fully disjoint vocabularies (no function words
/// anywhere), so distinct queries can never re-retrieve each other's
/// passages.
Corpus islands_corpus() {
    Corpus corpus;
    corpus.source_uri = "fixture:islands";
    corpus.documents = {
        doc("a1", "Falconry", "crimson falcon mesa dawn hunter"),
        doc("a2", "Mesa", "crimson falcon mesa ridge autumn"),
        doc("a3", "Raptor", "falcon mesa crimson talon"),
        doc("b1", "Glacier", "azure glacier fjord winter melt"),
        doc("b2", "Fjord", "azure glacier fjord iceberg"),
        doc("b3", "Iceberg", "glacier fjord azure calving"),
        doc("c1", "Orchid", "violet orchid greenhouse bloom"),
        doc("c2", "Greenhouse", "violet orchid greenhouse humidity"),
        doc("c3", "Botany", "orchid greenhouse violet pollen"),
    };
    return corpus;
}

// ---------------------------------------------------------------------------
// Scenario scripts
// ---------------------------------------------------------------------------

const std::string kSupervisorsQuestion =
    "Who was appointed to the board of supervisors first, Jeff Sheehy or Ed Lee?";

const std::string kQueryWho =
    "who was appointed to the board of supervisors first, Jeff Sheehy or Ed Lee";
const std::string kQueryWhenLee = "when was Ed Lee appointed to the board of supervisors";
const std::string kQueryWhenSheehy = "when was Jeff Sheehy appointed to the board of supervisors";
const std::string kQueryCompare =
    "compare the appointments of Jeff Sheehy and Ed Lee to the board of supervisors";

std::string think_search(const std::string& think, const std::string& query) {
    return "<think> " + think + " </think>\n<search> " + query + " </search>";
}

std::string think_answer(const std::string& think, const std::string& answer) {
    return "<think> " + think + " </think>\n<answer> " + answer + " </answer>";
}

/// The sample episode that searches four times, repeating one query, before
/// answering.
ScriptedPolicy baseline_supervisors_policy() {
    return ScriptedPolicy{{
        {"Question: " + kSupervisorsQuestion,
         think_search("I need to determine if Jeff Sheehy or Ed Lee was appointed to the board "
                      "of supervisors first. I'll search for it.",
                      kQueryWho)},
        {"I'll search for it.",
         think_search("I found out that Jeff Sheehy was appointed to the San Francisco Board "
                      "of Supervisors. Now I need to find out if Ed Lee was appointed before "
                      "or after Jeff Sheehy.",
                      kQueryWhenLee)},
        {"if Ed Lee was appointed before or after Jeff Sheehy",
         think_search("I found out that Ed Lee was appointed as the Mayor of San Francisco. "
                      "Now I need to find out if he was appointed to the board of supervisors "
                      "before Jeff Sheehy.",
                      kQueryWhenSheehy)},
        {"before Jeff Sheehy.",
         think_search("I found out that Jeff Sheehy was appointed to the San Francisco Board "
                      "of Supervisors in January 2017. Now I need to find out if Ed Lee was "
                      "appointed before or after Jeff Sheehy.",
                      kQueryWhenLee)},
        {"in January 2017.",
         think_answer("I found out that Ed Lee was appointed as the Mayor of San Francisco on "
                      "January 11, 2011. Now I can compare the appointments of Ed Lee and Jeff "
                      "Sheehy to the board of supervisors.",
                      "Ed Lee")},
    }};
}

/// The sample episode with de-duplicated retrieval: three distinct searches,
/// then the answer.
ScriptedPolicy dedup_supervisors_policy() {
    return ScriptedPolicy{{
        {"Question: " + kSupervisorsQuestion,
         think_search("I need to determine if Jeff Sheehy or Ed Lee was appointed to the board "
                      "of supervisors first. I'll search for it.",
                      kQueryWho)},
        {"I'll search for it.",
         think_search("I found out that Jeff Sheehy was appointed to the San Francisco Board "
                      "of Supervisors in January 2017 by then-mayor Ed Lee. Now I need to "
                      "determine if Ed Lee was appointed to the board of supervisors first or "
                      "not.",
                      kQueryWhenLee)},
        {"first or not.",
         think_search("I found out that Ed Lee was appointed to the board of supervisors in "
                      "January 11, 2011. Now I can compare the appointments of Jeff Sheehy and "
                      "Ed Lee to the board of supervisors.",
                      kQueryCompare)},
        {"Now I can compare the appointments of Jeff Sheehy and Ed Lee",
         think_answer("I found out that Ed Lee was appointed to the board of supervisors in "
                      "January 11, 2011. Jeff Sheehy was appointed to the San Francisco Board "
                      "of Supervisors in January 2017 by then-mayor Ed Lee. Now I can provide "
                      "the answer.",
                      "Ed Lee")},
    }};
}

const std::string kCacheRevision1 =
    "Jeff Sheehy was appointed to the San Francisco Board of Supervisors in January 2017 by "
    "then-mayor Ed Lee. Ed Lee was elected as mayor by the Board of Supervisors on January 7, "
    "2011, after a vote of 10 to 1. There is no direct information about Ed Lee's appointment "
    "date to the Board of Supervisors, but he was elected mayor in early 2011. Therefore, Ed "
    "Lee's involvement with the Board of Supervisors predates Jeff Sheehy's appointment in "
    "2017.";

const std::string kCacheRevision2 =
    "Jeff Sheehy was appointed to the San Francisco Board of Supervisors in January 2017 by "
    "then-mayor Ed Lee. Ed Lee was appointed by the Board of Supervisors on January 11, 2011, "
    "to serve out the remaining term of former Mayor Gavin Newsom after Newsom resigned. Ed "
    "Lee was elected mayor by the Board of Supervisors on January 7, 2011. Therefore, Ed Lee "
    "was appointed to the Board of Supervisors first, in 2011, well before Jeff Sheehy's "
    "appointment in 2017.";

/// The sample episode with the information extractor: the distilled cache
/// lets the model answer after two searches.
ScriptedPolicy context_supervisors_policy() {
    return ScriptedPolicy{{
        {"Question: " + kSupervisorsQuestion,
         think_search("I need to determine if Jeff Sheehy or Ed Lee was appointed to the board "
                      "of supervisors first. I'll search for it.",
                      kQueryWho)},
        {"Ed Lee's involvement with the Board of Supervisors predates Jeff Sheehy's "
         "appointment in 2017.",
         think_search("I found out that Jeff Sheehy was appointed to the San Francisco Board "
                      "of Supervisors in January 2017 by then-mayor Ed Lee. Now I need to "
                      "determine which one was appointed first, Jeff Sheehy or Ed Lee.",
                      kQueryWhenLee)},
        {"well before Jeff Sheehy's appointment in 2017.",
         think_answer("I found out that Ed Lee was appointed to the Board of Supervisors "
                      "first, in 2011, before Jeff Sheehy's appointment in 2017.",
                      "Ed Lee")},
    }};
}

ScriptedPolicy context_supervisors_extractor_policy() {
    return ScriptedPolicy{{
        {"- Previous Information: No helpful information found",
         "<information> " + kCacheRevision1 + " </information>"},
        {"- Previous Information: Jeff Sheehy was appointed to the San Francisco Board of "
         "Supervisors in January 2017 by then-mayor Ed Lee. Ed Lee was elected as mayor",
         "<information> " + kCacheRevision2 + " </information>"},
    }};
}

EpisodeConfig supervisors_config() {
    EpisodeConfig config;
    config.k = 3;
    config.pool_size = 25;
    config.max_turns = 6;
    config.reasoner_model = "scripted-replay";
    config.extractor_model = "gpt-4.1-mini";
    config.cache_policy = CachePolicy::Warn;
    config.seed = 7;
    return config;
}

DatasetRecord supervisors_record() {
    return DatasetRecord{"sheehy_edlee", kSupervisorsQuestion, {"Ed Lee"}};
}

FixtureScenario appendix_baseline_scenario() {
    FixtureScenario s;
    s.name = "appendix_baseline";
    s.corpus = supervisors_corpus();
    s.dataset = {supervisors_record()};
    s.base_config = supervisors_config();
    s.reasoner_policies[PipelineMode::Baseline]["sheehy_edlee"] = baseline_supervisors_policy();
    s.expected[PipelineMode::Baseline]["sheehy_edlee"] =
        ExpectedEpisode{4, Termination::Answered, "Ed Lee"};
    return s;
}

FixtureScenario appendix_extractor_scenario() {
    FixtureScenario s;
    s.name = "appendix_extractor";
    s.corpus = supervisors_corpus();
    s.dataset = {supervisors_record()};
    s.base_config = supervisors_config();
    s.reasoner_policies[PipelineMode::Context]["sheehy_edlee"] = context_supervisors_policy();
    s.extractor_policies[PipelineMode::Context]["sheehy_edlee"] =
        context_supervisors_extractor_policy();
    s.expected[PipelineMode::Context]["sheehy_edlee"] =
        ExpectedEpisode{2, Termination::Answered, "Ed Lee"};
    return s;
}

FixtureScenario duplicate_heavy_scenario() {
    FixtureScenario s;
    s.name = "duplicate_heavy";
    s.corpus = supervisors_corpus();
    s.dataset = {supervisors_record()};
    s.base_config = supervisors_config();
    s.reasoner_policies[PipelineMode::Baseline]["sheehy_edlee"] = baseline_supervisors_policy();
    s.reasoner_policies[PipelineMode::Dedup]["sheehy_edlee"] = dedup_supervisors_policy();
    s.reasoner_policies[PipelineMode::Context]["sheehy_edlee"] = context_supervisors_policy();
    s.reasoner_policies[PipelineMode::Hybrid]["sheehy_edlee"] = context_supervisors_policy();
    s.extractor_policies[PipelineMode::Context]["sheehy_edlee"] =
        context_supervisors_extractor_policy();
    s.extractor_policies[PipelineMode::Hybrid]["sheehy_edlee"] =
        context_supervisors_extractor_policy();
    s.expected[PipelineMode::Baseline]["sheehy_edlee"] =
        ExpectedEpisode{4, Termination::Answered, "Ed Lee"};
    s.expected[PipelineMode::Dedup]["sheehy_edlee"] =
        ExpectedEpisode{3, Termination::Answered, "Ed Lee"};
    s.expected[PipelineMode::Context]["sheehy_edlee"] =
        ExpectedEpisode{2, Termination::Answered, "Ed Lee"};
    s.expected[PipelineMode::Hybrid]["sheehy_edlee"] =
        ExpectedEpisode{2, Termination::Answered, "Ed Lee"};
    return s;
}

const std::string kIslandsQuestion =
    "What links the crimson falcon, the azure glacier, and the violet orchid?";
const std::string kQueryFalcon = "crimson falcon mesa";
const std::string kQueryGlacier = "azure glacier fjord";
const std::string kQueryOrchid = "violet orchid greenhouse";

ScriptedPolicy islands_policy() {
    return ScriptedPolicy{{
        {"Question: " + kIslandsQuestion,
         think_search("I will look up the falcon first.", kQueryFalcon)},
        {"falcon mesa", think_search("Now the glacier.", kQueryGlacier)},
        {"glacier fjord", think_search("Now the orchid.", kQueryOrchid)},
        {"orchid greenhouse", think_answer("Three unrelated topics.", "nothing")},
    }};
}

FixtureScenario disjoint_scenario() {
    FixtureScenario s;
    s.name = "disjoint";
    s.corpus = islands_corpus();
    s.dataset = {DatasetRecord{"islands", kIslandsQuestion, {"nothing"}}};
    s.base_config = supervisors_config();
    s.reasoner_policies[PipelineMode::Baseline]["islands"] = islands_policy();
    s.reasoner_policies[PipelineMode::Dedup]["islands"] = islands_policy();
    s.expected[PipelineMode::Baseline]["islands"] =
        ExpectedEpisode{3, Termination::Answered, "nothing"};
    s.expected[PipelineMode::Dedup]["islands"] =
        ExpectedEpisode{3, Termination::Answered, "nothing"};
    return s;
}

/// Ten single-fact questions over the islands corpus with varied search
/// counts, duplicate searches, and a couple of synonym-only answers, so a
/// batch exercises resume, summary, and heatmap paths.
FixtureScenario batch_mixed_scenario() {
    FixtureScenario s;
    s.name = "batch_mixed";
    s.corpus = islands_corpus();
    s.base_config = supervisors_config();
    s.judge_synonyms = {{"2", "Two"}, {"950 Pesos", "P950"}};

    struct Spec {
        std::string qid;
        std::vector<std::string> queries;
        std::string answer;
        std::string gold;
    };
    const std::vector<Spec> specs = {
        {"q01", {kQueryFalcon}, "alpha", "alpha"},
        {"q02", {kQueryFalcon, kQueryFalcon}, "beta", "beta"},
        {"q03", {kQueryFalcon, kQueryGlacier, kQueryOrchid}, "gamma", "different"},
        {"q04", {kQueryGlacier, kQueryGlacier}, "delta", "delta"},
        {"q05", {kQueryOrchid}, "epsilon", "zeta"},
        {"q06", {kQueryFalcon, kQueryGlacier, kQueryOrchid}, "eta", "eta"},
        {"q07", {kQueryGlacier, kQueryOrchid}, "theta", "theta"},
        {"q08", {kQueryOrchid, kQueryFalcon}, "2", "Two"},
        {"q09", {kQueryGlacier}, "950 Pesos", "P950"},
        {"q10", {kQueryFalcon, kQueryOrchid, kQueryGlacier}, "iota", "iota"},
    };
    for (const Spec& spec : specs) {
        std::string question = "Fixture question " + spec.qid + " about the islands corpus?";
        s.dataset.push_back(DatasetRecord{spec.qid, question, {spec.gold}});
        ScriptedPolicy policy;
        for (std::size_t i = 0; i < spec.queries.size(); ++i) {
            std::string expect = i == 0 ? "Question: " + question : "step " + std::to_string(i);
            policy.steps.push_back(
                {expect, think_search("Search step " + std::to_string(i + 1) + ".",
                                      spec.queries[i])});
        }
        policy.steps.push_back(
            {"step " + std::to_string(spec.queries.size()),
             think_answer("Answer step.", spec.answer)});
        for (PipelineMode mode : {PipelineMode::Baseline, PipelineMode::Dedup}) {
            s.reasoner_policies[mode][spec.qid] = policy;
            s.expected[mode][spec.qid] = ExpectedEpisode{
                static_cast<int>(spec.queries.size()), Termination::Answered, spec.answer};
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// Registry and validation
// ---------------------------------------------------------------------------

void validate_scenario(const FixtureScenario& s) {
    auto fail = [&s](const std::string& what) {
        throw ConfigError("fixture " + s.name + ": " + what);
    };
    if (s.corpus.documents.empty()) fail("empty corpus");
    if (s.dataset.empty()) fail("empty dataset");
    for (const DatasetRecord& record : s.dataset) {
        if (record.question.empty()) fail("record " + record.qid + " has an empty question");
        if (record.golden_answers.empty()) fail("record " + record.qid + " has no gold answers");
    }
    for (const auto& [mode, by_qid] : s.expected) {
        for (const auto& [qid, expect] : by_qid) {
            bool known = std::any_of(s.dataset.begin(), s.dataset.end(),
                                     [&qid](const DatasetRecord& r) { return r.qid == qid; });
            if (!known) fail("expectation for unknown question " + qid);
            auto mode_it = s.reasoner_policies.find(mode);
            if (mode_it == s.reasoner_policies.end() || !mode_it->second.count(qid))
                fail("no reasoner policy for " + std::string(mode_name(mode)) + "/" + qid);
            const ScriptedPolicy& policy = mode_it->second.at(qid);
            if (expect.termination == Termination::Answered) {
                if (policy.steps.size() != static_cast<std::size_t>(expect.retrieval_count) + 1)
                    fail("policy for " + std::string(mode_name(mode)) + "/" + qid + " has " +
                         std::to_string(policy.steps.size()) + " steps, expected " +
                         std::to_string(expect.retrieval_count + 1));
                const std::string& last = policy.steps.back().response;
                if (last.find("<answer>") == std::string::npos)
                    fail("final step for " + qid + " does not answer");
                if (expect.answer && last.find(*expect.answer) == std::string::npos)
                    fail("final step for " + qid + " does not contain the expected answer");
                for (std::size_t i = 0; i + 1 < policy.steps.size(); ++i)
                    if (policy.steps[i].response.find("<search>") == std::string::npos)
                        fail("step " + std::to_string(i) + " for " + qid + " does not search");
            }
            auto ext_mode = s.extractor_policies.find(mode);
            if (ext_mode != s.extractor_policies.end() && ext_mode->second.count(qid)) {
                const ScriptedPolicy& extractor = ext_mode->second.at(qid);
                if (extractor.steps.size() != static_cast<std::size_t>(expect.retrieval_count))
                    fail("extractor policy for " + qid + " has " +
                         std::to_string(extractor.steps.size()) + " steps, expected " +
                         std::to_string(expect.retrieval_count));
            }
        }
    }
}

}  // namespace

std::vector<PipelineMode> FixtureScenario::modes() const {
    std::vector<PipelineMode> out;
    for (const auto& [mode, by_qid] : expected) {
        (void)by_qid;
        out.push_back(mode);
    }
    return out;
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {
        "appendix_baseline", "appendix_extractor", "duplicate_heavy", "disjoint", "batch_mixed",
    };
    return names;
}

FixtureScenario fixture_scenario(const std::string& name) {
    FixtureScenario s;
    if (name == "appendix_baseline") {
        s = appendix_baseline_scenario();
    } else if (name == "appendix_extractor") {
        s = appendix_extractor_scenario();
    } else if (name == "duplicate_heavy") {
        s = duplicate_heavy_scenario();
    } else if (name == "disjoint") {
        s = disjoint_scenario();
    } else if (name == "batch_mixed") {
        s = batch_mixed_scenario();
    } else {
        throw ConfigError("unknown fixture scenario: " + name);
    }
    validate_scenario(s);
    return s;
}

Episode run_fixture_episode(const FixtureScenario& scenario, PipelineMode mode,
                            const std::string& qid, std::string_view dataset_id) {
    auto record_it = std::find_if(scenario.dataset.begin(), scenario.dataset.end(),
                                  [&qid](const DatasetRecord& r) { return r.qid == qid; });
    if (record_it == scenario.dataset.end())
        throw ConfigError("fixture " + scenario.name + " has no question " + qid);
    auto mode_it = scenario.reasoner_policies.find(mode);
    if (mode_it == scenario.reasoner_policies.end() || !mode_it->second.count(qid))
        throw ConfigError("fixture " + scenario.name + " has no " +
                          std::string(mode_name(mode)) + " policy for " + qid);

    EpisodeConfig config = scenario.base_config;
    config.mode = mode;

    ScriptedLlmClient reasoner(mode_it->second.at(qid));
    InMemoryRetriever retriever(scenario.corpus);
    trace::TemplateSet templates = trace::TemplateSet::defaults();

    std::unique_ptr<LlmClient> extractor_client;
    std::optional<Contextualizer> extractor;
    if (mode == PipelineMode::Context || mode == PipelineMode::Hybrid) {
        auto ext_mode = scenario.extractor_policies.find(mode);
        if (ext_mode != scenario.extractor_policies.end() && ext_mode->second.count(qid)) {
            extractor_client = std::make_unique<ScriptedLlmClient>(ext_mode->second.at(qid));
        } else {
            extractor_client = std::make_unique<FaithfulExtractor>();
        }
        ContextualizerOptions options;
        options.model_id = config.extractor_model;
        extractor.emplace(*extractor_client, templates, options);
    }

    EpisodeRuntime runtime{reasoner, retriever, extractor ? &*extractor : nullptr, templates};
    return run_episode(runtime, config, record_it->qid, record_it->question,
                       record_it->golden_answers, dataset_id);
}

}  // namespace ragloop::mocks
