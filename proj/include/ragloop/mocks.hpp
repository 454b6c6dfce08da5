#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ragloop/backend.hpp"
#include "ragloop/orchestrator.hpp"
#include "ragloop/retriever.hpp"
#include "ragloop/runner.hpp"

namespace ragloop::mocks {

// ---------------------------------------------------------------------------
// Offline backends. Everything here is deterministic and episode-local so a
// full pipeline run needs no network and no randomness.
// ---------------------------------------------------------------------------

/// Extractor double honoring the append-only contract: replies with the
/// previous cache verbatim plus one "Fact from {title}." sentence per
/// document title not already covered. With nothing to add and no previous
/// cache it replies with the no-information sentinel.
class FaithfulExtractor : public LlmClient {
public:
    GenerationResult generate(const GenerationRequest& request) override;
};

/// Adversarial counterpart: replies with only the current documents' fact
/// sentences, discarding the previous cache on purpose. Exercises the
/// monotonicity validator and the reject policy.
class DroppingExtractor : public LlmClient {
public:
    GenerationResult generate(const GenerationRequest& request) override;
};

/// Judge double for answer matching: "Score: 1" iff the predicted answer
/// equals some gold under normalization or the (predicted, gold) pair is in
/// the synonym table (checked both ways, normalized). Reasoning-quality
/// prompts get a fixed "Score: 3".
class RuleJudge : public LlmClient {
public:
    explicit RuleJudge(std::vector<std::pair<std::string, std::string>> synonyms = {});

    GenerationResult generate(const GenerationRequest& request) override;

private:
    std::vector<std::pair<std::string, std::string>> synonyms_;  // normalized
};

// ---------------------------------------------------------------------------
// Scripted end-to-end scenarios
// ---------------------------------------------------------------------------

struct ExpectedEpisode {
    int retrieval_count = 0;
    Termination termination = Termination::Answered;
    std::optional<std::string> answer;
};

/// A self-contained scripted scenario: corpus, questions, per-mode scripted
/// reasoner (and optionally extractor) policies, and the episode skeleton
/// each mode must reproduce. Scenarios without extractor policies use the
/// FaithfulExtractor for context/hybrid runs.
struct FixtureScenario {
    std::string name;
    Corpus corpus;
    std::vector<DatasetRecord> dataset;
    EpisodeConfig base_config;
    std::map<PipelineMode, std::map<std::string, ScriptedPolicy>> reasoner_policies;
    std::map<PipelineMode, std::map<std::string, ScriptedPolicy>> extractor_policies;
    std::vector<std::pair<std::string, std::string>> judge_synonyms;
    std::map<PipelineMode, std::map<std::string, ExpectedEpisode>> expected;

    std::vector<PipelineMode> modes() const;
};

const std::vector<std::string>& scenario_names();

/// Builds and validates a scenario by name. Validation cross-checks the
/// expectations against the policies (step counts, search/answer tags,
/// answer text) so a fixture cannot drift silently. Throws ConfigError.
FixtureScenario fixture_scenario(const std::string& name);

/// Runs one scenario question in one mode with fresh scripted clients and an
/// in-memory index over the scenario corpus.
Episode run_fixture_episode(const FixtureScenario& scenario, PipelineMode mode,
                            const std::string& qid, std::string_view dataset_id = "");

}  // namespace ragloop::mocks
