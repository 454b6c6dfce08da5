#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ragloop/eval.hpp"
#include "ragloop/mocks.hpp"
#include "ragloop/orchestrator.hpp"
#include "ragloop/retriever.hpp"
#include "ragloop/runner.hpp"

namespace {

using namespace ragloop;

std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? value : "";
}

std::string corpus_digest_of(const Corpus& corpus) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (const Document& doc : corpus.documents) {
        h = fnv1a64(doc.doc_id, h);
        h = fnv1a64(doc.title, h);
        h = fnv1a64(doc.body, h);
    }
    return to_hex(h);
}

struct RunArgs {
    std::string mode = "baseline";
    std::string dataset;
    std::string corpus;
    std::string retriever_url;
    std::string backend_url;
    std::string model;
    std::string extractor_model = "gpt-4.1-mini";
    std::string judge_model;
    std::string mock;
    std::string out = "run_out";
    std::string templates_dir;
    std::string cache_policy = "warn";
    int k = 3;
    int pool_size = 25;
    int max_turns = 4;
    int max_new_tokens = 4096;
    int concurrency = 4;
    long seed = 0;
    std::optional<std::size_t> n_sample;
    std::uint64_t sample_seed = 0;
    std::optional<std::size_t> limit;
    bool reasoning = false;
    bool judge_skip_on_em = false;
};

int do_run(const RunArgs& args) {
    EpisodeConfig config;
    config.mode = mode_from_name(args.mode);
    config.k = args.k;
    config.pool_size = args.pool_size;
    config.max_turns = args.max_turns;
    config.max_new_tokens = args.max_new_tokens;
    config.seed = args.seed;
    config.reasoner_model = args.model;
    config.extractor_model = args.extractor_model;
    if (args.cache_policy == "reject") {
        config.cache_policy = CachePolicy::Reject;
    } else if (args.cache_policy != "warn") {
        throw ConfigError("cache policy must be warn or reject");
    }
    config.validate();

    trace::TemplateSet templates = args.templates_dir.empty()
                                       ? trace::TemplateSet::defaults()
                                       : trace::TemplateSet::load_dir(args.templates_dir);

    RunManifest manifest;
    manifest.config = config;
    manifest.n_sample = args.n_sample;
    manifest.sample_seed = args.sample_seed;

    RunOptions options;
    options.out_dir = args.out;
    options.concurrency = args.concurrency;
    options.limit = args.limit;

    std::vector<DatasetRecord> records;
    EpisodeRunner run_one;

    // Kept alive for the duration of the batch.
    std::optional<mocks::FixtureScenario> scenario;
    std::unique_ptr<Retriever> retriever;
    std::shared_ptr<ConcurrencyLimiter> limiter;
    std::unique_ptr<HttpLlmClient> reasoner_client;
    std::unique_ptr<HttpLlmClient> extractor_client;
    std::unique_ptr<HttpLlmClient> judge_client;
    std::unique_ptr<mocks::RuleJudge> rule_judge;
    std::optional<Contextualizer> extractor;
    std::optional<JudgeCache> judge_cache;
    std::optional<Judge> judge;

    if (!args.mock.empty()) {
        scenario.emplace(mocks::fixture_scenario(args.mock));
        config.reasoner_model = "scripted";
        manifest.config = config;
        manifest.mock_scenario = scenario->name;
        manifest.dataset_path = "mock:" + scenario->name;
        manifest.dataset_digest = digest_fields({"mock", scenario->name});
        manifest.corpus_path = scenario->corpus.source_uri;
        manifest.corpus_digest = corpus_digest_of(scenario->corpus);
        records = scenario->dataset;

        PipelineMode mode = config.mode;
        std::string dataset_digest = manifest.dataset_digest;
        EpisodeConfig episode_config = config;
        run_one = [scenario = &*scenario, mode, dataset_digest,
                   episode_config](const DatasetRecord& record) {
            mocks::FixtureScenario run_copy = *scenario;
            run_copy.base_config = episode_config;
            run_copy.base_config.mode = mode;
            return mocks::run_fixture_episode(run_copy, mode, record.qid, dataset_digest);
        };

        rule_judge = std::make_unique<mocks::RuleJudge>(scenario->judge_synonyms);
        judge.emplace(*rule_judge, templates, JudgeOptions{"rule-judge", 512, 0.0});
        manifest.judge_model = "rule-judge";
    } else {
        if (args.dataset.empty()) throw ConfigError("run needs --dataset (or --mock)");
        if (args.model.empty()) throw ConfigError("run needs --model (or --mock)");
        if (args.backend_url.empty()) throw ConfigError("run needs --backend-url (or --mock)");
        records = load_dataset(args.dataset);
        manifest.dataset_path = args.dataset;
        manifest.dataset_digest = file_digest(args.dataset);
        manifest.backend_url = args.backend_url;

        if (!args.corpus.empty()) {
            Corpus corpus = ingest_corpus(args.corpus);
            manifest.corpus_path = args.corpus;
            manifest.corpus_digest = file_digest(args.corpus);
            retriever = std::make_unique<InMemoryRetriever>(std::move(corpus));
        } else if (!args.retriever_url.empty()) {
            RemoteRetrieverConfig rc;
            rc.base_url = args.retriever_url;
            manifest.retriever_url = args.retriever_url;
            retriever = std::make_unique<RemoteRetriever>(rc);
        } else {
            throw ConfigError("run needs --corpus or --retriever-url");
        }

        HttpBackendConfig bc;
        bc.base_url = args.backend_url;
        bc.api_key = env_or_empty("RAGLOOP_API_KEY");
        bc.max_concurrent = args.concurrency;
        limiter = std::make_shared<ConcurrencyLimiter>(bc.max_concurrent);
        reasoner_client = std::make_unique<HttpLlmClient>(bc, limiter);
        if (config.mode == PipelineMode::Context || config.mode == PipelineMode::Hybrid) {
            extractor_client = std::make_unique<HttpLlmClient>(bc, limiter);
            ContextualizerOptions co;
            co.model_id = config.extractor_model;
            extractor.emplace(*extractor_client, templates, co);
        }
        if (!args.judge_model.empty()) {
            HttpBackendConfig jc = bc;
            std::string judge_key = env_or_empty("RAGLOOP_JUDGE_API_KEY");
            if (!judge_key.empty()) jc.api_key = judge_key;
            judge_client = std::make_unique<HttpLlmClient>(jc, limiter);
            judge_cache.emplace(args.out + "/judge_cache.jsonl");
            judge.emplace(*judge_client, templates,
                          JudgeOptions{args.judge_model, 512, 0.0}, &*judge_cache);
            manifest.judge_model = args.judge_model;
        }

        std::string dataset_digest = manifest.dataset_digest;
        EpisodeConfig episode_config = config;
        Retriever* retriever_ptr = retriever.get();
        LlmClient* reasoner_ptr = reasoner_client.get();
        Contextualizer* extractor_ptr = extractor ? &*extractor : nullptr;
        const trace::TemplateSet* templates_ptr = &templates;
        run_one = [=](const DatasetRecord& record) {
            EpisodeRuntime runtime{*reasoner_ptr, *retriever_ptr, extractor_ptr, *templates_ptr};
            return run_episode(runtime, episode_config, record.qid, record.question,
                               record.golden_answers, dataset_digest);
        };
    }

    if (args.n_sample) records = sample_subset(records, *args.n_sample, args.sample_seed);
    if (judge) {
        options.score.judge = &*judge;
        options.score.reasoning = args.reasoning;
        options.score.skip_judge_on_em = args.judge_skip_on_em;
    }

    BatchResult result = run_batch(records, run_one, manifest, options);
    std::cout << "episodes: " << result.executed << " executed, " << result.skipped
              << " already logged, " << result.failures << " failed\n"
              << "log: " << result.episodes_path << "\n"
              << "summary: " << result.summary_path << "\n"
              << "em_mean: " << result.summary.em_mean
              << "  avg_retrievals: " << result.summary.avg_retrievals << "\n";
    if (!result.complete)
        std::cout << "batch incomplete (limit reached); rerun the same command to finish\n";
    return result.failures > 0 ? 1 : 0;
}

struct ScoreArgs {
    std::string out;
    std::string backend_url;
    std::string judge_model;
    std::string templates_dir;
    std::vector<std::string> synonyms;
    bool mock_judge = false;
    bool reasoning = false;
    bool judge_skip_on_em = false;
};

int do_score(const ScoreArgs& args) {
    trace::TemplateSet templates = args.templates_dir.empty()
                                       ? trace::TemplateSet::defaults()
                                       : trace::TemplateSet::load_dir(args.templates_dir);
    std::unique_ptr<HttpLlmClient> judge_client;
    std::unique_ptr<mocks::RuleJudge> rule_judge;
    std::optional<JudgeCache> judge_cache;
    std::optional<Judge> judge;
    if (args.mock_judge) {
        std::vector<std::pair<std::string, std::string>> pairs;
        for (const std::string& s : args.synonyms) {
            std::size_t eq = s.find('=');
            if (eq == std::string::npos)
                throw ConfigError("synonym must look like left=right: " + s);
            pairs.emplace_back(s.substr(0, eq), s.substr(eq + 1));
        }
        rule_judge = std::make_unique<mocks::RuleJudge>(std::move(pairs));
        judge.emplace(*rule_judge, templates, JudgeOptions{"rule-judge", 512, 0.0});
    } else if (!args.judge_model.empty()) {
        if (args.backend_url.empty()) throw ConfigError("score with a judge needs --backend-url");
        HttpBackendConfig jc;
        jc.base_url = args.backend_url;
        jc.api_key = env_or_empty("RAGLOOP_JUDGE_API_KEY");
        if (jc.api_key.empty()) jc.api_key = env_or_empty("RAGLOOP_API_KEY");
        judge_client = std::make_unique<HttpLlmClient>(jc);
        judge_cache.emplace(args.out + "/judge_cache.jsonl");
        judge.emplace(*judge_client, templates, JudgeOptions{args.judge_model, 512, 0.0},
                      &*judge_cache);
    }
    ScoreOptions options;
    if (judge) {
        options.judge = &*judge;
        options.reasoning = args.reasoning;
        options.skip_judge_on_em = args.judge_skip_on_em;
    }
    BatchSummary summary = rescore_run(args.out, options);
    std::cout << "scored " << summary.n << " episodes\n"
              << "em_mean: " << summary.em_mean;
    if (summary.llm_match_mean) std::cout << "  llm_match_mean: " << *summary.llm_match_mean;
    std::cout << "  avg_retrievals: " << summary.avg_retrievals << "\n";
    return 0;
}

int do_report(const std::string& out_dir) {
    std::ifstream in(out_dir + "/records.jsonl");
    if (!in) throw IoError("cannot open " + out_dir + "/records.jsonl (run score first)");
    std::vector<EvalRecord> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trace::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError("bad record line", line_no);
        records.push_back(record_from_json(j));
    }
    BatchSummary summary = summarize(records);
    std::string search_path = out_dir + "/em_by_search_count.tsv";
    std::string heatmap_path = out_dir + "/heatmap.tsv";
    std::ofstream(search_path) << search_count_table_tsv(summary);
    std::ofstream(heatmap_path) << heatmap_table_tsv(summary);
    std::cout << "wrote " << search_path << " and " << heatmap_path << "\n";
    return 0;
}

int do_ingest(const std::string& corpus_path, const std::string& out_path) {
    Corpus corpus = ingest_corpus(corpus_path);
    std::ofstream out(out_path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + out_path);
    for (const Document& doc : corpus.documents) {
        nlohmann::json j{{"id", doc.doc_id}, {"text", doc.body}, {"title", doc.title}};
        out << j.dump() << '\n';
    }
    std::cout << "ingested " << corpus.documents.size() << " documents to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-turn search agent batch runner"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Run a dataset through the loop");
    run->add_option("--mode", run_args.mode, "baseline|dedup|context|hybrid");
    run->add_option("--dataset", run_args.dataset, "JSONL question file");
    run->add_option("--corpus", run_args.corpus, "JSONL corpus for the in-memory index");
    run->add_option("--retriever-url", run_args.retriever_url, "remote retrieval service");
    run->add_option("--backend-url", run_args.backend_url,
                    "chat-completions endpoint (key via RAGLOOP_API_KEY)");
    run->add_option("--model", run_args.model, "reasoner model id");
    run->add_option("--extractor-model", run_args.extractor_model, "extractor model id");
    run->add_option("--judge-model", run_args.judge_model, "judge model id (enables LLM match)");
    run->add_option("--mock", run_args.mock, "run a built-in scripted scenario instead");
    run->add_option("--k", run_args.k, "documents injected per search");
    run->add_option("--pool-size", run_args.pool_size, "ranked pool fetched per search");
    run->add_option("--max-turns", run_args.max_turns, "executed-search cap");
    run->add_option("--max-new-tokens", run_args.max_new_tokens, "generation budget per turn");
    run->add_option("--n-sample", run_args.n_sample, "evaluate a random subset of this size");
    run->add_option("--sample-seed", run_args.sample_seed, "subset sampling seed");
    run->add_option("--seed", run_args.seed, "generation seed, part of episode identity");
    run->add_option("--out", run_args.out, "output directory");
    run->add_option("--concurrency", run_args.concurrency, "parallel episodes");
    run->add_option("--limit", run_args.limit, "stop after this many new episodes");
    run->add_option("--templates", run_args.templates_dir, "prompt template directory");
    run->add_option("--cache-policy", run_args.cache_policy, "warn|reject on dropped cache text");
    run->add_flag("--reasoning", run_args.reasoning, "also judge reasoning quality (1-5)");
    run->add_flag("--judge-skip-on-em", run_args.judge_skip_on_em,
                  "skip the judge when exact match already holds");

    ScoreArgs score_args;
    CLI::App* score = app.add_subcommand("score", "Re-score an existing run log");
    score->add_option("--out", score_args.out, "run directory")->required();
    score->add_option("--backend-url", score_args.backend_url, "judge endpoint");
    score->add_option("--judge-model", score_args.judge_model, "judge model id");
    score->add_option("--templates", score_args.templates_dir, "prompt template directory");
    score->add_flag("--mock-judge", score_args.mock_judge, "use the offline rule judge");
    score->add_option("--synonym", score_args.synonyms,
                      "rule-judge synonym pair left=right (repeatable)");
    score->add_flag("--reasoning", score_args.reasoning, "also judge reasoning quality (1-5)");
    score->add_flag("--judge-skip-on-em", score_args.judge_skip_on_em,
                    "skip the judge when exact match already holds");

    std::string report_out;
    CLI::App* report = app.add_subcommand("report", "Emit plot-ready TSV tables");
    report->add_option("--out", report_out, "run directory")->required();

    std::string ingest_corpus_path, ingest_out;
    CLI::App* ingest = app.add_subcommand("ingest", "Validate and normalize a corpus file");
    ingest->add_option("--corpus", ingest_corpus_path, "JSONL corpus")->required();
    ingest->add_option("--out", ingest_out, "normalized output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return do_run(run_args);
        if (score->parsed()) return do_score(score_args);
        if (report->parsed()) return do_report(report_out);
        if (ingest->parsed()) return do_ingest(ingest_corpus_path, ingest_out);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 2;
    }
    return 2;
}
