#include "ragloop/runner.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "ragloop/hash.hpp"

namespace ragloop {

namespace {

namespace fs = std::filesystem;

std::string episodes_path(const std::string& dir) { return dir + "/episodes.jsonl"; }
std::string records_path(const std::string& dir) { return dir + "/records.jsonl"; }
std::string summary_path(const std::string& dir) { return dir + "/summary.json"; }
std::string manifest_path(const std::string& dir) { return dir + "/manifest.json"; }

}  // namespace

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

std::vector<DatasetRecord> load_dataset_stream(std::istream& in, const std::string& source) {
    std::vector<DatasetRecord> records;
    std::set<std::string> qids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trace::trim(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw ParseError("invalid dataset record in " + source, line_no);
        DatasetRecord record;
        try {
            const auto& id = j.at("id");
            record.qid = id.is_string() ? id.get<std::string>() : id.dump();
            record.question = j.at("question").get<std::string>();
            record.golden_answers = j.at("golden_answers").get<std::vector<std::string>>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string(e.what()) + " in " + source, line_no);
        }
        if (record.question.empty()) throw ParseError("empty question", line_no);
        if (record.golden_answers.empty()) throw ParseError("empty golden_answers", line_no);
        if (!qids.insert(record.qid).second) throw DuplicateQid(record.qid);
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<DatasetRecord> load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path);
    return load_dataset_stream(in, path);
}

std::vector<DatasetRecord> sample_subset(const std::vector<DatasetRecord>& records,
                                         std::size_t n, std::uint64_t seed) {
    if (n > records.size()) throw SampleTooLarge(n, records.size());
    std::vector<std::size_t> indices(records.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    // std::shuffle with uniform_int_distribution is not bit-portable across
    // standard libraries, so the swap sequence is spelled out.
    std::mt19937_64 gen(seed);
    for (std::size_t i = indices.size(); i > 1; --i) {
        std::size_t j = gen() % i;
        std::swap(indices[i - 1], indices[j]);
    }
    indices.resize(n);
    std::sort(indices.begin(), indices.end());
    std::vector<DatasetRecord> out;
    out.reserve(n);
    for (std::size_t index : indices) out.push_back(records[index]);
    return out;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

nlohmann::json RunManifest::identity_json() const {
    nlohmann::json j{
        {"backend_url", backend_url},
        {"config", config_to_json(config)},
        {"corpus_digest", corpus_digest},
        {"corpus_path", corpus_path},
        {"dataset_digest", dataset_digest},
        {"dataset_path", dataset_path},
        {"judge_model", judge_model},
        {"mock_scenario", mock_scenario},
        {"n_sample", nullptr},
        {"retriever_url", retriever_url},
        {"sample_seed", sample_seed},
        {"tool_version", tool_version},
    };
    if (n_sample) j["n_sample"] = *n_sample;
    return j;
}

std::string RunManifest::run_id() const {
    return digest_fields({identity_json().dump()});
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return to_hex(fnv1a64(buffer.str()));
}

std::string iso_utc_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// ---------------------------------------------------------------------------
// Run log
// ---------------------------------------------------------------------------

namespace {

/// Valid JSON lines of a run log; a malformed final line (interrupted write)
/// is dropped, a malformed line elsewhere is an error.
std::vector<nlohmann::json> read_log_lines(const std::string& path) {
    std::vector<nlohmann::json> lines;
    std::ifstream in(path);
    if (!in) return lines;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> bad_line;
    while (std::getline(in, line)) {
        ++line_no;
        if (trace::trim(line).empty()) continue;
        if (bad_line) throw ParseError("malformed run log line in " + path, *bad_line);
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            bad_line = line_no;
            continue;
        }
        lines.push_back(std::move(j));
    }
    return lines;
}

void write_scores(const std::string& out_dir, const std::vector<EvalRecord>& records,
                  const BatchSummary& summary) {
    std::ofstream rec_out(records_path(out_dir), std::ios::trunc);
    if (!rec_out) throw IoError("cannot write " + records_path(out_dir));
    for (const EvalRecord& record : records) rec_out << record_to_json(record).dump() << '\n';
    rec_out.close();

    std::ofstream sum_out(summary_path(out_dir), std::ios::trunc);
    if (!sum_out) throw IoError("cannot write " + summary_path(out_dir));
    sum_out << summary_to_json(summary).dump(2) << '\n';
}

}  // namespace

std::vector<Episode> read_episode_log(const std::string& path) {
    std::vector<Episode> episodes;
    for (const nlohmann::json& j : read_log_lines(path)) episodes.push_back(episode_from_json(j));
    return episodes;
}

BatchSummary rescore_run(const std::string& out_dir, const ScoreOptions& options) {
    std::vector<Episode> episodes = read_episode_log(episodes_path(out_dir));
    if (episodes.empty()) throw EmptyBatch();
    std::vector<EvalRecord> records;
    records.reserve(episodes.size());
    for (const Episode& episode : episodes) records.push_back(score_episode(episode, options));
    BatchSummary summary = summarize(records);
    write_scores(out_dir, records, summary);
    return summary;
}

// ---------------------------------------------------------------------------
// Batch execution
// ---------------------------------------------------------------------------

BatchResult run_batch(const std::vector<DatasetRecord>& records, const EpisodeRunner& run_one,
                      const RunManifest& manifest, const RunOptions& options) {
    if (options.out_dir.empty()) throw ConfigError("run_batch needs an output directory");
    if (options.concurrency <= 0) throw ConfigError("concurrency must be positive");
    manifest.config.validate();
    fs::create_directories(options.out_dir);

    BatchResult result;
    result.episodes_path = episodes_path(options.out_dir);
    result.records_path = records_path(options.out_dir);
    result.summary_path = summary_path(options.out_dir);
    result.manifest_path = manifest_path(options.out_dir);

    nlohmann::json identity = manifest.identity_json();
    std::string started_at = iso_utc_now();
    if (fs::exists(result.manifest_path)) {
        std::ifstream in(result.manifest_path);
        nlohmann::json stored = nlohmann::json::parse(in, nullptr, false);
        if (stored.is_discarded() || !stored.is_object())
            throw ConfigError("existing manifest is unreadable: " + result.manifest_path);
        if (stored.value("identity", nlohmann::json::object()) != identity)
            throw ConfigError("run directory " + options.out_dir +
                              " was produced by a different configuration; refusing to resume");
        started_at = stored.value("started_at", started_at);
    }

    auto write_manifest = [&](const std::string& finished_at) {
        nlohmann::json j{
            {"finished_at", finished_at},
            {"identity", identity},
            {"run_id", manifest.run_id()},
            {"started_at", started_at},
        };
        std::ofstream out(result.manifest_path, std::ios::trunc);
        if (!out) throw IoError("cannot write " + result.manifest_path);
        out << j.dump(2) << '\n';
    };
    write_manifest("");

    // Trim a half-written final line so the append below starts clean.
    std::vector<nlohmann::json> existing = read_log_lines(result.episodes_path);
    std::set<std::string> done;
    for (const nlohmann::json& j : existing) done.insert(j.at("episode_id").get<std::string>());
    {
        std::ofstream out(result.episodes_path, std::ios::trunc);
        if (!out) throw IoError("cannot write " + result.episodes_path);
        for (const nlohmann::json& j : existing) out << j.dump() << '\n';
    }

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < records.size(); ++i) {
        std::string id = make_episode_id(manifest.dataset_digest, records[i].qid,
                                         manifest.config.mode, manifest.config.seed.value_or(0));
        if (done.count(id)) {
            ++result.skipped;
        } else {
            pending.push_back(i);
        }
    }
    std::size_t to_run = pending.size();
    if (options.limit && *options.limit < to_run) to_run = *options.limit;

    std::mutex mutex;
    std::condition_variable ready_cv;
    std::map<std::size_t, Episode> finished;  // pending-index -> episode
    std::map<std::size_t, long> durations;
    std::size_t next_to_claim = 0;
    bool stop = false;
    std::exception_ptr worker_error;

    auto worker = [&]() {
        while (true) {
            std::size_t slot;
            {
                std::lock_guard lock(mutex);
                if (stop || worker_error || next_to_claim >= to_run) return;
                slot = next_to_claim++;
            }
            try {
                auto begin = std::chrono::steady_clock::now();
                Episode episode = run_one(records[pending[slot]]);
                auto elapsed = std::chrono::steady_clock::now() - begin;
                std::lock_guard lock(mutex);
                durations[slot] =
                    std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
                finished.emplace(slot, std::move(episode));
            } catch (...) {
                std::lock_guard lock(mutex);
                if (!worker_error) worker_error = std::current_exception();
            }
            ready_cv.notify_all();
        }
    };

    std::vector<std::thread> workers;
    int pool = std::min<int>(options.concurrency, static_cast<int>(to_run));
    workers.reserve(static_cast<std::size_t>(std::max(pool, 0)));
    for (int i = 0; i < pool; ++i) workers.emplace_back(worker);

    // The consumer must not leave joinable workers behind when it throws.
    try {
        std::ofstream out(result.episodes_path, std::ios::app);
        if (!out) throw IoError("cannot append to " + result.episodes_path);
        for (std::size_t slot = 0; slot < to_run; ++slot) {
            Episode episode;
            long duration_ms = 0;
            {
                std::unique_lock lock(mutex);
                ready_cv.wait(lock, [&] {
                    return worker_error != nullptr || finished.count(slot) > 0;
                });
                if (worker_error) break;
                episode = std::move(finished.at(slot));
                finished.erase(slot);
                duration_ms = durations.at(slot);
            }
            const DatasetRecord& record = records[pending[slot]];
            std::string expected = make_episode_id(manifest.dataset_digest, record.qid,
                                                   manifest.config.mode,
                                                   manifest.config.seed.value_or(0));
            if (episode.episode_id != expected)
                throw Error("episode runner returned id " + episode.episode_id +
                            " for question " + record.qid + ", expected " + expected +
                            "; resume bookkeeping would break");
            nlohmann::json line = episode_to_json(episode);
            line["duration_ms"] = duration_ms;
            out << line.dump() << '\n';
            out.flush();
            ++result.executed;
        }
    } catch (...) {
        {
            std::lock_guard lock(mutex);
            stop = true;
        }
        for (std::thread& t : workers) t.join();
        throw;
    }
    for (std::thread& t : workers) t.join();
    if (worker_error) std::rethrow_exception(worker_error);

    result.complete = result.skipped + result.executed == static_cast<int>(records.size());
    std::vector<Episode> logged = read_episode_log(result.episodes_path);
    for (const Episode& episode : logged)
        if (episode.termination == Termination::BackendFailure) ++result.failures;
    std::vector<EvalRecord> scored;
    scored.reserve(logged.size());
    for (const Episode& episode : logged)
        scored.push_back(score_episode(episode, options.score));
    result.summary = summarize(scored);
    write_scores(options.out_dir, scored, result.summary);
    write_manifest(iso_utc_now());
    return result;
}

}  // namespace ragloop
