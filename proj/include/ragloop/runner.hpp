#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ragloop/eval.hpp"
#include "ragloop/orchestrator.hpp"

namespace ragloop {

inline constexpr std::string_view kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Datasets
// ---------------------------------------------------------------------------

struct DatasetRecord {
    std::string qid;
    std::string question;
    std::vector<std::string> golden_answers;
};

/// Line-delimited JSON, one {id, question, golden_answers:[...]} per line.
/// Throws IoError, ParseError(line) (also for empty question or empty
/// golden_answers), DuplicateQid.
std::vector<DatasetRecord> load_dataset(const std::string& path);
std::vector<DatasetRecord> load_dataset_stream(std::istream& in, const std::string& source);

/// Uniform sample of n records without replacement, deterministic in seed,
/// original relative order preserved. The generator is pinned for
/// portability: mt19937_64 seeded with seed drives an in-place
/// highest-index-first swap shuffle (j = next() % (i + 1)) of the index
/// vector; the first n indices are taken and sorted ascending. Throws
/// SampleTooLarge when n exceeds the record count.
std::vector<DatasetRecord> sample_subset(const std::vector<DatasetRecord>& records,
                                         std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// Everything that determines a run's output. A resumed run must present an
/// identical manifest (timestamps and run_id aside) or the runner aborts
/// rather than mix incompatible episodes in one log.
struct RunManifest {
    std::string dataset_path;
    std::string dataset_digest;
    std::string corpus_path;
    std::string corpus_digest;
    std::string retriever_url;
    std::string backend_url;  // auth never recorded, only the endpoint
    std::string judge_model;
    std::string mock_scenario;
    EpisodeConfig config;
    std::optional<std::size_t> n_sample;
    std::uint64_t sample_seed = 0;
    std::string tool_version = std::string(kToolVersion);

    /// Digest of the identity fields below.
    std::string run_id() const;
    /// All output-determining fields; excludes timestamps and scheduling
    /// knobs (concurrency, limit).
    nlohmann::json identity_json() const;
};

/// FNV-1a digest of a file's bytes. Throws IoError.
std::string file_digest(const std::string& path);

/// Current UTC time, ISO 8601 with seconds.
std::string iso_utc_now();

// ---------------------------------------------------------------------------
// Batch execution
// ---------------------------------------------------------------------------

struct RunOptions {
    std::string out_dir;
    int concurrency = 1;
    /// Execute at most this many new episodes this run, then stop. The log
    /// stays resumable; a later run without the cap finishes the batch.
    std::optional<std::size_t> limit;
    ScoreOptions score;
};

struct BatchResult {
    int executed = 0;
    int skipped = 0;   // already present in the run log
    int failures = 0;  // episodes that ended in BackendFailure
    bool complete = false;
    BatchSummary summary;
    std::string episodes_path;
    std::string records_path;
    std::string summary_path;
    std::string manifest_path;
};

using EpisodeRunner = std::function<Episode(const DatasetRecord&)>;

/// Runs the dataset through run_one with a bounded worker pool, appending one
/// JSON line per episode to <out_dir>/episodes.jsonl in dataset order.
/// Episodes whose id is already in the log are skipped, so an interrupted
/// batch resumes by rerunning the same command. After execution the whole log
/// is rescored: records.jsonl and summary.json are rewritten from scratch.
/// run_one must derive episode ids from manifest.dataset_digest and the
/// manifest config so resume detection lines up.
BatchResult run_batch(const std::vector<DatasetRecord>& records, const EpisodeRunner& run_one,
                      const RunManifest& manifest, const RunOptions& options);

/// Episodes currently in a run log, in file order. A final line cut short by
/// an interrupt is dropped; a malformed line anywhere else is a ParseError.
std::vector<Episode> read_episode_log(const std::string& path);

/// Scores every episode and rewrites records.jsonl + summary.json next to
/// the log. Returns the summary. Throws EmptyBatch on an empty log.
BatchSummary rescore_run(const std::string& out_dir, const ScoreOptions& options);

}  // namespace ragloop
