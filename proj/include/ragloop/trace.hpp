#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ragloop/document.hpp"
#include "ragloop/errors.hpp"

namespace ragloop::trace {

// ---------------------------------------------------------------------------
// Tag grammar
//
// The multi-turn transcript is plain text with five lowercase tag pairs:
// <think>, <search>, <answer> are model-generated; <information> and
// <retrieval> wrap injected content. Matching is case-sensitive, no
// attributes, no nesting.
// ---------------------------------------------------------------------------

enum class TagKind { Think, Search, Information, Retrieval, Answer };

std::string_view tag_name(TagKind kind);
std::string open_tag(TagKind kind);
std::string close_tag(TagKind kind);

/// One complete tag block found in a source text. content is trimmed of
/// leading/trailing whitespace and excludes the delimiters; [begin, end)
/// spans the whole block including delimiters.
struct TagBlock {
    TagKind kind;
    std::string content;
    std::size_t begin = 0;
    std::size_t end = 0;
};

/// All complete blocks in text, ordered by start offset. Blocks of the same
/// kind never overlap; blocks of different kinds may (that is how nesting
/// shows up, and parse_next_action rejects it).
std::vector<TagBlock> scan_blocks(std::string_view text);

/// First complete block of the given kind, if any.
std::optional<TagBlock> first_block(std::string_view text, TagKind kind);

// ---------------------------------------------------------------------------
// Agent actions
// ---------------------------------------------------------------------------

struct AgentAction {
    enum class Type { Search, Answer, Malformed };

    Type type = Type::Malformed;
    std::string text;    // query or answer, trimmed, non-empty
    std::string reason;  // diagnostic when Malformed

    static AgentAction search(std::string query);
    static AgentAction answer(std::string answer);
    static AgentAction malformed(std::string reason);

    bool is_search() const { return type == Type::Search; }
    bool is_answer() const { return type == Type::Answer; }
    bool is_malformed() const { return type == Type::Malformed; }
};

/// Parses the model's latest generated segment into an action: the first
/// complete <search> or <answer> block wins, anything after it is ignored.
/// Total and deterministic; every failure maps to Malformed with a reason
/// (missing-tag, unclosed-tag, empty-content, nested-tag).
AgentAction parse_next_action(std::string_view model_output);

/// Stop sequences for the generation step that awaits the next action.
std::vector<std::string> stop_sequences();

// ---------------------------------------------------------------------------
// Document block formatting
// ---------------------------------------------------------------------------

/// Renders documents as numbered lines: `Doc {n}(Title: "{title}") {text}`,
/// one per document in input order, joined by newlines. This is the payload
/// that gets wrapped in <information> (baseline/dedup) or <retrieval>
/// (contextualization/hybrid). Throws EmptyDocumentSet on an empty list.
std::string render_information_block(std::span<const Document> documents);

/// Inverse of render_information_block: recovers (title, text) pairs.
std::vector<std::pair<std::string, std::string>> split_information_block(std::string_view block);

std::string trim(std::string_view s);

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

enum class TemplateId { BaseAgent, Extractor, JudgeMatch, ReasoningScore };

std::string_view template_name(TemplateId id);

/// Placeholder names each template must contain.
const std::vector<std::string>& required_placeholders(TemplateId id);

/// The four prompt templates. Defaults are compiled in; load_dir() overrides
/// them from plain-text files ({base_agent,extractor,judge_match,
/// reasoning_score}.txt) with {name} placeholders. A file that is absent
/// keeps the default; a directory providing none of the four is an IoError.
class TemplateSet {
public:
    using Bindings = std::map<std::string, std::string>;

    static TemplateSet defaults();
    static TemplateSet load_dir(const std::string& dir);

    const std::string& text(TemplateId id) const;
    void set(TemplateId id, std::string text);

    /// Exact textual substitution of {name} tokens, single pass: bound values
    /// are inserted verbatim and never re-scanned. Throws UnboundPlaceholder
    /// for any {name} token in the template without a binding.
    std::string render(TemplateId id, const Bindings& bindings) const;

private:
    std::string texts_[4];
};

/// Compiled-in default text for one template.
const std::string& default_template_text(TemplateId id);

/// Suffix appended to the transcript when the search cap is reached, demanding
/// a final answer.
const std::string& forced_answer_suffix();

}  // namespace ragloop::trace
