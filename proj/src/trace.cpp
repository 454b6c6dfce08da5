#include "ragloop/trace.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>

namespace ragloop::trace {

namespace {

constexpr std::array<TagKind, 5> kAllKinds = {TagKind::Think, TagKind::Search, TagKind::Information,
                                              TagKind::Retrieval, TagKind::Answer};

bool is_placeholder_char(char c) {
    return (c >= 'a' && c <= 'z') || c == '_';
}

}  // namespace

std::string_view tag_name(TagKind kind) {
    switch (kind) {
        case TagKind::Think: return "think";
        case TagKind::Search: return "search";
        case TagKind::Information: return "information";
        case TagKind::Retrieval: return "retrieval";
        case TagKind::Answer: return "answer";
    }
    return "";
}

std::string open_tag(TagKind kind) {
    return "<" + std::string(tag_name(kind)) + ">";
}

std::string close_tag(TagKind kind) {
    return "</" + std::string(tag_name(kind)) + ">";
}

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<TagBlock> scan_blocks(std::string_view text) {
    std::vector<TagBlock> blocks;
    for (TagKind kind : kAllKinds) {
        const std::string open = open_tag(kind);
        const std::string close = close_tag(kind);
        std::size_t pos = 0;
        while (true) {
            std::size_t o = text.find(open, pos);
            if (o == std::string_view::npos) break;
            std::size_t inner = o + open.size();
            std::size_t c = text.find(close, inner);
            if (c == std::string_view::npos) break;
            TagBlock block;
            block.kind = kind;
            block.content = trim(text.substr(inner, c - inner));
            block.begin = o;
            block.end = c + close.size();
            blocks.push_back(std::move(block));
            pos = c + close.size();
        }
    }
    std::sort(blocks.begin(), blocks.end(),
              [](const TagBlock& a, const TagBlock& b) { return a.begin < b.begin; });
    return blocks;
}

std::optional<TagBlock> first_block(std::string_view text, TagKind kind) {
    for (auto& block : scan_blocks(text)) {
        if (block.kind == kind) return block;
    }
    return std::nullopt;
}

AgentAction AgentAction::search(std::string query) {
    return AgentAction{Type::Search, std::move(query), {}};
}

AgentAction AgentAction::answer(std::string answer) {
    return AgentAction{Type::Answer, std::move(answer), {}};
}

AgentAction AgentAction::malformed(std::string reason) {
    return AgentAction{Type::Malformed, {}, std::move(reason)};
}

AgentAction parse_next_action(std::string_view model_output) {
    std::optional<TagBlock> best;
    for (auto& block : scan_blocks(model_output)) {
        if (block.kind != TagKind::Search && block.kind != TagKind::Answer) continue;
        if (!best || block.begin < best->begin) best = block;
    }
    if (!best) {
        bool has_open = model_output.find(open_tag(TagKind::Search)) != std::string_view::npos ||
                        model_output.find(open_tag(TagKind::Answer)) != std::string_view::npos;
        return AgentAction::malformed(has_open ? "unclosed-tag" : "missing-tag");
    }
    // No nesting: an action tag inside the winning block's content is a
    // format failure, not something to disambiguate.
    for (TagKind kind : {TagKind::Search, TagKind::Answer}) {
        if (best->content.find(open_tag(kind)) != std::string::npos ||
            best->content.find(close_tag(kind)) != std::string::npos) {
            return AgentAction::malformed("nested-tag");
        }
    }
    if (best->content.empty()) return AgentAction::malformed("empty-content");
    if (best->kind == TagKind::Search) return AgentAction::search(best->content);
    return AgentAction::answer(best->content);
}

std::vector<std::string> stop_sequences() {
    return {close_tag(TagKind::Search), close_tag(TagKind::Answer)};
}

std::string render_information_block(std::span<const Document> documents) {
    if (documents.empty()) throw EmptyDocumentSet();
    std::string out;
    for (std::size_t i = 0; i < documents.size(); ++i) {
        if (i) out += '\n';
        out += "Doc " + std::to_string(i + 1) + "(Title: \"" + documents[i].title + "\") " +
               documents[i].body;
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> split_information_block(std::string_view block) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t pos = 0;
    while (pos < block.size()) {
        std::string marker = "Doc " + std::to_string(out.size() + 1) + "(Title: \"";
        std::size_t start = block.find(marker, pos);
        if (start == std::string_view::npos) break;
        std::size_t title_begin = start + marker.size();
        std::size_t title_end = block.find("\") ", title_begin);
        if (title_end == std::string_view::npos) break;
        std::size_t text_begin = title_end + 3;
        std::string next_marker = "\nDoc " + std::to_string(out.size() + 2) + "(Title: \"";
        std::size_t text_end = block.find(next_marker, text_begin);
        if (text_end == std::string_view::npos) text_end = block.size();
        out.emplace_back(std::string(block.substr(title_begin, title_end - title_begin)),
                         std::string(block.substr(text_begin, text_end - text_begin)));
        pos = text_end;
    }
    return out;
}

std::string_view template_name(TemplateId id) {
    switch (id) {
        case TemplateId::BaseAgent: return "base_agent";
        case TemplateId::Extractor: return "extractor";
        case TemplateId::JudgeMatch: return "judge_match";
        case TemplateId::ReasoningScore: return "reasoning_score";
    }
    return "";
}

const std::vector<std::string>& required_placeholders(TemplateId id) {
    static const std::vector<std::string> base = {"question"};
    static const std::vector<std::string> extractor = {"question", "information", "prev_cache"};
    static const std::vector<std::string> judge = {"predicted", "golds"};
    static const std::vector<std::string> reasoning = {"question", "information", "think"};
    switch (id) {
        case TemplateId::BaseAgent: return base;
        case TemplateId::Extractor: return extractor;
        case TemplateId::JudgeMatch: return judge;
        case TemplateId::ReasoningScore: return reasoning;
    }
    return base;
}

TemplateSet TemplateSet::defaults() {
    TemplateSet set;
    for (auto id : {TemplateId::BaseAgent, TemplateId::Extractor, TemplateId::JudgeMatch,
                    TemplateId::ReasoningScore}) {
        set.texts_[static_cast<int>(id)] = default_template_text(id);
    }
    return set;
}

TemplateSet TemplateSet::load_dir(const std::string& dir) {
    TemplateSet set = defaults();
    int loaded = 0;
    for (auto id : {TemplateId::BaseAgent, TemplateId::Extractor, TemplateId::JudgeMatch,
                    TemplateId::ReasoningScore}) {
        std::string path = dir + "/" + std::string(template_name(id)) + ".txt";
        std::ifstream in(path, std::ios::binary);
        if (!in) continue;  // absent file keeps the default
        std::ostringstream buf;
        buf << in.rdbuf();
        std::string text = buf.str();
        // Drop the conventional trailing newline(s) so templates can end
        // exactly at a placeholder.
        while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
        set.set(id, std::move(text));
        ++loaded;
    }
    if (loaded == 0) throw IoError("no template files found in " + dir);
    return set;
}

const std::string& TemplateSet::text(TemplateId id) const {
    return texts_[static_cast<int>(id)];
}

void TemplateSet::set(TemplateId id, std::string text) {
    for (const auto& name : required_placeholders(id)) {
        if (text.find("{" + name + "}") == std::string::npos) {
            throw ConfigError("template " + std::string(template_name(id)) +
                              " is missing required placeholder {" + name + "}");
        }
    }
    texts_[static_cast<int>(id)] = std::move(text);
}

std::string TemplateSet::render(TemplateId id, const Bindings& bindings) const {
    const std::string& tpl = texts_[static_cast<int>(id)];
    std::string out;
    out.reserve(tpl.size());
    std::size_t i = 0;
    while (i < tpl.size()) {
        char c = tpl[i];
        if (c == '{') {
            std::size_t j = i + 1;
            while (j < tpl.size() && is_placeholder_char(tpl[j])) ++j;
            if (j > i + 1 && j < tpl.size() && tpl[j] == '}') {
                std::string name = tpl.substr(i + 1, j - i - 1);
                auto it = bindings.find(name);
                if (it == bindings.end()) throw UnboundPlaceholder(name);
                out += it->second;
                i = j + 1;
                continue;
            }
        }
        out += c;
        ++i;
    }
    return out;
}

const std::string& forced_answer_suffix() {
    static const std::string suffix =
        "\n\nYou have searched the maximum number of times. You must now give the final "
        "answer inside <answer> and </answer>.\n\n";
    return suffix;
}

}  // namespace ragloop::trace
