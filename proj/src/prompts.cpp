#include "calltopics/prompts.hpp"

#include "calltopics/error.hpp"
#include "calltopics/text.hpp"

namespace calltopics::prompts {

namespace assets {
extern const std::string_view topic_retriever;
extern const std::string_view topic_matcher;
extern const std::string_view topic_ontologist;
extern const std::string_view product_classifier;
}  // namespace assets

std::string_view topic_retriever() { return assets::topic_retriever; }
std::string_view topic_matcher() { return assets::topic_matcher; }
std::string_view topic_ontologist() { return assets::topic_ontologist; }
std::string_view product_classifier() { return assets::product_classifier; }

PromptKind kind_of(std::string_view system_prompt) {
    if (system_prompt == assets::topic_retriever) return PromptKind::retriever;
    if (system_prompt == assets::topic_matcher) return PromptKind::matcher;
    if (system_prompt == assets::topic_ontologist) return PromptKind::ontologist;
    if (system_prompt == assets::product_classifier) return PromptKind::product_classifier;
    return PromptKind::other;
}

std::string single_line(std::string_view label) {
    std::string out(text::trim(label));
    for (auto& c : out)
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    return out;
}

namespace {

constexpr std::string_view kReferenceHeader = "Reference topics:";
constexpr std::string_view kQueryPrefix = "Query topic: ";
constexpr std::string_view kGivenTopicPrefix = "- Given Topic: ";
constexpr std::string_view kTreePrefix = "- Topic Tree: ";

std::vector<std::string_view> lines_of(std::string_view s) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        auto nl = s.find('\n', pos);
        if (nl == std::string_view::npos) nl = s.size();
        lines.push_back(s.substr(pos, nl - pos));
        pos = nl + 1;
    }
    return lines;
}

}  // namespace

std::string render_matcher_input(const std::vector<std::string>& reference_topics, std::string_view query) {
    std::string out(kReferenceHeader);
    out += '\n';
    for (const auto& ref : reference_topics) out += "- " + single_line(ref) + "\n";
    out += "\n";
    out += kQueryPrefix;
    out += single_line(query);
    return out;
}

MatcherInput parse_matcher_input(std::string_view message) {
    MatcherInput input;
    bool in_refs = false;
    bool saw_query = false;
    for (auto line : lines_of(message)) {
        if (line == kReferenceHeader) {
            in_refs = true;
        } else if (line.starts_with(kQueryPrefix)) {
            input.query = std::string(line.substr(kQueryPrefix.size()));
            saw_query = true;
            in_refs = false;
        } else if (in_refs && line.starts_with("- ")) {
            input.references.emplace_back(line.substr(2));
        } else if (in_refs && text::trim(line).empty()) {
            in_refs = false;
        }
    }
    if (!saw_query) throw ParseError("matcher input has no query topic", std::string(message));
    return input;
}

std::string render_ontologist_input(std::string_view topic, const nlohmann::ordered_json& tree) {
    std::string out = "Input:\n";
    out += kGivenTopicPrefix;
    out += nlohmann::json(single_line(topic)).dump();
    out += '\n';
    out += kTreePrefix;
    out += tree.dump();
    return out;
}

OntologistInput parse_ontologist_input(std::string_view message) {
    OntologistInput input;
    bool saw_topic = false;
    bool saw_tree = false;
    try {
        for (auto line : lines_of(message)) {
            if (line.starts_with(kGivenTopicPrefix)) {
                input.topic = nlohmann::json::parse(line.substr(kGivenTopicPrefix.size())).get<std::string>();
                saw_topic = true;
            } else if (line.starts_with(kTreePrefix)) {
                input.tree = nlohmann::ordered_json::parse(line.substr(kTreePrefix.size()));
                saw_tree = true;
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed ontologist input: ") + e.what(), std::string(message));
    }
    if (!saw_topic || !saw_tree || !input.tree.is_object())
        throw ParseError("ontologist input lacks topic or tree", std::string(message));
    return input;
}

std::string strip_code_fences(std::string_view reply) {
    auto s = text::trim(reply);
    if (!s.starts_with("```")) return std::string(s);
    auto first_nl = s.find('\n');
    if (first_nl == std::string_view::npos) return std::string(s);
    auto body = s.substr(first_nl + 1);
    body = text::trim(body);
    if (body.ends_with("```")) body.remove_suffix(3);
    return std::string(text::trim(body));
}

std::string extract_structured_output(std::string_view reply) {
    constexpr std::string_view open = "<structured_output>";
    constexpr std::string_view close = "</structured_output>";
    auto start = reply.find(open);
    if (start == std::string_view::npos) return strip_code_fences(reply);
    auto body = reply.substr(start + open.size());
    auto end = body.find(close);
    if (end != std::string_view::npos) body = body.substr(0, end);
    return strip_code_fences(body);
}

}  // namespace calltopics::prompts
