#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace calltopics::prompts {

// Shipped prompt assets (prompts/*.txt), byte-for-byte.
std::string_view topic_retriever();
std::string_view topic_matcher();
std::string_view topic_ontologist();
std::string_view product_classifier();

enum class PromptKind { retriever, matcher, ontologist, product_classifier, other };

/// Identifies which shipped asset a system prompt is (exact comparison).
PromptKind kind_of(std::string_view system_prompt);

/// User message for the matcher, in the asset's example input layout:
///   Reference topics:
///   - <label>
///   ...
///
///   Query topic: <query>
std::string render_matcher_input(const std::vector<std::string>& reference_topics, std::string_view query);

struct MatcherInput {
    std::vector<std::string> references;
    std::string query;
};
MatcherInput parse_matcher_input(std::string_view message);

/// User message for the ontologist, in the asset's input layout. The topic is
/// a JSON string and the tree a JSON object {"parent": ["child", ...], ...}.
std::string render_ontologist_input(std::string_view topic, const nlohmann::ordered_json& tree);

struct OntologistInput {
    std::string topic;
    nlohmann::ordered_json tree;
};
OntologistInput parse_ontologist_input(std::string_view message);

/// Removes one surrounding ``` / ```json fence pair, if present.
std::string strip_code_fences(std::string_view reply);

/// Payload of a <structured_output> block (closing tag optional), else the
/// whole reply; code fences are stripped either way.
std::string extract_structured_output(std::string_view reply);

/// Collapses newlines/tabs in a label so it renders on one line.
std::string single_line(std::string_view label);

}  // namespace calltopics::prompts
