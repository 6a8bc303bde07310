#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "calltopics/corpus.hpp"
#include "calltopics/providers.hpp"

namespace calltopics {

/// One topic found in a paragraph, with the excerpts that mention it.
struct TopicMentionDraft {
    std::string topic_name;
    std::vector<std::string> excerpts;

    friend bool operator==(const TopicMentionDraft&, const TopicMentionDraft&) = default;
};

/// The topic-retrieval system prompt, exactly as shipped in prompts/.
std::string_view render_retriever_prompt();

/// Parses a retriever reply: a JSON array of {"topic_name", "excerpts"}.
/// Surrounding code fences are tolerated; anything else around the JSON is a
/// ParseError. Names and excerpts are trimmed; entries with an empty name and
/// empty excerpt strings are dropped.
std::vector<TopicMentionDraft> parse_retriever_response(std::string_view reply);

std::string serialize_drafts(const std::vector<TopicMentionDraft>& drafts);

struct RetrievalOptions {
    double temperature = 0.0;
    int max_output_tokens = 2048;
};

struct RetrievalOutcome {
    std::vector<TopicMentionDraft> drafts;
    bool skipped = false;
    std::string error;  // last parse error when skipped
    int chat_calls = 0;
};

/// One chat call per paragraph (paragraph text as the user message). A reply
/// that fails to parse is retried once; a second failure marks the paragraph
/// skipped. Provider errors propagate. Drafts with exactly the same name are
/// merged.
RetrievalOutcome retrieve_topics(const Paragraph& paragraph, const ChatProvider& provider,
                                 const RetrievalOptions& options = {});

}  // namespace calltopics
