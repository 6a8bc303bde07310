#include "calltopics/retriever.hpp"

#include <algorithm>

#include "calltopics/error.hpp"
#include "calltopics/prompts.hpp"
#include "calltopics/text.hpp"

namespace calltopics {

using nlohmann::json;

std::string_view render_retriever_prompt() { return prompts::topic_retriever(); }

std::vector<TopicMentionDraft> parse_retriever_response(std::string_view reply) {
    const auto body = prompts::strip_code_fences(reply);
    json parsed;
    try {
        parsed = json::parse(body);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("retriever reply is not JSON: ") + e.what(), std::string(reply));
    }
    if (!parsed.is_array()) throw ParseError("retriever reply is not a JSON array", std::string(reply));

    std::vector<TopicMentionDraft> drafts;
    for (const auto& entry : parsed) {
        if (!entry.is_object() || !entry.contains("topic_name") || !entry["topic_name"].is_string() ||
            !entry.contains("excerpts") || !entry["excerpts"].is_array())
            throw ParseError("retriever entry lacks topic_name/excerpts", std::string(reply));
        TopicMentionDraft draft;
        draft.topic_name = std::string(text::trim(entry["topic_name"].get<std::string>()));
        for (const auto& e : entry["excerpts"]) {
            if (!e.is_string()) throw ParseError("retriever excerpt is not a string", std::string(reply));
            const auto& raw = e.get_ref<const std::string&>();
            auto excerpt = text::trim(raw);
            if (!excerpt.empty()) draft.excerpts.emplace_back(excerpt);
        }
        if (!draft.topic_name.empty()) drafts.push_back(std::move(draft));
    }
    return drafts;
}

std::string serialize_drafts(const std::vector<TopicMentionDraft>& drafts) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& d : drafts) out.push_back({{"topic_name", d.topic_name}, {"excerpts", d.excerpts}});
    return out.dump();
}

RetrievalOutcome retrieve_topics(const Paragraph& paragraph, const ChatProvider& provider,
                                 const RetrievalOptions& options) {
    if (text::trim(paragraph.text).empty()) throw ParameterError("cannot retrieve topics from an empty paragraph");

    ChatRequest request;
    request.system_prompt = std::string(render_retriever_prompt());
    request.user_message = paragraph.text;
    request.temperature = options.temperature;
    request.max_output_tokens = options.max_output_tokens;

    RetrievalOutcome outcome;
    for (int attempt = 0; attempt < 2; ++attempt) {
        auto reply = provider.chat(request);
        ++outcome.chat_calls;
        try {
            auto drafts = parse_retriever_response(reply.text);
            for (auto& d : drafts) {
                auto same = std::find_if(outcome.drafts.begin(), outcome.drafts.end(),
                                         [&](const auto& o) { return o.topic_name == d.topic_name; });
                if (same == outcome.drafts.end()) {
                    outcome.drafts.push_back(std::move(d));
                } else {
                    same->excerpts.insert(same->excerpts.end(), d.excerpts.begin(), d.excerpts.end());
                }
            }
            return outcome;
        } catch (const ParseError& e) {
            outcome.error = e.what();
        }
    }
    outcome.skipped = true;
    return outcome;
}

}  // namespace calltopics
