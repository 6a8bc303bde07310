#include "calltopics/providers.hpp"

#include <algorithm>

#include "calltopics/error.hpp"
#include "calltopics/prompts.hpp"
#include "calltopics/text.hpp"

namespace calltopics {

using nlohmann::json;
using nlohmann::ordered_json;

std::string keyword_retriever_reply(const std::vector<KeywordRule>& rules, const std::string& paragraph) {
    const auto lowered = text::to_lower(paragraph);
    const auto sentences = text::split_sentences(paragraph);

    ordered_json out = ordered_json::array();
    std::vector<std::string> topics;
    for (const auto& rule : rules) {
        auto key = text::to_lower(rule.keyword);
        if (key.empty() || lowered.find(key) == std::string::npos) continue;

        std::vector<std::string> excerpts;
        for (const auto& s : sentences)
            if (text::to_lower(s).find(key) != std::string::npos) excerpts.push_back(s);
        if (excerpts.empty()) excerpts.emplace_back(text::trim(paragraph));

        auto it = std::find(topics.begin(), topics.end(), rule.topic);
        if (it == topics.end()) {
            topics.push_back(rule.topic);
            out.push_back({{"topic_name", rule.topic}, {"excerpts", excerpts}});
            continue;
        }
        auto& existing = out[static_cast<std::size_t>(it - topics.begin())]["excerpts"];
        for (const auto& e : excerpts)
            if (std::find(existing.begin(), existing.end(), e) == existing.end()) existing.push_back(e);
    }
    return out.dump();
}

MockScript MockScript::from_json(const json& j) {
    MockScript s;
    try {
        if (j.contains("exact")) s.exact = j.at("exact").get<std::map<std::string, std::string>>();
        if (j.contains("retriever_keywords")) {
            std::vector<KeywordRule> rules;
            for (const auto& r : j.at("retriever_keywords"))
                rules.push_back({r.at("keyword").get<std::string>(), r.at("topic").get<std::string>()});
            s.retriever_keywords = std::move(rules);
        }
        if (j.contains("matcher_synonyms")) {
            std::vector<SynonymRule> rules;
            for (const auto& r : j.at("matcher_synonyms"))
                rules.push_back({r.at("labels").get<std::vector<std::string>>(), r.value("similarity", 95)});
            s.matcher_synonyms = std::move(rules);
        }
        if (j.contains("matcher_replies"))
            for (const auto& [k, v] : j.at("matcher_replies").items())
                s.matcher_replies[text::normalize_label(k)] = v.get<std::string>();
        if (j.contains("parent_paths"))
            for (const auto& [k, v] : j.at("parent_paths").items())
                s.parent_paths[text::normalize_label(k)] = v.get<std::vector<std::string>>();
        if (j.contains("ontologist_replies"))
            for (const auto& [k, v] : j.at("ontologist_replies").items())
                s.ontologist_replies[text::normalize_label(k)] = v.get<std::string>();
        if (j.contains("ontologist_default")) {
            auto mode = j.at("ontologist_default").get<std::string>();
            if (mode != "no_parent" && mode != "unscripted")
                throw ConfigError("ontologist_default must be 'no_parent' or 'unscripted'");
            s.ontologist_default_no_parent = mode == "no_parent";
        }
        if (j.contains("product_names")) s.product_names = j.at("product_names").get<std::vector<std::string>>();
        s.embedding_dimension = j.value("embedding_dimension", s.embedding_dimension);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad mock script: ") + e.what());
    }
    return s;
}

json MockScript::to_json() const {
    json j = json::object();
    if (!exact.empty()) j["exact"] = exact;
    if (retriever_keywords) {
        j["retriever_keywords"] = json::array();
        for (const auto& r : *retriever_keywords)
            j["retriever_keywords"].push_back({{"keyword", r.keyword}, {"topic", r.topic}});
    }
    if (matcher_synonyms) {
        j["matcher_synonyms"] = json::array();
        for (const auto& r : *matcher_synonyms)
            j["matcher_synonyms"].push_back({{"labels", r.labels}, {"similarity", r.similarity}});
    }
    if (!matcher_replies.empty()) j["matcher_replies"] = matcher_replies;
    if (!parent_paths.empty()) j["parent_paths"] = parent_paths;
    if (!ontologist_replies.empty()) j["ontologist_replies"] = ontologist_replies;
    j["ontologist_default"] = ontologist_default_no_parent ? "no_parent" : "unscripted";
    if (product_names) j["product_names"] = *product_names;
    j["embedding_dimension"] = embedding_dimension;
    return j;
}

MockProvider::MockProvider(MockScript script)
    : script_(std::move(script)), embedder_(script_.embedding_dimension) {
    if (script_.product_names)
        for (const auto& name : *script_.product_names) product_keys_.insert(text::normalize_label(name));
}

ChatResponse MockProvider::chat(const ChatRequest& request) const {
    request.validate();
    ChatResponse response;
    response.provider_meta["model"] = "mock";

    if (auto it = script_.exact.find(request.user_message); it != script_.exact.end()) {
        response.text = it->second;
        return response;
    }
    switch (prompts::kind_of(request.system_prompt)) {
        case prompts::PromptKind::retriever:
            response.text = answer_retriever(request.user_message);
            break;
        case prompts::PromptKind::matcher:
            response.text = answer_matcher(request.user_message);
            break;
        case prompts::PromptKind::ontologist:
            response.text = answer_ontologist(request.user_message);
            break;
        case prompts::PromptKind::product_classifier:
            response.text = answer_classifier(request.user_message);
            break;
        case prompts::PromptKind::other:
            throw UnscriptedPromptError("unscripted prompt: no exact rule for user message '" +
                                        request.user_message.substr(0, 80) + "'");
    }
    return response;
}

std::vector<EmbeddingVector> MockProvider::embed(const std::vector<std::string>& texts) const {
    return embedder_.embed(texts);
}

std::string MockProvider::answer_retriever(const std::string& paragraph) const {
    if (!script_.retriever_keywords)
        throw UnscriptedPromptError("unscripted prompt: retriever keyword rules are not configured");
    return keyword_retriever_reply(*script_.retriever_keywords, paragraph);
}

std::string MockProvider::answer_matcher(const std::string& message) const {
    auto input = prompts::parse_matcher_input(message);
    auto query_key = text::normalize_label(input.query);
    if (auto it = script_.matcher_replies.find(query_key); it != script_.matcher_replies.end()) return it->second;
    if (!script_.matcher_synonyms)
        throw UnscriptedPromptError("unscripted prompt: no matcher rule for '" + input.query + "'");

    struct Hit {
        std::string label;
        int similarity;
        std::size_t order;
    };
    std::vector<Hit> hits;
    for (std::size_t i = 0; i < input.references.size(); ++i) {
        const auto& ref = input.references[i];
        auto ref_key = text::normalize_label(ref);
        if (ref_key == query_key) continue;
        int best = -1;
        for (const auto& rule : *script_.matcher_synonyms) {
            bool has_query = false, has_ref = false;
            for (const auto& label : rule.labels) {
                auto key = text::normalize_label(label);
                has_query = has_query || key == query_key;
                has_ref = has_ref || key == ref_key;
            }
            if (has_query && has_ref) best = std::max(best, rule.similarity);
        }
        if (best >= 0) hits.push_back({ref, best, i});
    }
    std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.similarity > b.similarity; });

    ordered_json out;
    out["query_topic"] = input.query;
    out["matches"] = ordered_json::array();
    ordered_json detailed = ordered_json::array();
    for (const auto& h : hits) {
        out["matches"].push_back({{"topic", h.label}, {"similarity", h.similarity}});
        detailed.push_back({{"topic", h.label},
                            {"similarity", h.similarity},
                            {"reasoning", "Scripted synonym rule"},
                            {"parent_subset_check", "Scripted as same scope"}});
    }
    out["detailed_analysis"] = {{"matched_topics", detailed}};
    return "<structured_output>\n" + out.dump(4) + "\n</structured_output>";
}

std::string MockProvider::answer_ontologist(const std::string& message) const {
    auto input = prompts::parse_ontologist_input(message);
    auto topic_key = text::normalize_label(input.topic);
    if (auto it = script_.ontologist_replies.find(topic_key); it != script_.ontologist_replies.end())
        return it->second;

    ordered_json out;
    auto path_it = script_.parent_paths.find(topic_key);
    if (path_it == script_.parent_paths.end()) {
        if (!script_.ontologist_default_no_parent)
            throw UnscriptedPromptError("unscripted prompt: no parent rule for '" + input.topic + "'");
        out["reasoning"] = "No scripted parent for " + input.topic + ".";
        out["parent"] = nullptr;
        return "<structured_output>\n" + out.dump(4) + "\n</structured_output>";
    }

    std::map<std::string, std::string> offered;
    for (const auto& [parent, children] : input.tree.items()) {
        offered.emplace(text::normalize_label(parent), parent);
        for (const auto& child : children) {
            auto label = child.get<std::string>();
            offered.emplace(text::normalize_label(label), label);
        }
    }
    const auto& path = path_it->second;
    out["reasoning"] = "Planted parent for " + input.topic + ".";
    out["parent"] = nullptr;
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
        if (auto hit = offered.find(text::normalize_label(*it)); hit != offered.end()) {
            out["parent"] = hit->second;
            break;
        }
    }
    return "<structured_output>\n" + out.dump(4) + "\n</structured_output>";
}

std::string MockProvider::answer_classifier(const std::string& message) const {
    if (!script_.product_names)
        throw UnscriptedPromptError("unscripted prompt: product classifier rules are not configured");
    return product_keys_.count(text::normalize_label(message)) ? "yes" : "no";
}

}  // namespace calltopics
