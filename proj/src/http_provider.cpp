#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>

#include "calltopics/error.hpp"
#include "calltopics/providers.hpp"

namespace calltopics {

using nlohmann::json;

namespace {

bool retryable_status(int status) { return status == 429 || status >= 500; }

std::chrono::microseconds as_duration(double seconds) {
    return std::chrono::microseconds{static_cast<long long>(seconds * 1e6)};
}

}  // namespace

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.embedding_model.empty()) config_.embedding_model = config_.model_name;
    if (!config_.api_key_env_var.empty()) {
        const char* key = std::getenv(config_.api_key_env_var.c_str());
        if (key == nullptr || *key == '\0')
            throw ConfigError("API key environment variable '" + config_.api_key_env_var + "' is not set");
        api_key_ = key;
    }
    static const std::regex url(R"(^(https?://[^/]+)(/\S*)?$)");
    std::smatch m;
    std::regex_match(config_.endpoint_url, m, url);
    scheme_host_port_ = m[1].str();
    path_prefix_ = m[2].str();
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

HttpProvider::Reply HttpProvider::post_json(const std::string& route, const json& payload) const {
    const auto body = payload.dump();
    const auto path = path_prefix_ + route;
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    int attempts = 0;
    int last_status = 0;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(as_duration(config_.retry_backoff_seconds * std::ldexp(1.0, attempt - 1)));
        ++attempts;

        // One client per request keeps concurrent calls independent.
        httplib::Client client(scheme_host_port_);
        client.set_connection_timeout(as_duration(config_.timeout_seconds));
        client.set_read_timeout(as_duration(config_.timeout_seconds));
        client.set_write_timeout(as_duration(config_.timeout_seconds));

        auto res = client.Post(path, headers, body, "application/json");
        if (!res) {
            last_status = 0;
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        last_status = res->status;
        if (res->status >= 200 && res->status < 300) {
            try {
                return {json::parse(res->body), attempts};
            } catch (const json::parse_error& e) {
                throw ProviderError(std::string("provider returned non-JSON body: ") + e.what(), attempts,
                                    res->status, true);
            }
        }
        last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
        if (!retryable_status(res->status))
            throw ProviderError("provider rejected request (" + last_error + ")", attempts, res->status, true);
    }
    throw ProviderError("provider request to " + path + " failed after " + std::to_string(attempts) +
                            " attempts (" + last_error + ")",
                        attempts, last_status, false);
}

ChatResponse HttpProvider::chat(const ChatRequest& request) const {
    request.validate();
    json payload = {{"model", config_.model_name},
                    {"messages", json::array({{{"role", "system"}, {"content", request.system_prompt}},
                                              {{"role", "user"}, {"content", request.user_message}}})},
                    {"temperature", request.temperature},
                    {"max_tokens", request.max_output_tokens}};
    auto reply = post_json("/chat/completions", payload);

    ChatResponse response;
    try {
        const auto& message = reply.body.at("choices").at(0).at("message");
        response.text = message.at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed chat completion: ") + e.what(), reply.attempts, 200, true);
    }
    response.provider_meta["model"] = reply.body.value("model", config_.model_name);
    response.provider_meta["attempts"] = std::to_string(reply.attempts);
    if (reply.body.contains("usage") && reply.body["usage"].is_object()) {
        for (const auto& [key, value] : reply.body["usage"].items())
            if (value.is_number_integer()) response.provider_meta[key] = std::to_string(value.get<long long>());
    }
    return response;
}

std::vector<EmbeddingVector> HttpProvider::embed(const std::vector<std::string>& texts) const {
    if (texts.empty()) return {};
    auto reply = post_json("/embeddings", {{"model", config_.embedding_model}, {"input", texts}});

    std::vector<EmbeddingVector> out(texts.size());
    try {
        const auto& data = reply.body.at("data");
        if (data.size() != texts.size())
            throw ProviderError("embedding count mismatch", reply.attempts, 200, true);
        for (std::size_t i = 0; i < data.size(); ++i) {
            auto index = data[i].value("index", i);
            if (index >= out.size()) throw ProviderError("embedding index out of range", reply.attempts, 200, true);
            out[index].values = data[i].at("embedding").get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed embeddings reply: ") + e.what(), reply.attempts, 200, true);
    }
    const auto dim = out.front().dimension();
    for (const auto& v : out) {
        if (v.dimension() == 0 || v.dimension() != dim)
            throw ProviderError("embeddings have inconsistent dimensions", reply.attempts, 200, true);
        if (!std::all_of(v.values.begin(), v.values.end(), [](double x) { return std::isfinite(x); }))
            throw ProviderError("embedding has non-finite components", reply.attempts, 200, true);
    }
    return out;
}

}  // namespace calltopics
