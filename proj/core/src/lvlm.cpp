#include "dve/lvlm.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"

namespace dve {

std::string base64_encode(const std::string& bytes) {
    static constexpr char kAlphabet[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    while (i + 2 < bytes.size()) {
        const std::uint32_t chunk = (static_cast<std::uint8_t>(bytes[i]) << 16) |
                                    (static_cast<std::uint8_t>(bytes[i + 1]) << 8) |
                                    static_cast<std::uint8_t>(bytes[i + 2]);
        out.push_back(kAlphabet[(chunk >> 18) & 0x3F]);
        out.push_back(kAlphabet[(chunk >> 12) & 0x3F]);
        out.push_back(kAlphabet[(chunk >> 6) & 0x3F]);
        out.push_back(kAlphabet[chunk & 0x3F]);
        i += 3;
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t chunk = static_cast<std::uint8_t>(bytes[i]) << 16;
        out.push_back(kAlphabet[(chunk >> 18) & 0x3F]);
        out.push_back(kAlphabet[(chunk >> 12) & 0x3F]);
        out.append("==");
    } else if (rest == 2) {
        const std::uint32_t chunk = (static_cast<std::uint8_t>(bytes[i]) << 16) |
                                    (static_cast<std::uint8_t>(bytes[i + 1]) << 8);
        out.push_back(kAlphabet[(chunk >> 18) & 0x3F]);
        out.push_back(kAlphabet[(chunk >> 12) & 0x3F]);
        out.push_back(kAlphabet[(chunk >> 6) & 0x3F]);
        out.push_back('=');
    }
    return out;
}

std::string lvlm_request_to_json(const LvlmRequest& request) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& message : request.messages) {
        nlohmann::json m{{"role", message.role}, {"text", message.text}};
        if (message.image_base64.has_value()) {
            m["image"] = *message.image_base64;
        }
        messages.push_back(std::move(m));
    }
    return nlohmann::json{{"model_id", request.model_id},
                          {"messages", std::move(messages)},
                          {"max_tokens", request.max_tokens}}
        .dump();
}

LvlmResponse lvlm_response_from_json(const std::string& body) {
    nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("text") || !parsed["text"].is_string()) {
        throw TransportError("LVLM response is not {\"text\": ...}: " + body.substr(0, 200));
    }
    return LvlmResponse{parsed["text"].get<std::string>()};
}

HttpLvlmClient::HttpLvlmClient(HttpLvlmConfig config) : config_(std::move(config)) {
    if (config_.endpoint.empty()) {
        throw ConfigError("HttpLvlmClient: endpoint not configured");
    }
}

LvlmResponse HttpLvlmClient::generate(const LvlmRequest& request) {
    LvlmRequest outgoing = request;
    if (outgoing.model_id.empty()) outgoing.model_id = config_.model_id;
    const std::string body = lvlm_request_to_json(outgoing);

    httplib::Client client(config_.endpoint);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(kApiKeyEnvVar); key != nullptr && *key != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    std::string last_error;
    int backoff_ms = config_.backoff_initial_ms;
    for (int attempt = 1; attempt <= config_.max_retries; ++attempt) {
        auto result = client.Post(config_.path, headers, body, "application/json");
        if (result && result->status >= 200 && result->status < 300) {
            return lvlm_response_from_json(result->body);
        }
        last_error = result ? "HTTP status " + std::to_string(result->status)
                            : "transport: " + httplib::to_string(result.error());
        if (attempt < config_.max_retries) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
    }
    throw TransportError("LVLM request failed after " + std::to_string(config_.max_retries) +
                         " attempts: " + last_error);
}

MockLvlmClient::MockLvlmClient(Responder responder) : responder_(std::move(responder)) {
    if (!responder_) {
        throw ConfigError("MockLvlmClient: null responder");
    }
}

LvlmResponse MockLvlmClient::generate(const LvlmRequest& request) {
    calls_.fetch_add(1);
    return LvlmResponse{responder_(request)};
}

}  // namespace dve
