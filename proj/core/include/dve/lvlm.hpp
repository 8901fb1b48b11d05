// LVLM access for update generation: wire types, an HTTP client with retries,
// and a deterministic mock for tests and dry runs.
#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dve/errors.hpp"

namespace dve {

struct LvlmMessage {
    std::string role;  // "system" | "user" | "assistant"
    std::string text;
    std::optional<std::string> image_base64;
};

struct LvlmRequest {
    std::string model_id;
    std::vector<LvlmMessage> messages;
    int max_tokens = 256;
};

struct LvlmResponse {
    std::string text;
};

class LvlmClient {
public:
    virtual ~LvlmClient() = default;

    // Returns generated text or throws TransportError (after retries).
    virtual LvlmResponse generate(const LvlmRequest& request) = 0;
};

struct HttpLvlmConfig {
    std::string endpoint;  // host[:port], plain http
    std::string path = "/v1/generate";
    std::string model_id;
    int timeout_seconds = 60;
    int max_retries = 3;
    int backoff_initial_ms = 500;  // doubled per retry
};

// Credentials come from the DVE_LVLM_API_KEY environment variable.
inline constexpr const char* kApiKeyEnvVar = "DVE_LVLM_API_KEY";

// POSTs {"model_id", "messages": [{"role", "text", "image"?}], "max_tokens"}
// and expects {"text": ...} back.
class HttpLvlmClient final : public LvlmClient {
public:
    explicit HttpLvlmClient(HttpLvlmConfig config);

    LvlmResponse generate(const LvlmRequest& request) override;

private:
    HttpLvlmConfig config_;
};

// Response text produced by a user callback; thread-safe as long as the
// callback is. call_count() tracks the total number of generate() calls.
class MockLvlmClient final : public LvlmClient {
public:
    using Responder = std::function<std::string(const LvlmRequest&)>;

    explicit MockLvlmClient(Responder responder);

    LvlmResponse generate(const LvlmRequest& request) override;

    std::size_t call_count() const noexcept { return calls_.load(); }

private:
    Responder responder_;
    std::atomic<std::size_t> calls_{0};
};

std::string base64_encode(const std::string& bytes);

// Serialization of the wire contract (used by the HTTP client and tests).
std::string lvlm_request_to_json(const LvlmRequest& request);
LvlmResponse lvlm_response_from_json(const std::string& body);

}  // namespace dve
