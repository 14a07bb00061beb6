#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace l3det {

enum class Role { System, User, Assistant };

std::string_view to_string(Role role) noexcept;

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ChatRequest {
    std::string model;
    double temperature = 0.0;
    int max_tokens = 64;
    std::vector<ChatMessage> messages;
};

/// {"model":..,"temperature":..,"max_tokens":..,"messages":[{"role","content"}..]}
std::string to_wire_json(const ChatRequest& request);

/// Assistant text under choices[0].message.content.
/// Throws BackendError when the body does not have that shape.
std::string parse_wire_response(std::string_view body);

/// Stable key of a message sequence, used to look up canned responses.
/// Depends only on roles and contents, not on model or sampling settings.
std::string request_hash(const std::vector<ChatMessage>& messages);

/// A chat-completion service. Implementations must tolerate concurrent
/// complete() calls. Failures are reported as BackendError.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

struct HttpBackendOptions {
    /// Full URL of the completions resource, e.g.
    /// http://localhost:8000/v1/chat/completions
    std::string endpoint;
    std::chrono::milliseconds timeout{10'000};
    std::optional<std::string> api_key;
    /// Extra attempts after a transport failure.
    int retries = 0;
};

/// Name of the environment variable holding a bearer token.
inline constexpr const char* kApiKeyEnv = "L3DET_API_KEY";

/// OpenAI-style chat completions over HTTP(S).
class HttpChatBackend final : public ChatBackend {
public:
    /// Throws Error{Configuration} on a malformed endpoint URL.
    explicit HttpChatBackend(HttpBackendOptions options);

    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "chat"; }

private:
    HttpBackendOptions options_;
    std::string scheme_host_port_;
    std::string path_;
};

/// Replays canned responses keyed by request_hash(). Lines of the mock file:
///   {"hash": "<16 hex digits>", "response": "..."}
/// A line with "hash": "*" supplies the response for unknown requests.
class MockBackend final : public ChatBackend {
public:
    MockBackend(std::map<std::string, std::string> responses,
                std::optional<std::string> fallback = std::nullopt);

    static MockBackend from_file(const std::filesystem::path& path);
    static MockBackend constant(std::string response) { return MockBackend({}, std::move(response)); }

    std::string complete(const ChatRequest& request) override;
    std::string name() const override { return "mock"; }

private:
    std::map<std::string, std::string> responses_;
    std::optional<std::string> fallback_;
};

/// Adapter over a callable; handy for tests and scripted studies.
class FunctionBackend final : public ChatBackend {
public:
    using Fn = std::function<std::string(const ChatRequest&)>;
    explicit FunctionBackend(Fn fn, std::string name = "function")
        : fn_(std::move(fn)), name_(std::move(name)) {}

    std::string complete(const ChatRequest& request) override { return fn_(request); }
    std::string name() const override { return name_; }

private:
    Fn fn_;
    std::string name_;
};

}  // namespace l3det
