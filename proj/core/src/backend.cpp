#include "l3det/backend.hpp"

#include <fstream>
#include <regex>

#include <httplib.h>
#include <json.hpp>

#include "l3det/error.hpp"
#include "l3det/hash.hpp"

namespace l3det {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::chrono::duration<double, std::milli> since(Clock::time_point start) {
    return Clock::now() - start;
}

}  // namespace

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string to_wire_json(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) {
        messages.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    }
    json body = {
        {"model", request.model},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
        {"messages", std::move(messages)},
    };
    return body.dump();
}

std::string parse_wire_response(std::string_view body) {
    json obj;
    try {
        obj = json::parse(body);
    } catch (const json::parse_error& e) {
        throw BackendError(std::string("response is not JSON: ") + e.what(), {});
    }
    try {
        const auto& content = obj.at("choices").at(0).at("message").at("content");
        if (content.is_null()) return {};
        return content.get<std::string>();
    } catch (const json::exception&) {
        throw BackendError("response lacks choices[0].message.content", {});
    }
}

std::string request_hash(const std::vector<ChatMessage>& messages) {
    std::string key;
    for (const auto& m : messages) {
        key += to_string(m.role);
        key += '\x1f';
        key += m.content;
        key += '\x1e';
    }
    return to_hex(fnv1a64(key));
}

HttpChatBackend::HttpChatBackend(HttpBackendOptions options) : options_(std::move(options)) {
    static const std::regex url(R"(^(https?)://([^/:]+)(:([0-9]{1,5}))?(/.*)?$)", std::regex::icase);
    std::smatch m;
    if (!std::regex_match(options_.endpoint, m, url)) {
        throw Error(ErrorKind::Configuration, "malformed endpoint URL '" + options_.endpoint + "'");
    }
    std::string scheme = m[1].str();
    for (auto& c : scheme) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (scheme == "https") throw Error(ErrorKind::Configuration, "built without TLS support; use http://");
#endif
    if (m[4].matched && std::stoul(m[4].str()) > 65535) {
        throw Error(ErrorKind::Configuration, "endpoint port out of range");
    }
    scheme_host_port_ = scheme + "://" + m[2].str() + (m[3].matched ? m[3].str() : "");
    path_ = m[5].matched ? m[5].str() : "/v1/chat/completions";
    if (options_.timeout.count() <= 0) throw Error(ErrorKind::Configuration, "timeout must be positive");
    if (options_.retries < 0) throw Error(ErrorKind::Configuration, "retries must be non-negative");
}

std::string HttpChatBackend::complete(const ChatRequest& request) {
    const auto start = Clock::now();
    const std::string body = to_wire_json(request);

    // One client per call keeps complete() safe under concurrent use.
    httplib::Client client(scheme_host_port_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    if (options_.api_key) client.set_bearer_token_auth(*options_.api_key);

    std::string last_error;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
        auto res = client.Post(path_, body, "application/json");
        if (!res) {
            last_error = "transport failure: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            throw BackendError("HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200),
                               since(start));
        }
        try {
            return parse_wire_response(res->body);
        } catch (const BackendError& e) {
            throw BackendError(e.what(), since(start));
        }
    }
    throw BackendError(last_error, since(start));
}

MockBackend::MockBackend(std::map<std::string, std::string> responses, std::optional<std::string> fallback)
    : responses_(std::move(responses)), fallback_(std::move(fallback)) {}

MockBackend MockBackend::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
    std::map<std::string, std::string> responses;
    std::optional<std::string> fallback;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(line_no, "<mock>", std::string("invalid JSON: ") + e.what());
        }
        for (const char* f : {"hash", "response"}) {
            if (!obj.is_object() || !obj.contains(f)) throw ParseError(line_no, f, "missing mandatory field");
            if (!obj.at(f).is_string()) throw ParseError(line_no, f, "expected a string");
        }
        auto hash = obj.at("hash").get<std::string>();
        auto response = obj.at("response").get<std::string>();
        if (hash == "*") {
            fallback = std::move(response);
        } else {
            responses.insert_or_assign(std::move(hash), std::move(response));
        }
    }
    return MockBackend(std::move(responses), std::move(fallback));
}

std::string MockBackend::complete(const ChatRequest& request) {
    const auto key = request_hash(request.messages);
    if (const auto it = responses_.find(key); it != responses_.end()) return it->second;
    if (fallback_) return *fallback_;
    throw BackendError("mock has no response for request " + key, {});
}

}  // namespace l3det
