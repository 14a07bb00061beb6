#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "l3det/backend.hpp"
#include "l3det/error.hpp"
#include "l3det/hash.hpp"
#include "support.hpp"

using namespace l3det;
using nlohmann::json;

namespace {

HttpBackendOptions options(std::string endpoint) {
    HttpBackendOptions o;
    o.endpoint = std::move(endpoint);
    return o;
}

ChatRequest sample_request() {
    ChatRequest r;
    r.model = "m1";
    r.temperature = 0.0;
    r.max_tokens = 32;
    r.messages = {{Role::System, "sys"}, {Role::User, "hello \"there\""}, {Role::Assistant, "step"}};
    return r;
}

std::string wire_reply(const std::string& content) {
    return json{{"choices", json::array({json{{"message", {{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

/// Chat-completion server on a loopback port for the lifetime of the object.
class LocalServer {
public:
    explicit LocalServer(httplib::Server::Handler handler) {
        server_.Post("/v1/chat/completions", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~LocalServer() {
        server_.stop();
        thread_.join();
    }
    std::string url(const std::string& path = "/v1/chat/completions") const {
        return "http://127.0.0.1:" + std::to_string(port_) + path;
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST(Wire, RequestShape) {
    const auto j = json::parse(to_wire_json(sample_request()));
    EXPECT_EQ(j.at("model"), "m1");
    EXPECT_EQ(j.at("temperature"), 0.0);
    EXPECT_EQ(j.at("max_tokens"), 32);
    ASSERT_EQ(j.at("messages").size(), 3u);
    EXPECT_EQ(j.at("messages")[0].at("role"), "system");
    EXPECT_EQ(j.at("messages")[1].at("content"), "hello \"there\"");
    EXPECT_EQ(j.at("messages")[2].at("role"), "assistant");
}

TEST(Wire, ResponseParsing) {
    EXPECT_EQ(parse_wire_response(wire_reply("Normal")), "Normal");
    EXPECT_EQ(parse_wire_response(R"({"choices":[{"message":{"content":null}}]})"), "");
    EXPECT_THROW((void)parse_wire_response("not json"), BackendError);
    EXPECT_THROW((void)parse_wire_response(R"({"choices":[]})"), BackendError);
    EXPECT_THROW((void)parse_wire_response(R"({"error":"x"})"), BackendError);
}

TEST(RequestHash, StableAndContentSensitive) {
    const auto a = sample_request();
    auto b = a;
    b.model = "other";
    b.temperature = 0.5;
    EXPECT_EQ(request_hash(a.messages), request_hash(b.messages));
    EXPECT_EQ(request_hash(a.messages).size(), 16u);
    b.messages[1].content += " ";
    EXPECT_NE(request_hash(a.messages), request_hash(b.messages));
    auto c = a;
    c.messages[2].role = Role::User;
    EXPECT_NE(request_hash(a.messages), request_hash(c.messages));
    EXPECT_EQ(request_hash({}), to_hex(fnv1a64("")));
}

TEST(Hash, KnownVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(to_hex(0xabcULL), "0000000000000abc");
}

TEST(Mock, FileLookupAndFallback) {
    l3det::test::TempDir dir;
    const auto p = dir / "mock.jsonl";
    const auto req = sample_request();
    {
        std::ofstream out(p);
        out << json{{"hash", request_hash(req.messages)}, {"response", "Anomalous"}}.dump() << "\n\n";
        out << R"({"hash":"*","response":"Normal"})" << "\n";
    }
    auto mock = MockBackend::from_file(p);
    EXPECT_EQ(mock.complete(req), "Anomalous");
    auto other = req;
    other.messages.pop_back();
    EXPECT_EQ(mock.complete(other), "Normal");
    EXPECT_EQ(mock.name(), "mock");
}

TEST(Mock, MissingResponseIsBackendError) {
    MockBackend mock({});
    EXPECT_THROW((void)mock.complete(sample_request()), BackendError);
}

TEST(Mock, MalformedFile) {
    l3det::test::TempDir dir;
    const auto p = dir / "mock.jsonl";
    {
        std::ofstream out(p);
        out << R"({"hash":"*","response":"Normal"})" << "\n" << R"({"hash":"abc"})" << "\n";
    }
    try {
        (void)MockBackend::from_file(p);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
        EXPECT_EQ(e.field(), "response");
    }
    EXPECT_THROW((void)MockBackend::from_file(dir / "nope.jsonl"), Error);
}

TEST(Http, RejectsMalformedEndpoints) {
    for (const char* url : {"", "localhost:8000", "ftp://x/y", "http://", "http://host:99999/x"}) {
        EXPECT_THROW(HttpChatBackend{options(url)}, Error) << url;
    }
    EXPECT_NO_THROW(HttpChatBackend{options("http://localhost:8000")});
}

TEST(Http, RoundTripWithBearerToken) {
    std::string seen_body;
    std::string seen_auth;
    LocalServer server([&](const httplib::Request& req, httplib::Response& res) {
        seen_body = req.body;
        seen_auth = req.get_header_value("Authorization");
        res.set_content(wire_reply("Anomalous: reused TMSI"), "application/json");
    });
    HttpBackendOptions opts;
    opts.endpoint = server.url();
    opts.api_key = "secret";
    HttpChatBackend backend(opts);
    EXPECT_EQ(backend.complete(sample_request()), "Anomalous: reused TMSI");
    EXPECT_EQ(json::parse(seen_body), json::parse(to_wire_json(sample_request())));
    EXPECT_EQ(seen_auth, "Bearer secret");
}

TEST(Http, DefaultPath) {
    LocalServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content(wire_reply("Normal"), "application/json");
    });
    const auto base = server.url("");
    HttpChatBackend backend(options(base));
    EXPECT_EQ(backend.complete(sample_request()), "Normal");
}

TEST(Http, ServerErrorIsBackendError) {
    LocalServer server([](const httplib::Request&, httplib::Response& res) {
        res.status = 500;
        res.set_content("overloaded", "text/plain");
    });
    HttpChatBackend backend(options(server.url()));
    try {
        (void)backend.complete(sample_request());
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_NE(std::string(e.what()).find("HTTP 500"), std::string::npos);
    }
}

TEST(Http, BadBodyIsBackendError) {
    LocalServer server([](const httplib::Request&, httplib::Response& res) {
        res.set_content("{}", "application/json");
    });
    HttpChatBackend backend(options(server.url()));
    EXPECT_THROW((void)backend.complete(sample_request()), BackendError);
}

TEST(Http, UnreachableHostIsBackendError) {
    HttpBackendOptions opts;
    opts.endpoint = "http://127.0.0.1:1/v1/chat/completions";
    opts.timeout = std::chrono::milliseconds(300);
    opts.retries = 1;
    HttpChatBackend backend(opts);
    try {
        (void)backend.complete(sample_request());
        FAIL();
    } catch (const BackendError& e) {
        EXPECT_NE(std::string(e.what()).find("transport failure"), std::string::npos);
        EXPECT_GE(e.elapsed().count(), 0.0);
    }
}
