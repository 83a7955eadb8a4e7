#include <gtest/gtest.h>

#include <fstream>
#include <thread>

#include "voicerelay/net/http_suggester.hpp"
#include "voicerelay/net/server.hpp"

using namespace voicerelay;
using namespace voicerelay::net;
using namespace std::chrono_literals;

namespace {

class Harness {
public:
    explicit Harness(RelayOptions opts, std::filesystem::path static_dir = {})
        : sched_(ioc_, clock_), relay_(std::move(opts), sched_, nullptr, nullptr, metrics_) {
        ServerOptions so;
        so.http = {asio::ip::make_address("127.0.0.1"), 0};
        so.line = tcp::endpoint{asio::ip::make_address("127.0.0.1"), 0};
        so.static_dir = std::move(static_dir);
        server_.emplace(ioc_, relay_, so);
        server_->start();
        thread_ = std::thread([this] { ioc_.run(); });
    }

    ~Harness() {
        asio::post(ioc_, [this] { server_->stop(); });
        guard_.reset();
        ioc_.stop();
        thread_.join();
    }

    std::uint16_t http_port() const { return server_->http_port(); }
    std::uint16_t line_port() const { return server_->line_port(); }
    MetricsStore& metrics() { return metrics_; }

private:
    asio::io_context ioc_;
    std::optional<asio::executor_work_guard<asio::io_context::executor_type>> guard_{ioc_.get_executor()};
    SystemClock clock_;
    MetricsStore metrics_;
    AsioScheduler sched_;
    Relay relay_;
    std::optional<Server> server_;
    std::thread thread_;
};

class WsClient {
public:
    WsClient(std::uint16_t port, const std::string& target) : ws_(ioc_) {
        tcp::resolver r(ioc_);
        asio::connect(ws_.next_layer(), r.resolve("127.0.0.1", std::to_string(port)));
        ws_.handshake("127.0.0.1", target);
    }

    void send(const WireMessage& m) { ws_.write(asio::buffer(encode(m))); }

    WireMessage next() {
        beast::flat_buffer b;
        ws_.read(b);
        return decode(beast::buffers_to_string(b.data()));
    }

    WireMessage next_of(MessageType t) {
        for (;;) {
            auto m = next();
            if (m.type == t) return m;
        }
    }

private:
    asio::io_context ioc_;
    websocket::stream<tcp::socket> ws_;
};

WireMessage utterance(const std::string& text) {
    return {MessageType::user_utterance, 0, {}, {}, {}, {{"text", text}}};
}

RelayOptions fast_options() {
    RelayOptions o;
    o.token = "t0k";
    o.deadlines.worker_budget = 1500ms;
    o.deadlines.suggestion_lock = 500ms;
    o.deadlines.warning_at_remaining = 1000ms;
    return o;
}

std::string http_get(std::uint16_t port, const std::string& target, unsigned* status) {
    asio::io_context ioc;
    beast::tcp_stream stream(ioc);
    tcp::resolver r(ioc);
    stream.connect(r.resolve("127.0.0.1", std::to_string(port)));
    http::request<http::empty_body> req{http::verb::get, target, 11};
    req.set(http::field::host, "127.0.0.1");
    http::write(stream, req);
    beast::flat_buffer b;
    http::response<http::string_body> res;
    http::read(stream, b, res);
    *status = res.result_int();
    return res.body();
}

}  // namespace

TEST(ParseTarget, PathAndQuery) {
    auto t = parse_target("/device?token=a%20b&x=1&flag");
    EXPECT_EQ(t.path, "/device");
    EXPECT_EQ(t.query["token"], "a b");
    EXPECT_EQ(t.query["x"], "1");
    EXPECT_EQ(t.query["flag"], "");
    EXPECT_EQ(parse_target("/console").path, "/console");
    EXPECT_EQ(role_for_path("/console"), Role::console);
    EXPECT_EQ(role_for_path("/other"), std::nullopt);
}

TEST(ParseEndpoint, HostPort) {
    auto ep = parse_endpoint("127.0.0.1:9000");
    EXPECT_EQ(ep.port(), 9000);
    EXPECT_EQ(parse_endpoint(":81").address().to_string(), "0.0.0.0");
    EXPECT_THROW(parse_endpoint("nohost"), std::invalid_argument);
    EXPECT_THROW(parse_endpoint("1.2.3.4:99999"), std::invalid_argument);
    EXPECT_THROW(parse_endpoint("bad host:80"), std::invalid_argument);
}

TEST(ResolveStatic, StaysInsideRoot) {
    const auto root = std::filesystem::temp_directory_path() / "vr_static_resolve";
    std::filesystem::create_directories(root / "sub");
    std::ofstream(root / "index.html") << "x";
    EXPECT_EQ(resolve_static(root, "/"), root / "index.html");
    EXPECT_EQ(resolve_static(root, "/index.html"), root / "index.html");
    EXPECT_EQ(resolve_static(root, "/../etc/passwd"), std::nullopt);
    EXPECT_EQ(resolve_static(root, "/sub"), std::nullopt);
    EXPECT_EQ(resolve_static({}, "/index.html"), std::nullopt);
    EXPECT_EQ(mime_type("a.js"), "application/javascript");
}

TEST(Server, WebSocketTurnEndToEnd) {
    Harness h(fast_options());
    WsClient console(h.http_port(), "/console?token=t0k");
    WsClient device(h.http_port(), "/device?token=t0k");
    device.send(utterance("Alexa, open EchoPal"));
    EXPECT_EQ(device.next().type, MessageType::skill_open);
    device.send(utterance("how many bones are in my hand"));
    auto bundle = console.next_of(MessageType::transcript_bundle);
    EXPECT_EQ(bundle.payload["original"], "how many bones are in my hand");
    EXPECT_EQ(bundle.turn_id, "s1-t1");
    auto ding = console.next();
    EXPECT_EQ(ding.payload["kind"], "new_message_ding");
    console.send({MessageType::worker_action, 1, "s1", "s1-t1", {}, action_payload(WorkerAction::press_default(0))});
    auto resp = device.next();
    ASSERT_EQ(resp.type, MessageType::system_response);
    EXPECT_EQ(resp.payload["text"], "Yes, I agree.");
    EXPECT_EQ(resp.payload["kind"], "default_button");
    auto mirrored = console.next_of(MessageType::system_response);
    EXPECT_EQ(mirrored.payload["text"], resp.payload["text"]);
}

TEST(Server, DeadlineFiresOnRealClock) {
    Harness h(fast_options());
    WsClient device(h.http_port(), "/device?token=t0k");
    device.send(utterance("open echopal"));
    device.next();
    const auto t0 = std::chrono::steady_clock::now();
    device.send(utterance("hello"));
    auto resp = device.next();
    const auto waited = std::chrono::steady_clock::now() - t0;
    ASSERT_EQ(resp.type, MessageType::system_response);
    EXPECT_EQ(resp.payload["kind"], "timeout_default");
    EXPECT_GE(waited, 1400ms);
    EXPECT_LT(waited, 3000ms);
    const auto latency = resp.payload["latency_ms"].get<std::int64_t>();
    EXPECT_GE(latency, 1500);
    EXPECT_LE(latency, 1500 + 100);
}

TEST(Server, RejectsBadToken) {
    Harness h(fast_options());
    EXPECT_THROW(WsClient(h.http_port(), "/device?token=nope"), boost::system::system_error);
    EXPECT_THROW(WsClient(h.http_port(), "/device"), boost::system::system_error);
    EXPECT_THROW(WsClient(h.http_port(), "/elsewhere?token=t0k"), boost::system::system_error);
}

TEST(Server, ServesStaticAssets) {
    const auto root = std::filesystem::temp_directory_path() / "vr_static_serve";
    std::filesystem::create_directories(root);
    std::ofstream(root / "index.html") << "<!doctype html><title>console</title>";
    std::ofstream(root / "app.js") << "console.log(1);";
    Harness h(fast_options(), root);
    unsigned status = 0;
    EXPECT_EQ(http_get(h.http_port(), "/", &status), "<!doctype html><title>console</title>");
    EXPECT_EQ(status, 200u);
    EXPECT_EQ(http_get(h.http_port(), "/app.js", &status), "console.log(1);");
    http_get(h.http_port(), "/missing.js", &status);
    EXPECT_EQ(status, 404u);
    http_get(h.http_port(), "/../secret", &status);
    EXPECT_EQ(status, 404u);
}

TEST(Server, ServesShippedConsolePage) {
    const std::filesystem::path root = std::filesystem::path(VOICERELAY_SOURCE_DIR) / "tools" / "console";
    Harness h(fast_options(), root);
    unsigned status = 0;
    const auto body = http_get(h.http_port(), "/", &status);
    EXPECT_EQ(status, 200u);
    EXPECT_NE(body.find("/console"), std::string::npos);
}

TEST(Server, LineFallbackCarriesSamePayloads) {
    Harness h(fast_options());
    asio::io_context ioc;
    tcp::socket sock(ioc);
    sock.connect({asio::ip::make_address("127.0.0.1"), h.line_port()});
    asio::streambuf buf;
    auto read_line = [&] {
        asio::read_until(sock, buf, '\n');
        std::istream is(&buf);
        std::string line;
        std::getline(is, line);
        return line;
    };
    asio::write(sock, asio::buffer(std::string("/device?token=t0k\n")));
    asio::write(sock, asio::buffer(encode(utterance("open echopal")) + "\n"));
    auto open = decode(read_line());
    EXPECT_EQ(open.type, MessageType::skill_open);
    EXPECT_EQ(open.seq, 1u);
    asio::write(sock, asio::buffer(encode(utterance("stop")) + "\n"));
    auto close = decode(read_line());
    EXPECT_EQ(close.type, MessageType::skill_close);
    EXPECT_EQ(close.seq, 2u);

    tcp::socket bad(ioc);
    bad.connect({asio::ip::make_address("127.0.0.1"), h.line_port()});
    asio::write(bad, asio::buffer(std::string("/device?token=wrong\n")));
    asio::streambuf b2;
    asio::read_until(bad, b2, '\n');
    std::istream is(&b2);
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "ERR bad token");
}

TEST(HttpSuggester, PostsQueryAndReadsText) {
    httplib::Server svc;
    std::string seen;
    svc.Post("/suggest", [&](const httplib::Request& req, httplib::Response& res) {
        seen = req.body;
        auto j = nlohmann::json::parse(req.body);
        res.set_content(nlohmann::json{{"text", "echo: " + j["utterance"].get<std::string>()}}.dump(), "application/json");
    });
    svc.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
    const int port = svc.bind_to_any_port("127.0.0.1");
    std::thread t([&] { svc.listen_after_bind(); });
    svc.wait_until_ready();

    HttpSuggester ok("http://127.0.0.1:" + std::to_string(port) + "/suggest");
    EXPECT_EQ(ok.suggest({"how are you", 1, 2, "s1-t1"}), "echo: how are you");
    auto body = nlohmann::json::parse(seen);
    EXPECT_EQ(body["variant_index"], 1);
    EXPECT_EQ(body["slot"], 2);
    EXPECT_EQ(body["turn_id"], "s1-t1");
    HttpSuggester broken("http://127.0.0.1:" + std::to_string(port) + "/broken");
    EXPECT_EQ(broken.suggest({"x", 0, 1, "t"}), std::nullopt);
    svc.stop();
    t.join();
    EXPECT_EQ(ok.suggest({"x", 0, 1, "t"}), std::nullopt);  // server gone
    EXPECT_THROW(HttpSuggester("ftp://x"), std::invalid_argument);
}
