#pragma once

// Network front end for a Relay: WebSocket endpoints /device and /console,
// static files for the console, and a line-delimited TCP fallback. Everything
// touching the relay runs on one io_context thread; suggester calls are
// offloaded to a thread pool.

#include <cstdint>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include "voicerelay/relay.hpp"
#include "voicerelay/scheduler.hpp"

namespace voicerelay::net {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

/// Scheduler on a real clock: timers on the io_context, blocking work on a
/// thread pool whose results are posted back to the io_context.
class AsioScheduler final : public Scheduler {
public:
    AsioScheduler(asio::io_context& ioc, const Clock& clock, std::size_t workers = 4)
        : ioc_(ioc), clock_(clock), pool_(workers) {}

    ~AsioScheduler() override { pool_.join(); }

    TimePoint now() const override { return clock_.now(); }

    TimerId at(TimePoint when, std::function<void()> fn) override {
        const TimerId id = ++next_id_;
        auto timer = std::make_shared<asio::steady_timer>(ioc_);
        const auto delay = when - clock_.now();
        timer->expires_after(delay > Duration::zero() ? delay : Duration::zero());
        timers_.emplace(id, timer);
        timer->async_wait([this, id, fn = std::move(fn)](const boost::system::error_code& ec) {
            auto it = timers_.find(id);
            if (ec || it == timers_.end()) return;
            timers_.erase(it);
            fn();
        });
        return id;
    }

    void cancel(TimerId id) override {
        auto it = timers_.find(id);
        if (it == timers_.end()) return;
        it->second->cancel();
        timers_.erase(it);
    }

    void offload(std::function<std::function<void()>()> work) override {
        asio::post(pool_, [this, work = std::move(work)] {
            auto cont = work();
            if (cont) asio::post(ioc_, std::move(cont));
        });
    }

    std::size_t pending() const { return timers_.size(); }

private:
    asio::io_context& ioc_;
    const Clock& clock_;
    asio::thread_pool pool_;
    std::map<TimerId, std::shared_ptr<asio::steady_timer>> timers_;
    TimerId next_id_ = 0;
};

inline std::string percent_decode(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '%' && i + 2 < s.size()) {
            const auto hex = std::string(s.substr(i + 1, 2));
            char* end = nullptr;
            const long v = std::strtol(hex.c_str(), &end, 16);
            if (end == hex.c_str() + 2) {
                out += static_cast<char>(v);
                i += 2;
                continue;
            }
        }
        out += s[i] == '+' ? ' ' : s[i];
    }
    return out;
}

struct Target {
    std::string path;
    std::map<std::string, std::string> query;
};

/// Splits "/path?a=1&b=2" into path and decoded query parameters.
inline Target parse_target(std::string_view target) {
    Target t;
    const auto q = target.find('?');
    t.path = percent_decode(target.substr(0, q));
    if (q == std::string_view::npos) return t;
    auto rest = target.substr(q + 1);
    while (!rest.empty()) {
        const auto amp = rest.find('&');
        const auto part = rest.substr(0, amp);
        const auto eq = part.find('=');
        if (!part.empty())
            t.query[percent_decode(part.substr(0, eq))] = eq == std::string_view::npos ? "" : percent_decode(part.substr(eq + 1));
        if (amp == std::string_view::npos) break;
        rest = rest.substr(amp + 1);
    }
    return t;
}

inline std::optional<Role> role_for_path(std::string_view path) {
    if (path == "/device") return Role::device;
    if (path == "/console") return Role::console;
    return std::nullopt;
}

inline std::string_view mime_type(const std::filesystem::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
    if (ext == ".js" || ext == ".mjs") return "application/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".svg") return "image/svg+xml";
    if (ext == ".png") return "image/png";
    if (ext == ".wav") return "audio/wav";
    if (ext == ".mp3") return "audio/mpeg";
    if (ext == ".ogg") return "audio/ogg";
    return "application/octet-stream";
}

/// Maps a request path into `root`, or nullopt if it escapes it.
inline std::optional<std::filesystem::path> resolve_static(const std::filesystem::path& root, std::string_view path) {
    if (root.empty() || path.empty() || path.front() != '/') return std::nullopt;
    std::filesystem::path rel(std::string(path.substr(1)));
    for (const auto& part : rel)
        if (part == "..") return std::nullopt;
    auto full = root / rel;
    std::error_code ec;
    if (std::filesystem::is_directory(full, ec)) full /= "index.html";
    if (!std::filesystem::is_regular_file(full, ec)) return std::nullopt;
    return full;
}

struct ServerOptions {
    tcp::endpoint http{asio::ip::make_address("127.0.0.1"), 8080};
    std::optional<tcp::endpoint> line;  // line-delimited TCP fallback
    std::filesystem::path static_dir;   // console assets; empty disables
};

class Server;

namespace detail {

class WsSession : public std::enable_shared_from_this<WsSession> {
public:
    WsSession(tcp::socket socket, Relay& relay) : ws_(std::move(socket)), relay_(relay) {}

    void start(http::request<http::string_body> req, Role role) {
        role_ = role;
        ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
        ws_.async_accept(req, beast::bind_front_handler(&WsSession::on_accept, shared_from_this()));
    }

private:
    void on_accept(beast::error_code ec) {
        if (ec) return;
        id_ = relay_.connect(role_, [weak = weak_from_this()](const std::string& s) {
            if (auto self = weak.lock()) self->enqueue(s);
        });
        connected_ = true;
        read();
    }

    void read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsSession::on_read, shared_from_this())); }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) {
            drop();
            return;
        }
        relay_.on_message(id_, beast::buffers_to_string(buffer_.data()));
        buffer_.consume(buffer_.size());
        read();
    }

    void enqueue(const std::string& s) {
        queue_.push_back(s);
        if (queue_.size() == 1) write();
    }

    void write() {
        ws_.text(true);
        ws_.async_write(asio::buffer(queue_.front()), beast::bind_front_handler(&WsSession::on_write, shared_from_this()));
    }

    void on_write(beast::error_code ec, std::size_t) {
        if (ec) {
            drop();
            return;
        }
        queue_.pop_front();
        if (!queue_.empty()) write();
    }

    void drop() {
        if (!connected_) return;
        connected_ = false;
        queue_.clear();
        relay_.disconnect(id_);
    }

    websocket::stream<beast::tcp_stream> ws_;
    Relay& relay_;
    Role role_ = Role::device;
    ConnectionId id_ = 0;
    bool connected_ = false;
    beast::flat_buffer buffer_;
    std::deque<std::string> queue_;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
public:
    HttpSession(tcp::socket socket, Relay& relay, std::filesystem::path static_dir)
        : stream_(std::move(socket)), relay_(relay), static_dir_(std::move(static_dir)) {}

    void start() { read(); }

private:
    void read() {
        req_ = {};
        stream_.expires_after(std::chrono::seconds(30));
        http::async_read(stream_, buffer_, req_, beast::bind_front_handler(&HttpSession::on_read, shared_from_this()));
    }

    void on_read(beast::error_code ec, std::size_t) {
        if (ec) return;
        const auto target = parse_target(std::string_view(req_.target().data(), req_.target().size()));
        if (websocket::is_upgrade(req_)) {
            const auto role = role_for_path(target.path);
            if (!role) return reply(http::status::not_found, "unknown endpoint\n");
            auto tok = target.query.find("token");
            if (!relay_.authorize(tok == target.query.end() ? "" : tok->second))
                return reply(http::status::unauthorized, "bad token\n");
            stream_.expires_never();
            std::make_shared<WsSession>(stream_.release_socket(), relay_)->start(std::move(req_), *role);
            return;
        }
        if (req_.method() != http::verb::get && req_.method() != http::verb::head)
            return reply(http::status::method_not_allowed, "method not allowed\n");
        const auto file = resolve_static(static_dir_, target.path);
        if (!file) return reply(http::status::not_found, "not found\n");
        http::response<http::file_body> res{http::status::ok, req_.version()};
        beast::error_code fec;
        res.body().open(file->string().c_str(), beast::file_mode::scan, fec);
        if (fec) return reply(http::status::internal_server_error, "cannot read file\n");
        res.set(http::field::content_type, std::string(mime_type(*file)));
        res.keep_alive(req_.keep_alive());
        res.prepare_payload();
        send(std::move(res));
    }

    void reply(http::status status, std::string body) {
        http::response<http::string_body> res{status, req_.version()};
        res.set(http::field::content_type, "text/plain");
        res.keep_alive(req_.keep_alive());
        res.body() = std::move(body);
        res.prepare_payload();
        send(std::move(res));
    }

    template <class Body>
    void send(http::response<Body> res) {
        auto sp = std::make_shared<http::response<Body>>(std::move(res));
        http::async_write(stream_, *sp, [self = shared_from_this(), sp](beast::error_code ec, std::size_t) {
            if (ec) return;
            if (sp->need_eof()) {
                beast::error_code ignored;
                self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                return;
            }
            self->read();
        });
    }

    beast::tcp_stream stream_;
    Relay& relay_;
    std::filesystem::path static_dir_;
    beast::flat_buffer buffer_;
    http::request<http::string_body> req_;
};

/// First line: "/device?token=..." or "/console?token=...". Then one JSON
/// message per line in both directions.
class LineSession : public std::enable_shared_from_this<LineSession> {
public:
    LineSession(tcp::socket socket, Relay& relay) : socket_(std::move(socket)), relay_(relay) {}
    void start() { read(); }

private:
    void read() {
        asio::async_read_until(socket_, buffer_, '\n', beast::bind_front_handler(&LineSession::on_line, shared_from_this()));
    }

    void on_line(beast::error_code ec, std::size_t n) {
        if (ec) {
            drop();
            return;
        }
        std::string line(asio::buffers_begin(buffer_.data()), asio::buffers_begin(buffer_.data()) + static_cast<std::ptrdiff_t>(n));
        buffer_.consume(n);
        while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
        if (!connected_) {
            if (!handshake(line)) return;
        } else if (!line.empty()) {
            relay_.on_message(id_, line);
        }
        read();
    }

    bool handshake(const std::string& line) {
        const auto target = parse_target(line);
        const auto role = role_for_path(target.path);
        auto tok = target.query.find("token");
        if (!role || !relay_.authorize(tok == target.query.end() ? "" : tok->second)) {
            auto self = shared_from_this();
            auto msg = std::make_shared<std::string>(!role ? "ERR unknown endpoint\n" : "ERR bad token\n");
            asio::async_write(socket_, asio::buffer(*msg), [self, msg](beast::error_code, std::size_t) {
                beast::error_code ignored;
                self->socket_.shutdown(tcp::socket::shutdown_both, ignored);
            });
            return false;
        }
        id_ = relay_.connect(*role, [weak = weak_from_this()](const std::string& s) {
            if (auto self = weak.lock()) self->enqueue(s + "\n");
        });
        connected_ = true;
        return true;
    }

    void enqueue(std::string s) {
        queue_.push_back(std::move(s));
        if (queue_.size() == 1) write();
    }

    void write() {
        asio::async_write(socket_, asio::buffer(queue_.front()),
                          [self = shared_from_this()](beast::error_code ec, std::size_t) {
                              if (ec) {
                                  self->drop();
                                  return;
                              }
                              self->queue_.pop_front();
                              if (!self->queue_.empty()) self->write();
                          });
    }

    void drop() {
        if (!connected_) return;
        connected_ = false;
        queue_.clear();
        relay_.disconnect(id_);
    }

    tcp::socket socket_;
    Relay& relay_;
    asio::streambuf buffer_;
    ConnectionId id_ = 0;
    bool connected_ = false;
    std::deque<std::string> queue_;
};

}  // namespace detail

/// Accepts connections for a Relay. Call start(), then run the io_context.
class Server {
public:
    Server(asio::io_context& ioc, Relay& relay, ServerOptions opts)
        : ioc_(ioc), relay_(relay), opts_(std::move(opts)), http_acceptor_(ioc) {}

    void start() {
        open(http_acceptor_, opts_.http);
        accept_http();
        if (opts_.line) {
            line_acceptor_.emplace(ioc_);
            open(*line_acceptor_, *opts_.line);
            accept_line();
        }
    }

    void stop() {
        beast::error_code ignored;
        http_acceptor_.close(ignored);
        if (line_acceptor_) line_acceptor_->close(ignored);
    }

    std::uint16_t http_port() const { return http_acceptor_.local_endpoint().port(); }
    std::uint16_t line_port() const { return line_acceptor_ ? line_acceptor_->local_endpoint().port() : 0; }

private:
    static void open(tcp::acceptor& a, const tcp::endpoint& ep) {
        a.open(ep.protocol());
        a.set_option(asio::socket_base::reuse_address(true));
        a.bind(ep);
        a.listen(asio::socket_base::max_listen_connections);
    }

    void accept_http() {
        http_acceptor_.async_accept(asio::make_strand(ioc_), [this](beast::error_code ec, tcp::socket socket) {
            if (ec == asio::error::operation_aborted) return;
            if (!ec) std::make_shared<detail::HttpSession>(std::move(socket), relay_, opts_.static_dir)->start();
            accept_http();
        });
    }

    void accept_line() {
        line_acceptor_->async_accept(ioc_, [this](beast::error_code ec, tcp::socket socket) {
            if (ec == asio::error::operation_aborted) return;
            if (!ec) std::make_shared<detail::LineSession>(std::move(socket), relay_)->start();
            accept_line();
        });
    }

    asio::io_context& ioc_;
    Relay& relay_;
    ServerOptions opts_;
    tcp::acceptor http_acceptor_;
    std::optional<tcp::acceptor> line_acceptor_;
};

/// Parses "host:port".
inline tcp::endpoint parse_endpoint(std::string_view s) {
    const auto colon = s.rfind(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("expected host:port, got '" + std::string(s) + "'");
    const std::string host(s.substr(0, colon));
    const std::string port(s.substr(colon + 1));
    std::size_t used = 0;
    unsigned long p = 0;
    try {
        p = std::stoul(port, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != port.size() || p > 65535) throw std::invalid_argument("bad port in '" + std::string(s) + "'");
    boost::system::error_code ec;
    auto addr = asio::ip::make_address(host.empty() ? "0.0.0.0" : host, ec);
    if (ec) throw std::invalid_argument("bad address in '" + std::string(s) + "'");
    return {addr, static_cast<std::uint16_t>(p)};
}

}  // namespace voicerelay::net
