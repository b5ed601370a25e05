#include "padtwin/bridge.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <variant>

namespace padtwin {

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = asio::ip::tcp;

namespace {

using SharedBytes = std::shared_ptr<const protocol::Bytes>;

SharedBytes busy_frame() {
    return std::make_shared<const protocol::Bytes>(
        protocol::encode(protocol::Nack{static_cast<std::uint8_t>(protocol::NackReason::Busy)}));
}

struct Inbound {
    enum Kind { Connected, Data, Closed } kind;
    std::uint64_t session;
    protocol::Bytes bytes;
};

}  // namespace

struct BridgeService::Impl {
    explicit Impl(BridgeConfig c) : cfg(std::move(c)), acceptor(io) {}

    class Session;
    class RawSession;
    class WsSession;

    BridgeConfig cfg;
    asio::io_context io;
    tcp::acceptor acceptor;
    std::thread io_thread;
    std::thread sim_thread;
    std::uint16_t bound_port = 0;

    // I/O thread only.
    std::shared_ptr<Session> active;
    std::uint64_t next_session = 1;

    std::mutex in_mu;
    std::deque<Inbound> inbound;

    std::mutex stop_mu;
    std::condition_variable stop_cv;
    bool stopping = false;
    bool stopped = false;

    mutable std::mutex status_mu;
    BridgeStatus current;

    void push_inbound(Inbound item) {
        std::lock_guard lock(in_mu);
        inbound.push_back(std::move(item));
    }

    void accept();
    void sniff(std::shared_ptr<tcp::socket> socket);
    void start_raw(tcp::socket socket);
    void start_ws(tcp::socket socket);
    void claim(const std::shared_ptr<Session>& s);
    void release(Session& s);
    void deliver(std::uint64_t session, std::vector<SharedBytes> frames);
    void simulate();
};

// A connected client. Lives on the I/O thread; writes are queued so frames
// leave in the order the device emitted them.
class BridgeService::Impl::Session : public std::enable_shared_from_this<Session> {
public:
    Session(Impl& owner, std::uint64_t id) : owner_(owner), id_(id) {}
    virtual ~Session() = default;

    std::uint64_t id() const { return id_; }

    void send(SharedBytes frame) {
        if (closed_) {
            return;
        }
        queue_.push_back(std::move(frame));
        if (queue_.size() == 1) {
            write_next();
        }
    }

    // Sends the frame, then closes.
    void refuse() {
        refusing_ = true;
        send(busy_frame());
    }

    virtual void begin_reading() = 0;

    void on_written(beast::error_code ec) {
        if (closed_) {
            return;  // the queue was dropped when the session failed
        }
        if (ec) {
            fail();
            return;
        }
        queue_.pop_front();
        if (!queue_.empty()) {
            write_next();
        } else if (refusing_) {
            fail();
        }
    }

    void on_bytes(const std::uint8_t* data, std::size_t n) {
        owner_.push_inbound({Inbound::Data, id_, protocol::Bytes(data, data + n)});
    }

    void fail() {
        if (closed_) {
            return;
        }
        closed_ = true;
        queue_.clear();
        shutdown();
        owner_.release(*this);
    }

protected:
    virtual void write_one(const SharedBytes& frame) = 0;
    virtual void shutdown() = 0;

    Impl& owner_;

private:
    void write_next() { write_one(queue_.front()); }

    std::uint64_t id_;
    std::deque<SharedBytes> queue_;
    bool closed_ = false;
    bool refusing_ = false;
};

class BridgeService::Impl::RawSession : public Session {
public:
    RawSession(Impl& owner, std::uint64_t id, tcp::socket socket)
        : Session(owner, id), socket_(std::move(socket)) {}

    void begin_reading() override {
        socket_.async_read_some(asio::buffer(buf_),
                                [self = std::static_pointer_cast<RawSession>(shared_from_this())](
                                    beast::error_code ec, std::size_t n) {
                                    if (ec) {
                                        self->fail();
                                        return;
                                    }
                                    self->on_bytes(self->buf_.data(), n);
                                    self->begin_reading();
                                });
    }

protected:
    void write_one(const SharedBytes& frame) override {
        asio::async_write(socket_, asio::buffer(*frame),
                          [self = shared_from_this(), frame](beast::error_code ec, std::size_t) {
                              self->on_written(ec);
                          });
    }

    void shutdown() override {
        beast::error_code ignored;
        socket_.shutdown(tcp::socket::shutdown_both, ignored);
        socket_.close(ignored);
    }

private:
    tcp::socket socket_;
    std::array<std::uint8_t, 512> buf_{};
};

class BridgeService::Impl::WsSession : public Session {
public:
    WsSession(Impl& owner, std::uint64_t id, websocket::stream<tcp::socket> ws)
        : Session(owner, id), ws_(std::move(ws)) {
        ws_.binary(true);
    }

    void begin_reading() override {
        ws_.async_read(buf_, [self = std::static_pointer_cast<WsSession>(shared_from_this())](
                                 beast::error_code ec, std::size_t) {
            if (ec) {
                self->fail();
                return;
            }
            const auto data = self->buf_.cdata();
            self->on_bytes(static_cast<const std::uint8_t*>(data.data()), data.size());
            self->buf_.consume(self->buf_.size());
            self->begin_reading();
        });
    }

protected:
    void write_one(const SharedBytes& frame) override {
        ws_.async_write(asio::buffer(*frame),
                        [self = shared_from_this(), frame](beast::error_code ec, std::size_t) {
                            self->on_written(ec);
                        });
    }

    void shutdown() override {
        if (ws_.is_open()) {
            ws_.async_close(websocket::close_code::try_again_later,
                            [self = shared_from_this()](beast::error_code) {});
        }
    }

private:
    websocket::stream<tcp::socket> ws_;
    beast::flat_buffer buf_;
};

void BridgeService::Impl::accept() {
    acceptor.async_accept([this](beast::error_code ec, tcp::socket socket) {
        if (ec) {
            if (ec != asio::error::operation_aborted) {
                accept();
            }
            return;
        }
        socket.set_option(tcp::no_delay(true));
        sniff(std::make_shared<tcp::socket>(std::move(socket)));
        accept();
    });
}

void BridgeService::Impl::sniff(std::shared_ptr<tcp::socket> socket) {
    auto timer = std::make_shared<asio::steady_timer>(io, cfg.sniff_timeout);
    auto timed_out = std::make_shared<bool>(false);

    // A silent client is a raw-stream client; the timer only cancels the wait.
    timer->async_wait([socket, timed_out](beast::error_code ec) {
        if (ec) {
            return;
        }
        *timed_out = true;
        beast::error_code ignored;
        socket->cancel(ignored);
    });

    socket->async_wait(tcp::socket::wait_read, [this, socket, timer, timed_out](beast::error_code ec) {
        timer->cancel();
        if (*timed_out) {
            start_raw(std::move(*socket));
            return;
        }
        if (ec) {
            return;
        }
        std::uint8_t first = 0;
        beast::error_code peek_ec;
        const std::size_t n = socket->receive(asio::buffer(&first, 1), tcp::socket::message_peek, peek_ec);
        if (peek_ec || n == 0) {
            return;  // closed before saying anything
        }
        if (first == 'G') {
            start_ws(std::move(*socket));
        } else {
            start_raw(std::move(*socket));
        }
    });
}

void BridgeService::Impl::start_raw(tcp::socket socket) {
    claim(std::make_shared<RawSession>(*this, next_session++, std::move(socket)));
}

void BridgeService::Impl::start_ws(tcp::socket socket) {
    struct Handshake {
        websocket::stream<tcp::socket> ws;
        beast::flat_buffer buffer;
        http::request<http::string_body> request;
    };
    auto hs = std::make_shared<Handshake>(Handshake{websocket::stream<tcp::socket>(std::move(socket)), {}, {}});
    http::async_read(hs->ws.next_layer(), hs->buffer, hs->request, [this, hs](beast::error_code ec, std::size_t) {
        if (ec) {
            return;
        }
        if (!websocket::is_upgrade(hs->request) || hs->request.target() != "/device") {
            auto res = std::make_shared<http::response<http::string_body>>(http::status::not_found,
                                                                            hs->request.version());
            res->set(http::field::content_type, "text/plain");
            res->body() = "websocket endpoint is /device\n";
            res->keep_alive(false);
            res->prepare_payload();
            http::async_write(hs->ws.next_layer(), *res, [hs, res](beast::error_code, std::size_t) {
                beast::error_code ignored;
                hs->ws.next_layer().shutdown(tcp::socket::shutdown_both, ignored);
            });
            return;
        }
        hs->ws.async_accept(hs->request, [this, hs](beast::error_code ec) {
            if (ec) {
                return;
            }
            claim(std::make_shared<WsSession>(*this, next_session++, std::move(hs->ws)));
        });
    });
}

void BridgeService::Impl::claim(const std::shared_ptr<Session>& s) {
    if (active) {
        {
            std::lock_guard lock(status_mu);
            ++current.refused;
        }
        s->refuse();
        return;
    }
    active = s;
    push_inbound({Inbound::Connected, s->id(), {}});
    s->begin_reading();
}

void BridgeService::Impl::release(Session& s) {
    if (active.get() == &s) {
        push_inbound({Inbound::Closed, s.id(), {}});
        active.reset();
    }
}

void BridgeService::Impl::deliver(std::uint64_t session, std::vector<SharedBytes> frames) {
    asio::post(io, [this, session, frames = std::move(frames)]() {
        if (!active || active->id() != session) {
            return;
        }
        for (const auto& f : frames) {
            active->send(f);
        }
    });
}

void BridgeService::Impl::simulate() {
    DeviceConfig dc = cfg.device;
    dc.firmware.secret = cfg.secret;
    Device device(dc);

    std::vector<Event> overlay;
    if (cfg.overlay) {
        for (const auto& ev : cfg.overlay->events) {
            if (std::holds_alternative<InjectFault>(ev.action) || std::holds_alternative<SetAmbient>(ev.action)) {
                overlay.push_back(ev);
            }
        }
    }
    std::size_t next_event = 0;
    const auto apply_overlay = [&] {
        while (next_event < overlay.size() && overlay[next_event].at <= device.time() + 1e-9) {
            const auto& action = overlay[next_event++].action;
            if (const auto* f = std::get_if<InjectFault>(&action)) {
                device.inject(f->fault);
            } else if (const auto* a = std::get_if<SetAmbient>(&action)) {
                device.set_ambient(a->celsius);
            }
        }
    };

    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration<double>(cfg.device.firmware.limits.tick_period() / cfg.time_scale);
    const int substeps =
        static_cast<int>(std::lround(cfg.device.firmware.limits.tick_period() / Device::kPlantDt));
    const auto start = clock::now();
    std::uint64_t session = 0;

    for (std::uint64_t k = 0;; ++k) {
        // Deadlines come from the start time so sleep overshoot does not accumulate.
        const auto deadline = start + std::chrono::duration_cast<clock::duration>(period * static_cast<double>(k));
        {
            std::unique_lock lock(stop_mu);
            if (stop_cv.wait_until(lock, deadline, [this] { return stopping; })) {
                return;
            }
        }

        std::deque<Inbound> batch;
        {
            std::lock_guard lock(in_mu);
            batch.swap(inbound);
        }
        for (auto& item : batch) {
            switch (item.kind) {
            case Inbound::Connected:
                session = item.session;
                device.set_link(true);
                break;
            case Inbound::Data:
                if (item.session == session) {
                    device.receive(item.bytes);
                }
                break;
            case Inbound::Closed:
                if (item.session == session) {
                    session = 0;
                    device.set_link(false);
                }
                break;
            }
        }

        apply_overlay();
        TickOutput out = device.control_tick();
        // Status first, so a client reacting to these frames never sees an older snapshot.
        {
            std::lock_guard lock(status_mu);
            current.sim_time = device.time();
            current.ticks = k + 1;
            current.mode = out.row.mode;
            current.duty = device.snapshot().zone_duty;
            current.coil = device.plant().zone_coil_temp;
            current.soc = device.battery().soc;
            current.link = device.link();
        }
        if (session != 0 && device.link()) {
            std::vector<SharedBytes> frames;
            frames.reserve(out.outbox.size());
            for (const auto& msg : out.outbox) {
                frames.push_back(std::make_shared<const protocol::Bytes>(protocol::encode(msg)));
            }
            deliver(session, std::move(frames));
        }
        for (int j = 0; j < substeps; ++j) {
            if (j > 0) {
                apply_overlay();
            }
            device.substep();
        }
    }
}

void validate(const BridgeConfig& c) {
    if (!(c.time_scale >= 1.0)) {
        throw std::invalid_argument("time_scale must be at least 1");
    }
    if (c.secret.empty() || c.secret.size() > protocol::kMaxSecret) {
        throw std::invalid_argument("secret must be 1..32 bytes");
    }
    if (c.sniff_timeout.count() <= 0) {
        throw std::invalid_argument("sniff_timeout must be positive");
    }
}

BridgeService::BridgeService(BridgeConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {
    validate(impl_->cfg);
    DeviceConfig dc = impl_->cfg.device;
    dc.firmware.secret = impl_->cfg.secret;
    Device probe(dc);  // rejects bad plant parameters and limits up front
}

BridgeService::~BridgeService() {
    stop();
    wait();
}

void BridgeService::start() {
    Impl& m = *impl_;
    const auto address = asio::ip::make_address(m.cfg.host);
    const tcp::endpoint endpoint(address, m.cfg.port);
    m.acceptor.open(endpoint.protocol());
    m.acceptor.set_option(asio::socket_base::reuse_address(true));
    m.acceptor.bind(endpoint);
    m.acceptor.listen();
    m.bound_port = m.acceptor.local_endpoint().port();
    m.accept();
    m.sim_thread = std::thread([&m] { m.simulate(); });
    m.io_thread = std::thread([&m] { m.io.run(); });
}

std::uint16_t BridgeService::port() const { return impl_->bound_port; }

void BridgeService::stop() {
    Impl& m = *impl_;
    {
        std::lock_guard lock(m.stop_mu);
        if (m.stopping) {
            return;
        }
        m.stopping = true;
    }
    m.stop_cv.notify_all();
    asio::post(m.io, [&m] {
        beast::error_code ignored;
        m.acceptor.close(ignored);
        m.io.stop();
    });
}

void BridgeService::wait() {
    Impl& m = *impl_;
    if (m.sim_thread.joinable()) {
        m.sim_thread.join();
    }
    if (m.io_thread.joinable()) {
        m.io_thread.join();
    }
}

void BridgeService::run_until_signal() {
    asio::io_context signals_io;
    asio::signal_set signals(signals_io, SIGINT, SIGTERM);
    signals.async_wait([this](beast::error_code, int) { stop(); });
    if (!impl_->sim_thread.joinable()) {
        start();
    }
    signals_io.run();
    wait();
}

BridgeStatus BridgeService::status() const {
    std::lock_guard lock(impl_->status_mu);
    return impl_->current;
}

}  // namespace padtwin
