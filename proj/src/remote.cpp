#include "pathcal/remote.hpp"

#include <atomic>
#include <boost/asio.hpp>
#include <charconv>
#include <optional>

#include "json.hpp"

namespace pathcal {

namespace asio = boost::asio;
using asio::ip::tcp;
using nlohmann::json;

namespace {
constexpr std::size_t kMaxLine = 64u << 20;
}

Endpoint Endpoint::parse(std::string_view text) {
  auto colon = text.rfind(':');
  if (colon == std::string_view::npos) throw ConfigError("endpoint must be host:port");
  Endpoint ep;
  if (colon > 0) ep.host = std::string(text.substr(0, colon));
  auto port_text = text.substr(colon + 1);
  unsigned value = 0;
  auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), value);
  if (ec != std::errc() || ptr != port_text.data() + port_text.size() || value > 65535) {
    throw ConfigError("bad port in endpoint '" + std::string(text) + "'");
  }
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

std::string handle_request_line(const LogitSource& source, std::string_view line) {
  std::vector<TokenId> ids;
  try {
    auto req = json::parse(line);
    const auto& arr = req.at("ids");
    if (!arr.is_array()) return R"({"error":"bad_request"})";
    ids.reserve(arr.size());
    for (const auto& v : arr) {
      if (!v.is_number_integer()) return R"({"error":"bad_request"})";
      const auto id = v.get<std::int64_t>();
      if (id < 0 || static_cast<std::uint64_t>(id) >= source.vocab_size()) {
        return R"({"error":"bad_request"})";
      }
      ids.push_back(static_cast<TokenId>(id));
    }
  } catch (const json::exception&) {
    return R"({"error":"bad_request"})";
  }
  try {
    return json{{"logits", source.next_logits(ids)}}.dump();
  } catch (const std::exception&) {
    return R"({"error":"internal"})";
  }
}

// ---------------------------------------------------------------------------
// Server

namespace {

class Connection : public std::enable_shared_from_this<Connection> {
 public:
  Connection(tcp::socket socket, std::shared_ptr<const LogitSource> source)
      : socket_(std::move(socket)), source_(std::move(source)), buffer_(kMaxLine) {}

  void start() { read_next(); }

 private:
  void read_next() {
    auto self = shared_from_this();
    asio::async_read_until(socket_, buffer_, '\n',
                           [self](boost::system::error_code ec, std::size_t n) {
                             if (ec) return;  // peer closed or line too long
                             self->on_line(n);
                           });
  }

  void on_line(std::size_t n) {
    std::string line(asio::buffers_begin(buffer_.data()),
                     asio::buffers_begin(buffer_.data()) + static_cast<std::ptrdiff_t>(n));
    buffer_.consume(n);
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    reply_ = handle_request_line(*source_, line);
    reply_ += '\n';
    auto self = shared_from_this();
    asio::async_write(socket_, asio::buffer(reply_),
                      [self](boost::system::error_code ec, std::size_t) {
                        if (!ec) self->read_next();
                      });
  }

  tcp::socket socket_;
  std::shared_ptr<const LogitSource> source_;
  asio::streambuf buffer_;
  std::string reply_;
};

}  // namespace

struct LogitServer::Impl {
  std::shared_ptr<const LogitSource> source;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::optional<asio::executor_work_guard<asio::io_context::executor_type>> work;
  std::vector<std::thread> threads;
  int thread_count = 1;

  void accept() {
    acceptor.async_accept([this](boost::system::error_code ec, tcp::socket socket) {
      if (ec) return;  // acceptor closed
      std::make_shared<Connection>(std::move(socket), source)->start();
      accept();
    });
  }
};

LogitServer::LogitServer(std::shared_ptr<const LogitSource> source, Endpoint endpoint,
                         int threads)
    : impl_(std::make_unique<Impl>()) {
  impl_->source = std::move(source);
  impl_->thread_count =
      threads > 0 ? threads : std::max(1u, std::thread::hardware_concurrency());
  try {
    tcp::resolver resolver(impl_->io);
    auto results = resolver.resolve(endpoint.host, std::to_string(endpoint.port));
    tcp::endpoint ep = *results.begin();
    impl_->acceptor.open(ep.protocol());
    impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
    impl_->acceptor.bind(ep);
    impl_->acceptor.listen();
  } catch (const boost::system::system_error& e) {
    throw ConnectionError("cannot bind " + endpoint.str() + ": " + e.what());
  }
  impl_->accept();
}

LogitServer::~LogitServer() { stop(); }

std::uint16_t LogitServer::port() const { return impl_->acceptor.local_endpoint().port(); }

void LogitServer::start() {
  impl_->work.emplace(impl_->io.get_executor());
  for (int i = 0; i < impl_->thread_count; ++i) {
    impl_->threads.emplace_back([this] { impl_->io.run(); });
  }
}

void LogitServer::run() {
  impl_->work.emplace(impl_->io.get_executor());
  for (int i = 1; i < impl_->thread_count; ++i) {
    impl_->threads.emplace_back([this] { impl_->io.run(); });
  }
  impl_->io.run();
}

void LogitServer::stop() {
  if (!impl_) return;
  impl_->work.reset();
  impl_->io.stop();
  for (auto& t : impl_->threads) {
    if (t.joinable() && t.get_id() != std::this_thread::get_id()) t.join();
  }
  impl_->threads.clear();
}

// ---------------------------------------------------------------------------
// Client

struct LogitClient::Impl {
  asio::io_context io;
  tcp::socket socket{io};
  asio::streambuf buffer{kMaxLine};
  std::chrono::milliseconds timeout;

  // Runs the io_context until `done` or the deadline; closes the socket on
  // timeout so the pending operation completes with an error.
  void run_until(const bool& done) {
    io.restart();
    io.run_for(timeout);
    if (!done) {
      boost::system::error_code ignored;
      socket.close(ignored);
      io.restart();
      io.run();
      throw TimeoutError("remote backend did not answer within " +
                         std::to_string(timeout.count()) + " ms");
    }
  }
};

LogitClient::LogitClient(Endpoint endpoint, std::chrono::milliseconds timeout)
    : impl_(std::make_unique<Impl>()) {
  impl_->timeout = timeout;
  boost::system::error_code ec;
  tcp::resolver resolver(impl_->io);
  auto results = resolver.resolve(endpoint.host, std::to_string(endpoint.port), ec);
  if (ec) throw ConnectionError("cannot resolve " + endpoint.str() + ": " + ec.message());
  bool done = false;
  boost::system::error_code connect_ec;
  asio::async_connect(impl_->socket, results,
                      [&](boost::system::error_code e, const tcp::endpoint&) {
                        connect_ec = e;
                        done = true;
                      });
  impl_->run_until(done);
  if (connect_ec) {
    throw ConnectionError("cannot connect to " + endpoint.str() + ": " + connect_ec.message());
  }
  impl_->socket.set_option(tcp::no_delay(true));
}

LogitClient::~LogitClient() = default;

LogitRow LogitClient::request(std::span<const TokenId> ids) {
  if (!impl_->socket.is_open()) throw ConnectionError("connection closed");
  std::string line = json{{"ids", std::vector<TokenId>(ids.begin(), ids.end())}}.dump();
  line += '\n';

  bool done = false;
  boost::system::error_code io_ec;
  asio::async_write(impl_->socket, asio::buffer(line),
                    [&](boost::system::error_code e, std::size_t) {
                      if (e) {
                        io_ec = e;
                        done = true;
                        return;
                      }
                      asio::async_read_until(impl_->socket, impl_->buffer, '\n',
                                             [&](boost::system::error_code e2, std::size_t) {
                                               io_ec = e2;
                                               done = true;
                                             });
                    });
  impl_->run_until(done);
  if (io_ec) throw ConnectionError("remote backend connection failed: " + io_ec.message());

  std::istream in(&impl_->buffer);
  std::string reply;
  std::getline(in, reply);
  try {
    auto j = json::parse(reply);
    if (j.contains("error")) {
      throw BackendUnavailable("remote backend error: " + j.at("error").get<std::string>());
    }
    return j.at("logits").get<LogitRow>();
  } catch (const json::exception& e) {
    throw ConnectionError(std::string("malformed reply from remote backend: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// RemoteSource

namespace {

class RemoteCursor final : public DecodeCursor {
 public:
  RemoteCursor(const Endpoint& endpoint, std::chrono::milliseconds timeout,
               std::span<const TokenId> prompt)
      : client_(endpoint, timeout), history_(prompt.begin(), prompt.end()) {}
  LogitRow next_logits() override { return client_.request(history_); }
  void push(TokenId tok) override { history_.push_back(tok); }

 private:
  LogitClient client_;
  std::vector<TokenId> history_;
};

}  // namespace

RemoteSource::RemoteSource(Endpoint endpoint, TokenId eos_id, std::chrono::milliseconds timeout,
                           std::vector<std::string> token_strings)
    : endpoint_(std::move(endpoint)), eos_id_(eos_id), timeout_(timeout),
      token_strings_(std::move(token_strings)) {
  shared_client_ = std::make_unique<LogitClient>(endpoint_, timeout_);
  vocab_size_ = shared_client_->request({}).size();
  if (vocab_size_ == 0) throw BackendUnavailable("remote backend returned an empty row");
  if (eos_id_ < 0 || static_cast<std::size_t>(eos_id_) >= vocab_size_) {
    throw ConfigError("eos id out of range for remote vocabulary");
  }
}

LogitRow RemoteSource::next_logits(std::span<const TokenId> history) const {
  std::lock_guard lock(mu_);
  if (!shared_client_) shared_client_ = std::make_unique<LogitClient>(endpoint_, timeout_);
  try {
    return shared_client_->request(history);
  } catch (const ConnectionError&) {
    shared_client_.reset();
    throw;
  } catch (const TimeoutError&) {
    shared_client_.reset();
    throw;
  }
}

std::unique_ptr<DecodeCursor> RemoteSource::start(std::span<const TokenId> prompt) const {
  return std::make_unique<RemoteCursor>(endpoint_, timeout_, prompt);
}

std::unique_ptr<RemoteSource> remote_source(const Endpoint& endpoint, TokenId eos_id,
                                            std::chrono::milliseconds timeout) {
  return std::make_unique<RemoteSource>(endpoint, eos_id, timeout);
}

}  // namespace pathcal
