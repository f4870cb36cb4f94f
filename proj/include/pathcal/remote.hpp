#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "pathcal/logit_source.hpp"

namespace pathcal {

// Newline-delimited JSON over TCP. Each request line {"ids":[...]} carries
// the full history; the reply is {"logits":[...]} or {"error":"..."}.
// Replies come back one per request, in order.

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  // "host:port" or ":port".
  static Endpoint parse(std::string_view text);
  std::string str() const { return host + ":" + std::to_string(port); }
};

// Handles one request line (without the newline) and returns the reply line.
std::string handle_request_line(const LogitSource& source, std::string_view line);

class LogitServer {
 public:
  // Port 0 binds an ephemeral port; see port().
  LogitServer(std::shared_ptr<const LogitSource> source, Endpoint endpoint, int threads = 0);
  ~LogitServer();
  LogitServer(const LogitServer&) = delete;
  LogitServer& operator=(const LogitServer&) = delete;

  std::uint16_t port() const;
  // Serves on background threads until stop().
  void start();
  // Serves on the calling thread (plus helpers) until stop() from elsewhere.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Blocking request/reply client on one connection. Not thread-safe.
class LogitClient {
 public:
  LogitClient(Endpoint endpoint, std::chrono::milliseconds timeout);
  ~LogitClient();
  LogitClient(const LogitClient&) = delete;
  LogitClient& operator=(const LogitClient&) = delete;

  // Throws ConnectionError, TimeoutError, or BackendUnavailable on an error frame.
  LogitRow request(std::span<const TokenId> ids);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// LogitSource backed by a LogitServer. Cursors own their own connection;
// direct next_logits calls share one mutex-guarded connection.
class RemoteSource final : public LogitSource {
 public:
  // Probes the server with an empty history to learn the vocabulary size.
  RemoteSource(Endpoint endpoint, TokenId eos_id,
               std::chrono::milliseconds timeout = std::chrono::seconds(10),
               std::vector<std::string> token_strings = {});

  std::size_t vocab_size() const override { return vocab_size_; }
  TokenId eos_id() const override { return eos_id_; }
  LogitRow next_logits(std::span<const TokenId> history) const override;
  std::unique_ptr<DecodeCursor> start(std::span<const TokenId> prompt) const override;
  std::vector<std::string> token_strings() const override { return token_strings_; }
  std::vector<TokenId> answer_correct_ids() const override { return correct_ids_; }
  void set_answer_correct_ids(std::vector<TokenId> ids) { correct_ids_ = std::move(ids); }

 private:
  Endpoint endpoint_;
  TokenId eos_id_;
  std::chrono::milliseconds timeout_;
  std::vector<std::string> token_strings_;
  std::vector<TokenId> correct_ids_;
  std::size_t vocab_size_ = 0;
  mutable std::mutex mu_;
  mutable std::unique_ptr<LogitClient> shared_client_;
};

std::unique_ptr<RemoteSource> remote_source(const Endpoint& endpoint, TokenId eos_id,
                                            std::chrono::milliseconds timeout);

}  // namespace pathcal
