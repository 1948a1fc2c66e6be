#pragma once

// Minimal push-only WebSocket server (RFC 6455 text frames). Each client
// gets the most recent published message; intermediate messages are
// skipped for clients that fall behind.

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <list>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "interocept/error.hpp"

namespace interocept {

namespace ws {

inline std::string accept_key(const std::string& client_key) {
  const std::string src = client_key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11";
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(src.data(), src.size(), digest, &len, EVP_sha1(), nullptr);
  std::string out(4 * ((len + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), digest, static_cast<int>(len));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

/// Unmasked server-to-client frame.
inline std::string encode_frame(const std::string& payload, std::uint8_t opcode = 0x1) {
  std::string f;
  f.push_back(static_cast<char>(0x80 | opcode));
  const std::uint64_t n = payload.size();
  if (n < 126) {
    f.push_back(static_cast<char>(n));
  } else if (n <= 0xFFFF) {
    f.push_back(static_cast<char>(126));
    f.push_back(static_cast<char>((n >> 8) & 0xFF));
    f.push_back(static_cast<char>(n & 0xFF));
  } else {
    f.push_back(static_cast<char>(127));
    for (int s = 56; s >= 0; s -= 8) f.push_back(static_cast<char>((n >> s) & 0xFF));
  }
  f += payload;
  return f;
}

inline bool send_all(int fd, const std::string& data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n = ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

inline std::string header_value(const std::string& request, const std::string& name) {
  std::string lower = request;
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::string key = "\r\n" + name + ":";
  for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto pos = lower.find(key);
  if (pos == std::string::npos) return {};
  auto start = pos + key.size();
  const auto end = request.find("\r\n", start);
  while (start < end && request[start] == ' ') ++start;
  std::string v = request.substr(start, end - start);
  while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.pop_back();
  return v;
}

}  // namespace ws

class WebSocketHub {
 public:
  explicit WebSocketHub(std::string path = "/stream") : path_(std::move(path)) {}
  WebSocketHub(const WebSocketHub&) = delete;
  WebSocketHub& operator=(const WebSocketHub&) = delete;
  ~WebSocketHub() { stop(); }

  /// Binds and starts accepting. Port 0 picks a free port.
  void start(const std::string& host, int port) {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw Error(ErrorCode::BindFailure, "socket() failed");
    int yes = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    const std::string h = host == "localhost" ? "127.0.0.1" : host;
    if (::inet_pton(AF_INET, h.c_str(), &addr.sin_addr) != 1) {
      close_listen();
      throw Error(ErrorCode::BindFailure, "bad address " + host);
    }
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(listen_fd_, 16) != 0) {
      close_listen();
      throw Error(ErrorCode::BindFailure, "cannot bind websocket " + host + ":" + std::to_string(port));
    }
    socklen_t len = sizeof addr;
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
  }

  int port() const noexcept { return port_; }

  void publish(std::string message) {
    {
      std::lock_guard lock(mutex_);
      latest_ = std::move(message);
      ++seq_;
    }
    cv_.notify_all();
  }

  std::size_t client_count() const {
    std::lock_guard lock(mutex_);
    std::size_t n = 0;
    for (const auto& c : clients_) n += c->alive ? 1 : 0;
    return n;
  }

  void stop() {
    if (!running_.exchange(false)) return;
    if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
    close_listen();
    cv_.notify_all();
    if (acceptor_.joinable()) acceptor_.join();
    std::list<std::shared_ptr<Client>> clients;
    {
      std::lock_guard lock(mutex_);
      clients.swap(clients_);
    }
    for (auto& c : clients) {
      ::shutdown(c->fd, SHUT_RDWR);
      if (c->writer.joinable()) c->writer.join();
      ::close(c->fd);
    }
  }

 private:
  struct Client {
    int fd = -1;
    std::atomic<bool> alive{true};
    std::thread writer;
  };

  void close_listen() {
    if (listen_fd_ >= 0) ::close(listen_fd_);
    listen_fd_ = -1;
  }

  void accept_loop() {
    const int fd_listen = listen_fd_;
    while (running_) {
      pollfd p{fd_listen, POLLIN, 0};
      if (::poll(&p, 1, 100) <= 0) continue;
      const int fd = ::accept(fd_listen, nullptr, nullptr);
      if (fd < 0) continue;
      if (!handshake(fd)) {
        ::close(fd);
        continue;
      }
      auto client = std::make_shared<Client>();
      client->fd = fd;
      std::lock_guard lock(mutex_);
      clients_.push_back(client);
      client->writer = std::thread([this, client] { write_loop(*client); });
    }
  }

  bool handshake(int fd) {
    std::string req;
    char buf[1024];
    while (req.find("\r\n\r\n") == std::string::npos && req.size() < 8192) {
      pollfd p{fd, POLLIN, 0};
      if (::poll(&p, 1, 2000) <= 0) return false;
      const ssize_t n = ::recv(fd, buf, sizeof buf, 0);
      if (n <= 0) return false;
      req.append(buf, static_cast<std::size_t>(n));
    }
    const auto line_end = req.find("\r\n");
    const std::string request_line = req.substr(0, line_end);
    const std::string key = ws::header_value(req, "Sec-WebSocket-Key");
    if (request_line.rfind("GET " + path_ + " ", 0) != 0 || key.empty()) {
      ws::send_all(fd, "HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\nConnection: close\r\n\r\n");
      return false;
    }
    return ws::send_all(fd, "HTTP/1.1 101 Switching Protocols\r\nUpgrade: websocket\r\nConnection: Upgrade\r\n"
                            "Sec-WebSocket-Accept: " + ws::accept_key(key) + "\r\n\r\n");
  }

  void write_loop(Client& c) {
    std::uint64_t sent_seq = 0;
    while (running_ && c.alive) {
      std::string msg;
      {
        std::unique_lock lock(mutex_);
        cv_.wait_for(lock, std::chrono::milliseconds(200), [&] { return !running_ || seq_ != sent_seq; });
        if (!running_) break;
        if (seq_ == sent_seq) continue;
        msg = latest_;
        sent_seq = seq_;
      }
      // drain anything the client sent (pings, close) without blocking
      char sink[512];
      const ssize_t r = ::recv(c.fd, sink, sizeof sink, MSG_DONTWAIT);
      if (r == 0) break;
      if (!ws::send_all(c.fd, ws::encode_frame(msg))) break;
    }
    c.alive = false;
  }

  std::string path_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> running_{false};
  std::thread acceptor_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::string latest_;
  std::uint64_t seq_ = 0;
  std::list<std::shared_ptr<Client>> clients_;
};

}  // namespace interocept
