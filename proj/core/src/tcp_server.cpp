#include "otelbridge/tcp_server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <mutex>
#include <thread>
#include <utility>
#include <vector>

#include "otelbridge/codec.hpp"
#include "otelbridge/registry.hpp"

namespace otelbridge::wire {

namespace {

std::string errno_text(const char* what) {
  return std::string(what) + ": " + std::strerror(errno);
}

}  // namespace

struct TcpIngestServer::Impl {
  ServerConfig config;
  RecordSink sink;
  ServerCounters counters;

  int listen_fd = -1;
  std::uint16_t bound_port = 0;
  std::atomic<bool> stopping{false};
  std::thread accept_thread;

  std::mutex connections_mutex;
  std::vector<int> connection_fds;
  std::vector<std::thread> connection_threads;

  void accept_loop();
  void connection_loop(int fd);
  void close_listener();
};

TcpIngestServer::TcpIngestServer(ServerConfig config, RecordSink sink)
    : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->sink = std::move(sink);
}

TcpIngestServer::~TcpIngestServer() { stop(); }

void TcpIngestServer::start() {
  Impl& impl = *impl_;
  impl.listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (impl.listen_fd < 0) throw BindError(errno_text("socket"));
  const int enable = 1;
  ::setsockopt(impl.listen_fd, SOL_SOCKET, SO_REUSEADDR, &enable, sizeof(enable));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(impl.config.port);
  if (::inet_pton(AF_INET, impl.config.bind_address.c_str(), &addr.sin_addr) != 1) {
    impl.close_listener();
    throw BindError("unparseable bind address: " + impl.config.bind_address);
  }
  if (::bind(impl.listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string text = errno_text("bind");
    impl.close_listener();
    throw BindError(text);
  }
  if (::listen(impl.listen_fd, 64) != 0) {
    const std::string text = errno_text("listen");
    impl.close_listener();
    throw BindError(text);
  }
  sockaddr_in bound{};
  socklen_t bound_len = sizeof(bound);
  ::getsockname(impl.listen_fd, reinterpret_cast<sockaddr*>(&bound), &bound_len);
  impl.bound_port = ntohs(bound.sin_port);

  impl.accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void TcpIngestServer::Impl::close_listener() {
  if (listen_fd >= 0) {
    ::close(listen_fd);
    listen_fd = -1;
  }
}

void TcpIngestServer::Impl::accept_loop() {
  for (;;) {
    const int fd = ::accept(listen_fd, nullptr, nullptr);
    if (fd < 0) {
      if (stopping.load() || (errno != EINTR && errno != ECONNABORTED)) return;
      continue;
    }
    counters.connections_accepted.fetch_add(1);
    std::lock_guard<std::mutex> lock(connections_mutex);
    if (stopping.load()) {
      ::close(fd);
      return;
    }
    connection_fds.push_back(fd);
    connection_threads.emplace_back([this, fd] { connection_loop(fd); });
  }
}

void TcpIngestServer::Impl::connection_loop(int fd) {
  records::StringRegistry registry;
  std::vector<std::uint8_t> buffer(config.read_buffer_bytes);
  std::size_t filled = 0;
  bool poisoned = false;

  while (!poisoned) {
    const ssize_t n = ::recv(fd, buffer.data() + filled, buffer.size() - filled, 0);
    if (n <= 0) {
      // A leftover partial frame means the peer vanished mid-record.
      if (n == 0 && filled > 0) counters.decode_errors.fetch_add(1);
      break;
    }
    counters.bytes_read.fetch_add(static_cast<std::uint64_t>(n));
    filled += static_cast<std::size_t>(n);

    std::size_t offset = 0;
    while (offset < filled) {
      DecodeResult decoded = decode_frame(
          std::span<const std::uint8_t>(buffer.data() + offset, filled - offset), registry);
      if (decoded.status == DecodeStatus::kNeedMoreBytes) {
        if (offset == 0 && filled == buffer.size()) {
          // Frame larger than the read buffer can never complete.
          counters.decode_errors.fetch_add(1);
          poisoned = true;
        }
        break;
      }
      if (decoded.status != DecodeStatus::kOk) {
        counters.decode_errors.fetch_add(1);
        poisoned = true;
        break;
      }
      offset += decoded.consumed;
      if (decoded.record.has_value()) {
        counters.records_decoded.fetch_add(1);
        if (!sink(std::move(*decoded.record))) {
          poisoned = true;
          break;
        }
      } else {
        counters.registry_entries.fetch_add(1);
      }
    }
    if (offset > 0) {
      std::memmove(buffer.data(), buffer.data() + offset, filled - offset);
      filled -= offset;
    }
  }

  ::shutdown(fd, SHUT_RDWR);
  ::close(fd);
  counters.connections_closed.fetch_add(1);
  std::lock_guard<std::mutex> lock(connections_mutex);
  for (auto it = connection_fds.begin(); it != connection_fds.end(); ++it) {
    if (*it == fd) {
      connection_fds.erase(it);
      break;
    }
  }
}

void TcpIngestServer::stop() {
  Impl& impl = *impl_;
  if (impl.stopping.exchange(true)) {
    if (impl.accept_thread.joinable()) impl.accept_thread.join();
    return;
  }
  if (impl.listen_fd >= 0) ::shutdown(impl.listen_fd, SHUT_RDWR);
  {
    std::lock_guard<std::mutex> lock(impl.connections_mutex);
    for (int fd : impl.connection_fds) ::shutdown(fd, SHUT_RDWR);
  }
  if (impl.accept_thread.joinable()) impl.accept_thread.join();
  std::vector<std::thread> workers;
  {
    std::lock_guard<std::mutex> lock(impl.connections_mutex);
    workers.swap(impl.connection_threads);
  }
  for (std::thread& worker : workers) {
    if (worker.joinable()) worker.join();
  }
  impl.close_listener();
}

std::uint16_t TcpIngestServer::port() const { return impl_->bound_port; }

const ServerCounters& TcpIngestServer::counters() const { return impl_->counters; }

}  // namespace otelbridge::wire
