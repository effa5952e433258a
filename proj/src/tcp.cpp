#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <map>
#include <stdexcept>

#include "appa/federation.hpp"

namespace appa {

namespace {

[[noreturn]] void throw_errno(const std::string& what) {
  throw std::runtime_error(what + ": " + std::strerror(errno));
}

void send_all(int fd, const std::string& data) {
  size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw_errno("send");
    }
    off += static_cast<size_t>(n);
  }
}

void send_line(int fd, const Envelope& env) { send_all(fd, encode_envelope(env) + "\n"); }

// buffered line reader over a socket; deadline < 0 means block forever
class LineReader {
 public:
  explicit LineReader(int fd) : fd_(fd) {}

  // returns false on clean EOF with no pending line; throws RoundTimeoutError
  // when the deadline elapses first
  bool read_line(std::string& line, int deadline_ms) {
    while (true) {
      const size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return true;
      }
      if (deadline_ms >= 0) {
        pollfd pfd{fd_, POLLIN, 0};
        const int ready = ::poll(&pfd, 1, deadline_ms);
        if (ready < 0) {
          if (errno == EINTR) continue;
          throw_errno("poll");
        }
        if (ready == 0) throw RoundTimeoutError("deadline elapsed waiting for message");
      }
      char chunk[4096];
      const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw_errno("recv");
      }
      if (n == 0) return false;
      buffer_.append(chunk, static_cast<size_t>(n));
    }
  }

 private:
  int fd_;
  std::string buffer_;
};

int connect_to(const std::string& host, uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &result) != 0)
    throw std::runtime_error("cannot resolve host " + host);
  int fd = -1;
  for (addrinfo* ai = result; ai != nullptr; ai = ai->ai_next) {
    fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(result);
  if (fd < 0) throw std::runtime_error("cannot connect to " + host + ":" + service);
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
  return fd;
}

}  // namespace

struct TcpFederationServer::Impl {
  int listen_fd = -1;
  uint16_t port = 0;
  std::vector<GroupId> expected;
  std::chrono::milliseconds deadline{};
  struct Connection {
    int fd = -1;
    std::unique_ptr<LineReader> reader;
  };
  std::map<GroupId, Connection> connections;

  ~Impl() {
    for (auto& [group, conn] : connections) {
      if (conn.fd >= 0) ::close(conn.fd);
    }
    if (listen_fd >= 0) ::close(listen_fd);
  }
};

TcpFederationServer::TcpFederationServer(uint16_t port, std::vector<GroupId> expected_groups,
                                         std::chrono::milliseconds deadline)
    : impl_(std::make_unique<Impl>()) {
  if (expected_groups.empty()) throw std::invalid_argument("TcpFederationServer: no groups");
  impl_->expected = std::move(expected_groups);
  impl_->deadline = deadline;

  impl_->listen_fd = ::socket(AF_INET, SOCK_STREAM, 0);
  if (impl_->listen_fd < 0) throw_errno("socket");
  const int one = 1;
  ::setsockopt(impl_->listen_fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(port);
  if (::bind(impl_->listen_fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0)
    throw_errno("bind");
  if (::listen(impl_->listen_fd, 16) != 0) throw_errno("listen");

  socklen_t len = sizeof addr;
  if (::getsockname(impl_->listen_fd, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
    throw_errno("getsockname");
  impl_->port = ntohs(addr.sin_port);
}

TcpFederationServer::~TcpFederationServer() = default;

uint16_t TcpFederationServer::port() const { return impl_->port; }

void TcpFederationServer::wait_for_clients() {
  while (impl_->connections.size() < impl_->expected.size()) {
    pollfd pfd{impl_->listen_fd, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(impl_->deadline.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw_errno("poll");
    }
    if (ready == 0) throw RoundTimeoutError("timed out waiting for clients to connect");
    const int fd = ::accept(impl_->listen_fd, nullptr, nullptr);
    if (fd < 0) {
      if (errno == EINTR) continue;
      throw_errno("accept");
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);

    auto reader = std::make_unique<LineReader>(fd);
    std::string line;
    if (!reader->read_line(line, static_cast<int>(impl_->deadline.count()))) {
      ::close(fd);
      continue;
    }
    try {
      const GroupId group{hello_group(decode_envelope(line))};
      const bool expected = std::find(impl_->expected.begin(), impl_->expected.end(), group) !=
                            impl_->expected.end();
      if (!expected || impl_->connections.count(group)) {
        send_line(fd, make_error("unexpected or duplicate group " + group.name()));
        ::close(fd);
        continue;
      }
      impl_->connections.emplace(group, Impl::Connection{fd, std::move(reader)});
    } catch (const WireError& e) {
      send_line(fd, make_error(e.what()));
      ::close(fd);
    }
  }
}

std::vector<GroupId> TcpFederationServer::group_ids() const { return impl_->expected; }

std::vector<RewardReport> TcpFederationServer::exchange(const RolloutBroadcast& broadcast) {
  if (impl_->connections.size() < impl_->expected.size()) wait_for_clients();

  const Envelope rollout = make_rollout(broadcast);
  for (auto& [group, conn] : impl_->connections) send_line(conn.fd, rollout);

  std::vector<RewardReport> reports;
  reports.reserve(impl_->connections.size());
  const auto started = std::chrono::steady_clock::now();
  for (auto& [group, conn] : impl_->connections) {
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    const auto remaining = impl_->deadline - elapsed;
    if (remaining.count() <= 0)
      throw RoundTimeoutError("missing reward report from group " + group.name());
    std::string line;
    bool got;
    try {
      got = conn.reader->read_line(line, static_cast<int>(remaining.count()));
    } catch (const RoundTimeoutError&) {
      throw RoundTimeoutError("missing reward report from group " + group.name());
    }
    if (!got) throw std::runtime_error("connection closed by group " + group.name());
    const Envelope env = decode_envelope(line);
    if (env.type == "error")
      throw std::runtime_error("client error from " + group.name() + ": " +
                               env.payload.value("message", std::string{}));
    if (env.type != "reward_report") {
      send_line(conn.fd, make_error("unknown message type " + env.type));
      throw std::runtime_error("unexpected message type " + env.type + " from " + group.name());
    }
    reports.push_back(decode_reward_report(env));
  }
  return reports;
}

void TcpFederationServer::shutdown() {
  for (auto& [group, conn] : impl_->connections) {
    try {
      send_line(conn.fd, make_shutdown());
    } catch (const std::exception&) {
      // already gone
    }
    ::close(conn.fd);
    conn.fd = -1;
  }
  impl_->connections.clear();
}

void run_group_client(const std::string& host, uint16_t port, const GroupClient& client) {
  const int fd = connect_to(host, port);
  try {
    send_line(fd, make_hello(client.group()));
    LineReader reader(fd);
    std::string line;
    while (reader.read_line(line, -1)) {
      Envelope env;
      try {
        env = decode_envelope(line);
      } catch (const WireError& e) {
        send_line(fd, make_error(e.what()));
        break;
      }
      if (env.type == "shutdown") break;
      if (env.type == "error") break;
      if (env.type != "rollout") {
        send_line(fd, make_error("unknown message type " + env.type));
        break;
      }
      try {
        const RolloutBroadcast broadcast = decode_rollout(env);
        send_line(fd, make_reward_report(client.evaluate(broadcast)));
      } catch (const std::exception& e) {
        send_line(fd, make_error(e.what()));
        break;
      }
    }
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
}

}  // namespace appa
