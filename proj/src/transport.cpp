#include "transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <stdexcept>

#include "silofuse/error.hpp"

namespace silofuse::transport {

namespace {
constexpr const char* kModule = "silo-protocol";

class BlockingQueue {
 public:
  void push(WireFrame frame) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(frame));
    }
    cv_.notify_one();
  }

  WireFrame pop() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return !queue_.empty(); });
    WireFrame frame = std::move(queue_.front());
    queue_.pop_front();
    return frame;
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<WireFrame> queue_;
};

struct InProcessShared {
  explicit InProcessShared(int64_t clients) : to_coord(clients), to_client(clients) {}
  std::vector<BlockingQueue> to_coord;
  std::vector<BlockingQueue> to_client;
};

class InProcessEndpoint : public ClientEndpoint {
 public:
  InProcessEndpoint(std::shared_ptr<InProcessShared> shared, int client)
      : shared_(std::move(shared)), client_(client) {}

  void send(const WireFrame& frame) override {
    shared_->to_coord[static_cast<size_t>(client_ - 1)].push(frame);
  }

  WireFrame recv() override {
    WireFrame frame = shared_->to_client[static_cast<size_t>(client_ - 1)].pop();
    if (frame.kind == 0) throw Error(kModule, "transport", "coordinator aborted");
    return frame;
  }

 private:
  std::shared_ptr<InProcessShared> shared_;
  int client_;
};

class InProcessHub : public CoordinatorHub {
 public:
  explicit InProcessHub(std::shared_ptr<InProcessShared> shared) : shared_(std::move(shared)) {}

  void send_to(int client, const WireFrame& frame) override {
    shared_->to_client[static_cast<size_t>(client - 1)].push(frame);
  }

  WireFrame recv_from(int client) override {
    WireFrame frame = shared_->to_coord[static_cast<size_t>(client - 1)].pop();
    if (frame.kind == 0) {
      throw Error(kModule, "transport", "client " + std::to_string(client) + " aborted");
    }
    return frame;
  }

  void poison_all() override {
    for (auto& q : shared_->to_client) q.push(WireFrame{});
  }

 private:
  std::shared_ptr<InProcessShared> shared_;
};

// --- TCP ---------------------------------------------------------------------

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      close_fd();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }
  ~Socket() { close_fd(); }

  int fd() const { return fd_; }

  void write_all(const void* data, size_t len) {
    const char* p = static_cast<const char*>(data);
    while (len > 0) {
      const ssize_t n = ::send(fd_, p, len, MSG_NOSIGNAL);
      if (n <= 0) throw Error(kModule, "transport", "tcp send failed");
      p += n;
      len -= static_cast<size_t>(n);
    }
  }

  void read_all(void* data, size_t len) {
    char* p = static_cast<char*>(data);
    while (len > 0) {
      const ssize_t n = ::recv(fd_, p, len, 0);
      if (n <= 0) throw Error(kModule, "transport", "tcp peer closed");
      p += n;
      len -= static_cast<size_t>(n);
    }
  }

 private:
  void close_fd() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }
  int fd_ = -1;
};

// Wire format: 4-byte big-endian length prefix covering everything after it,
// then 1-byte kind, 2-byte sender, 2-byte receiver, 4-byte round (all
// big-endian), then the raw little-endian scalar payload.
void write_frame(Socket& sock, const WireFrame& frame) {
  const uint32_t body_len =
      static_cast<uint32_t>(1 + 2 + 2 + 4 + frame.scalars.size() * sizeof(double));
  std::vector<char> buf(4 + body_len);
  const uint32_t len_be = htonl(body_len);
  std::memcpy(buf.data(), &len_be, 4);
  buf[4] = static_cast<char>(frame.kind);
  const uint16_t sender_be = htons(frame.sender);
  const uint16_t receiver_be = htons(frame.receiver);
  const uint32_t round_be = htonl(frame.round);
  std::memcpy(buf.data() + 5, &sender_be, 2);
  std::memcpy(buf.data() + 7, &receiver_be, 2);
  std::memcpy(buf.data() + 9, &round_be, 4);
  std::memcpy(buf.data() + 13, frame.scalars.data(), frame.scalars.size() * sizeof(double));
  sock.write_all(buf.data(), buf.size());
}

WireFrame read_frame(Socket& sock) {
  uint32_t len_be = 0;
  sock.read_all(&len_be, 4);
  const uint32_t body_len = ntohl(len_be);
  if (body_len < 9) throw Error(kModule, "transport", "short frame");
  std::vector<char> buf(body_len);
  sock.read_all(buf.data(), buf.size());
  WireFrame frame;
  frame.kind = static_cast<uint8_t>(buf[0]);
  uint16_t sender_be, receiver_be;
  uint32_t round_be;
  std::memcpy(&sender_be, buf.data() + 1, 2);
  std::memcpy(&receiver_be, buf.data() + 3, 2);
  std::memcpy(&round_be, buf.data() + 5, 4);
  frame.sender = ntohs(sender_be);
  frame.receiver = ntohs(receiver_be);
  frame.round = ntohl(round_be);
  const size_t payload_bytes = body_len - 9;
  if (payload_bytes % sizeof(double) != 0) {
    throw Error(kModule, "transport", "payload is not a whole number of scalars");
  }
  frame.scalars.resize(payload_bytes / sizeof(double));
  std::memcpy(frame.scalars.data(), buf.data() + 9, payload_bytes);
  return frame;
}

class TcpEndpoint : public ClientEndpoint {
 public:
  explicit TcpEndpoint(Socket sock) : sock_(std::move(sock)) {}

  void send(const WireFrame& frame) override { write_frame(sock_, frame); }

  WireFrame recv() override {
    WireFrame frame = read_frame(sock_);
    if (frame.kind == 0) throw Error(kModule, "transport", "coordinator aborted");
    return frame;
  }

 private:
  Socket sock_;
};

class TcpHub : public CoordinatorHub {
 public:
  explicit TcpHub(std::vector<Socket> sockets) : sockets_(std::move(sockets)) {}

  void send_to(int client, const WireFrame& frame) override {
    write_frame(sockets_[static_cast<size_t>(client - 1)], frame);
  }

  WireFrame recv_from(int client) override {
    WireFrame frame = read_frame(sockets_[static_cast<size_t>(client - 1)]);
    if (frame.kind == 0) {
      throw Error(kModule, "transport", "client " + std::to_string(client) + " aborted");
    }
    return frame;
  }

  void poison_all() override {
    for (auto& sock : sockets_) {
      try {
        WireFrame poison;
        write_frame(sock, poison);
      } catch (const Error&) {
        // peer already gone
      }
    }
  }

 private:
  std::vector<Socket> sockets_;
};

}  // namespace

Link make_in_process_link(int64_t clients) {
  auto shared = std::make_shared<InProcessShared>(clients);
  Link link;
  link.hub = std::make_unique<InProcessHub>(shared);
  for (int64_t i = 1; i <= clients; ++i) {
    link.endpoints.push_back(std::make_unique<InProcessEndpoint>(shared, static_cast<int>(i)));
  }
  return link;
}

Link make_tcp_link(int64_t clients) {
  Socket listener(::socket(AF_INET, SOCK_STREAM, 0));
  if (listener.fd() < 0) throw Error(kModule, "transport", "cannot create listener");
  const int one = 1;
  ::setsockopt(listener.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  if (::bind(listener.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    throw Error(kModule, "transport", "cannot bind loopback listener");
  }
  socklen_t addr_len = sizeof(addr);
  ::getsockname(listener.fd(), reinterpret_cast<sockaddr*>(&addr), &addr_len);
  if (::listen(listener.fd(), static_cast<int>(clients)) != 0) {
    throw Error(kModule, "transport", "listen failed");
  }

  // Connect all clients, then accept and identify them by a hello byte pair.
  std::vector<Socket> client_sockets;
  for (int64_t i = 1; i <= clients; ++i) {
    Socket sock(::socket(AF_INET, SOCK_STREAM, 0));
    if (sock.fd() < 0) throw Error(kModule, "transport", "cannot create client socket");
    if (::connect(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      throw Error(kModule, "transport", "connect failed");
    }
    const uint16_t id_be = htons(static_cast<uint16_t>(i));
    sock.write_all(&id_be, 2);
    client_sockets.push_back(std::move(sock));
  }

  std::vector<Socket> coord_side(static_cast<size_t>(clients));
  for (int64_t i = 0; i < clients; ++i) {
    Socket accepted(::accept(listener.fd(), nullptr, nullptr));
    if (accepted.fd() < 0) throw Error(kModule, "transport", "accept failed");
    uint16_t id_be = 0;
    accepted.read_all(&id_be, 2);
    const uint16_t id = ntohs(id_be);
    if (id < 1 || id > clients) throw Error(kModule, "transport", "bad client hello");
    coord_side[static_cast<size_t>(id - 1)] = std::move(accepted);
  }

  Link link;
  link.hub = std::make_unique<TcpHub>(std::move(coord_side));
  for (auto& sock : client_sockets) {
    link.endpoints.push_back(std::make_unique<TcpEndpoint>(std::move(sock)));
  }
  return link;
}

}  // namespace silofuse::transport
