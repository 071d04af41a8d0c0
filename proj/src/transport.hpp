#pragma once

// Internal star-topology transport between clients and the coordinator.
// InProcess uses blocking queues; Tcp uses loopback sockets with the
// length-prefixed frame format. Both carry the same frames, so transcripts
// agree modulo timing.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <vector>

namespace silofuse::transport {

// kind 0 marks a poison frame: a participant failed and the peer should
// stop waiting.
struct WireFrame {
  uint8_t kind = 0;
  uint16_t sender = 0;
  uint16_t receiver = 0;
  uint32_t round = 0;
  std::vector<double> scalars;
};

class ClientEndpoint {
 public:
  virtual ~ClientEndpoint() = default;
  virtual void send(const WireFrame& frame) = 0;
  virtual WireFrame recv() = 0;
};

class CoordinatorHub {
 public:
  virtual ~CoordinatorHub() = default;
  virtual void send_to(int client, const WireFrame& frame) = 0;
  virtual WireFrame recv_from(int client) = 0;
  // Unblocks every client that may still be waiting.
  virtual void poison_all() = 0;
};

struct Link {
  std::unique_ptr<CoordinatorHub> hub;
  std::vector<std::unique_ptr<ClientEndpoint>> endpoints;  // index = client id - 1
};

Link make_in_process_link(int64_t clients);
Link make_tcp_link(int64_t clients);

}  // namespace silofuse::transport
