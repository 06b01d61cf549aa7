#pragma once
// In-process message passing between named parties: FIFO inboxes plus
// delivered-byte accounting per edge and per message kind.  Bodies are typed;
// wire sizes follow the protocol's serialization formulas, with fixed framing
// (length prefixes) accounted separately from payload bytes.

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "dataring/backend.hpp"
#include "dataring/partial_view.hpp"

namespace dataring {

enum class MsgKind { kLbs, kSigmaInv, kEncLbs, kQuery, kAnswer, kRelease };

const char* msg_kind_name(MsgKind kind);

// Slot vectors travel behind shared_ptr so relaying a large message is O(1);
// byte accounting still reflects the full serialized width.
using SlotVec = std::shared_ptr<const std::vector<Slot>>;

// kQuery and kRelease carry bare slot vectors: the test/real origin tag is
// stripped before sending and never appears on the wire.
using MessageBody = std::variant<PvUpload, std::vector<std::uint32_t>, SlotVec, Slot>;

struct Message {
  std::string from;
  std::string to;
  MsgKind kind;
  MessageBody body;
};

struct WireSize {
  std::uint64_t payload = 0;
  std::uint64_t framing = 0;
  std::uint64_t total() const { return payload + framing; }
  WireSize& operator+=(const WireSize& o) {
    payload += o.payload;
    framing += o.framing;
    return *this;
  }
};

// Serialized size per kind:
//   lbs        : 8 bytes per entry (4-byte position + 4-byte flag word)
//   sigma^{-1} : 4 bytes per entry
//   enc lbs    : 70 bytes per entry (4-byte position + 66-byte ciphertext)
//   query      : 66 bytes per ciphertext, 4-byte count as framing
//   answer     : one 66-byte ciphertext
//   release    : 66 bytes per ciphertext, 4-byte count as framing
WireSize wire_size_of(MsgKind kind, const MessageBody& body);

class Transport {
 public:
  void send(std::string from, std::string to, MsgKind kind, MessageBody body);
  Message recv(const std::string& recipient);  // throws if the inbox is empty
  bool has_message(const std::string& recipient) const;

  WireSize bytes_by_kind(MsgKind kind) const;
  std::uint64_t messages_by_kind(MsgKind kind) const;
  WireSize bytes_by_edge(const std::string& from, const std::string& to) const;
  WireSize total_bytes() const;
  void reset_counters();

 private:
  std::map<std::string, std::deque<Message>> inboxes_;
  std::map<int, WireSize> by_kind_;
  std::map<int, std::uint64_t> count_by_kind_;
  std::map<std::pair<std::string, std::string>, WireSize> by_edge_;
  WireSize total_;
};

}  // namespace dataring
