#include "dataring/transport.hpp"

#include <stdexcept>

namespace dataring {

const char* msg_kind_name(MsgKind kind) {
  switch (kind) {
    case MsgKind::kLbs: return "lbs";
    case MsgKind::kSigmaInv: return "sigma_inv";
    case MsgKind::kEncLbs: return "enc_lbs";
    case MsgKind::kQuery: return "query";
    case MsgKind::kAnswer: return "answer";
    case MsgKind::kRelease: return "release";
  }
  return "?";
}

WireSize wire_size_of(MsgKind kind, const MessageBody& body) {
  WireSize w;
  switch (kind) {
    case MsgKind::kLbs:
      w.payload = 8ull * std::get<PvUpload>(body).flags.size();
      break;
    case MsgKind::kSigmaInv:
      w.payload = 4ull * std::get<std::vector<std::uint32_t>>(body).size();
      break;
    case MsgKind::kEncLbs:
      w.payload = (4ull + kCiphertextBytes) * std::get<SlotVec>(body)->size();
      break;
    case MsgKind::kQuery:
    case MsgKind::kRelease:
      w.payload =
          static_cast<std::uint64_t>(kCiphertextBytes) * std::get<SlotVec>(body)->size();
      w.framing = 4;  // element count
      break;
    case MsgKind::kAnswer:
      (void)std::get<Slot>(body);
      w.payload = kCiphertextBytes;
      break;
  }
  return w;
}

void Transport::send(std::string from, std::string to, MsgKind kind, MessageBody body) {
  const WireSize w = wire_size_of(kind, body);
  by_kind_[static_cast<int>(kind)] += w;
  count_by_kind_[static_cast<int>(kind)] += 1;
  by_edge_[{from, to}] += w;
  total_ += w;
  inboxes_[to].push_back(Message{std::move(from), std::move(to), kind, std::move(body)});
}

Message Transport::recv(const std::string& recipient) {
  auto it = inboxes_.find(recipient);
  if (it == inboxes_.end() || it->second.empty())
    throw std::runtime_error("no message for '" + recipient + "'");
  Message m = std::move(it->second.front());
  it->second.pop_front();
  return m;
}

bool Transport::has_message(const std::string& recipient) const {
  auto it = inboxes_.find(recipient);
  return it != inboxes_.end() && !it->second.empty();
}

WireSize Transport::bytes_by_kind(MsgKind kind) const {
  auto it = by_kind_.find(static_cast<int>(kind));
  return it == by_kind_.end() ? WireSize{} : it->second;
}

std::uint64_t Transport::messages_by_kind(MsgKind kind) const {
  auto it = count_by_kind_.find(static_cast<int>(kind));
  return it == count_by_kind_.end() ? 0 : it->second;
}

WireSize Transport::bytes_by_edge(const std::string& from, const std::string& to) const {
  auto it = by_edge_.find({from, to});
  return it == by_edge_.end() ? WireSize{} : it->second;
}

WireSize Transport::total_bytes() const { return total_; }

void Transport::reset_counters() {
  by_kind_.clear();
  count_by_kind_.clear();
  by_edge_.clear();
  total_ = WireSize{};
}

}  // namespace dataring
