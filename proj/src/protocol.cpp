#include "offload/protocol.hpp"

namespace offload {

namespace {

class Writer {
public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) {
    buf_.push_back(uint8_t(v));
    buf_.push_back(uint8_t(v >> 8));
  }
  void u32(uint32_t v) {
    for (int i = 0; i < 4; ++i)
      buf_.push_back(uint8_t(v >> (8 * i)));
  }
  void u64(uint64_t v) {
    for (int i = 0; i < 8; ++i)
      buf_.push_back(uint8_t(v >> (8 * i)));
  }
  void f64(double v) {
    uint64_t bits;
    std::memcpy(&bits, &v, 8);
    u64(bits);
  }
  void bytes(std::span<const uint8_t> b) {
    buf_.insert(buf_.end(), b.begin(), b.end());
  }
  std::vector<uint8_t> take() { return std::move(buf_); }

private:
  std::vector<uint8_t> buf_;
};

class Reader {
public:
  explicit Reader(std::span<const uint8_t> b) : data_(b) {}

  bool u8(uint8_t &v) {
    if (pos_ + 1 > data_.size())
      return false;
    v = data_[pos_++];
    return true;
  }
  bool u16(uint16_t &v) {
    if (pos_ + 2 > data_.size())
      return false;
    v = uint16_t(data_[pos_]) | uint16_t(data_[pos_ + 1]) << 8;
    pos_ += 2;
    return true;
  }
  bool u32(uint32_t &v) {
    if (pos_ + 4 > data_.size())
      return false;
    v = 0;
    for (int i = 0; i < 4; ++i)
      v |= uint32_t(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return true;
  }
  bool u64(uint64_t &v) {
    if (pos_ + 8 > data_.size())
      return false;
    v = 0;
    for (int i = 0; i < 8; ++i)
      v |= uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return true;
  }
  bool f64(double &v) {
    uint64_t bits;
    if (!u64(bits))
      return false;
    std::memcpy(&v, &bits, 8);
    return true;
  }
  bool bytes(size_t n, std::vector<uint8_t> &out) {
    if (pos_ + n > data_.size())
      return false;
    out.assign(data_.begin() + pos_, data_.begin() + pos_ + n);
    pos_ += n;
    return true;
  }
  size_t remaining() const { return data_.size() - pos_; }

private:
  std::span<const uint8_t> data_;
  size_t pos_ = 0;
};

bool payload_bearing(MsgType t) {
  return t == MsgType::WriteBuffer || t == MsgType::ReadResult ||
         t == MsgType::PushBuffer;
}

// Encodes the type-specific fields; false on a range violation.
bool encode_fields(const Message &msg, Writer &w) {
  return std::visit(
      [&](const auto &m) -> bool {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Nop>) {
          return true;
        } else if constexpr (std::is_same_v<T, CreateBuffer>) {
          w.u64(m.buffer_id);
          w.u64(m.size);
          return true;
        } else if constexpr (std::is_same_v<T, FreeBuffer>) {
          w.u64(m.buffer_id);
          return true;
        } else if constexpr (std::is_same_v<T, WriteBuffer>) {
          w.u64(m.buffer_id);
          w.u64(m.offset);
          w.u64(m.payload.size());
          w.bytes(m.payload);
          return true;
        } else if constexpr (std::is_same_v<T, ReadBuffer>) {
          w.u64(m.buffer_id);
          w.u64(m.offset);
          w.u64(m.len);
          return true;
        } else if constexpr (std::is_same_v<T, ReadResult>) {
          w.u64(m.buffer_id);
          w.u64(m.payload.size());
          w.bytes(m.payload);
          return true;
        } else if constexpr (std::is_same_v<T, MigrateBuffer>) {
          if (m.wait_ids.size() > UINT16_MAX)
            return false;
          w.u64(m.buffer_id);
          w.u32(m.dest_server);
          w.u16(uint16_t(m.wait_ids.size()));
          for (uint64_t id : m.wait_ids)
            w.u64(id);
          return true;
        } else if constexpr (std::is_same_v<T, PushBuffer>) {
          w.u64(m.buffer_id);
          w.u64(m.content_len);
          w.u64(m.origin_command_id);
          w.u64(m.payload.size());
          w.bytes(m.payload);
          return true;
        } else if constexpr (std::is_same_v<T, RunKernel>) {
          if (m.kernel_name.size() > UINT16_MAX || m.args.size() > UINT8_MAX ||
              m.wait_ids.size() > UINT16_MAX)
            return false;
          w.u16(uint16_t(m.kernel_name.size()));
          w.bytes({reinterpret_cast<const uint8_t *>(m.kernel_name.data()),
                   m.kernel_name.size()});
          w.u8(uint8_t(m.args.size()));
          for (const ArgDesc &a : m.args) {
            w.u8(uint8_t(a.kind));
            if (a.kind == ArgDesc::Kind::ScalarF64)
              w.f64(a.f64);
            else
              w.u64(a.u64);
          }
          w.u16(uint16_t(m.wait_ids.size()));
          for (uint64_t id : m.wait_ids)
            w.u64(id);
          return true;
        } else if constexpr (std::is_same_v<T, SetContentSizeBuffer>) {
          w.u64(m.buffer_id);
          w.u64(m.size_buffer_id);
          return true;
        } else if constexpr (std::is_same_v<T, EventComplete>) {
          w.u64(m.completed_command_id);
          w.u8(uint8_t(m.status));
          return true;
        } else if constexpr (std::is_same_v<T, Ack>) {
          w.u64(m.acked_command_id);
          w.u8(uint8_t(m.status));
          return true;
        } else if constexpr (std::is_same_v<T, PeerList>) {
          if (m.addrs.size() > UINT16_MAX)
            return false;
          w.u16(uint16_t(m.addrs.size()));
          for (const std::string &a : m.addrs) {
            if (a.size() > UINT16_MAX)
              return false;
            w.u16(uint16_t(a.size()));
            w.bytes({reinterpret_cast<const uint8_t *>(a.data()), a.size()});
          }
          return true;
        } else if constexpr (std::is_same_v<T, SetPeerSession>) {
          w.u32(m.peer_index);
          w.bytes(m.session_id);
          return true;
        }
      },
      msg.body);
}

bool decode_fields(MsgType type, Reader &r, MessageBody &out) {
  switch (type) {
  case MsgType::Nop:
    out = Nop{};
    return true;
  case MsgType::CreateBuffer: {
    CreateBuffer m;
    if (!r.u64(m.buffer_id) || !r.u64(m.size))
      return false;
    out = std::move(m);
    return true;
  }
  case MsgType::FreeBuffer: {
    FreeBuffer m;
    if (!r.u64(m.buffer_id))
      return false;
    out = std::move(m);
    return true;
  }
  case MsgType::WriteBuffer: {
    WriteBuffer m;
    uint64_t n;
    if (!r.u64(m.buffer_id) || !r.u64(m.offset) || !r.u64(n))
      return false;
    if (n != r.remaining() || !r.bytes(size_t(n), m.payload))
      return false;
    out = std::move(m);
    return true;
  }
  case MsgType::ReadBuffer: {
    ReadBuffer m;
    if (!r.u64(m.buffer_id) || !r.u64(m.offset) || !r.u64(m.len))
      return false;
    out = std::move(m);
    return true;
  }
  case MsgType::ReadResult: {
    ReadResult m;
    uint64_t n;
    if (!r.u64(m.buffer_id) || !r.u64(n))
      return false;
    if (n != r.remaining() || !r.bytes(size_t(n), m.payload))
      return false;
    out = std::move(m);
    return true;
  }
  case MsgType::MigrateBuffer: {
    MigrateBuffer m;
    uint16_t count;
    if (!r.u64(m.buffer_id) || !r.u32(m.dest_server) || !r.u16(count))
      return false;
    m.wait_ids.resize(count);
    for (uint64_t &id : m.wait_ids)
      if (!r.u64(id))
        return false;
    out = std::move(m);
    return true;
  }
  case MsgType::PushBuffer: {
    PushBuffer m;
    uint64_t n;
    if (!r.u64(m.buffer_id) || !r.u64(m.content_len) ||
        !r.u64(m.origin_command_id) || !r.u64(n))
      return false;
    if (n != r.remaining() || !r.bytes(size_t(n), m.payload))
      return false;
    out = std::move(m);
    return true;
  }
  case MsgType::RunKernel: {
    RunKernel m;
    uint16_t name_len;
    if (!r.u16(name_len))
      return false;
    std::vector<uint8_t> name;
    if (!r.bytes(name_len, name))
      return false;
    m.kernel_name.assign(name.begin(), name.end());
    uint8_t argc;
    if (!r.u8(argc))
      return false;
    m.args.resize(argc);
    for (ArgDesc &a : m.args) {
      uint8_t kind;
      if (!r.u8(kind))
        return false;
      if (kind > uint8_t(ArgDesc::Kind::ScalarF64))
        return false;
      a.kind = ArgDesc::Kind(kind);
      if (a.kind == ArgDesc::Kind::ScalarF64) {
        if (!r.f64(a.f64))
          return false;
      } else if (!r.u64(a.u64)) {
        return false;
      }
    }
    uint16_t waits;
    if (!r.u16(waits))
      return false;
    m.wait_ids.resize(waits);
    for (uint64_t &id : m.wait_ids)
      if (!r.u64(id))
        return false;
    out = std::move(m);
    return true;
  }
  case MsgType::SetContentSizeBuffer: {
    SetContentSizeBuffer m;
    if (!r.u64(m.buffer_id) || !r.u64(m.size_buffer_id))
      return false;
    out = std::move(m);
    return true;
  }
  case MsgType::EventComplete: {
    EventComplete m;
    uint8_t s;
    if (!r.u64(m.completed_command_id) || !r.u8(s))
      return false;
    m.status = Status(s);
    out = std::move(m);
    return true;
  }
  case MsgType::Ack: {
    Ack m;
    uint8_t s;
    if (!r.u64(m.acked_command_id) || !r.u8(s))
      return false;
    m.status = Status(s);
    out = std::move(m);
    return true;
  }
  case MsgType::PeerList: {
    PeerList m;
    uint16_t count;
    if (!r.u16(count))
      return false;
    m.addrs.resize(count);
    for (std::string &a : m.addrs) {
      uint16_t len;
      if (!r.u16(len))
        return false;
      std::vector<uint8_t> bytes;
      if (!r.bytes(len, bytes))
        return false;
      a.assign(bytes.begin(), bytes.end());
    }
    out = std::move(m);
    return true;
  }
  case MsgType::SetPeerSession: {
    SetPeerSession m;
    if (!r.u32(m.peer_index))
      return false;
    std::vector<uint8_t> id;
    if (!r.bytes(16, id))
      return false;
    std::copy(id.begin(), id.end(), m.session_id.begin());
    out = std::move(m);
    return true;
  }
  }
  return false;
}

} // namespace

const char *status_name(Status s) {
  switch (s) {
  case Status::Ok:
    return "ok";
  case Status::Failure:
    return "failure";
  case Status::UnknownBuffer:
    return "unknown buffer";
  case Status::UnknownKernel:
    return "unknown kernel";
  case Status::ArgMismatch:
    return "argument mismatch";
  case Status::BufferTooSmall:
    return "buffer too small";
  case Status::OutOfRange:
    return "out of range";
  case Status::StaleSource:
    return "stale migration source";
  case Status::PeerUnreachable:
    return "peer unreachable";
  case Status::DependencyFailed:
    return "dependency failed";
  case Status::AlreadyExists:
    return "already exists";
  case Status::SizeBufferTooSmall:
    return "size buffer too small";
  }
  return "unknown";
}

std::optional<std::vector<uint8_t>> encode_frame(const Message &msg) {
  Writer body;
  body.u64(msg.command_id);
  body.u8(uint8_t(msg.type()));
  if (!encode_fields(msg, body))
    return std::nullopt;
  std::vector<uint8_t> b = body.take();
  if (b.size() > UINT32_MAX)
    return std::nullopt;
  if (!payload_bearing(msg.type()) && b.size() > kMaxControlBody)
    return std::nullopt;

  Writer frame;
  frame.u32(uint32_t(b.size()));
  frame.bytes(b);
  return frame.take();
}

DecodeResult decode_frame(std::span<const uint8_t> bytes) {
  DecodeResult res;
  Reader head(bytes);
  uint32_t body_len;
  if (!head.u32(body_len))
    return res; // Truncated
  if (body_len < 9) {
    res.status = DecodeStatus::SchemaViolation;
    return res;
  }
  if (bytes.size() < 4 + size_t(body_len))
    return res; // Truncated

  Reader r(bytes.subspan(4, body_len));
  uint64_t command_id;
  uint8_t type_byte;
  if (!r.u64(command_id) || !r.u8(type_byte)) {
    res.status = DecodeStatus::SchemaViolation;
    return res;
  }
  if (type_byte >= kMsgTypeCount) {
    res.status = DecodeStatus::UnknownType;
    return res;
  }
  MsgType type = MsgType(type_byte);
  if (!payload_bearing(type) && body_len > kMaxControlBody) {
    res.status = DecodeStatus::SchemaViolation;
    return res;
  }
  MessageBody body;
  if (!decode_fields(type, r, body) || r.remaining() != 0) {
    res.status = DecodeStatus::SchemaViolation;
    return res;
  }
  res.status = DecodeStatus::Ok;
  res.msg = Message{command_id, std::move(body)};
  res.consumed = 4 + size_t(body_len);
  return res;
}

std::array<uint8_t, kHandshakeSize> encode_handshake(const Handshake &h) {
  std::array<uint8_t, kHandshakeSize> out{};
  std::copy(kMagic.begin(), kMagic.end(), out.begin());
  out[4] = uint8_t(h.version);
  out[5] = uint8_t(h.version >> 8);
  out[6] = uint8_t(h.role);
  std::copy(h.session_id.begin(), h.session_id.end(), out.begin() + 7);
  return out;
}

std::array<uint8_t, kHandshakeReplySize>
encode_handshake_reply(const HandshakeReply &r) {
  std::array<uint8_t, kHandshakeReplySize> out{};
  std::copy(kMagic.begin(), kMagic.end(), out.begin());
  out[4] = uint8_t(r.version);
  out[5] = uint8_t(r.version >> 8);
  out[6] = uint8_t(r.role);
  std::copy(r.session_id.begin(), r.session_id.end(), out.begin() + 7);
  out[23] = uint8_t(r.status);
  return out;
}

std::variant<Handshake, HandshakeError>
decode_handshake(std::span<const uint8_t> bytes) {
  if (bytes.size() < kHandshakeSize)
    return HandshakeError::Truncated;
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    return HandshakeError::BadMagic;
  Handshake h;
  h.version = uint16_t(bytes[4]) | uint16_t(bytes[5]) << 8;
  if (h.version != kProtocolVersion)
    return HandshakeError::VersionMismatch;
  h.role = Role(bytes[6]);
  std::copy(bytes.begin() + 7, bytes.begin() + 23, h.session_id.begin());
  return h;
}

std::variant<HandshakeReply, HandshakeError>
decode_handshake_reply(std::span<const uint8_t> bytes) {
  if (bytes.size() < kHandshakeReplySize)
    return HandshakeError::Truncated;
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    return HandshakeError::BadMagic;
  HandshakeReply r;
  r.version = uint16_t(bytes[4]) | uint16_t(bytes[5]) << 8;
  if (r.version != kProtocolVersion)
    return HandshakeError::VersionMismatch;
  r.role = Role(bytes[6]);
  std::copy(bytes.begin() + 7, bytes.begin() + 23, r.session_id.begin());
  r.status = HandshakeStatus(bytes[23]);
  return r;
}

} // namespace offload
