// protocol.hpp - wire format shared by client, daemon and peer links.
//
// Every connection starts with a fixed-size handshake, after which both
// directions carry length-prefixed frames:
//
//   frame     := body_len:u32 | body
//   body      := command_id:u64 | msg_type:u8 | type-specific fields
//
// All integers are little-endian. Variable-size payloads (buffer data) are
// preceded by a payload_len:u64 and are always the final field of the body.
// Control bodies are capped at 16 MiB; payload-bearing bodies may use the
// full u32 range.

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace offload {

inline constexpr std::array<uint8_t, 4> kMagic = {'E', 'O', 'F', 'D'};
inline constexpr uint16_t kProtocolVersion = 1;
inline constexpr uint32_t kMaxControlBody = 1u << 24;

using SessionId = std::array<uint8_t, 16>;
inline constexpr SessionId kNullSession = {};

inline bool is_null_session(const SessionId &id) { return id == kNullSession; }

enum class Role : uint8_t { Client = 0, Peer = 1 };

enum class HandshakeStatus : uint8_t {
  New = 0,
  Resumed = 1,
  UnknownSession = 2,
};

struct Handshake {
  uint16_t version = kProtocolVersion;
  Role role = Role::Client;
  SessionId session_id = kNullSession;
  bool operator==(const Handshake &) const = default;
};

struct HandshakeReply {
  uint16_t version = kProtocolVersion;
  Role role = Role::Client;
  SessionId session_id = kNullSession;
  HandshakeStatus status = HandshakeStatus::New;
  bool operator==(const HandshakeReply &) const = default;
};

inline constexpr size_t kHandshakeSize = 23;
inline constexpr size_t kHandshakeReplySize = 24;

// Completion/errors carried in Ack and EventComplete status bytes.
enum class Status : uint8_t {
  Ok = 0,
  Failure = 1,
  UnknownBuffer = 2,
  UnknownKernel = 3,
  ArgMismatch = 4,
  BufferTooSmall = 5,
  OutOfRange = 6,
  StaleSource = 7,
  PeerUnreachable = 8,
  DependencyFailed = 9,
  AlreadyExists = 10,
  SizeBufferTooSmall = 11,
};

const char *status_name(Status s);

enum class MsgType : uint8_t {
  Nop = 0x00,
  CreateBuffer = 0x01,
  FreeBuffer = 0x02,
  WriteBuffer = 0x03,
  ReadBuffer = 0x04,
  ReadResult = 0x05,
  MigrateBuffer = 0x06,
  PushBuffer = 0x07,
  RunKernel = 0x08,
  SetContentSizeBuffer = 0x09,
  EventComplete = 0x0A,
  Ack = 0x0B,
  PeerList = 0x0C,
  SetPeerSession = 0x0D,
};

inline constexpr size_t kMsgTypeCount = 14;

struct Nop {
  bool operator==(const Nop &) const = default;
};

struct CreateBuffer {
  uint64_t buffer_id = 0;
  uint64_t size = 0;
  bool operator==(const CreateBuffer &) const = default;
};

struct FreeBuffer {
  uint64_t buffer_id = 0;
  bool operator==(const FreeBuffer &) const = default;
};

struct WriteBuffer {
  uint64_t buffer_id = 0;
  uint64_t offset = 0;
  std::vector<uint8_t> payload;
  bool operator==(const WriteBuffer &) const = default;
};

struct ReadBuffer {
  uint64_t buffer_id = 0;
  uint64_t offset = 0;
  uint64_t len = 0;
  bool operator==(const ReadBuffer &) const = default;
};

struct ReadResult {
  uint64_t buffer_id = 0;
  std::vector<uint8_t> payload;
  bool operator==(const ReadResult &) const = default;
};

struct MigrateBuffer {
  uint64_t buffer_id = 0;
  uint32_t dest_server = 0;
  std::vector<uint64_t> wait_ids;
  bool operator==(const MigrateBuffer &) const = default;
};

struct PushBuffer {
  uint64_t buffer_id = 0;
  uint64_t content_len = 0;
  uint64_t origin_command_id = 0;
  std::vector<uint8_t> payload;
  bool operator==(const PushBuffer &) const = default;
};

// kind 0 carries a buffer id, 1 a u64 scalar, 2 an f64 scalar. A buffer id
// may be supplied where a kernel expects a scalar; the executing daemon
// reads the value from the buffer's leading bytes (see kernels module).
struct ArgDesc {
  enum class Kind : uint8_t { BufferId = 0, ScalarU64 = 1, ScalarF64 = 2 };
  Kind kind = Kind::BufferId;
  uint64_t u64 = 0; // buffer id or scalar bits
  double f64 = 0.0;

  static ArgDesc buffer(uint64_t id) { return {Kind::BufferId, id, 0.0}; }
  static ArgDesc scalar(uint64_t v) { return {Kind::ScalarU64, v, 0.0}; }
  static ArgDesc scalar(double v) { return {Kind::ScalarF64, 0, v}; }
  bool operator==(const ArgDesc &) const = default;
};

struct RunKernel {
  std::string kernel_name;
  std::vector<ArgDesc> args;
  std::vector<uint64_t> wait_ids;
  bool operator==(const RunKernel &) const = default;
};

struct SetContentSizeBuffer {
  uint64_t buffer_id = 0;
  uint64_t size_buffer_id = 0;
  bool operator==(const SetContentSizeBuffer &) const = default;
};

struct EventComplete {
  uint64_t completed_command_id = 0;
  Status status = Status::Ok;
  bool operator==(const EventComplete &) const = default;
};

struct Ack {
  uint64_t acked_command_id = 0;
  Status status = Status::Ok;
  bool operator==(const Ack &) const = default;
};

struct PeerList {
  std::vector<std::string> addrs;
  bool operator==(const PeerList &) const = default;
};

struct SetPeerSession {
  uint32_t peer_index = 0;
  SessionId session_id = kNullSession;
  bool operator==(const SetPeerSession &) const = default;
};

using MessageBody =
    std::variant<Nop, CreateBuffer, FreeBuffer, WriteBuffer, ReadBuffer,
                 ReadResult, MigrateBuffer, PushBuffer, RunKernel,
                 SetContentSizeBuffer, EventComplete, Ack, PeerList,
                 SetPeerSession>;

struct Message {
  uint64_t command_id = 0;
  MessageBody body;
  bool operator==(const Message &) const = default;

  MsgType type() const { return static_cast<MsgType>(body.index()); }
};

enum class DecodeStatus : uint8_t {
  Ok,
  Truncated, // stream ended mid-frame; signals connection loss upstream
  UnknownType,
  SchemaViolation,
};

struct DecodeResult {
  DecodeStatus status = DecodeStatus::Truncated;
  Message msg;
  size_t consumed = 0;
};

// Returns nullopt when a field exceeds its wire range (SchemaViolation).
std::optional<std::vector<uint8_t>> encode_frame(const Message &msg);

// Decodes one frame from the front of `bytes`. Truncated means more bytes
// are needed; consumed is nonzero only on Ok.
DecodeResult decode_frame(std::span<const uint8_t> bytes);

std::array<uint8_t, kHandshakeSize> encode_handshake(const Handshake &h);
std::array<uint8_t, kHandshakeReplySize>
encode_handshake_reply(const HandshakeReply &r);

enum class HandshakeError : uint8_t { BadMagic, VersionMismatch, Truncated };

std::variant<Handshake, HandshakeError>
decode_handshake(std::span<const uint8_t> bytes);
std::variant<HandshakeReply, HandshakeError>
decode_handshake_reply(std::span<const uint8_t> bytes);

} // namespace offload
