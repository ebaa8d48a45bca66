#pragma once

// Device link framing. On the wire a frame is
//
//   0x7E  kind  seq  len  payload[len]  crc_hi  crc_lo
//
// where the CRC is CRC-16/CCITT (poly 0x1021, init 0xFFFF, no reflection)
// over kind, seq, len and the payload. Every byte after the leading 0x7E that
// equals 0x7E or 0x7D is sent as 0x7D followed by the byte XOR 0x20, so 0x7E
// only ever marks a frame start.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "haptutor/device.hpp"
#include "haptutor/sensing.hpp"

namespace haptutor::wire {

inline constexpr std::uint8_t kSync = 0x7E;
inline constexpr std::uint8_t kEscape = 0x7D;
inline constexpr std::uint8_t kEscapeXor = 0x20;
inline constexpr std::size_t kMaxPayload = 64;

enum class Kind : std::uint8_t { Command = 0x00, Telemetry = 0x01, Heartbeat = 0x02 };

std::string_view to_string(Kind k);

struct Frame {
  Kind kind = Kind::Heartbeat;
  std::uint8_t seq = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const Frame&, const Frame&) = default;
};

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes,
                          std::uint16_t crc = 0xFFFF);

// Throws ValidationError for payloads over 64 bytes.
std::vector<std::uint8_t> encode(const Frame& frame);

// Stamps frames with a rolling sequence number (mod 256).
class Encoder {
 public:
  std::vector<std::uint8_t> encode(Kind kind, std::vector<std::uint8_t> payload);
  std::uint8_t next_seq() const { return seq_; }

 private:
  std::uint8_t seq_ = 0;
};

// Incremental decoder. Partial frames persist across feed() calls; corrupt
// frames are dropped and counted, and the decoder resynchronises on the next
// 0x7E. Never throws.
class Decoder {
 public:
  std::vector<Frame> feed(std::span<const std::uint8_t> bytes);

  std::size_t error_count() const { return errors_; }
  bool idle() const { return state_ == State::Hunt; }

 private:
  enum class State { Hunt, Kind, Seq, Len, Payload, CrcHi, CrcLo };

  void abort_frame();
  void accept(std::uint8_t byte, std::vector<Frame>& out);

  State state_ = State::Hunt;
  bool escaped_ = false;
  Frame current_;
  std::uint8_t len_ = 0;
  std::uint16_t crc_ = 0;
  std::size_t errors_ = 0;
};

struct CommandPayload {
  std::uint8_t finger = 0;
  Clutch target = Clutch::Detached;
  std::uint16_t pulse_ms = 0;  // 0 = hold

  friend bool operator==(const CommandPayload&, const CommandPayload&) = default;
};

struct TelemetryPayload {
  std::uint32_t t_ms = 0;
  std::array<std::uint8_t, kHoleCount> values{};

  friend bool operator==(const TelemetryPayload&, const TelemetryPayload&) = default;
};

// 4 bytes: finger, target, pulse_ms big-endian.
std::vector<std::uint8_t> pack(const CommandPayload& c);
// 10 bytes: t_ms big-endian, six sensor bytes.
std::vector<std::uint8_t> pack(const TelemetryPayload& t);
std::optional<CommandPayload> unpack_command(std::span<const std::uint8_t> payload);
std::optional<TelemetryPayload> unpack_telemetry(std::span<const std::uint8_t> payload);

// Throws ValidationError for pulses that do not fit 16 bits.
CommandPayload to_payload(const ActuatorCommand& cmd);
ActuatorCommand from_payload(const CommandPayload& c);
TelemetryPayload to_payload(const SensorFrame& f);
SensorFrame from_payload(const TelemetryPayload& t);

std::string hex(std::span<const std::uint8_t> bytes);
// Accepts whitespace-separated or packed hex digits. Throws ValidationError.
std::vector<std::uint8_t> parse_hex(std::string_view text);
// One human-readable line per frame.
std::string describe(const Frame& f);

}  // namespace haptutor::wire
