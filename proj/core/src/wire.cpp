#include "haptutor/wire.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "haptutor/error.hpp"
#include "text_util.hpp"

namespace haptutor::wire {

std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::Command:
      return "command";
    case Kind::Telemetry:
      return "telemetry";
    case Kind::Heartbeat:
      return "heartbeat";
  }
  return "?";
}

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes, std::uint16_t crc) {
  for (std::uint8_t b : bytes) {
    crc ^= static_cast<std::uint16_t>(b << 8);
    for (int i = 0; i < 8; ++i) {
      crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021)
                           : static_cast<std::uint16_t>(crc << 1);
    }
  }
  return crc;
}

namespace {

void put_escaped(std::vector<std::uint8_t>& out, std::uint8_t b) {
  if (b == kSync || b == kEscape) {
    out.push_back(kEscape);
    out.push_back(static_cast<std::uint8_t>(b ^ kEscapeXor));
  } else {
    out.push_back(b);
  }
}

bool known_kind(std::uint8_t k) { return k <= static_cast<std::uint8_t>(Kind::Heartbeat); }

}  // namespace

std::vector<std::uint8_t> encode(const Frame& frame) {
  if (frame.payload.size() > kMaxPayload) {
    throw ValidationError("payload of " + std::to_string(frame.payload.size()) +
                          " bytes exceeds 64");
  }
  const std::array<std::uint8_t, 3> header{static_cast<std::uint8_t>(frame.kind), frame.seq,
                                           static_cast<std::uint8_t>(frame.payload.size())};
  std::uint16_t crc = crc16_ccitt(header);
  crc = crc16_ccitt(frame.payload, crc);

  std::vector<std::uint8_t> out;
  out.reserve(2 * (header.size() + frame.payload.size() + 2) + 1);
  out.push_back(kSync);
  for (auto b : header) put_escaped(out, b);
  for (auto b : frame.payload) put_escaped(out, b);
  put_escaped(out, static_cast<std::uint8_t>(crc >> 8));
  put_escaped(out, static_cast<std::uint8_t>(crc & 0xFF));
  return out;
}

std::vector<std::uint8_t> Encoder::encode(Kind kind, std::vector<std::uint8_t> payload) {
  Frame f{kind, seq_, std::move(payload)};
  auto bytes = wire::encode(f);
  ++seq_;
  return bytes;
}

void Decoder::abort_frame() {
  ++errors_;
  state_ = State::Hunt;
  escaped_ = false;
}

void Decoder::accept(std::uint8_t b, std::vector<Frame>& out) {
  switch (state_) {
    case State::Hunt:
      break;
    case State::Kind:
      if (!known_kind(b)) {
        abort_frame();
        return;
      }
      current_ = Frame{static_cast<Kind>(b), 0, {}};
      crc_ = crc16_ccitt(std::span(&b, 1));
      state_ = State::Seq;
      break;
    case State::Seq:
      current_.seq = b;
      crc_ = crc16_ccitt(std::span(&b, 1), crc_);
      state_ = State::Len;
      break;
    case State::Len:
      if (b > kMaxPayload) {
        abort_frame();
        return;
      }
      len_ = b;
      crc_ = crc16_ccitt(std::span(&b, 1), crc_);
      current_.payload.reserve(len_);
      state_ = len_ == 0 ? State::CrcHi : State::Payload;
      break;
    case State::Payload:
      current_.payload.push_back(b);
      crc_ = crc16_ccitt(std::span(&b, 1), crc_);
      if (current_.payload.size() == len_) state_ = State::CrcHi;
      break;
    case State::CrcHi:
      crc_ ^= static_cast<std::uint16_t>(b << 8);
      state_ = State::CrcLo;
      break;
    case State::CrcLo:
      crc_ ^= b;
      if (crc_ != 0) {
        abort_frame();
        return;
      }
      out.push_back(std::move(current_));
      current_ = Frame{};
      state_ = State::Hunt;
      break;
  }
}

std::vector<Frame> Decoder::feed(std::span<const std::uint8_t> bytes) {
  std::vector<Frame> out;
  for (std::uint8_t raw : bytes) {
    if (raw == kSync) {
      // A sync inside an unfinished frame truncates it.
      if (state_ != State::Hunt) ++errors_;
      state_ = State::Kind;
      escaped_ = false;
      continue;
    }
    if (state_ == State::Hunt) continue;
    if (escaped_) {
      escaped_ = false;
      accept(static_cast<std::uint8_t>(raw ^ kEscapeXor), out);
    } else if (raw == kEscape) {
      escaped_ = true;
    } else {
      accept(raw, out);
    }
  }
  return out;
}

std::vector<std::uint8_t> pack(const CommandPayload& c) {
  return {c.finger, static_cast<std::uint8_t>(c.target),
          static_cast<std::uint8_t>(c.pulse_ms >> 8),
          static_cast<std::uint8_t>(c.pulse_ms & 0xFF)};
}

std::vector<std::uint8_t> pack(const TelemetryPayload& t) {
  std::vector<std::uint8_t> out{
      static_cast<std::uint8_t>(t.t_ms >> 24), static_cast<std::uint8_t>(t.t_ms >> 16),
      static_cast<std::uint8_t>(t.t_ms >> 8), static_cast<std::uint8_t>(t.t_ms)};
  for (auto v : t.values) out.push_back(v);
  return out;
}

std::optional<CommandPayload> unpack_command(std::span<const std::uint8_t> p) {
  if (p.size() != 4 || p[0] >= kHoleCount || p[1] > 2) return std::nullopt;
  return CommandPayload{p[0], static_cast<Clutch>(p[1]),
                        static_cast<std::uint16_t>((p[2] << 8) | p[3])};
}

std::optional<TelemetryPayload> unpack_telemetry(std::span<const std::uint8_t> p) {
  if (p.size() != 4 + kHoleCount) return std::nullopt;
  TelemetryPayload t;
  t.t_ms = (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) |
           (std::uint32_t{p[2]} << 8) | std::uint32_t{p[3]};
  for (std::size_t i = 0; i < kHoleCount; ++i) t.values[i] = p[4 + i];
  return t;
}

CommandPayload to_payload(const ActuatorCommand& cmd) {
  if (cmd.finger >= kHoleCount) throw ValidationError("finger index out of range");
  CommandPayload c{static_cast<std::uint8_t>(cmd.finger), cmd.target, 0};
  if (cmd.pulse_ms && cmd.target != Clutch::Detached) {
    if (*cmd.pulse_ms < 1 || *cmd.pulse_ms > 0xFFFF) {
      throw ValidationError("pulse does not fit the 16-bit wire field");
    }
    c.pulse_ms = static_cast<std::uint16_t>(*cmd.pulse_ms);
  }
  return c;
}

ActuatorCommand from_payload(const CommandPayload& c) {
  ActuatorCommand cmd{c.finger, c.target, std::nullopt};
  if (c.pulse_ms != 0) cmd.pulse_ms = c.pulse_ms;
  return cmd;
}

TelemetryPayload to_payload(const SensorFrame& f) {
  if (f.t_ms < 0 || f.t_ms > static_cast<Millis>(UINT32_MAX)) {
    throw ValidationError("telemetry time does not fit 32 bits");
  }
  TelemetryPayload t;
  t.t_ms = static_cast<std::uint32_t>(f.t_ms);
  for (std::size_t i = 0; i < kHoleCount; ++i) {
    const double v = std::clamp(f.values[i], 0.0, 1.0);
    t.values[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return t;
}

SensorFrame from_payload(const TelemetryPayload& t) {
  SensorFrame f;
  f.t_ms = t.t_ms;
  for (std::size_t i = 0; i < kHoleCount; ++i) f.values[i] = t.values[i] / 255.0;
  return f;
}

std::string hex(std::span<const std::uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789ABCDEF";
  std::string s;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i) s.push_back(' ');
    s.push_back(kDigits[bytes[i] >> 4]);
    s.push_back(kDigits[bytes[i] & 0xF]);
  }
  return s;
}

std::vector<std::uint8_t> parse_hex(std::string_view text) {
  std::vector<std::uint8_t> out;
  int pending = -1;
  auto nibble = [&](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  for (char c : text) {
    if (c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == ',' || c == ':') {
      if (pending >= 0) throw ValidationError("odd number of hex digits in a byte");
      continue;
    }
    const int v = nibble(c);
    if (v < 0) throw ValidationError(std::string("not a hex digit: '") + c + "'");
    if (pending < 0) {
      pending = v;
    } else {
      out.push_back(static_cast<std::uint8_t>(pending << 4 | v));
      pending = -1;
    }
  }
  if (pending >= 0) throw ValidationError("odd number of hex digits");
  return out;
}

std::string describe(const Frame& f) {
  std::ostringstream os;
  os << "seq=" << static_cast<int>(f.seq) << " kind=" << to_string(f.kind)
     << " len=" << f.payload.size();
  if (f.kind == Kind::Command) {
    if (auto c = unpack_command(f.payload)) {
      os << " finger=" << static_cast<int>(c->finger) << " target=" << to_string(c->target)
         << " pulse_ms=" << c->pulse_ms;
    } else {
      os << " malformed-command";
    }
  } else if (f.kind == Kind::Telemetry) {
    if (auto t = unpack_telemetry(f.payload)) {
      os << " t_ms=" << t->t_ms << " values=";
      for (std::size_t i = 0; i < kHoleCount; ++i) {
        os << (i ? "," : "") << static_cast<int>(t->values[i]);
      }
    } else {
      os << " malformed-telemetry";
    }
  }
  if (!f.payload.empty()) os << " payload=[" << hex(f.payload) << "]";
  return os.str();
}

}  // namespace haptutor::wire
