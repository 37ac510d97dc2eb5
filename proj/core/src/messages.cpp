#include "ldacs/messages.hpp"

#include "wire.hpp"

namespace ldacs::proto {

namespace {

using wire::Writer;

class Reader : public wire::Reader {
 public:
  Reader(std::span<const std::uint8_t> frame, MessageKind expected)
      : wire::Reader(frame, static_cast<std::uint8_t>(expected), to_string(expected)) {}
};

Writer writer(MessageKind kind) { return Writer(static_cast<std::uint8_t>(kind)); }

}  // namespace

std::string to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::kM1: return "M1";
    case MessageKind::kM2: return "M2";
    case MessageKind::kM3: return "M3";
    case MessageKind::kM4: return "M4";
  }
  return "M?";
}

MessageKind frame_kind(std::span<const std::uint8_t> frame) {
  if (frame.empty()) throw DecodeError("empty frame");
  if (frame[0] < 0x01 || frame[0] > 0x04) throw DecodeError("unknown message tag");
  return static_cast<MessageKind>(frame[0]);
}

Bytes M1::encode() const { return writer(MessageKind::kM1).bytes(tau.to_bytes()).bytes(n1).take(); }

M1 M1::decode(std::span<const std::uint8_t> frame) {
  Reader r(frame, MessageKind::kM1);
  M1 m;
  m.tau = Tau::from_bytes(std::span<const std::uint8_t, 3>(r.take(3)));
  m.n1 = r.fixed<kNonceBytes>();
  r.finish();
  return m;
}

Bytes M2::encode_unauthenticated() const {
  return writer(MessageKind::kM2).u32(omega).bytes(n2).prefixed(kem_public_key).take();
}

Bytes M2::encode() const {
  Bytes out = encode_unauthenticated();
  out.insert(out.end(), mac.begin(), mac.end());
  return out;
}

M2 M2::decode(std::span<const std::uint8_t> frame) {
  Reader r(frame, MessageKind::kM2);
  M2 m;
  m.omega = r.u32();
  m.n2 = r.fixed<kNonceBytes>();
  m.kem_public_key = r.prefixed();
  m.mac = r.fixed<32>();
  r.finish();
  return m;
}

Bytes M3::encode_unauthenticated() const { return writer(MessageKind::kM3).prefixed(kem_ciphertext).take(); }

Bytes M3::encode() const {
  Bytes out = encode_unauthenticated();
  out.insert(out.end(), mac.begin(), mac.end());
  return out;
}

M3 M3::decode(std::span<const std::uint8_t> frame) {
  Reader r(frame, MessageKind::kM3);
  M3 m;
  m.kem_ciphertext = r.prefixed();
  m.mac = r.fixed<32>();
  r.finish();
  return m;
}

Bytes M4::encode() const { return writer(MessageKind::kM4).bytes(mac).take(); }

M4 M4::decode(std::span<const std::uint8_t> frame) {
  Reader r(frame, MessageKind::kM4);
  M4 m;
  m.mac = r.fixed<32>();
  r.finish();
  return m;
}

}  // namespace ldacs::proto
