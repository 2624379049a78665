#pragma once

#include "ttvr/copilot/session.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace ttvr::session {

inline constexpr int kProtocolVersion = 1;

class ProtocolError : public Error {
 public:
  using Error::Error;
};

struct CmdMessage {
  copilot::OperatorCommand command;
};
struct ModeMessage {
  copilot::ControlMode mode;
};
struct PhaseMessage {
  copilot::Phase phase;
};
using ClientMessage = std::variant<CmdMessage, ModeMessage, PhaseMessage>;

/// Strict decoding: wrong version, unknown type, missing or unknown fields and
/// out-of-range values throw ProtocolError.
ClientMessage parse_client_message(std::string_view text);

std::string encode_client_message(const ClientMessage& m);
std::string encode_state(const copilot::SessionState& s, std::int64_t ack = -1);
std::string encode_event(const copilot::SessionEvent& e);
/// `ref` names the message type being answered, or is empty.
std::string encode_error(std::string_view message, std::string_view ref = {});

}  // namespace ttvr::session
