#include "ttvr/session/protocol.hpp"

#include <cmath>
#include <set>

namespace ttvr::session {

using nlohmann::json;

namespace {

void only_fields(const json& j, std::initializer_list<const char*> allowed) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ProtocolError("unknown field \"" + k + "\"");
}

const json& field(const json& j, const char* name) {
  auto it = j.find(name);
  if (it == j.end()) throw ProtocolError(std::string("missing field \"") + name + "\"");
  return *it;
}

std::string string_field(const json& j, const char* name) {
  const json& f = field(j, name);
  if (!f.is_string()) throw ProtocolError(std::string("field \"") + name + "\" must be a string");
  return f.get<std::string>();
}

}  // namespace

ClientMessage parse_client_message(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error&) {
    throw ProtocolError("not valid JSON");
  }
  if (!j.is_object()) throw ProtocolError("message must be a JSON object");
  const json& v = field(j, "v");
  if (!v.is_number_integer() || v.get<std::int64_t>() != kProtocolVersion)
    throw ProtocolError("unsupported protocol version");
  const std::string type = string_field(j, "type");
  if (type == "cmd") {
    only_fields(j, {"v", "type", "dof", "velocity_fraction", "coupled", "seq"});
    CmdMessage m;
    const auto dof = kinematics::parse_dof(string_field(j, "dof"));
    if (!dof) throw ProtocolError("unknown dof");
    m.command.dof = *dof;
    const json& vf = field(j, "velocity_fraction");
    if (!vf.is_number()) throw ProtocolError("field \"velocity_fraction\" must be a number");
    m.command.velocity_fraction = vf.get<double>();
    if (!std::isfinite(m.command.velocity_fraction) || std::abs(m.command.velocity_fraction) > 1.0)
      throw ProtocolError("velocity_fraction must be in [-1, 1]");
    if (auto it = j.find("coupled"); it != j.end()) {
      if (!it->is_boolean()) throw ProtocolError("field \"coupled\" must be a boolean");
      m.command.coupled = it->get<bool>();
    }
    if (auto it = j.find("seq"); it != j.end()) {
      if (!it->is_number_integer() || it->get<std::int64_t>() < 0)
        throw ProtocolError("field \"seq\" must be a non-negative integer");
      m.command.seq = it->get<std::int64_t>();
    }
    return m;
  }
  if (type == "mode") {
    only_fields(j, {"v", "type", "mode"});
    const auto mode = copilot::parse_mode(string_field(j, "mode"));
    if (!mode) throw ProtocolError("unknown mode");
    return ModeMessage{*mode};
  }
  if (type == "phase") {
    only_fields(j, {"v", "type", "phase"});
    const auto phase = copilot::parse_phase(string_field(j, "phase"));
    if (!phase) throw ProtocolError("unknown phase");
    return PhaseMessage{*phase};
  }
  throw ProtocolError("unknown message type \"" + type + "\"");
}

std::string encode_client_message(const ClientMessage& m) {
  json j{{"v", kProtocolVersion}};
  if (const auto* c = std::get_if<CmdMessage>(&m)) {
    j["type"] = "cmd";
    j["dof"] = kinematics::to_string(c->command.dof);
    j["velocity_fraction"] = c->command.velocity_fraction;
    if (c->command.coupled) j["coupled"] = true;
    if (c->command.seq >= 0) j["seq"] = c->command.seq;
  } else if (const auto* md = std::get_if<ModeMessage>(&m)) {
    j["type"] = "mode";
    j["mode"] = copilot::to_string(md->mode);
  } else {
    j["type"] = "phase";
    j["phase"] = copilot::to_string(std::get<PhaseMessage>(m).phase);
  }
  return j.dump();
}

std::string encode_state(const copilot::SessionState& s, std::int64_t ack) {
  json scales = json::object();
  for (auto d : kinematics::kAllDofs) scales[std::string(kinematics::to_string(d))] = s.scales[static_cast<int>(d)];
  const auto& p = s.tip.position;
  const auto& a = s.tip.axis;
  json j{{"v", kProtocolVersion},
         {"type", "state"},
         {"t", s.t},
         {"joints", s.joints.to_array()},
         {"tip", {p.x(), p.y(), p.z(), a.x(), a.y(), a.z()}},
         {"phase", copilot::to_string(s.phase)},
         {"mode", copilot::to_string(s.mode)},
         {"scales", scales},
         {"terminal", s.terminal()},
         {"intervening", s.intervening},
         {"manual_only", s.manual_only},
         {"blocked", s.blocked},
         {"total_time", s.total_time},
         {"intervention_time", s.intervention_time},
         {"plan", {{"index", s.plan_index}, {"size", s.plan_size}}},
         {"ack", ack >= 0 ? json(ack) : json(nullptr)}};
  return j.dump();
}

std::string encode_event(const copilot::SessionEvent& e) {
  return json{{"v", kProtocolVersion}, {"type", "event"}, {"t", e.t}, {"kind", e.kind}, {"payload", e.payload}}.dump();
}

std::string encode_error(std::string_view message, std::string_view ref) {
  return json{{"v", kProtocolVersion},
              {"type", "error"},
              {"message", message},
              {"ref", ref.empty() ? json(nullptr) : json(ref)}}
      .dump();
}

}  // namespace ttvr::session
