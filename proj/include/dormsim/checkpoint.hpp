#pragma once

#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dormsim/net.hpp"

namespace dormsim {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointFormat = "dormsim-checkpoint";

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string checksum_hex(std::uint64_t h) {
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xf];
    h >>= 4;
  }
  return std::string(buf, 16);
}

inline nlohmann::json mlp_to_json(const Mlp& net) {
  return {{"sizes", net.layer_sizes()}, {"params", net.parameters()}};
}

inline void mlp_restore_from_json(Mlp& net, const nlohmann::json& j) {
  const auto sizes = j.at("sizes").get<std::vector<int>>();
  if (sizes != net.layer_sizes()) {
    std::ostringstream msg;
    msg << "checkpoint net shape [";
    for (std::size_t i = 0; i < sizes.size(); ++i) msg << (i ? "," : "") << sizes[i];
    msg << "] does not match expected [";
    const auto& want = net.layer_sizes();
    for (std::size_t i = 0; i < want.size(); ++i) msg << (i ? "," : "") << want[i];
    msg << "]";
    throw CheckpointError(msg.str());
  }
  auto params = j.at("params").get<std::vector<double>>();
  if (params.size() != net.parameter_count())
    throw CheckpointError("checkpoint parameter count does not match net shape");
  net.parameters() = std::move(params);
}

inline nlohmann::json adam_to_json(const Adam& opt) {
  return {{"m", opt.first_moments()}, {"v", opt.second_moments()}, {"t", opt.updates()}};
}

inline void adam_restore_from_json(Adam& opt, const nlohmann::json& j) {
  auto m = j.at("m").get<std::vector<double>>();
  auto v = j.at("v").get<std::vector<double>>();
  if (m.size() != opt.first_moments().size() || v.size() != opt.second_moments().size())
    throw CheckpointError("checkpoint optimizer state does not match parameter count");
  opt.restore(std::move(m), std::move(v), j.at("t").get<std::uint64_t>());
}

struct Checkpoint {
  int version = kCheckpointVersion;
  std::string agent;
  std::uint64_t seed = 0;
  long episode = 0;
  nlohmann::json payload;
};

inline void write_checkpoint(const Checkpoint& ck, std::ostream& os) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = ck.version;
  j["agent"] = ck.agent;
  j["seed"] = ck.seed;
  j["episode"] = ck.episode;
  j["payload"] = ck.payload;
  j["checksum"] = checksum_hex(fnv1a(ck.payload.dump()));
  os << j.dump(2) << '\n';
}

inline Checkpoint read_checkpoint(std::istream& is) {
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat)
    throw CheckpointError("not a dormsim checkpoint");
  Checkpoint ck;
  ck.version = j.at("version").get<int>();
  if (ck.version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(ck.version));
  ck.agent = j.at("agent").get<std::string>();
  ck.seed = j.at("seed").get<std::uint64_t>();
  ck.episode = j.at("episode").get<long>();
  ck.payload = j.at("payload");
  const std::string expected = checksum_hex(fnv1a(ck.payload.dump()));
  const std::string found = j.at("checksum").get<std::string>();
  if (found != expected)
    throw CheckpointError("checkpoint checksum mismatch: payload corrupted");
  return ck;
}

inline void save_checkpoint_file(const Checkpoint& ck, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw CheckpointError("cannot open checkpoint file for writing: " + path);
  write_checkpoint(ck, f);
  if (!f) throw CheckpointError("failed writing checkpoint file: " + path);
}

inline Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw CheckpointError("cannot open checkpoint file: " + path);
  return read_checkpoint(f);
}

}  // namespace dormsim
