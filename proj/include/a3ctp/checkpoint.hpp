#pragma once

// Binary checkpoint format (all integers and floats little-endian):
//
//   magic        8 bytes  "A3CTPCKP"
//   version      u32      kCheckpointFormatVersion
//   param_ver    u64      ParamSet::version()
//   meta_len     u32      followed by meta_len bytes of "key=value\n" text
//   layer_count  u32
//   per layer:   u32 name_len, name bytes, u32 fan_out, u32 fan_in
//   has_adam     u8       0 or 1
//   if has_adam: u64 step, f64 learning_rate, f64 beta1, f64 beta2, f64 epsilon
//   payload      f64 values: for each layer weights (row-major) then bias;
//                if has_adam the same walk for the first moment, then the
//                second moment.
//
// See docs/checkpoint_format.md.

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "a3ctp/adam.hpp"
#include "a3ctp/tensor.hpp"

namespace a3ctp {

inline constexpr char kCheckpointMagic[8] = {'A', '3', 'C', 'T', 'P', 'C', 'K', 'P'};
inline constexpr uint32_t kCheckpointFormatVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ParamSet params;
  std::optional<AdamState> optimizer;
  std::map<std::string, std::string> meta;
};

namespace detail {

inline void put_u64(std::ostream& os, uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}
inline void put_u32(std::ostream& os, uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}
inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<uint64_t>(v)); }

inline uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw CheckpointError("checkpoint: truncated file");
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
inline uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw CheckpointError("checkpoint: truncated file");
  uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
inline double get_f64(std::istream& is) { return std::bit_cast<double>(get_u64(is)); }

inline void put_values(std::ostream& os, const ParamSet& p) {
  p.for_each_value([&](double v) { put_f64(os, v); });
}
inline void get_values(std::istream& is, ParamSet& p) {
  p.for_each_value([&](double& v) { v = get_f64(is); });
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const ParamSet& params, const AdamState* optimizer = nullptr,
                             const std::map<std::string, std::string>& meta = {}) {
  using namespace detail;
  if (optimizer) {
    params.require_same_shape(optimizer->first_moment, "write_checkpoint");
    params.require_same_shape(optimizer->second_moment, "write_checkpoint");
  }
  os.write(kCheckpointMagic, 8);
  put_u32(os, kCheckpointFormatVersion);
  put_u64(os, params.version());
  std::string meta_text;
  for (const auto& [k, v] : meta) meta_text += k + "=" + v + "\n";
  put_u32(os, static_cast<uint32_t>(meta_text.size()));
  os.write(meta_text.data(), static_cast<std::streamsize>(meta_text.size()));
  put_u32(os, static_cast<uint32_t>(params.num_layers()));
  for (const Layer& l : params.layers()) {
    put_u32(os, static_cast<uint32_t>(l.name.size()));
    os.write(l.name.data(), static_cast<std::streamsize>(l.name.size()));
    put_u32(os, static_cast<uint32_t>(l.fan_out()));
    put_u32(os, static_cast<uint32_t>(l.fan_in()));
  }
  os.put(optimizer ? 1 : 0);
  if (optimizer) {
    put_u64(os, optimizer->step);
    put_f64(os, optimizer->config.learning_rate);
    put_f64(os, optimizer->config.beta1);
    put_f64(os, optimizer->config.beta2);
    put_f64(os, optimizer->config.epsilon);
  }
  put_values(os, params);
  if (optimizer) {
    put_values(os, optimizer->first_moment);
    put_values(os, optimizer->second_moment);
  }
  if (!os) throw CheckpointError("checkpoint: write failed");
}

inline Checkpoint read_checkpoint(std::istream& is) {
  using namespace detail;
  char magic[8];
  if (!is.read(magic, 8) || std::string(magic, 8) != std::string(kCheckpointMagic, 8))
    throw CheckpointError("checkpoint: bad magic");
  const uint32_t version = get_u32(is);
  if (version != kCheckpointFormatVersion)
    throw CheckpointError("checkpoint: unsupported format version " + std::to_string(version));

  Checkpoint ck;
  const uint64_t param_version = get_u64(is);
  const uint32_t meta_len = get_u32(is);
  std::string meta_text(meta_len, '\0');
  if (!is.read(meta_text.data(), meta_len)) throw CheckpointError("checkpoint: truncated meta");
  std::istringstream meta_stream(meta_text);
  for (std::string line; std::getline(meta_stream, line);) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError("checkpoint: malformed meta line");
    ck.meta[line.substr(0, eq)] = line.substr(eq + 1);
  }

  const uint32_t layer_count = get_u32(is);
  for (uint32_t i = 0; i < layer_count; ++i) {
    const uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    if (!is.read(name.data(), name_len)) throw CheckpointError("checkpoint: truncated manifest");
    const uint32_t fan_out = get_u32(is);
    const uint32_t fan_in = get_u32(is);
    ck.params.add_layer(std::move(name), fan_in, fan_out);
  }
  ck.params.set_version(param_version);

  const int has_adam = is.get();
  if (has_adam != 0 && has_adam != 1) throw CheckpointError("checkpoint: bad optimizer flag");
  if (has_adam) {
    AdamState st = AdamState::for_params(ck.params);
    st.step = get_u64(is);
    st.config.learning_rate = get_f64(is);
    st.config.beta1 = get_f64(is);
    st.config.beta2 = get_f64(is);
    st.config.epsilon = get_f64(is);
    ck.optimizer = std::move(st);
  }
  get_values(is, ck.params);
  if (ck.optimizer) {
    get_values(is, ck.optimizer->first_moment);
    get_values(is, ck.optimizer->second_moment);
  }
  if (is.peek() != std::char_traits<char>::eof()) throw CheckpointError("checkpoint: trailing bytes");
  return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const ParamSet& params,
                            const AdamState* optimizer = nullptr,
                            const std::map<std::string, std::string>& meta = {}) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw CheckpointError("checkpoint: cannot open " + path.string());
  write_checkpoint(os, params, optimizer, meta);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("checkpoint: cannot open " + path.string());
  return read_checkpoint(is);
}

}  // namespace a3ctp
