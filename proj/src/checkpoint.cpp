#include "poselift/data/checkpoint.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace poselift {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

void put_u64(std::string& out, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  if (at + 8 > in.size()) throw FormatError("checkpoint: truncated header");
  std::uint64_t v;
  std::memcpy(&v, in.data() + at, 8);
  return v;
}

json vec_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vec_from(const json& j) {
  auto v = j.get<std::vector<double>>();
  return Eigen::Map<Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  json tensors = json::array();
  std::string data;
  for (const auto& [name, e] : ckpt.params.entries()) {
    tensors.push_back({{"name", name}, {"shape", {e.value.rows(), e.value.cols()}}, {"trainable", e.trainable}});
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = e.value;
    data.append(reinterpret_cast<const char*>(rm.data()), sizeof(double) * static_cast<std::size_t>(rm.size()));
  }
  json manifest = {
      {"model",
       {{"joints", ckpt.model.joints},
        {"hidden", ckpt.model.hidden},
        {"lstm_layers", ckpt.model.lstm_layers},
        {"projector_width", ckpt.model.projector_width}}},
      {"clip_len", ckpt.clip_len},
      {"k", ckpt.model.joints},
      {"joint_names", ckpt.joint_names},
      {"norm",
       {{"min2d", vec_json(ckpt.stats.min2d)},
        {"max2d", vec_json(ckpt.stats.max2d)},
        {"min3d", vec_json(ckpt.stats.min3d)},
        {"max3d", vec_json(ckpt.stats.max3d)}}},
      {"tensors", tensors},
  };
  const std::string m = manifest.dump();
  std::string out(kCheckpointMagic, kMagicLen);
  put_u64(out, m.size());
  out += m;
  put_u64(out, data.size());
  out += data;
  return out;
}

Checkpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < kMagicLen || bytes.compare(0, kMagicLen, kCheckpointMagic) != 0)
    throw FormatError("checkpoint: bad magic (expected PLIFT1)");
  std::size_t at = kMagicLen;
  const std::uint64_t mlen = get_u64(bytes, at);
  at += 8;
  if (at + mlen > bytes.size()) throw FormatError("checkpoint: truncated manifest");
  json manifest;
  try {
    manifest = json::parse(bytes.substr(at, mlen));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed manifest: ") + e.what());
  }
  at += mlen;
  const std::uint64_t dlen = get_u64(bytes, at);
  at += 8;

  Checkpoint ck;
  std::uint64_t expected = 0;
  try {
    const json& m = manifest.at("model");
    ck.model.joints = m.at("joints").get<int>();
    ck.model.hidden = m.at("hidden").get<int>();
    ck.model.lstm_layers = m.at("lstm_layers").get<int>();
    ck.model.projector_width = m.at("projector_width").get<int>();
    ck.clip_len = manifest.at("clip_len").get<int>();
    ck.joint_names = manifest.at("joint_names").get<std::vector<std::string>>();
    const json& n = manifest.at("norm");
    ck.stats = {vec_from(n.at("min2d")), vec_from(n.at("max2d")), vec_from(n.at("min3d")), vec_from(n.at("max3d"))};
    for (const json& t : manifest.at("tensors")) {
      const auto shape = t.at("shape").get<std::vector<std::int64_t>>();
      if (shape.size() != 2 || shape[0] < 0 || shape[1] < 0)
        throw FormatError("checkpoint: bad shape for tensor " + t.at("name").get<std::string>());
      expected += 8ull * static_cast<std::uint64_t>(shape[0] * shape[1]);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: incomplete manifest: ") + e.what());
  }
  if (dlen != expected)
    throw FormatError("checkpoint: manifest declares " + std::to_string(expected) + " data bytes, header says " +
                      std::to_string(dlen));
  if (bytes.size() - at != dlen)
    throw FormatError("checkpoint: expected " + std::to_string(dlen) + " data bytes, found " +
                      std::to_string(bytes.size() - at));

  for (const json& t : manifest.at("tensors")) {
    const auto shape = t.at("shape").get<std::vector<std::int64_t>>();
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(shape[0], shape[1]);
    const std::size_t n = sizeof(double) * static_cast<std::size_t>(rm.size());
    std::memcpy(rm.data(), bytes.data() + at, n);
    at += n;
    ck.params.add(t.at("name").get<std::string>(), Matrix(rm), t.value("trainable", true));
  }
  return ck;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  const std::string bytes = serialize_checkpoint(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace poselift
