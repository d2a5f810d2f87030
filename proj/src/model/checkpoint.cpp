#include "cdg/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "cdg/common/errors.hpp"

namespace cdg {
namespace {

constexpr char kMagic[8] = {'C', 'D', 'G', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void write_le(std::ostream& out, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::filesystem::path& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw IoError("truncated checkpoint " + path.string());
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

void write_doubles(std::ostream& out, std::span<const double> values) {
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
  } else {
    for (double v : values) write_le(out, v);
  }
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  nlohmann::json header;
  header["config"] = ckpt.config;
  header["vocabulary"] = ckpt.vocabulary;
  header["conditions"] = ckpt.conditions;
  header["step"] = ckpt.step;
  header["metadata"] = ckpt.metadata;
  auto directory = nlohmann::json::array();
  std::vector<const Tensor*> payload;
  std::size_t offset = 0;
  auto add = [&](const std::string& name, const Tensor& t) {
    directory.push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    payload.push_back(&t);
    offset += t.numel();
  };
  for (const auto& [name, t] : ckpt.parameters) add(name, t);
  for (const auto& [name, t] : ckpt.optimizer_state) add(name, t);
  header["tensors"] = std::move(directory);
  const std::string text = header.dump();

  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof(kMagic));
    write_le<std::uint32_t>(out, kCheckpointVersion);
    write_le<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Tensor* t : payload) write_doubles(out, t->data());
    if (!out.flush()) throw IoError("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw IoError(path.string() + " is not a checkpoint");
  }
  const auto version = read_le<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
  }
  const auto header_size = read_le<std::uint64_t>(in, path);
  std::string text(header_size, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_size))) {
    throw IoError("truncated checkpoint header in " + path.string());
  }
  Checkpoint ckpt;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
    ckpt.config = header.at("config").get<ModelConfig>();
    ckpt.vocabulary = header.at("vocabulary").get<std::vector<std::string>>();
    ckpt.conditions = header.at("conditions").get<std::vector<std::string>>();
    ckpt.step = header.at("step").get<std::uint64_t>();
    ckpt.metadata = header.value("metadata", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint header in " + path.string() + ": " + e.what());
  }

  std::size_t expected_offset = 0;
  for (const auto& entry : header.at("tensors")) {
    const auto name = entry.at("name").get<std::string>();
    const auto shape = entry.at("shape").get<Shape>();
    if (entry.at("offset").get<std::size_t>() != expected_offset) {
      throw IoError("non-contiguous tensor " + name + " in " + path.string());
    }
    const bool optimizer = name.rfind("adam.", 0) == 0;
    auto t = Tensor::zeros(shape, !optimizer);
    auto data = t.data();
    for (auto& v : data) v = read_le<double>(in, path);
    expected_offset += t.numel();
    if (optimizer) {
      ckpt.optimizer_state.emplace_back(name, std::move(t));
    } else {
      ckpt.parameters.add(name, std::move(t));
    }
  }
  if (in.peek() != std::ifstream::traits_type::eof()) throw IoError("trailing bytes in checkpoint " + path.string());
  return ckpt;
}

}  // namespace cdg
