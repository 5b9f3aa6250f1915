#include "deeptarget/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include <json.hpp>
#include <zlib.h>

#include "deeptarget/error.hpp"

namespace deeptarget {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  void put_string(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::uint8_t* data, std::size_t size) : data_(data), size_(size) {}

  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)), sizeof(T));
    return v;
  }
  const std::uint8_t* take(std::size_t n) {
    if (n > size_ - pos_) throw FormatError("checkpoint: truncated file");
    const std::uint8_t* p = data_ + pos_;
    pos_ += n;
    return p;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  std::size_t remaining() const { return size_ - pos_; }

 private:
  const std::uint8_t* data_;
  std::size_t size_;
  std::size_t pos_ = 0;
};

std::uint32_t crc32_of(const std::uint8_t* data, std::size_t n) {
  return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data, static_cast<uInt>(n)));
}

}  // namespace

std::uint32_t crc32_checksum(std::span<const std::uint8_t> bytes) {
  return crc32_of(bytes.data(), bytes.size());
}

std::vector<std::uint8_t> encode_checkpoint(const DeepTargetModel& model) {
  Writer w;
  w.put_bytes(kCheckpointMagic, 8);
  w.put(kCheckpointVersion);
  nlohmann::json header;
  header["architecture"] = nlohmann::json::parse(model.spec().to_json());
  header["metadata"] = {{"pretrain_epochs", model.metadata().pretrain_epochs},
                        {"finetune_epochs", model.metadata().finetune_epochs},
                        {"seed", model.metadata().seed}};
  w.put_string(header.dump());
  w.put(static_cast<std::uint32_t>(model.params().size()));
  for (const auto& [name, p] : model.params()) {
    w.put_string(name);
    w.put(static_cast<std::uint32_t>(p.value.shape().size()));
    for (std::size_t d : p.value.shape()) w.put(static_cast<std::uint64_t>(d));
    w.put_bytes(p.value.data().data(), p.value.data().size() * sizeof(double));
  }
  const std::uint32_t crc = crc32_of(w.bytes().data(), w.bytes().size());
  w.put(crc);
  return std::move(w.bytes());
}

DeepTargetModel decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                                  const std::optional<ArchitectureSpec>& expected) {
  if (bytes.size() < 8 + 2 + 4) throw FormatError("checkpoint: truncated file");
  if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0) throw FormatError("checkpoint: bad magic");
  const std::size_t body = bytes.size() - 4;
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + body, 4);
  if (crc32_of(bytes.data(), body) != stored_crc) throw FormatError("checkpoint: checksum mismatch");

  Reader r(bytes.data() + 8, body - 8);
  const auto version = r.get<std::uint16_t>();
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version));
  }
  ArchitectureSpec spec;
  TrainingMetadata meta;
  try {
    const auto header = nlohmann::json::parse(r.get_string());
    spec = ArchitectureSpec::from_json(header.at("architecture").dump());
    const auto& m = header.at("metadata");
    meta.pretrain_epochs = m.at("pretrain_epochs").get<std::uint64_t>();
    meta.finetune_epochs = m.at("finetune_epochs").get<std::uint64_t>();
    meta.seed = m.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint: bad header: ") + e.what());
  } catch (const DataError& e) {
    throw FormatError(std::string("checkpoint: bad architecture: ") + e.what());
  }
  if (expected && !(*expected == spec)) {
    throw FormatError("checkpoint: architecture " + spec.render() + " does not match the requested " +
                      expected->render());
  }

  DeepTargetModel model(spec, 0);
  model.metadata() = meta;
  const auto count = r.get<std::uint32_t>();
  if (count != model.params().size()) {
    throw FormatError("checkpoint: expected " + std::to_string(model.params().size()) +
                      " tensors, found " + std::to_string(count));
  }
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::string name = r.get_string();
    if (!model.params().contains(name)) throw FormatError("checkpoint: unexpected tensor '" + name + "'");
    nn::NumericArray& value = model.params().at(name).value;
    const auto rank = r.get<std::uint32_t>();
    if (rank != value.shape().size()) throw FormatError("checkpoint: rank mismatch for '" + name + "'");
    for (std::size_t d = 0; d < rank; ++d) {
      if (r.get<std::uint64_t>() != value.shape()[d]) {
        throw FormatError("checkpoint: shape mismatch for '" + name + "'");
      }
    }
    const std::size_t n = value.data().size() * sizeof(double);
    std::memcpy(value.data().data(), r.take(n), n);
  }
  if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes after the tensor table");
  return model;
}

void save_checkpoint(const DeepTargetModel& model, const std::string& path) {
  const auto bytes = encode_checkpoint(model);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write checkpoint '" + tmp + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw DataError("write failed for '" + tmp + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot move checkpoint into place at '" + path + "': " + ec.message());
  }
}

DeepTargetModel load_checkpoint(const std::string& path, const std::optional<ArchitectureSpec>& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes, expected);
}

}  // namespace deeptarget
