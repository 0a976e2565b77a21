#include "dslm/model/checkpoint.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "dslm/common/error.hpp"
#include "dslm/common/key_value.hpp"

namespace dslm::model {
namespace {

constexpr const char* kMagic = "DSLMCKPT 1";

std::string shape_text(const num::Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out;
}

num::Shape parse_shape(const std::string& text) {
  num::Shape shape;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, 'x')) shape.push_back(static_cast<std::size_t>(parse_int(part, "tensor shape")));
  if (shape.empty()) throw Error("checkpoint: empty tensor shape");
  return shape;
}

std::string encode(const num::Tensor<double>& t) {
  std::string bytes(t.size() * sizeof(double), '\0');
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(t[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  return bytes;
}

void decode(const char* bytes, num::Tensor<double>& t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    t[i] = std::bit_cast<double>(bits);
  }
}

unsigned long checksum(const std::string& bytes, std::size_t offset, std::size_t size) {
  return crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data() + offset), static_cast<uInt>(size));
}

}  // namespace

bool Checkpoint::has_tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return true;
  }
  return false;
}

const num::Tensor<double>& Checkpoint::tensor(const std::string& name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return t;
  }
  throw Error("checkpoint has no tensor '" + name + "'");
}

const std::string& Checkpoint::get_meta(const std::string& key) const {
  const auto it = meta.find(key);
  if (it == meta.end()) throw Error("checkpoint has no metadata '" + key + "'");
  return it->second;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::string payload;
  std::ostringstream manifest;
  manifest << kMagic << '\n';
  for (const auto& [k, v] : ckpt.meta) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw Error("checkpoint metadata '" + k + "' is not a single-line value");
    }
    manifest << "meta " << k << ' ' << v << '\n';
  }
  for (const auto& [name, t] : ckpt.tensors) {
    const std::string bytes = encode(t);
    const std::size_t offset = payload.size();
    payload += bytes;
    char crc[16];
    std::snprintf(crc, sizeof crc, "%08lx", checksum(payload, offset, bytes.size()));
    manifest << "tensor " << name << ' ' << shape_text(t.shape()) << ' ' << offset << ' ' << bytes.size() << ' '
             << crc << '\n';
  }
  manifest << "payload " << payload.size() << '\n';

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + tmp.string());
    const std::string m = manifest.str();
    out.write(m.data(), static_cast<std::streamsize>(m.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw Error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  const auto fail = [&](const std::string& why) { return Error("checkpoint " + path.string() + ": " + why); };
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw fail("not a dslm checkpoint");

  struct Entry {
    std::string name;
    num::Shape shape;
    std::size_t offset, size;
    unsigned long crc;
  };
  Checkpoint ckpt;
  std::vector<Entry> entries;
  std::size_t payload_size = 0;
  bool have_payload = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "meta") {
      std::string key;
      ls >> key;
      std::string value;
      std::getline(ls, value);
      if (!value.empty() && value[0] == ' ') value.erase(0, 1);
      ckpt.meta[key] = value;
    } else if (kind == "tensor") {
      Entry e;
      std::string shape, crc;
      if (!(ls >> e.name >> shape >> e.offset >> e.size >> crc)) throw fail("malformed tensor line '" + line + "'");
      e.shape = parse_shape(shape);
      e.crc = std::stoul(crc, nullptr, 16);
      if (num::shape_size(e.shape) * sizeof(double) != e.size) throw fail("tensor " + e.name + " size mismatch");
      entries.push_back(std::move(e));
    } else if (kind == "payload") {
      if (!(ls >> payload_size)) throw fail("malformed payload line");
      have_payload = true;
      break;
    } else {
      throw fail("unexpected manifest line '" + line + "'");
    }
  }
  if (!have_payload) throw fail("truncated manifest");
  std::string payload(payload_size, '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload_size));
  if (static_cast<std::size_t>(in.gcount()) != payload_size) throw fail("truncated payload");
  for (const Entry& e : entries) {
    if (e.offset + e.size > payload_size) throw fail("tensor " + e.name + " lies outside the payload");
    if (checksum(payload, e.offset, e.size) != e.crc) throw fail("checksum mismatch in tensor " + e.name);
    num::Tensor<double> t(e.shape);
    decode(payload.data() + e.offset, t);
    ckpt.tensors.emplace_back(e.name, std::move(t));
  }
  return ckpt;
}

template <typename Real>
void store_model(Checkpoint& ckpt, const DSLM<Real>& model) {
  KeyValueFile kv;
  model.config().store(kv);
  for (const auto& key : kv.keys()) ckpt.meta[key] = kv.get(key);
  model.params().visit([&](const std::string& name, const num::Tensor<Real>& t) {
    ckpt.tensors.emplace_back("param." + name, t.template cast<double>());
  });
}

ModelConfig model_config_of(const Checkpoint& ckpt) {
  KeyValueFile kv;
  for (const auto& key : ModelConfig::keys()) kv.set(key, ckpt.get_meta(key));
  ModelConfig c;
  c.apply(kv);
  c.validate();
  return c;
}

template <typename Real>
DSLM<Real> model_of(const Checkpoint& ckpt) {
  const ModelConfig config = model_config_of(ckpt);
  auto params = DSLMParams<Real>::shaped(config);
  params.visit([&](const std::string& name, num::Tensor<Real>& t) {
    const auto& stored = ckpt.tensor("param." + name);
    if (stored.shape() != t.shape()) {
      throw Error("checkpoint tensor " + name + " has shape " + num::shape_string(stored.shape()) + ", expected " +
                  num::shape_string(t.shape()));
    }
    t = stored.template cast<Real>();
  });
  return DSLM<Real>(config, std::move(params));
}

template void store_model<float>(Checkpoint&, const DSLM<float>&);
template void store_model<double>(Checkpoint&, const DSLM<double>&);
template DSLM<float> model_of<float>(const Checkpoint&);
template DSLM<double> model_of<double>(const Checkpoint&);

}  // namespace dslm::model
