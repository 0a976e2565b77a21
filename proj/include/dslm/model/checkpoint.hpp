#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dslm/model/dslm.hpp"

namespace dslm::model {

// Sectioned container: a text manifest (metadata lines, then one line per
// tensor with shape, payload offset, size and CRC-32), followed by the raw
// float64 little-endian payloads.
struct Checkpoint {
  std::map<std::string, std::string> meta;
  std::vector<std::pair<std::string, num::Tensor<double>>> tensors;

  bool has_tensor(const std::string& name) const;
  const num::Tensor<double>& tensor(const std::string& name) const;
  const std::string& get_meta(const std::string& key) const;
};

// Written to a temporary file and renamed into place.
void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Verifies every tensor's checksum.
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Model parameters are stored as `param.<name>`, the config as `model.*` meta.
template <typename Real>
void store_model(Checkpoint& ckpt, const DSLM<Real>& model);
ModelConfig model_config_of(const Checkpoint& ckpt);
template <typename Real>
DSLM<Real> model_of(const Checkpoint& ckpt);

template <typename Real>
DSLM<Real> load_model(const std::filesystem::path& path) {
  return model_of<Real>(read_checkpoint(path));
}

}  // namespace dslm::model
