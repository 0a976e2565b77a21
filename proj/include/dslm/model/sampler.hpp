#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dslm/common/key_value.hpp"
#include "dslm/common/rng.hpp"
#include "dslm/common/tokens.hpp"

namespace dslm::model {

struct SamplerConfig {
  std::size_t k = 50;
  double temperature = 0.9;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SamplerConfig&) const = default;

  // Keys under `sampler.` in flat config files.
  static const std::vector<std::string>& keys();
  void apply(const KeyValueFile& file);
  void store(KeyValueFile& file) const;
};

// Highest logit; the lower id wins a tie.
template <typename Real>
TokenId argmax(std::span<const Real> logits);

// Ids of the k largest logits, best first, ties to the lower id.
template <typename Real>
std::vector<TokenId> top_k_ids(std::span<const Real> logits, std::size_t k);

// Temperature-scaled softmax over the top-k set, then one draw from `rng`.
template <typename Real>
TokenId top_k_sample(std::span<const Real> logits, const SamplerConfig& config, Rng& rng);

}  // namespace dslm::model
