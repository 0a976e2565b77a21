#include "dslm/model/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dslm/common/error.hpp"

namespace dslm::model {

void SamplerConfig::validate() const {
  if (k < 1) throw Error("sampler: k must be at least 1");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error("sampler: temperature must be positive and finite");
  }
}

const std::vector<std::string>& SamplerConfig::keys() {
  static const std::vector<std::string> k = {"sampler.k", "sampler.temperature", "sampler.seed"};
  return k;
}

void SamplerConfig::apply(const KeyValueFile& file) {
  if (file.contains("sampler.k")) {
    const long long v = parse_int(file.get("sampler.k"), "sampler.k");
    if (v < 1) throw Error("sampler.k must be at least 1");
    k = static_cast<std::size_t>(v);
  }
  if (file.contains("sampler.temperature")) {
    temperature = parse_double(file.get("sampler.temperature"), "sampler.temperature");
  }
  if (file.contains("sampler.seed")) seed = static_cast<std::uint64_t>(parse_int(file.get("sampler.seed"), "sampler.seed"));
  validate();
}

void SamplerConfig::store(KeyValueFile& file) const {
  file.set("sampler.k", std::to_string(k));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", temperature);
  file.set("sampler.temperature", buf);
  file.set("sampler.seed", std::to_string(seed));
}

template <typename Real>
TokenId argmax(std::span<const Real> logits) {
  if (logits.empty()) throw Error("argmax of an empty row");
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[best]) best = i;
  }
  return static_cast<TokenId>(best);
}

template <typename Real>
std::vector<TokenId> top_k_ids(std::span<const Real> logits, std::size_t k) {
  if (k == 0 || k > logits.size()) {
    throw Error("top-k: k = " + std::to_string(k) + " outside [1, " + std::to_string(logits.size()) + "]");
  }
  std::vector<TokenId> ids(logits.size());
  std::iota(ids.begin(), ids.end(), 0);
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k), ids.end(), [&](TokenId a, TokenId b) {
    return logits[a] > logits[b] || (logits[a] == logits[b] && a < b);
  });
  ids.resize(k);
  return ids;
}

template <typename Real>
TokenId top_k_sample(std::span<const Real> logits, const SamplerConfig& config, Rng& rng) {
  config.validate();
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!std::isfinite(static_cast<double>(logits[i]))) {
      throw Error("top-k: logit " + std::to_string(i) + " is not finite");
    }
  }
  const auto ids = top_k_ids(logits, config.k);
  const double top = static_cast<double>(logits[ids[0]]) / config.temperature;
  std::vector<double> weights(ids.size());
  double total = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    weights[i] = std::exp(static_cast<double>(logits[ids[i]]) / config.temperature - top);
    total += weights[i];
  }
  const double u = rng.uniform01() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    acc += weights[i];
    if (u < acc) return ids[i];
  }
  return ids.back();
}

template TokenId argmax<float>(std::span<const float>);
template TokenId argmax<double>(std::span<const double>);
template std::vector<TokenId> top_k_ids<float>(std::span<const float>, std::size_t);
template std::vector<TokenId> top_k_ids<double>(std::span<const double>, std::size_t);
template TokenId top_k_sample<float>(std::span<const float>, const SamplerConfig&, Rng&);
template TokenId top_k_sample<double>(std::span<const double>, const SamplerConfig&, Rng&);

}  // namespace dslm::model
