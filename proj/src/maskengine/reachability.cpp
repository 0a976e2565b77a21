#include "dslm/maskengine/masks.hpp"

#include "dslm/common/error.hpp"

namespace dslm::mask {

namespace {

std::size_t node(Stream s, std::size_t pos, std::size_t length) {
  return (s == Stream::Vocal ? 0 : length) + pos;
}

}  // namespace

bool Reachability::reachable(Stream from, std::size_t from_pos, Stream to, std::size_t to_pos) const {
  if (from_pos >= length_ || to_pos >= length_) throw Error("reachability: position out of range");
  const std::size_t n = 2 * length_;
  return reach_[node(to, to_pos, length_) * n + node(from, from_pos, length_)] != 0;
}

Reachability flow_reachability(const MaskConfig& config, std::size_t length, std::size_t layers) {
  config.validate();
  if (length == 0) throw Error("flow_reachability: length must be at least 1");
  const std::size_t n = 2 * length;

  // One block: residual identity, own-stream SA edges and cross-stream BCA
  // edges read from the previous layer.
  std::vector<std::uint8_t> step(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) step[i * n + i] = 1;
  const BCAMasks bca = build_bca_masks(config.bca, length);
  auto add_stream = [&](Stream s, SAKind sa, bool enabled, bool bypass, const MaskMatrix& cross) {
    if (!enabled) return;
    const MaskMatrix self = build_sa_mask(sa, length);
    const Stream other = s == Stream::Vocal ? Stream::Accomp : Stream::Vocal;
    for (std::size_t i = 0; i < length; ++i) {
      for (std::size_t j = 0; j < length; ++j) {
        if (self.allowed(i, j)) step[node(s, i, length) * n + node(s, j, length)] = 1;
        if (!bypass && cross.allowed(i, j)) step[node(s, i, length) * n + node(other, j, length)] = 1;
      }
    }
  };
  add_stream(Stream::Vocal, config.vocal_sa, config.vocal_enabled, bca.vocal_bypass, bca.vocal_from_accomp);
  add_stream(Stream::Accomp, config.accomp_sa, config.accomp_enabled, bca.accomp_bypass, bca.accomp_from_vocal);

  std::vector<std::uint8_t> reach(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) reach[i * n + i] = 1;
  for (std::size_t l = 0; l < layers; ++l) {
    std::vector<std::uint8_t> next(n * n, 0);
    for (std::size_t dst = 0; dst < n; ++dst) {
      for (std::size_t mid = 0; mid < n; ++mid) {
        if (!step[dst * n + mid]) continue;
        for (std::size_t src = 0; src < n; ++src) next[dst * n + src] |= reach[mid * n + src];
      }
    }
    reach.swap(next);
  }
  return Reachability(length, std::move(reach));
}

}  // namespace dslm::mask
