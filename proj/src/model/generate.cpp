#include "dslm/model/generate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dslm/common/error.hpp"
#include "dslm/corpus/assemble.hpp"
#include "dslm/numcore/ops.hpp"

namespace dslm::model {
namespace {

using mask::Stream;
using mask::TaskId;
using num::Shape;

std::vector<TokenId> concat(std::vector<TokenId> a, const std::vector<TokenId>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// [prefix][separator][BOS]
std::vector<TokenId> lead(const std::vector<TokenId>& prefix, TokenId separator) {
  std::vector<TokenId> out = prefix;
  if (separator != tokens::kPad) out.push_back(separator);
  out.push_back(tokens::kBos);
  return out;
}

// Rows of one stream at every layer, grown one position per step.
template <typename Real>
struct StreamState {
  std::size_t d = 0;
  std::vector<std::vector<Real>> layers;  // layers[l]: rows of H^l, row-major
  std::vector<Real> final_rows;           // E rows

  std::size_t rows(std::size_t l) const { return layers[l].size() / d; }
  num::Tensor<Real> take(std::size_t l, std::size_t count) const {
    return num::Tensor<Real>(Shape{count, d},
                             std::vector<Real>(layers[l].begin(), layers[l].begin() + static_cast<std::ptrdiff_t>(count * d)));
  }
  num::Tensor<Real> row(std::size_t l, std::size_t i) const {
    return num::Tensor<Real>(Shape{1, d}, std::vector<Real>(layers[l].begin() + static_cast<std::ptrdiff_t>(i * d),
                                                            layers[l].begin() + static_cast<std::ptrdiff_t>((i + 1) * d)));
  }
  void append(std::size_t l, const num::Tensor<Real>& t) {
    layers[l].insert(layers[l].end(), t.values().begin(), t.values().end());
  }
};

std::string conditions_suffix(TaskId task) {
  return " (" + std::string(mask::task_name(task)) + " conditions: " + task_conditions(task) + ")";
}

}  // namespace

std::string task_conditions(TaskId task) {
  switch (task) {
    case TaskId::LyricsToSong: return "Lyrics, [Vocal prompt], [Accompaniment prompt]";
    case TaskId::LyricsToVocals: return "Lyrics, [Vocal prompt]";
    case TaskId::AccompanimentToSong: return "Lyrics, Accompaniment, [Vocal prompt]";
    case TaskId::VocalsToSong: return "Vocals, [Lyrics], [Accompaniment prompt]";
    case TaskId::MusicContinuation: return "Accompaniment prompt";
    case TaskId::SongEditing: return "Lyrics, Vocals, Accompaniment";
    case TaskId::VocalsEditing: return "Lyrics, Vocals";
    case TaskId::VocalsEditingInSong: return "Lyrics, Vocals, Accompaniment";
  }
  return "";
}

DecodePlan plan_generation(TaskId task, const GenerationConditions& c, std::size_t max_context) {
  DecodePlan plan;
  plan.task = task;
  plan.config = mask::route_task(task);
  const auto require = [&](bool present, const std::string& what) {
    if (!present) throw UsageError("missing " + what + conditions_suffix(task));
  };
  const auto forbid = [&](bool present, const std::string& what) {
    if (present) throw UsageError("unexpected " + what + conditions_suffix(task));
  };
  const bool lyrics = c.lyrics.has_value();
  const bool vp = !c.vocal_prompt.empty();
  const bool ap = !c.accomp_prompt.empty();
  const bool vt = c.vocal_track.has_value();
  const bool at = c.accomp_track.has_value();
  const bool edit = c.edit.has_value();
  const bool editing =
      task == TaskId::SongEditing || task == TaskId::VocalsEditing || task == TaskId::VocalsEditingInSong;
  if (!editing) forbid(edit, "edit region");

  if (lyrics) plan.lyrics = *c.lyrics;
  switch (task) {
    case TaskId::LyricsToSong:
    case TaskId::LyricsToVocals: {
      require(lyrics, "lyrics");
      if (task == TaskId::LyricsToVocals) forbid(ap, "accompaniment prompt");
      forbid(vt, "vocal track");
      forbid(at, "accompaniment track");
      const std::size_t p = std::max(c.vocal_prompt.size(), c.accomp_prompt.size());
      const TokenId sep = p > 0 ? tokens::kSep : tokens::kPad;
      plan.vocal = {StreamMode::Generated, lead(corpus::pad_left(c.vocal_prompt, p), sep), {}};
      plan.accomp = {StreamMode::Generated, lead(corpus::pad_left(c.accomp_prompt, p), sep), {}};
      break;
    }
    case TaskId::AccompanimentToSong: {
      require(lyrics, "lyrics");
      require(at, "accompaniment track");
      forbid(vt, "vocal track");
      forbid(ap, "accompaniment prompt");
      const std::size_t p = c.vocal_prompt.size();
      const TokenId sep = p > 0 ? tokens::kSep : tokens::kPad;
      plan.vocal = {StreamMode::Generated, lead(c.vocal_prompt, sep), {}};
      plan.accomp = {StreamMode::Fixed, concat(lead(corpus::pad_left({}, p), sep), *c.accomp_track), *c.accomp_track};
      break;
    }
    case TaskId::VocalsToSong: {
      require(vt, "vocal track");
      forbid(at, "accompaniment track");
      forbid(vp, "vocal prompt");
      const std::size_t p = c.accomp_prompt.size();
      const TokenId sep = p > 0 ? tokens::kSep : tokens::kPad;
      plan.vocal = {StreamMode::Fixed, concat(lead(corpus::pad_left({}, p), sep), *c.vocal_track), *c.vocal_track};
      plan.accomp = {StreamMode::Generated, lead(c.accomp_prompt, sep), {}};
      break;
    }
    case TaskId::MusicContinuation: {
      require(ap, "accompaniment prompt");
      forbid(lyrics, "lyrics");
      forbid(vp, "vocal prompt");
      forbid(vt, "vocal track");
      forbid(at, "accompaniment track");
      // The continuation starts by restating the prompt.
      plan.accomp = {StreamMode::Generated, concat(lead(c.accomp_prompt, tokens::kSep), c.accomp_prompt), {}};
      break;
    }
    case TaskId::SongEditing:
    case TaskId::VocalsEditingInSong:
    case TaskId::VocalsEditing: {
      require(lyrics, "lyrics");
      require(vt, "vocal track");
      require(edit, "edit region");
      if (task == TaskId::VocalsEditing) {
        forbid(at, "accompaniment track");
      } else {
        require(at, "accompaniment track");
        if (c.accomp_track->size() != c.vocal_track->size()) {
          throw UsageError("vocal and accompaniment tracks differ in length");
        }
      }
      forbid(vp, "vocal prompt");
      forbid(ap, "accompaniment prompt");
      const auto& v = *c.vocal_track;
      const EditRegion r = *c.edit;
      if (r.head_tokens + r.tail_tokens > v.size()) {
        throw UsageError("edit region keeps " + std::to_string(r.head_tokens + r.tail_tokens) +
                         " tokens of a " + std::to_string(v.size()) + "-token track");
      }
      const auto tail_of = [&](const std::vector<TokenId>& t) {
        return std::vector<TokenId>(t.end() - static_cast<std::ptrdiff_t>(r.tail_tokens), t.end());
      };
      const auto head_of = [&](const std::vector<TokenId>& t) {
        return std::vector<TokenId>(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(r.head_tokens));
      };
      plan.vocal = {StreamMode::Generated, concat(lead(tail_of(v), tokens::kEdit), head_of(v)), {}};
      if (task == TaskId::SongEditing) {
        const auto& a = *c.accomp_track;
        plan.accomp = {StreamMode::Generated, concat(lead(tail_of(a), tokens::kEdit), head_of(a)), {}};
      } else if (task == TaskId::VocalsEditingInSong) {
        const auto& a = *c.accomp_track;
        plan.accomp = {StreamMode::Fixed, concat(lead(corpus::pad_left({}, r.tail_tokens), tokens::kEdit), a), a};
      }
      break;
    }
  }

  const StreamPlan& any = plan.vocal.mode != StreamMode::Disabled ? plan.vocal : plan.accomp;
  plan.target_begin = static_cast<std::size_t>(
      std::find(any.inputs.begin(), any.inputs.end(), tokens::kBos) - any.inputs.begin());
  for (const StreamPlan* s : {&plan.vocal, &plan.accomp}) {
    if (s->inputs.size() > max_context) {
      throw UsageError("conditions need " + std::to_string(s->inputs.size()) + " decoder positions, context is " +
                       std::to_string(max_context));
    }
  }
  return plan;
}

template <typename Real>
GenerationResult generate(const DSLM<Real>& model, TaskId task, const GenerationConditions& conditions,
                          const SamplerConfig& sampler, const GenerateOptions& options) {
  sampler.validate();
  const ModelConfig& mc = model.config();
  GenerationResult result;
  result.plan = plan_generation(task, conditions, mc.decoder_context);
  DecodePlan& plan = result.plan;
  if (options.bca) plan.config.bca = *options.bca;
  const mask::MaskConfig& cfg = plan.config;
  {
    // A stream may only read positions of the other stream that exist when it
    // is computed: fixed streams are computed before anything is generated, and
    // a full-context direction needs the whole other track up front.
    const auto masks = mask::build_bca_masks(cfg.bca, 1);
    const bool full = cfg.bca == mask::BCAKind::A2V || cfg.bca == mask::BCAKind::V2A;
    const auto check = [&](const StreamPlan& reader, const StreamPlan& other, bool bypass, const char* name) {
      if (bypass || reader.mode == StreamMode::Disabled || other.mode == StreamMode::Disabled) return;
      if ((reader.mode == StreamMode::Fixed || full) && other.mode == StreamMode::Generated) {
        throw Error(std::string("cross-stream mask ") + std::string(mask::bca_name(cfg.bca)) + " lets the " + name +
                    " stream read positions that are generated after it; task " +
                    std::string(mask::task_name(task)) + " cannot decode under it");
      }
    };
    check(plan.vocal, plan.accomp, masks.vocal_bypass, "vocal");
    check(plan.accomp, plan.vocal, masks.accomp_bypass, "accompaniment");
  }
  const std::size_t d = mc.d_model;
  const std::size_t layers = mc.dec_layers;
  Rng rng(sampler.seed);

  StreamPlan* plans[2] = {&plan.vocal, &plan.accomp};
  const Stream ids[2] = {Stream::Vocal, Stream::Accomp};
  std::vector<TokenId> inputs[2] = {plan.vocal.inputs, plan.accomp.inputs};
  StreamState<Real> state[2];
  for (auto& s : state) {
    s.d = d;
    s.layers.resize(layers + 1);
  }
  num::Tensor<Real> lyrics;
  {
    num::Graph<Real> g(false);
    lyrics = model.encode_lyrics(g, plan.lyrics).value();
  }
  const auto bca = mask::build_bca_masks(cfg.bca, 1);
  const bool bypass[2] = {bca.vocal_bypass, bca.accomp_bypass};

  std::optional<std::size_t> fixed_length;
  for (int s = 0; s < 2; ++s) {
    if (plans[s]->mode != StreamMode::Fixed) continue;
    if (!bypass[s]) throw Error("a pre-determined stream must not read the generated one");
    num::Graph<Real> g(false);
    const auto& p = model.decoder_params(ids[s]);
    const std::size_t t = inputs[s].size();
    const auto sa = mask::build_sa_mask(s == 0 ? cfg.vocal_sa : cfg.accomp_sa, t).template additive<Real>();
    const Var<Real> mem = g.constant(lyrics);
    Var<Real> h = model.embed(g, p, inputs[s], 0, {});
    state[s].append(0, h.value());
    for (std::size_t l = 0; l < layers; ++l) {
      h = model.decoder_block(g, p.blocks[l], h, h, sa, mem, std::nullopt, nullptr, {});
      state[s].append(l + 1, h.value());
    }
    const auto e = model.output_norm(g, p, h, {}).value();
    state[s].final_rows = e.storage();
    fixed_length = t;
  }

  std::vector<int> gen;
  for (int s = 0; s < 2; ++s) {
    if (plans[s]->mode == StreamMode::Generated) gen.push_back(s);
  }
  if (gen.empty()) throw Error("task has no generated stream");

  const auto other_rows = [&](int s, std::size_t pos) -> std::size_t {
    const int o = 1 - s;
    return plans[o]->mode == StreamMode::Fixed ? *fixed_length : pos + 1;
  };

  std::size_t pos = 0;
  while (true) {
    // Position `pos` through all layers, both generated streams in lockstep.
    for (int s : gen) {
      num::Graph<Real> g(false);
      const TokenId id = inputs[s][pos];
      state[s].append(0, model.embed(g, model.decoder_params(ids[s]), std::span<const TokenId>(&id, 1), pos, {}).value());
    }
    for (std::size_t l = 0; l < layers; ++l) {
      std::vector<num::Tensor<Real>> rows;
      for (int s : gen) {
        num::Graph<Real> g(false);
        const auto& p = model.decoder_params(ids[s]);
        const auto sa = mask::build_sa_mask(mask::SAKind::Causal, pos + 1).template additive<Real>(pos, pos + 1, pos + 1);
        const Var<Real> x = g.constant(state[s].row(l, pos));
        const Var<Real> self = g.constant(state[s].take(l, pos + 1));
        std::optional<Var<Real>> other;
        num::Tensor<Real> bmask;
        const int o = 1 - s;
        if (!bypass[s] && plans[o]->mode != StreamMode::Disabled) {
          const std::size_t keys = other_rows(s, pos);
          other = g.constant(state[o].take(l, keys));
          const auto full = mask::build_bca_masks(cfg.bca, std::max(pos + 1, keys));
          bmask = (s == 0 ? full.vocal_from_accomp : full.accomp_from_vocal).template additive<Real>(pos, pos + 1, keys);
        }
        rows.push_back(model.decoder_block(g, p.blocks[l], x, self, sa, g.constant(lyrics), other,
                                           other ? &bmask : nullptr, {})
                           .value());
      }
      for (std::size_t i = 0; i < gen.size(); ++i) state[gen[i]].append(l + 1, rows[i]);
    }

    std::vector<num::Tensor<Real>> logits;
    for (int s : gen) {
      num::Graph<Real> g(false);
      const auto& p = model.decoder_params(ids[s]);
      const Var<Real> e = model.output_norm(g, p, g.constant(state[s].row(layers, pos)), {});
      state[s].final_rows.insert(state[s].final_rows.end(), e.value().values().begin(), e.value().values().end());
      logits.push_back(model.output_head(g, p, e, {}).value());
      if (options.record_logits) {
        result.steps.push_back({ids[s], pos, std::vector<double>(logits.back().values().begin(),
                                                                 logits.back().values().end())});
      }
    }

    if (pos + 1 < inputs[gen[0]].size()) {
      ++pos;
      continue;
    }
    const std::size_t produced = pos + 1 - (plan.target_begin + 1);
    if (fixed_length && pos + 1 >= *fixed_length) break;
    if (pos + 1 >= mc.decoder_context) break;
    if (options.max_target && produced >= *options.max_target) break;

    std::vector<TokenId> next;
    for (std::size_t i = 0; i < gen.size(); ++i) {
      std::vector<Real> row(logits[i].values().begin(), logits[i].values().end());
      if (options.ignore_eos) row[tokens::kEos] = std::numeric_limits<Real>::lowest();
      next.push_back(top_k_sample(std::span<const Real>(row), sampler, rng));
    }
    if (std::find(next.begin(), next.end(), tokens::kEos) != next.end()) {
      result.stopped_on_eos = true;
      break;
    }
    for (std::size_t i = 0; i < gen.size(); ++i) inputs[gen[i]].push_back(next[i]);
    ++pos;
  }

  const std::size_t processed = pos + 1;
  const std::size_t first = plan.target_begin + 1;
  const std::size_t n_out = processed > first ? processed - first : 0;
  for (int s = 0; s < 2; ++s) {
    std::optional<std::vector<TokenId>>& out = s == 0 ? result.vocal : result.accomp;
    switch (plans[s]->mode) {
      case StreamMode::Generated:
        out = std::vector<TokenId>(inputs[s].begin() + static_cast<std::ptrdiff_t>(first),
                                   inputs[s].begin() + static_cast<std::ptrdiff_t>(processed));
        break;
      case StreamMode::Fixed: out = plans[s]->track; break;
      case StreamMode::Disabled: break;
    }
  }
  result.vocal_inputs = inputs[0];
  result.accomp_inputs = inputs[1];

  if (cfg.song_head_enabled && n_out > 0) {
    num::Graph<Real> g(false);
    const auto rows = [&](int s) {
      return g.constant(num::Tensor<Real>(
          Shape{processed, d}, std::vector<Real>(state[s].final_rows.begin(),
                                                 state[s].final_rows.begin() + static_cast<std::ptrdiff_t>(processed * d))));
    };
    const auto logits = model.song_decoder_forward(g, rows(0), rows(1), {}).value();
    std::vector<TokenId> song;
    for (std::size_t i = 0; i < n_out; ++i) song.push_back(argmax(logits.row(first + i)));
    result.song = std::move(song);
  }
  return result;
}

template <typename Real>
double incremental_consistency_check(const DSLM<Real>& model, TaskId task, const GenerationConditions& conditions,
                                     const SamplerConfig& sampler, GenerateOptions options) {
  options.record_logits = true;
  options.ignore_eos = true;
  const GenerationResult r = generate(model, task, conditions, sampler, options);
  DecodeInputs in{r.plan.lyrics, r.vocal_inputs, r.accomp_inputs, r.plan.config};
  num::Graph<Real> g(false);
  const DecoderOutputs<Real> full = model.decoders_forward(g, in);
  double worst = 0.0;
  for (const StepLogits& step : r.steps) {
    const auto& logits = (step.stream == Stream::Vocal ? *full.logits_v : *full.logits_a).value();
    const auto row = logits.row(step.position);
    for (std::size_t i = 0; i < row.size(); ++i) {
      worst = std::max(worst, std::abs(static_cast<double>(row[i]) - step.logits[i]));
    }
  }
  return worst;
}

template GenerationResult generate<float>(const DSLM<float>&, TaskId, const GenerationConditions&,
                                          const SamplerConfig&, const GenerateOptions&);
template GenerationResult generate<double>(const DSLM<double>&, TaskId, const GenerationConditions&,
                                           const SamplerConfig&, const GenerateOptions&);
template double incremental_consistency_check<float>(const DSLM<float>&, TaskId, const GenerationConditions&,
                                                     const SamplerConfig&, GenerateOptions);
template double incremental_consistency_check<double>(const DSLM<double>&, TaskId, const GenerationConditions&,
                                                      const SamplerConfig&, GenerateOptions);

}  // namespace dslm::model
