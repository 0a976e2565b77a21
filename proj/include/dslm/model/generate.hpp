#pragma once

#include <optional>
#include <string>
#include <vector>

#include "dslm/maskengine/masks.hpp"
#include "dslm/model/dslm.hpp"
#include "dslm/model/sampler.hpp"

namespace dslm::model {

// Token counts of the unedited head and tail of the original tracks.
struct EditRegion {
  std::size_t head_tokens = 0;
  std::size_t tail_tokens = 0;
};

// Inputs a task may take. Which ones are mandatory, optional or not allowed
// follows the task's routing row.
struct GenerationConditions {
  std::optional<std::vector<TokenId>> lyrics;
  std::vector<TokenId> vocal_prompt;
  std::vector<TokenId> accomp_prompt;
  // Pre-determined track, or for editing tasks the original track.
  std::optional<std::vector<TokenId>> vocal_track;
  std::optional<std::vector<TokenId>> accomp_track;
  std::optional<EditRegion> edit;
};

struct GenerateOptions {
  // Never stop on EOS; generation then runs to the length bound.
  bool ignore_eos = false;
  // Upper bound on generated target tokens per stream.
  std::optional<std::size_t> max_target;
  bool record_logits = false;
  // Replaces the routed cross-stream mask (ablation models).
  std::optional<mask::BCAKind> bca;
};

enum class StreamMode { Generated, Fixed, Disabled };

struct StreamPlan {
  StreamMode mode = StreamMode::Disabled;
  // Decoder inputs known before decoding: [prefix][separator][BOS][forced...].
  // For a Fixed stream this is the whole input.
  std::vector<TokenId> inputs;
  // Fixed streams: the track reported as output.
  std::vector<TokenId> track;
};

struct DecodePlan {
  mask::TaskId task = mask::TaskId::LyricsToSong;
  mask::MaskConfig config;
  std::vector<TokenId> lyrics;
  StreamPlan vocal, accomp;
  std::size_t target_begin = 0;  // BOS position
};

// Lays out a task's conditions as decoder inputs, rejecting missing or
// unexpected conditions.
DecodePlan plan_generation(mask::TaskId task, const GenerationConditions& conditions, std::size_t max_context);

// The task row's condition column, used in error messages.
std::string task_conditions(mask::TaskId task);

struct StepLogits {
  mask::Stream stream = mask::Stream::Vocal;
  std::size_t position = 0;
  std::vector<double> logits;
};

struct GenerationResult {
  DecodePlan plan;
  std::optional<std::vector<TokenId>> vocal, accomp, song;
  // Decoder inputs as finally processed.
  std::vector<TokenId> vocal_inputs, accomp_inputs;
  bool stopped_on_eos = false;
  std::vector<StepLogits> steps;
};

// Step-synchronized decoding: at every position both generated streams go
// through layer l together, each reading the other's layer l-1 rows allowed
// by the routed cross-stream mask. Fixed streams are run once up front with
// their own (non-causal) self-attention.
template <typename Real>
GenerationResult generate(const DSLM<Real>& model, mask::TaskId task, const GenerationConditions& conditions,
                          const SamplerConfig& sampler, const GenerateOptions& options = {});

// Runs generate() with recorded logits and compares every step against one
// full teacher-forced pass over the final sequences. Returns max |difference|.
template <typename Real>
double incremental_consistency_check(const DSLM<Real>& model, mask::TaskId task,
                                     const GenerationConditions& conditions, const SamplerConfig& sampler,
                                     GenerateOptions options = {});

}  // namespace dslm::model
