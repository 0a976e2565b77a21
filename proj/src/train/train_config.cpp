#include "dslm/train/train_config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "dslm/common/error.hpp"

namespace dslm::train {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const std::vector<std::string>& own_keys() {
  static const std::vector<std::string> k = {
      "train.mixture",        "train.batch_size",       "train.steps",
      "train.warmup",         "train.lr_scale",         "train.clip_norm",
      "train.seed",           "train.checkpoint_every", "train.precision",
      "adam.beta1",           "adam.beta2",             "adam.epsilon",
      "assembly.br_probability", "assembly.lyrics_dropout", "assembly.token_mask_rate",
      "assembly.max_prompt_fraction", "assembly.edit_min_fraction", "assembly.edit_max_fraction",
      "assembly.prompt_probability", "assembly.bca",
  };
  return k;
}

std::size_t get_count(const KeyValueFile& f, const std::string& key, std::size_t fallback) {
  if (!f.contains(key)) return fallback;
  const long long v = parse_int(f.get(key), key);
  if (v < 0) throw Error(key + " must be non-negative");
  return static_cast<std::size_t>(v);
}

double get_real(const KeyValueFile& f, const std::string& key, double fallback) {
  return f.contains(key) ? parse_double(f.get(key), key) : fallback;
}

}  // namespace

const char* precision_name(Precision p) { return p == Precision::Float64 ? "f64" : "f32"; }

Precision parse_precision(const std::string& name) {
  if (name == "f64" || name == "double") return Precision::Float64;
  if (name == "f32" || name == "float") return Precision::Float32;
  throw Error("unknown precision '" + name + "' (expected f64 or f32)");
}

Precision default_precision() {
  const char* env = std::getenv("DSLM_PRECISION");
  return env && *env ? parse_precision(env) : Precision::Float64;
}

void TrainConfig::validate() const {
  model.validate();
  adam.validate();
  sampler.validate();
  double total = 0.0;
  for (double w : mixture) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("train.mixture: weights must be non-negative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error("train.mixture: weights sum to " + fmt(total) + ", not 1");
  if (batch_size == 0) throw Error("train.batch_size must be at least 1");
  if (warmup == 0) throw Error("train.warmup must be at least 1");
  if (!(lr_scale > 0.0)) throw Error("train.lr_scale must be positive");
  const auto prob = [](double p, const char* key) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(std::string(key) + " must lie in [0, 1]");
  };
  prob(assembly.br_probability, "assembly.br_probability");
  prob(assembly.lyrics_dropout, "assembly.lyrics_dropout");
  prob(assembly.token_mask_rate, "assembly.token_mask_rate");
  prob(assembly.max_prompt_fraction, "assembly.max_prompt_fraction");
  prob(assembly.prompt_probability, "assembly.prompt_probability");
  prob(assembly.edit_min_fraction, "assembly.edit_min_fraction");
  prob(assembly.edit_max_fraction, "assembly.edit_max_fraction");
  if (assembly.force_bca && *assembly.force_bca != mask::BCAKind::BR && *assembly.force_bca != mask::BCAKind::None) {
    throw Error("assembly.bca: song-from-lyrics trains with br or none only");
  }
}

TrainConfig TrainConfig::from_file(const KeyValueFile& f) {
  std::vector<std::string> known = own_keys();
  for (const auto& k : model::ModelConfig::keys()) known.push_back(k);
  for (const auto& k : model::SamplerConfig::keys()) known.push_back(k);
  f.reject_unknown(known);

  TrainConfig c;
  c.model.apply(f);
  c.sampler.apply(f);
  if (f.contains("train.mixture")) {
    std::istringstream in(f.get("train.mixture"));
    std::vector<double> w;
    std::string tok;
    while (in >> tok) w.push_back(parse_double(tok, "train.mixture"));
    if (w.size() != 3) throw Error("train.mixture needs three weights, got " + std::to_string(w.size()));
    c.mixture = {w[0], w[1], w[2]};
  }
  c.batch_size = get_count(f, "train.batch_size", c.batch_size);
  c.steps = get_count(f, "train.steps", c.steps);
  c.warmup = get_count(f, "train.warmup", c.warmup);
  c.lr_scale = get_real(f, "train.lr_scale", c.lr_scale);
  c.clip_norm = get_real(f, "train.clip_norm", c.clip_norm);
  if (f.contains("train.seed")) c.seed = static_cast<std::uint64_t>(parse_int(f.get("train.seed"), "train.seed"));
  c.checkpoint_every = get_count(f, "train.checkpoint_every", c.checkpoint_every);
  if (f.contains("train.precision")) c.precision = parse_precision(f.get("train.precision"));
  c.adam.beta1 = get_real(f, "adam.beta1", c.adam.beta1);
  c.adam.beta2 = get_real(f, "adam.beta2", c.adam.beta2);
  c.adam.epsilon = get_real(f, "adam.epsilon", c.adam.epsilon);
  auto& a = c.assembly;
  a.br_probability = get_real(f, "assembly.br_probability", a.br_probability);
  a.lyrics_dropout = get_real(f, "assembly.lyrics_dropout", a.lyrics_dropout);
  a.token_mask_rate = get_real(f, "assembly.token_mask_rate", a.token_mask_rate);
  a.max_prompt_fraction = get_real(f, "assembly.max_prompt_fraction", a.max_prompt_fraction);
  a.edit_min_fraction = get_real(f, "assembly.edit_min_fraction", a.edit_min_fraction);
  a.edit_max_fraction = get_real(f, "assembly.edit_max_fraction", a.edit_max_fraction);
  a.prompt_probability = get_real(f, "assembly.prompt_probability", a.prompt_probability);
  if (f.contains("assembly.bca")) {
    const std::string& v = f.get("assembly.bca");
    if (v != "mixed") a.force_bca = mask::parse_bca(v);
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) { return from_file(KeyValueFile::load(path)); }

KeyValueFile TrainConfig::to_file() const {
  KeyValueFile f;
  model.store(f);
  f.set("train.mixture", fmt(mixture[0]) + " " + fmt(mixture[1]) + " " + fmt(mixture[2]));
  f.set("train.batch_size", std::to_string(batch_size));
  f.set("train.steps", std::to_string(steps));
  f.set("train.warmup", std::to_string(warmup));
  f.set("train.lr_scale", fmt(lr_scale));
  f.set("train.clip_norm", fmt(clip_norm));
  f.set("train.seed", std::to_string(seed));
  f.set("train.checkpoint_every", std::to_string(checkpoint_every));
  f.set("train.precision", precision_name(precision));
  f.set("adam.beta1", fmt(adam.beta1));
  f.set("adam.beta2", fmt(adam.beta2));
  f.set("adam.epsilon", fmt(adam.epsilon));
  f.set("assembly.br_probability", fmt(assembly.br_probability));
  f.set("assembly.lyrics_dropout", fmt(assembly.lyrics_dropout));
  f.set("assembly.token_mask_rate", fmt(assembly.token_mask_rate));
  f.set("assembly.max_prompt_fraction", fmt(assembly.max_prompt_fraction));
  f.set("assembly.edit_min_fraction", fmt(assembly.edit_min_fraction));
  f.set("assembly.edit_max_fraction", fmt(assembly.edit_max_fraction));
  f.set("assembly.prompt_probability", fmt(assembly.prompt_probability));
  std::string bca = "mixed";
  if (assembly.force_bca) {
    bca = std::string(mask::bca_name(*assembly.force_bca));
    for (auto& ch : bca) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  f.set("assembly.bca", bca);
  sampler.store(f);
  return f;
}

}  // namespace dslm::train
