#include "dslm/cli/commands.hpp"

#include <zlib.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "dslm/common/error.hpp"
#include "dslm/common/key_value.hpp"
#include "dslm/corpus/corpus_io.hpp"
#include "dslm/corpus/edit.hpp"
#include "dslm/maskengine/masks.hpp"
#include "dslm/model/checkpoint.hpp"
#include "dslm/model/generate.hpp"
#include "dslm/train/evaluate.hpp"
#include "dslm/train/model_gradcheck.hpp"
#include "dslm/train/trainer.hpp"

namespace dslm::cli {
namespace {

namespace fs = std::filesystem;
using mask::TaskId;
using nlohmann::ordered_json;

std::string file_crc32(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  uLong crc = crc32(0L, Z_NULL, 0);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(in.gcount()));
  }
  char hex[16];
  std::snprintf(hex, sizeof hex, "%08lx", crc);
  return hex;
}

std::vector<TokenId> parse_tokens(const std::string& text, std::size_t vocab, const std::string& what) {
  std::vector<TokenId> ids;
  try {
    ids = parse_int_list(text, what);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  for (TokenId t : ids) {
    if (t < tokens::kNumSpecial || t >= static_cast<TokenId>(vocab)) {
      throw UsageError(what + ": token " + std::to_string(t) + " is not a regular id in [" +
                       std::to_string(tokens::kNumSpecial) + ", " + std::to_string(vocab) + ")");
    }
  }
  return ids;
}

train::Precision precision_from(const std::string& flag) {
  return flag.empty() ? train::default_precision() : train::parse_precision(flag);
}

void print_stream(std::ostream& out, const char* label, const std::vector<TokenId>& ids) {
  out << label << ":";
  for (TokenId t : ids) out << ' ' << t;
  out << '\n';
}

// ---- gen-corpus -----------------------------------------------------------

struct GenCorpusArgs {
  std::string out;
  std::size_t size = 1000;
  std::uint64_t seed = 0;
  std::size_t max_len = corpus::kDefaultMaxLength;
  std::string variant = "default";
};

int cmd_gen_corpus(const GenCorpusArgs& a, std::ostream& out) {
  corpus::CorpusFile file;
  file.variant = corpus::parse_variant(a.variant);
  file.clips = corpus::make_corpus(a.seed, a.size, a.max_len, file.variant);
  corpus::write_corpus(fs::path(a.out), file);
  out << "wrote " << file.clips.size() << " clips to " << a.out << " (crc32 " << file_crc32(a.out) << ")\n";
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string corpus;
  std::string config;
  std::string out_dir;
  std::string resume;
  std::string precision;
};

template <typename Real>
int run_training(const train::TrainConfig& cfg, const TrainArgs& a, const corpus::CorpusFile& data, std::ostream& out,
                 std::ostream& err) {
  const fs::path dir(a.out_dir);
  train::RunOptions opt;
  opt.out_dir = dir;
  if (!a.resume.empty()) opt.resume_from = fs::path(a.resume);
  opt.progress = &out;

  ordered_json manifest;
  manifest["tool"] = "dslm";
  manifest["tool_version"] = kToolVersion;
  manifest["seed"] = cfg.seed;
  manifest["precision"] = train::precision_name(cfg.precision);
  ordered_json config_json;
  const KeyValueFile kv = cfg.to_file();
  for (const auto& key : kv.keys()) config_json[key] = kv.get(key);
  manifest["config"] = config_json;
  manifest["corpus"] = {{"path", fs::absolute(a.corpus).string()}, {"crc32", file_crc32(a.corpus)},
                        {"clips", data.clips.size()}};
  if (!a.resume.empty()) manifest["resumed_from"] = fs::absolute(a.resume).string();

  int code = 0;
  try {
    const train::RunResult r = train::train_loop<Real>(cfg, data.clips, opt);
    manifest["status"] = "ok";
    manifest["steps"] = r.steps_done;
    if (!r.metrics.empty()) manifest["final_loss"] = r.metrics.back().total;
    ordered_json ckpts = ordered_json::array();
    for (const auto& p : r.checkpoints) ckpts.push_back({{"path", p.string()}, {"crc32", file_crc32(p)}});
    manifest["checkpoints"] = ckpts;
    manifest["final_checkpoint"] = {{"path", r.final_checkpoint.string()},
                                    {"crc32", file_crc32(r.final_checkpoint)}};
    manifest["metrics_log"] = {{"path", r.log_path.string()}, {"crc32", file_crc32(r.log_path)}};
    out << "trained " << r.steps_done << " steps; final checkpoint " << r.final_checkpoint.string() << '\n';
  } catch (const train::DivergenceError& e) {
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    err << "error: training diverged: " << e.what() << '\n';
    code = 1;
  }
  std::ofstream(dir / "manifest.json") << manifest.dump(2) << '\n';
  return code;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  KeyValueFile file;
  if (!a.config.empty()) file = KeyValueFile::load(a.config);
  train::TrainConfig cfg = train::TrainConfig::from_file(file);
  if (!a.precision.empty()) {
    cfg.precision = train::parse_precision(a.precision);
  } else if (!file.contains("train.precision")) {
    cfg.precision = train::default_precision();
  }
  const corpus::CorpusFile data = corpus::read_corpus(fs::path(a.corpus));
  if (data.clips.empty()) throw Error("corpus " + a.corpus + " has no clips");
  fs::create_directories(a.out_dir);
  if (cfg.precision == train::Precision::Float32) return run_training<float>(cfg, a, data, out, err);
  return run_training<double>(cfg, a, data, out, err);
}

// ---- generate / edit -------------------------------------------------------

struct SamplingArgs {
  std::size_t k = 50;
  double temperature = 0.9;
  std::uint64_t seed = 0;
  std::string precision;
  std::string out_file;
};

struct GenerateArgs {
  std::string task;
  std::string ckpt;
  std::optional<std::string> lyrics;
  std::string vocal_prompt;
  std::string accomp_prompt;
  std::string predetermined;
  SamplingArgs sampling;
};

template <typename Real>
void emit_generation(const model::DSLM<Real>& net, TaskId task, const model::GenerationConditions& c,
                     const SamplingArgs& s, std::ostream& out) {
  model::SamplerConfig sampler;
  sampler.k = s.k;
  sampler.temperature = s.temperature;
  sampler.seed = s.seed;
  sampler.validate();
  const auto r = model::generate(net, task, c, sampler);
  std::ostringstream text;
  text << "task: " << mask::task_name(task) << '\n';
  text << "masks: " << r.plan.config.describe() << '\n';
  if (r.vocal && r.plan.config.vocal_enabled) print_stream(text, "vocal", *r.vocal);
  if (r.accomp && r.plan.config.accomp_enabled) print_stream(text, "accompaniment", *r.accomp);
  if (r.song) print_stream(text, "song", *r.song);
  text << "sampler: k=" << sampler.k << " temperature=" << sampler.temperature << " seed=" << sampler.seed
       << " stop=" << (r.stopped_on_eos ? "eos" : "length") << '\n';
  out << text.str();
  if (!s.out_file.empty()) {
    std::ofstream f(s.out_file);
    if (!f) throw Error("cannot write " + s.out_file);
    f << text.str();
  }
}

template <typename Real>
int generate_with(const GenerateArgs& a, std::ostream& out) {
  const TaskId task = mask::parse_task(a.task);
  const auto editing = task == TaskId::SongEditing || task == TaskId::VocalsEditing ||
                       task == TaskId::VocalsEditingInSong;
  if (editing) throw UsageError("task " + a.task + " is an editing task; use `dslm edit`");
  const auto net = model::load_model<Real>(a.ckpt);
  const auto& mc = net.config();
  model::GenerationConditions c;
  if (a.lyrics) c.lyrics = parse_tokens(*a.lyrics, mc.lyrics_vocab, "--lyrics");
  c.vocal_prompt = parse_tokens(a.vocal_prompt, mc.vocal_vocab, "--vocal-prompt");
  c.accomp_prompt = parse_tokens(a.accomp_prompt, mc.accomp_vocab, "--accomp-prompt");
  if (!a.predetermined.empty()) {
    if (task == TaskId::AccompanimentToSong) {
      c.accomp_track = parse_tokens(a.predetermined, mc.accomp_vocab, "--predetermined");
    } else if (task == TaskId::VocalsToSong) {
      c.vocal_track = parse_tokens(a.predetermined, mc.vocal_vocab, "--predetermined");
    } else {
      throw UsageError("task " + a.task + " takes no pre-determined track (conditions: " +
                       model::task_conditions(task) + ")");
    }
  } else if (task == TaskId::AccompanimentToSong || task == TaskId::VocalsToSong) {
    throw UsageError("missing --predetermined track (" + a.task + " conditions: " + model::task_conditions(task) +
                     ")");
  }
  emit_generation(net, task, c, a.sampling, out);
  return 0;
}

struct EditArgs {
  std::string task;
  std::string ckpt;
  std::string clip_file;
  std::optional<std::uint64_t> clip_id;
  std::string edited_lyrics;
  std::string span;
  SamplingArgs sampling;
};

template <typename Real>
int edit_with(const EditArgs& a, std::ostream& out) {
  const TaskId task = mask::parse_task(a.task);
  if (task != TaskId::SongEditing && task != TaskId::VocalsEditing && task != TaskId::VocalsEditingInSong) {
    throw UsageError("edit takes song-editing, vocals-editing or vocals-editing-in-song, not " + a.task);
  }
  const corpus::CorpusFile data = corpus::read_corpus(fs::path(a.clip_file));
  if (data.clips.empty()) throw UsageError(a.clip_file + " holds no clips");
  const corpus::Clip* clip = &data.clips.front();
  if (a.clip_id) {
    clip = nullptr;
    for (const auto& c : data.clips) {
      if (c.id == *a.clip_id) clip = &c;
    }
    if (!clip) throw UsageError("no clip with id " + std::to_string(*a.clip_id) + " in " + a.clip_file);
  } else if (data.clips.size() > 1) {
    throw UsageError(a.clip_file + " holds several clips; pick one with --clip-id");
  }

  std::optional<corpus::WordSpan> span;
  if (!a.span.empty()) {
    const auto colon = a.span.find(':');
    if (colon == std::string::npos) throw UsageError("--span must look like START:LENGTH");
    try {
      const long long start = parse_int(a.span.substr(0, colon), "--span start");
      const long long len = parse_int(a.span.substr(colon + 1), "--span length");
      if (start < 0 || len < 0) throw UsageError("--span values must be non-negative");
      span = corpus::WordSpan{static_cast<std::size_t>(start), static_cast<std::size_t>(len)};
    } catch (const UsageError&) {
      throw;
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  const auto net = model::load_model<Real>(a.ckpt);
  const std::vector<TokenId> lyrics = parse_tokens(a.edited_lyrics, net.config().lyrics_vocab, "--edited-lyrics");
  Rng rng(a.sampling.seed);
  corpus::EditExample ex;
  try {
    ex = corpus::edit_lyrics(*clip, lyrics, rng, span);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }

  model::GenerationConditions c;
  c.lyrics = lyrics;
  c.vocal_track = clip->vocal;
  if (task != TaskId::VocalsEditing) c.accomp_track = clip->accomp;
  c.edit = model::EditRegion{ex.head_tokens, ex.tail_tokens};
  out << "edit: " << corpus::edit_type_name(ex.type) << " at word " << ex.word_start << ", " << ex.words_removed
      << " removed, " << ex.words_inserted << " inserted\n";
  emit_generation(net, task, c, a.sampling, out);
  return 0;
}

// ---- inspect-mask ----------------------------------------------------------

struct InspectArgs {
  std::string task;
  std::string sa;
  std::string bca;
  std::size_t length = 4;
  bool all = false;
};

void print_bca(std::ostream& out, mask::BCAKind kind, std::size_t t) {
  const auto m = mask::build_bca_masks(kind, t);
  out << "BCA vocal <- accompaniment:";
  if (m.vocal_bypass) {
    out << " bypassed\n";
  } else {
    out << '\n' << m.vocal_from_accomp.to_grid();
  }
  out << "BCA accompaniment <- vocal:";
  if (m.accomp_bypass) {
    out << " bypassed\n";
  } else {
    out << '\n' << m.accomp_from_vocal.to_grid();
  }
}

int cmd_inspect_mask(const InspectArgs& a, std::ostream& out) {
  const int selectors = (a.task.empty() ? 0 : 1) + (a.sa.empty() ? 0 : 1) + (a.bca.empty() ? 0 : 1) + (a.all ? 1 : 0);
  if (selectors != 1) throw UsageError("give exactly one of --task, --sa, --bca, --all");
  if (a.length == 0) throw UsageError("--T must be at least 1");
  if (a.all) {
    out << mask::format_route_table();
    return 0;
  }
  if (!a.sa.empty()) {
    const auto kind = mask::parse_sa(a.sa);
    if (kind == mask::SAKind::Disabled) {
      out << "SA none: decoder disabled\n";
    } else {
      out << mask::build_sa_mask(kind, a.length).to_grid();
    }
    return 0;
  }
  if (!a.bca.empty()) {
    print_bca(out, mask::parse_bca(a.bca), a.length);
    return 0;
  }
  const TaskId task = mask::parse_task(a.task);
  const auto c = mask::route_task(task);
  out << "task: " << mask::task_name(task) << '\n' << c.describe() << '\n';
  for (const auto& [label, kind, enabled] :
       {std::tuple{"vocal", c.vocal_sa, c.vocal_enabled}, std::tuple{"accompaniment", c.accomp_sa, c.accomp_enabled}}) {
    out << "SA " << label << ":";
    if (!enabled) {
      out << " disabled\n";
    } else {
      out << '\n' << mask::build_sa_mask(kind, a.length).to_grid();
    }
  }
  print_bca(out, c.bca, a.length);
  out << "song head: " << (c.song_head_enabled ? "on" : "off") << '\n';
  return 0;
}

// ---- gradcheck -------------------------------------------------------------

struct GradcheckArgs {
  std::string config;
  std::uint64_t seed = 0;
  std::size_t coords = 2;
  bool inject_error = false;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  if (train::default_precision() != train::Precision::Float64) {
    throw UsageError("gradcheck runs in 64-bit mode only; unset DSLM_PRECISION or set it to f64");
  }
  model::ModelConfig mc = model::ModelConfig::tiny();
  if (!a.config.empty()) {
    const KeyValueFile f = KeyValueFile::load(a.config);
    f.reject_unknown(model::ModelConfig::keys());
    mc.apply(f);
  }
  mc.validate();
  const auto clips = corpus::make_corpus(a.seed, 8, std::min<std::size_t>(16, mc.decoder_context / 3));
  train::ModelGradcheckOptions opt;
  opt.seed = a.seed;
  opt.coords_per_tensor = a.coords;
  opt.corrupt_backward = a.inject_error;
  const auto results = train::model_gradcheck(mc, clips, opt);
  constexpr double kThreshold = 1e-4;
  std::map<std::string, double> groups;
  double worst = 0.0;
  for (const auto& r : results) {
    out << "layout " << r.layout << " max_rel_err " << r.max_rel << " coords " << r.coords_checked << '\n';
    for (const auto& [g, v] : r.group_max_rel) groups[g] = std::max(groups[g], v);
    worst = std::max(worst, r.max_rel);
  }
  for (const char* g : model::kParamGroups) out << "group " << g << " max_rel_err " << groups[g] << '\n';
  const bool ok = worst < kThreshold;
  out << (ok ? "PASS" : "FAIL") << " max_rel_err " << worst << " threshold " << kThreshold << '\n';
  return ok ? 0 : 1;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string ckpt;
  std::string compare_ckpt;
  std::string corpus;
  std::string report;
  std::size_t limit = 0;
  std::string precision;
};

template <typename Real>
int eval_with(const EvalArgs& a, std::ostream& out) {
  const auto net = model::load_model<Real>(a.ckpt);
  corpus::CorpusFile data = corpus::read_corpus(fs::path(a.corpus));
  if (a.limit > 0 && data.clips.size() > a.limit) data.clips.resize(a.limit);
  if (data.clips.empty()) throw Error("corpus " + a.corpus + " has no clips");

  std::vector<ordered_json> records;
  for (const auto& t : train::teacher_forced_losses(net, data.clips)) {
    const auto c = mask::route_task(t.task);
    ordered_json r = {{"metric", "teacher_forced_ce"}, {"layout", t.name}, {"task", mask::task_name(t.task)}};
    r["L_v"] = c.vocal_enabled ? ordered_json(t.vocal) : ordered_json(nullptr);
    r["L_a"] = c.accomp_enabled ? ordered_json(t.accomp) : ordered_json(nullptr);
    r["L_s"] = c.song_head_enabled ? ordered_json(t.song) : ordered_json(nullptr);
    r["examples"] = t.examples;
    records.push_back(r);
  }
  const auto em = train::greedy_exact_match(net, data.clips);
  records.push_back({{"metric", "greedy_exact_match"},
                     {"vocal", em.vocal_rate()},
                     {"accomp", em.accomp_rate()},
                     {"song", em.song_rate()},
                     {"overall", em.rate()},
                     {"clips", data.clips.size()}});
  records.push_back({{"metric", "song_head_accuracy"}, {"value", train::song_head_accuracy(net, data.clips)}});
  if (!a.compare_ckpt.empty()) {
    const auto none = model::load_model<Real>(a.compare_ckpt);
    const double br = train::accompaniment_ce(net, data.clips, mask::BCAKind::BR);
    const double nb = train::accompaniment_ce(none, data.clips, mask::BCAKind::None);
    records.push_back(
        {{"metric", "bca_ablation"}, {"ce_accomp_br", br}, {"ce_accomp_none", nb}, {"gap", nb - br}});
  }

  std::ofstream report;
  if (!a.report.empty()) {
    report.open(a.report);
    if (!report) throw Error("cannot write " + a.report);
  }
  for (const auto& r : records) {
    out << r.dump() << '\n';
    if (report) report << r.dump() << '\n';
  }
  return 0;
}

template <typename F>
int with_precision(const std::string& flag, F&& f) {
  return precision_from(flag) == train::Precision::Float32 ? f(float{}) : f(double{});
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dual-stream song language model toolkit", "dslm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenCorpusArgs gc;
  auto* gen_corpus = app.add_subcommand("gen-corpus", "Write a synthetic paired-track corpus");
  gen_corpus->add_option("--out", gc.out, "Output corpus file")->required();
  gen_corpus->add_option("--size", gc.size, "Number of clips")->capture_default_str();
  gen_corpus->add_option("--seed", gc.seed, "Corpus seed")->capture_default_str();
  gen_corpus->add_option("--max-len", gc.max_len, "Maximum clip length in tokens")->capture_default_str();
  gen_corpus->add_option("--variant", gc.variant, "default or control")->capture_default_str();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a corpus");
  train_cmd->add_option("--corpus", ta.corpus, "Corpus file")->required();
  train_cmd->add_option("--config", ta.config, "Flat key = value config file");
  train_cmd->add_option("--out-dir", ta.out_dir, "Directory for checkpoints, log and manifest")->required();
  train_cmd->add_option("--resume", ta.resume, "Checkpoint to continue from");
  train_cmd->add_option("--precision", ta.precision, "f64 or f32 (default: config, then DSLM_PRECISION)");

  const auto add_sampling = [](CLI::App* cmd, SamplingArgs& s) {
    cmd->add_option("--k", s.k, "Top-k")->capture_default_str();
    cmd->add_option("--temp", s.temperature, "Sampling temperature")->capture_default_str();
    cmd->add_option("--seed", s.seed, "Sampling seed")->capture_default_str();
    cmd->add_option("--precision", s.precision, "f64 or f32");
    cmd->add_option("--out", s.out_file, "Also write the output here");
  };

  GenerateArgs ga;
  std::string lyrics_flag;
  auto* gen_cmd = app.add_subcommand("generate", "Generate token streams for a task");
  gen_cmd->add_option("--task", ga.task, "Task name")->required();
  gen_cmd->add_option("--ckpt", ga.ckpt, "Checkpoint")->required();
  auto* lyrics_opt = gen_cmd->add_option("--lyrics", lyrics_flag, "Lyric ids, space separated");
  gen_cmd->add_option("--vocal-prompt", ga.vocal_prompt, "Vocal prompt ids");
  gen_cmd->add_option("--accomp-prompt", ga.accomp_prompt, "Accompaniment prompt ids");
  gen_cmd->add_option("--predetermined", ga.predetermined, "Pre-determined track ids");
  add_sampling(gen_cmd, ga.sampling);

  EditArgs ea;
  std::uint64_t clip_id = 0;
  auto* edit_cmd = app.add_subcommand("edit", "Regenerate a clip after a lyric edit");
  edit_cmd->add_option("--task", ea.task, "song-editing, vocals-editing or vocals-editing-in-song")->required();
  edit_cmd->add_option("--ckpt", ea.ckpt, "Checkpoint")->required();
  edit_cmd->add_option("--clip", ea.clip_file, "Corpus file holding the clip")->required();
  auto* clip_id_opt = edit_cmd->add_option("--clip-id", clip_id, "Clip id within the file");
  edit_cmd->add_option("--edited-lyrics", ea.edited_lyrics, "Full edited lyric ids")->required();
  edit_cmd->add_option("--span", ea.span, "Edited word span START:LENGTH in the original lyrics");
  add_sampling(edit_cmd, ea.sampling);

  InspectArgs ia;
  auto* inspect = app.add_subcommand("inspect-mask", "Print attention masks");
  inspect->add_option("--task", ia.task, "Show the routed masks of a task");
  inspect->add_option("--sa", ia.sa, "causal, non-causal or none");
  inspect->add_option("--bca", ia.bca, "br, a2v, v2a or none");
  inspect->add_option("--T", ia.length, "Sequence length")->capture_default_str();
  inspect->add_flag("--all", ia.all, "Print the routing table of every task");

  GradcheckArgs gca;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Check model gradients against finite differences");
  grad_cmd->add_option("--config", gca.config, "Model config file (model.* keys)");
  grad_cmd->add_option("--seed", gca.seed, "Model and batch seed")->capture_default_str();
  grad_cmd->add_option("--coords", gca.coords, "Coordinates per tensor")->capture_default_str();
  grad_cmd->add_flag("--inject-grad-error", gca.inject_error)->group("");

  EvalArgs eva;
  auto* eval_cmd = app.add_subcommand("eval", "Report metrics of a checkpoint on a corpus");
  eval_cmd->add_option("--ckpt", eva.ckpt, "Checkpoint")->required();
  eval_cmd->add_option("--corpus", eva.corpus, "Corpus file")->required();
  eval_cmd->add_option("--report", eva.report, "Write the JSON-lines report here");
  eval_cmd->add_option("--compare-ckpt", eva.compare_ckpt, "Checkpoint trained without cross-stream attention");
  eval_cmd->add_option("--limit", eva.limit, "Use at most this many clips");
  eval_cmd->add_option("--precision", eva.precision, "f64 or f32");

  std::vector<std::string> argv_store = {"dslm"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (gen_corpus->parsed()) return cmd_gen_corpus(gc, out);
    if (train_cmd->parsed()) return cmd_train(ta, out, err);
    if (gen_cmd->parsed()) {
      if (lyrics_opt->count() > 0) ga.lyrics = lyrics_flag;
      return with_precision(ga.sampling.precision, [&](auto r) { return generate_with<decltype(r)>(ga, out); });
    }
    if (edit_cmd->parsed()) {
      if (clip_id_opt->count() > 0) ea.clip_id = clip_id;
      return with_precision(ea.sampling.precision, [&](auto r) { return edit_with<decltype(r)>(ea, out); });
    }
    if (inspect->parsed()) return cmd_inspect_mask(ia, out);
    if (grad_cmd->parsed()) return cmd_gradcheck(gca, out);
    if (eval_cmd->parsed()) {
      return with_precision(eva.precision, [&](auto r) { return eval_with<decltype(r)>(eva, out); });
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace dslm::cli
