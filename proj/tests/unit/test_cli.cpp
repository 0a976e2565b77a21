#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dslm/cli/commands.hpp"

using dslm::cli::run_cli;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::filesystem::path scratch() {
  const auto d = std::filesystem::temp_directory_path() / "dslm_unit_cli";
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST(Cli, InspectMaskExamples) {
  auto r = cli({"inspect-mask", "--sa", "causal", "--T", "3"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "0··\n00·\n000\n");
  r = cli({"inspect-mask", "--task", "lyrics-to-song"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("SA: Causal, Causal; BCA: BR"), std::string::npos);
  r = cli({"inspect-mask", "--bca", "none", "--T", "4"});
  EXPECT_EQ(r.out, "BCA vocal <- accompaniment: bypassed\nBCA accompaniment <- vocal: bypassed\n");
}

TEST(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"no-such-command"}).code, 2);
  auto r = cli({"inspect-mask", "--task", "lyrics-to-opera"});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("lyrics-to-song"), std::string::npos);
  EXPECT_EQ(cli({"inspect-mask", "--sa", "causal", "--bca", "br"}).code, 2);
  EXPECT_EQ(cli({"gen-corpus"}).code, 2);
}

TEST(Cli, DomainErrorsExitOne) {
  const auto dir = scratch();
  std::ofstream(dir / "broken.txt") << "not a corpus\n";
  auto r = cli({"train", "--corpus", (dir / "broken.txt").string(), "--out-dir", (dir / "run").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 1"), std::string::npos) << r.err;
}

TEST(Cli, GenCorpusIsDeterministic) {
  const auto dir = scratch();
  const auto a = dir / "a.txt", b = dir / "b.txt";
  EXPECT_EQ(cli({"gen-corpus", "--out", a.string(), "--size", "20", "--seed", "4"}).code, 0);
  EXPECT_EQ(cli({"gen-corpus", "--out", b.string(), "--size", "20", "--seed", "4"}).code, 0);
  std::ifstream fa(a), fb(b);
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(Cli, TrainGenerateEditEval) {
  const auto dir = scratch();
  const auto corpus = dir / "small.txt";
  ASSERT_EQ(cli({"gen-corpus", "--out", corpus.string(), "--size", "4", "--seed", "1", "--max-len", "12"}).code, 0);
  std::ofstream(dir / "tiny.cfg") << "model.enc_layers = 1\nmodel.dec_layers = 1\nmodel.song_layers = 1\n"
                                     "model.d_model = 16\nmodel.heads = 2\nmodel.d_ff = 32\n"
                                     "train.steps = 3\ntrain.batch_size = 2\ntrain.precision = f64\n";
  const auto run = dir / "run";
  std::filesystem::remove_all(run);
  auto r = cli({"train", "--corpus", corpus.string(), "--config", (dir / "tiny.cfg").string(), "--out-dir",
                run.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream mf(run / "manifest.json");
  const auto manifest = nlohmann::json::parse(mf);
  EXPECT_EQ(manifest["status"], "ok");
  EXPECT_EQ(manifest["config"]["sampler.k"], "50");
  EXPECT_EQ(manifest["config"]["sampler.temperature"], "0.90000000000000002");

  const auto ckpt = (run / "final.ckpt").string();
  r = cli({"generate", "--task", "lyrics-to-song", "--ckpt", ckpt, "--lyrics", "9 10 11", "--seed", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("masks: SA: Causal, Causal; BCA: BR"), std::string::npos);
  EXPECT_NE(r.out.find("sampler: k=50 temperature=0.9"), std::string::npos);
  const auto again = cli({"generate", "--task", "lyrics-to-song", "--ckpt", ckpt, "--lyrics", "9 10 11", "--seed", "2"});
  EXPECT_EQ(again.out, r.out);

  r = cli({"generate", "--task", "accompaniment-to-song", "--ckpt", ckpt, "--lyrics", "9 10"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("missing"), std::string::npos);

  r = cli({"generate", "--task", "accompaniment-to-song", "--ckpt", ckpt, "--lyrics", "9 10", "--predetermined",
           "20 21 22 23"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("accompaniment: 20 21 22 23\n"), std::string::npos);
  EXPECT_NE(r.out.find("masks: SA: Causal, Non-causal; BCA: A2V"), std::string::npos);

  std::ifstream cf(corpus);
  std::string header, record;
  std::getline(cf, header);
  std::getline(cf, record);
  const auto lyr_begin = record.find("lyrics=") + 7;
  const std::string lyrics = record.substr(lyr_begin, record.find('\t', lyr_begin) - lyr_begin);
  r = cli({"edit", "--task", "vocals-editing-in-song", "--ckpt", ckpt, "--clip", corpus.string(), "--clip-id", "0",
           "--edited-lyrics", lyrics});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto acc_begin = record.find("accomp=") + 7;
  const std::string accomp = record.substr(acc_begin, record.find('\t', acc_begin) - acc_begin);
  EXPECT_NE(r.out.find("accompaniment: " + accomp + "\n"), std::string::npos) << r.out;

  const auto report = dir / "report.jsonl";
  r = cli({"eval", "--ckpt", ckpt, "--corpus", corpus.string(), "--report", report.string(), "--compare-ckpt", ckpt});
  ASSERT_EQ(r.code, 0) << r.err;
  std::ifstream rf(report);
  std::string line;
  std::set<std::string> metrics;
  while (std::getline(rf, line)) metrics.insert(nlohmann::json::parse(line)["metric"].get<std::string>());
  for (const char* m : {"teacher_forced_ce", "greedy_exact_match", "song_head_accuracy", "bca_ablation"}) {
    EXPECT_TRUE(metrics.count(m)) << m;
  }
}

TEST(Cli, GradcheckReportsEveryGroupOnce) {
  auto r = cli({"gradcheck", "--seed", "1", "--coords", "1"});
  EXPECT_EQ(r.code, 0) << r.out;
  for (const char* g : {"encoder", "vocal", "accomp", "song"}) {
    const std::string key = std::string("group ") + g + " ";
    const auto first = r.out.find(key);
    EXPECT_NE(first, std::string::npos) << g;
    EXPECT_EQ(r.out.find(key, first + 1), std::string::npos) << g;
  }
  EXPECT_EQ(cli({"gradcheck", "--seed", "1", "--coords", "1", "--inject-grad-error"}).code, 1);
}
