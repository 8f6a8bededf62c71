#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

const std::string kCli = FCDS_CLI_PATH;
const fs::path kData = FCDS_TEST_DATA;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);)
    if (!l.empty()) out.push_back(l);
  return out;
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir = fs::temp_directory_path() / (std::string("fcds_cli_") + info->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  struct Result {
    int status = -1;
    std::string out, err;
  };

  // Runs the CLI with `args` (already shell-quoted where needed).
  Result run(const std::string& args, const std::string& env = "") {
    const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = env + " '" + kCli + "' " + args + " > '" + out.string() + "' 2> '" + err.string() + "'";
    const int raw = std::system(cmd.c_str());
    Result r;
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  std::string sample() const { return "'" + (kData / "sample").string() + "'"; }
  std::string config() const { return "'" + (kData / "sample.cfg").string() + "'"; }
  std::string at(const std::string& name) const { return "'" + (dir / name).string() + "'"; }

  Result train(const std::string& ckpt, const std::string& env = "") {
    return run("train --corpus " + sample() + " --config " + config() + " --out " + at(ckpt), env);
  }
};

}  // namespace

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").status, 1);
  EXPECT_EQ(run("frobnicate").status, 1);
  const auto r = run("stats --corpus " + sample() + " --bogus-flag");
  EXPECT_EQ(r.status, 1);
  EXPECT_FALSE(r.err.empty());
  EXPECT_EQ(run("grad-check --dims huge").status, 1);
}

TEST_F(Cli, MissingCorpusLeavesNoOutputs) {
  const auto r = run("train --corpus " + at("nope") + " --config " + config() + " --out " + at("m.ckpt"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("nope"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "m.ckpt"));
  EXPECT_FALSE(fs::exists(dir / "m.ckpt.log.jsonl"));
  EXPECT_NE(run("train --corpus " + sample() + " --config " + at("missing.cfg") + " --out " + at("m.ckpt")).status, 0);
  EXPECT_FALSE(fs::exists(dir / "m.ckpt"));
}

TEST_F(Cli, MalformedCorpusExitsTwoWithLineContext) {
  const auto corpus = dir / "bad";
  fs::copy(kData / "minimal", corpus);
  {
    std::ofstream out(corpus / "train.jsonl", std::ios::app);
    out << "{not json\n";
  }
  const auto r = run("train --corpus '" + corpus.string() + "' --out " + at("m.ckpt"));
  EXPECT_EQ(r.status, 2) << r.err;
  EXPECT_NE(r.err.find("line 2"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "m.ckpt"));
}

TEST_F(Cli, DivergentTrainingExitsThree) {
  {
    std::ofstream cfg(dir / "big.cfg");
    cfg << "learning_rate = 1e250\nepochs = 2\nembedding_dim = 4\nhidden_dim = 4\ntree_state_dim = 4\ngcn_dim = 4\n";
  }
  const auto r = run("train --corpus " + sample() + " --config " + at("big.cfg") + " --out " + at("m.ckpt"));
  EXPECT_EQ(r.status, 3);
  EXPECT_TRUE(std::regex_search(r.err, std::regex(R"(doc \S+ pair \(\d+, \d+\): non-finite loss)"))) << r.err;
  EXPECT_FALSE(fs::exists(dir / "m.ckpt"));
}

TEST_F(Cli, GradCheckPassesEveryComponent) {
  const auto r = run("grad-check --seed 7 --dims tiny");
  ASSERT_EQ(r.status, 0) << r.out << r.err;
  const auto ls = lines(r.out);
  ASSERT_GT(ls.size(), 3u);
  std::size_t components = 0;
  for (std::size_t i = 1; i + 1 < ls.size(); ++i) {
    std::istringstream in(ls[i]);
    std::string name, status;
    double err = 0;
    std::size_t scalars = 0;
    in >> name >> err >> scalars >> status;
    EXPECT_LE(err, 1e-4) << ls[i];
    EXPECT_EQ(status, "ok") << ls[i];
    ++components;
  }
  EXPECT_GE(components, 5u);
}

TEST_F(Cli, StatsDocumentNodeShortensDistances) {
  const auto r = run("stats --corpus " + sample());
  ASSERT_EQ(r.status, 0) << r.err;
  std::smatch with, without;
  ASSERT_TRUE(std::regex_search(r.out, with, std::regex(R"(with doc node\s+([0-9.]+))"))) << r.out;
  ASSERT_TRUE(std::regex_search(r.out, without, std::regex(R"(without doc node\s+([0-9.]+))"))) << r.out;
  EXPECT_LE(std::stod(with[1]), std::stod(without[1]));
  EXPECT_NE(r.out.find("documents 12"), std::string::npos) << r.out;
}

TEST_F(Cli, TrainIsDeterministicAndHonoursSeedOverride) {
  ASSERT_EQ(train("a.ckpt").status, 0);
  ASSERT_EQ(train("b.ckpt").status, 0);
  EXPECT_EQ(slurp(dir / "a.ckpt"), slurp(dir / "b.ckpt"));
  EXPECT_EQ(slurp(dir / "a.ckpt.log.jsonl"), slurp(dir / "b.ckpt.log.jsonl"));
  ASSERT_EQ(train("c.ckpt", "FCDS_SEED=99").status, 0);
  EXPECT_NE(slurp(dir / "a.ckpt"), slurp(dir / "c.ckpt"));
  EXPECT_EQ(train("d.ckpt", "FCDS_SEED=notanumber").status, 1);

  const auto log = lines(slurp(dir / "a.ckpt.log.jsonl"));
  ASSERT_EQ(log.size(), 3u);
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto j = nlohmann::json::parse(log[i]);
    EXPECT_EQ(j.at("epoch").get<std::size_t>(), i + 1);
    for (const char* k : {"loss", "dev_f1", "dev_ign_f1", "eta"}) EXPECT_TRUE(j.at(k).is_number()) << k;
  }
  // rerunning into the same path replaces the checkpoint
  ASSERT_EQ(train("a.ckpt").status, 0);
  EXPECT_EQ(slurp(dir / "a.ckpt"), slurp(dir / "b.ckpt"));
}

TEST_F(Cli, EvalPredictAndInspectFromCheckpoint) {
  {
    // long enough that the test split gets predictions
    std::ofstream cfg(dir / "long.cfg");
    cfg << slurp(kData / "sample.cfg") << "epochs = 60\npatience = 100\n";
  }
  ASSERT_EQ(run("train --corpus " + sample() + " --config " + at("long.cfg") + " --out " + at("m.ckpt")).status, 0);

  const auto ev = run("eval --corpus " + sample() + " --ckpt " + at("m.ckpt") + " --split dev --out " + at("report.json"));
  ASSERT_EQ(ev.status, 0) << ev.err;
  const auto report = nlohmann::json::parse(lines(ev.out).at(0));
  for (const char* k : {"precision", "recall", "f1", "ign_f1", "intra_f1", "inter_f1"}) {
    const double v = report.at(k).get<double>();
    EXPECT_TRUE(v >= 0 && v <= 1) << k;
  }
  EXPECT_EQ(report.at("documents").get<std::size_t>(), 3u);
  EXPECT_NE(ev.out.find("overall"), std::string::npos);
  EXPECT_EQ(nlohmann::json::parse(slurp(dir / "report.json")).at("f1"), report.at("f1"));

  const auto pr = run("predict --corpus " + sample() + " --ckpt " + at("m.ckpt") + " --split test --out " + at("p.jsonl"));
  ASSERT_EQ(pr.status, 0) << pr.err;
  const auto relations = lines(slurp(kData / "sample" / "relations.txt"));
  const auto predicted = lines(slurp(dir / "p.jsonl"));
  EXPECT_FALSE(predicted.empty());
  for (const auto& l : predicted) {
    const auto j = nlohmann::json::parse(l);
    EXPECT_EQ(j.at("doc_id").get<std::string>().rfind("test", 0), 0u);
    EXPECT_NE(j.at("h"), j.at("t"));
    EXPECT_NE(std::find(relations.begin(), relations.end(), j.at("r").get<std::string>()), relations.end());
    EXPECT_GT(j.at("score").get<double>(), 0.0);
  }
  const auto again = run("predict --corpus " + sample() + " --ckpt " + at("m.ckpt") + " --split test --out " + at("q.jsonl"));
  ASSERT_EQ(again.status, 0);
  EXPECT_EQ(slurp(dir / "p.jsonl"), slurp(dir / "q.jsonl"));

  const auto ig = run("inspect-graph --corpus " + sample() + " --ckpt " + at("m.ckpt") + " --doc train0");
  ASSERT_EQ(ig.status, 0) << ig.err;
  std::smatch nodes;
  ASSERT_TRUE(std::regex_search(ig.out, nodes, std::regex(R"(nodes (\d+))")));
  std::size_t tokens = 0, mentions = 0, documents = 0;
  for (const auto& l : lines(ig.out)) {
    tokens += l.find(" token sentence=") != std::string::npos || l.find(" root_token ") != std::string::npos;
    mentions += l.find(" mention sentence=") != std::string::npos;
    documents += l.size() > 9 && l.compare(l.size() - 9, 9, " document") == 0;
  }
  EXPECT_EQ(std::stoul(nodes[1]), tokens + mentions + documents);
  EXPECT_EQ(documents, 1u);
  EXPECT_NE(ig.out.find("stats {"), std::string::npos);

  EXPECT_EQ(run("inspect-graph --corpus " + sample() + " --doc no-such-doc").status, 1);
  EXPECT_NE(run("eval --corpus " + sample() + " --ckpt " + at("absent.ckpt")).status, 0);
}

TEST_F(Cli, CorruptCheckpointIsRejected) {
  {
    std::ofstream out(dir / "junk.ckpt", std::ios::binary);
    out << "definitely not a checkpoint";
  }
  const auto r = run("eval --corpus " + sample() + " --ckpt " + at("junk.ckpt"));
  EXPECT_NE(r.status, 0);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, SynthWritesLoadableCorpus) {
  const auto r = run("synth --out " + at("gen") + " --train 4 --dev 2 --seed 3");
  ASSERT_EQ(r.status, 0) << r.err;
  for (const char* f : {"relations.txt", "train.jsonl", "train.conllu", "train.trees", "dev.jsonl"})
    EXPECT_TRUE(fs::exists(dir / "gen" / f)) << f;
  const auto s = run("stats --corpus " + at("gen"));
  EXPECT_EQ(s.status, 0) << s.err;
  EXPECT_NE(s.out.find("documents 6"), std::string::npos) << s.out;
}
