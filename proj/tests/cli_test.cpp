#include <gtest/gtest.h>

#include <cstdio>
#include <sstream>

#include "fixtures.hpp"
#include "tvr/cli.hpp"

using namespace tvr;

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "tvr");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string generate_small(const fixtures::TempDir& dir, const std::string& setting, const std::string& seed = "3") {
  const auto r = run({"generate", "--setting", setting, "--train", "30", "--val", "10", "--test", "40", "--seed", seed,
                      "--out", dir.path().string()});
  EXPECT_EQ(r.code, 0) << r.err;
  return r.out;
}

std::string digest_of(const std::string& out) { return out.substr(out.find("digest ") + 7); }

class ScopedEnv {
public:
  ScopedEnv(const char* name, const char* value) : name_(name) { ::setenv(name, value, 1); }
  ~ScopedEnv() { ::unsetenv(name_); }

private:
  const char* name_;
};

}  // namespace

TEST(Spacesize, DefaultAndRaw) {
  EXPECT_EQ(run({"spacesize"}).out, "11,895,256,230\n");
  EXPECT_EQ(run({"spacesize", "--raw"}).out, "11895256230\n");
  EXPECT_EQ(run({"spacesize", "--max-len", "1"}).out, "330\n");
  EXPECT_EQ(run({"spacesize", "--max-len", "0"}).code, 1);
}

TEST(Usage, UnknownFlagSuggestsNearest) {
  const auto r = run({"generate", "--setting", "event", "--sede", "4", "--out", "/tmp/unused"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("unknown option '--sede'"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("--seed"), std::string::npos);
}

TEST(Usage, MissingRequiredAndBadValues) {
  EXPECT_EQ(run({"generate", "--out", "/tmp/unused"}).code, 1);
  EXPECT_EQ(run({"generate", "--setting", "sideways", "--out", "/tmp/unused"}).code, 1);
  EXPECT_EQ(run({"spacesize", "--max-len", "many"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Generate, SameSeedSameDigest) {
  fixtures::TempDir a, b, c;
  const auto da = digest_of(generate_small(a, "event"));
  const auto db = digest_of(generate_small(b, "event"));
  const auto dc = digest_of(generate_small(c, "event", "4"));
  EXPECT_EQ(da, db);
  EXPECT_NE(da, dc);
  EXPECT_EQ(tvr::detail::read_file(a / "event/test.ndjson"), tvr::detail::read_file(b / "event/test.ndjson"));
  EXPECT_EQ(load_samples(a / "event/val.ndjson").size(), 10u);
}

TEST(Stats, ErrorsAndExitCodes) {
  fixtures::TempDir dir;
  write_file_atomic(dir / "empty.ndjson", "");
  EXPECT_EQ(run({"stats", "--dataset", (dir / "empty.ndjson").string()}).code, 1);
  EXPECT_EQ(run({"stats", "--dataset", (dir / "nope.ndjson").string()}).code, 2);

  const auto samples = fixtures::generated(Setting::Event, 3);
  write_file_atomic(dir / "bad.ndjson", samples_to_ndjson(samples) + "{\"id\": 1}\n");
  const auto r = run({"stats", "--dataset", (dir / "bad.ndjson").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("bad.ndjson:4"), std::string::npos) << r.err;
}

TEST(Stats, ReportsOnGeneratedData) {
  fixtures::TempDir dir;
  generate_small(dir, "event");
  const auto r = run({"stats", "--dataset", (dir / "event").string(), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["samples"], 30);
}

TEST(Solve, OracleBasicThenEvalIsPerfect) {
  fixtures::TempDir dir;
  generate_small(dir, "basic");
  const auto preds = (dir / "preds.ndjson").string();
  auto r = run({"solve", "--dataset", (dir / "basic").string(), "--method", "oracle-basic", "--out", preds});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("solved 40/40"), std::string::npos) << r.out;
  r = run({"eval", "--dataset", (dir / "basic").string(), "--predictions", preds, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  for (const char* k : {"ObjAcc", "AttrAcc", "ValAcc", "Acc"}) {
    EXPECT_EQ(j[k], 1.0) << k;
    EXPECT_EQ(j["exact"][k], "1") << k;
  }
  EXPECT_FALSE(j.contains("samples"));
  r = run({"eval", "--dataset", (dir / "basic").string(), "--predictions", preds});
  EXPECT_NE(r.out.find("ObjAcc"), std::string::npos);
}

TEST(Solve, OracleEventThenEval) {
  fixtures::TempDir dir;
  generate_small(dir, "event");
  const auto preds = (dir / "preds.ndjson").string();
  auto r = run({"solve", "--dataset", (dir / "event").string(), "--method", "oracle-event", "--out", preds, "--jobs",
                "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  r = run({"eval", "--dataset", (dir / "event").string(), "--predictions", preds, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_GE(j["Acc"].get<double>(), 0.95);
  for (const char* k : {"Acc", "LAcc", "AD", "AND", "EO"}) EXPECT_TRUE(j.contains(k)) << k;
}

TEST(Solve, MethodSettingMismatch) {
  fixtures::TempDir dir;
  generate_small(dir, "event");
  const auto r = run({"solve", "--dataset", (dir / "event").string(), "--method", "oracle-basic", "--out",
                      (dir / "p.ndjson").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("cannot solve"), std::string::npos);
}

TEST(Eval, PredictionErrors) {
  fixtures::TempDir dir;
  generate_small(dir, "event");
  const auto ds = (dir / "event").string();
  write_file_atomic(dir / "dup.ndjson", "{\"id\":\"a\",\"transformation\":[]}\n{\"id\":\"a\",\"transformation\":[]}\n");
  EXPECT_EQ(run({"eval", "--dataset", ds, "--predictions", (dir / "dup.ndjson").string()}).code, 1);
  write_file_atomic(dir / "unknown.ndjson", "{\"id\":\"zz\",\"transformation\":[]}\n");
  EXPECT_EQ(run({"eval", "--dataset", ds, "--predictions", (dir / "unknown.ndjson").string()}).code, 1);
  EXPECT_EQ(run({"eval", "--dataset", ds, "--predictions", (dir / "missing.ndjson").string()}).code, 2);
  write_file_atomic(dir / "none.ndjson", "");
  const auto r = run({"eval", "--dataset", ds, "--predictions", (dir / "none.ndjson").string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("without prediction"), std::string::npos) << r.err;
  EXPECT_EQ(run({"eval", "--dataset", ds, "--predictions", (dir / "none.ndjson").string(), "--only-predicted"}).code, 0);
}

TEST(Eval, SequenceProtocol) {
  fixtures::TempDir dir;
  write_file_atomic(dir / "refs.ndjson", "{\"id\":\"q1\",\"sequence\":[\"a\",\"b\",\"c\"]}\n");
  write_file_atomic(dir / "preds.ndjson", "{\"id\":\"q1\",\"sequence\":[\"a\",\"c\",\"b\"]}\n");
  const auto r = run({"eval", "--protocol", "sequence", "--references", (dir / "refs.ndjson").string(),
                      "--predictions", (dir / "preds.ndjson").string(), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["EMR"], 0.0);
  EXPECT_EQ(j["Recall"], 1.0);
  EXPECT_EQ(j["Precision"], 1.0);
  EXPECT_EQ(j["exact"]["KTD"], "1/3");
}

TEST(Solve, RandomBaselineIsSeeded) {
  fixtures::TempDir dir;
  std::string refs;
  for (int i = 0; i < 20; ++i) {
    refs += "{\"id\":\"q" + std::to_string(i) + "\",\"sequence\":[\"c" + std::to_string(i) + "\",\"c" +
            std::to_string(i + 20) + "\"]}\n";
  }
  write_file_atomic(dir / "refs.ndjson", refs);
  const auto a = (dir / "a.ndjson").string(), b = (dir / "b.ndjson").string();
  const auto base = std::vector<std::string>{"solve", "--method", "random", "--references", (dir / "refs.ndjson").string(),
                                             "--seed", "5", "--out"};
  auto args = base;
  args.push_back(a);
  ASSERT_EQ(run(args).code, 0);
  args = base;
  args.push_back(b);
  ASSERT_EQ(run(args).code, 0);
  EXPECT_EQ(tvr::detail::read_file(a), tvr::detail::read_file(b));
  for (const auto& p : parse_sequences(tvr::detail::read_file(a))) {
    EXPECT_GE(p.sequence.size(), 2u);
    EXPECT_LE(p.sequence.size(), 7u);
  }
}

TEST(Config, FlagBeatsEnvBeatsFile) {
  fixtures::TempDir dir;
  write_file_atomic(dir / "tvr.ini", "[spacesize]\nmax-len = 1\n");
  const auto cfg = (dir / "tvr.ini").string();
  EXPECT_EQ(run({"--config", cfg, "spacesize"}).out, "330\n");
  {
    ScopedEnv env("TVR_MAX_LEN", "2");
    EXPECT_EQ(run({"--config", cfg, "spacesize"}).out, "109,230\n");
    EXPECT_EQ(run({"--config", cfg, "spacesize", "--max-len", "3"}).out, "36,046,230\n");
  }
  {
    ScopedEnv env("TVR_CONFIG", cfg.c_str());
    EXPECT_EQ(run({"spacesize"}).out, "330\n");
  }
  EXPECT_EQ(run({"--config", (dir / "missing.ini").string(), "spacesize"}).code, 2);
}

TEST(Config, TopLevelKeysApplyToEverySubcommand) {
  fixtures::TempDir dir;
  write_file_atomic(dir / "tvr.ini", "max-len = 2\n[spacesize]\nraw = true\n");
  EXPECT_EQ(run({"--config", (dir / "tvr.ini").string(), "spacesize"}).out, "109230\n");
}

TEST(Binary, RunsAsSubprocess) {
  const std::string cmd = std::string(TVR_CLI_PATH) + " spacesize 2>&1";
  FILE* p = ::popen(cmd.c_str(), "r");
  ASSERT_NE(p, nullptr);
  std::string out;
  char buf[256];
  while (std::fgets(buf, sizeof buf, p)) out += buf;
  const int status = ::pclose(p);
  EXPECT_EQ(WEXITSTATUS(status), 0);
  EXPECT_EQ(out, "11,895,256,230\n");

  const std::string bad = std::string(TVR_CLI_PATH) + " spacesize --rwa >/dev/null 2>&1";
  EXPECT_EQ(WEXITSTATUS(std::system(bad.c_str())), 1);
}
