#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cli.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "autorank");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = autorank::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string golden(const std::string& name) { return fixtures::data_path("golden/" + name); }

class TempDir {
 public:
  TempDir() : path_(fs::temp_directory_path() / ("autorank_cli_" + std::to_string(::getpid()) + "_" +
                                                 std::to_string(counter_++))) {
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string write(const std::string& name, const std::string& text) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
  }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

const std::string kPolicy = "a: rule=standard metrics=[m1, m2]\n";

}  // namespace

TEST(Cli, HelpExitsZeroAndListsFlags) {
  const auto r = run({"rank", "--help"});
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"--scores", "--systems", "--policy", "--lang-pair", "--out", "--format",
                           "--drop-incomplete-systems", "--jobs", "--epsilon", "--humeval"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
  EXPECT_EQ(run({"--help"}).code, 0);
  const auto s = run({"select", "--help"});
  EXPECT_EQ(s.code, 0);
  EXPECT_NE(s.out.find("--k-constrained"), std::string::npos);
  EXPECT_NE(s.out.find("--ranking"), std::string::npos);
  EXPECT_NE(run({"correlate", "--help"}).out.find("--metrics"), std::string::npos);
}

TEST(Cli, MissingScoresIsUsageError) {
  EXPECT_EQ(run({"rank", "--policy", golden("policy.conf")}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"rank", "--scores", golden("scores.tsv"), "--policy", golden("policy.conf"), "--format", "xml"}).code,
            1);
}

TEST(Cli, UnreadableFileExitsOne) {
  const auto r = run({"rank", "--scores", "/nonexistent/scores.tsv", "--policy", golden("policy.conf")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos);
}

TEST(Cli, UnknownLangPairExitsTwo) {
  const auto r =
      run({"rank", "--scores", golden("scores.tsv"), "--policy", golden("policy.conf"), "--lang-pair", "en-xx_XX"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("unknown language pair"), std::string::npos);
}

TEST(Cli, RankBhojpuriMatchesCommittedGolden) {
  const auto r = run({"rank", "--scores", golden("scores.tsv"), "--policy", golden("policy.conf"), "--systems",
                      golden("systems.csv"), "--lang-pair", "en-bho_IN"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, fixtures::read("golden/expected_rank_en-bho_IN.tsv"));
}

TEST(Cli, RankWritesOutFileAndJson) {
  const TempDir dir;
  const auto path = dir.file("out.json");
  const auto r = run({"rank", "--scores", golden("scores.tsv"), "--policy", golden("policy.conf"), "--format", "json",
                      "--out", path});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream in(path);
  const auto j = autorank::report::Json::parse(in);
  ASSERT_EQ(j.size(), 5u);
  EXPECT_EQ(j[0]["lang_pair"], "en-bho_IN");
  EXPECT_EQ(j[4]["lang_pair"], "en-mas_KE");
}

TEST(Cli, EpsilonFlagOverridesPolicy) {
  const auto r = run({"rank", "--scores", golden("scores.tsv"), "--policy", golden("policy.conf"), "--format", "json",
                      "--lang-pair", "en-cs_CZ", "--epsilon", "0.5"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(autorank::report::Json::parse(r.out)[0]["epsilon"], 0.5);
}

TEST(Cli, ValidationFailureNamesFirstFinding) {
  const TempDir dir;
  const auto scores = dir.write("s.tsv",
                                "lang_pair\tsystem\tmetric\tsegment_id\tscore\n"
                                "a\tX\tm1\t\t1\na\tX\tm2\t\t1\na\tY\tm1\t\t2\n");
  const auto policy = dir.write("p.conf", kPolicy);
  const auto r = run({"rank", "--scores", scores, "--policy", policy});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("Y"), std::string::npos);
  EXPECT_NE(r.err.find("m2"), std::string::npos);

  const auto dropped = run({"rank", "--scores", scores, "--policy", policy, "--drop-incomplete-systems"});
  EXPECT_EQ(dropped.code, 0) << dropped.err;
  EXPECT_NE(dropped.err.find("dropped incomplete system Y"), std::string::npos);
  EXPECT_EQ(dropped.out.find("\nY\t"), std::string::npos);
}

TEST(Cli, MalformedScoresExitOne) {
  const TempDir dir;
  const auto scores = dir.write("s.csv", "lang_pair,system,metric,segment_id,score\na,X,m1,,abc\n");
  const auto r = run({"rank", "--scores", scores, "--policy", dir.write("p.conf", kPolicy)});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("line 2"), std::string::npos);
}

TEST(Cli, ValidateExitCodes) {
  const auto ok = run({"validate", "--scores", golden("scores.tsv"), "--policy", golden("policy.conf"), "--systems",
                       golden("systems.csv")});
  EXPECT_EQ(ok.code, 0) << ok.out << ok.err;
  EXPECT_NE(ok.out.find("ok\t5 language pair(s) rankable"), std::string::npos);

  const TempDir dir;
  const auto policy = dir.write("p.conf", kPolicy);
  const auto incomplete = dir.write("s.tsv", "lang_pair\tsystem\tmetric\tsegment_id\tscore\na\tX\tm1\t\t1\n");
  const auto bad = run({"validate", "--scores", incomplete, "--policy", policy});
  EXPECT_EQ(bad.code, 2);
  EXPECT_TRUE(bad.out.starts_with("error\t"));

  const auto extra = dir.write("e.tsv",
                               "lang_pair\tsystem\tmetric\tsegment_id\tscore\n"
                               "a\tX\tm1\t\t1\na\tX\tm2\t\t1\na\tX\tm3\t\t1\n");
  const auto warn = run({"validate", "--scores", extra, "--policy", policy});
  EXPECT_EQ(warn.code, 0);
  EXPECT_TRUE(warn.out.starts_with("warning\t"));

  const auto unparsable = dir.write("u.tsv", "lang_pair\tsystem\n");
  EXPECT_EQ(run({"validate", "--scores", unparsable, "--policy", policy}).code, 1);
}

TEST(Cli, SelectFromRawInputsAndFromRankingJson) {
  const auto direct = run({"select", "--scores", golden("scores.tsv"), "--policy", golden("policy.conf"), "--systems",
                           golden("systems.csv"), "--lang-pair", "en-is_IS", "--format", "json"});
  ASSERT_EQ(direct.code, 0) << direct.err;
  const auto dj = autorank::report::Json::parse(direct.out);
  EXPECT_EQ(dj[0]["selected"].size(), 18u);

  const TempDir dir;
  const auto ranking = dir.file("r.json");
  ASSERT_EQ(run({"rank", "--scores", golden("scores.tsv"), "--policy", golden("policy.conf"), "--format", "json",
                 "--out", ranking})
                .code,
            0);
  const auto via = run({"select", "--ranking", ranking, "--systems", golden("systems.csv"), "--lang-pair", "en-is_IS",
                        "--format", "json"});
  ASSERT_EQ(via.code, 0) << via.err;
  EXPECT_EQ(autorank::report::Json::parse(via.out), dj);
}

TEST(Cli, SelectFlagsOverridePolicy) {
  const TempDir dir;
  const auto policy = dir.write("p.conf", "humeval.k_constrained = 1\nhumeval.total = 3\n" +
                                              std::string("en-cs_CZ: rule=standard metrics=[chrF++]\n"));
  const auto scores =
      dir.write("s.tsv", "lang_pair\tsystem\tmetric\tsegment_id\tscore\n"
                         "en-cs_CZ\tA\tchrF++\t\t50\nen-cs_CZ\tB\tchrF++\t\t40\nen-cs_CZ\tC\tchrF++\t\t30\n"
                         "en-cs_CZ\tD\tchrF++\t\t20\nen-cs_CZ\tE\tchrF++\t\t10\n");
  const auto systems = dir.write("m.csv",
                                 "system,constrained,params_b,open_weights,collected,lp_supported\n"
                                 "A,false,,,false,true\nB,false,,,false,true\nC,false,,,false,true\n"
                                 "D,false,,,false,true\nE,true,,,false,true\n");
  const std::vector<std::string> base{"select", "--scores", scores, "--policy", policy, "--systems", systems};
  const auto from_policy = run(base);
  ASSERT_EQ(from_policy.code, 0) << from_policy.err;
  EXPECT_EQ(from_policy.out, "# lang_pair\ten-cs_CZ\nsystem\treason\nA\tFillTop\nB\tFillTop\nE\tTopConstrained\n");
  auto args = base;
  args.insert(args.end(), {"--total", "2", "--k-constrained", "0"});
  const auto from_flags = run(args);
  ASSERT_EQ(from_flags.code, 0) << from_flags.err;
  EXPECT_EQ(from_flags.out, "# lang_pair\ten-cs_CZ\nsystem\treason\nA\tFillTop\nB\tFillTop\n");
}

TEST(Cli, CorrelateSegmentLevel) {
  const TempDir dir;
  std::string text = "lang_pair,system,metric,segment_id,score\n";
  for (int s = 0; s < 20; ++s) {
    for (const char* sys : {"A", "B"}) {
      const double x = s * 1.5 + (sys[0] == 'A' ? 0.25 : 0.0);
      text += std::string("a,") + sys + ",m1," + std::to_string(s) + "," + std::to_string(x) + "\n";
      text += std::string("a,") + sys + ",m2," + std::to_string(s) + "," + std::to_string(2 * x + 1) + "\n";
      text += std::string("a,") + sys + ",m3," + std::to_string(s) + "," + std::to_string(-x) + "\n";
    }
  }
  const auto scores = dir.write("seg.csv", text);
  const auto r = run({"correlate", "--scores", scores, "--metrics", "m1,m3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, "# lang_pair,a\nmetric,m1,m3\nm1,1,-1\nm3,-1,1\n");
  const auto policy = dir.write("p.conf", "metric m3: orientation=lower_better kind=surface\n"
                                          "a: rule=standard metrics=[m1, m3]\n");
  const auto oriented = run({"correlate", "--scores", scores, "--policy", policy, "--oriented"});
  ASSERT_EQ(oriented.code, 0) << oriented.err;
  EXPECT_EQ(oriented.out, "# lang_pair,a\nmetric,m1,m3\nm1,1,1\nm3,1,1\n");
  EXPECT_EQ(run({"correlate", "--scores", scores, "--oriented"}).code, 1);
  const auto j = run({"correlate", "--scores", scores, "--format", "json"});
  ASSERT_EQ(j.code, 0);
  EXPECT_EQ(autorank::report::Json::parse(j.out)[0]["metrics"].size(), 3u);
}

TEST(Cli, CorrelateSystemLevelOnlyExitsTwo) {
  const auto r = run({"correlate", "--scores", golden("scores.tsv"), "--lang-pair", "en-cs_CZ"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("system-level"), std::string::npos);
}

TEST(Cli, OutputIndependentOfJobs) {
  const std::vector<std::string> base{"rank", "--scores", golden("scores.tsv"), "--policy", golden("policy.conf"),
                                      "--systems", golden("systems.csv"), "--format", "markdown"};
  auto one = base, eight = base;
  one.insert(one.end(), {"--jobs", "1"});
  eight.insert(eight.end(), {"--jobs", "8"});
  const auto a = run(one), b = run(eight), c = run(base);
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out, c.out);
}

TEST(Cli, JobsFallsBackToEnvironment) {
  ::setenv("AUTORANK_JOBS", "3", 1);
  EXPECT_EQ(autorank::cli::detail::resolve_jobs(std::nullopt), 3u);
  EXPECT_EQ(autorank::cli::detail::resolve_jobs(5), 5u);
  ::setenv("AUTORANK_JOBS", "zero", 1);
  EXPECT_EQ(autorank::cli::detail::resolve_jobs(std::nullopt), autorank::default_jobs());
  ::unsetenv("AUTORANK_JOBS");
}
