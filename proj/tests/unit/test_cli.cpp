#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cmabnas/cli.hpp"
#include "cmabnas/genotype.hpp"

using namespace cmabnas;

namespace {

struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "cmabnas");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::filesystem::path scratch(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / "cmabnas_cli_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::filesystem::path write_config(const std::filesystem::path& dir, const std::string& text)
{
    const auto p = dir / "run.ini";
    std::ofstream(p) << text;
    return p;
}

const std::string tiny_config = "[space]\nnodes = 1\noperations = skip_connect\n"
                                "[engine]\nepochs = 2\nbatch = 4\nl_sim = 8\nl_best = 20\nwarmup = 1\nseed = 5\n"
                                "[oracle]\nkind = separable\nseed = 2\nnoise_sigma = 0.05\n";

} // namespace

TEST(Cli, SpaceDefault)
{
    const auto r = cli({"space"});
    EXPECT_EQ(r.code, 0);
    for (const char* s : {"1\t105\n", "2\t231\n", "3\t406\n", "4\t630\n", "6,203,943,900"}) {
        EXPECT_NE(r.out.find(s), std::string::npos) << s << "\n" << r.out;
    }
}

TEST(Cli, SpaceSmall)
{
    auto r = cli({"space", "--nodes", "1", "--operations", "a"});
    EXPECT_NE(r.out.find("1\t3\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("cell total\t3\n"), std::string::npos) << r.out;
    r = cli({"space", "--operations", "s2"});
    EXPECT_NE(r.out.find("1\t10\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("4\t55\n"), std::string::npos) << r.out;
}

TEST(Cli, SearchSmokeAndOutputsParseBack)
{
    const auto dir = scratch("smoke");
    const auto config = write_config(dir, tiny_config);
    const auto start = std::chrono::steady_clock::now();
    const auto r = cli({"search", config.string(), "--out", (dir / "out").string()});
    EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(1));
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("best reward"), std::string::npos);
    for (const char* f : {"config.ini", "best.genotype", "history.jsonl", "summary.tsv"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / "out" / f)) << f;
    }
    const auto snapshot = load_run_config(dir / "out" / "config.ini");
    EXPECT_EQ(snapshot.engine.seed, 5u);
    const auto best = parse_genotype(snapshot.space, read_file(dir / "out" / "best.genotype"));
    std::ifstream hist(dir / "out" / "history.jsonl");
    const auto history = read_history(hist, &snapshot.space);
    EXPECT_EQ(history.size(), 2u * (4 * 8 + 4 + 2 * 20 + 1));
    for (const auto& rec : history.records) {
        EXPECT_EQ(rec.genotype_hash, genotype_hash(snapshot.space, rec.pair));
    }
    bool found = false;
    for (const auto& rec : history.records) {
        found = found || (rec.phase == Phase::best && rec.pair == best);
    }
    EXPECT_TRUE(found);
    const auto summary = read_file(dir / "out" / "summary.tsv");
    EXPECT_EQ(std::count(summary.begin(), summary.end(), '\n'), 3);
}

TEST(Cli, RerunsAreByteIdentical)
{
    const auto dir = scratch("rerun");
    const auto config = write_config(dir, tiny_config);
    ASSERT_EQ(cli({"search", config.string(), "--out", (dir / "a").string()}).code, 0);
    ASSERT_EQ(cli({"search", config.string(), "--out", (dir / "b").string(), "--set", "engine.parallel_width=4"}).code,
              0);
    EXPECT_EQ(read_file(dir / "a" / "history.jsonl"), read_file(dir / "b" / "history.jsonl"));
    EXPECT_EQ(read_file(dir / "a" / "best.genotype"), read_file(dir / "b" / "best.genotype"));
    // The snapshot reproduces the run.
    ASSERT_EQ(cli({"search", (dir / "a" / "config.ini").string(), "--out", (dir / "c").string()}).code, 0);
    EXPECT_EQ(read_file(dir / "a" / "history.jsonl"), read_file(dir / "c" / "history.jsonl"));
}

TEST(Cli, OutputDirFromEnvironment)
{
    const auto dir = scratch("env");
    const auto config = write_config(dir, tiny_config);
    ::setenv("CMABNAS_OUTPUT_DIR", (dir / "from_env").c_str(), 1);
    const auto r = cli({"search", config.string()});
    ::unsetenv("CMABNAS_OUTPUT_DIR");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(std::filesystem::exists(dir / "from_env" / "history.jsonl"));
}

TEST(Cli, ConfigErrorsExitTwo)
{
    const auto dir = scratch("errors");
    auto config = write_config(dir, "[engine]\nepochs = 2\n");
    auto r = cli({"search", config.string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("[oracle]"), std::string::npos) << r.err;
    EXPECT_EQ(cli({"search", (dir / "missing.ini").string()}).code, 2);
    EXPECT_EQ(cli({"search", config.string(), "--set", "bogus"}).code, 2);
    EXPECT_EQ(cli({"frobnicate"}).code, 2);
    EXPECT_EQ(cli({}).code, 2);
}

TEST(Cli, OracleFailureExitsThreeWithPartialOutputs)
{
    const auto dir = scratch("failure");
    const std::string worker = MOCK_WORKER_PATH;
    const auto config = write_config(dir, "[space]\nnodes = 1\noperations = a\n"
                                          "[engine]\nepochs = 2\nbatch = 4\nl_sim = 2\nl_best = 5\nwarmup = 0\n"
                                          "[oracle]\nkind = external\ncommand = " +
                                              worker + " --die-after 10\ntimeout_ms = 5000\n");
    const auto r = cli({"search", config.string(), "--out", (dir / "o").string()});
    EXPECT_EQ(r.code, 3) << r.err;
    std::ifstream hist(dir / "o" / "history.jsonl");
    EXPECT_EQ(read_history(hist).size(), 10u);
}

TEST(Cli, BenchPolicies)
{
    const auto dir = scratch("bench");
    const auto config = write_config(dir, "[space]\nnodes = 1\noperations = a, b\n"
                                          "[engine]\nepochs = 5\nbatch = 20\nl_sim = 8\nl_best = 200\nwarmup = 0\n"
                                          "[oracle]\nkind = separable\nseed = 3\n");
    const auto r = cli({"bench-policies", config.string(), "--seeds", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* p : {"local_optimal\t", "local_suboptimal\t", "local_random\t"}) {
        EXPECT_NE(r.out.find(p), std::string::npos) << r.out;
    }
    // Deterministic oracle: LocalOptimal reaches the optimum.
    const auto bench = run_policy_bench(load_run_config(config), 3);
    ASSERT_TRUE(bench.optimum.has_value());
    for (double regret : bench.rows[0].simple_regrets) {
        EXPECT_EQ(regret, 0.0);
    }
}

TEST(Cli, Replay)
{
    const auto dir = scratch("replay");
    const auto config = write_config(dir, tiny_config);
    ASSERT_EQ(cli({"search", config.string(), "--out", dir.string()}).code, 0);
    auto r = cli({"replay", (dir / "history.jsonl").string(), "--optimum", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("cumulative regret"), std::string::npos);
    EXPECT_NE(r.out.find("plays 154"), std::string::npos) << r.out;
    std::ofstream(dir / "bad.jsonl") << "{\"epoch\":0}\n";
    r = cli({"replay", (dir / "bad.jsonl").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("line 1"), std::string::npos) << r.err;
}
