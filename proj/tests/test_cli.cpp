// Black-box smoke tests for the `dataring` command-line tool.
//
// The binary under test is located through the DATARING_BIN environment
// variable (set by CTest). Each case drives the tool through std::system,
// captures stdout+stderr to a scratch file, and checks exit codes, printed
// fields, and the artifacts written to disk.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dataring/dataset.hpp"
#include "dataring/manifest.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& scratch_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "dataring-cli-tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string binary_path() {
  const char* bin = std::getenv("DATARING_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "DATARING_BIN must point at the dataring binary");
  return bin;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file: " << path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr interleaved
};

// Runs `dataring <args>` with output captured to a scratch file.
CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path log = scratch_dir() / ("log-" + std::to_string(counter++) + ".txt");
  const std::string cmd =
      "\"" + binary_path() + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  CliResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.output = read_file(log);
  return res;
}

fs::path at(const std::string& name) { return scratch_dir() / name; }

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("help succeeds and malformed invocations fail with a message") {
  const CliResult help = run_cli("--help");
  CHECK(help.exit_code == 0);
  CHECK(contains(help.output, "gen-data"));
  CHECK(contains(help.output, "experiment"));

  const CliResult sub_help = run_cli("pv-run --help");
  CHECK(sub_help.exit_code == 0);
  CHECK(contains(sub_help.output, "--out-pv"));

  const CliResult bare = run_cli("");
  CHECK(bare.exit_code == 1);
  CHECK(contains(bare.output, "error:"));

  const CliResult bad_flag = run_cli("gen-data --no-such-flag 1");
  CHECK(bad_flag.exit_code == 1);
  CHECK(contains(bad_flag.output, "error:"));

  const CliResult bad_sub = run_cli("no-such-command");
  CHECK(bad_sub.exit_code == 1);
  CHECK(contains(bad_sub.output, "error:"));

  // Domain errors from the library surface through the same protocol.
  const CliResult bad_domain = run_cli("pv-run --n 400 --a 2 --v 40 --l 5 --seed 1");
  CHECK(bad_domain.exit_code == 1);
  CHECK(contains(bad_domain.output, "error:"));
}

TEST_CASE("gen-data writes a loadable bit image plus manifest") {
  const fs::path bits = at("ds.bits");
  const CliResult res = run_cli("gen-data --n 64 --a 2.0 --seed 7 --out \"" +
                                bits.string() + "\"");
  CHECK(res.exit_code == 0);
  CHECK(contains(res.output, "dataset="));
  CHECK(contains(res.output, "n=64"));

  // Image layout: 8-byte record count then ceil(domain/8) packed bits.
  const std::uintmax_t domain = 128;  // ceil(2.0 * 64)
  CHECK(fs::file_size(bits) == 8 + (domain + 7) / 8);

  std::ifstream in(bits, std::ios::binary);
  const dataring::HistogramDataset ds = dataring::HistogramDataset::load(in, domain);
  CHECK(ds.record_count() == 64);
  CHECK(ds.domain_size() == domain);

  const dataring::Manifest meta = dataring::Manifest::load_file(bits.string() + ".manifest");
  CHECK(meta.get_or("type", "") == "dataset");
  CHECK(meta.get_u64("seed") == 7);

  // Same seed, same bytes.
  const fs::path again = at("ds-again.bits");
  run_cli("gen-data --n 64 --a 2.0 --seed 7 --out \"" + again.string() + "\"");
  CHECK(read_file(bits) == read_file(again));
}

TEST_CASE("keygen writes fixed-size deterministic key files") {
  const fs::path dir_a = at("keys-a");
  const fs::path dir_b = at("keys-b");
  CHECK(run_cli("keygen --seed 13 --session-seed 2 --out-dir \"" + dir_a.string() + "\"")
            .exit_code == 0);
  CHECK(run_cli("keygen --seed 13 --session-seed 2 --out-dir \"" + dir_b.string() + "\"")
            .exit_code == 0);

  CHECK(fs::file_size(dir_a / "s1.key") == 65);        // 32-byte secret + 33-byte point
  CHECK(fs::file_size(dir_a / "s2.key") == 65);
  CHECK(fs::file_size(dir_a / "collective.pub") == 33);
  CHECK(fs::file_size(dir_a / "querier.key") == 65);

  for (const char* name : {"s1.key", "s2.key", "collective.pub", "querier.key"})
    CHECK(read_file(dir_a / name) == read_file(dir_b / name));

  // A different seed must produce different key material.
  const fs::path dir_c = at("keys-c");
  run_cli("keygen --seed 14 --session-seed 2 --out-dir \"" + dir_c.string() + "\"");
  CHECK(read_file(dir_a / "s1.key") != read_file(dir_c / "s1.key"));
}

TEST_CASE("pv-run stores a view that pv-verify re-accepts") {
  const fs::path view = at("view.pv");
  const fs::path manifest = at("pv.manifest");
  const CliResult run = run_cli("pv-run --n 200 --a 2 --v 40 --l 20 --seed 3 --out-pv \"" +
                                view.string() + "\" --manifest \"" + manifest.string() + "\"");
  CHECK(run.exit_code == 0);
  CHECK(contains(run.output, "verdict=ACCEPT"));
  CHECK(contains(run.output, "bytes[lbs]"));

  // One 66-byte serialized slot per domain label.
  CHECK(fs::file_size(view) == 66 * 400);

  const CliResult verify = run_cli("pv-verify --manifest \"" + manifest.string() + "\"");
  CHECK(verify.exit_code == 0);
  CHECK(contains(verify.output, "verdict=ACCEPT"));

  // An unmeetable threshold override flips the verdict without erroring out.
  const CliResult harsh =
      run_cli("pv-verify --manifest \"" + manifest.string() + "\" --r0 40");
  CHECK(harsh.exit_code == 0);
  CHECK(contains(harsh.output, "verdict=REJECT"));
  CHECK(contains(harsh.output, "matched count below r0"));
}

TEST_CASE("query-run reports session outcomes for honest and cheating runs") {
  const std::string shape =
      "--n 200 --a 2 --v 40 --l 20 --m-q 4 --m-t 2 --battery 1,1,0 --tolerance wide "
      "--seed 11 --session-seed 1";

  const CliResult honest = run_cli("query-run " + shape + " --strategy honest");
  CHECK(honest.exit_code == 0);
  CHECK(contains(honest.output, "strategy=honest cheated=0"));
  CHECK(contains(honest.output, "answers_given=6"));  // m_q real + m_t hidden tests
  CHECK(contains(honest.output, "released[3]="));     // one decoded value per real query
  CHECK(contains(honest.output, "bytes[query]"));

  const CliResult forced = run_cli("query-run " + shape + " --strategy modify:1.0 --x 2");
  CHECK(forced.exit_code == 0);
  CHECK(contains(forced.output, "cheated=1"));
  CHECK(contains(forced.output, "x_used=2"));

  const CliResult bad_x = run_cli("query-run " + shape + " --strategy modify:1.0 --x 9");
  CHECK(bad_x.exit_code == 1);
  CHECK(contains(bad_x.output, "error:"));
}

TEST_CASE("mean-query prints per-bucket counts and a mean estimate") {
  const CliResult res =
      run_cli("mean-query --n 400 --a 2 --buckets 4 --eps 0.5 --seed 9");
  CHECK(res.exit_code == 0);
  CHECK(contains(res.output, "bucket[0]"));
  CHECK(contains(res.output, "bucket[3]"));
  CHECK(contains(res.output, "mean="));
  CHECK(contains(res.output, "true_mean="));
  CHECK(contains(res.output, "budget_consumed="));
}

TEST_CASE("experiment detection replays byte-identically from its manifest") {
  const fs::path csv = at("det.csv");
  const fs::path manifest = at("det.manifest");
  const std::string args =
      "experiment detection --n 150 --v 30 --l 0 --m-q 3 --m-t 2 --battery 1,1,0 "
      "--strategies honest,modify:1.0 --x-values 1,2 --trials 6 --seed 5 "
      "--out \"" + csv.string() + "\" --manifest \"" + manifest.string() + "\"";
  const CliResult run = run_cli(args);
  CHECK(run.exit_code == 0);
  CHECK(contains(run.output, "strategy"));

  const std::string first = read_file(csv);
  CHECK(first == run.output);  // --out mirrors stdout
  CHECK(!first.empty());

  const fs::path csv2 = at("det2.csv");
  const CliResult replay = run_cli("experiment replay --manifest \"" + manifest.string() +
                                   "\" --out \"" + csv2.string() + "\"");
  CHECK(replay.exit_code == 0);
  CHECK(read_file(csv2) == first);

  // Replay without --out falls back to the manifest's recorded CSV path.
  fs::remove(csv);
  CHECK(run_cli("experiment replay --manifest \"" + manifest.string() + "\"").exit_code == 0);
  CHECK(read_file(csv) == first);
}

TEST_CASE("experiment lmin emits the exact minimum-background table") {
  const CliResult res = run_cli("experiment lmin --eta 0.05 --rho 0.01 --n-grid 10000");
  CHECK(res.exit_code == 0);
  CHECK(res.output == "n,v,l_min\n10000,100,294\n");
}

TEST_CASE("config files supply defaults that explicit flags override") {
  // Config values are ordinary manifest key=value lines.
  const fs::path cfg = at("pvt.cfg");
  {
    dataring::Manifest m;
    m.set_i64("n", 150);
    m.set_i64("v", 30);
    m.set_i64("l", 0);
    m.set_i64("trials", 8);
    m.set_u64("seed", 5);
    m.save_file(cfg.string());
  }

  const fs::path from_cfg = at("cfg-run.csv");
  const CliResult with_cfg = run_cli("experiment pv-threshold --config \"" + cfg.string() +
                                     "\" --trials 4 --out \"" + from_cfg.string() + "\"");
  CHECK(with_cfg.exit_code == 0);

  const fs::path explicit_run = at("explicit-run.csv");
  const CliResult with_flags =
      run_cli("experiment pv-threshold --n 150 --v 30 --l 0 --trials 4 --seed 5 --out \"" +
              explicit_run.string() + "\"");
  CHECK(with_flags.exit_code == 0);

  // Flag beats file for --trials; everything else comes from the file.
  CHECK(read_file(from_cfg) == read_file(explicit_run));

  // Dropping the override falls back to the file's trial count, changing the CSV.
  const fs::path cfg_only = at("cfg-only.csv");
  run_cli("experiment pv-threshold --config \"" + cfg.string() + "\" --out \"" +
          cfg_only.string() + "\"");
  CHECK(read_file(cfg_only) != read_file(from_cfg));
}
