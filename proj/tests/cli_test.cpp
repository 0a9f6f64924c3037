#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cvos/curriculum.hpp"
#include "cvos/trainer.hpp"
#include "tmpdir.hpp"

using namespace cvos;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

// Spawns the binary named by CVOS_CLI through the shell; `env` is a
// prefix like "CURRICULA_VOS_THREADS=2".
CliResult run_cli(const std::string& args, const TmpDir& scratch,
                  const std::string& env = "") {
  static int counter = 0;
  const char* binary = std::getenv("CVOS_CLI");
  REQUIRE_MESSAGE(binary != nullptr,
                  "CVOS_CLI must point at the curricula-vos binary");
  const auto out_path =
      scratch / ("cli_out_" + std::to_string(counter) + ".txt");
  const auto err_path =
      scratch / ("cli_err_" + std::to_string(counter) + ".txt");
  ++counter;
  std::string command = env;
  if (!command.empty()) command += ' ';
  command += '\'' + std::string(binary) + "' " + args + " >'" +
             out_path.string() + "' 2>'" + err_path.string() + '\'';
  const int raw = std::system(command.c_str());
  CliResult result;
  result.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  return result;
}

void gen_tiny(const TmpDir& dir, const std::string& name,
              const std::string& seed) {
  const auto r = run_cli("gen --out '" + (dir / name).string() +
                             "' --sequences 3 --frames 8 --size 16x16 "
                             "--objects 1 --seed " +
                             seed,
                         dir);
  REQUIRE(r.code == 0);
}

std::string tiny_train_args(const std::filesystem::path& data,
                            const std::filesystem::path& out,
                            const std::string& run_id,
                            const std::string& extra = "") {
  return "train --data '" + data.string() + "' --out '" + out.string() +
         "' --run-id " + run_id +
         " --epochs 6 --clip-length 3 --batch 2 --channels 2 "
         "--hidden-channels 2 --eval-every 3 --lr 0.005 --seed 3 " +
         extra;
}

// Recursive byte comparison of two directory trees.
void check_trees_identical(const std::filesystem::path& a,
                           const std::filesystem::path& b) {
  std::vector<std::filesystem::path> rel;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(a))
    if (entry.is_regular_file())
      rel.push_back(std::filesystem::relative(entry.path(), a));
  REQUIRE(!rel.empty());
  std::size_t b_files = 0;
  for (const auto& entry :
       std::filesystem::recursive_directory_iterator(b))
    if (entry.is_regular_file()) ++b_files;
  CHECK(b_files == rel.size());
  for (const auto& r : rel) {
    INFO("file ", r.string());
    CHECK(slurp(a / r) == slurp(b / r));
  }
}

}  // namespace

TEST_CASE("help output covers every subcommand and flag") {
  TmpDir dir;
  const auto top = run_cli("--help", dir);
  CHECK(top.code == 0);
  for (const char* name : {"gen", "train", "eval", "report"})
    CHECK(top.out.find(name) != std::string::npos);

  const auto gen = run_cli("gen --help", dir);
  CHECK(gen.code == 0);
  for (const char* flag :
       {"--out", "--sequences", "--frames", "--size", "--objects",
        "--speed-min", "--speed-max", "--seed"})
    CHECK(gen.out.find(flag) != std::string::npos);
  CHECK(gen.out.find("[32x32]") != std::string::npos);

  const auto train = run_cli("train --help", dir);
  CHECK(train.code == 0);
  for (const char* flag :
       {"--config", "--data", "--schedule", "--skip", "--skip-at-gt",
        "--skip-at-pred", "--phase-length", "--epochs", "--clips-per-epoch",
        "--batch", "--clip-length", "--size", "--channels",
        "--hidden-channels", "--lr", "--eval-every", "--seed", "--run-id",
        "--out"})
    CHECK(train.out.find(flag) != std::string::npos);
  CHECK(train.out.find("[teacher-forcing]") != std::string::npos);
  CHECK(train.out.find("[40]") != std::string::npos);
  CHECK(train.out.find("inverse-sigmoid") != std::string::npos);

  const auto eval = run_cli("eval --help", dir);
  CHECK(eval.code == 0);
  for (const char* flag : {"--gt", "--pred", "--class", "--out"})
    CHECK(eval.out.find(flag) != std::string::npos);

  const auto report = run_cli("report --help", dir);
  CHECK(report.code == 0);
  CHECK(report.out.find("--runs") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  TmpDir dir;
  CHECK(run_cli("", dir).code == 2);
  CHECK(run_cli("frobnicate", dir).code == 2);
  CHECK(run_cli("gen --out x --bogus 1", dir).code == 2);
  CHECK(run_cli("eval --pred x", dir).code == 2);  // missing --gt

  const auto bad_size =
      run_cli("gen --out '" + (dir / "d").string() + "' --size 33x56", dir);
  CHECK(bad_size.code == 2);
  CHECK(bad_size.err.find("divisible by 4") != std::string::npos);
  const auto garbled =
      run_cli("gen --out '" + (dir / "d").string() + "' --size wide", dir);
  CHECK(garbled.code == 2);

  const auto bad_schedule =
      run_cli("train --data x --schedule warp", dir);
  CHECK(bad_schedule.code == 2);
  CHECK(bad_schedule.err.find("warp") != std::string::npos);

  // A missing dataset is a runtime failure, not a usage error.
  CHECK(run_cli("train --data '" + (dir / "absent").string() + "'", dir)
            .code == 1);
}

TEST_CASE("gen is deterministic for a fixed seed") {
  TmpDir dir;
  gen_tiny(dir, "a", "11");
  gen_tiny(dir, "b", "11");
  check_trees_identical(dir / "a", dir / "b");

  gen_tiny(dir, "c", "12");
  CHECK(slurp(dir / "a" / "instances_txt" / "0000.txt") !=
        slurp(dir / "c" / "instances_txt" / "0000.txt"));
}

TEST_CASE("train realizes the requested curriculum in its run log") {
  TmpDir dir;
  gen_tiny(dir, "data", "5");
  const auto runs = dir / "runs";
  const auto r = run_cli(
      "train --data '" + (dir / "data").string() + "' --out '" +
          runs.string() +
          "' --run-id fl --epochs 10 --clip-length 3 --batch 2 "
          "--channels 2 --hidden-channels 2 --eval-every 3 --lr 0.005 "
          "--seed 3 --schedule forward-linear --skip 1to5 "
          "--skip-at-gt true --skip-at-pred false",
      dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("best averaged sMOTSA") != std::string::npos);

  for (const char* name : {"final.ckpt", "final.ckpt.meta", "best.ckpt",
                           "best.ckpt.meta", "runlog.csv"})
    CHECK(std::filesystem::exists(runs / "fl" / name));

  const RunLog log = read_runlog_csv(runs / "fl" / "runlog.csv");
  REQUIRE(log.records.size() == 10);
  ScheduleSpec spec;
  spec.kind = ScheduleKind::ForwardLinear;
  spec.total_epochs = 10;
  SkipSchedule skip;
  skip.scheme = SkipScheme::OneToFive;
  skip.phase_length = 5;  // resolved from phase-length 0: epochs / 2
  for (int e = 0; e < 10; ++e) {
    CHECK(log.records[e].epoch == e);
    CHECK(log.records[e].p_gt == gt_probability(spec, e));
    const Phase phase = e < 5 ? Phase::GtPhase : Phase::PredPhase;
    CHECK(log.records[e].skip == skip_for_epoch(skip, e, phase));
  }
  CHECK(log.records[2].has_eval);
  CHECK(log.records[5].has_eval);
  CHECK(log.records[9].has_eval);
  CHECK_FALSE(log.records[6].has_eval);

  const auto meta = read_meta_file(runs / "fl" / "final.ckpt.meta");
  CHECK(meta.at("schedule") == "forward-linear");
  CHECK(meta.at("skip") == "1to5");
  CHECK(meta.at("phase-length") == "5");
  CHECK(meta.at("epochs-completed") == "10");
  CHECK(meta.at("size") == "16x16");
}

TEST_CASE("config files apply before flags") {
  TmpDir dir;
  gen_tiny(dir, "data", "5");
  const auto cfg = dir / "exp.cfg";
  std::ofstream(cfg) << "# experiment defaults\n"
                     << "data=" << (dir / "data").string() << "\n"
                     << "out=" << (dir / "runs").string() << "\n"
                     << "run-id=filecfg\nepochs=6\nclip-length=3\n"
                     << "batch=2\nchannels=2\nhidden-channels=2\n"
                     << "eval-every=3\nseed=3\n";
  const auto r = run_cli(
      "train --config '" + cfg.string() + "' --epochs 4 --eval-every 2",
      dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);

  const auto meta =
      read_meta_file(dir / "runs" / "filecfg" / "final.ckpt.meta");
  CHECK(meta.at("run-id") == "filecfg");  // from the file
  CHECK(meta.at("epochs") == "4");        // flag wins
  CHECK(meta.at("eval-every") == "2");

  std::ofstream(dir / "bad.cfg") << "epochs=4\nnot a setting\n";
  const auto bad =
      run_cli("train --config '" + (dir / "bad.cfg").string() + "'", dir);
  CHECK(bad.code == 2);
  CHECK(bad.err.find(":2:") != std::string::npos);
}

TEST_CASE("eval scores ground truth against itself at 100") {
  TmpDir dir;
  gen_tiny(dir, "data", "7");
  const auto gt = (dir / "data") / "instances_txt";
  const auto csv = dir / "metrics.csv";
  const auto r = run_cli("eval --gt '" + gt.string() + "' --pred '" +
                             gt.string() + "' --out '" + csv.string() + "'",
                         dir);
  REQUIRE_MESSAGE(r.code == 0, r.err);
  CHECK(r.out.find("AVERAGE") != std::string::npos);
  CHECK(r.out.find("100.00") != std::string::npos);
  REQUIRE(std::filesystem::exists(csv));
  CHECK(slurp(csv).substr(0, 12) == "sequence_id,");

  std::ofstream(dir / "broken.txt")
      << "0 1001 1 16 16 0G1\nthis line is not an annotation\n";
  const auto bad = run_cli(
      "eval --gt '" + gt.string() + "' --pred '" +
          (dir / "broken.txt").string() + "'",
      dir);
  CHECK(bad.code == 2);
  CHECK(bad.err.find("line") != std::string::npos);
}

TEST_CASE("training is bitwise reproducible across thread counts") {
  TmpDir dir;
  gen_tiny(dir, "data", "9");
  const auto runs = dir / "runs";
  const auto one = run_cli(
      tiny_train_args(dir / "data", runs, "a", "--schedule inverse-step"),
      dir, "CURRICULA_VOS_THREADS=1");
  REQUIRE_MESSAGE(one.code == 0, one.err);
  const auto four = run_cli(
      tiny_train_args(dir / "data", runs, "b", "--schedule inverse-step"),
      dir, "CURRICULA_VOS_THREADS=4");
  REQUIRE_MESSAGE(four.code == 0, four.err);

  CHECK(slurp(runs / "a" / "runlog.csv") == slurp(runs / "b" / "runlog.csv"));
  CHECK(slurp(runs / "a" / "final.ckpt") == slurp(runs / "b" / "final.ckpt"));
  CHECK(slurp(runs / "a" / "best.ckpt") == slurp(runs / "b" / "best.ckpt"));

  // Same thread count, same seed: identical too (idempotence).
  const auto again = run_cli(
      tiny_train_args(dir / "data", runs, "c", "--schedule inverse-step"),
      dir, "CURRICULA_VOS_THREADS=4");
  REQUIRE_MESSAGE(again.code == 0, again.err);
  CHECK(slurp(runs / "b" / "final.ckpt") == slurp(runs / "c" / "final.ckpt"));

  // The report covers all three runs.
  const auto rep = run_cli("report --runs '" + runs.string() + "' --out '" +
                               (dir / "rep").string() + "'",
                           dir);
  REQUIRE_MESSAGE(rep.code == 0, rep.err);
  for (const char* name : {"report.csv", "report.txt", "schedules.svg",
                           "skips.svg", "loss.svg", "smotsa.svg"})
    CHECK(std::filesystem::exists(dir / "rep" / name));
  std::istringstream lines(slurp((dir / "rep") / "report.csv"));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) ++count;
  CHECK(count == 4);  // header + three runs
}
