#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "cvos/cvos.h"

namespace {

int status_to_exit(cvos_status status) {
  if (status == CVOS_OK) return 0;
  if (status == CVOS_INVALID_ARGUMENT || status == CVOS_PARSE_ERROR)
    return 2;
  return 1;
}

int report_failure(cvos_status status) {
  std::fprintf(stderr, "error: %s\n", cvos_last_error());
  return status_to_exit(status);
}

bool parse_size(const std::string& text, int* height, int* width) {
  const std::size_t cross = text.find('x');
  if (cross == std::string::npos) return false;
  try {
    std::size_t pos = 0;
    const std::string head = text.substr(0, cross);
    const std::string tail = text.substr(cross + 1);
    const int h = std::stoi(head, &pos);
    if (pos != head.size()) return false;
    const int w = std::stoi(tail, &pos);
    if (pos != tail.size()) return false;
    if (h <= 0 || w <= 0) return false;
    *height = h;
    *width = w;
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

std::string schedule_names() {
  std::string names;
  for (int i = 0; i < cvos_schedule_count(); ++i) {
    if (i > 0) names += ", ";
    names += cvos_schedule_name(i);
  }
  return names;
}

std::string skip_scheme_names() {
  std::string names;
  for (int i = 0; i < cvos_skip_scheme_count(); ++i) {
    if (i > 0) names += ", ";
    names += cvos_skip_scheme_name(i);
  }
  return names;
}

struct GenOptions {
  std::string out;
  int sequences = 4;
  int frames = 30;
  std::string size = "32x32";
  int objects = 2;
  double speed_min = 0.5;
  double speed_max = 2.0;
  std::uint64_t seed = 1;
};

int run_gen(const GenOptions& opt) {
  int height = 0, width = 0;
  if (!parse_size(opt.size, &height, &width)) {
    std::fprintf(stderr, "error: bad --size '%s' (expected HxW)\n",
                 opt.size.c_str());
    return 2;
  }
  const cvos_status status =
      cvos_generate(opt.out.c_str(), opt.sequences, opt.frames, height,
                    width, opt.objects, opt.speed_min, opt.speed_max,
                    opt.seed);
  if (status != CVOS_OK) return report_failure(status);
  std::printf("dataset written to %s\n", opt.out.c_str());
  return 0;
}

// One train flag forwarded to the config as a key=value setting. The
// option pointer tells us whether the user actually passed it: only those
// settings are applied, so they override a --config file without
// clobbering it with defaults.
struct KeyedOption {
  std::string key;
  std::string value;
  CLI::Option* option = nullptr;
};

int run_train(const std::string& config_file,
              const std::vector<KeyedOption>& keyed) {
  cvos_config* config = cvos_config_new();
  if (!config) {
    std::fprintf(stderr, "error: out of memory\n");
    return 1;
  }
  cvos_status status = CVOS_OK;
  if (!config_file.empty())
    status = cvos_config_load_file(config, config_file.c_str());
  for (const KeyedOption& entry : keyed) {
    if (status != CVOS_OK) break;
    if (entry.option->count() == 0) continue;
    status = cvos_config_set(config, entry.key.c_str(),
                             entry.value.c_str());
  }
  double best = 0.0;
  if (status == CVOS_OK) status = cvos_train(config, &best);
  cvos_config_free(config);
  if (status != CVOS_OK) return report_failure(status);
  std::printf("best averaged sMOTSA %.2f\n", best);
  return 0;
}

struct EvalOptions {
  std::string gt;
  std::string pred;
  int class_id = 1;
  std::string out;
};

int run_eval(const EvalOptions& opt) {
  cvos_metrics* metrics = nullptr;
  cvos_status status =
      cvos_evaluate(opt.gt.c_str(), opt.pred.c_str(), opt.class_id,
                    &metrics);
  if (status != CVOS_OK) return report_failure(status);

  for (int i = 0; i < cvos_metrics_warning_count(metrics); ++i)
    std::fprintf(stderr, "warning: %s\n", cvos_metrics_warning(metrics, i));

  std::size_t id_width = std::string("sequence").size();
  const int count = cvos_metrics_sequence_count(metrics);
  for (int i = 0; i < count; ++i)
    id_width = std::max(id_width,
                        std::string(cvos_metrics_sequence_id(metrics, i))
                            .size());
  std::printf("%-*s %9s %9s %9s %10s %9s\n", static_cast<int>(id_width),
              "sequence", "sMOTSA", "MOTSP", "Recall", "Precision",
              "MOTSA");
  const auto print_row = [&](const char* id, int index) {
    double smotsa = 0, motsp = 0, recall = 0, precision = 0, motsa = 0;
    cvos_metrics_row(metrics, index, &smotsa, &motsp, &recall, &precision,
                     &motsa);
    std::printf("%-*s %9.2f %9.2f %9.2f %10.2f %9.2f\n",
                static_cast<int>(id_width), id, smotsa, motsp, recall,
                precision, motsa);
  };
  for (int i = 0; i < count; ++i)
    print_row(cvos_metrics_sequence_id(metrics, i), i);
  print_row("AVERAGE", -1);

  if (!opt.out.empty())
    status = cvos_metrics_write_csv(metrics, opt.out.c_str());
  cvos_metrics_free(metrics);
  if (status != CVOS_OK) return report_failure(status);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "curricula-vos: curriculum strategies for recurrent one-shot video "
      "object segmentation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cvos_version()));

  GenOptions gen;
  CLI::App* gen_cmd =
      app.add_subcommand("gen", "generate a synthetic dataset");
  gen_cmd->add_option("--out", gen.out, "dataset directory")->required();
  gen_cmd->add_option("--sequences", gen.sequences, "number of sequences")
      ->capture_default_str();
  gen_cmd->add_option("--frames", gen.frames, "frames per sequence")
      ->capture_default_str();
  gen_cmd->add_option("--size", gen.size, "frame size HxW, multiples of 4")
      ->capture_default_str();
  gen_cmd->add_option("--objects", gen.objects, "objects per sequence")
      ->capture_default_str();
  gen_cmd->add_option("--speed-min", gen.speed_min,
                      "slowest object speed, pixels/frame")
      ->capture_default_str();
  gen_cmd->add_option("--speed-max", gen.speed_max,
                      "fastest object speed, pixels/frame")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "generator seed")
      ->capture_default_str();

  CLI::App* train_cmd =
      app.add_subcommand("train", "train one curriculum configuration");
  std::string config_file;
  train_cmd->add_option("--config", config_file,
                        "key=value config file applied before the flags");
  std::vector<KeyedOption> keyed;
  keyed.reserve(24);
  const auto keyed_option = [&](const std::string& flag,
                                const std::string& key, std::string def,
                                const std::string& desc) {
    keyed.push_back({key, std::move(def), nullptr});
    KeyedOption& slot = keyed.back();
    slot.option = train_cmd->add_option(flag, slot.value, desc);
    if (!slot.value.empty()) slot.option->capture_default_str();
  };
  keyed_option("--data", "data", "",
               "dataset directory (required here or in --config)");
  keyed_option("--schedule", "schedule", "teacher-forcing",
               "one of: " + schedule_names());
  keyed_option("--skip", "skip", "none",
               "frame-skip scheme, one of: " + skip_scheme_names());
  keyed_option("--skip-at-gt", "skip-at-gt", "true",
               "apply the skip scheme in the ground-truth phase");
  keyed_option("--skip-at-pred", "skip-at-pred", "false",
               "apply the skip scheme in the prediction phase");
  keyed_option("--phase-length", "phase-length", "0",
               "skip progression restart period; 0 = epochs/2");
  keyed_option("--epochs", "epochs", "40", "training epochs");
  keyed_option("--clips-per-epoch", "clips-per-epoch", "0",
               "clips sampled per epoch; 0 = one per training sequence");
  keyed_option("--batch", "batch", "4", "clips per optimizer step");
  keyed_option("--clip-length", "clip-length", "5", "frames per clip");
  keyed_option("--size", "size", "",
               "training resolution HxW; default: dataset size");
  keyed_option("--channels", "channels", "8", "encoder channels");
  keyed_option("--hidden-channels", "hidden-channels", "8",
               "recurrent state channels");
  keyed_option("--lr", "lr", "0.001", "Adam learning rate");
  keyed_option("--eval-every", "eval-every", "5",
               "epochs between held-out evaluations");
  keyed_option("--seed", "seed", "1", "weight and sampling seed");
  keyed_option("--run-id", "run-id", "run", "run directory name");
  keyed_option("--out", "out", "runs", "parent directory for runs");

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "evaluate predictions against ground truth");
  eval_cmd->add_option("--gt", eval.gt, "ground-truth file or directory")
      ->required();
  eval_cmd->add_option("--pred", eval.pred,
                       "prediction file or directory")
      ->required();
  eval_cmd->add_option("--class", eval.class_id, "class id to evaluate")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "also write the metrics CSV here");

  std::string report_runs, report_out;
  CLI::App* report_cmd = app.add_subcommand(
      "report", "tabulate and plot a directory of completed runs");
  report_cmd->add_option("--runs", report_runs, "directory of run outputs")
      ->required();
  report_cmd->add_option("--out", report_out, "report output directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (app.got_subcommand(gen_cmd)) return run_gen(gen);
  if (app.got_subcommand(train_cmd)) return run_train(config_file, keyed);
  if (app.got_subcommand(eval_cmd)) return run_eval(eval);
  if (app.got_subcommand(report_cmd)) {
    const cvos_status status =
        cvos_report(report_runs.c_str(), report_out.c_str());
    if (status != CVOS_OK) return report_failure(status);
    std::printf("report written to %s\n", report_out.c_str());
    return 0;
  }
  return 2;
}
