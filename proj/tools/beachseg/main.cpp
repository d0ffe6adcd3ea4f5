#include <cstdlib>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "beachseg/beachseg.hpp"
#include "commands.hpp"

using namespace beachseg;
using namespace beachseg::cli;

namespace {

/// Flags that map onto config keys; applied after the config file.
class Overrides {
 public:
  void add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& help, const std::string& type = "TEXT") {
    app->add_option(flag, values_[key], help)->type_name(type);
  }

  void apply(PipelineConfig& cfg) const {
    for (const auto& [key, value] : values_) {
      if (!value.empty()) apply_config_value(cfg, key, value);
    }
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drone survey pipeline for beach litter and algae segmentation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "beachseg 0.1.0");

  std::string config_path;
  if (const char* env = std::getenv(kConfigEnvVar)) config_path = env;
  app.add_option("--config", config_path, "key=value config file (default: $BEACHSEG_CONFIG)");
  Overrides overrides;
  overrides.add(&app, "-j,--jobs", "jobs", "worker threads", "UINT");

  InspectArgs inspect;
  auto* inspect_cmd = app.add_subcommand("inspect", "print EXIF flight metadata as JSON lines");
  inspect_cmd->add_option("inputs", inspect.inputs, "JPEG files or directories")->required();
  inspect_cmd->add_option("-o,--output", inspect.output, "write to a file instead of stdout");

  EnhanceArgs enhance;
  auto* enhance_cmd = app.add_subcommand("enhance", "clipped linear contrast stretch");
  enhance_cmd->add_option("inputs", enhance.inputs, "images or directories")->required();
  enhance_cmd->add_option("-o,--output", enhance.output_dir, "output directory")->required();
  overrides.add(enhance_cmd, "--clip", "clip_percent", "tail fraction clipped at each end",
                "FLOAT");

  TileArgs tile;
  auto* tile_cmd = app.add_subcommand("tile", "cut frames into tiles and remap annotations");
  tile_cmd->add_option("inputs", tile.inputs, "images or directories")->required();
  tile_cmd->add_option("--via", tile.via, "VIA project with the frame annotations")->required();
  tile_cmd->add_option("-o,--output", tile.output_dir, "output directory")->required();
  overrides.add(tile_cmd, "--tile-size", "tile_size", "tile edge in pixels", "UINT");
  overrides.add(tile_cmd, "--policy", "tile_policy", "pad-to-cover, overlap-to-cover or drop-partial",
                "POLICY");
  overrides.add(tile_cmd, "--labels", "labels", "comma-separated label set", "LIST");

  SplitArgs split_args;
  auto* split_cmd = app.add_subcommand("split", "seeded train/test/val split");
  split_cmd->add_option("--corpus", split_args.corpus, "VIA project")->required();
  split_cmd->add_option("-o,--output", split_args.output, "manifest CSV")->required();
  overrides.add(split_cmd, "--fractions", "split_fractions", "train,test,val", "F,F,F");
  overrides.add(split_cmd, "--seed", "seed", "shuffle seed", "UINT");
  overrides.add(split_cmd, "--labels", "labels", "comma-separated label set", "LIST");

  ExportArgs export_args;
  auto* export_cmd = app.add_subcommand("export", "write COCO instance and panoptic truth");
  export_cmd->add_option("--corpus", export_args.corpus, "VIA project")->required();
  export_cmd->add_option("--manifest", export_args.manifest, "split manifest CSV");
  export_cmd->add_option("--images", export_args.images_dir, "directory to read image sizes from");
  export_cmd->add_option("-o,--output", export_args.output_dir, "output directory")->required();
  export_cmd->add_option("--format", export_args.format, "coco, panoptic or all")
      ->check(CLI::IsMember({"coco", "panoptic", "all"}));
  std::string group;
  export_cmd->add_option("--group", group, "only this split group")
      ->check(CLI::IsMember({"train", "test", "val"}));
  overrides.add(export_cmd, "--labels", "labels", "comma-separated label set", "LIST");

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "instance AP/AR and panoptic quality");
  evaluate_cmd->add_option("--truth", evaluate.truth, "COCO instance truth");
  evaluate_cmd->add_option("--pred", evaluate.pred, "COCO results list or instance file");
  evaluate_cmd->add_option("--truth-panoptic", evaluate.truth_panoptic, "panoptic truth directory");
  evaluate_cmd->add_option("--pred-panoptic", evaluate.pred_panoptic, "panoptic prediction directory");
  evaluate_cmd->add_option("-o,--output", evaluate.output, "report JSON");
  evaluate_cmd->add_option("--model", evaluate.model, "model name for the report");
  overrides.add(evaluate_cmd, "--iou-thresholds", "iou_thresholds", "comma-separated thresholds",
                "LIST");
  overrides.add(evaluate_cmd, "--max-detections", "max_detections", "per image and class, 0 for none",
                "UINT");

  LossCheckArgs loss_check;
  auto* loss_cmd = app.add_subcommand("loss-check", "finite-difference gradient checks");
  loss_cmd->add_option("--instances", loss_check.instances, "random instances per loss");
  loss_cmd->add_option("--seed", loss_check.seed, "generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  PipelineConfig cfg;
  try {
    if (!config_path.empty()) cfg = parse_config(read_file_text(config_path));
    overrides.apply(cfg);
    cfg.validate();
  } catch (const std::exception& e) {
    std::cerr << "beachseg: " << e.what() << "\n";
    return kExitUsage;
  }
  if (!group.empty()) export_args.group = group;

  try {
    if (*inspect_cmd) return run_inspect(inspect, cfg);
    if (*enhance_cmd) return run_enhance(enhance, cfg);
    if (*tile_cmd) return run_tile(tile, cfg);
    if (*split_cmd) return run_split(split_args, cfg);
    if (*export_cmd) return run_export(export_args, cfg);
    if (*evaluate_cmd) return run_evaluate(evaluate, cfg);
    if (*loss_cmd) return run_loss_check(loss_check, cfg);
  } catch (const std::exception& e) {
    std::cerr << "beachseg: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
