#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "beachseg/config.hpp"

namespace beachseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

struct InspectArgs {
  std::vector<std::string> inputs;
  std::string output;  // empty: stdout
};

struct EnhanceArgs {
  std::vector<std::string> inputs;
  std::string output_dir;
};

struct TileArgs {
  std::vector<std::string> inputs;
  std::string via;
  std::string output_dir;
};

struct SplitArgs {
  std::string corpus;
  std::string output;
};

struct ExportArgs {
  std::string corpus;
  std::string manifest;
  std::string images_dir;
  std::string output_dir;
  std::string format = "all";
  std::optional<std::string> group;
};

struct EvaluateArgs {
  std::string truth;
  std::string pred;
  std::string truth_panoptic;
  std::string pred_panoptic;
  std::string output;
  std::string model = "prediction";
};

struct LossCheckArgs {
  std::size_t instances = 100;
  std::uint64_t seed = 2023;
};

int run_inspect(const InspectArgs& args, const PipelineConfig& cfg);
int run_enhance(const EnhanceArgs& args, const PipelineConfig& cfg);
int run_tile(const TileArgs& args, const PipelineConfig& cfg);
int run_split(const SplitArgs& args, const PipelineConfig& cfg);
int run_export(const ExportArgs& args, const PipelineConfig& cfg);
int run_evaluate(const EvaluateArgs& args, const PipelineConfig& cfg);
int run_loss_check(const LossCheckArgs& args, const PipelineConfig& cfg);

}  // namespace beachseg::cli
