#ifndef CISNET_TOOLS_COMMANDS_HPP
#define CISNET_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cisnet/common.hpp"

namespace cisnet::cli {

/// Bad arguments / malformed specs: exit code 2 (runtime failures exit 1).
class UsageError : public Error {
public:
  using Error::Error;
};

struct CommonOptions {
  std::string out_dir;
  std::string config_path;               // optional key = value file
  std::vector<std::string> overrides;    // repeated --set section.key=value
  uint64_t seed = 0;
  bool seed_given = false;
};

int cmd_verify_variance(const CommonOptions& common, const std::string& alphas,
                        const std::string& scales, const std::string& thresholds,
                        int64_t samples);

struct PrepareOptions {
  std::string covers_dir;     // existing PGM covers, or
  int64_t synthetic = 0;      // number of synthetic covers to generate
  int64_t size = 64;          // synthetic extent / center-crop target
  std::string payloads;       // comma list, strictly decreasing
  double train_fraction = 0.8;
  bool augment = false;
  std::string embedder = "adaptive";  // adaptive | lsb
};

int cmd_prepare(const CommonOptions& common, const PrepareOptions& opts);

struct TrainOptions {
  std::string manifest;
  std::string resume;       // checkpoint to continue from
  std::string curriculum;   // payload list; manifests found next to --data-dir
  std::string data_dir;     // prepare output dir (curriculum mode)
  int64_t epochs_override = -1;
};

int cmd_train(const CommonOptions& common, const TrainOptions& opts);

struct AblateOptions {
  std::string axis;    // T | gamma
  std::string values;  // empty: the default grid for the axis
  std::string manifest;
  std::string test_manifest;
  int64_t epochs_override = -1;
};

int cmd_ablate(const CommonOptions& common, const AblateOptions& opts);

struct EvalOptions {
  std::string checkpoint;
  std::string manifest;
  std::string train_manifest;  // optional: adds the train/test gap rows
};

int cmd_eval(const CommonOptions& common, const EvalOptions& opts);

struct CamOptions {
  std::string checkpoint;
  std::string manifest;
  int64_t count = 0;  // 0: all entries
  int64_t class_index = 1;
  bool post_map = false;
};

int cmd_cam(const CommonOptions& common, const CamOptions& opts);

}  // namespace cisnet::cli

#endif
