#ifndef CISNET_CHECKPOINT_HPP
#define CISNET_CHECKPOINT_HPP

#include <string>
#include <vector>

#include "cisnet/model.hpp"
#include "cisnet/train.hpp"

namespace cisnet {

struct NamedValues {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

/// Full training snapshot: network config, parameters, optimizer moments,
/// progress counters and per-group learning rates. The on-disk form is a text
/// manifest followed by a raw little-endian double blob; save -> load -> save
/// is byte-identical.
struct Checkpoint {
  NetworkConfig config;
  int64_t epoch = 0;
  std::vector<std::pair<std::string, double>> learning_rates;
  uint64_t rng_seed = 0;
  uint64_t rng_counter = 0;
  int64_t adam_step = 0;
  std::vector<NamedValues> tensors;  // params, then adam.m.*, then adam.v.*
};

Checkpoint make_checkpoint(const CisNet& net, const TrainConfig& cfg, const TrainState& state);

/// Restores parameters and training state into a net built from the same
/// config (fingerprints must match).
void restore_checkpoint(const Checkpoint& ckpt, CisNet& net, TrainState& state);

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Trains one stage per payload (strictly decreasing), each stage starting
/// from the previous stage's weights; the first is trained from scratch with
/// bias calibration. All stages must share the same cover sequence.
std::vector<Checkpoint> train_curriculum(const NetworkConfig& net_cfg, const TrainConfig& cfg,
                                         const std::vector<double>& payloads,
                                         const std::vector<std::vector<CoverStegoPair>>& stages,
                                         uint64_t seed,
                                         std::vector<std::vector<EpochLog>>* logs = nullptr);

}  // namespace cisnet

#endif
