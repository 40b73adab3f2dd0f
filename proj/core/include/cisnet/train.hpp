#ifndef CISNET_TRAIN_HPP
#define CISNET_TRAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cisnet/model.hpp"
#include "cisnet/stego.hpp"
#include "cisnet/tensor.hpp"

namespace cisnet {

struct TrainConfig {
  int64_t batch_pairs = 8;  // 8 covers + their 8 stegos per mini-batch
  int64_t epochs = 10;
  double lr_hpf = 5e-6;
  double lr_fusion = 1e-2;
  double lr_type1 = 1e-3;
  double lr_type2 = 1e-4;
  double lr_fc = 1e-4;
  double decay = 0.985;  // per-epoch exponential factor
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int64_t bias_init_pairs = 50;
  bool augment = false;

  double group_rate(const std::string& group) const;
  std::string serialize() const;
  static TrainConfig parse(const std::string& text);
};

struct AdamState {
  int64_t step = 0;
  std::vector<std::vector<double>> m, v;  // parallel to the net's param registry

  void init_like(const CisNet& net);
  bool initialized() const { return !m.empty(); }
};

struct TrainState {
  int64_t completed_epochs = 0;
  AdamState adam;
  uint64_t seed = 0;         // master seed for data order
  uint64_t rng_counter = 0;  // reserved counter for stateful draws
};

/// Fixed group order used by logs and checkpoints.
const std::vector<std::string>& param_groups();

/// alpha_i * decay^epochs_completed per group.
std::vector<std::pair<std::string, double>> current_rates(const TrainConfig& cfg,
                                                          int64_t epochs_completed);

struct PairBatch {
  Tensor images;                // [2B,1,H,W]: covers then stegos
  std::vector<int64_t> labels;  // B zeros then B ones
};

/// Seed-deterministic shuffled pairing; incomplete tail batches are dropped.
std::vector<PairBatch> make_paired_batches(const std::vector<CoverStegoPair>& data,
                                           int64_t batch_pairs, uint64_t seed, int64_t epoch);

/// One forward/backward/Adam update at the learning rates of the current
/// epoch. Throws Error on a non-finite loss.
double train_step(CisNet& net, const Tensor& images, const std::vector<int64_t>& labels,
                  const TrainConfig& cfg, TrainState& state);

struct EpochLog {
  int64_t epoch = 0;  // number of completed epochs after this entry
  double mean_loss = 0.0;
  std::vector<std::pair<std::string, double>> rates;  // after completion
};

/// Runs one full epoch over the data and advances the state.
EpochLog train_epoch(CisNet& net, const std::vector<CoverStegoPair>& data,
                     const TrainConfig& cfg, TrainState& state);

/// cfg.epochs - already completed epochs, appending one log entry per epoch.
std::vector<EpochLog> train(CisNet& net, const std::vector<CoverStegoPair>& data,
                            const TrainConfig& cfg, TrainState& state);

/// Counter-clockwise quarter turn of a [1,H,W] image; requires H == W.
Tensor rotate90_ccw(const Tensor& image);

/// Original plus 90/180/270-degree rotations per cover, in that order.
std::vector<Tensor> augment_rotations(const std::vector<Tensor>& covers);

}  // namespace cisnet

#endif
