#ifndef CISNET_STEGO_HPP
#define CISNET_STEGO_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "cisnet/tensor.hpp"

namespace cisnet {

/// Cover, its +-1 stego, and the ground-truth embedding record.
struct CoverStegoPair {
  Tensor cover;       // [1,H,W], integer values in [0,255]
  Tensor stego;       // clamp(cover + change_map, 0, 255)
  Tensor change_map;  // values in {-1,0,+1}, the requested changes
  Tensor prob_map;    // per-pixel change probability in [0,1]
  double payload_bpp = 0.0;
  uint64_t seed = 0;
};

struct CostMap {
  Tensor cost;  // strictly positive per pixel
};

/// cost = 1 / (sigma_local + 0.1) with sigma_local the population standard
/// deviation of the border-clamped 3x3 neighborhood. Smooth regions are
/// expensive, textured regions cheap. Exactly invariant to a constant shift
/// of an integer-valued cover.
CostMap toy_cost(const Tensor& cover);

/// Content-adaptive +-1 embedder. Change probabilities follow
/// p_i = 0.5 * exp(-lambda * cost_i) with lambda solved by bisection so the
/// probabilities sum to payload_bpp * 0.5 * H * W (expected change rate is
/// half the bit payload). Deterministic per (cover, seed).
CoverStegoPair embed_adaptive(const Tensor& cover, double payload_bpp, uint64_t seed);

/// Non-adaptive baseline: every pixel changes with the same probability
/// payload_bpp * 0.5.
CoverStegoPair embed_lsb_matching(const Tensor& cover, double payload_bpp, uint64_t seed);

struct SyntheticCoverConfig {
  double smooth_sigma = 6.0;     // base field blur radius
  double base_amplitude = 40.0;  // std of the smooth field around mid-gray
  double base_noise_sigma = 2.0;
  int64_t min_patches = 2;
  int64_t max_patches = 4;
  double texture_sigma = 30.0;  // extra noise inside texture patches
};

/// Smoothed Gaussian field around mid-gray with a few noisy texture patches,
/// quantized to [0,255]. Deterministic per seed.
Tensor synthetic_cover(int64_t h, int64_t w, uint64_t seed,
                       const SyntheticCoverConfig& cfg = {});

Tensor center_crop(const Tensor& image, int64_t h, int64_t w);

struct ManifestEntry {
  std::string cover_path;  // relative to the manifest's directory
  uint64_t seed = 0;
  double payload = 0.0;
};

/// Rows of "cover_path seed payload".
std::vector<ManifestEntry> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);

/// Stego/probability-map file locations implied by a manifest row.
std::string stego_path_for(const std::string& manifest_dir, const ManifestEntry& entry);
std::string probmap_path_for(const std::string& manifest_dir, const ManifestEntry& entry);

/// Loads covers and stegos referenced by a manifest; the change map is
/// reconstructed as stego - cover and the probability map read when present.
std::vector<CoverStegoPair> load_pairs(const std::string& manifest_path);

}  // namespace cisnet

#endif
