#ifndef CISNET_EVAL_HPP
#define CISNET_EVAL_HPP

#include <cstdint>
#include <vector>

#include "cisnet/model.hpp"
#include "cisnet/tensor.hpp"

namespace cisnet {

struct RocPoint {
  double false_alarm = 0.0;  // P_FA
  double hit = 0.0;          // 1 - P_MD
};

struct EvalReport {
  std::vector<double> scores;
  std::vector<int> labels;
  double p_e = 0.0;            // min over thresholds of (P_MD + P_FA) / 2
  double best_threshold = 0.0;
  double auc = 0.0;
  std::vector<RocPoint> roc;   // from (0,0) to (1,1)
};

/// Exact threshold sweep over midpoints between sorted distinct scores.
/// Labels: 0 cover, 1 stego; scores increase with stego confidence.
EvalReport detection_error(const std::vector<double>& scores, const std::vector<int>& labels);

struct CamMap {
  Tensor raw;       // [h,w] at feature resolution
  Tensor upscaled;  // [H,W] at input resolution
  int64_t class_index = 0;
};

/// Weighted sum of feature maps [1,D,h,w] by the class row of fc_weight [K,D].
Tensor cam_from_features(const Tensor& features, const Tensor& fc_weight,
                         int64_t class_index);

/// Class activation map: the classifier row of class_index weighting the
/// feature maps that feed the final global pool, bilinearly upscaled to the
/// input size. apply_post_map additionally applies the pooling post-map to
/// the feature maps first.
CamMap cam(const CisNet& net, const Tensor& image, int64_t class_index,
           bool apply_post_map = false);

struct CamCorrelation {
  double spearman = 0.0;
  double top_decile_overlap = 0.0;
  bool constant_cam = false;  // correlation undefined, reported as 0
};

/// Rank agreement between the upscaled CAM and a ground-truth embedding
/// probability map of the same extents.
CamCorrelation cam_vs_probmap(const CamMap& map, const Tensor& prob_map);

/// Bilinear resize of a [h,w] map (half-pixel centers, clamped edges).
Tensor bilinear_upscale(const Tensor& map, int64_t out_h, int64_t out_w);

/// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace cisnet

#endif
