#include "cisnet/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cisnet {

EvalReport detection_error(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw Error("detection_error: scores and labels must be non-empty and equal length");
  int64_t n_cover = 0, n_stego = 0;
  for (int lab : labels) {
    if (lab == 0) ++n_cover;
    else if (lab == 1) ++n_stego;
    else throw Error("detection_error: labels must be 0 (cover) or 1 (stego)");
  }
  if (n_cover == 0 || n_stego == 0)
    throw Error("detection_error: both classes must be present");

  EvalReport report;
  report.scores = scores;
  report.labels = labels;

  // Sort descending by score; sweeping the threshold downward turns samples
  // positive one distinct score at a time.
  std::vector<size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&scores](size_t a, size_t b) {
    return scores[a] > scores[b];
  });

  report.roc.push_back({0.0, 0.0});
  int64_t fp = 0, tp = 0;
  double best = 0.5;  // threshold above every score: P_FA = 0, P_MD = 1
  double best_threshold = scores[order[0]] + 1.0;
  double auc = 0.0;
  size_t i = 0;
  while (i < order.size()) {
    const double value = scores[order[i]];
    size_t j = i;
    while (j < order.size() && scores[order[j]] == value) {
      if (labels[order[j]] == 1) ++tp;
      else ++fp;
      ++j;
    }
    const RocPoint prev = report.roc.back();
    const RocPoint point{static_cast<double>(fp) / static_cast<double>(n_cover),
                         static_cast<double>(tp) / static_cast<double>(n_stego)};
    auc += (point.false_alarm - prev.false_alarm) * (point.hit + prev.hit) * 0.5;
    report.roc.push_back(point);

    const double p_fa = point.false_alarm;
    const double p_md = static_cast<double>(n_stego - tp) / static_cast<double>(n_stego);
    const double err = 0.5 * (p_fa + p_md);
    if (err < best) {
      best = err;
      // Midpoint below the current distinct score (or below the minimum).
      best_threshold = j < order.size() ? 0.5 * (value + scores[order[j]]) : value - 1.0;
    }
    i = j;
  }
  report.p_e = best;
  report.best_threshold = best_threshold;
  report.auc = auc;
  return report;
}

Tensor bilinear_upscale(const Tensor& map, int64_t out_h, int64_t out_w) {
  int64_t h, w;
  const double* src;
  if (map.ndim() == 2) {
    h = map.dim(0);
    w = map.dim(1);
  } else if (map.ndim() == 3 && map.dim(0) == 1) {
    h = map.dim(1);
    w = map.dim(2);
  } else {
    throw Error("bilinear_upscale: expected [h,w] or [1,h,w]");
  }
  src = map.data();
  Tensor out(Shape{out_h, out_w});
  const double sy = static_cast<double>(h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(w) / static_cast<double>(out_w);
  for (int64_t oy = 0; oy < out_h; ++oy) {
    double fy = (static_cast<double>(oy) + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
    const int64_t y0 = static_cast<int64_t>(fy);
    const int64_t y1 = std::min(y0 + 1, h - 1);
    const double wy = fy - static_cast<double>(y0);
    for (int64_t ox = 0; ox < out_w; ++ox) {
      double fx = (static_cast<double>(ox) + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
      const int64_t x0 = static_cast<int64_t>(fx);
      const int64_t x1 = std::min(x0 + 1, w - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = src[y0 * w + x0] * (1.0 - wx) + src[y0 * w + x1] * wx;
      const double bottom = src[y1 * w + x0] * (1.0 - wx) + src[y1 * w + x1] * wx;
      out.data()[oy * out_w + ox] = top * (1.0 - wy) + bottom * wy;
    }
  }
  return out;
}

Tensor cam_from_features(const Tensor& features, const Tensor& fc_weight,
                         int64_t class_index) {
  if (features.ndim() != 4 || features.dim(0) != 1)
    throw Error("cam_from_features: features must be [1,D,h,w]");
  const int64_t d = features.dim(1), fh = features.dim(2), fw = features.dim(3);
  if (fc_weight.ndim() != 2 || fc_weight.dim(1) != d)
    throw Error("cam_from_features: weight/feature dimension mismatch");
  if (class_index < 0 || class_index >= fc_weight.dim(0))
    throw Error("cam_from_features: class_index out of range");
  Tensor raw(Shape{fh, fw});
  for (int64_t k = 0; k < d; ++k) {
    const double weight = fc_weight.data()[class_index * d + k];
    const double* f = features.data() + k * fh * fw;
    for (int64_t i = 0; i < fh * fw; ++i) raw.data()[i] += weight * f[i];
  }
  return raw;
}

CamMap cam(const CisNet& net, const Tensor& image, int64_t class_index, bool apply_post_map) {
  if (class_index < 0 || class_index > 1) throw Error("cam: class_index must be 0 or 1");
  const Tensor fc_w = net.param("fc.weight");
  bool any_nonzero = false;
  for (int64_t i = 0; i < fc_w.numel(); ++i)
    if (fc_w.data()[i] != 0.0) any_nonzero = true;
  if (!any_nonzero) throw Error("cam: classifier weights are all zero (untrained network)");

  const int64_t h_in = net.config().input_h, w_in = net.config().input_w;
  Tensor batch;
  if (image.ndim() == 3 && image.dim(0) == 1) {
    batch = Tensor(Shape{1, 1, image.dim(1), image.dim(2)}, image.impl()->value);
  } else if (image.ndim() == 4 && image.dim(0) == 1 && image.dim(1) == 1) {
    batch = image;
  } else {
    throw Error("cam: expected a single [1,H,W] image");
  }

  Tensor features = net.cam_features(batch, apply_post_map);  // [1,D,h,w]
  CamMap map;
  map.class_index = class_index;
  map.raw = cam_from_features(features, fc_w, class_index);
  map.upscaled = bilinear_upscale(map.raw, h_in, w_in);
  return map;
}

namespace {

std::vector<double> ranks_with_ties(const std::vector<double>& values) {
  const size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&values](size_t a, size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && values[order[j]] == values[order[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j - 1) + 1.0;  // 1-based
    for (size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw Error("spearman: need two equal-length vectors");
  const std::vector<double> ra = ranks_with_ties(a);
  const std::vector<double> rb = ranks_with_ties(b);
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (va == 0.0 || vb == 0.0) return 0.0;
  return cov / std::sqrt(va * vb);
}

CamCorrelation cam_vs_probmap(const CamMap& map, const Tensor& prob_map) {
  const Tensor& up = map.upscaled;
  int64_t h, w;
  const double* prob;
  if (prob_map.ndim() == 2) {
    h = prob_map.dim(0);
    w = prob_map.dim(1);
  } else if (prob_map.ndim() == 3 && prob_map.dim(0) == 1) {
    h = prob_map.dim(1);
    w = prob_map.dim(2);
  } else {
    throw Error("cam_vs_probmap: prob_map must be [H,W] or [1,H,W]");
  }
  prob = prob_map.data();
  if (up.dim(0) != h || up.dim(1) != w)
    throw Error("cam_vs_probmap: extents differ (" + shape_str(up.shape()) + " vs " +
                shape_str(prob_map.shape()) + ")");

  const size_t n = static_cast<size_t>(h * w);
  std::vector<double> cam_flat(up.data(), up.data() + n);
  std::vector<double> prob_flat(prob, prob + n);

  CamCorrelation corr;
  const double first = cam_flat[0];
  corr.constant_cam =
      std::all_of(cam_flat.begin(), cam_flat.end(), [first](double v) { return v == first; });
  corr.spearman = corr.constant_cam ? 0.0 : spearman(cam_flat, prob_flat);

  const size_t top = std::max<size_t>(1, n / 10);
  auto top_indices = [top](const std::vector<double>& v) {
    std::vector<size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&v](size_t a, size_t b) {
      if (v[a] != v[b]) return v[a] > v[b];
      return a < b;
    });
    order.resize(top);
    std::sort(order.begin(), order.end());
    return order;
  };
  const std::vector<size_t> ta = top_indices(cam_flat);
  const std::vector<size_t> tb = top_indices(prob_flat);
  std::vector<size_t> both;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(both));
  corr.top_decile_overlap = static_cast<double>(both.size()) / static_cast<double>(top);
  return corr;
}

}  // namespace cisnet
