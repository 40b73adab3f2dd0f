#include "cisnet/stego.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <sstream>

#include "cisnet/common.hpp"
#include "cisnet/pgm.hpp"
#include "cisnet/rng.hpp"

namespace cisnet {

namespace {

void check_cover(const Tensor& cover) {
  if (cover.ndim() != 3 || cover.dim(0) != 1)
    throw Error("expected grayscale cover [1,H,W], got " + shape_str(cover.shape()));
}

}  // namespace

CostMap toy_cost(const Tensor& cover) {
  check_cover(cover);
  const int64_t h = cover.dim(1), w = cover.dim(2);
  Tensor cost(Shape{1, h, w});
  const double* img = cover.data();
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      const int64_t y0 = std::max<int64_t>(0, y - 1), y1 = std::min(h - 1, y + 1);
      const int64_t x0 = std::max<int64_t>(0, x - 1), x1 = std::min(w - 1, x + 1);
      const double count = static_cast<double>((y1 - y0 + 1) * (x1 - x0 + 1));
      double total = 0.0;
      for (int64_t yy = y0; yy <= y1; ++yy)
        for (int64_t xx = x0; xx <= x1; ++xx) total += img[yy * w + xx];
      // Deviations scaled by the window count stay exact for integer covers,
      // which makes the cost exactly shift-invariant.
      double sq = 0.0;
      for (int64_t yy = y0; yy <= y1; ++yy)
        for (int64_t xx = x0; xx <= x1; ++xx) {
          const double d = count * img[yy * w + xx] - total;
          sq += d * d;
        }
      const double sigma = std::sqrt(sq / (count * count * count));
      cost.data()[y * w + x] = 1.0 / (sigma + 0.1);
    }
  return {cost};
}

namespace {

CoverStegoPair embed_with_probs(const Tensor& cover, Tensor prob_map, double payload_bpp,
                                uint64_t seed) {
  const int64_t h = cover.dim(1), w = cover.dim(2);
  CoverStegoPair pair;
  pair.cover = cover.clone_detached();
  pair.stego = cover.clone_detached();
  pair.change_map = Tensor(Shape{1, h, w});
  pair.prob_map = std::move(prob_map);
  pair.payload_bpp = payload_bpp;
  pair.seed = seed;

  const Rng rng = Rng::stream(seed, "embed");
  for (int64_t i = 0; i < h * w; ++i) {
    const double p = pair.prob_map.data()[i];
    if (p <= 0.0) continue;
    if (rng.uniform_at(static_cast<uint64_t>(2 * i)) >= p) continue;
    const double delta = (rng.at(static_cast<uint64_t>(2 * i + 1)) & 1) ? 1.0 : -1.0;
    pair.change_map.data()[i] = delta;
    const double v = pair.cover.data()[i] + delta;
    pair.stego.data()[i] = std::clamp(v, 0.0, 255.0);
  }
  return pair;
}

}  // namespace

CoverStegoPair embed_adaptive(const Tensor& cover, double payload_bpp, uint64_t seed) {
  check_cover(cover);
  if (payload_bpp < 0.0 || payload_bpp > 1.0)
    throw Error("payload must be in [0,1], got " + std::to_string(payload_bpp));
  const int64_t h = cover.dim(1), w = cover.dim(2);
  Tensor probs(Shape{1, h, w});
  if (payload_bpp > 0.0) {
    const CostMap cost = toy_cost(cover);
    const double target = payload_bpp * 0.5 * static_cast<double>(h * w);
    auto total_at = [&](double lambda) {
      double total = 0.0;
      for (int64_t i = 0; i < h * w; ++i)
        total += 0.5 * std::exp(-lambda * cost.cost.data()[i]);
      return total;
    };
    double lo = 0.0, hi = 1.0;
    int expand = 0;
    while (total_at(hi) > target) {
      hi *= 2.0;
      if (++expand > 200) throw Error("embed_adaptive: bisection bracket failed");
    }
    for (int it = 0; it < 200 && hi - lo > 1e-13 * (1.0 + hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      (total_at(mid) > target ? lo : hi) = mid;
    }
    const double lambda = 0.5 * (lo + hi);
    const double total = total_at(lambda);
    if (std::fabs(total - target) > 1e-6 * std::max(1.0, target))
      throw Error("embed_adaptive: bisection did not converge");
    for (int64_t i = 0; i < h * w; ++i)
      probs.data()[i] = 0.5 * std::exp(-lambda * cost.cost.data()[i]);
  }
  return embed_with_probs(cover, std::move(probs), payload_bpp, seed);
}

CoverStegoPair embed_lsb_matching(const Tensor& cover, double payload_bpp, uint64_t seed) {
  check_cover(cover);
  if (payload_bpp < 0.0 || payload_bpp > 1.0)
    throw Error("payload must be in [0,1], got " + std::to_string(payload_bpp));
  const int64_t h = cover.dim(1), w = cover.dim(2);
  Tensor probs(Shape{1, h, w}, payload_bpp * 0.5);
  return embed_with_probs(cover, std::move(probs), payload_bpp, seed);
}

Tensor synthetic_cover(int64_t h, int64_t w, uint64_t seed, const SyntheticCoverConfig& cfg) {
  if (h < 4 || w < 4) throw Error("synthetic_cover: extents too small");
  Rng base_rng = Rng::stream(seed, "cover-base");
  std::vector<double> noise(static_cast<size_t>(h * w));
  for (double& v : noise) v = base_rng.normal();

  // Separable Gaussian blur, kernel truncated at 3 sigma.
  const int64_t radius = std::max<int64_t>(1, static_cast<int64_t>(3.0 * cfg.smooth_sigma));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double ksum = 0.0;
  for (int64_t i = -radius; i <= radius; ++i) {
    kernel[static_cast<size_t>(i + radius)] =
        std::exp(-0.5 * static_cast<double>(i * i) / (cfg.smooth_sigma * cfg.smooth_sigma));
    ksum += kernel[static_cast<size_t>(i + radius)];
  }
  for (double& k : kernel) k /= ksum;

  std::vector<double> tmp(noise.size()), field(noise.size());
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int64_t i = -radius; i <= radius; ++i) {
        const int64_t xx = std::clamp<int64_t>(x + i, 0, w - 1);
        acc += kernel[static_cast<size_t>(i + radius)] * noise[static_cast<size_t>(y * w + xx)];
      }
      tmp[static_cast<size_t>(y * w + x)] = acc;
    }
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int64_t i = -radius; i <= radius; ++i) {
        const int64_t yy = std::clamp<int64_t>(y + i, 0, h - 1);
        acc += kernel[static_cast<size_t>(i + radius)] * tmp[static_cast<size_t>(yy * w + x)];
      }
      field[static_cast<size_t>(y * w + x)] = acc;
    }

  double mean = 0.0, var = 0.0;
  for (double v : field) mean += v;
  mean /= static_cast<double>(field.size());
  for (double v : field) var += (v - mean) * (v - mean);
  var /= static_cast<double>(field.size());
  const double scale = var > 0.0 ? cfg.base_amplitude / std::sqrt(var) : 0.0;

  Rng grain_rng = Rng::stream(seed, "cover-grain");
  Tensor img(Shape{1, h, w});
  for (size_t i = 0; i < field.size(); ++i)
    img.data()[i] = 128.0 + scale * (field[i] - mean) + cfg.base_noise_sigma * grain_rng.normal();

  // Texture patches: rectangles of strong white noise.
  Rng patch_rng = Rng::stream(seed, "cover-patches");
  const int64_t span = cfg.max_patches - cfg.min_patches;
  const int64_t patches =
      cfg.min_patches + (span > 0 ? static_cast<int64_t>(patch_rng.below(static_cast<uint64_t>(span + 1))) : 0);
  for (int64_t p = 0; p < patches; ++p) {
    const int64_t ph = h / 4 + static_cast<int64_t>(patch_rng.below(static_cast<uint64_t>(std::max<int64_t>(1, h / 4))));
    const int64_t pw = w / 4 + static_cast<int64_t>(patch_rng.below(static_cast<uint64_t>(std::max<int64_t>(1, w / 4))));
    const int64_t py = static_cast<int64_t>(patch_rng.below(static_cast<uint64_t>(h - ph + 1)));
    const int64_t px = static_cast<int64_t>(patch_rng.below(static_cast<uint64_t>(w - pw + 1)));
    for (int64_t y = py; y < py + ph; ++y)
      for (int64_t x = px; x < px + pw; ++x)
        img.data()[y * w + x] += cfg.texture_sigma * patch_rng.normal();
  }

  for (int64_t i = 0; i < h * w; ++i)
    img.data()[i] = std::clamp(std::round(img.data()[i]), 0.0, 255.0);
  return img;
}

Tensor center_crop(const Tensor& image, int64_t h, int64_t w) {
  check_cover(image);
  const int64_t ih = image.dim(1), iw = image.dim(2);
  if (h > ih || w > iw)
    throw Error("center_crop: target " + std::to_string(h) + "x" + std::to_string(w) +
                " exceeds image " + std::to_string(ih) + "x" + std::to_string(iw));
  const int64_t oy = (ih - h) / 2, ox = (iw - w) / 2;
  Tensor out(Shape{1, h, w});
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < w; ++x)
      out.data()[y * w + x] = image.data()[(y + oy) * iw + (x + ox)];
  return out;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<ManifestEntry> entries;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    ManifestEntry e;
    if (!(row >> e.cover_path >> e.seed >> e.payload))
      throw Error("manifest " + path + " line " + std::to_string(lineno) + ": bad row");
    entries.push_back(e);
  }
  return entries;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ostringstream out;
  char buf[32];
  for (const ManifestEntry& e : entries) {
    std::snprintf(buf, sizeof(buf), "%.17g", e.payload);
    out << e.cover_path << " " << e.seed << " " << buf << "\n";
  }
  write_file_atomic(path, out.str());
}

namespace {
std::string payload_tag(double payload) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", payload);
  return buf;
}
std::string cover_stem(const std::string& cover_path) {
  return std::filesystem::path(cover_path).stem().string();
}
}  // namespace

std::string stego_path_for(const std::string& manifest_dir, const ManifestEntry& entry) {
  return (std::filesystem::path(manifest_dir) / "stegos" / ("p" + payload_tag(entry.payload)) /
          (cover_stem(entry.cover_path) + ".pgm"))
      .string();
}

std::string probmap_path_for(const std::string& manifest_dir, const ManifestEntry& entry) {
  return (std::filesystem::path(manifest_dir) / "stegos" / ("p" + payload_tag(entry.payload)) /
          (cover_stem(entry.cover_path) + ".pmap"))
      .string();
}

std::vector<CoverStegoPair> load_pairs(const std::string& manifest_path) {
  const std::string dir = std::filesystem::path(manifest_path).parent_path().string();
  std::vector<CoverStegoPair> pairs;
  for (const ManifestEntry& e : read_manifest(manifest_path)) {
    CoverStegoPair pair;
    pair.cover = load_pgm((std::filesystem::path(dir) / e.cover_path).string());
    pair.stego = load_pgm(stego_path_for(dir, e));
    if (pair.cover.shape() != pair.stego.shape())
      throw Error("cover/stego shape mismatch for " + e.cover_path);
    pair.change_map = Tensor(pair.cover.shape());
    for (int64_t i = 0; i < pair.cover.numel(); ++i)
      pair.change_map.data()[i] = pair.stego.data()[i] - pair.cover.data()[i];
    const std::string pmap = probmap_path_for(dir, e);
    if (std::filesystem::exists(pmap)) pair.prob_map = load_prob_map(pmap);
    pair.payload_bpp = e.payload;
    pair.seed = e.seed;
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace cisnet
