#include "cisnet/srm.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "cisnet/common.hpp"
#include "cisnet/ops.hpp"

namespace cisnet {

namespace {

using Stencil5 = std::array<std::array<double, 5>, 5>;

Stencil5 zeros5() {
  Stencil5 s{};
  return s;
}

// 1-D stencil placed along direction (dy,dx) through the center; t ranges over
// the given tap offsets.
Stencil5 line_stencil(const std::vector<int>& taps, const std::vector<double>& coeffs,
                      int dy, int dx) {
  Stencil5 s = zeros5();
  for (size_t i = 0; i < taps.size(); ++i) {
    const int y = 2 + taps[i] * dy;
    const int x = 2 + taps[i] * dx;
    s[static_cast<size_t>(y)][static_cast<size_t>(x)] = coeffs[i];
  }
  return s;
}

Stencil5 embed3(const std::array<std::array<double, 3>, 3>& k) {
  Stencil5 s = zeros5();
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) s[y + 1][x + 1] = k[y][x];
  return s;
}

// Counter-clockwise quarter turn: (y,x) -> (4-x, y).
Stencil5 rot90(const Stencil5& k) {
  Stencil5 s = zeros5();
  for (int y = 0; y < 5; ++y)
    for (int x = 0; x < 5; ++x) s[4 - x][y] = k[y][x];
  return s;
}

}  // namespace

FilterBank build_bank() {
  std::vector<std::pair<std::string, Stencil5>> kernels;

  // Second order: [1,-2,1]/2.
  const std::vector<int> t2{-1, 0, 1};
  const std::vector<double> c2{0.5, -1.0, 0.5};
  kernels.emplace_back("s2_horiz", line_stencil(t2, c2, 0, 1));
  kernels.emplace_back("s2_vert", line_stencil(t2, c2, 1, 0));
  kernels.emplace_back("s2_diag", line_stencil(t2, c2, 1, 1));
  kernels.emplace_back("s2_adiag", line_stencil(t2, c2, 1, -1));

  // Third order: [1,-3,3,-1]/4, both tap directions per orientation.
  const std::vector<int> t3p{-1, 0, 1, 2};
  const std::vector<int> t3m{1, 0, -1, -2};
  const std::vector<double> c3{0.25, -0.75, 0.75, -0.25};
  const std::array<std::pair<int, int>, 4> dirs{{{0, 1}, {1, 0}, {1, 1}, {1, -1}}};
  const std::array<std::string, 4> dir_names{"horiz", "vert", "diag", "adiag"};
  for (int d = 0; d < 4; ++d) {
    kernels.emplace_back("s3_" + dir_names[d] + "_p",
                         line_stencil(t3p, c3, dirs[d].first, dirs[d].second));
    kernels.emplace_back("s3_" + dir_names[d] + "_m",
                         line_stencil(t3m, c3, dirs[d].first, dirs[d].second));
  }

  // KB: center 4, edge-adjacent -2, corners 1, over 4.
  const std::array<std::array<double, 3>, 3> kb{{{0.25, -0.5, 0.25},
                                                 {-0.5, 1.0, -0.5},
                                                 {0.25, -0.5, 0.25}}};
  kernels.emplace_back("kb", embed3(kb));

  // KV: classic 5x5 stencil, over 16.
  const double q = 1.0 / 16.0;
  Stencil5 kv = {{{-1 * q, 2 * q, -2 * q, 2 * q, -1 * q},
                  {2 * q, -6 * q, 8 * q, -6 * q, 2 * q},
                  {-2 * q, 8 * q, -12 * q, 8 * q, -2 * q},
                  {2 * q, -6 * q, 8 * q, -6 * q, 2 * q},
                  {-1 * q, 2 * q, -2 * q, 2 * q, -1 * q}}};
  kernels.emplace_back("kv", kv);

  // EDGE 3x3: KB with the lower row dropped, three orientations.
  const std::array<std::array<double, 3>, 3> e3{{{0.25, -0.5, 0.25},
                                                 {-0.5, 1.0, -0.5},
                                                 {0.0, 0.0, 0.0}}};
  const Stencil5 e3_up = embed3(e3);
  kernels.emplace_back("edge3_up", e3_up);
  kernels.emplace_back("edge3_left", rot90(e3_up));
  kernels.emplace_back("edge3_right", rot90(rot90(rot90(e3_up))));

  // EDGE 5x5: upper three rows of KV, three orientations.
  Stencil5 e5_up = kv;
  for (int x = 0; x < 5; ++x) e5_up[3][x] = e5_up[4][x] = 0.0;
  kernels.emplace_back("edge5_up", e5_up);
  kernels.emplace_back("edge5_left", rot90(e5_up));
  kernels.emplace_back("edge5_right", rot90(rot90(rot90(e5_up))));

  FilterBank bank;
  bank.names.reserve(kernels.size());
  std::vector<double> values;
  values.reserve(kernels.size() * 25);
  for (auto& [name, stencil] : kernels) {
    bank.names.push_back(name);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 5; ++x) values.push_back(stencil[y][x]);
  }
  bank.kernels = Tensor(Shape{static_cast<int64_t>(kernels.size()), 1, 5, 5},
                        std::move(values));
  return bank;
}

void save_filter_bank(const FilterBank& bank, const std::string& path) {
  std::ostringstream out;
  out << "srm-bank v1 count=" << bank.count() << "\n";
  char buf[32];
  for (int64_t k = 0; k < bank.count(); ++k) {
    out << bank.names[static_cast<size_t>(k)] << "\n";
    for (int y = 0; y < 5; ++y) {
      for (int x = 0; x < 5; ++x) {
        std::snprintf(buf, sizeof(buf), "%.17g", bank.kernels.at({k, 0, y, x}));
        out << (x ? " " : "") << buf;
      }
      out << "\n";
    }
  }
  write_file_atomic(path, out.str());
}

FilterBank load_filter_bank(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string word;
  int64_t count = 0;
  std::string header;
  if (!std::getline(in, header)) throw Error("srm bank: empty file " + path);
  if (std::sscanf(header.c_str(), "srm-bank v1 count=%lld",
                  reinterpret_cast<long long*>(&count)) != 1 ||
      count < 1)
    throw Error("srm bank: bad header in " + path);

  FilterBank bank;
  std::vector<double> values(static_cast<size_t>(count) * 25);
  for (int64_t k = 0; k < count; ++k) {
    std::string name;
    if (!(in >> name)) throw Error("srm bank: missing kernel name");
    bank.names.push_back(name);
    for (int i = 0; i < 25; ++i) {
      std::string tok;
      if (!(in >> tok)) throw Error("srm bank: truncated kernel " + name);
      char* end = nullptr;
      values[static_cast<size_t>(k) * 25 + i] = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw Error("srm bank: bad value '" + tok + "' in kernel " + name);
    }
  }
  bank.kernels = Tensor(Shape{count, 1, 5, 5}, std::move(values));
  return bank;
}

Tensor hpf_forward(const Tensor& image, const FilterBank& bank) {
  if (image.ndim() != 4 || image.dim(1) != 1)
    throw Error("hpf_forward: expected grayscale input [N,1,H,W], got " +
                shape_str(image.shape()));
  return conv2d(image, bank.kernels, Tensor(), /*stride=*/1, /*dilation=*/1, /*padding=*/2);
}

}  // namespace cisnet
