#include "cisnet/pgm.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <sstream>

#include "cisnet/common.hpp"

namespace cisnet {

namespace {

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(const std::string& data, size_t& pos) {
  while (pos < data.size()) {
    if (std::isspace(static_cast<unsigned char>(data[pos]))) {
      ++pos;
    } else if (data[pos] == '#') {
      while (pos < data.size() && data[pos] != '\n') ++pos;
    } else {
      break;
    }
  }
  const size_t start = pos;
  while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
  if (start == pos) throw Error("pgm: truncated header");
  return data.substr(start, pos - start);
}

int64_t parse_extent(const std::string& tok) {
  for (char c : tok)
    if (!std::isdigit(static_cast<unsigned char>(c))) throw Error("pgm: bad header value '" + tok + "'");
  return std::stoll(tok);
}

}  // namespace

Tensor load_pgm(const std::string& path) {
  const std::string data = read_file(path);
  size_t pos = 0;
  if (next_token(data, pos) != "P5") throw Error("pgm: not a binary P5 file: " + path);
  const int64_t w = parse_extent(next_token(data, pos));
  const int64_t h = parse_extent(next_token(data, pos));
  const int64_t maxval = parse_extent(next_token(data, pos));
  if (w < 1 || h < 1) throw Error("pgm: bad extents in " + path);
  if (maxval != 255) throw Error("pgm: only maxval 255 supported, got " + std::to_string(maxval));
  if (pos >= data.size() || !std::isspace(static_cast<unsigned char>(data[pos])))
    throw Error("pgm: missing separator after header");
  ++pos;
  if (data.size() - pos < static_cast<size_t>(w * h))
    throw Error("pgm: truncated payload in " + path);

  Tensor img(Shape{1, h, w});
  for (int64_t i = 0; i < h * w; ++i)
    img.data()[i] = static_cast<double>(static_cast<unsigned char>(data[pos + static_cast<size_t>(i)]));
  return img;
}

void save_pgm(const Tensor& image, const std::string& path) {
  int64_t h, w;
  if (image.ndim() == 3 && image.dim(0) == 1) {
    h = image.dim(1);
    w = image.dim(2);
  } else if (image.ndim() == 2) {
    h = image.dim(0);
    w = image.dim(1);
  } else {
    throw Error("save_pgm: expected [1,H,W] or [H,W], got " + shape_str(image.shape()));
  }
  std::string out;
  out.reserve(static_cast<size_t>(h * w) + 32);
  out += "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  for (int64_t i = 0; i < h * w; ++i) {
    const double v = std::round(image.data()[i]);
    if (v < 0.0 || v > 255.0)
      throw Error("save_pgm: value " + std::to_string(image.data()[i]) + " outside [0,255]");
    out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  write_file_atomic(path, out);
}

void save_prob_map(const Tensor& map, const std::string& path) {
  int64_t h, w;
  if (map.ndim() == 3 && map.dim(0) == 1) {
    h = map.dim(1);
    w = map.dim(2);
  } else if (map.ndim() == 2) {
    h = map.dim(0);
    w = map.dim(1);
  } else {
    throw Error("save_prob_map: expected [1,H,W] or [H,W]");
  }
  std::string out = "cisnet-pmap v1\n" + std::to_string(h) + " " + std::to_string(w) + "\n";
  const size_t header = out.size();
  out.resize(header + static_cast<size_t>(h * w) * sizeof(double));
  std::memcpy(out.data() + header, map.data(), static_cast<size_t>(h * w) * sizeof(double));
  write_file_atomic(path, out);
}

Tensor load_prob_map(const std::string& path) {
  const std::string data = read_file(path);
  std::istringstream in(data);
  std::string magic, version;
  int64_t h = 0, w = 0;
  in >> magic >> version >> h >> w;
  if (magic != "cisnet-pmap" || version != "v1" || h < 1 || w < 1)
    throw Error("prob map: bad header in " + path);
  in.ignore(1);  // newline before payload
  const size_t offset = static_cast<size_t>(in.tellg());
  if (data.size() - offset < static_cast<size_t>(h * w) * sizeof(double))
    throw Error("prob map: truncated payload in " + path);
  Tensor map(Shape{1, h, w});
  std::memcpy(map.data(), data.data() + offset, static_cast<size_t>(h * w) * sizeof(double));
  return map;
}

}  // namespace cisnet
