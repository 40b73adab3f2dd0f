#ifndef CISNET_PGM_HPP
#define CISNET_PGM_HPP

#include <string>

#include "cisnet/tensor.hpp"

namespace cisnet {

/// Binary 8-bit PGM (P5, maxval 255) -> [1,H,W] tensor.
Tensor load_pgm(const std::string& path);

/// [1,H,W] or [H,W] tensor with values in [0,255] -> binary PGM.
void save_pgm(const Tensor& image, const std::string& path);

/// Raw double map ("cisnet-pmap v1" header + little-endian payload).
void save_prob_map(const Tensor& map, const std::string& path);
Tensor load_prob_map(const std::string& path);

}  // namespace cisnet

#endif
