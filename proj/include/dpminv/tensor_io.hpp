#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpminv/vec.hpp"

namespace dpminv {

/// Flat f64 tensor file: one JSON header line
///   {"dims":[...],"dtype":"f64","order":"row-major","seed":<u64>}
/// followed by raw little-endian doubles, body length 8 * prod(dims).
struct TensorFile {
  std::vector<std::size_t> dims;
  std::uint64_t seed = 0;
  Vec data;

  std::size_t element_count() const;
};

void write_tensor(const std::string& path, const TensorFile& tensor);
TensorFile read_tensor(const std::string& path);

struct Trajectory;
class ToyDecoder;

/// Trajectory as a [steps+1, dim] tensor (states only; the grid is
/// reproducible from the config).
void save_trajectory(const std::string& path, const Trajectory& trajectory,
                     std::uint64_t seed = 0);

/// Decoder parameters as two tensor files: weight [d_out, d_latent] and
/// bias [d_out]; seed records the construction seed.
void save_decoder_params(const std::string& weight_path, const std::string& bias_path,
                         const ToyDecoder& decoder, std::uint64_t seed);

}  // namespace dpminv
