#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpminv/fft.hpp"
#include "dpminv/vec.hpp"

namespace dpminv {

/// Hermitian-symmetric complex values on concentric rings of the 2-D
/// spectrum; overwriting the masked coefficients of a real field's
/// transform keeps the inverse transform real.
struct WatermarkKey {
  struct Entry {
    int u, v;    // FFT index-space coordinates
    Cplx value;  // conjugate of the value at (-u mod n, -v mod n)
  };

  int grid_size = 0;
  int id = 0;
  std::vector<Entry> entries;

  bool hermitian(double tol = 1e-12) const;
};

/// Coordinates (FFT index space) whose rounded distance from the shifted
/// spectrum center equals one of the radii. All radii must stay below
/// grid_size/2.
std::vector<std::pair<int, int>> ring_mask(int grid_size,
                                           const std::vector<int>& radii = {2, 4, 6});

/// Key with values base + N(0, perturb_sigma) per mask coordinate,
/// Hermitian-symmetrized; self-conjugate coordinates get real values.
WatermarkKey make_key(int grid_size, int id, Cplx base, double perturb_sigma,
                      std::uint64_t seed, const std::vector<int>& radii = {2, 4, 6});

/// Draws a standard Gaussian field, overwrites the masked transform
/// coefficients with the key values, transforms back. Returns the
/// flattened real field. Throws on a non-Hermitian key or when the
/// imaginary residue exceeds 1e-10.
Vec embed(const WatermarkKey& key, std::uint64_t rng_seed);

/// Mean l1 (complex modulus) distance between the field's transform and
/// the key values over the mask.
double detect(const WatermarkKey& key, const Vec& field);

/// argmin over keys of detect(); ties break toward the lowest key id.
int classify(const std::vector<WatermarkKey>& keys, const Vec& field);

std::string key_to_json(const WatermarkKey& key);
WatermarkKey key_from_json(const std::string& text);

}  // namespace dpminv
