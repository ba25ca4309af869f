#include "dpminv/watermark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "dpminv/rng.hpp"

namespace dpminv {

namespace {

std::pair<int, int> conjugate_coord(int u, int v, int n) {
  return {(n - u) % n, (n - v) % n};
}

}  // namespace

bool WatermarkKey::hermitian(double tol) const {
  std::map<std::pair<int, int>, Cplx> values;
  for (const auto& e : entries) values[{e.u, e.v}] = e.value;
  for (const auto& e : entries) {
    const auto p = conjugate_coord(e.u, e.v, grid_size);
    const auto it = values.find(p);
    if (it == values.end()) return false;
    if (std::abs(it->second - std::conj(e.value)) > tol) return false;
  }
  return true;
}

std::vector<std::pair<int, int>> ring_mask(int grid_size, const std::vector<int>& radii) {
  if (!is_power_of_two(grid_size))
    throw std::invalid_argument("ring_mask: grid size must be a power of two");
  const int c = grid_size / 2;
  for (int r : radii) {
    if (r <= 0 || r >= c)
      throw std::invalid_argument("ring_mask: radius outside the spectrum");
  }
  std::vector<std::pair<int, int>> mask;
  for (int su = 0; su < grid_size; ++su) {
    for (int sv = 0; sv < grid_size; ++sv) {
      const double dist = std::hypot(su - c, sv - c);
      const int rr = static_cast<int>(std::lround(dist));
      if (std::find(radii.begin(), radii.end(), rr) != radii.end()) {
        // shift from centered coordinates back to FFT index space
        mask.emplace_back((su - c + grid_size) % grid_size,
                          (sv - c + grid_size) % grid_size);
      }
    }
  }
  std::sort(mask.begin(), mask.end());
  return mask;
}

WatermarkKey make_key(int grid_size, int id, Cplx base, double perturb_sigma,
                      std::uint64_t seed, const std::vector<int>& radii) {
  const auto mask = ring_mask(grid_size, radii);
  Rng rng(seed);
  std::map<std::pair<int, int>, Cplx> values;
  for (const auto& [u, v] : mask) {
    if (values.count({u, v})) continue;
    const auto p = conjugate_coord(u, v, grid_size);
    if (p == std::make_pair(u, v)) {
      values[{u, v}] = Cplx(base.real() + perturb_sigma * rng.gaussian(), 0.0);
    } else {
      const Cplx z = base + perturb_sigma * Cplx(rng.gaussian(), rng.gaussian());
      values[{u, v}] = z;
      values[p] = std::conj(z);
    }
  }
  WatermarkKey key;
  key.grid_size = grid_size;
  key.id = id;
  for (const auto& [uv, z] : values) key.entries.push_back({uv.first, uv.second, z});
  return key;
}

Vec embed(const WatermarkKey& key, std::uint64_t rng_seed) {
  if (!key.hermitian()) throw std::invalid_argument("embed: key is not Hermitian");
  const int n = key.grid_size;
  Rng rng(rng_seed);
  Vec field = rng.gaussian_vec(static_cast<std::size_t>(n) * n);
  CField spec = fft2_real(field, n);
  for (const auto& e : key.entries) spec[static_cast<std::size_t>(e.u) * n + e.v] = e.value;
  CField back = ifft2(spec, n);
  Vec out(field.size());
  double max_imag = 0.0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    max_imag = std::max(max_imag, std::fabs(back[i].imag()));
    out[i] = back[i].real();
  }
  if (max_imag > 1e-10)
    throw std::runtime_error("embed: imaginary residue above tolerance");
  return out;
}

double detect(const WatermarkKey& key, const Vec& field) {
  const int n = key.grid_size;
  if (field.size() != static_cast<std::size_t>(n) * n)
    throw std::invalid_argument("detect: field size mismatch");
  const CField spec = fft2_real(field, n);
  double sum = 0.0;
  for (const auto& e : key.entries)
    sum += std::abs(spec[static_cast<std::size_t>(e.u) * n + e.v] - e.value);
  return sum / static_cast<double>(key.entries.size());
}

int classify(const std::vector<WatermarkKey>& keys, const Vec& field) {
  if (keys.empty()) throw std::invalid_argument("classify: no keys");
  int best_id = keys.front().id;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& key : keys) {
    const double d = detect(key, field);
    if (d < best || (d == best && key.id < best_id)) {
      best = d;
      best_id = key.id;
    }
  }
  return best_id;
}

std::string key_to_json(const WatermarkKey& key) {
  nlohmann::json j;
  j["grid_size"] = key.grid_size;
  j["id"] = key.id;
  auto& entries = j["entries"] = nlohmann::json::array();
  for (const auto& e : key.entries) {
    entries.push_back({{"u", e.u}, {"v", e.v}, {"re", e.value.real()}, {"im", e.value.imag()}});
  }
  return j.dump(2);
}

WatermarkKey key_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  WatermarkKey key;
  key.grid_size = j.at("grid_size").get<int>();
  key.id = j.at("id").get<int>();
  for (const auto& e : j.at("entries")) {
    key.entries.push_back({e.at("u").get<int>(), e.at("v").get<int>(),
                           Cplx(e.at("re").get<double>(), e.at("im").get<double>())});
  }
  return key;
}

}  // namespace dpminv
