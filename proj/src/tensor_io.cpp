#include "dpminv/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "dpminv/latent.hpp"
#include "dpminv/solvers.hpp"

namespace dpminv {

static_assert(std::endian::native == std::endian::little,
              "tensor files assume a little-endian host");

std::size_t TensorFile::element_count() const {
  std::size_t n = 1;
  for (std::size_t d : dims) n *= d;
  return n;
}

void write_tensor(const std::string& path, const TensorFile& tensor) {
  if (tensor.data.size() != tensor.element_count())
    throw std::invalid_argument("write_tensor: data length does not match dims");
  nlohmann::json header;
  header["dims"] = tensor.dims;
  header["dtype"] = "f64";
  header["order"] = "row-major";
  header["seed"] = tensor.seed;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_tensor: cannot open " + path);
  out << header.dump() << "\n";
  out.write(reinterpret_cast<const char*>(tensor.data.data()),
            static_cast<std::streamsize>(tensor.data.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write_tensor: write failed for " + path);
}

TensorFile read_tensor(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_tensor: cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("read_tensor: missing header line");
  const auto header = nlohmann::json::parse(line);
  if (header.at("dtype").get<std::string>() != "f64")
    throw std::runtime_error("read_tensor: unsupported dtype");
  if (header.at("order").get<std::string>() != "row-major")
    throw std::runtime_error("read_tensor: unsupported element order");
  TensorFile tensor;
  tensor.dims = header.at("dims").get<std::vector<std::size_t>>();
  tensor.seed = header.value("seed", std::uint64_t{0});
  tensor.data.resize(tensor.element_count());
  in.read(reinterpret_cast<char*>(tensor.data.data()),
          static_cast<std::streamsize>(tensor.data.size() * sizeof(double)));
  if (in.gcount() != static_cast<std::streamsize>(tensor.data.size() * sizeof(double)))
    throw std::runtime_error("read_tensor: truncated body in " + path);
  return tensor;
}

void save_trajectory(const std::string& path, const Trajectory& trajectory,
                     std::uint64_t seed) {
  if (trajectory.states.empty())
    throw std::invalid_argument("save_trajectory: empty trajectory");
  TensorFile t;
  t.dims = {trajectory.states.size(), trajectory.states.front().size()};
  t.seed = seed;
  t.data.reserve(t.element_count());
  for (const Vec& state : trajectory.states)
    t.data.insert(t.data.end(), state.begin(), state.end());
  write_tensor(path, t);
}

void save_decoder_params(const std::string& weight_path, const std::string& bias_path,
                         const ToyDecoder& decoder, std::uint64_t seed) {
  TensorFile w;
  w.dims = {static_cast<std::size_t>(decoder.d_out()),
            static_cast<std::size_t>(decoder.d_latent())};
  w.seed = seed;
  w.data = decoder.weight();
  write_tensor(weight_path, w);
  TensorFile b;
  b.dims = {static_cast<std::size_t>(decoder.d_out())};
  b.seed = seed;
  b.data = decoder.bias();
  write_tensor(bias_path, b);
}

}  // namespace dpminv
