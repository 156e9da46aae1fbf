#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "mflab/quantum.hpp"

namespace mflab::quantum {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

namespace {
constexpr char kMagic[8] = {'M', 'F', 'L', 'A', 'B', 'S', 'T', '1'};
}

void save_checkpoint(const std::string& path, const WaveFunction& psi) {
  nlohmann::json h;
  h["d"] = psi.grid.d;
  h["n_particles"] = psi.grid.n_particles;
  h["points_per_axis"] = psi.grid.points_per_axis;
  h["box_half_width"] = psi.grid.box_half_width;
  h["epsilon"] = psi.grid.epsilon;
  h["doubled"] = psi.grid.doubled;
  h["time"] = psi.time;
  h["dtype"] = "complex128";
  h["order"] = "row-major, first axis slowest; axes x_1..x_N then y_1..y_N when doubled";
  h["count"] = psi.values.size();
  const std::string header = h.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path);
  const std::uint64_t len = header.size();
  out.write(kMagic, 8);
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(header.data(), static_cast<std::streamsize>(len));
  out.write(reinterpret_cast<const char*>(psi.values.data()),
            static_cast<std::streamsize>(psi.values.size() * sizeof(cplx)));
  if (!out) throw std::runtime_error("write failed: " + path);
}

WaveFunction load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  std::uint64_t len = 0;
  in.read(magic, 8);
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("not a state checkpoint: " + path);
  if (len > (1u << 20)) throw std::runtime_error("checkpoint header too large");
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  const auto h = nlohmann::json::parse(header);
  if (h.at("dtype") != "complex128") throw std::runtime_error("unsupported checkpoint dtype");
  GridSpec g;
  g.d = h.at("d");
  g.n_particles = h.at("n_particles");
  g.points_per_axis = h.at("points_per_axis");
  g.box_half_width = h.at("box_half_width");
  g.epsilon = h.at("epsilon");
  g.doubled = h.at("doubled");
  WaveFunction psi = WaveFunction::zeros(g);
  psi.time = h.at("time");
  if (h.at("count").get<std::size_t>() != psi.values.size()) throw std::runtime_error("checkpoint size mismatch");
  in.read(reinterpret_cast<char*>(psi.values.data()), static_cast<std::streamsize>(psi.values.size() * sizeof(cplx)));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return psi;
}

}  // namespace mflab::quantum
