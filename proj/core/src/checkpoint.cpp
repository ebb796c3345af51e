#include "lgobs/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "lgobs/binary_io.hpp"
#include "lgobs/errors.hpp"

namespace lgobs {

namespace {

constexpr std::string_view kMagic = "LGOBCKPT";

void write_flat(std::ostream& os, const ObserverParams& p) {
  const VectorXd flat = p.flatten();
  io::write_f64s(os, std::span<const double>(flat.data(), static_cast<std::size_t>(flat.size())));
}

void read_flat(std::istream& is, ObserverParams& p) {
  VectorXd flat(p.size());
  io::read_f64s(is, std::span<double>(flat.data(), static_cast<std::size_t>(flat.size())));
  p.assign(flat);
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto d = ckpt.params.dims();
  std::ostringstream os;
  io::write_bytes(os, kMagic);
  io::write_u32(os, Checkpoint::kFormatVersion);
  io::write_u32(os, 0);
  io::write_u64(os, static_cast<std::uint64_t>(d.input));
  io::write_u64(os, static_cast<std::uint64_t>(d.hidden));
  io::write_u64(os, static_cast<std::uint64_t>(d.output));
  io::write_u64(os, ckpt.iteration);
  io::write_u64(os, ckpt.optimizer.step);
  io::write_u64(os, ckpt.rng_state.size());
  io::write_bytes(os, ckpt.rng_state);
  io::write_u64(os, static_cast<std::uint64_t>(ckpt.params.size()));
  write_flat(os, ckpt.params);
  write_flat(os, ckpt.optimizer.m);
  write_flat(os, ckpt.optimizer.v);
  io::write_file_atomic(path, os.str());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  try {
    if (io::read_bytes(is, kMagic.size()) != kMagic) throw IoError("bad magic");
    const auto version = io::read_u32(is);
    if (version != Checkpoint::kFormatVersion)
      throw IoError("unsupported checkpoint version " + std::to_string(version));
    io::read_u32(is);
    NetworkDims d;
    d.input = static_cast<Index>(io::read_u64(is));
    d.hidden = static_cast<Index>(io::read_u64(is));
    d.output = static_cast<Index>(io::read_u64(is));
    if (d.input <= 0 || d.hidden <= 0 || d.output <= 0 || d.hidden > (1 << 16))
      throw IoError("implausible network dimensions");

    Checkpoint c;
    c.iteration = io::read_u64(is);
    c.params = ObserverParams::zeros(d);
    c.optimizer = OptimizerState::zeros(d);
    c.optimizer.step = io::read_u64(is);
    const auto rng_len = io::read_u64(is);
    if (rng_len > (1u << 20)) throw IoError("implausible rng state length");
    c.rng_state = io::read_bytes(is, rng_len);
    if (io::read_u64(is) != static_cast<std::uint64_t>(c.params.size()))
      throw IoError("parameter count does not match dimensions");
    read_flat(is, c.params);
    read_flat(is, c.optimizer.m);
    read_flat(is, c.optimizer.v);
    return c;
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace lgobs
