#include "lgobs/dataset.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "lgobs/binary_io.hpp"
#include "lgobs/errors.hpp"
#include "lgobs/parallel.hpp"

namespace lgobs {

namespace {

using nlohmann::json;

constexpr std::string_view kSequenceMagic = "LGOBSEQ1";
constexpr std::uint32_t kSequenceVersion = 1;

std::uint64_t record_payload_bytes(std::uint64_t m) {
  return 16 + 8 * (18 * (m + 1) + 6 * m + 18 * m);
}

void write_vec(std::ostream& os, const auto& v) {
  io::write_f64s(os, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

template <class V>
V read_vec(std::istream& is) {
  V v;
  io::read_f64s(is, std::span<double>(v.data(), static_cast<std::size_t>(v.size())));
  return v;
}

}  // namespace

void DatasetConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("dataset config: " + msg); };
  if (num_sequences == 0) fail("number of sequences must be positive");
  if (length == 0) fail("sequence length must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) fail("dt must be positive");
  if (!(train_sigma >= 0.0)) fail("train sigma must be non-negative");
  if (train_fraction < 0.0 || val_fraction < 0.0 || test_fraction < 0.0)
    fail("split fractions must be non-negative");
  if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-12)
    fail("split fractions must sum to 1");
  if (num_inference > 0 && inference_length == 0) fail("inference length must be positive");
  for (double s : inference_sigmas)
    if (!(s >= 0.0)) fail("inference sigmas must be non-negative");
  if (!(bias_range >= 0.0) || !(velocity_range >= 0.0) || !(position_range >= 0.0))
    fail("ranges must be non-negative");
  if (!(tolerance > 0.0)) fail("integrator tolerance must be positive");
}

SimConfig DatasetConfig::sim_config(std::size_t len, double sigma) const {
  SimConfig s;
  s.length = len;
  s.dt = dt;
  s.sigma = sigma;
  s.bias_range = bias_range;
  s.velocity_range = velocity_range;
  s.position_range = position_range;
  s.tolerance = tolerance;
  return s;
}

SplitCounts split_counts(std::size_t n, double train_fraction, double val_fraction) {
  SplitCounts c;
  c.train = static_cast<std::size_t>(std::llround(static_cast<double>(n) * train_fraction));
  c.val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_fraction));
  c.train = std::min(c.train, n);
  c.val = std::min(c.val, n - c.train);
  c.test = n - c.train - c.val;
  return c;
}

std::string inference_file_name(double sigma) {
  std::ostringstream os;
  os << "infer_sigma_" << sigma << ".bin";
  return os.str();
}

std::string DatasetManifest::to_json() const {
  const auto& c = config;
  json j;
  j["format_version"] = format_version;
  j["generator_seed"] = c.seed;
  j["sequence_length"] = c.length;
  j["dt"] = c.dt;
  j["train_sigma"] = c.train_sigma;
  j["total_sequences"] = c.num_sequences;
  j["split_fractions"] = {{"train", c.train_fraction}, {"val", c.val_fraction}, {"test", c.test_fraction}};
  j["counts"] = {{"train", counts.train}, {"val", counts.val}, {"test", counts.test}};
  j["bias_range"] = c.bias_range;
  j["velocity_range"] = c.velocity_range;
  j["position_range"] = c.position_range;
  j["integrator_tolerance"] = c.tolerance;
  j["inference_count"] = c.num_inference;
  j["inference_length"] = c.inference_length;
  j["inference_sigmas"] = c.inference_sigmas;
  j["files"] = {{"train", "train.bin"}, {"val", "val.bin"}, {"test", "test.bin"}};
  json inf = json::array();
  for (const auto& s : inference)
    inf.push_back({{"file", s.file}, {"sigma", s.sigma}, {"count", s.count}, {"length", s.length}});
  j["inference"] = inf;
  return j.dump(2) + "\n";
}

DatasetManifest DatasetManifest::from_json(const std::string& text) {
  DatasetManifest m;
  try {
    const json j = json::parse(text);
    m.format_version = j.at("format_version").get<std::uint32_t>();
    if (m.format_version != kFormatVersion)
      throw IoError("unsupported manifest format version " + std::to_string(m.format_version));
    auto& c = m.config;
    c.seed = j.at("generator_seed").get<std::uint64_t>();
    c.length = j.at("sequence_length").get<std::size_t>();
    c.dt = j.at("dt").get<double>();
    c.train_sigma = j.at("train_sigma").get<double>();
    c.num_sequences = j.at("total_sequences").get<std::size_t>();
    c.train_fraction = j.at("split_fractions").at("train").get<double>();
    c.val_fraction = j.at("split_fractions").at("val").get<double>();
    c.test_fraction = j.at("split_fractions").at("test").get<double>();
    m.counts.train = j.at("counts").at("train").get<std::size_t>();
    m.counts.val = j.at("counts").at("val").get<std::size_t>();
    m.counts.test = j.at("counts").at("test").get<std::size_t>();
    c.bias_range = j.at("bias_range").get<double>();
    c.velocity_range = j.at("velocity_range").get<double>();
    c.position_range = j.at("position_range").get<double>();
    c.tolerance = j.at("integrator_tolerance").get<double>();
    c.num_inference = j.at("inference_count").get<std::size_t>();
    c.inference_length = j.at("inference_length").get<std::size_t>();
    c.inference_sigmas = j.at("inference_sigmas").get<std::vector<double>>();
    for (const auto& s : j.at("inference"))
      m.inference.push_back({s.at("file").get<std::string>(), s.at("sigma").get<double>(),
                             s.at("count").get<std::size_t>(), s.at("length").get<std::size_t>()});
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::vector<Sequence> generate_sequences(const SimConfig& cfg, std::uint64_t master,
                                         std::uint64_t stream, std::size_t first,
                                         std::size_t count, std::size_t threads) {
  std::vector<Sequence> out(count);
  parallel_for(count, threads, [&](std::size_t i) {
    const std::uint64_t index = first + i;
    out[i] = generate_sequence(cfg, derive_seed(master, stream, index));
    out[i].meta.index = index;
  });
  return out;
}

DatasetManifest generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& dir) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());

  DatasetManifest manifest;
  manifest.config = cfg;
  manifest.counts = split_counts(cfg.num_sequences, cfg.train_fraction, cfg.val_fraction);

  const auto sim = cfg.sim_config(cfg.length, cfg.train_sigma);
  const auto& n = manifest.counts;
  write_sequences(dir / "train.bin",
                  generate_sequences(sim, cfg.seed, kStreamSplits, 0, n.train, cfg.threads));
  write_sequences(dir / "val.bin",
                  generate_sequences(sim, cfg.seed, kStreamSplits, n.train, n.val, cfg.threads));
  write_sequences(dir / "test.bin", generate_sequences(sim, cfg.seed, kStreamSplits,
                                                       n.train + n.val, n.test, cfg.threads));

  if (cfg.num_inference > 0) {
    for (std::size_t s = 0; s < cfg.inference_sigmas.size(); ++s) {
      const double sigma = cfg.inference_sigmas[s];
      InferenceSet set{inference_file_name(sigma), sigma, cfg.num_inference, cfg.inference_length};
      write_sequences(dir / set.file,
                      generate_sequences(cfg.sim_config(cfg.inference_length, sigma), cfg.seed,
                                         inference_stream(s), 0, cfg.num_inference, cfg.threads));
      manifest.inference.push_back(set);
    }
  }

  io::write_file_atomic(dir / "manifest.json", manifest.to_json());
  return manifest;
}

void write_sequences(const std::filesystem::path& path, const std::vector<Sequence>& seqs) {
  std::ostringstream os;
  const std::uint64_t m = seqs.empty() ? 0 : seqs.front().length();
  const double dt = seqs.empty() ? 0.0 : seqs.front().meta.dt;
  const double sigma = seqs.empty() ? 0.0 : seqs.front().meta.sigma;

  io::write_bytes(os, kSequenceMagic);
  io::write_u32(os, kSequenceVersion);
  io::write_u32(os, 0);
  io::write_u64(os, seqs.size());
  io::write_u64(os, m);
  io::write_f64(os, dt);
  io::write_f64(os, sigma);

  for (const auto& seq : seqs) {
    if (seq.length() != m || seq.states.size() != m + 1 || seq.velocities.size() != m)
      throw ValidationError("write_sequences: inconsistent sequence lengths for " + path.string());
    io::write_u64(os, record_payload_bytes(m));
    io::write_u64(os, seq.meta.seed);
    io::write_u64(os, seq.meta.index);
    for (const auto& x : seq.states) write_vec(os, x.embedded());
    for (const auto& u : seq.velocities) {
      write_vec(os, u.omega);
      write_vec(os, u.v);
    }
    for (const auto& y : seq.measurements) write_vec(os, y.embedded());
  }
  io::write_file_atomic(path, os.str());
}

std::vector<Sequence> read_sequences(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open sequence file " + path.string());
  try {
    if (io::read_bytes(is, kSequenceMagic.size()) != kSequenceMagic)
      throw IoError("bad magic");
    const auto version = io::read_u32(is);
    if (version != kSequenceVersion) throw IoError("unsupported version " + std::to_string(version));
    io::read_u32(is);
    const auto count = io::read_u64(is);
    const auto m = io::read_u64(is);
    const double dt = io::read_f64(is);
    const double sigma = io::read_f64(is);

    std::vector<Sequence> seqs(count);
    for (auto& seq : seqs) {
      if (io::read_u64(is) != record_payload_bytes(m)) throw IoError("bad record frame");
      seq.meta.seed = io::read_u64(is);
      seq.meta.index = io::read_u64(is);
      seq.meta.dt = dt;
      seq.meta.sigma = sigma;
      seq.states.resize(m + 1);
      for (auto& x : seq.states) {
        const auto e = read_vec<Vec18>(is);
        x.R = unembed(e.head<9>());
        x.p = e.segment<3>(9);
        x.bias_omega = e.segment<3>(12);
        x.bias_v = e.segment<3>(15);
      }
      seq.velocities.resize(m);
      for (auto& u : seq.velocities) {
        u.omega = read_vec<Vec3>(is);
        u.v = read_vec<Vec3>(is);
      }
      seq.measurements.resize(m);
      for (auto& y : seq.measurements) {
        const auto e = read_vec<Vec18>(is);
        y.R = Eigen::Map<const Mat3>(e.data());
        y.p = e.segment<3>(9);
        y.omega = e.segment<3>(12);
        y.v = e.segment<3>(15);
      }
    }
    return seqs;
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

DatasetManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return DatasetManifest::from_json(ss.str());
  } catch (const IoError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset d;
  d.manifest = read_manifest(dir);
  d.train = read_sequences(dir / "train.bin");
  d.val = read_sequences(dir / "val.bin");
  d.test = read_sequences(dir / "test.bin");
  return d;
}

}  // namespace lgobs
