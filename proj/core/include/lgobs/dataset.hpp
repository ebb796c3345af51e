#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lgobs/sim.hpp"

namespace lgobs {

/// Dataset generation parameters.
struct DatasetConfig {
  std::size_t num_sequences = 20000;  // N, split into train/val/test
  std::size_t length = 100;           // M
  double dt = 0.01;
  double train_sigma = 0.0;  // noise on the train/val/test measurements
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  double test_fraction = 0.1;
  std::uint64_t seed = 1;

  std::size_t num_inference = 1000;
  std::size_t inference_length = 1000;
  std::vector<double> inference_sigmas = {0.1};

  double bias_range = 10.0;
  double velocity_range = 1.0;
  double position_range = 1.0;
  double tolerance = 1e-10;

  std::size_t threads = 1;

  /// Throws ValidationError on inconsistent values.
  void validate() const;
  SimConfig sim_config(std::size_t len, double sigma) const;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
};

/// round(N * train_fraction), round(N * val_fraction), remainder.
SplitCounts split_counts(std::size_t n, double train_fraction, double val_fraction);

struct InferenceSet {
  std::string file;
  double sigma = 0.0;
  std::size_t count = 0;
  std::size_t length = 0;
};

struct DatasetManifest {
  static constexpr std::uint32_t kFormatVersion = 1;

  std::uint32_t format_version = kFormatVersion;
  DatasetConfig config;
  SplitCounts counts;
  std::vector<InferenceSet> inference;

  std::string to_json() const;
  static DatasetManifest from_json(const std::string& text);
};

/// Stream ids for derive_seed(); each split and inference set draws from its
/// own substream of the master seed.
inline constexpr std::uint64_t kStreamSplits = 0;
inline std::uint64_t inference_stream(std::size_t set_index) { return 1000 + set_index; }

/// File name for an inference set, e.g. "infer_sigma_0.1.bin".
std::string inference_file_name(double sigma);

/// Generates `count` sequences with seeds derive_seed(master, stream, first + i).
std::vector<Sequence> generate_sequences(const SimConfig& cfg, std::uint64_t master,
                                         std::uint64_t stream, std::size_t first,
                                         std::size_t count, std::size_t threads);

/// Writes manifest.json, train.bin, val.bin, test.bin and one
/// infer_sigma_<s>.bin per inference sigma into `dir`.
DatasetManifest generate_dataset(const DatasetConfig& cfg, const std::filesystem::path& dir);

/// Sequence file I/O. See README for the byte layout.
void write_sequences(const std::filesystem::path& path, const std::vector<Sequence>& seqs);
std::vector<Sequence> read_sequences(const std::filesystem::path& path);

struct Dataset {
  DatasetManifest manifest;
  std::vector<Sequence> train;
  std::vector<Sequence> val;
  std::vector<Sequence> test;
};

DatasetManifest read_manifest(const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace lgobs
