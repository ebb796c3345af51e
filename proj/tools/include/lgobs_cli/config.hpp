#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "lgobs/dataset.hpp"
#include "lgobs/eval.hpp"
#include "lgobs/gradcheck.hpp"
#include "lgobs/training.hpp"

namespace lgobs::cli {

enum class Command { Generate, Train, Evaluate, Sweep, Gradcheck };

std::string command_name(Command c);

enum class Source { Default, Preset, File, Flag };

std::string source_name(Source s);

/// Name of the environment variable holding the default config file path.
inline constexpr const char* kConfigEnv = "LGOBS_CONFIG";

/// Merged settings of one invocation. Layers, lowest first: built-in
/// defaults, preset, config file, command-line flags.
struct RunConfig {
  std::string preset;  // empty, "desk" or "paper"
  std::size_t threads = 1;

  // [data]
  std::filesystem::path data_dir = "data";
  std::size_t n = 2000;
  std::size_t m = 50;
  double dt = 0.01;
  double train_sigma = 0.0;
  double train_fraction = 0.8;
  double val_fraction = 0.1;
  std::uint64_t data_seed = 1;
  std::size_t inference_sequences = 100;
  std::size_t inference_length = 1000;
  std::vector<double> inference_sigmas = {0.1};

  // [train]
  double lr = 3e-4;
  double weight_decay = 0.1;
  std::size_t batch_size = 64;
  std::size_t max_iters = 30;
  double clip_norm = 10.0;
  std::size_t hidden = 64;
  std::uint64_t train_seed = 1;
  std::filesystem::path out_dir = "runs/train";

  // [eval]
  std::filesystem::path checkpoint = "runs/train/best.ckpt";
  std::filesystem::path report_dir = "runs/report";
  double eval_sigma = 0.1;
  std::size_t skip = 10;

  // [sweep]
  std::vector<double> sweep_sigmas = {0.1, 0.2, 0.3, 0.4, 0.5};
  std::size_t sweep_sequences = 100;
  std::size_t sweep_length = 1000;
  std::uint64_t sweep_seed = 7;

  // [gradcheck]
  std::size_t gc_hidden = 4;
  std::size_t gc_length = 3;
  std::uint64_t gc_seed = 1;
  double gc_step = 1e-5;
  double gc_tolerance = 1e-4;
  double gc_floor = 1e-6;
  double gc_corrupt = 0.0;

  /// Source of every field, keyed "section.key".
  std::map<std::string, Source> provenance;

  void validate(Command cmd) const;

  DatasetConfig dataset() const;
  TrainConfig training() const;
  SweepConfig sweep() const;
  GradCheckConfig gradcheck() const;
};

/// One configurable field: where it lives in the file, which flag sets it
/// and for which commands.
struct Field {
  std::string section;
  std::string key;
  std::string flag;  // without leading dashes
  std::string help;
  std::string type;  // placeholder shown in --help
  std::vector<Command> commands;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;

  std::string id() const { return section + "." + key; }
  bool used_by(Command c) const;
};

const std::vector<Field>& fields();

/// Values of a preset, as "section.key" -> text. Throws ValidationError for
/// an unknown name.
const std::map<std::string, std::string>& preset_values(const std::string& name);

/// Key/value pairs of an INI file as "section.key" -> text. Unknown keys are
/// rejected.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::string> preset;
  std::map<std::string, std::string> flags;  // "section.key" -> text
};

/// Applies defaults, preset (flag beats file), file and flags in that order.
RunConfig resolve(const std::optional<std::filesystem::path>& config_file,
                  const Overrides& overrides);

/// INI rendering of the fields used by `cmd`, each annotated with its source.
/// The output can be fed back through --config.
void print_effective(std::ostream& os, const RunConfig& cfg, Command cmd);

}  // namespace lgobs::cli
