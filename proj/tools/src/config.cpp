#include "lgobs_cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <iomanip>
#include <sstream>

#include "lgobs/errors.hpp"

namespace lgobs::cli {

namespace {

using C = Command;
const std::vector<Command> kAll = {C::Generate, C::Train, C::Evaluate, C::Sweep, C::Gradcheck};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string format(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

template <class T>
T parse_integer(const std::string& key, const std::string& text) {
  T v{};
  const auto s = trim(text);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ValidationError(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

double parse_real(const std::string& key, const std::string& text) {
  const auto s = trim(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (s.empty() || used != s.size())
    throw ValidationError(key + ": expected a number, got '" + text + "'");
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string item;
  while (std::getline(is, item, ',')) out.push_back(parse_real(key, item));
  if (out.empty()) throw ValidationError(key + ": expected a comma-separated list of numbers");
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format(v[i]);
  return s;
}

template <class T>
Field integer(std::string section, std::string key, std::string flag, std::string help,
              std::vector<Command> cmds, T RunConfig::*member) {
  const std::string id = section + "." + key;
  return {std::move(section), std::move(key), std::move(flag), std::move(help), "UINT", std::move(cmds),
          [member, id](RunConfig& c, const std::string& t) { c.*member = parse_integer<T>(id, t); },
          [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

Field real(std::string section, std::string key, std::string flag, std::string help,
           std::vector<Command> cmds, double RunConfig::*member) {
  const std::string id = section + "." + key;
  return {std::move(section), std::move(key), std::move(flag), std::move(help), "FLOAT", std::move(cmds),
          [member, id](RunConfig& c, const std::string& t) { c.*member = parse_real(id, t); },
          [member](const RunConfig& c) { return format(c.*member); }};
}

Field list(std::string section, std::string key, std::string flag, std::string help,
           std::vector<Command> cmds, std::vector<double> RunConfig::*member) {
  const std::string id = section + "." + key;
  return {std::move(section), std::move(key), std::move(flag), std::move(help), "LIST", std::move(cmds),
          [member, id](RunConfig& c, const std::string& t) { c.*member = parse_list(id, t); },
          [member](const RunConfig& c) { return join(c.*member); }};
}

Field path(std::string section, std::string key, std::string flag, std::string help,
           std::vector<Command> cmds, std::filesystem::path RunConfig::*member) {
  const std::string id = section + "." + key;
  return {std::move(section), std::move(key), std::move(flag), std::move(help), "PATH", std::move(cmds),
          [member, id](RunConfig& c, const std::string& t) {
            if (trim(t).empty()) throw ValidationError(id + ": empty path");
            c.*member = trim(t);
          },
          [member](const RunConfig& c) { return (c.*member).string(); }};
}

std::vector<Field> build_fields() {
  using R = RunConfig;
  return {
      integer("run", "threads", "threads", "worker threads; 1 is bitwise reproducible", kAll,
              &R::threads),

      path("data", "dir", "data", "dataset directory", {C::Generate, C::Train, C::Evaluate},
           &R::data_dir),
      integer("data", "n", "n", "number of sequences N", {C::Generate}, &R::n),
      integer("data", "m", "m", "sequence length M", {C::Generate}, &R::m),
      real("data", "dt", "dt", "sampling interval [s]", {C::Generate, C::Sweep}, &R::dt),
      real("data", "train_sigma", "train-sigma", "noise on train/val/test measurements",
           {C::Generate}, &R::train_sigma),
      real("data", "train_fraction", "train-fraction", "share of N used for training",
           {C::Generate}, &R::train_fraction),
      real("data", "val_fraction", "val-fraction", "share of N used for validation",
           {C::Generate}, &R::val_fraction),
      integer("data", "seed", "seed", "master seed of the dataset", {C::Generate}, &R::data_seed),
      integer("data", "inference_sequences", "inference-sequences",
              "sequences per inference set", {C::Generate}, &R::inference_sequences),
      integer("data", "inference_length", "inference-length", "length of inference sequences",
              {C::Generate}, &R::inference_length),
      list("data", "inference_sigmas", "inference-sigmas", "noise levels of the inference sets",
           {C::Generate}, &R::inference_sigmas),

      real("train", "lr", "lr", "AdamW learning rate", {C::Train}, &R::lr),
      real("train", "weight_decay", "weight-decay", "AdamW decoupled weight decay", {C::Train},
           &R::weight_decay),
      integer("train", "batch_size", "batch-size", "sequences per mini-batch", {C::Train},
              &R::batch_size),
      integer("train", "max_iters", "max-iters", "passes over the training split", {C::Train},
              &R::max_iters),
      real("train", "clip_norm", "clip-norm", "global gradient-norm clip, 0 disables",
           {C::Train}, &R::clip_norm),
      integer("train", "hidden", "h", "GRU hidden size H", {C::Train}, &R::hidden),
      integer("train", "seed", "seed", "initialization and shuffling seed", {C::Train},
              &R::train_seed),
      path("train", "out", "out", "checkpoint and history directory", {C::Train}, &R::out_dir),

      path("eval", "checkpoint", "checkpoint", "model checkpoint", {C::Evaluate, C::Sweep},
           &R::checkpoint),
      path("eval", "report", "report", "report output directory", {C::Evaluate, C::Sweep},
           &R::report_dir),
      real("eval", "sigma", "sigma", "inference set to evaluate, by noise level", {C::Evaluate},
           &R::eval_sigma),
      integer("eval", "skip", "skip", "leading epochs excluded from statistics",
              {C::Evaluate, C::Sweep}, &R::skip),

      list("sweep", "sigmas", "sigmas", "noise levels", {C::Sweep}, &R::sweep_sigmas),
      integer("sweep", "sequences", "sequences", "fresh sequences per noise level", {C::Sweep},
              &R::sweep_sequences),
      integer("sweep", "length", "length", "length of sweep sequences", {C::Sweep},
              &R::sweep_length),
      integer("sweep", "seed", "seed", "master seed of the sweep sequences", {C::Sweep},
              &R::sweep_seed),

      integer("gradcheck", "hidden", "h", "hidden size", {C::Gradcheck}, &R::gc_hidden),
      integer("gradcheck", "length", "m", "sequence length", {C::Gradcheck}, &R::gc_length),
      integer("gradcheck", "seed", "seed", "seed", {C::Gradcheck}, &R::gc_seed),
      real("gradcheck", "step", "step", "central-difference step", {C::Gradcheck}, &R::gc_step),
      real("gradcheck", "tolerance", "tolerance", "maximum relative error", {C::Gradcheck},
           &R::gc_tolerance),
      real("gradcheck", "floor", "floor", "magnitude below which errors are absolute",
           {C::Gradcheck}, &R::gc_floor),
      real("gradcheck", "corrupt", "corrupt", "test hook: offset added to one analytic entry",
           {C::Gradcheck}, &R::gc_corrupt),
  };
}

const Field* find_field(const std::string& id) {
  for (const auto& f : fields())
    if (f.id() == id) return &f;
  return nullptr;
}

void apply(RunConfig& cfg, const std::map<std::string, std::string>& values, Source src) {
  for (const auto& [id, text] : values) {
    const Field* f = find_field(id);
    if (!f) throw ValidationError("unknown configuration key '" + id + "'");
    f->set(cfg, text);
    cfg.provenance[id] = src;
  }
}

// Drops a trailing "; comment" or "# comment" preceded by whitespace.
std::string strip_comment(const std::string& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if ((v[i] == ';' || v[i] == '#') && (v[i - 1] == ' ' || v[i - 1] == '\t'))
      return trim(v.substr(0, i));
  return trim(v);
}

}  // namespace

std::string command_name(Command c) {
  switch (c) {
    case C::Generate: return "generate";
    case C::Train: return "train";
    case C::Evaluate: return "evaluate";
    case C::Sweep: return "sweep";
    case C::Gradcheck: return "gradcheck";
  }
  return "?";
}

std::string source_name(Source s) {
  switch (s) {
    case Source::Default: return "default";
    case Source::Preset: return "preset";
    case Source::File: return "file";
    case Source::Flag: return "flag";
  }
  return "?";
}

bool Field::used_by(Command c) const {
  for (auto x : commands)
    if (x == c) return true;
  return false;
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = build_fields();
  return f;
}

const std::map<std::string, std::string>& preset_values(const std::string& name) {
  static const std::map<std::string, std::map<std::string, std::string>> presets = {
      {"desk",
       {{"data.n", "2000"},
        {"data.m", "50"},
        {"train.hidden", "64"},
        {"data.inference_sequences", "100"},
        {"sweep.sequences", "100"}}},
      {"paper",
       {{"data.n", "20000"},
        {"data.m", "100"},
        {"train.hidden", "512"},
        {"data.inference_sequences", "1000"},
        {"sweep.sequences", "1000"}}},
  };
  const auto it = presets.find(name);
  if (it == presets.end())
    throw ValidationError("unknown preset '" + name + "' (expected desk or paper)");
  return it->second;
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& file) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(file.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ValidationError("config file " + file.string() + ": " + e.message() +
                          (e.line() ? " (line " + std::to_string(e.line()) + ")" : ""));
  }
  std::map<std::string, std::string> out;
  for (const auto& [section, body] : tree) {
    if (body.empty())
      throw ValidationError("config file " + file.string() + ": key '" + section +
                            "' outside of a section");
    for (const auto& [key, value] : body) {
      const std::string id = section + "." + key;
      if (id != "run.preset" && !find_field(id))
        throw ValidationError("config file " + file.string() + ": unknown key '" + id + "'");
      out[id] = strip_comment(value.data());
    }
  }
  return out;
}

RunConfig resolve(const std::optional<std::filesystem::path>& config_file,
                  const Overrides& overrides) {
  RunConfig cfg;
  for (const auto& f : fields()) cfg.provenance[f.id()] = Source::Default;

  std::map<std::string, std::string> file_values;
  if (config_file) file_values = read_config_file(*config_file);

  std::optional<std::string> preset = overrides.preset;
  if (!preset) {
    if (const auto it = file_values.find("run.preset"); it != file_values.end()) preset = it->second;
  }
  file_values.erase("run.preset");
  if (preset && !preset->empty()) {
    apply(cfg, preset_values(*preset), Source::Preset);
    cfg.preset = *preset;
  }
  apply(cfg, file_values, Source::File);
  apply(cfg, overrides.flags, Source::Flag);
  return cfg;
}

void RunConfig::validate(Command cmd) const {
  auto fail = [](const std::string& m) { throw ValidationError(m); };
  if (threads == 0) fail("run.threads must be at least 1");
  switch (cmd) {
    case C::Generate:
      dataset().validate();
      break;
    case C::Train:
      training().validate();
      break;
    case C::Evaluate:
      if (!(eval_sigma >= 0.0)) fail("eval.sigma must be non-negative");
      break;
    case C::Sweep:
      if (sweep_sequences == 0) fail("sweep.sequences must be positive");
      if (sweep_length == 0) fail("sweep.length must be positive");
      if (skip >= sweep_length) fail("eval.skip must be smaller than sweep.length");
      if (!(dt > 0.0)) fail("data.dt must be positive");
      for (double s : sweep_sigmas)
        if (!(s >= 0.0)) fail("sweep.sigmas must be non-negative");
      break;
    case C::Gradcheck:
      if (gc_hidden == 0 || gc_length == 0) fail("gradcheck.hidden and gradcheck.length must be positive");
      if (!(gc_step > 0.0) || !(gc_tolerance > 0.0) || !(gc_floor >= 0.0))
        fail("gradcheck.step and gradcheck.tolerance must be positive");
      break;
  }
}

DatasetConfig RunConfig::dataset() const {
  DatasetConfig d;
  d.num_sequences = n;
  d.length = m;
  d.dt = dt;
  d.train_sigma = train_sigma;
  d.train_fraction = train_fraction;
  d.val_fraction = val_fraction;
  d.test_fraction = 1.0 - train_fraction - val_fraction;
  d.seed = data_seed;
  d.num_inference = inference_sequences;
  d.inference_length = inference_length;
  d.inference_sigmas = inference_sigmas;
  d.threads = threads;
  return d;
}

TrainConfig RunConfig::training() const {
  TrainConfig t;
  t.optim.lr = lr;
  t.optim.weight_decay = weight_decay;
  t.batch_size = batch_size;
  t.max_iters = max_iters;
  t.clip_norm = clip_norm;
  t.hidden = static_cast<Index>(hidden);
  t.seed = train_seed;
  t.threads = threads;
  t.checkpoint_dir = out_dir;
  return t;
}

SweepConfig RunConfig::sweep() const {
  SweepConfig s;
  s.sequences = sweep_sequences;
  s.length = sweep_length;
  s.skip = skip;
  s.seed = sweep_seed;
  s.threads = threads;
  s.sim.dt = dt;
  return s;
}

GradCheckConfig RunConfig::gradcheck() const {
  GradCheckConfig g;
  g.hidden = static_cast<Index>(gc_hidden);
  g.length = gc_length;
  g.seed = gc_seed;
  g.step = gc_step;
  g.tolerance = gc_tolerance;
  g.floor = gc_floor;
  g.corrupt = gc_corrupt;
  return g;
}

void print_effective(std::ostream& os, const RunConfig& cfg, Command cmd) {
  os << "# effective configuration: " << command_name(cmd) << '\n';
  os << "[run]\n";
  if (!cfg.preset.empty()) os << "preset = " << cfg.preset << '\n';
  std::string section = "run";
  for (const auto& f : fields()) {
    if (!f.used_by(cmd)) continue;
    if (f.section != section) {
      section = f.section;
      os << '[' << section << "]\n";
    }
    std::string line = f.key + " = " + f.get(cfg);
    line.resize(std::max<std::size_t>(line.size() + 1, 40), ' ');
    os << line << "; " << source_name(cfg.provenance.at(f.id())) << '\n';
  }
  os << "# end configuration\n";
}

}  // namespace lgobs::cli
