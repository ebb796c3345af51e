#include "lgobs_cli/commands.hpp"

#include <CLI11.hpp>
#include <iomanip>
#include <map>
#include <sstream>

#include "lgobs/checkpoint.hpp"
#include "lgobs/errors.hpp"

namespace lgobs::cli {

namespace {

std::string sigma_label(double sigma) {
  // "infer_sigma_0.1.bin" -> "sigma_0.1"
  const std::string f = inference_file_name(sigma);
  return f.substr(std::string("infer_").size(), f.size() - std::string("infer_.bin").size());
}

}  // namespace

void cmd_generate(const RunConfig& cfg, std::ostream& out) {
  const auto manifest = generate_dataset(cfg.dataset(), cfg.data_dir);
  out << "wrote " << cfg.data_dir.string() << ": train " << manifest.counts.train << ", val "
      << manifest.counts.val << ", test " << manifest.counts.test << " sequences of length "
      << manifest.config.length << '\n';
  for (const auto& set : manifest.inference)
    out << "  " << set.file << ": " << set.count << " sequences of length " << set.length
        << ", sigma " << set.sigma << '\n';
}

void cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto data = load_dataset(cfg.data_dir);
  const auto tc = cfg.training();
  if (tc.max_iters == 0)
    err << "warning: max_iters is 0; only the initial checkpoint is written\n";

  const auto result = train(data.train, data.val, tc, [&](const IterationReport& r) {
    out << "iter " << std::setw(4) << r.iteration << "  train " << std::setprecision(6)
        << r.train_loss << "  val " << r.val_loss << (r.improved ? "  *" : "") << '\n'
        << std::flush;
  });
  const auto& h = result.history;
  out << std::setprecision(6) << "best validation loss " << h.best_val_loss() << " at iteration "
      << h.best_iteration << " (initial " << h.initial_val_loss << ", ratio "
      << h.best_val_loss() / h.initial_val_loss << ")\n";
  out << "checkpoint " << (tc.checkpoint_dir / "best.ckpt").string() << '\n';
}

void cmd_evaluate(const RunConfig& cfg, std::ostream& out) {
  const auto ckpt = read_checkpoint(cfg.checkpoint);
  const auto file = cfg.data_dir / inference_file_name(cfg.eval_sigma);
  const auto seqs = read_sequences(file);
  if (seqs.empty()) throw ValidationError(file.string() + " holds no sequences");
  if (cfg.skip >= seqs.front().length())
    throw ValidationError("eval.skip must be smaller than the inference sequence length");

  const auto mc = monte_carlo(ckpt.params, seqs, cfg.skip, cfg.threads);
  const std::vector<SweepRow> rows{SweepRow::from_stats(cfg.eval_sigma, mc.mean)};
  const std::vector<LabeledTrace> traces{{sigma_label(cfg.eval_sigma), mc.first_epoch, mc.mean_trace}};
  render_report(rows, traces, cfg.report_dir);
  out << summary_table(rows);
  out << "report " << cfg.report_dir.string() << " (" << seqs.size() << " sequences, epochs "
      << mc.first_epoch << ".." << seqs.front().length() << ")\n";
}

void cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  const auto ckpt = read_checkpoint(cfg.checkpoint);
  const auto res = noise_sweep(ckpt.params, cfg.sweep_sigmas, cfg.sweep());
  std::vector<LabeledTrace> traces;
  for (std::size_t i = 0; i < res.rows.size(); ++i)
    traces.push_back({sigma_label(res.rows[i].sigma), res.details[i].first_epoch,
                      res.details[i].mean_trace});
  render_report(res.rows, traces, cfg.report_dir);
  out << summary_table(res.rows);
  out << "report " << cfg.report_dir.string() << '\n';
}

bool cmd_gradcheck(const RunConfig& cfg, std::ostream& out) {
  const auto rep = gradient_check(cfg.gradcheck());
  out << std::setprecision(6) << "parameters " << rep.parameters << ", max relative error "
      << rep.max_rel_error << " (tolerance " << cfg.gc_tolerance << ")\n";
  out << "worst: " << rep.worst_tensor << " flat index " << rep.worst_index << ", analytic "
      << rep.worst_analytic << ", numeric " << rep.worst_numeric << '\n';
  out << (rep.passed ? "PASS" : "FAIL") << '\n';
  return rep.passed;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::optional<std::string>& env_config) {
  CLI::App app{"Learned observer on SO(3) x R^9: data generation, training and evaluation",
               "lgobs"};
  app.require_subcommand(1);

  struct Sub {
    Command cmd;
    CLI::App* app;
    std::string config, preset;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  const std::vector<std::pair<Command, std::string>> descriptions = {
      {Command::Generate, "simulate trajectories and write a dataset directory"},
      {Command::Train, "train the observer on a dataset"},
      {Command::Evaluate, "Monte-Carlo error statistics on an inference set"},
      {Command::Sweep, "error statistics over a list of noise levels"},
      {Command::Gradcheck, "compare BPTT gradients with finite differences"},
  };
  std::vector<Sub> subs(descriptions.size());
  for (std::size_t i = 0; i < descriptions.size(); ++i) {
    auto& s = subs[i];
    s.cmd = descriptions[i].first;
    s.app = app.add_subcommand(command_name(s.cmd), descriptions[i].second);
    s.app->set_help_flag("--help", "print this help and exit");
    s.app->add_option("--config", s.config,
                      std::string("INI config file (default: $") + kConfigEnv + ")")
        ->type_name("PATH");
    s.app->add_option("--preset", s.preset, "desk or paper scale")
        ->type_name("NAME")
        ->check(CLI::IsMember({"desk", "paper"}));
    for (const auto& f : fields()) {
      if (!f.used_by(s.cmd)) continue;
      s.options[f.id()] =
          s.app->add_option("--" + f.flag, s.values[f.id()], f.help)->type_name(f.type);
    }
  }

  std::vector<std::string> argv_store{"lgobs"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitValidation;
  }

  const Sub* active = nullptr;
  for (const auto& s : subs)
    if (s.app->parsed()) active = &s;

  try {
    Overrides ov;
    if (!active->preset.empty()) ov.preset = active->preset;
    for (const auto& [id, opt] : active->options)
      if (opt->count() > 0) ov.flags[id] = active->values.at(id);

    std::optional<std::filesystem::path> config_file;
    if (!active->config.empty())
      config_file = active->config;
    else if (env_config && !env_config->empty())
      config_file = *env_config;
    if (config_file && !std::filesystem::is_regular_file(*config_file))
      throw ValidationError("config file " + config_file->string() + " not found");

    const RunConfig cfg = resolve(config_file, ov);
    cfg.validate(active->cmd);
    if (config_file) out << "# config file: " << config_file->string() << '\n';
    print_effective(out, cfg, active->cmd);

    switch (active->cmd) {
      case Command::Generate: cmd_generate(cfg, out); break;
      case Command::Train: cmd_train(cfg, out, err); break;
      case Command::Evaluate: cmd_evaluate(cfg, out); break;
      case Command::Sweep: cmd_sweep(cfg, out); break;
      case Command::Gradcheck:
        if (!cmd_gradcheck(cfg, out)) {
          err << "error: gradient check exceeded tolerance\n";
          return kExitRuntime;
        }
        break;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace lgobs::cli
