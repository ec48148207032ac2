#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "vcell/celleval/report.hpp"
#include "vcell/pipeline/commands.hpp"

using namespace vcell;
using namespace vcell::pipeline;

namespace {

enum Exit { kOk = 0, kFailure = 1, kConfig = 2, kData = 3, kNumeric = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string variant;
  std::string pooling;
  std::string prior;
  std::optional<Index> steps;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "INI config file");
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--out", c.out, "Output directory or file");
}

void add_model_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--variant", c.variant, "JiT variant")->check(CLI::IsMember({"xx", "xv", "vx", "vv"}));
  cmd->add_option("--pooling", c.pooling, "Condition pooling")->check(CLI::IsMember({"mean", "token", "seed"}));
  cmd->add_option("--prior", c.prior, "Start distribution")
      ->check(CLI::IsMember({"control", "gaussmix", "maskctrl", "maskmix"}));
  cmd->add_option("--steps", c.steps, "Euler steps for displacement variants")->check(CLI::PositiveNumber);
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? default_config() : load_config(c.config);
  if (c.seed) {
    cfg.train.seed = *c.seed;
    cfg.synth.seed = *c.seed;
  }
  if (!c.variant.empty()) cfg.model.transport.variant = transport::parse_variant(c.variant);
  if (!c.pooling.empty()) cfg.model.transport.pooling = transport::parse_pooling(c.pooling);
  if (!c.prior.empty()) cfg.model.transport.prior.kind = transport::parse_prior(c.prior);
  if (c.steps) cfg.model.transport.euler_steps = *c.steps;
  if (!c.out.empty()) cfg.data.out = c.out;
  cfg.validate();
  return cfg;
}

void print_report(const celleval::MetricReport& r) {
  std::printf("%-16s", "perturbation");
  for (auto col : {celleval::kMSE, celleval::kMAE, celleval::kPDCorr, celleval::kDEOver, celleval::kDEPrec,
                   celleval::kLFCSpear, celleval::kDirAgr}) {
    std::printf(" %9s", celleval::column_names()[col].c_str());
  }
  std::printf("\n");
  auto line = [](const std::string& id, const celleval::MetricValues& v) {
    std::printf("%-16s", id.c_str());
    for (auto col : {celleval::kMSE, celleval::kMAE, celleval::kPDCorr, celleval::kDEOver, celleval::kDEPrec,
                     celleval::kLFCSpear, celleval::kDirAgr}) {
      std::printf(" %9.4f", v[col]);
    }
    std::printf("\n");
  };
  for (const auto& row : r.rows) line(row.id, row.values);
  line("MEAN", r.mean);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vcell: set-aware latent transport for perturbation response prediction"};
  app.require_subcommand(1);

  Common synth_opts;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic raw-count dataset with planted effects");
  add_common(synth, synth_opts);

  Common prep_opts;
  std::string prep_in;
  auto* prepare = app.add_subcommand("prepare", "Normalize, log-transform and select genes of a raw dataset");
  add_common(prepare, prep_opts);
  prepare->add_option("--in", prep_in, "Raw dataset directory")->required();

  Common train_opts;
  std::string train_data;
  auto* train = app.add_subcommand("train", "Train a model and write a run directory");
  add_common(train, train_opts);
  add_model_flags(train, train_opts);
  train->add_option("--data", train_data, "Prepared dataset directory (overrides data.dataset)");

  Common gen_opts;
  std::string gen_run, gen_data, gen_baseline;
  std::vector<std::string> gen_conditions;
  auto* generate = app.add_subcommand("generate", "Predict perturbed cells from matched controls");
  add_common(generate, gen_opts);
  generate->add_option("--steps", gen_opts.steps, "Euler steps for displacement variants")->check(CLI::PositiveNumber);
  generate->add_option("--run", gen_run, "Run directory")->required();
  generate->add_option("--data", gen_data, "Dataset providing controls and group sizes")->required();
  generate->add_option("--condition", gen_conditions, "cell_type/perturbation[/batch]; default: the run's holdout");
  generate->add_option("--baseline", gen_baseline, "none, control or trainmean")
      ->check(CLI::IsMember({"none", "control", "trainmean"}));

  Common eval_opts;
  std::string eval_pred, eval_truth, eval_ctrl;
  unsigned eval_threads = 0;
  auto* eval = app.add_subcommand("eval", "Score predicted shards against observed shards");
  add_common(eval, eval_opts);
  eval->add_option("--pred", eval_pred, "Predicted dataset")->required();
  eval->add_option("--truth", eval_truth, "Observed dataset")->required();
  eval->add_option("--ctrl", eval_ctrl, "Control dataset (default: the predicted dataset's control store)");
  eval->add_option("--threads", eval_threads, "Worker threads");

  Common report_opts;
  std::vector<std::string> report_runs;
  auto* report = app.add_subcommand("report", "Merge the reports of several runs into one table");
  add_common(report, report_opts);
  report->add_option("runs", report_runs, "Run directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (synth->parsed()) {
      const RunConfig cfg = resolve(synth_opts);
      const fs::path out = synth_opts.out.empty() ? "data/raw" : synth_opts.out;
      const auto m = cmd_synth(cfg, out);
      std::printf("wrote %zu groups and %zu control stores to %s\n", m.groups.size(), m.controls.size(),
                  out.string().c_str());
    } else if (prepare->parsed()) {
      const RunConfig cfg = resolve(prep_opts);
      const fs::path out = prep_opts.out.empty() ? "data/prepared" : prep_opts.out;
      const auto m = cmd_prepare(cfg, prep_in, out);
      std::printf("wrote %zu genes x %zu groups to %s\n", m.genes.size(), m.groups.size(), out.string().c_str());
    } else if (train->parsed()) {
      RunConfig cfg = resolve(train_opts);
      if (!train_data.empty()) cfg.data.dataset = train_data;
      const fs::path out = cfg.data.out;
      const auto rec = cmd_train(cfg, out, [](const EpochRecord& e) {
        std::printf("epoch %3ld %-9s L_MSE %.5f  L_MMD %.5f  L_flow %.5f  total %.5f  (%.1fs)\n",
                    static_cast<long>(e.epoch), e.phase.c_str(), e.mse, e.mmd, e.flow, e.total, e.seconds);
        std::fflush(stdout);
      });
      std::printf("checkpoint: %s\n", rec.checkpoint.c_str());
    } else if (generate->parsed()) {
      GenerateRequest req;
      req.conditions = gen_conditions;
      req.seed = gen_opts.seed.value_or(0);
      req.steps = gen_opts.steps.value_or(0);
      req.baseline = parse_baseline(gen_baseline);
      const fs::path out = gen_opts.out.empty() ? fs::path(gen_run) / "pred" : fs::path(gen_opts.out);
      const auto m = cmd_generate(gen_run, gen_data, out, req);
      std::printf("wrote %zu predicted groups to %s\n", m.groups.size(), out.string().c_str());
    } else if (eval->parsed()) {
      const RunConfig cfg = resolve(eval_opts);
      celleval::EvalConfig ec = cfg.eval;
      if (eval_threads > 0) ec.threads = eval_threads;
      const fs::path out = eval_opts.out.empty() ? "." : eval_opts.out;
      const auto r = cmd_eval(eval_pred, eval_truth, eval_ctrl.empty() ? eval_pred : eval_ctrl, out, ec);
      print_report(r);
    } else if (report->parsed()) {
      std::vector<fs::path> runs(report_runs.begin(), report_runs.end());
      std::vector<std::string> warnings;
      const fs::path out = report_opts.out.empty() ? "comparison.csv" : report_opts.out;
      const auto rows = cmd_report(runs, out, &warnings);
      for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
      for (const auto& r : rows) {
        std::printf("%-20s %s %-6s %-9s PDCorr %.4f DEOver %.4f\n", r.run.c_str(), r.variant.c_str(),
                    r.pooling.c_str(), r.prior.c_str(), r.mean[celleval::kPDCorr], r.mean[celleval::kDEOver]);
      }
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kNumeric;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const LookupError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const DimensionError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
