#include "vcell/pipeline/config.hpp"

#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

namespace vcell::pipeline {

namespace pt = boost::property_tree;

std::string to_string(TrainMode m) { return m == TrainMode::Joint ? "joint" : "stagewise"; }

TrainMode parse_mode(const std::string& s) {
  if (s == "joint") return TrainMode::Joint;
  if (s == "stagewise") return TrainMode::Stagewise;
  throw ConfigError("unknown training mode '" + s + "' (expected joint or stagewise)");
}

namespace {

std::string fmt(double v) {
  std::ostringstream out;
  out << std::setprecision(17) << v;
  return out.str();
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::ostringstream out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out << ',';
    if constexpr (std::is_floating_point_v<T>) {
      out << fmt(xs[i]);
    } else {
      out << xs[i];
    }
  }
  return out.str();
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    const auto b = item.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
  }
  return out;
}

/// Binds INI keys to fields; the same table drives parsing and echoing.
class Binder {
 public:
  void bind(const std::string& key, std::string& v) {
    fields_.push_back({key, [&v] { return v; }, [&v](const std::string& s) { v = s; }});
  }
  void bind(const std::string& key, double& v) {
    fields_.push_back({key, [&v] { return fmt(v); }, [&v, key](const std::string& s) { v = to_double(key, s); }});
  }
  void bind(const std::string& key, Index& v) {
    fields_.push_back({key, [&v] { return std::to_string(v); }, [&v, key](const std::string& s) { v = to_int(key, s); }});
  }
  void bind(const std::string& key, std::uint64_t& v) {
    fields_.push_back({key, [&v] { return std::to_string(v); },
                       [&v, key](const std::string& s) { v = static_cast<std::uint64_t>(to_int(key, s)); }});
  }
  void bind(const std::string& key, unsigned& v) {
    fields_.push_back({key, [&v] { return std::to_string(v); },
                       [&v, key](const std::string& s) { v = static_cast<unsigned>(to_int(key, s)); }});
  }
  void bind(const std::string& key, std::vector<double>& v) {
    fields_.push_back({key, [&v] { return join(v); }, [&v, key](const std::string& s) {
                         v.clear();
                         for (const auto& x : split(s)) v.push_back(to_double(key, x));
                       }});
  }
  void bind(const std::string& key, std::vector<std::string>& v) {
    fields_.push_back({key, [&v] { return join(v); }, [&v](const std::string& s) { v = split(s); }});
  }
  template <typename E>
  void bind_enum(const std::string& key, E& v, std::string (*show)(E), E (*parse)(const std::string&)) {
    fields_.push_back({key, [&v, show] { return show(v); }, [&v, parse](const std::string& s) { v = parse(s); }});
  }

  struct Field {
    std::string key;
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
  };
  std::vector<Field> fields_;

 private:
  static double to_double(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "': expected a number, got '" + s + "'");
  }
  static Index to_int(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used == s.size()) return static_cast<Index>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError("config key '" + key + "': expected an integer, got '" + s + "'");
  }
};

std::string show_strategy(datastore::Strategy s) { return datastore::to_string(s); }
std::string show_variant(transport::JitVariant v) { return transport::to_string(v); }
std::string show_pooling(transport::PoolingMode m) { return transport::to_string(m); }
std::string show_prior(transport::PriorMode::Kind k) { return transport::to_string(k); }
std::string show_mode(TrainMode m) { return to_string(m); }

std::vector<std::pair<std::string, Binder>> sections(RunConfig& c) {
  std::vector<std::pair<std::string, Binder>> out;
  {
    Binder b;
    b.bind("dataset", c.data.dataset);
    b.bind("out", c.data.out);
    b.bind("holdout", c.data.holdout);
    b.bind_enum("strategy", c.data.strategy, &show_strategy, &datastore::parse_strategy);
    out.emplace_back("data", std::move(b));
  }
  {
    auto& s = c.synth;
    Binder b;
    b.bind("genes", s.genes);
    b.bind("cell_types", s.cell_types);
    b.bind("perturbations", s.perturbations);
    b.bind("batches", s.batches);
    b.bind("cells_per_group", s.cells_per_group);
    b.bind("control_cells", s.control_cells);
    b.bind("de_genes", s.de_genes);
    b.bind("delta", s.delta);
    b.bind("dispersion", s.dispersion);
    b.bind("batch_scale", s.batch_scale);
    b.bind("base_mean", s.base_mean);
    b.bind("base_sd", s.base_sd);
    b.bind("cell_type_sd", s.cell_type_sd);
    b.bind("seed", s.seed);
    out.emplace_back("synth", std::move(b));
  }
  {
    Binder b;
    b.bind("target_sum", c.prepare.target_sum);
    b.bind("scale", c.prepare.scale);
    b.bind("hvg", c.prepare.hvg);
    out.emplace_back("prepare", std::move(b));
  }
  {
    auto& e = c.model.encoder;
    Binder b;
    b.bind("tokens", e.tokens);
    b.bind("cell_width", e.cell_width);
    b.bind("phi_width", e.phi_width);
    b.bind("summary_width", e.summary_width);
    b.bind("latent_width", e.latent_width);
    b.bind("blocks", e.encoder_blocks);
    b.bind("heads", e.heads);
    b.bind("hidden", e.hidden);
    b.bind("lambda_mmd", e.lambda_mmd);
    b.bind("bandwidths", e.bandwidths);
    out.emplace_back("encoder", std::move(b));
  }
  {
    auto& t = c.model.transport;
    Binder b;
    b.bind("condition_width", t.condition_width);
    b.bind("blocks", t.blocks);
    b.bind("heads", t.heads);
    b.bind("hidden", t.hidden);
    b.bind("time_frequencies", t.time_frequencies);
    b.bind_enum("pooling", t.pooling, &show_pooling, &transport::parse_pooling);
    b.bind_enum("variant", t.variant, &show_variant, &transport::parse_variant);
    b.bind_enum("prior", t.prior.kind, &show_prior, &transport::parse_prior);
    b.bind("prior_mix", t.prior.mix);
    b.bind("mask_rate", t.prior.mask_rate);
    b.bind("steps", t.euler_steps);
    b.bind("lambda_flow", c.model.lambda_flow);
    out.emplace_back("transport", std::move(b));
  }
  {
    auto& t = c.train;
    Binder b;
    b.bind_enum("mode", t.mode, &show_mode, &parse_mode);
    b.bind("epochs", t.epochs);
    b.bind("steps_per_epoch", t.steps_per_epoch);
    b.bind("ae_epochs", t.ae_epochs);
    b.bind("sets", t.sets);
    b.bind("cells", t.cells);
    b.bind("seed", t.seed);
    b.bind("step_size", t.adam.step_size);
    b.bind("beta1", t.adam.beta1);
    b.bind("beta2", t.adam.beta2);
    b.bind("adam_eps", t.adam.eps);
    out.emplace_back("train", std::move(b));
  }
  {
    Binder b;
    b.bind("alpha", c.eval.alpha);
    b.bind("eps", c.eval.eps);
    b.bind("threads", c.eval.threads);
    out.emplace_back("eval", std::move(b));
  }
  return out;
}

}  // namespace

RunConfig default_config() {
  RunConfig c;
  c.model.encoder.genes = c.synth.genes;
  c.model.encoder.tokens = 2;
  c.model.encoder.cell_width = 32;
  c.model.encoder.phi_width = 16;
  c.model.encoder.summary_width = 16;
  c.model.encoder.latent_width = 16;
  c.model.encoder.encoder_blocks = 1;
  c.model.encoder.hidden = 64;
  c.model.transport.condition_width = 16;
  c.model.transport.blocks = 2;
  c.model.transport.hidden = 32;
  return c;
}

void RunConfig::validate() const {
  synth.validate();
  if (!(prepare.target_sum > 0.0) || !(prepare.scale > 0.0) || prepare.hvg < 0) {
    throw ConfigError("prepare: target_sum and scale must be positive, hvg >= 0");
  }
  if (train.epochs < 0 || train.steps_per_epoch < 1 || train.sets < 1 || train.cells < 1 || train.ae_epochs < 0) {
    throw ConfigError("train: epochs >= 0, steps_per_epoch, sets and cells >= 1 required");
  }
  if (train.mode == TrainMode::Stagewise && train.ae_epochs > train.epochs) {
    throw ConfigError("train: ae_epochs exceeds epochs");
  }
  if (!(train.adam.step_size > 0.0) || !(train.adam.beta1 >= 0.0 && train.adam.beta1 < 1.0) ||
      !(train.adam.beta2 >= 0.0 && train.adam.beta2 < 1.0) || !(train.adam.eps > 0.0)) {
    throw ConfigError("train: invalid optimizer settings");
  }
  if (!(eval.alpha > 0.0 && eval.alpha < 1.0) || !(eval.eps >= 0.0)) throw ConfigError("eval: invalid alpha or eps");
  for (const auto& h : data.holdout) {
    if (h.find('/') == std::string::npos) throw ConfigError("data.holdout entries are cell_type/perturbation: '" + h + "'");
  }
  transport::ModelConfig shape_free = model;
  shape_free.encoder.genes = model.encoder.tokens;
  shape_free.validate();
}

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig c = default_config();
  auto secs = sections(c);
  std::set<std::string> known_sections;
  for (auto& [name, binder] : secs) {
    known_sections.insert(name);
    auto sub = tree.get_child_optional(name);
    if (!sub) continue;
    std::set<std::string> known;
    for (auto& f : binder.fields_) {
      known.insert(f.key);
      if (auto v = sub->get_optional<std::string>(f.key)) f.set(*v);
    }
    for (const auto& kv : *sub) {
      if (!known.count(kv.first)) throw ConfigError("config: unknown key [" + name + "] " + kv.first);
    }
  }
  for (const auto& kv : tree) {
    if (!known_sections.count(kv.first)) throw ConfigError("config: unknown section [" + kv.first + "]");
  }
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string echo_config(const RunConfig& cfg) {
  RunConfig copy = cfg;
  std::ostringstream out;
  bool first = true;
  for (auto& [name, binder] : sections(copy)) {
    if (!first) out << '\n';
    first = false;
    out << '[' << name << "]\n";
    for (auto& f : binder.fields_) out << f.key << " = " << f.get() << '\n';
  }
  return out.str();
}

bool operator==(const RunConfig& a, const RunConfig& b) {
  // the echo covers every configurable field
  return echo_config(a) == echo_config(b);
}

}  // namespace vcell::pipeline
