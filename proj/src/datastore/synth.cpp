#include "vcell/datastore/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

namespace vcell::datastore {

void SynthConfig::validate() const {
  if (genes < 1 || cell_types < 1 || perturbations < 1 || batches < 1 || cells_per_group < 1) {
    throw ConfigError("synth: genes, cell types, perturbations, batches and cells per group must be positive");
  }
  if (control_cells < 0) throw ConfigError("synth: control_cells must be >= 0");
  if (de_genes < 0 || de_genes > genes) {
    throw ConfigError("synth: de_genes (" + std::to_string(de_genes) + ") must lie in [0, genes=" +
                      std::to_string(genes) + "]");
  }
  if (!(delta >= 0.0)) throw ConfigError("synth: delta must be >= 0");
  if (!(dispersion >= 0.0) || !(batch_scale >= 0.0) || !(base_sd >= 0.0) || !(cell_type_sd >= 0.0)) {
    throw ConfigError("synth: spreads must be >= 0");
  }
}

namespace {

std::string label(const char* prefix, Index i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*ld", prefix, width, static_cast<long>(i));
  return buf;
}

int digits(Index n) { return n <= 10 ? 1 : static_cast<int>(std::ceil(std::log10(static_cast<double>(n)))); }

}  // namespace

SynthResult synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  SynthResult out;
  Dataset& ds = out.counts;
  for (Index g = 0; g < cfg.genes; ++g) ds.genes.push_back(label("gene", g, digits(cfg.genes)));
  for (Index c = 0; c < cfg.cell_types; ++c) ds.labels.cell_types.push_back(label("ct", c, 1));
  for (Index p = 0; p < cfg.perturbations; ++p) ds.labels.perturbations.push_back(label("pert", p, digits(cfg.perturbations)));
  for (Index b = 0; b < cfg.batches; ++b) ds.labels.batches.push_back(label("batch", b, 1));

  Eigen::VectorXd base(cfg.genes);
  for (auto& x : base) x = cfg.base_mean + cfg.base_sd * normal(rng);
  Tensor type_mean(cfg.cell_types, cfg.genes);
  for (Index c = 0; c < cfg.cell_types; ++c) {
    for (Index g = 0; g < cfg.genes; ++g) type_mean(c, g) = base(g) + cfg.cell_type_sd * normal(rng);
  }
  Tensor batch_offset(cfg.batches, cfg.genes);
  for (Index i = 0; i < batch_offset.size(); ++i) batch_offset(i) = cfg.batch_scale * normal(rng);

  Tensor shift = Tensor::Zero(cfg.perturbations, cfg.genes);
  std::vector<Index> genes(static_cast<std::size_t>(cfg.genes));
  for (Index p = 0; p < cfg.perturbations; ++p) {
    std::iota(genes.begin(), genes.end(), Index{0});
    std::shuffle(genes.begin(), genes.end(), rng);
    std::vector<Index> planted(genes.begin(), genes.begin() + cfg.de_genes);
    std::sort(planted.begin(), planted.end());
    for (Index g : planted) {
      const int sign = std::bernoulli_distribution(0.5)(rng) ? 1 : -1;
      shift(p, g) = sign * cfg.delta;
      out.truth.push_back({p, g, sign, cfg.delta});
    }
  }

  auto draw_cells = [&](Index n, const Eigen::RowVectorXd& log_mean) {
    Tensor x(n, cfg.genes);
    for (Index i = 0; i < n; ++i) {
      for (Index g = 0; g < cfg.genes; ++g) {
        const double rate = std::exp(log_mean(g) + cfg.dispersion * normal(rng));
        x(i, g) = static_cast<double>(std::poisson_distribution<long>(rate)(rng));
      }
    }
    return to_sparse(x);
  };

  const Index n_ctrl = cfg.control_cells > 0 ? cfg.control_cells : cfg.cells_per_group;
  for (Index c = 0; c < cfg.cell_types; ++c) {
    for (Index b = 0; b < cfg.batches; ++b) {
      const Eigen::RowVectorXd mean = type_mean.row(c) + batch_offset.row(b);
      ds.controls[{c, b}] = draw_cells(n_ctrl, mean);
      for (Index p = 0; p < cfg.perturbations; ++p) {
        ds.groups[{c, p, b}] = draw_cells(cfg.cells_per_group, mean + shift.row(p));
      }
    }
  }
  return out;
}

std::string truth_csv(const SynthResult& r) {
  std::ostringstream out;
  out << "perturbation,gene,sign,delta\n";
  for (const auto& e : r.truth) {
    out << r.counts.labels.perturbations[static_cast<std::size_t>(e.perturbation)] << ','
        << r.counts.genes[static_cast<std::size_t>(e.gene)] << ',' << e.sign << ',' << e.delta << '\n';
  }
  return out.str();
}

}  // namespace vcell::datastore
