#pragma once

#include <string>
#include <vector>

#include "vcell/datastore/dataset.hpp"

namespace vcell::datastore {

struct SynthConfig {
  Index genes = 100;
  Index cell_types = 3;
  Index perturbations = 20;
  Index batches = 2;
  /// Perturbed cells per (cell type, perturbation, batch).
  Index cells_per_group = 256;
  /// Control cells per (cell type, batch); 0 means cells_per_group.
  Index control_cells = 0;
  Index de_genes = 10;
  double delta = 2.0;
  /// Per-cell log-space noise sd.
  double dispersion = 0.3;
  double batch_scale = 0.2;
  double base_mean = 1.5;
  double base_sd = 0.8;
  double cell_type_sd = 0.5;
  std::uint64_t seed = 7;

  void validate() const;
};

struct PlantedEffect {
  Index perturbation = 0;
  Index gene = 0;
  int sign = 1;
  double delta = 0.0;
};

struct SynthResult {
  Dataset counts;
  std::vector<PlantedEffect> truth;
};

/// Raw counts: Poisson(exp(cell-type mean + batch offset + planted shift + cell noise)).
/// Each perturbation shifts the same planted genes in every cell type.
SynthResult synth_generate(const SynthConfig& cfg);

/// perturbation,gene,sign,delta
std::string truth_csv(const SynthResult& r);

}  // namespace vcell::datastore
