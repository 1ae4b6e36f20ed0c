#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pgd/linmodel.hpp"
#include "pgd/synthdata.hpp"

namespace pgd {

// Shared configuration for the experiment commands. Fields left unset pick
// up per-experiment defaults (the calibrated protocol constants) inside the
// command implementations. Serialized as JSON with schema_version = 1.
struct ExperimentConfig {
  static constexpr int kSchemaVersion = 1;

  std::string experiment;                 // rates | bias_table | reg_path | toynet_hist
  std::string dataset = "r2_anchored";    // generator kind or path to a CSV file
  std::uint64_t data_seed = 1;
  std::uint64_t w0_seed = 2;
  std::optional<double> w0_stddev;        // default: 1.0 in R^2, sqrt(0.1) otherwise

  std::vector<double> p_values;
  std::string loss = "exp";
  std::optional<double> eta;
  std::optional<std::size_t> iters;
  std::size_t trace_stride = 1000;
  std::vector<std::uint64_t> seeds;       // toynet grid
  std::optional<std::size_t> batch_size;  // toynet
  std::vector<double> budgets;            // reg path
  double tol = 1e-4;                      // reg path acceptance tolerance
  std::vector<double> column_norms;       // bias table (inf allowed)
  std::filesystem::path out_dir = ".";
  int workers = 1;

  static ExperimentConfig from_json_file(const std::filesystem::path& path);
  std::string to_json() const;
};

// Resolves cfg.dataset: a known generator kind (seeded with cfg.data_seed)
// or a CSV path.
Dataset resolve_dataset(const ExperimentConfig& cfg);

// Each command writes its files under cfg.out_dir (staged, atomically
// renamed) and returns a process exit code: 0 = all scientific checks pass,
// 2 = a check failed, throws on operational errors.
int cmd_rates(const ExperimentConfig& cfg);
int cmd_bias_table(const ExperimentConfig& cfg);
int cmd_reg_path(const ExperimentConfig& cfg);
int cmd_toynet_hist(const ExperimentConfig& cfg);
int cmd_check_identities(const ExperimentConfig& cfg);
int cmd_gen_data(const GeneratorSpec& spec, const std::filesystem::path& out_dir);

// Atomic file write: stage to <path>.tmp, then rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

// Per-experiment protocol defaults (fixture seeds, eta, iteration budgets).
ExperimentConfig default_config(const std::string& experiment);

// Randomized verification sweeps shared by `check-identities`, the unit
// tests and the acceptance suite. Residuals are reported in relative form
// (|lhs - rhs| / (1 + |lhs|)).
struct IdentitySweepReport {
  double max_md_residual = 0.0;         // mirror-descent step identities
  bool update_lower_bound_ok = true;    // dual-space update bound
  double max_roundtrip = 0.0;           // inverse_mirror_map(mirror_map(w)) vs w
  double max_inner_product = 0.0;       // <grad psi(w), w> vs ||w||_p^p
  double max_homogeneity = 0.0;         // D(cw, cw') vs |c|^p D(w, w')
  double max_dual_norm = 0.0;           // ||grad psi(w)||_q vs ||w||_p^(p-1)
  double max_law_of_cosine = 0.0;
  double min_bregman = 0.0;             // most negative D seen (should be ~0)
  bool indiscernible_ok = true;         // D(x, x) == 0, D(x, y) > 0 for x != y
  bool scalar_inequalities_ok = true;   // the two (1+delta)^p bounds
  bool convexity_ok = true;             // empirical loss convexity
  bool gradient_fd_ok = true;           // gradient vs central differences
  bool tail_ok = true;                  // ell(z) e^z in [0.5, 2] for z >= 5
  bool all_ok = false;

  std::string to_json() const;
};

IdentitySweepReport run_identity_sweeps(std::uint64_t seed, std::size_t md_instances,
                                        std::size_t property_draws,
                                        std::size_t scalar_draws);

} // namespace pgd
