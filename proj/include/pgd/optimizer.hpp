#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "pgd/linmodel.hpp"
#include "pgd/potential.hpp"

namespace pgd {

struct PgdConfig {
  Potential potential;
  double eta = 1e-4;
  std::size_t max_iters = 0;
  std::size_t trace_stride = 1000;
  std::uint64_t seed = 0;                        // stochastic variant only
  std::optional<std::size_t> batch_size;         // nullopt = full batch
  bool halve_eta_on_loss_increase = false;       // off: keep the fixed-eta protocol

  void validate(std::size_t n_samples) const;
};

struct TraceRow {
  std::size_t iter;
  double loss;
  double p_norm;
  double margin;
  std::optional<double> bregman_to_ref;
};

struct TrainTrace {
  std::vector<TraceRow> rows;

  // CSV columns iter,loss,p_norm,margin,bregman_to_ref (last field empty
  // when no reference was tracked), 17 significant digits.
  void to_csv(std::ostream& os) const;
  void save_csv(const std::filesystem::path& path) const;
  static TrainTrace from_csv(std::istream& is);
};

// Raised when an iterate or loss stops being finite; carries the step index
// and whatever trace rows were recorded before the blow-up.
struct DivergenceError : std::runtime_error {
  DivergenceError(const std::string& msg, std::size_t iter, TrainTrace partial)
      : std::runtime_error(msg), iteration(iter), partial_trace(std::move(partial)) {}
  std::size_t iteration;
  TrainTrace partial_trace;
};

struct RunResult {
  Vec final_iterate;
  TrainTrace trace;
  double max_dual_magnitude = 0.0;
};

// One coordinate-wise p-GD step:
//   z_j = sign(w_j)|w_j|^(p-1) - eta * grad L(w)_j,  w'_j = sign(z_j)|z_j|^(1/(p-1))
// Identical to inverse_mirror_map(mirror_map(w) - eta*grad).
Vec pgd_step(const PgdConfig& cfg, const Loss& loss, const Dataset& data, const Vec& w);

// Full-batch run. When `reference` is given (a unit-l_p direction), each
// recorded row carries D_psi(reference, w_t/||w_t||_p).
RunResult run_pgd(const PgdConfig& cfg, const Loss& loss, const Dataset& data,
                  const Vec& w0, const Vec* reference = nullptr);

// Mini-batch variant: batches are drawn without replacement per epoch from a
// seeded shuffle; batch_size == n reproduces run_pgd step for step.
RunResult run_stochastic_pgd(const PgdConfig& cfg, const Loss& loss, const Dataset& data,
                             const Vec& w0);

// Evaluates both sides of the mirror-descent identities (one MD step from
// w_t) and returns the largest absolute residual.
double check_md_identity(const Potential& psi, const Loss& loss, const Dataset& data,
                         const Vec& w, const Vec& w_t, double eta);

// Dual-space update lower bound:
//   (p-1)/p (||w_{t+1}||^p - ||w_t||^p) + eta(L(w_{t+1}) - L(w_t)) <= <-eta grad L(w_t), w_t>
bool check_update_lower_bound(const Potential& psi, const Loss& loss, const Dataset& data,
                              const Vec& w_t, double eta, double slack = 1e-9);

} // namespace pgd
