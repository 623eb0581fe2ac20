#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace bprp {

struct McmcConfig {
  std::size_t burn_in = 5000;
  std::size_t draws = 20000;  // kept iterations per chain (before thinning)
  std::size_t chains = 4;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  double target_accept = 0.234;
  bool parallel = true;
  // Initial per-coordinate proposal sd; empty means 1 for every coordinate,
  // a single value is broadcast.
  std::vector<double> initial_step;
  // Chain c > 0 starts at init + init_jitter * initial_step * N(0, 1).
  double init_jitter = 0.0;

  void validate() const;
};

/// Draws from all chains, concatenated in chain order (row-major, n_draws x n_params).
struct PosteriorSamples {
  std::vector<std::string> names;
  std::vector<double> draws;
  std::vector<double> log_density;  // one per row
  std::size_t n_params = 0;
  std::size_t chain_count = 0;
  std::size_t burn_in = 0;
  double acceptance_rate = 0.0;
  std::vector<double> psrf;
  std::vector<std::string> warnings;

  std::size_t n_draws() const { return n_params == 0 ? 0 : draws.size() / n_params; }
  double at(std::size_t row, std::size_t col) const { return draws[row * n_params + col]; }
  std::span<const double> row(std::size_t r) const { return {draws.data() + r * n_params, n_params}; }
  std::vector<double> column(std::size_t col) const;
  std::vector<double> column_mean() const;
  std::vector<double> column_sd() const;
  std::size_t argmax_row() const;
  std::size_t index_of(const std::string& name) const;
};

using LogDensity = std::function<double(std::span<const double>)>;

/// Target for Metropolis-within-Gibbs. block_log_density(b, x) must equal
/// log_density(x) up to a term that does not depend on the coordinates of block b.
/// Implementations must be safe to call concurrently from several chains.
class BlockedTarget {
 public:
  virtual ~BlockedTarget() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<std::vector<std::size_t>> blocks() const = 0;
  virtual double log_density(std::span<const double> x) const = 0;
  virtual double block_log_density(std::size_t /*block*/, std::span<const double> x) const { return log_density(x); }
};

PosteriorSamples mcmc_sample(const LogDensity& log_density, std::vector<double> init, const McmcConfig& config,
                             std::vector<std::string> names = {});

PosteriorSamples mcmc_sample_blocked(const BlockedTarget& target, std::vector<double> init, const McmcConfig& config,
                                     std::vector<std::string> names = {});

/// Split-chain potential scale reduction per parameter; draws laid out as in PosteriorSamples.
std::vector<double> split_psrf(const std::vector<double>& draws, std::size_t n_params, std::size_t chains);

}  // namespace bprp
