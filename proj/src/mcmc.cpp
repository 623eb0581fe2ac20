#include "bprp/mcmc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <thread>

#include <spdlog/spdlog.h>

#include "bprp/errors.hpp"
#include "bprp/rng.hpp"
#include "bprp/stats.hpp"

namespace bprp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Burn-in fractions at which the proposal shape is re-estimated from the window's draws.
constexpr std::array<double, 4> kWindowEnds = {0.1, 0.25, 0.5, 0.75};

double sanitize(double v) { return std::isnan(v) ? kNegInf : v; }

class SingleBlock final : public BlockedTarget {
 public:
  SingleBlock(const LogDensity& f, std::size_t dim) : f_(f), dim_(dim) {}
  std::size_t dimension() const override { return dim_; }
  std::vector<std::vector<std::size_t>> blocks() const override {
    std::vector<std::size_t> all(dim_);
    for (std::size_t i = 0; i < dim_; ++i) all[i] = i;
    return {all};
  }
  double log_density(std::span<const double> x) const override { return f_(x); }

 private:
  const LogDensity& f_;
  std::size_t dim_;
};

struct BlockState {
  std::vector<std::size_t> idx;
  std::vector<double> base;  // per-coordinate proposal sd
  double log_scale = 0.0;
  std::size_t n_adapt = 0;
  std::size_t proposed = 0;
  std::size_t accepted = 0;
  // Window moments for shape re-estimation.
  std::vector<double> sum, sum_sq;
  std::size_t window_n = 0;
};

struct ChainResult {
  std::vector<double> draws;
  std::vector<double> log_density;
  std::size_t proposed = 0;
  std::size_t accepted = 0;
};

ChainResult run_chain(const BlockedTarget& target, const std::vector<std::vector<std::size_t>>& blocks,
                      std::vector<double> x, const McmcConfig& cfg, const std::vector<double>& step,
                      std::uint64_t seed) {
  const std::size_t dim = x.size();
  SplitMix64 rng(seed);
  std::vector<BlockState> states(blocks.size());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    auto& s = states[b];
    s.idx = blocks[b];
    for (const auto i : s.idx) s.base.push_back(step[i]);
    s.sum.assign(s.idx.size(), 0.0);
    s.sum_sq.assign(s.idx.size(), 0.0);
  }
  const bool single = blocks.size() == 1;

  double full = sanitize(target.log_density(x));
  if (!std::isfinite(full)) throw InitializationError("mcmc: log density is not finite at the initial point");

  std::vector<std::size_t> window_ends;
  for (const double f : kWindowEnds) window_ends.push_back(static_cast<std::size_t>(f * static_cast<double>(cfg.burn_in)));
  std::size_t next_window = 0;

  ChainResult out;
  const std::size_t kept = cfg.draws / cfg.thin;
  out.draws.reserve(kept * dim);
  out.log_density.reserve(kept);
  std::vector<double> y = x;
  const std::size_t total = cfg.burn_in + cfg.draws;
  for (std::size_t it = 0; it < total; ++it) {
    const bool adapting = it < cfg.burn_in;
    for (std::size_t b = 0; b < states.size(); ++b) {
      auto& s = states[b];
      const double scale = std::exp(s.log_scale);
      for (std::size_t k = 0; k < s.idx.size(); ++k) y[s.idx[k]] = x[s.idx[k]] + scale * s.base[k] * rng.normal();
      // Other blocks may have moved since this block was last visited, so its
      // conditional is re-evaluated at the current state.
      const double cur = single ? full : sanitize(target.block_log_density(b, x));
      const double prop = sanitize(single ? target.log_density(y) : target.block_log_density(b, y));
      const double log_u = std::log(rng.uniform());
      const double delta = prop - cur;
      const bool accept = std::isfinite(prop) && log_u < delta;
      if (accept) {
        for (const auto i : s.idx) x[i] = y[i];
        full = single ? prop : full + delta;
      } else {
        for (const auto i : s.idx) y[i] = x[i];
      }
      if (adapting) {
        ++s.n_adapt;
        const double gamma = std::pow(static_cast<double>(s.n_adapt) + 1.0, -0.6);
        s.log_scale += gamma * ((accept ? 1.0 : 0.0) - cfg.target_accept);
        s.log_scale = std::clamp(s.log_scale, -30.0, 10.0);
        for (std::size_t k = 0; k < s.idx.size(); ++k) {
          const double v = x[s.idx[k]];
          s.sum[k] += v;
          s.sum_sq[k] += v * v;
        }
        ++s.window_n;
      } else {
        ++s.proposed;
        if (accept) ++s.accepted;
      }
    }
    // Resynchronize the running total against accumulated rounding.
    if (!single && (it % 256) == 255) full = sanitize(target.log_density(x));

    if (adapting && next_window < window_ends.size() && it + 1 == window_ends[next_window]) {
      for (auto& s : states) {
        if (s.window_n >= 2) {
          const double n = static_cast<double>(s.window_n);
          const double factor = 2.38 / std::sqrt(static_cast<double>(s.idx.size()));
          for (std::size_t k = 0; k < s.idx.size(); ++k) {
            const double m = s.sum[k] / n;
            const double var = std::max(0.0, (s.sum_sq[k] - n * m * m) / (n - 1.0));
            const double sd = std::sqrt(var);
            if (sd > 1e-10 * std::max(1.0, std::abs(m))) {
              s.base[k] = factor * sd;
            } else {
              s.base[k] *= 0.1;
            }
          }
          s.log_scale = 0.0;
          s.n_adapt = 0;
        }
        std::fill(s.sum.begin(), s.sum.end(), 0.0);
        std::fill(s.sum_sq.begin(), s.sum_sq.end(), 0.0);
        s.window_n = 0;
      }
      ++next_window;
    }

    if (!adapting && ((it - cfg.burn_in) % cfg.thin) == cfg.thin - 1) {
      out.draws.insert(out.draws.end(), x.begin(), x.end());
      out.log_density.push_back(full);
    }
  }
  for (const auto& s : states) {
    out.proposed += s.proposed;
    out.accepted += s.accepted;
  }
  return out;
}

}  // namespace

void McmcConfig::validate() const {
  if (draws < 1 || chains < 1 || thin < 1 || draws < thin) {
    throw InvalidInput("mcmc config: draws, chains and thin must be >= 1 and draws >= thin");
  }
  if (!(target_accept > 0 && target_accept < 1)) throw InvalidInput("mcmc config: target_accept must be in (0, 1)");
  for (const double s : initial_step) {
    if (!(s > 0) || !std::isfinite(s)) throw InvalidInput("mcmc config: initial_step entries must be > 0");
  }
}

std::vector<double> PosteriorSamples::column(std::size_t col) const {
  std::vector<double> out(n_draws());
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = at(r, col);
  return out;
}

std::vector<double> PosteriorSamples::column_mean() const {
  std::vector<double> m(n_params, 0.0);
  const std::size_t n = n_draws();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n_params; ++c) m[c] += at(r, c);
  }
  for (auto& v : m) v /= static_cast<double>(std::max<std::size_t>(1, n));
  return m;
}

std::vector<double> PosteriorSamples::column_sd() const {
  std::vector<double> out(n_params);
  for (std::size_t c = 0; c < n_params; ++c) {
    const auto col = column(c);
    out[c] = stats::sd(col);
  }
  return out;
}

std::size_t PosteriorSamples::argmax_row() const {
  return static_cast<std::size_t>(std::max_element(log_density.begin(), log_density.end()) - log_density.begin());
}

std::size_t PosteriorSamples::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw InvalidInput("posterior has no parameter named " + name);
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<double> split_psrf(const std::vector<double>& draws, std::size_t n_params, std::size_t chains) {
  std::vector<double> out(n_params, std::numeric_limits<double>::quiet_NaN());
  if (n_params == 0 || chains == 0) return out;
  const std::size_t per_chain = draws.size() / n_params / chains;
  const std::size_t half = per_chain / 2;
  if (half < 2) return out;
  const std::size_t m = 2 * chains;
  for (std::size_t p = 0; p < n_params; ++p) {
    std::vector<double> means(m), vars(m);
    for (std::size_t c = 0; c < chains; ++c) {
      for (std::size_t h = 0; h < 2; ++h) {
        const std::size_t first = c * per_chain + h * half;
        double s = 0, ss = 0;
        for (std::size_t i = 0; i < half; ++i) s += draws[(first + i) * n_params + p];
        const double mu = s / static_cast<double>(half);
        for (std::size_t i = 0; i < half; ++i) {
          const double d = draws[(first + i) * n_params + p] - mu;
          ss += d * d;
        }
        means[2 * c + h] = mu;
        vars[2 * c + h] = ss / static_cast<double>(half - 1);
      }
    }
    const double n = static_cast<double>(half);
    const double w = stats::mean(vars);
    const double b = n * std::pow(stats::sd(means), 2);
    if (w <= 0) {
      out[p] = b <= 0 ? 1.0 : std::numeric_limits<double>::infinity();
      continue;
    }
    const double var_plus = (n - 1.0) / n * w + b / n;
    out[p] = std::sqrt(var_plus / w);
  }
  return out;
}

PosteriorSamples mcmc_sample_blocked(const BlockedTarget& target, std::vector<double> init, const McmcConfig& config,
                                     std::vector<std::string> names) {
  config.validate();
  const std::size_t dim = target.dimension();
  if (init.size() != dim) throw InvalidInput("mcmc: init has the wrong dimension");
  if (dim == 0) throw InvalidInput("mcmc: zero-dimensional target");
  for (const double v : init) {
    if (!std::isfinite(v)) throw InitializationError("mcmc: non-finite initial value");
  }
  if (names.empty()) {
    for (std::size_t i = 0; i < dim; ++i) names.push_back("x" + std::to_string(i));
  }
  if (names.size() != dim) throw InvalidInput("mcmc: names do not match the dimension");
  std::vector<double> step(dim, 1.0);
  if (config.initial_step.size() == 1) {
    step.assign(dim, config.initial_step.front());
  } else if (!config.initial_step.empty()) {
    if (config.initial_step.size() != dim) throw InvalidInput("mcmc: initial_step has the wrong dimension");
    step = config.initial_step;
  }
  const auto blocks = target.blocks();
  {
    std::vector<int> seen(dim, 0);
    for (const auto& b : blocks) {
      if (b.empty()) throw InvalidInput("mcmc: empty block");
      for (const auto i : b) {
        if (i >= dim) throw InvalidInput("mcmc: block index out of range");
        ++seen[i];
      }
    }
    for (const int s : seen) {
      if (s != 1) throw InvalidInput("mcmc: blocks must partition the coordinates");
    }
  }
  if (!std::isfinite(sanitize(target.log_density(init)))) {
    throw InitializationError("mcmc: log density is not finite at the initial point");
  }

  std::vector<std::vector<double>> starts(config.chains, init);
  for (std::size_t c = 1; c < config.chains && config.init_jitter > 0; ++c) {
    SplitMix64 rng(derive_seed(config.seed, "mcmc-init", {c}));
    std::vector<double> cand = init;
    // Fall back to the shared start when the jittered point lies outside the support.
    for (int attempt = 0; attempt < 20; ++attempt) {
      for (std::size_t i = 0; i < dim; ++i) cand[i] = init[i] + config.init_jitter * step[i] * rng.normal();
      if (std::isfinite(sanitize(target.log_density(cand)))) {
        starts[c] = cand;
        break;
      }
    }
  }

  std::vector<ChainResult> results(config.chains);
  std::vector<std::exception_ptr> errors(config.chains);
  auto work = [&](std::size_t c) {
    try {
      results[c] = run_chain(target, blocks, starts[c], config, step, derive_seed(config.seed, "mcmc-chain", {c}));
    } catch (...) {
      errors[c] = std::current_exception();
    }
  };
  if (config.parallel && config.chains > 1 && std::thread::hardware_concurrency() > 1) {
    std::vector<std::thread> threads;
    for (std::size_t c = 0; c < config.chains; ++c) threads.emplace_back(work, c);
    for (auto& t : threads) t.join();
  } else {
    for (std::size_t c = 0; c < config.chains; ++c) work(c);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  PosteriorSamples out;
  out.names = std::move(names);
  out.n_params = dim;
  out.chain_count = config.chains;
  out.burn_in = config.burn_in;
  std::size_t proposed = 0, accepted = 0;
  for (auto& r : results) {
    out.draws.insert(out.draws.end(), r.draws.begin(), r.draws.end());
    out.log_density.insert(out.log_density.end(), r.log_density.begin(), r.log_density.end());
    proposed += r.proposed;
    accepted += r.accepted;
  }
  out.acceptance_rate = proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
  out.psrf = split_psrf(out.draws, dim, config.chains);
  if (out.acceptance_rate < 0.01) {
    out.warnings.push_back("mixing failure: acceptance rate " + std::to_string(out.acceptance_rate));
  }
  std::size_t bad = 0;
  for (const double r : out.psrf) {
    if (std::isfinite(r) ? r > 1.05 : !std::isnan(r)) ++bad;
  }
  if (bad > 0 && config.chains > 1) {
    out.warnings.push_back("convergence: " + std::to_string(bad) + " parameter(s) with split-PSRF > 1.05");
  }
  for (const auto& w : out.warnings) spdlog::debug("mcmc: {}", w);
  return out;
}

PosteriorSamples mcmc_sample(const LogDensity& log_density, std::vector<double> init, const McmcConfig& config,
                             std::vector<std::string> names) {
  const SingleBlock target(log_density, init.size());
  return mcmc_sample_blocked(target, std::move(init), config, std::move(names));
}

}  // namespace bprp
