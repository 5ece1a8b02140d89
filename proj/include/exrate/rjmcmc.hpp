#pragma once

// Reversible-jump Metropolis-Hastings sampler over step rates of varying
// dimension: truncated-Poisson prior on k, even-order-statistics prior on
// positions, exponential prior on heights; height/position moves plus
// birth/death jumps with exact acceptance ratios.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "exrate/step_rate.hpp"

namespace exrate {

struct PriorConfig {
  double mu = 4.5;
  std::size_t k_max = 20;
  double gamma = 0.0;            // exponential rate for heights; 0 = derive T/N
  double height_log_step = 1.0;  // width of the uniform window for log(h'/h)
};

struct MoveProbabilities {
  double eta = 0.0;    // height change
  double pi = 0.0;     // position change
  double birth = 0.0;
  double death = 0.0;
};

// Largest C with b_k + d_k <= 0.9 over the whole k range.
inline double move_constant(const PriorConfig& cfg) {
  double worst = 0.0;
  for (std::size_t k = 0; k <= cfg.k_max; ++k) {
    const double b = std::min(1.0, cfg.mu / static_cast<double>(k + 1));
    const double d = std::min(1.0, static_cast<double>(k) / cfg.mu);
    worst = std::max(worst, b + d);
  }
  return 0.9 / worst;
}

// b_k = C min(1, mu/(k+1)), d_k = C min(1, k/mu); the remainder is split
// evenly between height and position moves (all of it to height at k = 0).
inline MoveProbabilities move_probabilities(std::size_t k, const PriorConfig& cfg) {
  if (k > cfg.k_max) throw std::domain_error("move_probabilities: k > k_max");
  const double c = move_constant(cfg);
  MoveProbabilities m;
  m.birth = k < cfg.k_max
                ? c * std::min(1.0, cfg.mu / static_cast<double>(k + 1))
                : 0.0;
  m.death = k > 0 ? c * std::min(1.0, static_cast<double>(k) / cfg.mu) : 0.0;
  const double rest = 1.0 - m.birth - m.death;
  if (k == 0) {
    m.eta = rest;
    m.pi = 0.0;
  } else {
    m.eta = m.pi = rest / 2.0;
  }
  return m;
}

// Log prior density of a step rate: truncated-Poisson k, even-numbered
// order statistics for positions, i.i.d. exponential heights.
inline double log_prior(const StepRate& rate, const PriorConfig& cfg) {
  const std::size_t k = rate.k();
  if (k > cfg.k_max) return -std::numeric_limits<double>::infinity();
  if (!(cfg.gamma > 0.0)) throw data_error("log_prior: gamma unset");
  std::vector<double> log_weights;
  log_weights.reserve(cfg.k_max + 1);
  for (std::size_t j = 0; j <= cfg.k_max; ++j)
    log_weights.push_back(j * std::log(cfg.mu) - std::lgamma(j + 1.0));
  const double lp_k = k * std::log(cfg.mu) - std::lgamma(k + 1.0) -
                      log_sum_exp(log_weights);
  double lp_pos = std::lgamma(2.0 * k + 2.0) -
                  (2.0 * k + 1.0) * std::log(rate.horizon);
  for (std::size_t j = 0; j <= k; ++j)
    lp_pos += std::log(rate.boundary(j + 1) - rate.boundary(j));
  double lp_h = 0.0;
  for (double h : rate.heights) lp_h += std::log(cfg.gamma) - cfg.gamma * h;
  return lp_k + lp_pos + lp_h;
}

struct ChainState {
  StepRate rate;
  double log_lik = 0.0;
  double log_prior = 0.0;
};

namespace detail {

// Event count in interval j of the rate (last interval right-closed, so an
// event at t = T is included).
inline double interval_count(const StepRate& rate,
                             const std::vector<double>& times, double lo,
                             double hi) {
  const bool last = hi == rate.horizon;
  return static_cast<double>(count_in(times, lo, last ? hi + 1.0 : hi));
}

}  // namespace detail

// Heights for a split of interval (s_lo, s_hi) with height h at s_star,
// solving the weighted geometric mean condition with h_right/h_left =
// (1-u)/u.
inline std::pair<double, double> split_heights(double h, double s_lo,
                                               double s_star, double s_hi,
                                               double u) {
  const double log_odds = std::log((1.0 - u) / u);
  const double log_left =
      std::log(h) - (s_hi - s_star) / (s_hi - s_lo) * log_odds;
  return {std::exp(log_left), std::exp(log_left + log_odds)};
}

// Interval-length weighted geometric mean of two adjacent heights.
inline double merged_height(double h_left, double h_right, double s0, double s1,
                            double s2) {
  return std::exp(((s1 - s0) * std::log(h_left) +
                   (s2 - s1) * std::log(h_right)) /
                  (s2 - s0));
}

// Non-likelihood part of the birth log acceptance ratio: prior ratio,
// proposal ratio and Jacobian for inserting s_star into (s_lo, s_hi) where
// the state currently has k_before change-points. Negated, these are the
// matched death's ratio terms.
inline double birth_ratio_terms(std::size_t k_before, double horizon,
                                double s_lo, double s_star, double s_hi,
                                double h_old, double h_left, double h_right,
                                const PriorConfig& cfg) {
  const double c = move_constant(cfg);
  const double kb = static_cast<double>(k_before);
  const double b_k = c * std::min(1.0, cfg.mu / (kb + 1.0));
  const double d_k1 = c * std::min(1.0, (kb + 1.0) / cfg.mu);
  const double log_prior_ratio =
      std::log(cfg.mu / (kb + 1.0)) +
      std::log(2.0 * (kb + 1.0) * (2.0 * kb + 3.0) / (horizon * horizon)) +
      std::log((s_star - s_lo) * (s_hi - s_star) / (s_hi - s_lo)) +
      std::log(cfg.gamma) - cfg.gamma * (h_left + h_right - h_old);
  const double log_proposal_ratio =
      std::log(d_k1 * horizon / (b_k * (kb + 1.0)));
  const double log_jacobian =
      2.0 * std::log(h_left + h_right) - std::log(h_old);
  return log_prior_ratio + log_proposal_ratio + log_jacobian;
}

struct HeightProposal {
  std::size_t index = 0;  // 0..k
  double new_height = 0.0;
  double log_acceptance = 0.0;
};

struct PositionProposal {
  std::size_t index = 0;  // 1..k
  double new_position = 0.0;
  double log_acceptance = 0.0;
};

struct BirthProposal {
  std::size_t interval = 0;  // interval receiving the split
  double split_time = 0.0;
  double left_height = 0.0;
  double right_height = 0.0;
  double log_acceptance = 0.0;
};

struct DeathProposal {
  std::size_t index = 0;  // 1..k, change-point to remove
  double merged = 0.0;
  double log_acceptance = 0.0;
};

// Multiplicative height update, log(h'/h) uniform on the configured
// window. The acceptance combines the likelihood ratio, the exponential
// prior ratio and the h'/h proposal correction for the log-scale walk.
template <class Rng>
HeightProposal propose_height(const ChainState& state,
                              const ExceedanceSeries* events,
                              const PriorConfig& cfg, Rng& rng) {
  const StepRate& rate = state.rate;
  std::uniform_int_distribution<std::size_t> pick(0, rate.k());
  const std::size_t j = pick(rng);
  const double half = cfg.height_log_step / 2.0;
  std::uniform_real_distribution<double> step(-half, half);
  const double h = rate.heights[j];
  const double h_new = h * std::exp(step(rng));
  const double lo = rate.boundary(j), hi = rate.boundary(j + 1);
  double dll = 0.0;
  if (events) {
    const double nj = detail::interval_count(rate, events->times, lo, hi);
    dll = nj * (std::log(h_new) - std::log(h)) - (h_new - h) * (hi - lo);
  }
  const double log_ratio = dll + std::log(h_new / h) - cfg.gamma * (h_new - h);
  return {j, h_new, std::min(0.0, log_ratio)};
}

// Move of one change-point, uniform over the bracketing interval.
template <class Rng>
PositionProposal propose_position(const ChainState& state,
                                  const ExceedanceSeries* events,
                                  const PriorConfig& cfg, Rng& rng) {
  (void)cfg;
  const StepRate& rate = state.rate;
  const std::size_t k = rate.k();
  if (k == 0) throw data_error("propose_position: k must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(1, k);
  const std::size_t j = pick(rng);
  const double s_prev = rate.boundary(j - 1);
  const double s_cur = rate.boundary(j);
  const double s_next = rate.boundary(j + 1);
  std::uniform_real_distribution<double> unif(s_prev, s_next);
  const double s_new = unif(rng);
  if (!(s_new > s_prev) || !(s_new < s_next))
    return {j, s_new, -std::numeric_limits<double>::infinity()};
  double dll = 0.0;
  if (events) {
    const double h_l = rate.heights[j - 1], h_r = rate.heights[j];
    const double n_l_new =
        detail::interval_count(rate, events->times, s_prev, s_new);
    const double n_r_new =
        detail::interval_count(rate, events->times, s_new, s_next);
    const double n_l_old =
        detail::interval_count(rate, events->times, s_prev, s_cur);
    const double n_r_old =
        detail::interval_count(rate, events->times, s_cur, s_next);
    dll = (n_l_new - n_l_old) * std::log(h_l) +
          (n_r_new - n_r_old) * std::log(h_r) -
          h_l * (s_new - s_cur) + h_r * (s_new - s_cur);
  }
  const double log_ratio =
      dll + std::log((s_next - s_new) * (s_new - s_prev) /
                     ((s_next - s_cur) * (s_cur - s_prev)));
  return {j, s_new, std::min(0.0, log_ratio)};
}

// Birth: split time uniform on [0, T], split heights from the weighted
// geometric mean condition.
template <class Rng>
BirthProposal propose_birth(const ChainState& state,
                            const ExceedanceSeries* events,
                            const PriorConfig& cfg, Rng& rng) {
  const StepRate& rate = state.rate;
  const std::size_t k = rate.k();
  if (k >= cfg.k_max) throw data_error("propose_birth: k == k_max");
  std::uniform_real_distribution<double> unif_t(0.0, rate.horizon);
  std::uniform_real_distribution<double> unif_u(0.0, 1.0);
  const double s_star = unif_t(rng);
  const double u = unif_u(rng);
  BirthProposal p;
  p.split_time = s_star;
  p.interval = rate.interval_of(s_star);
  const double s_lo = rate.boundary(p.interval);
  const double s_hi = rate.boundary(p.interval + 1);
  // degenerate split times are auto-rejected
  if (s_star - s_lo < 1e-9 || s_hi - s_star < 1e-9 || u <= 0.0 || u >= 1.0) {
    p.log_acceptance = -std::numeric_limits<double>::infinity();
    p.left_height = p.right_height = rate.heights[p.interval];
    return p;
  }
  const double h_old = rate.heights[p.interval];
  const auto [h_l, h_r] = split_heights(h_old, s_lo, s_star, s_hi, u);
  p.left_height = h_l;
  p.right_height = h_r;
  double dll = 0.0;
  if (events) {
    const double n_l = detail::interval_count(rate, events->times, s_lo, s_star);
    const double n_r = detail::interval_count(rate, events->times, s_star, s_hi);
    dll = n_l * std::log(h_l) + n_r * std::log(h_r) -
          (n_l + n_r) * std::log(h_old) - h_l * (s_star - s_lo) -
          h_r * (s_hi - s_star) + h_old * (s_hi - s_lo);
  }
  const double log_ratio =
      dll + birth_ratio_terms(k, rate.horizon, s_lo, s_star, s_hi, h_old, h_l,
                              h_r, cfg);
  p.log_acceptance = std::min(0.0, log_ratio);
  return p;
}

// Death: remove a uniformly chosen change-point; ratio terms are the
// negation of the matched birth's.
template <class Rng>
DeathProposal propose_death(const ChainState& state,
                            const ExceedanceSeries* events,
                            const PriorConfig& cfg, Rng& rng) {
  const StepRate& rate = state.rate;
  const std::size_t k = rate.k();
  if (k == 0) throw data_error("propose_death: k must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(1, k);
  DeathProposal p;
  p.index = pick(rng);
  const double s0 = rate.boundary(p.index - 1);
  const double s1 = rate.boundary(p.index);
  const double s2 = rate.boundary(p.index + 1);
  const double h_l = rate.heights[p.index - 1];
  const double h_r = rate.heights[p.index];
  p.merged = merged_height(h_l, h_r, s0, s1, s2);
  double dll = 0.0;
  if (events) {
    const double n_l = detail::interval_count(rate, events->times, s0, s1);
    const double n_r = detail::interval_count(rate, events->times, s1, s2);
    dll = (n_l + n_r) * std::log(p.merged) - n_l * std::log(h_l) -
          n_r * std::log(h_r) - p.merged * (s2 - s0) + h_l * (s1 - s0) +
          h_r * (s2 - s1);
  }
  const double log_ratio =
      dll - birth_ratio_terms(k - 1, rate.horizon, s0, s1, s2, p.merged, h_l,
                              h_r, cfg);
  p.log_acceptance = std::min(0.0, log_ratio);
  return p;
}

// --- chain execution ------------------------------------------------------

enum class MoveType : std::uint8_t { height = 0, position, birth, death };

struct ChainDiagnostics {
  std::array<std::uint64_t, 4> proposed{};
  std::array<std::uint64_t, 4> accepted{};

  double acceptance_rate(MoveType m) const {
    const auto i = static_cast<std::size_t>(m);
    return proposed[i] ? static_cast<double>(accepted[i]) / proposed[i] : 0.0;
  }
};

struct ChainConfig {
  std::size_t burn_in = 20000;
  std::size_t n_updates = 500000;
  std::size_t thin = 40;
  std::uint64_t seed = 1;
  bool prior_only = false;  // disable the data term (sampler correctness mode)

  void validate() const {
    if (thin < 1 || n_updates < thin)
      throw data_error("ChainConfig: thin >= 1 and n_updates >= thin required");
  }
};

struct PosteriorEnsemble {
  std::vector<StepRate> samples;
  ChainDiagnostics diagnostics;
  double horizon = 0.0;

  void merge(const PosteriorEnsemble& other) {
    if (!samples.empty() && other.horizon != horizon)
      throw data_error("PosteriorEnsemble::merge: horizon mismatch");
    horizon = other.horizon;
    samples.insert(samples.end(), other.samples.begin(), other.samples.end());
    for (std::size_t i = 0; i < 4; ++i) {
      diagnostics.proposed[i] += other.diagnostics.proposed[i];
      diagnostics.accepted[i] += other.diagnostics.accepted[i];
    }
  }
};

// One sweep of the move menu; caches are updated incrementally on accept.
template <class Rng>
void chain_step(ChainState& state, const ExceedanceSeries* events,
                const PriorConfig& cfg, Rng& rng,
                ChainDiagnostics* diag = nullptr) {
  const auto probs = move_probabilities(state.rate.k(), cfg);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double pick = unif(rng);
  MoveType move;
  if (pick < probs.eta)
    move = MoveType::height;
  else if (pick < probs.eta + probs.pi)
    move = MoveType::position;
  else if (pick < probs.eta + probs.pi + probs.birth)
    move = MoveType::birth;
  else
    move = MoveType::death;
  if (diag) ++diag->proposed[static_cast<std::size_t>(move)];

  const auto accept = [&](double log_acc) {
    return log_acc >= 0.0 || std::log(unif(rng)) < log_acc;
  };

  bool accepted = false;
  switch (move) {
    case MoveType::height: {
      const auto p = propose_height(state, events, cfg, rng);
      if (accept(p.log_acceptance)) {
        state.rate.heights[p.index] = p.new_height;
        accepted = true;
      }
      break;
    }
    case MoveType::position: {
      const auto p = propose_position(state, events, cfg, rng);
      if (accept(p.log_acceptance)) {
        state.rate.changepoints[p.index - 1] = p.new_position;
        accepted = true;
      }
      break;
    }
    case MoveType::birth: {
      const auto p = propose_birth(state, events, cfg, rng);
      if (accept(p.log_acceptance)) {
        state.rate.changepoints.insert(
            state.rate.changepoints.begin() + p.interval, p.split_time);
        state.rate.heights[p.interval] = p.left_height;
        state.rate.heights.insert(state.rate.heights.begin() + p.interval + 1,
                                  p.right_height);
        accepted = true;
      }
      break;
    }
    case MoveType::death: {
      const auto p = propose_death(state, events, cfg, rng);
      if (accept(p.log_acceptance)) {
        state.rate.changepoints.erase(state.rate.changepoints.begin() +
                                      (p.index - 1));
        state.rate.heights[p.index - 1] = p.merged;
        state.rate.heights.erase(state.rate.heights.begin() + p.index);
        accepted = true;
      }
      break;
    }
  }
  if (accepted) {
    if (diag) ++diag->accepted[static_cast<std::size_t>(move)];
    state.log_lik = events ? log_likelihood(state.rate, *events) : 0.0;
    state.log_prior = log_prior(state.rate, cfg);
  }
}

// Resolve the default gamma = T/N when unset.
inline PriorConfig resolve_gamma(PriorConfig cfg, const ExceedanceSeries& events) {
  if (cfg.gamma <= 0.0) {
    if (events.empty())
      throw data_error("run_chain: gamma = T/N undefined for empty series");
    cfg.gamma = events.horizon / static_cast<double>(events.size());
  }
  return cfg;
}

template <class Rng>
PosteriorEnsemble run_chain(const ExceedanceSeries& events,
                            const PriorConfig& prior, const ChainConfig& cc,
                            Rng& rng) {
  cc.validate();
  events.validate();
  const PriorConfig cfg = resolve_gamma(prior, events);
  const ExceedanceSeries* data = cc.prior_only ? nullptr : &events;

  ChainState state;
  state.rate.horizon = events.horizon;
  state.rate.heights = {events.empty()
                            ? 1.0 / cfg.gamma
                            : static_cast<double>(events.size()) / events.horizon};
  state.log_lik = data ? log_likelihood(state.rate, events) : 0.0;
  state.log_prior = log_prior(state.rate, cfg);

  PosteriorEnsemble ens;
  ens.horizon = events.horizon;
  ens.samples.reserve(cc.n_updates / cc.thin);
  for (std::size_t i = 0; i < cc.burn_in; ++i)
    chain_step(state, data, cfg, rng, nullptr);
  for (std::size_t i = 1; i <= cc.n_updates; ++i) {
    chain_step(state, data, cfg, rng, &ens.diagnostics);
    if (i % cc.thin == 0) ens.samples.push_back(state.rate);
  }
  return ens;
}

inline PosteriorEnsemble run_chain(const ExceedanceSeries& events,
                                   const PriorConfig& prior,
                                   const ChainConfig& cc) {
  std::mt19937_64 rng(cc.seed);
  return run_chain(events, prior, cc, rng);
}

}  // namespace exrate
