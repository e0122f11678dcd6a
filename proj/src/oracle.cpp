#include "semirl/oracle.hpp"

#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace semirl {

namespace {

constexpr double kSupportCap = 1e6;

struct PositionFactor {
  std::vector<double> probs;   // over the vocabulary
  std::vector<TokenId> alive;  // tokens with positive probability
};

PositionFactor point_mass(int vocab, TokenId v) {
  PositionFactor f;
  f.probs.assign(static_cast<std::size_t>(vocab), 0.0);
  f.probs[static_cast<std::size_t>(v)] = 1.0;
  f.alive.push_back(v);
  return f;
}

PositionFactor full_row(std::vector<double> row) {
  PositionFactor f;
  f.probs = std::move(row);
  for (TokenId v = 0; v < static_cast<TokenId>(f.probs.size()); ++v) f.alive.push_back(v);
  return f;
}

PositionFactor mixture(std::vector<double> row, TokenId shown, double lie_weight) {
  PositionFactor f;
  f.probs = std::move(row);
  for (auto& p : f.probs) p *= lie_weight;
  f.probs[static_cast<std::size_t>(shown)] += 1.0 - lie_weight;
  for (TokenId v = 0; v < static_cast<TokenId>(f.probs.size()); ++v) f.alive.push_back(v);
  return f;
}

PosteriorTable table_from_factors(const std::vector<PositionFactor>& factors) {
  double size = 1.0;
  for (const auto& f : factors) size *= static_cast<double>(f.alive.size());
  if (size > kSupportCap) throw std::invalid_argument("posterior_states: support too large");

  PosteriorTable table;
  const std::size_t n = factors.size();
  std::vector<std::size_t> idx(n, 0);
  while (true) {
    std::vector<TokenId> completion(n);
    double p = 1.0;
    for (std::size_t t = 0; t < n; ++t) {
      TokenId v = factors[t].alive[idx[t]];
      completion[t] = v;
      p *= factors[t].probs[static_cast<std::size_t>(v)];
    }
    table.support.push_back(std::move(completion));
    table.probs.push_back(p);
    // odometer
    std::size_t t = 0;
    while (t < n) {
      if (++idx[t] < factors[t].alive.size()) break;
      idx[t] = 0;
      ++t;
    }
    if (t == n) break;
  }
  return table;
}

}  // namespace

PosteriorTable posterior_states(const Observation& obs, std::span<const TokenId> static_seq,
                                double p_m, const Policy& policy) {
  const int V = policy.vocab;
  const int n = static_cast<int>(obs.slots.size());
  std::vector<PositionFactor> factors;
  factors.reserve(static_cast<std::size_t>(n));

  for (int t = 0; t < n; ++t) {
    const TokenId slot = obs.slots[static_cast<std::size_t>(t)];
    switch (obs.kind) {
      case ObsKind::Masked:
      case ObsKind::AllAug:
      case ObsKind::PreAug:
        if (slot >= V)
          factors.push_back(full_row(policy_row(policy, obs, t)));
        else
          factors.push_back(point_mass(V, slot));
        break;
      case ObsKind::MaxObs:
        if (obs.mask_bits[static_cast<std::size_t>(t)])
          factors.push_back(full_row(policy_row(policy, obs, t)));
        else
          factors.push_back(point_mass(V, slot));
        break;
      case ObsKind::NoisyMask: {
        if (slot >= V) {
          factors.push_back(full_row(policy_row(policy, obs, t)));
        } else {
          // Probability that a token-showing position is a lied-about masked
          // position rather than an honest unmasked one.
          const double denom = p_m * obs.noise_rate + (1.0 - p_m);
          const double lie = denom > 0.0 ? (p_m * obs.noise_rate) / denom : 1.0;
          factors.push_back(mixture(policy_row(policy, obs, t), slot, lie));
        }
        break;
      }
      case ObsKind::ScheduledSampling:
        // Mask bits are hidden entirely; each shown token is a sample with
        // prior weight p_m, otherwise the static token it displays.
        factors.push_back(mixture(policy_row(policy, obs, t), slot, p_m));
        break;
      case ObsKind::FullState:
      case ObsKind::OfflineStatic:
        factors.push_back(point_mass(V, slot));
        break;
    }
  }

  // Sanity: the revealed-token slots of exact observations agree with static
  // data wherever both are known.
  if ((obs.kind == ObsKind::Masked || obs.kind == ObsKind::MaxObs) &&
      static_seq.size() == obs.slots.size()) {
    for (int t = 0; t < n; ++t) {
      const TokenId slot = obs.slots[static_cast<std::size_t>(t)];
      if (slot < V && slot != static_seq[static_cast<std::size_t>(t)])
        throw std::invalid_argument("posterior_states: observation inconsistent with static data");
    }
  }

  return table_from_factors(factors);
}

PosteriorTable posterior_states_raw(ObsKind kind, ContextId x,
                                    std::span<const TokenId> static_seq, const MaskVector& mask,
                                    const Policy& policy) {
  if (kind != ObsKind::Masked && kind != ObsKind::MaxObs)
    throw std::invalid_argument("posterior_states_raw: only exact-mask observations supported");
  const int V = policy.vocab;
  const int T = static_cast<int>(static_seq.size());
  if (std::pow(static_cast<double>(V), static_cast<double>(T)) > kSupportCap)
    throw std::invalid_argument("posterior_states_raw: support too large");

  const Vocab vocab(policy.vocab);
  Observation obs = (kind == ObsKind::Masked) ? masked_observation(vocab, x, static_seq, mask)
                                              : max_observation(vocab, x, static_seq, mask);

  std::vector<std::vector<double>> rows(static_cast<std::size_t>(T));
  for (int t = 0; t < T; ++t)
    if (mask.bits[static_cast<std::size_t>(t)]) rows[static_cast<std::size_t>(t)] = policy_row(policy, obs, t);

  PosteriorTable table;
  std::vector<TokenId> y(static_cast<std::size_t>(T), 0);
  double norm = 0.0;
  while (true) {
    double w = 1.0;
    for (int t = 0; t < T && w > 0.0; ++t) {
      if (mask.bits[static_cast<std::size_t>(t)])
        w *= rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(y[static_cast<std::size_t>(t)])];
      else if (y[static_cast<std::size_t>(t)] != static_seq[static_cast<std::size_t>(t)])
        w = 0.0;  // copy constraint
    }
    if (w > 0.0) {
      table.support.push_back(y);
      table.probs.push_back(w);
      norm += w;
    }
    int t = 0;
    while (t < T) {
      if (++y[static_cast<std::size_t>(t)] < V) break;
      y[static_cast<std::size_t>(t)] = 0;
      ++t;
    }
    if (t == T) break;
  }
  for (auto& p : table.probs) p /= norm;
  return table;
}

double total_variation(const PosteriorTable& a, const PosteriorTable& b) {
  std::map<std::vector<TokenId>, double> diff;
  for (std::size_t i = 0; i < a.support.size(); ++i) diff[a.support[i]] += a.probs[i];
  for (std::size_t i = 0; i < b.support.size(); ++i) diff[b.support[i]] -= b.probs[i];
  double tv = 0.0;
  for (const auto& [_, d] : diff) tv += std::abs(d);
  return 0.5 * tv;
}

namespace {

bool next_assignment(std::vector<TokenId>& v, int base) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (++v[i] < base) return true;
    v[i] = 0;
  }
  return false;
}

bool next_bits(std::vector<std::uint8_t>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i]) {
      v[i] = 1;
      return true;
    }
    v[i] = 0;
  }
  return false;
}

std::string describe_instance(int V, int T, double p_m, int pol,
                              const std::vector<TokenId>& static_seq,
                              const std::vector<std::uint8_t>& mask_bits, const char* extra) {
  std::ostringstream os;
  os << "V=" << V << " T=" << T << " p_m=" << p_m << " policy=" << pol << " static=";
  for (auto v : static_seq) os << v;
  os << " mask=";
  for (auto b : mask_bits) os << int(b);
  if (extra && *extra) os << " " << extra;
  return os.str();
}

}  // namespace

Lemma1Result check_lemma1(ObsKind kind, double noise_rate, const Lemma1Grid& grid) {
  if (kind != ObsKind::Masked && kind != ObsKind::ScheduledSampling && kind != ObsKind::NoisyMask)
    throw std::invalid_argument("check_lemma1: unsupported observation kind");

  Lemma1Result result;
  result.min_tv = 1.0;
  bool any = false;

  for (int V : grid.vocab_sizes) {
    for (int T : grid.horizons) {
      const Vocab vocab(V);
      for (double p_m : grid.mask_rates) {
        for (int pol = 0; pol < grid.policies; ++pol) {
          Policy policy = Policy::random_tabular(
              1, T, V,
              mix_keys(grid.policy_seed, static_cast<std::uint64_t>(V),
                       static_cast<std::uint64_t>(T), static_cast<std::uint64_t>(pol)));

          std::vector<TokenId> static_seq(static_cast<std::size_t>(T), 0);
          do {
            std::vector<std::uint8_t> bits(static_cast<std::size_t>(T), 0);
            do {
              MaskVector mask = fixed_mask(bits, p_m);
              Observation reference = max_observation(vocab, 0, static_seq, mask);
              PosteriorTable base = posterior_states(reference, static_seq, p_m, policy);

              auto consider = [&](const Observation& obs, const char* extra) {
                const double tv = total_variation(posterior_states(obs, static_seq, p_m, policy),
                                                  base);
                any = true;
                ++result.instances;
                if (tv > result.max_tv) {
                  result.max_tv = tv;
                  result.worst_instance =
                      describe_instance(V, T, p_m, pol, static_seq, bits, extra);
                }
                if (tv < result.min_tv) result.min_tv = tv;
              };

              if (kind == ObsKind::Masked) {
                consider(masked_observation(vocab, 0, static_seq, mask), "");
              } else if (kind == ObsKind::ScheduledSampling) {
                // Every realized trajectory the environment can display.
                std::vector<int> masked_pos;
                for (int t = 0; t < T; ++t)
                  if (bits[static_cast<std::size_t>(t)]) masked_pos.push_back(t);
                std::vector<TokenId> fill(masked_pos.size(), 0);
                do {
                  std::vector<TokenId> realized = static_seq;
                  for (std::size_t i = 0; i < masked_pos.size(); ++i)
                    realized[static_cast<std::size_t>(masked_pos[i])] = fill[i];
                  VariantArgs args;
                  args.realized = &realized;
                  consider(variant_observation(ObsKind::ScheduledSampling, vocab, 0, static_seq,
                                               mask, args),
                           "realized");
                } while (!fill.empty() && next_assignment(fill, V));
              } else {
                // Every lie pattern over the masked positions that can occur
                // at this noise rate.
                std::vector<int> masked_pos;
                for (int t = 0; t < T; ++t)
                  if (bits[static_cast<std::size_t>(t)]) masked_pos.push_back(t);
                std::vector<std::uint8_t> lie_sel(masked_pos.size(), 0);
                while (true) {
                  bool any_lie = false, any_honest = false;
                  for (auto l : lie_sel) (l ? any_lie : any_honest) = true;
                  const bool achievable =
                      !(any_lie && noise_rate == 0.0) && !(any_honest && noise_rate == 1.0);
                  if (achievable) {
                    std::vector<std::uint8_t> lies(static_cast<std::size_t>(T), 0);
                    for (std::size_t i = 0; i < masked_pos.size(); ++i)
                      lies[static_cast<std::size_t>(masked_pos[i])] = lie_sel[i];
                    consider(noisy_mask_observation(vocab, 0, static_seq, mask, lies, noise_rate),
                             "lied");
                  }
                  if (lie_sel.empty() || !next_bits(lie_sel)) break;
                }
              }
            } while (next_bits(bits));
          } while (next_assignment(static_seq, V));
        }
      }
    }
  }
  if (!any) result.min_tv = 0.0;
  return result;
}

long observation_space_size(ObsKind kind, int t, int vocab, int horizon) {
  if (t < 0 || vocab < 2) throw std::invalid_argument("observation_space_size: bad arguments");
  const int cover = t + 1;
  if (horizon < cover)
    throw std::invalid_argument("observation_space_size: horizon shorter than t+1");
  const int static_len = (kind == ObsKind::AllAug) ? horizon : cover;

  const double work = std::pow(static_cast<double>(vocab), static_cast<double>(static_len)) *
                      std::pow(2.0, static_cast<double>(cover));
  if (work > 4e6) throw std::invalid_argument("observation_space_size: enumeration too large");

  const Vocab voc(vocab);
  std::set<std::vector<int>> seen;
  std::vector<TokenId> static_seq(static_cast<std::size_t>(static_len), 0);
  do {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(cover), 0);
    do {
      std::vector<int> key;
      switch (kind) {
        case ObsKind::Masked:
          for (int u = 0; u < cover; ++u)
            key.push_back(bits[static_cast<std::size_t>(u)] ? voc.mask_id()
                                                            : static_seq[static_cast<std::size_t>(u)]);
          break;
        case ObsKind::MaxObs:
          for (int u = 0; u < cover; ++u) {
            key.push_back(bits[static_cast<std::size_t>(u)]);
            key.push_back(bits[static_cast<std::size_t>(u)] ? voc.null_id()
                                                            : static_seq[static_cast<std::size_t>(u)]);
          }
          break;
        case ObsKind::PreAug:
          for (int u = 0; u < cover; ++u) {
            key.push_back(bits[static_cast<std::size_t>(u)] ? voc.mask_id()
                                                            : static_seq[static_cast<std::size_t>(u)]);
            // side channel: the static token behind each mask
            key.push_back(bits[static_cast<std::size_t>(u)] ? static_seq[static_cast<std::size_t>(u)] : -1);
          }
          break;
        case ObsKind::AllAug:
          for (int u = 0; u < cover; ++u)
            key.push_back(bits[static_cast<std::size_t>(u)] ? voc.mask_id()
                                                            : static_seq[static_cast<std::size_t>(u)]);
          for (int u = 0; u < static_len; ++u) key.push_back(static_seq[static_cast<std::size_t>(u)]);
          break;
        default:
          throw std::invalid_argument("observation_space_size: unsupported kind");
      }
      seen.insert(std::move(key));
    } while (next_bits(bits));
  } while (next_assignment(static_seq, vocab));
  return static_cast<long>(seen.size());
}

double expected_advantage_bruteforce(
    const Policy& policy, const Observation& obs, int t, TokenId token,
    const std::function<double(std::span<const TokenId>)>& reward) {
  const int V = policy.vocab;
  if (token < 0 || token >= V)
    throw std::invalid_argument("expected_advantage_bruteforce: token out of range");

  std::vector<int> masked_pos;
  const int n = static_cast<int>(obs.slots.size());
  for (int u = 0; u < n; ++u) {
    const bool masked = (obs.kind == ObsKind::MaxObs)
                            ? obs.mask_bits[static_cast<std::size_t>(u)] != 0
                            : obs.slots[static_cast<std::size_t>(u)] >= V;
    if (masked) masked_pos.push_back(u);
  }
  int t_index = -1;
  for (std::size_t i = 0; i < masked_pos.size(); ++i)
    if (masked_pos[i] == t) t_index = static_cast<int>(i);
  if (t_index < 0)
    throw std::invalid_argument("expected_advantage_bruteforce: position is not masked");
  if (std::pow(static_cast<double>(V), static_cast<double>(masked_pos.size())) > kSupportCap)
    throw std::invalid_argument("expected_advantage_bruteforce: support too large");

  std::vector<std::vector<double>> rows;
  rows.reserve(masked_pos.size());
  for (int u : masked_pos) rows.push_back(policy_row(policy, obs, u));

  std::vector<TokenId> y(obs.slots.begin(), obs.slots.end());
  std::vector<TokenId> fill(masked_pos.size(), 0);
  double marginal = 0.0, conditional_num = 0.0;
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < masked_pos.size(); ++i) {
      y[static_cast<std::size_t>(masked_pos[i])] = fill[i];
      w *= rows[i][static_cast<std::size_t>(fill[i])];
    }
    const double r = reward(y);
    marginal += w * r;
    if (fill[static_cast<std::size_t>(t_index)] == token) conditional_num += w * r;
    if (!next_assignment(fill, V)) break;
  }
  const double p_token = rows[static_cast<std::size_t>(t_index)][static_cast<std::size_t>(token)];
  return conditional_num / p_token - marginal;
}

FpVerdict check_fp_minimality(std::span<const TrajectoryBatch> traces) {
  FpVerdict verdict;
  for (const auto& trace : traces) {
    ++verdict.traces;
    const int sum_mask = trace.mask.ones();
    std::ostringstream note;
    switch (trace.obs_kind) {
      case ObsKind::Masked:
      case ObsKind::NoisyMask:
      case ObsKind::AllAug:
      case ObsKind::PreAug:
        if (trace.fp_cost != 1) {
          verdict.pass = false;
          note << "masked-parallel trace cost " << trace.fp_cost << ", expected 1";
        }
        break;
      case ObsKind::FullState:
      case ObsKind::ScheduledSampling: {
        if (trace.fp_cost != static_cast<std::uint64_t>(sum_mask)) {
          verdict.pass = false;
          note << "sequential trace cost " << trace.fp_cost << ", expected " << sum_mask;
          break;
        }
        bool tainted = false;
        for (auto f : trace.obs_taint) tainted |= (f != 0);
        if (tainted) {
          ++verdict.one_fp_violations;
          if (trace.fp_cost < 2) {
            verdict.pass = false;
            note << "tainted trace below the 2-FP lower bound";
          } else {
            note << obs_kind_name(trace.obs_kind)
                 << " trace read a sampled token: violates 1-FP achievability (cost "
                 << trace.fp_cost << ")";
          }
        }
        break;
      }
      default:
        verdict.pass = false;
        note << "unexpected trace observation kind";
    }
    if (!note.str().empty()) verdict.notes.push_back(note.str());
  }
  return verdict;
}

}  // namespace semirl
