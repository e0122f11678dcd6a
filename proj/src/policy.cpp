#include "semirl/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace semirl {

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::TabularContext: return "tabular";
    case Backend::LinearFeature: return "linear";
  }
  return "?";
}

int FeatureSpec::dim() const {
  int d = horizon + contexts + (vocab + 1) + vocab;
  if (variant == FeatureVariant::AllAug) d += vocab;
  if (variant == FeatureVariant::PreAug) d += vocab;
  return d;
}

void FeatureSpec::extract(const Observation& obs, int t, std::vector<double>& out) const {
  out.assign(static_cast<std::size_t>(dim()), 0.0);
  int off = 0;

  out[static_cast<std::size_t>(off + t)] = 1.0;
  off += horizon;

  if (obs.context < 0 || obs.context >= contexts)
    throw std::invalid_argument("features: context out of range");
  out[static_cast<std::size_t>(off + obs.context)] = 1.0;
  off += contexts;

  // Previous slot; [M], NULL and END all land in the shared extra bucket so
  // masked and maximum observations featurize identically.
  if (t > 0 && t - 1 < static_cast<int>(obs.slots.size())) {
    TokenId prev = obs.slots[static_cast<std::size_t>(t - 1)];
    int idx = (prev >= 0 && prev < vocab) ? prev : vocab;
    out[static_cast<std::size_t>(off + idx)] = 1.0;
  }
  off += vocab + 1;

  // Bag of shown vocabulary tokens before t, scaled by 1/t.
  if (t > 0) {
    double w = 1.0 / static_cast<double>(t);
    int upto = std::min(t, static_cast<int>(obs.slots.size()));
    for (int u = 0; u < upto; ++u) {
      TokenId v = obs.slots[static_cast<std::size_t>(u)];
      if (v >= 0 && v < vocab) out[static_cast<std::size_t>(off + v)] += w;
    }
  }
  off += vocab;

  if (variant == FeatureVariant::AllAug) {
    // side = [END, static...]; absent side channels contribute zeros so a
    // policy trained on AllAug can still decode plain observations.
    if (obs.side.size() > 1) {
      double w = 1.0 / static_cast<double>(obs.side.size() - 1);
      for (std::size_t u = 1; u < obs.side.size(); ++u) {
        TokenId v = obs.side[u];
        if (v >= 0 && v < vocab) out[static_cast<std::size_t>(off + v)] += w;
      }
    }
    off += vocab;
  }
  if (variant == FeatureVariant::PreAug) {
    if (t < static_cast<int>(obs.side.size())) {
      TokenId v = obs.side[static_cast<std::size_t>(t)];
      if (v >= 0 && v < vocab) out[static_cast<std::size_t>(off + v)] = 1.0;
    }
    off += vocab;
  }
}

Policy Policy::tabular(int contexts, int horizon, int vocab) {
  if (contexts < 1 || horizon < 1) throw std::invalid_argument("Policy: bad shape");
  Vocab check(vocab);  // validates vocab >= 2
  Policy p;
  p.backend = Backend::TabularContext;
  p.vocab = vocab;
  p.horizon = horizon;
  p.contexts = contexts;
  p.params.assign(static_cast<std::size_t>(contexts) * static_cast<std::size_t>(horizon) *
                      static_cast<std::size_t>(vocab),
                  0.0);
  return p;
}

Policy Policy::linear(const FeatureSpec& spec) {
  if (spec.contexts < 1 || spec.horizon < 1) throw std::invalid_argument("Policy: bad shape");
  Vocab check(spec.vocab);
  Policy p;
  p.backend = Backend::LinearFeature;
  p.vocab = spec.vocab;
  p.horizon = spec.horizon;
  p.contexts = spec.contexts;
  p.features = spec;
  p.params.assign(static_cast<std::size_t>(spec.vocab) * static_cast<std::size_t>(spec.dim()),
                  0.0);
  return p;
}

Policy Policy::random_tabular(int contexts, int horizon, int vocab, std::uint64_t seed,
                              double scale) {
  Policy p = tabular(contexts, horizon, vocab);
  SeededRng rng(mix_keys(seed, 0x9011ULL));
  for (auto& w : p.params) w = (rng.uniform01() * 2.0 - 1.0) * scale;
  return p;
}

std::size_t Policy::tabular_index(ContextId x, int t, TokenId v) const {
  return (static_cast<std::size_t>(x) * static_cast<std::size_t>(horizon) +
          static_cast<std::size_t>(t)) *
             static_cast<std::size_t>(vocab) +
         static_cast<std::size_t>(v);
}

void softmax_inplace(std::vector<double>& logits) {
  double hi = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (auto& v : logits) {
    v = std::exp(v - hi);
    z += v;
  }
  for (auto& v : logits) v /= z;
}

namespace {

void check_position(const Policy& policy, const Observation& obs, int t) {
  if (t < 0 || t >= policy.horizon || t > static_cast<int>(obs.slots.size()))
    throw std::invalid_argument("policy: position out of range");
  if (obs.context < 0 || obs.context >= policy.contexts)
    throw std::invalid_argument("policy: context out of range");
}

std::vector<double> logits_at(const Policy& policy, const Observation& obs, int t,
                              std::vector<double>* feat_out) {
  std::vector<double> row(static_cast<std::size_t>(policy.vocab), 0.0);
  if (policy.backend == Backend::TabularContext) {
    const std::size_t base = policy.tabular_index(obs.context, t, 0);
    for (int v = 0; v < policy.vocab; ++v) row[static_cast<std::size_t>(v)] = policy.params[base + static_cast<std::size_t>(v)];
  } else {
    std::vector<double> local;
    std::vector<double>& f = feat_out ? *feat_out : local;
    policy.features.extract(obs, t, f);
    const int d = policy.features.dim();
    for (int v = 0; v < policy.vocab; ++v) {
      const double* w = policy.params.data() + static_cast<std::size_t>(v) * static_cast<std::size_t>(d);
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += w[j] * f[static_cast<std::size_t>(j)];
      row[static_cast<std::size_t>(v)] = s;
    }
  }
  return row;
}

}  // namespace

std::vector<double> policy_row(const Policy& policy, const Observation& obs, int t) {
  check_position(policy, obs, t);
  std::vector<double> row = logits_at(policy, obs, t, nullptr);
  softmax_inplace(row);
  return row;
}

std::vector<std::vector<double>> distributions(const Policy& policy, const Observation& obs,
                                               std::span<const int> positions, FpLedger& ledger) {
  ledger.add(1);
  std::vector<std::vector<double>> out;
  out.reserve(positions.size());
  for (int t : positions) out.push_back(policy_row(policy, obs, t));
  return out;
}

double log_prob(const Policy& policy, const Observation& obs, int t, TokenId a, FpLedger& ledger) {
  if (a < 0 || a >= policy.vocab) throw std::invalid_argument("log_prob: action out of range");
  const int pos[] = {t};
  auto rows = distributions(policy, obs, pos, ledger);
  return std::log(rows[0][static_cast<std::size_t>(a)]);
}

std::vector<double> grad_log_prob(const Policy& policy, const Observation& obs, int t, TokenId a) {
  std::vector<double> grad(policy.params.size(), 0.0);
  accumulate_grad_log_prob(policy, obs, t, a, 1.0, grad);
  return grad;
}

void accumulate_grad_log_prob(const Policy& policy, const Observation& obs, int t, TokenId a,
                              double coeff, std::vector<double>& grad) {
  check_position(policy, obs, t);
  if (a < 0 || a >= policy.vocab) throw std::invalid_argument("grad_log_prob: action out of range");
  if (grad.size() != policy.params.size())
    throw std::invalid_argument("grad_log_prob: gradient buffer size mismatch");

  std::vector<double> feat;
  std::vector<double> row = logits_at(policy, obs, t, &feat);
  softmax_inplace(row);

  if (policy.backend == Backend::TabularContext) {
    const std::size_t base = policy.tabular_index(obs.context, t, 0);
    for (int v = 0; v < policy.vocab; ++v) {
      double g = ((v == a) ? 1.0 : 0.0) - row[static_cast<std::size_t>(v)];
      grad[base + static_cast<std::size_t>(v)] += coeff * g;
    }
  } else {
    const int d = policy.features.dim();
    for (int v = 0; v < policy.vocab; ++v) {
      double g = coeff * (((v == a) ? 1.0 : 0.0) - row[static_cast<std::size_t>(v)]);
      if (g == 0.0) continue;
      double* w = grad.data() + static_cast<std::size_t>(v) * static_cast<std::size_t>(d);
      for (int j = 0; j < d; ++j) w[j] += g * feat[static_cast<std::size_t>(j)];
    }
  }
}

std::vector<TokenId> greedy_decode(const Policy& policy, ContextId x, int horizon,
                                   FpLedger& ledger) {
  if (horizon < 1 || horizon > policy.horizon)
    throw std::invalid_argument("greedy_decode: bad horizon");
  std::vector<TokenId> out;
  std::vector<std::uint8_t> bits;
  out.reserve(static_cast<std::size_t>(horizon));
  for (int t = 0; t < horizon; ++t) {
    Observation obs = full_state_observation(x, out, bits);
    const int pos[] = {t};
    auto rows = distributions(policy, obs, pos, ledger);
    const auto& row = rows[0];
    int best = 0;
    for (int v = 1; v < policy.vocab; ++v)
      if (row[static_cast<std::size_t>(v)] > row[static_cast<std::size_t>(best)]) best = v;
    out.push_back(best);
    bits.push_back(1);  // every decoded token is model-generated
  }
  return out;
}

}  // namespace semirl
