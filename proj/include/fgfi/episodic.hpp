// Copyright 2026 The fgfi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef FGFI_EPISODIC_HPP
#define FGFI_EPISODIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fgfi/error.hpp"
#include "fgfi/feature_io.hpp"
#include "fgfi/model.hpp"
#include "fgfi/rng.hpp"

// Episodic protocol: an episode draws N speakers and, for each, K
// disjoint support and Q query samples. Support embeddings average into
// one prototype per speaker; a query is classified by a softmax over its
// (negated) distances to the prototypes, and the training loss is the
// mean negative log probability of the true speaker over all queries.

namespace fgfi {

struct Dataset {
  std::vector<LogMelFeature> samples;
  std::vector<std::string> sample_paths;               // parallel, may be empty
  std::vector<std::int64_t> speaker_of;                // sample -> speaker index
  std::vector<std::string> speaker_ids;                // speaker index -> id
  std::vector<std::vector<std::int64_t>> by_speaker;   // speaker index -> samples

  std::int64_t num_samples() const { return static_cast<std::int64_t>(samples.size()); }
  std::int64_t num_speakers() const { return static_cast<std::int64_t>(speaker_ids.size()); }

  /// Groups features by speaker label, speakers ordered by first
  /// appearance.
  static Dataset from_features(std::vector<LogMelFeature> features,
                               std::vector<std::string> paths = {}) {
    Dataset ds;
    ds.samples = std::move(features);
    ds.sample_paths = std::move(paths);
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
      const std::string& label = ds.samples[i].speaker_label;
      require(!label.empty(), "dataset: sample " + std::to_string(i) + " has no speaker label");
      std::int64_t sp = -1;
      for (std::size_t k = 0; k < ds.speaker_ids.size(); ++k) {
        if (ds.speaker_ids[k] == label) {
          sp = static_cast<std::int64_t>(k);
          break;
        }
      }
      if (sp < 0) {
        sp = ds.num_speakers();
        ds.speaker_ids.push_back(label);
        ds.by_speaker.emplace_back();
      }
      ds.speaker_of.push_back(sp);
      ds.by_speaker[static_cast<std::size_t>(sp)].push_back(static_cast<std::int64_t>(i));
    }
    return ds;
  }

  static Dataset load(const std::string& manifest_path) {
    const auto entries = read_manifest(manifest_path);
    std::vector<LogMelFeature> features;
    std::vector<std::string> paths;
    features.reserve(entries.size());
    for (const auto& e : entries) {
      const std::string resolved = resolve_manifest_path(manifest_path, e.path);
      LogMelFeature f = read_features(resolved);
      f.speaker_label = e.speaker_id;
      features.push_back(std::move(f));
      paths.push_back(resolved);
    }
    return from_features(std::move(features), std::move(paths));
  }
};

struct Episode {
  std::int64_t n_way = 0;
  std::int64_t k_shot = 0;
  std::int64_t query_shot = 0;
  std::vector<std::int64_t> speakers;                // dataset speaker indices
  std::vector<std::vector<std::int64_t>> support;    // [n_way][k_shot] sample indices
  std::vector<std::vector<std::int64_t>> query;      // [n_way][query_shot]
};

/// Draws N speakers and K+Q samples per speaker without replacement;
/// support and query sets are disjoint by construction. Only speakers
/// with at least K+Q samples are eligible.
inline Episode sample_episode(const Dataset& ds, std::int64_t n_way, std::int64_t k_shot,
                              std::int64_t query_shot, SplitMix64& rng) {
  require(n_way >= 1 && k_shot >= 1 && query_shot >= 1, "episode: counts must be >= 1");
  std::vector<std::int64_t> eligible;
  for (std::int64_t s = 0; s < ds.num_speakers(); ++s) {
    if (static_cast<std::int64_t>(ds.by_speaker[static_cast<std::size_t>(s)].size()) >=
        k_shot + query_shot)
      eligible.push_back(s);
  }
  require(static_cast<std::int64_t>(eligible.size()) >= n_way,
          "episode: need " + std::to_string(n_way) + " speakers with >= " +
              std::to_string(k_shot + query_shot) + " samples, have " +
              std::to_string(eligible.size()));

  auto partial_shuffle = [&rng](std::vector<std::int64_t>& v, std::int64_t take) {
    for (std::int64_t i = 0; i < take; ++i) {
      const std::int64_t j =
          i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(
                  static_cast<std::int64_t>(v.size()) - i)));
      std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
    }
  };

  partial_shuffle(eligible, n_way);
  Episode ep;
  ep.n_way = n_way;
  ep.k_shot = k_shot;
  ep.query_shot = query_shot;
  ep.speakers.assign(eligible.begin(), eligible.begin() + n_way);
  for (std::int64_t s : ep.speakers) {
    std::vector<std::int64_t> pool = ds.by_speaker[static_cast<std::size_t>(s)];
    partial_shuffle(pool, k_shot + query_shot);
    ep.support.emplace_back(pool.begin(), pool.begin() + k_shot);
    ep.query.emplace_back(pool.begin() + k_shot, pool.begin() + k_shot + query_shot);
  }
  return ep;
}

/// Per-speaker arithmetic mean of support embeddings.
inline std::vector<std::vector<double>> prototypes(
    const std::vector<std::vector<std::vector<double>>>& support_embeddings) {
  require(!support_embeddings.empty(), "prototypes: no classes");
  std::vector<std::vector<double>> out;
  out.reserve(support_embeddings.size());
  for (const auto& cls : support_embeddings) {
    require(!cls.empty(), "prototypes: empty class");
    std::vector<double> mean(cls.front().size(), 0.0);
    for (const auto& e : cls) {
      require(e.size() == mean.size(), "prototypes: embedding dimension mismatch");
      for (std::size_t i = 0; i < e.size(); ++i) mean[i] += e[i];
    }
    for (auto& v : mean) v /= static_cast<double>(cls.size());
    out.push_back(std::move(mean));
  }
  return out;
}

inline double embedding_distance(const std::vector<double>& a, const std::vector<double>& b,
                                 DistanceKind kind) {
  require(a.size() == b.size(), "distance: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return kind == DistanceKind::kSquaredEuclidean ? acc : std::sqrt(acc);
}

/// Probability of each speaker for one query embedding: softmax over the
/// negated distances to the prototypes, stabilised by subtracting the
/// largest exponent.
inline std::vector<double> classify(const std::vector<double>& query,
                                    const std::vector<std::vector<double>>& protos,
                                    DistanceKind kind = DistanceKind::kSquaredEuclidean) {
  require(!protos.empty(), "classify: no prototypes");
  std::vector<double> neg(protos.size());
  for (std::size_t n = 0; n < protos.size(); ++n)
    neg[n] = -embedding_distance(protos[n], query, kind);
  const double m = *std::max_element(neg.begin(), neg.end());
  double z = 0.0;
  for (auto& v : neg) {
    v = std::exp(v - m);
    z += v;
  }
  for (auto& v : neg) v /= z;
  return neg;
}

namespace detail {

inline Var distance_var(const Var& a, const Var& b, DistanceKind kind) {
  return kind == DistanceKind::kSquaredEuclidean ? squared_euclidean(a, b) : euclidean(a, b);
}

}  // namespace detail

/// Differentiable episode loss: mean over all queries of the negative
/// log probability of the true speaker.
inline Var episode_loss(const Episode& ep, const Dataset& ds, const ModelParams& params) {
  require(ep.n_way >= 1 && !ep.support.empty() && !ep.query.empty(), "episode_loss: empty episode");
  std::vector<Var> protos;
  protos.reserve(static_cast<std::size_t>(ep.n_way));
  for (const auto& cls : ep.support) {
    std::vector<Var> embeds;
    embeds.reserve(cls.size());
    for (std::int64_t idx : cls)
      embeds.push_back(embed(ds.samples[static_cast<std::size_t>(idx)], params));
    protos.push_back(mean_over_first_axis(embeds));
  }
  std::vector<Var> losses;
  for (std::size_t n = 0; n < ep.query.size(); ++n) {
    for (std::int64_t idx : ep.query[n]) {
      Var q = embed(ds.samples[static_cast<std::size_t>(idx)], params);
      std::vector<Var> dists;
      dists.reserve(protos.size());
      for (const Var& proto : protos)
        dists.push_back(detail::distance_var(proto, q, params.config.distance));
      losses.push_back(nll_from_distances(stack_scalars(dists), static_cast<std::int64_t>(n)));
    }
  }
  return mean_scalars(losses);
}

struct TrainSpec {
  std::int64_t episodes_total = 300;
  std::int64_t n_way = 5;
  std::int64_t k_shot = 5;
  std::int64_t query_shot = 0;  // 0 means "same as k_shot"
  double learning_rate = 0.05;
  std::uint64_t seed = 1;

  std::int64_t effective_query_shot() const { return query_shot > 0 ? query_shot : k_shot; }

  void validate() const {
    require(episodes_total >= 1, "train: episodes_total must be >= 1");
    require(n_way >= 1 && k_shot >= 1 && query_shot >= 0, "train: episode counts must be >= 1");
    require(std::isfinite(learning_rate) && learning_rate >= 0.0,
            "train: learning_rate must be finite and >= 0");
  }
};

struct TrainResult {
  std::vector<double> loss_trace;  // one entry per episode
};

inline void sgd_step(const std::vector<Var>& params, double lr) {
  for (const Var& vp : params) {
    Var v = vp;
    if (!v.tensor().has_grad()) continue;
    double* x = v.tensor().data();
    const std::vector<double>& g = v.grad();
    for (std::int64_t i = 0; i < v.size(); ++i) x[i] -= lr * g[static_cast<std::size_t>(i)];
    v.zero_grad();
  }
}

/// Plain episodic SGD: sample, forward, backward, update. The loss trace
/// holds one value per episode. Deterministic under the spec seed; a
/// non-finite loss or parameter aborts with context.
inline TrainResult train(const TrainSpec& spec, const Dataset& ds, ModelParams& params) {
  spec.validate();
  params.config.validate();
  SplitMix64 rng(spec.seed);
  const std::int64_t q = spec.effective_query_shot();
  std::vector<Var> trainable = params.trainable();
  for (Var& v : trainable) {
    v.ensure_grad();
    v.zero_grad();
  }

  TrainResult result;
  result.loss_trace.reserve(static_cast<std::size_t>(spec.episodes_total));
  for (std::int64_t e = 0; e < spec.episodes_total; ++e) {
    const Episode ep = sample_episode(ds, spec.n_way, spec.k_shot, q, rng);
    Var loss = episode_loss(ep, ds, params);
    const double value = loss.scalar_value();
    if (!std::isfinite(value))
      throw NumericError("train: non-finite loss " + std::to_string(value) + " at episode " +
                         std::to_string(e));
    backward(loss, /*release_buffers=*/true);
    sgd_step(trainable, spec.learning_rate);
    for (const Var& v : trainable) v.tensor().check_finite("parameters after episode " +
                                                           std::to_string(e));
    result.loss_trace.push_back(value);
  }
  return result;
}

/// Accuracy of argmax classification over seeded evaluation episodes.
/// `embed_fn` maps a feature to an embedding vector; the default wrapper
/// below uses the model.
template <typename EmbedFn>
double eval_accuracy_with(const Dataset& ds, EmbedFn&& embed_fn, DistanceKind kind,
                          std::int64_t n_way, std::int64_t k_shot, std::int64_t episodes,
                          std::uint64_t seed) {
  require(episodes >= 1, "eval: episodes must be >= 1");
  SplitMix64 rng(seed);
  std::int64_t correct = 0, total = 0;
  for (std::int64_t e = 0; e < episodes; ++e) {
    const Episode ep = sample_episode(ds, n_way, k_shot, k_shot, rng);
    std::vector<std::vector<std::vector<double>>> support;
    for (const auto& cls : ep.support) {
      std::vector<std::vector<double>> embeds;
      for (std::int64_t idx : cls)
        embeds.push_back(embed_fn(ds.samples[static_cast<std::size_t>(idx)]));
      support.push_back(std::move(embeds));
    }
    const auto protos = prototypes(support);
    for (std::size_t n = 0; n < ep.query.size(); ++n) {
      for (std::int64_t idx : ep.query[n]) {
        const auto p = classify(embed_fn(ds.samples[static_cast<std::size_t>(idx)]), protos, kind);
        const std::size_t pred = static_cast<std::size_t>(
            std::max_element(p.begin(), p.end()) - p.begin());
        correct += pred == n ? 1 : 0;
        ++total;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

inline double eval_accuracy(const Dataset& ds, const ModelParams& params, std::int64_t n_way,
                            std::int64_t k_shot, std::int64_t episodes, std::uint64_t seed) {
  return eval_accuracy_with(
      ds, [&params](const LogMelFeature& f) { return embed_feature(f, params).values; },
      params.config.distance, n_way, k_shot, episodes, seed);
}

/// Equal error rate from accept-if-score>=threshold trials. Sweeps every
/// candidate threshold; where the false-rejection and false-acceptance
/// rates cross between candidates, both are interpolated linearly.
inline double compute_eer(std::vector<double> target_scores, std::vector<double> nontarget_scores) {
  require(!target_scores.empty() && !nontarget_scores.empty(),
          "eer: need at least one trial of each polarity");
  std::sort(target_scores.begin(), target_scores.end());
  std::sort(nontarget_scores.begin(), nontarget_scores.end());

  std::vector<double> candidates;
  candidates.reserve(target_scores.size() + nontarget_scores.size() + 1);
  std::merge(target_scores.begin(), target_scores.end(), nontarget_scores.begin(),
             nontarget_scores.end(), std::back_inserter(candidates));
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  candidates.push_back(candidates.back() + 1.0);  // sentinel: everything rejected

  auto frr_at = [&](double th) {
    const auto n = std::lower_bound(target_scores.begin(), target_scores.end(), th) -
                   target_scores.begin();
    return static_cast<double>(n) / static_cast<double>(target_scores.size());
  };
  auto far_at = [&](double th) {
    const auto n = nontarget_scores.end() -
                   std::lower_bound(nontarget_scores.begin(), nontarget_scores.end(), th);
    return static_cast<double>(n) / static_cast<double>(nontarget_scores.size());
  };

  double prev_frr = 0.0, prev_diff = -1.0;
  bool have_prev = false;
  for (double th : candidates) {
    const double frr = frr_at(th);
    const double far = far_at(th);
    const double diff = frr - far;
    if (diff == 0.0) return frr;
    if (diff > 0.0) {
      if (!have_prev) return frr;
      const double t = -prev_diff / (diff - prev_diff);
      return prev_frr + t * (frr - prev_frr);
    }
    prev_frr = frr;
    prev_diff = diff;
    have_prev = true;
  }
  return 1.0;  // unreachable: the sentinel rejects everything
}

struct EerResult {
  double eer = 0.0;
  std::int64_t target_trials = 0;
  std::int64_t nontarget_trials = 0;
};

/// Verification protocol: all same-speaker pairs up to `max_target_trials`
/// plus an equal number of random different-speaker pairs; the score of a
/// pair is the negated embedding distance.
template <typename EmbedFn>
EerResult verification_eer_with(const Dataset& ds, EmbedFn&& embed_fn, DistanceKind kind,
                                std::int64_t max_target_trials, std::uint64_t seed) {
  require(ds.num_speakers() >= 2, "eer: need at least two speakers");
  require(max_target_trials >= 1, "eer: need at least one trial");
  SplitMix64 rng(seed);

  std::vector<std::vector<double>> embeds(static_cast<std::size_t>(ds.num_samples()));
  for (std::int64_t i = 0; i < ds.num_samples(); ++i)
    embeds[static_cast<std::size_t>(i)] = embed_fn(ds.samples[static_cast<std::size_t>(i)]);

  std::vector<std::pair<std::int64_t, std::int64_t>> target_pairs;
  for (const auto& cls : ds.by_speaker)
    for (std::size_t i = 0; i < cls.size(); ++i)
      for (std::size_t j = i + 1; j < cls.size(); ++j)
        target_pairs.emplace_back(cls[i], cls[j]);
  require(!target_pairs.empty(), "eer: no same-speaker pairs available");
  if (static_cast<std::int64_t>(target_pairs.size()) > max_target_trials) {
    for (std::int64_t i = 0; i < max_target_trials; ++i) {
      const std::int64_t j =
          i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(
                  static_cast<std::int64_t>(target_pairs.size()) - i)));
      std::swap(target_pairs[static_cast<std::size_t>(i)],
                target_pairs[static_cast<std::size_t>(j)]);
    }
    target_pairs.resize(static_cast<std::size_t>(max_target_trials));
  }

  std::vector<double> targets, nontargets;
  targets.reserve(target_pairs.size());
  for (const auto& [a, b] : target_pairs)
    targets.push_back(-embedding_distance(embeds[static_cast<std::size_t>(a)],
                                          embeds[static_cast<std::size_t>(b)], kind));
  while (nontargets.size() < targets.size()) {
    const std::int64_t a =
        static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(ds.num_samples())));
    const std::int64_t b =
        static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(ds.num_samples())));
    if (ds.speaker_of[static_cast<std::size_t>(a)] == ds.speaker_of[static_cast<std::size_t>(b)])
      continue;
    nontargets.push_back(-embedding_distance(embeds[static_cast<std::size_t>(a)],
                                             embeds[static_cast<std::size_t>(b)], kind));
  }

  EerResult r;
  r.target_trials = static_cast<std::int64_t>(targets.size());
  r.nontarget_trials = static_cast<std::int64_t>(nontargets.size());
  r.eer = compute_eer(std::move(targets), std::move(nontargets));
  return r;
}

inline EerResult verification_eer(const Dataset& ds, const ModelParams& params,
                                  std::int64_t max_target_trials, std::uint64_t seed) {
  return verification_eer_with(
      ds, [&params](const LogMelFeature& f) { return embed_feature(f, params).values; },
      params.config.distance, max_target_trials, seed);
}

}  // namespace fgfi

#endif  // FGFI_EPISODIC_HPP
