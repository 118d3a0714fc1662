#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "evret/errors.hpp"
#include "evret/identification.hpp"
#include "evret/matrix.hpp"
#include "evret/rng.hpp"

namespace evret {

struct ClipQueryBlock {
  std::size_t video = 0;
  std::vector<std::size_t> query_ids;  // global indices of this video's positive queries
  Matrix sims;                         // clips x positives
};

struct ArchetypeMix {
  double precise = 1.0 / 3.0;
  double polysemous = 1.0 / 3.0;
  double under_determined = 1.0 / 3.0;

  void validate() const {
    if (!(precise >= 0.0 && polysemous >= 0.0 && under_determined >= 0.0) ||
        std::abs(precise + polysemous + under_determined - 1.0) > 1e-9)
      throw config_error("mix: fractions must be nonnegative and sum to 1");
  }
};

struct Instance {
  Matrix s_f, s_c;                  // queries x videos, per branch
  std::vector<std::size_t> labels;  // annotated video per query
  std::vector<ClipQueryBlock> clip_query;
  std::vector<QueryCategory> planted_truth;  // empty when unknown

  std::size_t n_queries() const { return s_f.rows(); }
  std::size_t n_videos() const { return s_f.cols(); }

  Matrix one_hot_labels() const {
    Matrix y(labels.size(), n_videos());
    for (std::size_t i = 0; i < labels.size(); ++i) y(i, labels[i]) = 1.0;
    return y;
  }

  void validate() const {
    if (s_f.rows() == 0 || s_f.cols() == 0) throw input_error("instance: empty similarity matrix");
    if (s_c.rows() != s_f.rows() || s_c.cols() != s_f.cols())
      throw input_error("instance: branch matrices disagree in shape");
    if (labels.size() != s_f.rows()) throw input_error("instance: one label per query required");
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] >= s_f.cols())
        throw input_error("instance: label out of range at query " + std::to_string(i));
    if (!planted_truth.empty() && planted_truth.size() != labels.size())
      throw input_error("instance: planted truth must cover every query");
    for (const auto& block : clip_query) {
      if (block.video >= s_f.cols()) throw input_error("instance: clip block video out of range");
      if (block.sims.cols() != block.query_ids.size() || block.sims.rows() == 0)
        throw input_error("instance: clip block shape mismatch (video " +
                          std::to_string(block.video) + ")");
      for (std::size_t q : block.query_ids)
        if (q >= labels.size() || labels[q] != block.video)
          throw input_error("instance: clip block lists a non-positive query (video " +
                            std::to_string(block.video) + ")");
    }
  }
};

namespace detail {

// Largest-remainder apportionment so category counts are exact for any mix.
inline std::vector<std::size_t> apportion(std::size_t n, const ArchetypeMix& mix) {
  const double fr[3] = {mix.precise, mix.polysemous, mix.under_determined};
  std::size_t counts[3];
  double rem[3];
  std::size_t assigned = 0;
  for (int k = 0; k < 3; ++k) {
    double exact = fr[k] * static_cast<double>(n);
    counts[k] = static_cast<std::size_t>(std::floor(exact));
    rem[k] = exact - std::floor(exact);
    assigned += counts[k];
  }
  while (assigned < n) {
    int best = 0;
    for (int k = 1; k < 3; ++k)
      if (rem[k] > rem[best]) best = k;
    ++counts[best];
    rem[best] = -1.0;
    ++assigned;
  }
  std::vector<std::size_t> out;
  out.reserve(n);
  for (int k = 0; k < 3; ++k) out.insert(out.end(), counts[k], static_cast<std::size_t>(k));
  return out;
}

}  // namespace detail

// Plants one of three score archetypes per query:
//   precise:          labeled video ~ U(0.7, 0.9), everything else ~ U(0.0, 0.2)
//   polysemous:       labeled and 2-3 distractor videos ~ U(0.6, 0.8), rest ~ U(0.0, 0.2)
//   under-determined: every video ~ U(0.0, 0.15)
// The distractor video set is drawn once per query and shared by both
// branches (an ambiguous query is ambiguous about the same rivals in either
// view); the score values themselves are drawn independently per branch.
// Every random decision comes from a named stream keyed on (seed, role,
// entity index), so output is bit-identical across platforms and runs.
inline Instance synth_generate(std::size_t n_queries, std::size_t n_videos,
                               std::size_t n_clips, const ArchetypeMix& mix,
                               std::uint64_t seed) {
  if (n_queries < 1 || n_videos < 1 || n_clips < 1)
    throw input_error("synth: counts must be >= 1");
  mix.validate();

  Instance inst;
  inst.planted_truth = [&] {
    auto cats_idx = detail::apportion(n_queries, mix);
    Rng rng(stream_seed(seed, "categories"));
    shuffle(cats_idx, rng);
    std::vector<QueryCategory> cats(n_queries);
    for (std::size_t i = 0; i < n_queries; ++i)
      cats[i] = static_cast<QueryCategory>(cats_idx[i]);
    return cats;
  }();

  inst.labels.resize(n_queries);
  {
    Rng rng(stream_seed(seed, "labels"));
    for (std::size_t i = 0; i < n_queries; ++i) inst.labels[i] = rng.below(n_videos);
  }

  std::vector<std::vector<std::size_t>> distractors(n_queries);
  for (std::size_t i = 0; i < n_queries; ++i) {
    if (inst.planted_truth[i] != QueryCategory::Polysemous || n_videos < 2) continue;
    Rng rng(stream_seed(seed, "distractors", i));
    std::size_t want = std::min<std::size_t>(2 + rng.below(2), n_videos - 1);
    auto& set = distractors[i];
    while (set.size() < want) {
      std::size_t v = rng.below(n_videos);
      if (v == inst.labels[i]) continue;
      if (std::find(set.begin(), set.end(), v) != set.end()) continue;
      set.push_back(v);
    }
  }

  auto fill_branch = [&](const char* stream) {
    Matrix s(n_queries, n_videos);
    for (std::size_t i = 0; i < n_queries; ++i) {
      Rng rng(stream_seed(seed, stream, i));
      auto row = s.row(i);
      switch (inst.planted_truth[i]) {
        case QueryCategory::Precise:
          for (std::size_t j = 0; j < n_videos; ++j) row[j] = rng.uniform(0.0, 0.2);
          row[inst.labels[i]] = rng.uniform(0.7, 0.9);
          break;
        case QueryCategory::Polysemous:
          for (std::size_t j = 0; j < n_videos; ++j) row[j] = rng.uniform(0.0, 0.2);
          row[inst.labels[i]] = rng.uniform(0.6, 0.8);
          for (std::size_t v : distractors[i]) row[v] = rng.uniform(0.6, 0.8);
          break;
        case QueryCategory::UnderDetermined:
          for (std::size_t j = 0; j < n_videos; ++j) row[j] = rng.uniform(0.0, 0.15);
          break;
      }
    }
    return s;
  };
  inst.s_f = fill_branch("scores.frame");
  inst.s_c = fill_branch("scores.clip");

  for (std::size_t v = 0; v < n_videos; ++v) {
    ClipQueryBlock block;
    block.video = v;
    for (std::size_t i = 0; i < n_queries; ++i)
      if (inst.labels[i] == v) block.query_ids.push_back(i);
    if (block.query_ids.empty()) continue;
    Rng rng(stream_seed(seed, "clips", v));
    block.sims = Matrix(n_clips, block.query_ids.size());
    for (std::size_t col = 0; col < block.query_ids.size(); ++col) {
      for (std::size_t r = 0; r < n_clips; ++r) block.sims(r, col) = rng.uniform(0.0, 0.2);
      std::size_t span = std::min<std::size_t>(2 + rng.below(3), n_clips);
      std::size_t start = rng.below(n_clips - span + 1);
      for (std::size_t r = start; r < start + span; ++r)
        block.sims(r, col) = rng.uniform(0.5, 0.8);
    }
    inst.clip_query.push_back(std::move(block));
  }

  inst.validate();
  return inst;
}

}  // namespace evret
