#pragma once

#include <cstdint>
#include <vector>

#include "qsrf/corpus.hpp"
#include "qsrf/types.hpp"

namespace qsrf {

/// Generator layout for a planted-signal corpus. Tags split into four
/// disjoint pools: cluster-identity tags (always on for the cluster's
/// items), a style pool from which each cluster draws its own subset that
/// items include at random (within-cluster variance the dictionaries must
/// model), per-signal-atom tag blocks whose inclusion probability is the
/// item's signal grade, and a rare-noise remainder. Clicks are graded by
/// the signal coordinate for each user's preferred signal cluster plus a
/// uniform background process, so the signal-atom directions carry all of
/// the learnable label signal.
struct SyntheticSpec {
  std::int32_t users = 600;
  std::int32_t items = 12000;
  std::int32_t tags = 150;
  std::int32_t clusters = 50;
  std::int32_t signal_atoms = 5;
  std::int32_t centroid_pool = 26;
  std::int32_t tags_per_centroid = 3;
  std::int32_t style_pool = 19;
  double style_prob = 0.02;  // diffuse per-item style noise
  std::int32_t tags_per_signal = 20;
  double signal_active_prob = 0.7;  // fraction of signal-cluster items with a grade
  double grade_floor = 0.55;         // grades drawn from U(grade_floor, 1)
  double click_scale = 0.9;   // click probability = scale * grade^power
  double click_power = 6.0;   // sharpness of the grade-to-click response
  std::int32_t background_clicks = 8;
  double rare_prob = 0.005;
};

struct SyntheticData {
  InteractionLog log;
  SparseMatrix tags;                       // binary items x tags
  Matrix planted_signal;                   // tags x signal_atoms, unit columns
                                           // in tf-idf coordinates
  std::vector<std::int32_t> item_cluster;  // generator-side membership
  std::vector<double> item_grade;          // signal grade per item (0 = none)
};

SyntheticData gen_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// rows x cols Gaussian matrix of the given rank plus isotropic noise whose
/// squared Frobenius norm is `noise_energy` times the signal's.
Matrix gen_low_rank(Index rows, Index cols, Index rank, double noise_energy,
                    std::uint64_t seed);

/// Greedy one-to-one assignment of planted directions to dictionary columns
/// by absolute cosine; returns the matched |cos| per planted column.
std::vector<double> match_planted(const Eigen::Ref<const Matrix>& planted,
                                  const Eigen::Ref<const Matrix>& atoms);

}  // namespace qsrf
