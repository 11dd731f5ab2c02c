#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qsrf/types.hpp"

namespace qsrf {

struct Interaction {
  std::int32_t user = 0;
  std::int32_t item = 0;
  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Implicit-feedback click log. Presence of a (user, item) pair means a
/// click; there are no ratings and no duplicate pairs after load.
struct InteractionLog {
  std::vector<Interaction> entries;
  std::int32_t n_users = 0;
  std::int32_t n_items = 0;
};

/// Loads a UTF-8 text log, one `user<TAB>item` pair per line, with an
/// optional header `#users=<n> items=<m>`. Duplicates are dropped keeping
/// first occurrence; dimensions default to max id + 1.
/// Throws std::runtime_error on malformed lines (with line number) and on
/// empty files.
InteractionLog load_interactions(const std::string& path);
void save_interactions(const InteractionLog& log, const std::string& path);

/// Loads an item-tag matrix from COO text: header `#items=<n> tags=<m>`,
/// lines `item<TAB>tag<TAB>value`.
SparseMatrix load_tag_matrix(const std::string& path);
void save_tag_matrix(const SparseMatrix& tags, const std::string& path);

/// TF-IDF over items-as-documents with smoothed natural-log idf,
///   value(i,j) = tf(i,j) * (ln((1 + n_rows) / (1 + df_j)) + 1),
/// followed by L2 normalization of every nonzero row. Zero rows stay zero
/// and the sparsity pattern is preserved.
SparseMatrix tfidf(const SparseMatrix& tags);

enum class SplitRole { Train, Valid, Test };

/// Interaction indices belonging to one split role. The role is part of the
/// type so that a stage cannot silently consume test rows.
template <SplitRole Role>
struct SplitPart {
  std::vector<std::int32_t> rows;
  static constexpr SplitRole role = Role;
};

/// User-stratified 64:16:20 partition of interaction indices.
struct Split {
  SplitPart<SplitRole::Train> train;
  SplitPart<SplitRole::Valid> valid;
  SplitPart<SplitRole::Test> test;
  std::int32_t single_interaction_users = 0;
};

/// Deterministic per-user split: shuffle each user's interactions with a
/// seed derived from (seed, user), hold out 20% for test (floor on the
/// train+valid share), then 20% of the remainder for validation. Users with
/// a single interaction go entirely to train; every user with >= 2
/// interactions keeps at least one train row.
Split stratified_split(const InteractionLog& log, std::uint64_t seed);

/// Item lists per user for one split part, in split order.
template <SplitRole Role>
std::vector<std::vector<std::int32_t>> items_by_user(
    const InteractionLog& log, const SplitPart<Role>& part) {
  std::vector<std::vector<std::int32_t>> out(
      static_cast<std::size_t>(log.n_users));
  for (std::int32_t row : part.rows) {
    const Interaction& e = log.entries[static_cast<std::size_t>(row)];
    out[static_cast<std::size_t>(e.user)].push_back(e.item);
  }
  return out;
}

}  // namespace qsrf
