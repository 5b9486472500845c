// Copyright 2026 The collabrec Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef COLLABREC_DATASET_HPP_
#define COLLABREC_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "collabrec/seed.hpp"
#include "collabrec/types.hpp"

namespace collabrec {

struct Rating {
  Index user = 0;
  Index item = 0;
  double value = 0.0;

  friend bool operator==(const Rating&, const Rating&) = default;
};

struct RatingScale {
  double min = 0.0;
  double max = 0.0;

  friend bool operator==(const RatingScale&, const RatingScale&) = default;
};

// Sparse user x item ratings. Entries are kept sorted by (user, item) and the
// constructor rejects duplicates, out-of-range indices and off-scale ratings.
class RatingMatrix {
 public:
  RatingMatrix() = default;
  RatingMatrix(std::vector<std::int64_t> user_ids,
               std::vector<std::int64_t> item_ids, std::vector<Rating> entries,
               RatingScale scale);

  Index num_users() const { return static_cast<Index>(user_ids_.size()); }
  Index num_items() const { return static_cast<Index>(item_ids_.size()); }
  Index size() const { return static_cast<Index>(entries_.size()); }
  bool empty() const { return entries_.empty(); }

  const std::vector<std::int64_t>& user_ids() const { return user_ids_; }
  const std::vector<std::int64_t>& item_ids() const { return item_ids_; }
  std::span<const Rating> entries() const { return entries_; }
  RatingScale scale() const { return scale_; }

  // Entries of one user, contiguous because of the (user, item) ordering.
  std::span<const Rating> user_entries(Index user) const;
  std::vector<Index> ratings_per_user() const;

  friend bool operator==(const RatingMatrix&, const RatingMatrix&) = default;

 private:
  std::vector<std::int64_t> user_ids_;
  std::vector<std::int64_t> item_ids_;
  std::vector<Rating> entries_;
  std::vector<Index> user_offsets_;  // size num_users + 1
  RatingScale scale_;
};

// Tab-separated user, item, rating, timestamp (the MovieLens u.data layout).
// File ids map to dense indices in ascending id order. Scale is (1, 5).
RatingMatrix load_movielens(const std::filesystem::path& path);

// One line per user, 100 space-separated scores in {-1, 0, ..., 4}, -1 meaning
// unrated (the sushi3b score layout). Scale is (0, 4). A line may carry at
// most 10 scores.
RatingMatrix load_sushi(const std::filesystem::path& path);

inline constexpr Index kSushiItems = 100;
inline constexpr Index kSushiRatingsPerUser = 10;

RatingMatrix transpose(const RatingMatrix& ratings);

struct SplitRatings {
  RatingMatrix train;
  RatingMatrix test;
};

// Number of held-out ratings for a user with `count` ratings: round half up
// of test_fraction * count, zero for users with fewer than two ratings and
// never more than count - 1.
Index test_count_for(Index count, double test_fraction);

SplitRatings split_train_test(const RatingMatrix& ratings, double test_fraction,
                              Rng& rng);

// Users dealt to m parties. Each block is sorted ascending; the global order
// (block 0, block 1, ...) fixes the user dummy columns.
class PartyAssignment {
 public:
  PartyAssignment() = default;
  PartyAssignment(Index num_users, std::vector<std::vector<Index>> user_blocks);

  Index parties() const { return static_cast<Index>(blocks_.size()); }
  Index num_users() const { return static_cast<Index>(column_of_.size()); }
  Index assigned_users() const {
    return static_cast<Index>(global_order_.size());
  }
  const std::vector<Index>& block(Index party) const;
  const std::vector<std::vector<Index>>& blocks() const { return blocks_; }
  const std::vector<Index>& global_user_order() const { return global_order_; }

  std::optional<Index> column_of(Index user) const;
  std::optional<Index> party_of(Index user) const;

  // The first `parties` blocks, re-laid out as their own assignment.
  PartyAssignment prefix(Index parties) const;

 private:
  std::vector<std::vector<Index>> blocks_;
  std::vector<Index> global_order_;
  std::vector<Index> column_of_;  // -1 when unassigned
  std::vector<Index> party_of_;   // -1 when unassigned
};

// Draws parties * users_per_party distinct users uniformly among users that
// have at least one rating in `ratings`.
PartyAssignment partition_horizontal(const RatingMatrix& ratings, Index parties,
                                     Index users_per_party, Rng& rng);

// Ratings of one party's users, in (user, item) order.
std::vector<Rating> party_entries(const RatingMatrix& ratings,
                                  const PartyAssignment& assignment,
                                  Index party);

// One-hot regression rows: user dummies first (global order), item dummies
// after. Row r has exactly two ones and y[r] holds the rating.
struct FlattenedDataset {
  SparseMatrix x;
  Vector y;
  Index p_users = 0;
  Index p_items = 0;

  Index rows() const { return x.rows(); }
  Index cols() const { return p_users + p_items; }
};

FlattenedDataset flatten(std::span<const Rating> entries,
                         const PartyAssignment& assignment, Index item_count);

// Reads the two hot columns of each row back into ratings.
std::vector<Rating> unflatten(const FlattenedDataset& data,
                              const PartyAssignment& assignment);

// Vertical concatenation in argument order.
FlattenedDataset stack(std::span<const FlattenedDataset> parts);

}  // namespace collabrec

#endif  // COLLABREC_DATASET_HPP_
