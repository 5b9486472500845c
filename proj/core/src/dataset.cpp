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

#include "collabrec/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>

namespace collabrec {
namespace {

bool by_user_item(const Rating& a, const Rating& b) {
  return a.user != b.user ? a.user < b.user : a.item < b.item;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  // A single trailing newline yields no extra line from getline; an empty
  // last line would come from "\n\n" and is rejected by the parsers.
  return lines;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return fields;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t value = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || s.empty()) return std::nullopt;
  return value;
}

std::string where(const std::filesystem::path& path, std::size_t line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

}  // namespace

RatingMatrix::RatingMatrix(std::vector<std::int64_t> user_ids,
                           std::vector<std::int64_t> item_ids,
                           std::vector<Rating> entries, RatingScale scale)
    : user_ids_(std::move(user_ids)),
      item_ids_(std::move(item_ids)),
      entries_(std::move(entries)),
      scale_(scale) {
  if (!(scale_.min <= scale_.max)) {
    throw InvalidArgument("rating scale min exceeds max");
  }
  const auto users = num_users();
  const auto items = num_items();
  for (const auto& e : entries_) {
    if (e.user < 0 || e.user >= users || e.item < 0 || e.item >= items) {
      throw InvalidArgument("rating entry (" + std::to_string(e.user) + ", " +
                            std::to_string(e.item) + ") out of range");
    }
    if (!(e.value >= scale_.min && e.value <= scale_.max)) {
      throw InvalidArgument("rating " + std::to_string(e.value) +
                            " outside the rating scale");
    }
  }
  std::sort(entries_.begin(), entries_.end(), by_user_item);
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i - 1].user == entries_[i].user &&
        entries_[i - 1].item == entries_[i].item) {
      throw InvalidArgument(
          "duplicate rating for user id " +
          std::to_string(user_ids_[entries_[i].user]) + ", item id " +
          std::to_string(item_ids_[entries_[i].item]));
    }
  }
  user_offsets_.assign(users + 1, 0);
  for (const auto& e : entries_) ++user_offsets_[e.user + 1];
  std::partial_sum(user_offsets_.begin(), user_offsets_.end(),
                   user_offsets_.begin());
}

std::span<const Rating> RatingMatrix::user_entries(Index user) const {
  if (user < 0 || user >= num_users()) {
    throw InvalidArgument("user index out of range");
  }
  return std::span<const Rating>(entries_).subspan(
      user_offsets_[user], user_offsets_[user + 1] - user_offsets_[user]);
}

std::vector<Index> RatingMatrix::ratings_per_user() const {
  std::vector<Index> counts(num_users());
  for (Index u = 0; u < num_users(); ++u) {
    counts[u] = user_offsets_[u + 1] - user_offsets_[u];
  }
  return counts;
}

RatingMatrix load_movielens(const std::filesystem::path& path) {
  struct Raw {
    std::int64_t user, item, rating;
  };
  const auto lines = read_lines(path);
  std::vector<Raw> raw;
  raw.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = split(lines[i], '\t');
    if (fields.size() != 4) {
      throw ParseError(where(path, i + 1) + ": expected 4 tab-separated fields");
    }
    std::int64_t values[4];
    for (int f = 0; f < 4; ++f) {
      const auto v = parse_int(fields[f]);
      if (!v) {
        throw ParseError(where(path, i + 1) + ": field " +
                         std::to_string(f + 1) + " is not an integer");
      }
      values[f] = *v;
    }
    if (values[2] < 1 || values[2] > 5) {
      throw ParseError(where(path, i + 1) + ": rating " +
                       std::to_string(values[2]) + " outside 1..5");
    }
    raw.push_back({values[0], values[1], values[2]});
  }

  std::vector<std::int64_t> user_ids, item_ids;
  for (const auto& r : raw) {
    user_ids.push_back(r.user);
    item_ids.push_back(r.item);
  }
  for (auto* ids : {&user_ids, &item_ids}) {
    std::sort(ids->begin(), ids->end());
    ids->erase(std::unique(ids->begin(), ids->end()), ids->end());
  }
  std::unordered_map<std::int64_t, Index> user_index, item_index;
  for (std::size_t i = 0; i < user_ids.size(); ++i) user_index[user_ids[i]] = i;
  for (std::size_t i = 0; i < item_ids.size(); ++i) item_index[item_ids[i]] = i;

  std::vector<Rating> entries;
  entries.reserve(raw.size());
  for (const auto& r : raw) {
    entries.push_back({user_index.at(r.user), item_index.at(r.item),
                       static_cast<double>(r.rating)});
  }
  return RatingMatrix(std::move(user_ids), std::move(item_ids),
                      std::move(entries), RatingScale{1.0, 5.0});
}

RatingMatrix load_sushi(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<Rating> entries;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::vector<std::string_view> fields;
    for (auto f : split(lines[i], ' ')) {
      if (!f.empty()) fields.push_back(f);
    }
    if (static_cast<Index>(fields.size()) != kSushiItems) {
      throw ParseError(where(path, i + 1) + ": expected " +
                       std::to_string(kSushiItems) + " scores, found " +
                       std::to_string(fields.size()));
    }
    Index rated = 0;
    for (Index item = 0; item < kSushiItems; ++item) {
      const auto v = parse_int(fields[item]);
      if (!v) {
        throw ParseError(where(path, i + 1) + ": score " +
                         std::to_string(item + 1) + " is not an integer");
      }
      if (*v < -1 || *v > 4) {
        throw ParseError(where(path, i + 1) + ": score " + std::to_string(*v) +
                         " outside {-1, 0, ..., 4}");
      }
      if (*v == -1) continue;
      ++rated;
      entries.push_back(
          {static_cast<Index>(i), item, static_cast<double>(*v)});
    }
    if (rated > kSushiRatingsPerUser) {
      throw ParseError(where(path, i + 1) + ": " + std::to_string(rated) +
                       " rated items, at most " +
                       std::to_string(kSushiRatingsPerUser) + " allowed");
    }
  }
  std::vector<std::int64_t> user_ids(lines.size());
  std::iota(user_ids.begin(), user_ids.end(), 0);
  std::vector<std::int64_t> item_ids(kSushiItems);
  std::iota(item_ids.begin(), item_ids.end(), 0);
  if (lines.empty()) item_ids.clear();
  return RatingMatrix(std::move(user_ids), std::move(item_ids),
                      std::move(entries), RatingScale{0.0, 4.0});
}

RatingMatrix transpose(const RatingMatrix& ratings) {
  std::vector<Rating> entries;
  entries.reserve(ratings.size());
  for (const auto& e : ratings.entries()) {
    entries.push_back({e.item, e.user, e.value});
  }
  return RatingMatrix(ratings.item_ids(), ratings.user_ids(),
                      std::move(entries), ratings.scale());
}

Index test_count_for(Index count, double test_fraction) {
  if (count < 2) return 0;
  const auto rounded =
      static_cast<Index>(std::floor(test_fraction * count + 0.5));
  return std::clamp<Index>(rounded, 0, count - 1);
}

SplitRatings split_train_test(const RatingMatrix& ratings, double test_fraction,
                              Rng& rng) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw InvalidArgument("test fraction must lie in [0, 1)");
  }
  std::vector<Rating> train, test;
  train.reserve(ratings.size());
  std::vector<Rating> user;
  for (Index u = 0; u < ratings.num_users(); ++u) {
    const auto entries = ratings.user_entries(u);
    user.assign(entries.begin(), entries.end());
    const auto held_out = test_count_for(static_cast<Index>(user.size()),
                                         test_fraction);
    if (held_out > 0) std::shuffle(user.begin(), user.end(), rng);
    test.insert(test.end(), user.begin(), user.begin() + held_out);
    train.insert(train.end(), user.begin() + held_out, user.end());
  }
  return {RatingMatrix(ratings.user_ids(), ratings.item_ids(), std::move(train),
                       ratings.scale()),
          RatingMatrix(ratings.user_ids(), ratings.item_ids(), std::move(test),
                       ratings.scale())};
}

PartyAssignment::PartyAssignment(Index num_users,
                                 std::vector<std::vector<Index>> user_blocks)
    : blocks_(std::move(user_blocks)),
      column_of_(num_users, -1),
      party_of_(num_users, -1) {
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    auto& block = blocks_[k];
    std::sort(block.begin(), block.end());
    for (const auto user : block) {
      if (user < 0 || user >= num_users) {
        throw InvalidArgument("party block references unknown user " +
                              std::to_string(user));
      }
      if (party_of_[user] != -1) {
        throw InvalidArgument("user " + std::to_string(user) +
                              " assigned to more than one party");
      }
      party_of_[user] = static_cast<Index>(k);
      column_of_[user] = static_cast<Index>(global_order_.size());
      global_order_.push_back(user);
    }
  }
}

const std::vector<Index>& PartyAssignment::block(Index party) const {
  if (party < 0 || party >= parties()) {
    throw InvalidArgument("party index out of range");
  }
  return blocks_[party];
}

std::optional<Index> PartyAssignment::column_of(Index user) const {
  if (user < 0 || user >= num_users() || column_of_[user] < 0) {
    return std::nullopt;
  }
  return column_of_[user];
}

std::optional<Index> PartyAssignment::party_of(Index user) const {
  if (user < 0 || user >= num_users() || party_of_[user] < 0) {
    return std::nullopt;
  }
  return party_of_[user];
}

PartyAssignment PartyAssignment::prefix(Index parties) const {
  if (parties < 1 || parties > this->parties()) {
    throw InvalidArgument("prefix party count out of range");
  }
  return PartyAssignment(num_users(),
                         std::vector<std::vector<Index>>(
                             blocks_.begin(), blocks_.begin() + parties));
}

PartyAssignment partition_horizontal(const RatingMatrix& ratings, Index parties,
                                     Index users_per_party, Rng& rng) {
  if (parties < 1 || users_per_party < 1) {
    throw InvalidArgument("party count and users per party must be positive");
  }
  std::vector<Index> eligible;
  const auto counts = ratings.ratings_per_user();
  for (Index u = 0; u < ratings.num_users(); ++u) {
    if (counts[u] > 0) eligible.push_back(u);
  }
  const auto required = parties * users_per_party;
  if (required > static_cast<Index>(eligible.size())) {
    throw InvalidArgument("partition needs " + std::to_string(required) +
                          " users with ratings, only " +
                          std::to_string(eligible.size()) + " available");
  }
  std::shuffle(eligible.begin(), eligible.end(), rng);
  std::vector<std::vector<Index>> blocks(parties);
  for (Index k = 0; k < parties; ++k) {
    blocks[k].assign(eligible.begin() + k * users_per_party,
                     eligible.begin() + (k + 1) * users_per_party);
  }
  return PartyAssignment(ratings.num_users(), std::move(blocks));
}

std::vector<Rating> party_entries(const RatingMatrix& ratings,
                                  const PartyAssignment& assignment,
                                  Index party) {
  std::vector<Rating> out;
  for (const auto user : assignment.block(party)) {
    const auto entries = ratings.user_entries(user);
    out.insert(out.end(), entries.begin(), entries.end());
  }
  return out;
}

FlattenedDataset flatten(std::span<const Rating> entries,
                         const PartyAssignment& assignment, Index item_count) {
  std::vector<Rating> sorted(entries.begin(), entries.end());
  std::sort(sorted.begin(), sorted.end(), by_user_item);

  FlattenedDataset out;
  out.p_users = assignment.assigned_users();
  out.p_items = item_count;
  const auto n = static_cast<Index>(sorted.size());
  out.x.resize(n, out.cols());
  out.x.reserve(Eigen::VectorXi::Constant(n, 2));
  out.y.resize(n);
  for (Index r = 0; r < n; ++r) {
    const auto& e = sorted[r];
    const auto column = assignment.column_of(e.user);
    if (!column) {
      throw InvalidArgument("rating of user " + std::to_string(e.user) +
                            " who belongs to no party");
    }
    if (e.item < 0 || e.item >= item_count) {
      throw InvalidArgument("item index " + std::to_string(e.item) +
                            " out of range");
    }
    out.x.insert(r, *column) = 1.0;
    out.x.insert(r, out.p_users + e.item) = 1.0;
    out.y[r] = e.value;
  }
  out.x.makeCompressed();
  return out;
}

std::vector<Rating> unflatten(const FlattenedDataset& data,
                              const PartyAssignment& assignment) {
  std::vector<Rating> out;
  out.reserve(data.rows());
  const auto& order = assignment.global_user_order();
  for (Index r = 0; r < data.rows(); ++r) {
    Rating rating{-1, -1, data.y[r]};
    for (SparseMatrix::InnerIterator it(data.x, r); it; ++it) {
      if (it.col() < data.p_users) {
        rating.user = order.at(it.col());
      } else {
        rating.item = it.col() - data.p_users;
      }
    }
    out.push_back(rating);
  }
  return out;
}

FlattenedDataset stack(std::span<const FlattenedDataset> parts) {
  FlattenedDataset out;
  if (parts.empty()) return out;
  out.p_users = parts.front().p_users;
  out.p_items = parts.front().p_items;
  Index rows = 0;
  for (const auto& part : parts) {
    if (part.p_users != out.p_users || part.p_items != out.p_items) {
      throw InvalidArgument("cannot stack datasets with different columns");
    }
    rows += part.rows();
  }
  out.x.resize(rows, out.cols());
  out.x.reserve(Eigen::VectorXi::Constant(rows, 2));
  out.y.resize(rows);
  Index offset = 0;
  for (const auto& part : parts) {
    for (Index r = 0; r < part.rows(); ++r) {
      for (SparseMatrix::InnerIterator it(part.x, r); it; ++it) {
        out.x.insert(offset + r, it.col()) = it.value();
      }
    }
    out.y.segment(offset, part.rows()) = part.y;
    offset += part.rows();
  }
  out.x.makeCompressed();
  return out;
}

}  // namespace collabrec
