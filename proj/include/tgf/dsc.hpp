#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <absl/container/flat_hash_map.h>
#include <absl/hash/hash.h>

#include "tgf/common.hpp"

namespace tgf {

/// Decreasing sorted counters.
///
/// A set of named non-negative counters stored in one dense array sorted by
/// value, largest first. Equal values form a contiguous block, and the block
/// of each present value is indexed by that value. Because a counter only ever
/// moves by one, an update swaps it with the head (increase) or tail (decrease)
/// of its block and shifts one boundary, so every update and every query below
/// is O(1) on average.
///
/// Counters that reach zero are deleted; value() of an unknown name is 0.
template <class Key, class Hash = absl::Hash<Key>>
class DecreasingSortedCounters {
 public:
  using key_type = Key;
  using value_type = std::uint64_t;

  struct Entry {
    Key name;
    value_type value;
  };

  DecreasingSortedCounters() = default;

  /// Creates the counter at 0 if needed, then increments it. Returns the new value.
  value_type increase(const Key& name) {
    ++total_;
    ++ops_;
    auto [it, inserted] = position_of_.try_emplace(name, entries_.size());
    if (inserted) {
      entries_.push_back({name, 1});
      Block& ones = block(1);
      if (ones.length == 0) ones.start = entries_.size() - 1;
      ++ones.length;
      return 1;
    }

    const std::size_t pos = it->second;
    const value_type old = entries_[pos].value;
    Block& from = blocks_[old];
    const std::size_t head = from.start;
    move_entry(it, pos, head);
    ++from.start;
    --from.length;

    entries_[head].value = old + 1;
    Block& to = block(old + 1);
    if (to.length == 0) to.start = head;
    ++to.length;
    return old + 1;
  }

  /// Decrements an existing counter, deleting it when it reaches zero.
  value_type decrease(const Key& name) {
    auto it = position_of_.find(name);
    if (it == position_of_.end()) {
      throw ContractViolation("DecreasingSortedCounters::decrease: unknown counter");
    }
    --total_;
    ++ops_;
    const std::size_t pos = it->second;
    const value_type old = entries_[pos].value;
    Block& from = blocks_[old];
    const std::size_t tail = from.start + from.length - 1;
    move_entry(it, pos, tail);
    --from.length;

    if (old == 1) {
      // The value-1 block is the suffix of the array, so tail is the last slot.
      position_of_.erase(it);
      entries_.pop_back();
      return 0;
    }
    entries_[tail].value = old - 1;
    Block& to = blocks_[old - 1];
    to.start = tail;
    ++to.length;
    return old - 1;
  }

  value_type value(const Key& name) const {
    auto it = position_of_.find(name);
    return it == position_of_.end() ? 0 : entries_[it->second].value;
  }

  bool contains(const Key& name) const { return position_of_.contains(name); }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  value_type sum() const { return total_; }
  value_type max_value() const { return entries_.empty() ? 0 : entries_.front().value; }

  /// Element at index floor(size/2) of the decreasing order; 0 when empty.
  value_type median_value() const {
    return entries_.empty() ? 0 : entries_[entries_.size() / 2].value;
  }

  std::size_t count_with_value(value_type v) const {
    return v < blocks_.size() ? blocks_[v].length : 0;
  }

  /// Number of counters strictly greater than v. Only defined for v = 0 and for
  /// values currently held by at least one counter.
  std::size_t count_greater_than(value_type v) const {
    if (v == 0) return entries_.size();
    if (v >= blocks_.size() || blocks_[v].length == 0) {
      throw ContractViolation("DecreasingSortedCounters::count_greater_than: value not present");
    }
    return blocks_[v].start;
  }

  const std::vector<Entry>& entries() const { return entries_; }

  /// Number of elementary updates performed so far (for cost accounting in tests).
  std::uint64_t operation_count() const { return ops_; }

  void clear() {
    entries_.clear();
    position_of_.clear();
    blocks_.clear();
    total_ = 0;
  }

  /// Writes "name value" lines in the stored (decreasing) order.
  void dump(std::ostream& os) const {
    for (const auto& e : entries_) os << e.name << ' ' << e.value << '\n';
  }

 private:
  struct Block {
    std::size_t start = 0;
    std::size_t length = 0;
  };

  // Blocks are indexed directly by value. Counter values are bounded by the
  // total, so this table never outgrows the structure it describes.
  Block& block(value_type v) {
    if (v >= blocks_.size()) blocks_.resize(v + 1);
    return blocks_[v];
  }

  // Swaps the entry at `from` (whose map slot is `it`) with the one at `to`.
  template <class It>
  void move_entry(It it, std::size_t from, std::size_t to) {
    if (from == to) return;
    std::swap(entries_[from], entries_[to]);
    position_of_[entries_[from].name] = from;
    it->second = to;
  }

  std::vector<Entry> entries_;
  absl::flat_hash_map<Key, std::size_t, Hash> position_of_;
  std::vector<Block> blocks_;
  value_type total_ = 0;
  std::uint64_t ops_ = 0;
};

}  // namespace tgf
