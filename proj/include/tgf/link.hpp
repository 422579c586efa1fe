#pragma once

#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>

namespace tgf {

/// A stream timestamp. Integer timestamps are compared and subtracted exactly;
/// as soon as either operand is fractional, arithmetic falls back to double.
class Timestamp {
 public:
  constexpr Timestamp() = default;

  static constexpr Timestamp integer(std::int64_t v) {
    Timestamp t;
    t.integral_ = true;
    t.int_ = v;
    return t;
  }

  static constexpr Timestamp real(double v) {
    Timestamp t;
    t.integral_ = false;
    t.real_ = v;
    return t;
  }

  /// Parses an integer if the whole token is one, otherwise a finite double.
  static std::optional<Timestamp> parse(std::string_view text) {
    if (text.empty()) return std::nullopt;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (*first == '+') ++first;
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(first, last, i);
    if (ec == std::errc() && p == last) return integer(i);
    double d = 0;
    auto [q, ec2] = std::from_chars(first, last, d);
    if (ec2 == std::errc() && q == last && std::isfinite(d)) return real(d);
    return std::nullopt;
  }

  constexpr bool is_integral() const { return integral_; }
  constexpr double as_double() const { return integral_ ? static_cast<double>(int_) : real_; }
  constexpr std::int64_t as_integer() const { return int_; }

  std::string to_string() const {
    char buf[64];
    auto res = integral_ ? std::to_chars(buf, buf + sizeof buf, int_)
                         : std::to_chars(buf, buf + sizeof buf, real_);
    return std::string(buf, res.ptr);
  }

  friend constexpr bool operator==(const Timestamp& a, const Timestamp& b) {
    if (a.integral_ && b.integral_) return a.int_ == b.int_;
    return a.as_double() == b.as_double();
  }

  friend constexpr std::partial_ordering operator<=>(const Timestamp& a, const Timestamp& b) {
    if (a.integral_ && b.integral_) return a.int_ <=> b.int_;
    return a.as_double() <=> b.as_double();
  }

  /// True when now - then > span.
  friend constexpr bool elapsed_exceeds(const Timestamp& now, const Timestamp& then,
                                        const Timestamp& span) {
    if (now.integral_ && then.integral_ && span.integral_) return now.int_ - then.int_ > span.int_;
    return now.as_double() - then.as_double() > span.as_double();
  }

 private:
  bool integral_ = true;
  std::int64_t int_ = 0;
  double real_ = 0;
};

/// Interned node identifier. The mapping to original names lives in NodeTable.
struct NodeId {
  std::uint32_t value = 0;
  friend constexpr auto operator<=>(NodeId, NodeId) = default;
  friend std::ostream& operator<<(std::ostream& os, NodeId id) { return os << id.value; }
  template <class H>
  friend H AbslHashValue(H h, NodeId id) {
    return H::combine(std::move(h), id.value);
  }
};

/// One stream element (t, u, v).
struct TimestampedLink {
  Timestamp t;
  NodeId u;
  NodeId v;
};

/// Key of an undirected node pair, independent of endpoint order.
constexpr std::uint64_t pair_key(NodeId a, NodeId b) {
  const auto lo = a.value < b.value ? a.value : b.value;
  const auto hi = a.value < b.value ? b.value : a.value;
  return (static_cast<std::uint64_t>(lo) << 32) | hi;
}

}  // namespace tgf

template <>
struct std::hash<tgf::NodeId> {
  std::size_t operator()(tgf::NodeId id) const noexcept { return std::hash<std::uint32_t>{}(id.value); }
};
