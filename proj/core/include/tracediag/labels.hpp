#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tracediag {

/// The five diagnosable fault types, in canonical order.
enum class FaultType : std::size_t { Loss = 0, Optimizer = 1, Lr = 2, Epoch = 3, Act = 4 };

inline constexpr std::size_t kFaultTypeCount = 5;
inline constexpr std::array<FaultType, kFaultTypeCount> kAllFaultTypes = {
    FaultType::Loss, FaultType::Optimizer, FaultType::Lr, FaultType::Epoch, FaultType::Act};

/// Lower-case short names used in every file format: loss, optimizer, lr, epoch, act.
std::string_view fault_name(FaultType type) noexcept;
std::optional<FaultType> parse_fault_name(std::string_view name) noexcept;

class FaultLabelSet {
 public:
  FaultLabelSet() = default;
  FaultLabelSet(std::initializer_list<FaultType> types) {
    for (FaultType t : types) insert(t);
  }

  static FaultLabelSet from_bits(unsigned bits) {
    FaultLabelSet s;
    s.bits_ = std::bitset<kFaultTypeCount>(bits);
    return s;
  }

  void insert(FaultType t) { bits_.set(static_cast<std::size_t>(t)); }
  void erase(FaultType t) { bits_.reset(static_cast<std::size_t>(t)); }
  bool contains(FaultType t) const { return bits_.test(static_cast<std::size_t>(t)); }
  bool empty() const { return bits_.none(); }
  std::size_t size() const { return bits_.count(); }
  unsigned bits() const { return static_cast<unsigned>(bits_.to_ulong()); }

  std::vector<FaultType> types() const;
  /// Comma-separated short names, e.g. "loss,lr". Empty string for the empty set.
  std::string to_string() const;
  /// Inverse of to_string(); throws Error(InvalidParams) on an unknown name.
  static FaultLabelSet parse(std::string_view csv);

  FaultLabelSet& operator|=(const FaultLabelSet& o) {
    bits_ |= o.bits_;
    return *this;
  }
  friend FaultLabelSet operator|(FaultLabelSet a, const FaultLabelSet& b) { return a |= b; }
  friend FaultLabelSet operator&(FaultLabelSet a, const FaultLabelSet& b) {
    a.bits_ &= b.bits_;
    return a;
  }
  friend bool operator==(const FaultLabelSet& a, const FaultLabelSet& b) {
    return a.bits_ == b.bits_;
  }

 private:
  std::bitset<kFaultTypeCount> bits_;
};

}  // namespace tracediag
