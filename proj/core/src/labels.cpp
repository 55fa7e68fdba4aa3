#include "tracediag/labels.hpp"

#include "tracediag/error.hpp"

namespace tracediag {

std::string_view fault_name(FaultType type) noexcept {
  switch (type) {
    case FaultType::Loss: return "loss";
    case FaultType::Optimizer: return "optimizer";
    case FaultType::Lr: return "lr";
    case FaultType::Epoch: return "epoch";
    case FaultType::Act: return "act";
  }
  return "?";
}

std::optional<FaultType> parse_fault_name(std::string_view name) noexcept {
  for (FaultType t : kAllFaultTypes) {
    if (fault_name(t) == name) return t;
  }
  // Common aliases seen in reports and CLI input.
  if (name == "opt") return FaultType::Optimizer;
  if (name == "activation") return FaultType::Act;
  if (name == "epochs") return FaultType::Epoch;
  return std::nullopt;
}

std::vector<FaultType> FaultLabelSet::types() const {
  std::vector<FaultType> out;
  for (FaultType t : kAllFaultTypes) {
    if (contains(t)) out.push_back(t);
  }
  return out;
}

std::string FaultLabelSet::to_string() const {
  std::string out;
  for (FaultType t : types()) {
    if (!out.empty()) out += ',';
    out += fault_name(t);
  }
  return out;
}

FaultLabelSet FaultLabelSet::parse(std::string_view csv) {
  FaultLabelSet s;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t end = std::min(csv.find(',', pos), csv.size());
    std::string_view item = csv.substr(pos, end - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) {
      auto t = parse_fault_name(item);
      if (!t) throw Error(ErrorKind::InvalidParams, "unknown fault type '" + std::string(item) + "'");
      s.insert(*t);
    }
    pos = end + 1;
  }
  return s;
}

}  // namespace tracediag
