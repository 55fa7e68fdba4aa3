#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tracediag/localizer.hpp"

namespace testing_support {

inline const std::filesystem::path kProgramsDir =
    std::filesystem::path(TRACEDIAG_FIXTURES_DIR) / "programs";

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::filesystem::path> fixture_programs() {
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(kProgramsDir)) {
    if (e.path().extension() == ".py") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Hand-derived answer stored next to each fixture as <name>.expected.json.
struct ExpectedLocalization {
  std::map<std::string, std::vector<int>> faults;
  std::map<std::string, std::vector<std::string>> notes;
  std::vector<std::string> unresolved;  // sorted
};

inline ExpectedLocalization load_expected(const std::filesystem::path& program) {
  std::filesystem::path p = program;
  p.replace_extension(".expected.json");
  const auto j = nlohmann::json::parse(read_text(p));
  ExpectedLocalization e;
  e.faults = j.at("faults").get<decltype(e.faults)>();
  e.notes = j.at("notes").get<decltype(e.notes)>();
  e.unresolved = j.at("unresolved").get<std::vector<std::string>>();
  std::sort(e.unresolved.begin(), e.unresolved.end());
  return e;
}

inline ExpectedLocalization as_expected(const tracediag::LocalizationReport& r) {
  ExpectedLocalization e;
  for (const auto& [t, lines] : r.lines) e.faults[std::string(tracediag::fault_name(t))] = lines;
  for (const auto& [t, notes] : r.notes) e.notes[std::string(tracediag::fault_name(t))] = notes;
  for (const auto& u : r.unresolved) e.unresolved.emplace_back(tracediag::fault_name(u.type));
  std::sort(e.unresolved.begin(), e.unresolved.end());
  return e;
}

inline bool operator==(const ExpectedLocalization& a, const ExpectedLocalization& b) {
  return a.faults == b.faults && a.notes == b.notes && a.unresolved == b.unresolved;
}

inline std::string describe(const ExpectedLocalization& e) {
  nlohmann::json j = {{"faults", e.faults}, {"notes", e.notes}, {"unresolved", e.unresolved}};
  return j.dump();
}

}  // namespace testing_support
