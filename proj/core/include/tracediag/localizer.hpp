#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "tracediag/labels.hpp"
#include "tracediag/mutation.hpp"

namespace tracediag {

enum class ConstructKind { LayerCall, CompileCall, FitCall, OptimizerCtor, Assignment };

std::string_view construct_kind_name(ConstructKind kind) noexcept;

enum class ValueKind { Name, String, Number, Call, List, Other };

/// One argument or assigned value as it appears in the source.
struct ArgValue {
  ValueKind kind = ValueKind::Other;
  /// Name: dotted identifier. String: decoded body. Number: literal spelling
  /// (a leading minus is folded in). Call: dotted callee. Otherwise the
  /// token spelling of the whole expression.
  std::string text;
  int line = 0;      // first token of the value
  int key_line = 0;  // keyword token for kwargs, same as `line` otherwise
  int call_index = -1;  // index into ProgramModel::constructs for recognized calls
};

struct Construct {
  ConstructKind kind = ConstructKind::Assignment;
  std::string name;  // last callee segment, or the assignment target
  int line = 0;
  std::vector<ArgValue> args;
  std::vector<std::pair<std::string, ArgValue>> kwargs;

  const ArgValue* kwarg(std::string_view key) const;
};

struct Binding {
  std::string name;
  ArgValue value;
  int line = 0;
};

struct ParseWarning {
  int line = 0;
  std::string message;
};

struct ProgramModel {
  std::vector<Construct> constructs;
  std::vector<Binding> bindings;  // every assignment, in source order
  ModelSpec derived_spec;
  std::vector<ParseWarning> warnings;
  int line_count = 0;

  /// Latest binding of `name` defined on or before `use_line`.
  const Binding* resolve(std::string_view name, int use_line) const;
  /// Latest binding per variable over the whole program.
  std::map<std::string, Binding> binding_table() const;
};

/// Parses a Keras-idiom script. Statements outside the supported subset are
/// skipped with a warning; only unterminated strings and unbalanced brackets
/// throw Error(ParseError).
ProgramModel parse_program(std::string_view source, std::string id = "program");
/// Throws Error(Io) when the file cannot be read.
ProgramModel load_program_file(const std::filesystem::path& path);

struct UnresolvedFault {
  FaultType type = FaultType::Loss;
  std::string reason;
};

struct LocalizationReport {
  std::map<FaultType, std::vector<int>> lines;  // sorted, unique, non-empty
  std::map<FaultType, std::vector<std::string>> notes;
  std::vector<UnresolvedFault> unresolved;

  bool empty() const { return lines.empty() && unresolved.empty(); }
};

LocalizationReport localize(const ProgramModel& program, const FaultLabelSet& faults);

std::string localization_to_json(const LocalizationReport& report, int indent = 2);

}  // namespace tracediag
