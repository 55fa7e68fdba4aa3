#include "tracediag/localizer.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "python_lexer.hpp"
#include "tracediag/error.hpp"

namespace tracediag {
namespace {

using detail::TokKind;
using detail::Token;

constexpr std::string_view kLayerNames[] = {
    "Dense", "Conv1D", "Conv2D", "Conv3D", "Convolution1D", "Convolution2D", "Conv2DTranspose",
    "SeparableConv2D", "DepthwiseConv2D", "LSTM", "GRU", "SimpleRNN", "Embedding", "Dropout",
    "Flatten", "Reshape", "BatchNormalization", "MaxPooling1D", "MaxPooling2D", "MaxPooling3D",
    "MaxPool2D", "AveragePooling1D", "AveragePooling2D", "GlobalAveragePooling1D",
    "GlobalAveragePooling2D", "GlobalMaxPooling1D", "GlobalMaxPooling2D", "ZeroPadding2D",
    "UpSampling2D", "TimeDistributed", "Bidirectional", "Activation", "LeakyReLU", "ReLU", "ELU",
    "PReLU", "Softmax", "ThresholdedReLU"};

// Layers that are themselves an activation function.
constexpr std::string_view kActivationLayers[] = {"Activation", "LeakyReLU", "ReLU", "ELU",
                                                  "PReLU", "Softmax", "ThresholdedReLU"};

constexpr std::string_view kOptimizerCtors[] = {"SGD", "RMSprop", "Adam", "Adadelta",
                                                "Adagrad", "Adamax", "Nadam", "Ftrl"};

constexpr std::string_view kSilentKeywords[] = {"import", "from", "pass", "break",
                                                "continue", "global", "nonlocal"};
constexpr std::string_view kSkippedKeywords[] = {
    "def", "class", "if", "elif", "else", "for", "while", "with", "try", "except",
    "finally", "raise", "assert", "del", "async", "lambda"};
constexpr std::string_view kExprKeywords[] = {"not", "and", "or", "in", "is", "if",
                                              "else", "for", "lambda", "await", "async"};

template <std::size_t N>
bool contains(const std::string_view (&list)[N], std::string_view s) {
  return std::find(std::begin(list), std::end(list), s) != std::end(list);
}

std::string last_segment(std::string_view dotted) {
  const auto dot = dotted.rfind('.');
  return std::string(dot == std::string_view::npos ? dotted : dotted.substr(dot + 1));
}

bool is_op(const Token& t, std::string_view s) { return t.kind == TokKind::Op && t.text == s; }

std::string spell(const Token& t) {
  if (t.kind == TokKind::String) return "'" + t.text + "'";
  return t.text;
}

std::optional<double> parse_number(std::string text) {
  text.erase(std::remove(text.begin(), text.end(), '_'), text.end());
  double v = 0.0;
  const char* b = text.data();
  const char* e = b + text.size();
  auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::optional<int> parse_int(const std::string& text) {
  auto v = parse_number(text);
  if (!v || *v != std::floor(*v) || std::fabs(*v) > 2e9) return std::nullopt;
  return static_cast<int>(*v);
}

class Parser {
 public:
  Parser(const std::vector<Token>& toks, ProgramModel& pm) : t_(toks), pm_(pm) {}

  void run() {
    std::size_t b = 0;
    for (std::size_t k = 0; k < t_.size(); ++k) {
      const Token& tok = t_[k];
      if (tok.kind == TokKind::Newline || tok.kind == TokKind::End || is_op(tok, ";")) {
        if (k > b) statement(b, k);
        b = k + 1;
      }
    }
  }

 private:
  void statement(std::size_t b, std::size_t e) {
    i_ = b;
    end_ = e;
    const Token& first = t_[b];
    if (is_op(first, "@")) return;
    if (first.kind == TokKind::Name) {
      if (contains(kSilentKeywords, first.text)) return;
      if (first.text == "return" || first.text == "yield") {
        ++i_;
        drain();
        return;
      }
      if (contains(kSkippedKeywords, first.text)) {
        pm_.warnings.push_back({first.line, "skipped unsupported '" + first.text + "' statement"});
        return;
      }
    }

    std::vector<std::size_t> eqs;
    int depth = 0;
    for (std::size_t k = b; k < e; ++k) {
      const Token& tok = t_[k];
      if (tok.kind != TokKind::Op) continue;
      if (tok.text == "(" || tok.text == "[" || tok.text == "{") ++depth;
      if (tok.text == ")" || tok.text == "]" || tok.text == "}") --depth;
      if (depth == 0 && tok.text == "=") eqs.push_back(k);
    }
    if (eqs.empty()) {
      drain();
      return;
    }

    i_ = eqs.back() + 1;
    const ArgValue value = expression();
    std::size_t seg = b;
    for (std::size_t eq : eqs) {
      bind_target(seg, eq, value);
      seg = eq + 1;
    }
    drain();
  }

  void bind_target(std::size_t b, std::size_t e, const ArgValue& value) {
    // Annotated targets: keep the part before the colon.
    for (std::size_t k = b; k < e; ++k) {
      if (is_op(t_[k], ":")) {
        e = k;
        break;
      }
    }
    if (b >= e || t_[b].kind != TokKind::Name) return;
    std::string name = t_[b].text;
    std::size_t k = b + 1;
    while (k + 1 < e && is_op(t_[k], ".") && t_[k + 1].kind == TokKind::Name) {
      name += "." + t_[k + 1].text;
      k += 2;
    }
    if (k != e) return;
    const int line = t_[b].line;
    pm_.bindings.push_back({name, value, line});
    Construct c;
    c.kind = ConstructKind::Assignment;
    c.name = name;
    c.line = line;
    c.args.push_back(value);
    pm_.constructs.push_back(std::move(c));
  }

  // Parses whatever is left of the statement so nested calls get recorded.
  void drain() {
    while (i_ < end_) {
      if (at_stop()) {
        ++i_;
      } else {
        expression();
      }
    }
  }

  bool at_stop() const {
    if (i_ >= end_) return true;
    const Token& tok = t_[i_];
    if (tok.kind != TokKind::Op) return false;
    return tok.text == "," || tok.text == ")" || tok.text == "]" || tok.text == "}" ||
           tok.text == ":" || tok.text == "=";
  }

  std::string spelling(std::size_t b, std::size_t e) const {
    std::string out;
    for (std::size_t k = b; k < e; ++k) {
      const bool wordy = t_[k].kind == TokKind::Name || t_[k].kind == TokKind::Number;
      if (k > b && wordy &&
          (t_[k - 1].kind == TokKind::Name || t_[k - 1].kind == TokKind::Number)) {
        out += ' ';
      }
      out += spell(t_[k]);
    }
    return out;
  }

  ArgValue expression() {
    const std::size_t start = i_;
    int atoms = 0;
    int ops = 0;
    bool leading_minus = false;
    ArgValue first;
    while (!at_stop()) {
      const Token& tok = t_[i_];
      const bool opener = is_op(tok, "(") || is_op(tok, "[") || is_op(tok, "{");
      if ((tok.kind == TokKind::Op && !opener) ||
          (tok.kind == TokKind::Name && contains(kExprKeywords, tok.text))) {
        if (atoms == 0 && ops == 0 && tok.text == "-") leading_minus = true;
        ++ops;
        ++i_;
        continue;
      }
      ArgValue a = atom();
      if (atoms == 0) first = std::move(a);
      ++atoms;
    }
    if (atoms == 1 && ops == 0) return first;
    const int line = start < end_ ? t_[start].line : (end_ > 0 ? t_[end_ - 1].line : 0);
    if (atoms == 1 && ops == 1 && leading_minus && first.kind == ValueKind::Number) {
      first.text = "-" + first.text;
      first.line = line;
      first.key_line = line;
      return first;
    }
    ArgValue v;
    v.kind = ValueKind::Other;
    v.text = spelling(start, i_);
    v.line = line;
    v.key_line = line;
    return v;
  }

  ArgValue atom() {
    const Token& tok = t_[i_];
    ArgValue v;
    v.line = tok.line;
    v.key_line = tok.line;
    const std::size_t start = i_;
    if (tok.kind == TokKind::Name) {
      v.kind = ValueKind::Name;
      v.text = tok.text;
      ++i_;
    } else if (tok.kind == TokKind::Number) {
      v.kind = ValueKind::Number;
      v.text = tok.text;
      ++i_;
    } else if (tok.kind == TokKind::String) {
      v.kind = ValueKind::String;
      while (i_ < end_ && t_[i_].kind == TokKind::String) v.text += t_[i_++].text;
    } else if (is_op(tok, "(")) {
      bool trailing_comma = false;
      auto items = bracket_list(")", &trailing_comma);
      if (items.size() == 1 && !trailing_comma) {
        v = items.front();
      } else {
        v.kind = ValueKind::Other;
        v.text = spelling(start, i_);
      }
    } else if (is_op(tok, "[")) {
      bracket_list("]", nullptr);
      v.kind = ValueKind::List;
      v.text = spelling(start, i_);
    } else if (is_op(tok, "{")) {
      bracket_list("}", nullptr);
      v.kind = ValueKind::Other;
      v.text = spelling(start, i_);
    } else {
      v.kind = ValueKind::Other;
      v.text = spell(tok);
      ++i_;
      return v;
    }

    // Postfix chain: attribute access, calls, subscripts.
    int callee_line = tok.line;
    while (i_ < end_) {
      const Token& p = t_[i_];
      if (is_op(p, ".") && i_ + 1 < end_ && t_[i_ + 1].kind == TokKind::Name) {
        if (v.kind == ValueKind::Name) {
          v.text += "." + t_[i_ + 1].text;
        } else {
          v.kind = ValueKind::Other;
        }
        callee_line = t_[i_ + 1].line;
        i_ += 2;
      } else if (is_op(p, "(")) {
        if (v.kind == ValueKind::Name) {
          v.call_index = call(v.text, callee_line);
          v.kind = ValueKind::Call;
        } else {
          call("", p.line);
          v.kind = ValueKind::Other;
          v.call_index = -1;
        }
      } else if (is_op(p, "[")) {
        bracket_list("]", nullptr);
        v.kind = ValueKind::Other;
        v.call_index = -1;
      } else {
        break;
      }
      if (v.kind == ValueKind::Call && i_ < end_ && is_op(t_[i_], ".")) {
        v.kind = ValueKind::Other;
        v.call_index = -1;
      }
    }
    if (v.kind == ValueKind::Other) v.text = spelling(start, i_);
    return v;
  }

  std::vector<ArgValue> bracket_list(std::string_view close, bool* trailing_comma) {
    ++i_;  // opener
    std::vector<ArgValue> items;
    bool last_was_comma = false;
    while (i_ < end_) {
      const Token& tok = t_[i_];
      if (is_op(tok, close)) {
        ++i_;
        break;
      }
      if (is_op(tok, ",") || is_op(tok, ":") || is_op(tok, "=")) {
        last_was_comma = tok.text == ",";
        ++i_;
        continue;
      }
      last_was_comma = false;
      const std::size_t before = i_;
      items.push_back(expression());
      if (i_ == before) ++i_;
    }
    if (trailing_comma) *trailing_comma = last_was_comma;
    return items;
  }

  int call(const std::string& callee, int callee_line) {
    ++i_;  // '('
    Construct c;
    c.name = last_segment(callee);
    c.line = callee_line;
    while (i_ < end_) {
      const Token& tok = t_[i_];
      if (is_op(tok, ")")) {
        ++i_;
        break;
      }
      if (is_op(tok, ",") || is_op(tok, ":") || is_op(tok, "=")) {
        ++i_;
        continue;
      }
      if (is_op(tok, "*") || is_op(tok, "**")) {
        ++i_;
        expression();
        continue;
      }
      if (tok.kind == TokKind::Name && i_ + 1 < end_ && is_op(t_[i_ + 1], "=")) {
        const int key_line = tok.line;
        std::string key = tok.text;
        i_ += 2;
        ArgValue v = expression();
        v.key_line = key_line;
        c.kwargs.emplace_back(std::move(key), std::move(v));
        continue;
      }
      const std::size_t before = i_;
      c.args.push_back(expression());
      if (i_ == before) ++i_;
    }

    if (callee.empty()) return -1;
    const bool attribute = callee.find('.') != std::string::npos;
    if (contains(kLayerNames, c.name)) {
      c.kind = ConstructKind::LayerCall;
    } else if (contains(kOptimizerCtors, c.name)) {
      c.kind = ConstructKind::OptimizerCtor;
    } else if (attribute && c.name == "compile") {
      c.kind = ConstructKind::CompileCall;
    } else if (attribute && (c.name == "fit" || c.name == "fit_generator")) {
      c.kind = ConstructKind::FitCall;
    } else {
      return -1;
    }
    pm_.constructs.push_back(std::move(c));
    return static_cast<int>(pm_.constructs.size() - 1);
  }

  const std::vector<Token>& t_;
  ProgramModel& pm_;
  std::size_t i_ = 0;
  std::size_t end_ = 0;
};

// A value after at most one hop through the binding table.
struct Resolved {
  ArgValue value;
  int line = 0;  // line to report
  bool via_binding = false;
};

Resolved resolve_value(const ProgramModel& pm, const ArgValue& v) {
  if (v.kind == ValueKind::Name) {
    if (const Binding* b = pm.resolve(v.text, v.line)) return {b->value, b->line, true};
  }
  return {v, v.key_line, false};
}

const ArgValue* argument(const Construct& c, std::initializer_list<std::string_view> keys,
                         std::size_t position) {
  for (auto key : keys) {
    if (const ArgValue* v = c.kwarg(key)) return v;
  }
  return position < c.args.size() ? &c.args[position] : nullptr;
}

std::vector<const Construct*> of_kind(const ProgramModel& pm, ConstructKind kind) {
  std::vector<const Construct*> out;
  for (const auto& c : pm.constructs) {
    if (c.kind == kind) out.push_back(&c);
  }
  return out;
}

const Construct* construct_at(const ProgramModel& pm, const ArgValue& v, ConstructKind kind) {
  if (v.kind != ValueKind::Call || v.call_index < 0) return nullptr;
  const Construct& c = pm.constructs[static_cast<std::size_t>(v.call_index)];
  return c.kind == kind ? &c : nullptr;
}

struct OptimizerSite {
  int line = 0;
  const Construct* ctor = nullptr;
  std::string name;        // canonical when known
  std::string lr_note;     // set when the learning rate is the framework default
  std::string opt_note;
  std::string untraceable; // reason the definition cannot be followed further
};

OptimizerSite optimizer_site(const ProgramModel& pm, const Construct& compile) {
  OptimizerSite s;
  const ArgValue* v = argument(compile, {"optimizer"}, 0);
  if (!v) {
    s.line = compile.line;
    s.name = "RMSprop";
    s.opt_note = "default optimizer in use";
    s.lr_note = "default learning rate in use";
    return s;
  }
  const Resolved r = resolve_value(pm, *v);
  if (const Construct* ctor = construct_at(pm, r.value, ConstructKind::OptimizerCtor)) {
    s.ctor = ctor;
    s.line = r.via_binding ? r.line : ctor->line;
    s.name = canonical_optimizer_name(ctor->name);
    return s;
  }
  s.line = r.line;
  if (r.value.kind == ValueKind::String) {
    s.name = canonical_optimizer_name(r.value.text);
    s.lr_note = "default learning rate in use";
    return s;
  }
  s.name = last_segment(r.value.text);
  if (r.via_binding) {
    s.untraceable = "optimizer bound to '" + r.value.text + "' is not traceable";
  } else {
    s.untraceable = "optimizer '" + v->text + "' could not be resolved";
  }
  return s;
}

std::vector<OptimizerSite> optimizer_sites(const ProgramModel& pm) {
  std::vector<OptimizerSite> sites;
  const auto compiles = of_kind(pm, ConstructKind::CompileCall);
  for (const Construct* c : compiles) sites.push_back(optimizer_site(pm, *c));
  if (compiles.empty()) {
    for (const Construct* ctor : of_kind(pm, ConstructKind::OptimizerCtor)) {
      OptimizerSite s;
      s.ctor = ctor;
      s.line = ctor->line;
      s.name = canonical_optimizer_name(ctor->name);
      sites.push_back(s);
    }
  }
  return sites;
}

const ArgValue* lr_argument(const Construct& ctor) {
  return argument(ctor, {"lr", "learning_rate"}, 0);
}

const ArgValue* epoch_argument(const Construct& fit) {
  return argument(fit, {"epochs", "nb_epoch"}, fit.name == "fit_generator" ? 2 : 3);
}

// Activation occurrences as (line, activation name).
std::vector<std::pair<int, std::string>> activation_sites(const ProgramModel& pm,
                                                          const Construct& layer) {
  std::vector<std::pair<int, std::string>> out;
  if (const ArgValue* v = layer.kwarg("activation")) {
    const Resolved r = resolve_value(pm, *v);
    out.emplace_back(r.line, r.value.kind == ValueKind::String ? r.value.text
                                                                : last_segment(r.value.text));
  } else if (layer.name == "Activation") {
    if (!layer.args.empty()) {
      const Resolved r = resolve_value(pm, layer.args.front());
      out.emplace_back(r.via_binding ? r.line : layer.line,
                       r.value.kind == ValueKind::String ? r.value.text
                                                          : last_segment(r.value.text));
    } else {
      out.emplace_back(layer.line, "");
    }
  } else if (contains(kActivationLayers, layer.name)) {
    out.emplace_back(layer.line, "");
  }
  return out;
}

ModelSpec derive_spec(const ProgramModel& pm, std::string id) {
  ModelSpec spec;
  spec.id = std::move(id);

  for (const Construct* layer : of_kind(pm, ConstructKind::LayerCall)) {
    LayerSpec l;
    l.kind = layer->name;
    l.source_line = layer->line;
    if (const ArgValue* u = layer->kwarg("units") ? layer->kwarg("units") : layer->kwarg("filters")) {
      l.units = parse_int(resolve_value(pm, *u).value.text);
    } else if (!layer->args.empty() && layer->args.front().kind == ValueKind::Number) {
      l.units = parse_int(layer->args.front().text);
    }
    if (l.units && *l.units < 1) l.units.reset();
    for (auto& [line, name] : activation_sites(pm, *layer)) {
      if (name.empty()) continue;
      l.activation = name;
      l.source_line = line;
    }
    spec.layers.push_back(std::move(l));
  }

  const auto compiles = of_kind(pm, ConstructKind::CompileCall);
  if (!compiles.empty()) {
    const Construct& c = *compiles.back();
    if (const ArgValue* v = argument(c, {"loss"}, 1)) {
      const Resolved r = resolve_value(pm, *v);
      spec.loss.name = r.value.kind == ValueKind::String ? canonical_loss_name(r.value.text)
                                                          : last_segment(r.value.text);
      spec.loss.source_line = r.line;
    }
  }

  const auto sites = optimizer_sites(pm);
  if (!sites.empty()) {
    const OptimizerSite& s = sites.back();
    spec.optimizer.name = s.name;
    spec.optimizer.source_line = s.line;
    if (s.ctor) {
      if (const ArgValue* lr = lr_argument(*s.ctor)) {
        const Resolved r = resolve_value(pm, *lr);
        if (r.value.kind == ValueKind::Number) {
          auto value = parse_number(r.value.text);
          if (value && *value > 0) spec.optimizer.learning_rate = value;
        }
        spec.optimizer.learning_rate_line = r.line;
      }
    }
  }

  const auto fits = of_kind(pm, ConstructKind::FitCall);
  if (!fits.empty()) {
    const Construct& f = *fits.back();
    spec.epochs.source_line = f.line;
    if (const ArgValue* e = epoch_argument(f)) {
      const Resolved r = resolve_value(pm, *e);
      spec.epochs.source_line = r.line;
      if (auto n = parse_int(r.value.text); n && *n >= 1) spec.epochs.value = *n;
    }
    if (const ArgValue* b = argument(f, {"batch_size"}, f.name == "fit_generator" ? 99 : 2)) {
      if (auto n = parse_int(resolve_value(pm, *b).value.text); n && *n >= 1) spec.batch_size = n;
    }
  }
  return spec;
}

class Collector {
 public:
  void add(int line) { lines_.insert(line); }
  void note(std::string n) {
    if (!n.empty()) notes_.insert(std::move(n));
  }
  void fail(std::string reason) {
    if (reason_.empty()) reason_ = std::move(reason);
  }

  void emit(FaultType type, LocalizationReport& report, const std::string& fallback) {
    if (lines_.empty()) {
      report.unresolved.push_back({type, reason_.empty() ? fallback : reason_});
      return;
    }
    report.lines[type].assign(lines_.begin(), lines_.end());
    if (!notes_.empty()) report.notes[type].assign(notes_.begin(), notes_.end());
  }

 private:
  std::set<int> lines_;
  std::set<std::string> notes_;
  std::string reason_;
};

void localize_loss(const ProgramModel& pm, LocalizationReport& report) {
  Collector col;
  const auto compiles = of_kind(pm, ConstructKind::CompileCall);
  for (const Construct* c : compiles) {
    if (const ArgValue* v = argument(*c, {"loss"}, 1)) {
      col.add(resolve_value(pm, *v).line);
    } else {
      col.fail("compile call has no loss argument");
    }
  }
  col.emit(FaultType::Loss, report, "no compile call found");
}

void localize_optimizer(const ProgramModel& pm, LocalizationReport& report) {
  Collector col;
  for (const auto& s : optimizer_sites(pm)) {
    col.add(s.line);
    col.note(s.opt_note);
  }
  col.emit(FaultType::Optimizer, report, "no optimizer found");
}

void localize_lr(const ProgramModel& pm, LocalizationReport& report) {
  Collector col;
  for (const auto& s : optimizer_sites(pm)) {
    if (!s.untraceable.empty()) {
      col.fail(s.untraceable);
      continue;
    }
    if (s.ctor) {
      if (const ArgValue* lr = lr_argument(*s.ctor)) {
        col.add(resolve_value(pm, *lr).line);
        continue;
      }
      col.add(s.line);
      col.note("default learning rate in use");
      continue;
    }
    col.add(s.line);
    col.note(s.lr_note);
  }
  col.emit(FaultType::Lr, report, "no optimizer found");
}

void localize_epoch(const ProgramModel& pm, LocalizationReport& report) {
  Collector col;
  for (const Construct* f : of_kind(pm, ConstructKind::FitCall)) {
    if (const ArgValue* e = epoch_argument(*f)) {
      col.add(resolve_value(pm, *e).line);
    } else {
      col.add(f->line);
      col.note("default epochs");
    }
  }
  col.emit(FaultType::Epoch, report, "no fit call found");
}

void localize_act(const ProgramModel& pm, LocalizationReport& report) {
  Collector col;
  for (const Construct* layer : of_kind(pm, ConstructKind::LayerCall)) {
    for (const auto& site : activation_sites(pm, *layer)) col.add(site.first);
  }
  col.emit(FaultType::Act, report, "no activation found");
}

}  // namespace

std::string_view construct_kind_name(ConstructKind kind) noexcept {
  switch (kind) {
    case ConstructKind::LayerCall: return "LayerCall";
    case ConstructKind::CompileCall: return "CompileCall";
    case ConstructKind::FitCall: return "FitCall";
    case ConstructKind::OptimizerCtor: return "OptimizerCtor";
    case ConstructKind::Assignment: return "Assignment";
  }
  return "?";
}

const ArgValue* Construct::kwarg(std::string_view key) const {
  for (const auto& [k, v] : kwargs) {
    if (k == key) return &v;
  }
  return nullptr;
}

const Binding* ProgramModel::resolve(std::string_view name, int use_line) const {
  const Binding* found = nullptr;
  for (const auto& b : bindings) {
    if (b.name == name && b.line <= use_line) found = &b;
  }
  return found;
}

std::map<std::string, Binding> ProgramModel::binding_table() const {
  std::map<std::string, Binding> table;
  for (const auto& b : bindings) table[b.name] = b;
  return table;
}

ProgramModel parse_program(std::string_view source, std::string id) {
  ProgramModel pm;
  pm.line_count = static_cast<int>(std::count(source.begin(), source.end(), '\n')) +
                  (source.empty() || source.back() == '\n' ? 0 : 1);
  const auto tokens = detail::tokenize(source);
  Parser(tokens, pm).run();
  pm.derived_spec = derive_spec(pm, std::move(id));
  return pm;
}

ProgramModel load_program_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read program '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_program(ss.str(), path.stem().string());
}

LocalizationReport localize(const ProgramModel& program, const FaultLabelSet& faults) {
  LocalizationReport report;
  for (FaultType t : faults.types()) {
    switch (t) {
      case FaultType::Loss: localize_loss(program, report); break;
      case FaultType::Optimizer: localize_optimizer(program, report); break;
      case FaultType::Lr: localize_lr(program, report); break;
      case FaultType::Epoch: localize_epoch(program, report); break;
      case FaultType::Act: localize_act(program, report); break;
    }
  }
  return report;
}

std::string localization_to_json(const LocalizationReport& report, int indent) {
  using json = nlohmann::ordered_json;
  json faults = json::object();
  json notes = json::object();
  for (FaultType t : kAllFaultTypes) {
    if (auto it = report.lines.find(t); it != report.lines.end()) {
      faults[std::string(fault_name(t))] = it->second;
    }
    if (auto it = report.notes.find(t); it != report.notes.end()) {
      notes[std::string(fault_name(t))] = it->second;
    }
  }
  json unresolved = json::array();
  for (const auto& u : report.unresolved) {
    unresolved.push_back({{"fault", std::string(fault_name(u.type))}, {"reason", u.reason}});
  }
  json j = {{"faults", faults}, {"notes", notes}, {"unresolved", unresolved}};
  return j.dump(indent);
}

}  // namespace tracediag
