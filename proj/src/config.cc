// Copyright 2026 The flashdev Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flashdev/config.h"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "flashdev/output.h"

namespace flashdev {
namespace {

enum class Kind { kInt, kReal, kString, kBool, kList };

struct Value {
  Kind kind = Kind::kInt;
  std::string text;  // scalar spelling, unquoted for strings
  std::vector<Value> items;
  size_t line = 0;
  size_t column = 0;
};

// --- Lexing ------------------------------------------------------------------

class LineParser {
 public:
  LineParser(std::string_view line, size_t line_no)
      : s_(line), line_(line_no) {}

  [[noreturn]] void Fail(const std::string& what) const {
    throw ConfigSyntaxError(line_, pos_ + 1, what);
  }

  void SkipSpace() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }
  bool AtEnd() {
    SkipSpace();
    return pos_ == s_.size() || s_[pos_] == '#' || s_[pos_] == ';';
  }
  size_t pos() const { return pos_; }
  char Peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void Expect(char c) {
    SkipSpace();
    if (Peek() != c) Fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  std::string Identifier() {
    SkipSpace();
    const size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
            s_[pos_] == '_' || s_[pos_] == '-')) {
      ++pos_;
    }
    if (pos_ == start) Fail("expected a name");
    return std::string(s_.substr(start, pos_ - start));
  }

  Value ParseValue(bool allow_list) {
    SkipSpace();
    Value v;
    v.line = line_;
    v.column = pos_ + 1;
    if (Peek() == '[') {
      if (!allow_list) Fail("nested lists are not supported");
      ++pos_;
      v.kind = Kind::kList;
      SkipSpace();
      if (Peek() == ']') {
        ++pos_;
        return v;
      }
      while (true) {
        v.items.push_back(ParseValue(false));
        SkipSpace();
        if (Peek() == ',') {
          ++pos_;
          continue;
        }
        if (Peek() == ']') {
          ++pos_;
          return v;
        }
        Fail("expected ',' or ']' in list");
      }
    }
    if (Peek() == '"') {
      ++pos_;
      v.kind = Kind::kString;
      while (true) {
        if (pos_ >= s_.size()) Fail("unterminated string");
        const char c = s_[pos_++];
        if (c == '"') return v;
        if (c == '\\') {
          if (pos_ >= s_.size()) Fail("unterminated string");
          const char e = s_[pos_++];
          if (e != '"' && e != '\\') Fail("unsupported escape");
          v.text += e;
        } else {
          v.text += c;
        }
      }
    }
    const size_t start = pos_;
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) &&
           s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' &&
           s_[pos_] != ';') {
      ++pos_;
    }
    v.text = std::string(s_.substr(start, pos_ - start));
    if (v.text.empty()) {
      pos_ = start;
      Fail("expected a value");
    }
    if (v.text == "true" || v.text == "false") {
      v.kind = Kind::kBool;
      return v;
    }
    int64_t i = 0;
    auto r = std::from_chars(v.text.data(), v.text.data() + v.text.size(), i);
    if (r.ec == std::errc() && r.ptr == v.text.data() + v.text.size()) {
      v.kind = Kind::kInt;
      return v;
    }
    double d = 0;
    r = std::from_chars(v.text.data(), v.text.data() + v.text.size(), d);
    if (r.ec == std::errc() && r.ptr == v.text.data() + v.text.size()) {
      v.kind = Kind::kReal;
      return v;
    }
    pos_ = start;
    Fail("unrecognized value \"" + v.text +
         "\" (strings must be double-quoted)");
  }

 private:
  std::string_view s_;
  size_t line_;
  size_t pos_ = 0;
};

// --- Typed accessors -----------------------------------------------------------

std::string Where(const std::string& key, const Value& v) {
  return "'" + key + "' (line " + std::to_string(v.line) + ")";
}

uint64_t AsUnsigned(const std::string& key, const Value& v, uint64_t min = 0) {
  if (v.kind != Kind::kInt) {
    throw ConfigRangeError(Where(key, v) + " must be an integer");
  }
  if (!v.text.empty() && v.text[0] == '-') {
    throw ConfigRangeError(Where(key, v) + " must be >= " + std::to_string(min));
  }
  uint64_t out = 0;
  const auto r =
      std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  if (r.ec != std::errc()) {
    throw ConfigRangeError(Where(key, v) + " is out of range");
  }
  if (out < min) {
    throw ConfigRangeError(Where(key, v) + " must be >= " + std::to_string(min));
  }
  return out;
}

double AsReal(const std::string& key, const Value& v) {
  if (v.kind != Kind::kInt && v.kind != Kind::kReal) {
    throw ConfigRangeError(Where(key, v) + " must be a number");
  }
  double out = 0;
  std::from_chars(v.text.data(), v.text.data() + v.text.size(), out);
  return out;
}

const std::string& AsString(const std::string& key, const Value& v) {
  if (v.kind != Kind::kString) {
    throw ConfigRangeError(Where(key, v) + " must be a quoted string");
  }
  return v.text;
}

const std::vector<Value>& AsList(const std::string& key, const Value& v) {
  if (v.kind != Kind::kList) {
    throw ConfigRangeError(Where(key, v) + " must be a [list]");
  }
  if (v.items.empty()) {
    throw ConfigRangeError(Where(key, v) + " must not be empty");
  }
  return v.items;
}

// Runs a parse function that throws std::invalid_argument and rethrows as a
// range error tagged with the key.
template <typename F>
auto Named(const std::string& key, const Value& v, F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigRangeError(Where(key, v) + ": " + e.what());
  }
}

FloatFormat AsFormat(const std::string& key, const Value& v) {
  return Named(key, v, [&] { return ParseFormat(AsString(key, v)); });
}

std::vector<FloatFormat> AsFormats(const std::string& key, const Value& v) {
  std::vector<FloatFormat> out;
  for (const Value& item : AsList(key, v)) out.push_back(AsFormat(key, item));
  return out;
}

std::vector<size_t> AsSizes(const std::string& key, const Value& v) {
  std::vector<size_t> out;
  for (const Value& item : AsList(key, v)) out.push_back(AsUnsigned(key, item, 1));
  return out;
}

Accumulation AsAccumulation(const std::string& key, const Value& v) {
  const std::string& s = AsString(key, v);
  if (s == "per_op") return Accumulation::kPerOp;
  if (s == "carrier") return Accumulation::kCarrier;
  throw ConfigRangeError(Where(key, v) + " must be \"per_op\" or \"carrier\"");
}

using Setter = std::function<void(ExperimentConfig&, const std::string&,
                                  const Value&)>;

const std::map<std::string, Setter>& Setters() {
  static const auto* setters = new std::map<std::string, Setter>{
      // Top level.
      {"seq_len", [](auto& c, auto& k, auto& v) { c.attention.seq_len = AsUnsigned(k, v, 1); }},
      {"head_dim", [](auto& c, auto& k, auto& v) { c.attention.head_dim = AsUnsigned(k, v, 1); }},
      {"format", [](auto& c, auto& k, auto& v) { c.attention.format = AsFormat(k, v); }},
      {"block_rows", [](auto& c, auto& k, auto& v) { c.attention.block_rows = AsUnsigned(k, v); }},
      {"block_cols", [](auto& c, auto& k, auto& v) { c.attention.block_cols = AsUnsigned(k, v); }},
      {"sram_elems", [](auto& c, auto& k, auto& v) { c.attention.sram_elems = AsUnsigned(k, v, 1); }},
      {"accumulation", [](auto& c, auto& k, auto& v) {
         c.attention.accumulation = AsAccumulation(k, v);
         c.train.accumulation = c.attention.accumulation;
       }},
      {"distribution", [](auto& c, auto& k, auto& v) {
         c.distribution = Named(k, v, [&] { return ParseDistribution(AsString(k, v)); });
       }},
      {"seeds", [](auto& c, auto& k, auto& v) { c.seeds = AsUnsigned(k, v, 1); }},
      {"seed_base", [](auto& c, auto& k, auto& v) { c.seed_base = AsUnsigned(k, v); }},
      {"threads", [](auto& c, auto& k, auto& v) {
         const uint64_t t = AsUnsigned(k, v, 1);
         if (t > 1024) throw ConfigRangeError(Where(k, v) + " must be <= 1024");
         c.threads = static_cast<int>(t);
       }},
      {"out", [](auto& c, auto& k, auto& v) { c.out = AsString(k, v); }},
      // [precision]
      {"precision.formats", [](auto& c, auto& k, auto& v) { c.precision_formats = AsFormats(k, v); }},
      // [seqlen]
      {"seqlen.points", [](auto& c, auto& k, auto& v) { c.seqlen_points = AsSizes(k, v); }},
      // [blocks]
      {"blocks.areas", [](auto& c, auto& k, auto& v) { c.block_areas = AsSizes(k, v); }},
      {"blocks.sram_elems", [](auto& c, auto& k, auto& v) { c.block_base_sram_elems = AsUnsigned(k, v, 1); }},
      {"blocks.formats", [](auto& c, auto& k, auto& v) { c.block_formats = AsFormats(k, v); }},
      {"blocks.perturbations", [](auto& c, auto& k, auto& v) {
         c.block_perturbations.clear();
         for (const Value& item : AsList(k, v)) {
           const PerturbationKind p =
               Named(k, item, [&] { return ParsePerturbation(AsString(k, item)); });
           if (p == PerturbationKind::kScaleArea) {
             throw ConfigRangeError(Where(k, item) +
                                    ": scale_area is the sweep axis itself");
           }
           c.block_perturbations.push_back(p);
         }
       }},
      // [train]
      {"train.seeds", [](auto& c, auto& k, auto& v) { c.train_seeds = AsUnsigned(k, v, 1); }},
      {"train.steps", [](auto& c, auto& k, auto& v) { c.train.steps = AsUnsigned(k, v, 1); }},
      {"train.learning_rate", [](auto& c, auto& k, auto& v) { c.train.learning_rate = AsReal(k, v); }},
      {"train.checkpoint_every", [](auto& c, auto& k, auto& v) { c.train.checkpoint_every = AsUnsigned(k, v, 1); }},
      {"train.format", [](auto& c, auto& k, auto& v) { c.train.train_format = AsFormat(k, v); }},
      {"train.vocab", [](auto& c, auto& k, auto& v) { c.train.task.vocab = AsUnsigned(k, v, 1); }},
      {"train.seq_len", [](auto& c, auto& k, auto& v) { c.train.task.seq_len = AsUnsigned(k, v, 1); }},
      {"train.head_dim", [](auto& c, auto& k, auto& v) { c.train.task.head_dim = AsUnsigned(k, v, 1); }},
      {"train.classes", [](auto& c, auto& k, auto& v) { c.train.task.classes = AsUnsigned(k, v, 2); }},
      {"train.batch", [](auto& c, auto& k, auto& v) { c.train.task.batch = AsUnsigned(k, v, 1); }},
      {"train.data_seed", [](auto& c, auto& k, auto& v) { c.train.task.data_seed = AsUnsigned(k, v); }},
      {"train.block_rows", [](auto& c, auto& k, auto& v) { c.train.flash_geometry.block_rows = AsUnsigned(k, v, 1); }},
      {"train.block_cols", [](auto& c, auto& k, auto& v) { c.train.flash_geometry.block_cols = AsUnsigned(k, v, 1); }},
  };
  return *setters;
}

// Cross-field checks, run once every key is applied.
void ValidateResolved(const ExperimentConfig& c) {
  auto check = [](auto&& f) {
    try {
      f();
    } catch (const std::invalid_argument& e) {
      throw ConfigRangeError(e.what());
    }
  };
  check([&] { (void)c.attention.geometry(); });
  check([&] { ValidateSweepSpec(PrecisionSpec(c)); });
  check([&] { ValidateSweepSpec(SeqLenSpec(c)); });
  for (PerturbationKind p : c.block_perturbations) {
    check([&] { ValidateSweepSpec(BlockSpec(c, p)); });
  }
  check([&] { ValidateTrainRunConfig(c.train); });
}

// --- Canonical output ------------------------------------------------------------

std::string Quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

std::string FormatName(const FloatFormat& f) {
  return Quote(f.name());
}

template <typename T, typename F>
std::string List(const std::vector<T>& xs, F&& item) {
  std::string out = "[";
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ", ";
    out += item(xs[i]);
  }
  return out + "]";
}

}  // namespace

ConfigSyntaxError::ConfigSyntaxError(size_t line, size_t column,
                                     const std::string& what)
    : ConfigError("line " + std::to_string(line) + ", column " +
                  std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

ExperimentConfig ParseConfig(std::string_view text) {
  ExperimentConfig cfg;
  std::map<std::string, size_t> seen;  // qualified key -> line
  std::string section;
  size_t line_no = 0;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    start = end + 1;

    LineParser p(line, line_no);
    if (p.AtEnd()) continue;
    if (p.Peek() == '[') {
      p.Expect('[');
      section = p.Identifier();
      p.Expect(']');
      if (!p.AtEnd()) p.Fail("unexpected text after section header");
      if (section != "precision" && section != "seqlen" &&
          section != "blocks" && section != "train") {
        throw UnknownKeyError("unknown section [" + section + "] (line " +
                              std::to_string(line_no) + ")");
      }
      continue;
    }
    const size_t key_col = p.pos() + 1;
    const std::string key = p.Identifier();
    p.Expect('=');
    const Value value = p.ParseValue(true);
    if (!p.AtEnd()) p.Fail("unexpected text after value");

    const std::string qualified = section.empty() ? key : section + "." + key;
    const auto& setters = Setters();
    const auto it = setters.find(qualified);
    if (it == setters.end()) {
      throw UnknownKeyError("unknown key '" + key + "'" +
                            (section.empty() ? "" : " in [" + section + "]") +
                            " (line " + std::to_string(line_no) + ")");
    }
    if (const auto dup = seen.find(qualified); dup != seen.end()) {
      throw ConfigSyntaxError(line_no, key_col,
                              "duplicate key '" + qualified +
                                  "' (first set on line " +
                                  std::to_string(dup->second) + ")");
    }
    seen.emplace(qualified, line_no);
    it->second(cfg, qualified, value);
  }
  ValidateResolved(cfg);
  return cfg;
}

ExperimentConfig LoadConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::ios_base::failure("cannot open config file " + path);
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseConfig(ss.str());
}

std::string FormatConfig(const ExperimentConfig& c) {
  const auto u = [](uint64_t x) { return std::to_string(x); };
  const auto fmts = [](const std::vector<FloatFormat>& xs) {
    return List(xs, FormatName);
  };
  const auto sizes = [&](const std::vector<size_t>& xs) { return List(xs, u); };
  std::ostringstream os;
  os << "seq_len = " << c.attention.seq_len << '\n'
     << "head_dim = " << c.attention.head_dim << '\n'
     << "format = " << FormatName(c.attention.format) << '\n'
     << "block_rows = " << c.attention.block_rows << '\n'
     << "block_cols = " << c.attention.block_cols << '\n'
     << "sram_elems = " << c.attention.sram_elems << '\n'
     << "accumulation = " << Quote(std::string(AccumulationName(c.attention.accumulation))) << '\n'
     << "distribution = " << Quote(std::string(DistributionName(c.distribution))) << '\n'
     << "seeds = " << c.seeds << '\n'
     << "seed_base = " << c.seed_base << '\n'
     << "threads = " << c.threads << '\n'
     << "out = " << Quote(c.out) << '\n'
     << "\n[precision]\n"
     << "formats = " << fmts(c.precision_formats) << '\n'
     << "\n[seqlen]\n"
     << "points = " << sizes(c.seqlen_points) << '\n'
     << "\n[blocks]\n"
     << "areas = " << sizes(c.block_areas) << '\n'
     << "sram_elems = " << c.block_base_sram_elems << '\n'
     << "perturbations = "
     << List(c.block_perturbations,
             [](PerturbationKind p) { return Quote(std::string(PerturbationName(p))); })
     << '\n'
     << "formats = " << fmts(c.block_formats) << '\n'
     << "\n[train]\n"
     << "seeds = " << c.train_seeds << '\n'
     << "steps = " << c.train.steps << '\n'
     << "learning_rate = " << FormatDouble(c.train.learning_rate) << '\n'
     << "checkpoint_every = " << c.train.checkpoint_every << '\n'
     << "format = " << FormatName(c.train.train_format) << '\n'
     << "vocab = " << c.train.task.vocab << '\n'
     << "seq_len = " << c.train.task.seq_len << '\n'
     << "head_dim = " << c.train.task.head_dim << '\n'
     << "classes = " << c.train.task.classes << '\n'
     << "batch = " << c.train.task.batch << '\n'
     << "data_seed = " << c.train.task.data_seed << '\n'
     << "block_rows = " << c.train.flash_geometry.block_rows << '\n'
     << "block_cols = " << c.train.flash_geometry.block_cols << '\n';
  return os.str();
}

ExperimentConfig ExperimentIdentity(const ExperimentConfig& cfg) {
  ExperimentConfig out = cfg;
  out.threads = ExperimentConfig().threads;
  out.out.clear();
  return out;
}

std::string ConfigHash(const ExperimentConfig& cfg) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : FormatConfig(ExperimentIdentity(cfg))) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

SweepSpec PrecisionSpec(const ExperimentConfig& cfg) {
  SweepSpec s;
  s.axis = SweepAxis::kPrecision;
  s.formats = cfg.precision_formats;
  s.base = cfg.attention;
  s.seeds = SeedRange(cfg.seed_base, cfg.seeds);
  s.distribution = cfg.distribution;
  s.threads = cfg.threads;
  return s;
}

SweepSpec SeqLenSpec(const ExperimentConfig& cfg) {
  SweepSpec s = PrecisionSpec(cfg);
  s.axis = SweepAxis::kSeqLen;
  s.formats = {cfg.attention.format};
  s.points = cfg.seqlen_points;
  return s;
}

SweepSpec BlockSpec(const ExperimentConfig& cfg, PerturbationKind kind) {
  SweepSpec s = PrecisionSpec(cfg);
  s.axis = SweepAxis::kBlockArea;
  s.formats = cfg.block_formats;
  s.points = cfg.block_areas;
  s.base.sram_elems = cfg.block_base_sram_elems;
  s.base.block_rows = 0;
  s.base.block_cols = 0;
  s.perturbation = kind;
  return s;
}

}  // namespace flashdev
