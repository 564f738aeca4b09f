#pragma once

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ecc/core/hash.hpp"
#include "ecc/core/result.hpp"
#include "ecc/core/text.hpp"
#include "ecc/minilang/program.hpp"
#include "ecc/repo/snapshot.hpp"

// Line-oriented three-address language:
//
//   fn name(p1, p2)        test name
//     x = <atom>             y = call name(1, 2)
//     x = <atom> <op> <atom> assert y == 3
//     x = call f(a, b)     end
//     x = rand(k)
//     L: <stmt>  |  L:
//     goto L  |  if <atom> goto L
//     return <atom>
//   end
//
// `#` starts a comment. One instruction per line, so line coverage is exact.

namespace ecc::mini {

struct BuildError {
  std::string path;
  int line = 0;
  std::string message;

  std::string str() const { return path + ":" + std::to_string(line) + ": " + message; }
};

namespace detail {

struct Token {
  enum class Kind { ident, number, symbol };
  Kind kind;
  std::string text;
};

inline bool is_keyword(std::string_view s) {
  static const std::set<std::string_view> kKeywords = {"fn",     "test",   "end",  "goto", "if",
                                                       "return", "assert", "call", "rand"};
  return kKeywords.count(s) > 0;
}

inline std::string_view strip_comment(std::string_view line) {
  auto hash = line.find('#');
  return text::trim(hash == std::string_view::npos ? line : line.substr(0, hash));
}

inline bool tokenize(std::string_view line, std::vector<Token>& out, std::string& err) {
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < line.size() && (std::isalnum(static_cast<unsigned char>(line[j])) || line[j] == '_')) ++j;
      out.push_back({Token::Kind::ident, std::string(line.substr(i, j - i))});
      i = j;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
      if (j < line.size() && (std::isalpha(static_cast<unsigned char>(line[j])) || line[j] == '_')) {
        err = "malformed number";
        return false;
      }
      out.push_back({Token::Kind::number, std::string(line.substr(i, j - i))});
      i = j;
    } else {
      static constexpr std::string_view kTwo[] = {"==", "!=", "<=", ">="};
      bool matched = false;
      for (auto two : kTwo) {
        if (line.substr(i, 2) == two) {
          out.push_back({Token::Kind::symbol, std::string(two)});
          i += 2;
          matched = true;
          break;
        }
      }
      if (matched) continue;
      if (std::string_view("+-*/%<>=(),:").find(c) == std::string_view::npos) {
        err = std::string("unexpected character '") + c + "'";
        return false;
      }
      out.push_back({Token::Kind::symbol, std::string(1, c)});
      ++i;
    }
  }
  return true;
}

inline std::optional<BinOp> parse_op(std::string_view s) {
  static const std::map<std::string_view, BinOp> kOps = {
      {"+", BinOp::add}, {"-", BinOp::sub}, {"*", BinOp::mul},  {"/", BinOp::div},
      {"%", BinOp::mod}, {"<", BinOp::lt},  {"<=", BinOp::le},  {">", BinOp::gt},
      {">=", BinOp::ge}, {"==", BinOp::eq}, {"!=", BinOp::ne}};
  auto it = kOps.find(s);
  if (it == kOps.end()) return std::nullopt;
  return it->second;
}

/// A parsed source line before slot and label resolution.
struct Stmt {
  enum class Kind { blank, label_only, fn_header, test_header, end, instr };
  Kind kind = Kind::blank;
  std::string label;
  std::string name;                 // fn/test name, or assignment destination
  std::vector<std::string> params;  // fn params
  Instr instr;                      // atoms carry names; slots unresolved
  std::string normalized;           // canonical token text of the whole line
};

class LineParser {
 public:
  LineParser(const std::vector<Token>& toks) : toks_(toks) {}

  bool parse(Stmt& out, std::string& err) {
    if (toks_.empty()) {
      out.kind = Stmt::Kind::blank;
      return true;
    }
    if (toks_.size() >= 2 && toks_[0].kind == Token::Kind::ident && toks_[1].text == ":") {
      if (is_keyword(toks_[0].text)) return fail(err, "keyword used as label");
      out.label = toks_[0].text;
      pos_ = 2;
      if (done()) {
        out.kind = Stmt::Kind::label_only;
        return true;
      }
    }
    const std::string head = peek().text;
    if (head == "fn" || head == "test" || head == "end") {
      if (!out.label.empty()) return fail(err, "label on '" + head + "' line");
      ++pos_;
      if (head == "end") {
        out.kind = Stmt::Kind::end;
        return expect_done(err);
      }
      std::string name;
      if (!ident(name, err)) return false;
      out.name = name;
      if (head == "test") {
        out.kind = Stmt::Kind::test_header;
        return expect_done(err);
      }
      out.kind = Stmt::Kind::fn_header;
      if (!symbol("(", err)) return false;
      if (!accept(")")) {
        for (;;) {
          std::string p;
          if (!ident(p, err)) return false;
          if (std::find(out.params.begin(), out.params.end(), p) != out.params.end()) {
            return fail(err, "duplicate parameter '" + p + "'");
          }
          out.params.push_back(p);
          if (accept(")")) break;
          if (!symbol(",", err)) return false;
        }
      }
      return expect_done(err);
    }

    out.kind = Stmt::Kind::instr;
    Instr& in = out.instr;
    if (accept_word("goto")) {
      in.kind = Instr::Kind::jump;
      if (!ident(in.label, err)) return false;
      return expect_done(err);
    }
    if (accept_word("if")) {
      in.kind = Instr::Kind::branch;
      if (!atom(in.lhs, err)) return false;
      if (!accept_word("goto")) return fail(err, "expected 'goto'");
      if (!ident(in.label, err)) return false;
      return expect_done(err);
    }
    if (accept_word("return")) {
      in.kind = Instr::Kind::ret;
      if (!atom(in.lhs, err)) return false;
      return expect_done(err);
    }
    if (accept_word("assert")) {
      in.kind = Instr::Kind::assert_;
      if (!atom(in.lhs, err)) return false;
      if (!done()) {
        auto op = parse_op(peek().text);
        if (!op || peek().kind != Token::Kind::symbol) return fail(err, "expected operator");
        ++pos_;
        in.op = *op;
        in.has_rhs = true;
        if (!atom(in.rhs, err)) return false;
      }
      return expect_done(err);
    }

    std::string dst;
    if (!ident(dst, err)) return false;
    if (!symbol("=", err)) return false;
    out.name = dst;
    if (accept_word("call")) {
      in.kind = Instr::Kind::call;
      if (!ident(in.callee, err)) return false;
      if (!symbol("(", err)) return false;
      if (!accept(")")) {
        for (;;) {
          Atom a;
          if (!atom(a, err)) return false;
          in.args.push_back(a);
          if (accept(")")) break;
          if (!symbol(",", err)) return false;
        }
      }
    } else if (accept_word("rand")) {
      in.kind = Instr::Kind::rand;
      if (!symbol("(", err)) return false;
      if (!atom(in.lhs, err)) return false;
      if (!symbol(")", err)) return false;
    } else {
      if (!atom(in.lhs, err)) return false;
      if (done()) {
        in.kind = Instr::Kind::assign;
      } else {
        auto op = parse_op(peek().text);
        if (!op || peek().kind != Token::Kind::symbol) return fail(err, "expected operator");
        ++pos_;
        in.kind = Instr::Kind::binary;
        in.op = *op;
        if (!atom(in.rhs, err)) return false;
      }
    }
    return expect_done(err);
  }

 private:
  bool done() const { return pos_ >= toks_.size(); }
  const Token& peek() const { return toks_[pos_]; }
  bool fail(std::string& err, std::string msg) {
    err = std::move(msg);
    return false;
  }
  bool accept(std::string_view sym) {
    if (!done() && peek().kind == Token::Kind::symbol && peek().text == sym) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept_word(std::string_view w) {
    if (!done() && peek().kind == Token::Kind::ident && peek().text == w) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool symbol(std::string_view sym, std::string& err) {
    if (accept(sym)) return true;
    return fail(err, "expected '" + std::string(sym) + "'");
  }
  bool ident(std::string& out, std::string& err) {
    if (done() || peek().kind != Token::Kind::ident) return fail(err, "expected identifier");
    if (is_keyword(peek().text)) return fail(err, "unexpected keyword '" + peek().text + "'");
    out = peek().text;
    ++pos_;
    return true;
  }
  bool atom(Atom& out, std::string& err) {
    bool negative = false;
    if (accept("-")) negative = true;
    if (done()) return fail(err, "expected operand");
    const Token& t = peek();
    if (t.kind == Token::Kind::number) {
      std::string digits = negative ? "-" + t.text : t.text;
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
      if (ec != std::errc() || ptr != digits.data() + digits.size()) {
        return fail(err, "integer literal out of range");
      }
      out = Atom{true, v, -1, {}};
      ++pos_;
      return true;
    }
    if (negative) return fail(err, "expected integer after '-'");
    std::string name;
    if (!ident(name, err)) return false;
    out = Atom{false, 0, -1, name};
    return true;
  }
  bool expect_done(std::string& err) {
    if (!done()) return fail(err, "unexpected '" + peek().text + "'");
    return true;
  }

  const std::vector<Token>& toks_;
  std::size_t pos_ = 0;
};

inline std::string normalize_tokens(const std::vector<Token>& toks) {
  std::string out;
  for (const auto& t : toks) {
    if (!out.empty()) out += ' ';
    out += t.text;
  }
  return out;
}

inline bool parse_line(std::string_view raw, Stmt& out, std::string& err) {
  std::vector<Token> toks;
  if (!tokenize(strip_comment(raw), toks, err)) return false;
  out.normalized = normalize_tokens(toks);
  return LineParser(toks).parse(out, err);
}

/// A `fn` or `test` block under construction.
struct RawBlock {
  std::string name;
  std::vector<std::string> params;
  LineRef header;
  std::vector<std::pair<LineRef, Stmt>> lines;  // statements strictly inside the block
  std::string header_normalized;
};

inline std::optional<BuildError> resolve_body(const RawBlock& block, bool allow_assert, Body& body) {
  std::map<std::string, int> slots;
  auto slot_of = [&](const std::string& name) {
    auto [it, inserted] = slots.try_emplace(name, static_cast<int>(body.slot_names.size()));
    if (inserted) body.slot_names.push_back(name);
    return it->second;
  };
  for (const auto& p : block.params) slot_of(p);

  std::map<std::string, int> labels;
  for (const auto& [ref, st] : block.lines) {
    if (!st.label.empty()) {
      if (!labels.emplace(st.label, static_cast<int>(body.instrs.size())).second) {
        return BuildError{ref.path, ref.line, "duplicate label '" + st.label + "'"};
      }
    }
    if (st.kind != Stmt::Kind::instr) continue;
    Instr in = st.instr;
    in.at = ref;
    if (in.kind == Instr::Kind::assert_ && !allow_assert) {
      return BuildError{ref.path, ref.line, "assert outside test"};
    }
    auto fix_atom = [&](Atom& a) {
      if (!a.literal) a.slot = slot_of(a.name);
    };
    switch (in.kind) {
      case Instr::Kind::assign:
      case Instr::Kind::branch:
      case Instr::Kind::ret:
        fix_atom(in.lhs);
        break;
      case Instr::Kind::binary:
      case Instr::Kind::assert_:
        fix_atom(in.lhs);
        if (in.kind == Instr::Kind::binary || in.has_rhs) fix_atom(in.rhs);
        break;
      case Instr::Kind::rand:
        fix_atom(in.lhs);
        body.uses_rand = true;
        break;
      case Instr::Kind::call:
        for (auto& a : in.args) fix_atom(a);
        if (std::find(body.callees.begin(), body.callees.end(), in.callee) == body.callees.end()) {
          body.callees.push_back(in.callee);
        }
        break;
      case Instr::Kind::jump:
        break;
    }
    if (in.kind == Instr::Kind::assign || in.kind == Instr::Kind::binary ||
        in.kind == Instr::Kind::call || in.kind == Instr::Kind::rand) {
      in.dst = slot_of(st.name);
    }
    body.instrs.push_back(std::move(in));
  }
  for (std::size_t i = 0; i < body.instrs.size(); ++i) {
    Instr& in = body.instrs[i];
    if (in.kind != Instr::Kind::jump && in.kind != Instr::Kind::branch) continue;
    auto it = labels.find(in.label);
    if (it == labels.end()) return BuildError{in.at.path, in.at.line, "undefined label '" + in.label + "'"};
    in.target = it->second;
  }
  return std::nullopt;
}

/// Splits one file into top-level blocks of the expected kind.
inline std::optional<BuildError> parse_blocks(const std::string& path, const std::vector<std::string>& lines,
                                              Stmt::Kind header_kind, std::vector<RawBlock>& out,
                                              LineSet& executable) {
  std::optional<RawBlock> open;
  const char* expected = header_kind == Stmt::Kind::fn_header ? "fn" : "test";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const LineRef ref{path, static_cast<int>(i) + 1};
    Stmt st;
    std::string err;
    if (!parse_line(lines[i], st, err)) return BuildError{path, ref.line, "syntax error: " + err};
    switch (st.kind) {
      case Stmt::Kind::blank:
        break;
      case Stmt::Kind::fn_header:
      case Stmt::Kind::test_header:
        if (st.kind != header_kind) {
          return BuildError{path, ref.line, std::string("syntax error: expected '") + expected + "' block"};
        }
        if (open) return BuildError{path, ref.line, "syntax error: nested block"};
        open = RawBlock{st.name, st.params, ref, {}, st.normalized};
        break;
      case Stmt::Kind::end:
        if (!open) return BuildError{path, ref.line, "syntax error: 'end' outside block"};
        out.push_back(std::move(*open));
        open.reset();
        break;
      case Stmt::Kind::label_only:
      case Stmt::Kind::instr:
        if (!open) return BuildError{path, ref.line, "syntax error: statement outside block"};
        if (st.kind == Stmt::Kind::instr) executable.insert(ref);
        open->lines.emplace_back(ref, std::move(st));
        break;
    }
  }
  if (open) return BuildError{path, open->header.line, "syntax error: unterminated block"};
  return std::nullopt;
}

inline std::string normalized_body(const RawBlock& block) {
  std::string out;
  for (const auto& [_, st] : block.lines) {
    out += st.normalized;
    out += '\n';
  }
  return out;
}

inline std::optional<BuildError> parse_test_blocks(const std::string& path, const std::vector<std::string>& lines,
                                                   std::vector<TestCase>& tests,
                                                   std::map<std::string, LineRef>& seen, LineSet& executable) {
  std::vector<RawBlock> blocks;
  if (auto err = parse_blocks(path, lines, Stmt::Kind::test_header, blocks, executable)) return err;
  for (const auto& b : blocks) {
    if (!seen.emplace(b.name, b.header).second) {
      return BuildError{path, b.header.line, "duplicate test '" + b.name + "'"};
    }
    TestCase t;
    t.name = b.name;
    t.path = path;
    t.header_line = b.header.line;
    if (auto err = resolve_body(b, true, t.body)) return err;
    t.content_hash = hash_hex(normalized_body(b));
    tests.push_back(std::move(t));
  }
  return std::nullopt;
}

inline Result<std::vector<TestCase>, BuildError> parse_test_files(const Snapshot& s, LineSet& executable) {
  std::vector<TestCase> tests;
  std::map<std::string, LineRef> seen;
  for (const auto& [path, lines] : s.files()) {
    if (!text::starts_with(path, "tests/") || !text::ends_with(path, ".t")) continue;
    if (auto err = parse_test_blocks(path, lines, tests, seen, executable)) return *err;
  }
  return tests;
}

}  // namespace detail

/// Parses `src/*.mini` and checks `tests/*.t`; resolves every call.
inline Result<Program, BuildError> build(const Snapshot& s) {
  Program prog;
  std::vector<detail::RawBlock> blocks;
  for (const auto& [path, lines] : s.files()) {
    if (!text::starts_with(path, "src/") || !text::ends_with(path, ".mini")) continue;
    if (auto err = detail::parse_blocks(path, lines, detail::Stmt::Kind::fn_header, blocks, prog.executable_lines)) {
      return *err;
    }
  }
  for (const auto& b : blocks) {
    Function f;
    f.name = b.name;
    f.params = b.params;
    f.header = b.header;
    f.normalized_text = b.header_normalized + "\n" + detail::normalized_body(b) + "end\n";
    if (auto err = detail::resolve_body(b, false, f.body)) return *err;
    if (prog.functions.count(f.name)) {
      return BuildError{b.header.path, b.header.line, "duplicate function '" + f.name + "'"};
    }
    prog.functions.emplace(f.name, std::move(f));
  }
  for (const auto& b : blocks) {
    const Function& f = prog.functions.at(b.name);
    for (const auto& in : f.body.instrs) {
      if (in.kind != Instr::Kind::call) continue;
      const Function* callee = prog.find(in.callee);
      if (callee == nullptr) return BuildError{in.at.path, in.at.line, "unresolved call '" + in.callee + "'"};
      if (callee->params.size() != in.args.size()) {
        return BuildError{in.at.path, in.at.line,
                          "bad arity for '" + in.callee + "': expected " + std::to_string(callee->params.size()) +
                              ", got " + std::to_string(in.args.size())};
      }
    }
  }
  auto tests = detail::parse_test_files(s, prog.executable_lines);
  if (!tests) return tests.error();
  return prog;
}

/// One TestCase per `test ... end` block of `tests/*.t`.
inline Result<std::vector<TestCase>, BuildError> list_tests(const Snapshot& s) {
  LineSet scratch;
  return detail::parse_test_files(s, scratch);
}

/// Parses a standalone test file (e.g. hidden witness tests); `path` is only
/// used to label the test's lines.
inline Result<std::vector<TestCase>, BuildError> parse_test_file(const std::string& path,
                                                                 const std::vector<std::string>& lines) {
  std::vector<TestCase> tests;
  std::map<std::string, LineRef> seen;
  LineSet scratch;
  if (auto err = detail::parse_test_blocks(path, lines, tests, seen, scratch)) return *err;
  return tests;
}

}  // namespace ecc::mini
