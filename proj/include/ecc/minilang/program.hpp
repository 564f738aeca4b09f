#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "ecc/repo/snapshot.hpp"

namespace ecc::mini {

enum class BinOp { add, sub, mul, div, mod, lt, le, gt, ge, eq, ne };

inline const char* to_string(BinOp op) {
  switch (op) {
    case BinOp::add: return "+";
    case BinOp::sub: return "-";
    case BinOp::mul: return "*";
    case BinOp::div: return "/";
    case BinOp::mod: return "%";
    case BinOp::lt: return "<";
    case BinOp::le: return "<=";
    case BinOp::gt: return ">";
    case BinOp::ge: return ">=";
    case BinOp::eq: return "==";
    case BinOp::ne: return "!=";
  }
  return "?";
}

/// Integer literal or local variable slot.
struct Atom {
  bool literal = true;
  std::int64_t value = 0;
  int slot = -1;
  std::string name;
};

struct Instr {
  enum class Kind { assign, binary, call, rand, jump, branch, ret, assert_ };

  Kind kind = Kind::assign;
  int dst = -1;  // destination slot
  Atom lhs;
  Atom rhs;
  bool has_rhs = false;  // binary form of `assert`
  BinOp op = BinOp::add;
  std::string callee;
  std::vector<Atom> args;
  std::string label;
  int target = -1;  // instruction index a jump lands on
  LineRef at;
};

/// Instruction sequence with resolved labels and variable slots.
struct Body {
  std::vector<Instr> instrs;
  std::vector<std::string> slot_names;
  bool uses_rand = false;
  std::vector<std::string> callees;  // statically named, in first-use order
};

struct Function {
  std::string name;
  std::vector<std::string> params;
  Body body;
  LineRef header;
  std::string normalized_text;  // header + statements, comments and blanks dropped
};

struct Program {
  std::map<std::string, Function> functions;
  LineSet executable_lines;  // instruction lines of src/ and tests/ files

  const Function* find(const std::string& name) const {
    auto it = functions.find(name);
    return it == functions.end() ? nullptr : &it->second;
  }
};

struct TestCase {
  std::string name;
  std::string path;
  int header_line = 0;
  Body body;
  std::string content_hash;  // over the normalized body only
};

enum class Outcome { pass, fail, error, unresolvable };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::pass: return "pass";
    case Outcome::fail: return "fail";
    case Outcome::error: return "error";
    case Outcome::unresolvable: return "unresolvable";
  }
  return "?";
}

inline bool parse_outcome(const std::string& s, Outcome& out) {
  for (Outcome o : {Outcome::pass, Outcome::fail, Outcome::error, Outcome::unresolvable}) {
    if (s == to_string(o)) {
      out = o;
      return true;
    }
  }
  return false;
}

/// One test's run on one version.
struct ExecutionRecord {
  std::string test_hash;
  std::string version_id;
  Outcome outcome = Outcome::pass;
  LineSet covered;
  std::int64_t steps = 0;
  std::uint64_t seed = 0;
  std::string detail;  // runtime error description, not persisted

  bool same_observation(const ExecutionRecord& o) const {
    return test_hash == o.test_hash && version_id == o.version_id && outcome == o.outcome &&
           covered == o.covered && steps == o.steps && seed == o.seed;
  }
};

inline constexpr std::int64_t kStepLimit = 100000;

}  // namespace ecc::mini
