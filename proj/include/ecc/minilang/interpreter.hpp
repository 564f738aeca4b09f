#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "ecc/core/hash.hpp"
#include "ecc/minilang/program.hpp"

namespace ecc::mini {

/// Value of the `draw`-th `rand(bound)` of a run seeded with `seed`.
/// Offsets are per draw index, so consecutive seeds enumerate every residue
/// of each draw: `bound` consecutive seeds cover all branches of one `rand`.
inline std::int64_t rand_draw(std::uint64_t seed, std::uint64_t draw, std::int64_t bound) {
  return static_cast<std::int64_t>((seed + splitmix64(draw)) % static_cast<std::uint64_t>(bound));
}

namespace detail {

inline std::int64_t wrap(std::uint64_t v) { return static_cast<std::int64_t>(v); }

inline bool apply_op(BinOp op, std::int64_t a, std::int64_t b, std::int64_t& out, std::string& err) {
  const auto ua = static_cast<std::uint64_t>(a);
  const auto ub = static_cast<std::uint64_t>(b);
  switch (op) {
    case BinOp::add: out = wrap(ua + ub); return true;
    case BinOp::sub: out = wrap(ua - ub); return true;
    case BinOp::mul: out = wrap(ua * ub); return true;
    case BinOp::div:
      if (b == 0) { err = "division by zero"; return false; }
      out = b == -1 ? wrap(0 - ua) : a / b;
      return true;
    case BinOp::mod:
      if (b == 0) { err = "modulo by zero"; return false; }
      out = b == -1 ? 0 : a % b;
      return true;
    case BinOp::lt: out = a < b; return true;
    case BinOp::le: out = a <= b; return true;
    case BinOp::gt: out = a > b; return true;
    case BinOp::ge: out = a >= b; return true;
    case BinOp::eq: out = a == b; return true;
    case BinOp::ne: out = a != b; return true;
  }
  return false;
}

struct Frame {
  const Body* body;
  std::size_t pc = 0;
  std::vector<std::int64_t> values;
  std::vector<char> assigned;
  int return_slot = -1;  // caller slot receiving this frame's result
};

}  // namespace detail

/// Interprets `t` against `p`. Coverage holds every executed instruction line,
/// test lines included, in the coordinates recorded on the instructions.
inline ExecutionRecord run_test(const Program& p, const TestCase& t, std::uint64_t seed,
                                std::int64_t step_limit = kStepLimit) {
  ExecutionRecord rec;
  rec.test_hash = t.content_hash;
  rec.seed = seed;
  std::uint64_t draws = 0;

  std::vector<detail::Frame> stack;
  auto push = [&](const Body& body) {
    detail::Frame f;
    f.body = &body;
    f.values.assign(body.slot_names.size(), 0);
    f.assigned.assign(body.slot_names.size(), 0);
    stack.push_back(std::move(f));
  };
  push(t.body);

  std::unordered_set<const Instr*> executed;
  auto stop = [&](Outcome o, std::string detail = {}) {
    if (o != Outcome::unresolvable) {
      for (const Instr* i : executed) rec.covered.insert(i->at);
    }
    rec.outcome = o;
    rec.detail = std::move(detail);
    return std::move(rec);
  };

  for (;;) {
    detail::Frame& f = stack.back();
    if (f.pc >= f.body->instrs.size()) {
      if (stack.size() == 1) return stop(Outcome::pass);
      const int slot = f.return_slot;
      stack.pop_back();
      stack.back().values[static_cast<std::size_t>(slot)] = 0;
      stack.back().assigned[static_cast<std::size_t>(slot)] = 1;
      continue;
    }
    const Instr& in = f.body->instrs[f.pc];
    if (rec.steps >= step_limit) return stop(Outcome::error, "timeout");
    ++rec.steps;
    executed.insert(&in);

    std::string err;
    auto read = [&](const Atom& a, std::int64_t& out) {
      if (a.literal) {
        out = a.value;
        return true;
      }
      const auto slot = static_cast<std::size_t>(a.slot);
      if (!f.assigned[slot]) {
        err = "undefined variable '" + a.name + "'";
        return false;
      }
      out = f.values[slot];
      return true;
    };
    auto write = [&](int slot, std::int64_t v) {
      f.values[static_cast<std::size_t>(slot)] = v;
      f.assigned[static_cast<std::size_t>(slot)] = 1;
    };

    std::int64_t a = 0;
    std::int64_t b = 0;
    switch (in.kind) {
      case Instr::Kind::assign:
        if (!read(in.lhs, a)) return stop(Outcome::error, err);
        write(in.dst, a);
        ++f.pc;
        break;
      case Instr::Kind::binary: {
        std::int64_t r = 0;
        if (!read(in.lhs, a) || !read(in.rhs, b) || !detail::apply_op(in.op, a, b, r, err)) {
          return stop(Outcome::error, err);
        }
        write(in.dst, r);
        ++f.pc;
        break;
      }
      case Instr::Kind::rand:
        if (!read(in.lhs, a)) return stop(Outcome::error, err);
        if (a <= 0) return stop(Outcome::error, "rand bound must be positive");
        write(in.dst, rand_draw(seed, draws++, a));
        ++f.pc;
        break;
      case Instr::Kind::jump:
        f.pc = static_cast<std::size_t>(in.target);
        break;
      case Instr::Kind::branch:
        if (!read(in.lhs, a)) return stop(Outcome::error, err);
        f.pc = a != 0 ? static_cast<std::size_t>(in.target) : f.pc + 1;
        break;
      case Instr::Kind::assert_: {
        if (!read(in.lhs, a)) return stop(Outcome::error, err);
        std::int64_t cond = a;
        if (in.has_rhs) {
          if (!read(in.rhs, b) || !detail::apply_op(in.op, a, b, cond, err)) {
            return stop(Outcome::error, err);
          }
        }
        if (cond == 0) return stop(Outcome::fail, "assertion failed at " + in.at.str());
        ++f.pc;
        break;
      }
      case Instr::Kind::ret: {
        if (!read(in.lhs, a)) return stop(Outcome::error, err);
        if (stack.size() == 1) return stop(Outcome::pass);
        const int slot = f.return_slot;
        stack.pop_back();
        stack.back().values[static_cast<std::size_t>(slot)] = a;
        stack.back().assigned[static_cast<std::size_t>(slot)] = 1;
        break;
      }
      case Instr::Kind::call: {
        const Function* callee = p.find(in.callee);
        if (callee == nullptr || callee->params.size() != in.args.size()) {
          return stop(Outcome::unresolvable, "unresolved '" + in.callee + "'");
        }
        std::vector<std::int64_t> args(in.args.size());
        for (std::size_t i = 0; i < in.args.size(); ++i) {
          if (!read(in.args[i], args[i])) return stop(Outcome::error, err);
        }
        ++f.pc;
        const int return_slot = in.dst;
        push(callee->body);  // invalidates `f`
        detail::Frame& callee_frame = stack.back();
        callee_frame.return_slot = return_slot;
        for (std::size_t i = 0; i < args.size(); ++i) {
          callee_frame.values[i] = args[i];
          callee_frame.assigned[i] = 1;
        }
        break;
      }
    }
  }
}

/// Statically named callees reachable from a test.
struct Dependencies {
  std::set<std::string> functions;
  bool unresolved = false;  // some direct callee is missing or has another arity
};

inline Dependencies test_dependencies(const Program& p, const TestCase& t) {
  Dependencies deps;
  std::vector<std::string> work;
  for (const auto& in : t.body.instrs) {
    if (in.kind != Instr::Kind::call) continue;
    const Function* f = p.find(in.callee);
    if (f == nullptr || f->params.size() != in.args.size()) {
      deps.unresolved = true;
      continue;
    }
    if (deps.functions.insert(in.callee).second) work.push_back(in.callee);
  }
  while (!work.empty()) {
    std::string name = std::move(work.back());
    work.pop_back();
    for (const auto& callee : p.functions.at(name).body.callees) {
      if (deps.functions.insert(callee).second) work.push_back(callee);
    }
  }
  return deps;
}

}  // namespace ecc::mini
