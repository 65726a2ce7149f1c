// Random-instance generators for property tests.
#ifndef SAM_TESTS_GEN_RANDOM_HPP
#define SAM_TESTS_GEN_RANDOM_HPP

#include <string>
#include <vector>

#include "sam/factor_models.hpp"
#include "sam/rng.hpp"
#include "sam/usage_ir.hpp"

namespace testgen {

inline sam::ApiMethodId random_id(sam::Rng& rng) {
  static const std::vector<std::string> kTypes = {"Alpha", "Beta", "Gamma", "Delta"};
  static const std::vector<std::string> kMethods = {"<init>", "open", "use", "close", "peek"};
  sam::ApiMethodId id;
  id.receiver_type = kTypes[rng.below(kTypes.size())];
  id.method_name = kMethods[rng.below(kMethods.size())];
  id.arity = std::uint32_t(rng.below(3));
  return id;
}

inline std::string random_var(sam::Rng& rng) {
  return "v" + std::to_string(rng.below(6));
}

inline sam::CallArg random_arg(sam::Rng& rng) {
  switch (rng.below(7)) {
    case 0: return sam::CallArg::of(sam::ArgAbstraction::null_lit());
    case 1:
      return sam::CallArg::of(sam::ArgAbstraction::int_bucket(
          sam::ArgAbstraction::IntBucket(rng.below(3))));
    case 2: {
      static const std::vector<std::string> kStrs = {"UTF8", "a b", "x,y", "100%", "plain"};
      return sam::CallArg::of(sam::ArgAbstraction::str_lit(kStrs[rng.below(kStrs.size())]));
    }
    case 3: return sam::CallArg::of(sam::ArgAbstraction::bool_lit(rng.below(2) == 0));
    case 4: return sam::CallArg::of(sam::ArgAbstraction::call_result());
    default: {
      static const std::vector<std::string> kVarTypes = {"File", "Buf", "Conn"};
      return sam::CallArg::var(kVarTypes[rng.below(kVarTypes.size())], random_var(rng));
    }
  }
}

inline sam::GuardKind random_guard_kind(sam::Rng& rng) {
  switch (rng.below(3)) {
    case 0: return sam::GuardKind::null_check();
    case 1: return sam::GuardKind::comparison_to_constant();
    default: return sam::GuardKind::state_check(random_id(rng));
  }
}

// Arbitrary valid (balanced, arity-consistent) sequence; not necessarily
// renderable as mini-language source.
inline void random_events(sam::Rng& rng, std::vector<sam::UsageEvent>& events, int depth,
                          std::size_t budget) {
  for (std::size_t i = 0; i < budget; ++i) {
    std::uint64_t roll = rng.below(10);
    if (roll < 6) {
      sam::CallEvent c;
      c.id = random_id(rng);
      if (rng.below(2) == 0) c.receiver_var = random_var(rng);
      for (std::uint32_t a = 0; a < c.id.arity; ++a) c.args.push_back(random_arg(rng));
      if (rng.below(3) == 0) c.result_var = random_var(rng);
      events.emplace_back(std::move(c));
    } else if (roll < 8 && depth < 3) {
      events.emplace_back(sam::GuardOpenEvent{random_guard_kind(rng), random_var(rng)});
      random_events(rng, events, depth + 1, rng.below(3));
      events.emplace_back(sam::GuardCloseEvent{});
    } else if (depth < 3) {
      sam::TryOpenEvent t;
      std::uint64_t n = rng.below(3);
      static const std::vector<std::string> kExcs = {"IOException", "SqlError", "TimeoutError"};
      for (std::uint64_t e = 0; e < n; ++e) t.caught.push_back(kExcs[rng.below(kExcs.size())]);
      events.emplace_back(std::move(t));
      random_events(rng, events, depth + 1, rng.below(3));
      events.emplace_back(sam::TryCloseEvent{});
    }
  }
}

inline sam::UsageSequence random_sequence(std::uint64_t seed, const std::string& source_id) {
  sam::Rng rng(seed);
  sam::UsageSequence seq;
  seq.source_id = source_id;
  random_events(rng, seq.events, 0, 2 + rng.below(8));
  return seq;
}

inline std::vector<sam::UsageSequence> random_corpus(std::uint64_t seed, std::size_t max_size) {
  sam::Rng rng(seed);
  std::size_t n = 1 + rng.below(max_size);
  std::vector<sam::UsageSequence> corpus;
  for (std::size_t i = 0; i < n; ++i) {
    corpus.push_back(
        random_sequence(sam::derive_seed(seed, i), "corpus_" + std::to_string(i) + "#m"));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// renderable sequences: only shapes the mini-language frontend can produce
// ---------------------------------------------------------------------------

struct RenderableGen {
  sam::Rng rng;
  std::vector<std::pair<std::string, std::string>> vars;  // name -> type
  std::vector<sam::UsageEvent> events;
  int counter = 0;

  explicit RenderableGen(std::uint64_t seed) : rng(seed) {}

  std::string fresh(const std::string& type) {
    std::string name = "v" + std::to_string(counter++);
    vars.emplace_back(name, type);
    return name;
  }

  const std::pair<std::string, std::string>* pick_var() {
    if (vars.empty()) return nullptr;
    return &vars[rng.below(vars.size())];
  }

  sam::CallArg make_arg() {
    switch (rng.below(5)) {
      case 0: return sam::CallArg::of(sam::ArgAbstraction::null_lit());
      case 1:
        return sam::CallArg::of(
            sam::ArgAbstraction::int_bucket(sam::ArgAbstraction::IntBucket(rng.below(3))));
      case 2: return sam::CallArg::of(sam::ArgAbstraction::str_lit("s" + std::to_string(rng.below(5))));
      case 3: return sam::CallArg::of(sam::ArgAbstraction::bool_lit(rng.below(2) == 0));
      default: {
        if (const auto* v = pick_var()) return sam::CallArg::var(v->second, v->first);
        return sam::CallArg::of(sam::ArgAbstraction::null_lit());
      }
    }
  }

  void make_call() {
    static const std::vector<std::string> kTypes = {"File", "Buf", "Conn", "Task"};
    static const std::vector<std::string> kMethods = {"open", "use", "close", "peek"};
    sam::CallEvent c;
    bool ctor = rng.below(3) == 0;
    if (ctor) {
      c.id.receiver_type = kTypes[rng.below(kTypes.size())];
      c.id.method_name = "<init>";
    } else {
      const auto* v = pick_var();
      if (!v) {
        ctor = true;
        c.id.receiver_type = kTypes[rng.below(kTypes.size())];
        c.id.method_name = "<init>";
      } else {
        c.id.receiver_type = v->second;
        c.id.method_name = kMethods[rng.below(kMethods.size())];
        c.receiver_var = v->first;
      }
    }
    std::uint32_t arity = std::uint32_t(rng.below(3));
    c.id.arity = arity;
    for (std::uint32_t a = 0; a < arity; ++a) c.args.push_back(make_arg());
    if (ctor || rng.below(3) == 0) {
      c.result_var = fresh(ctor ? c.id.receiver_type : "int");
    }
    events.emplace_back(std::move(c));
  }

  void make_block(int depth, std::size_t budget) {
    for (std::size_t i = 0; i < budget; ++i) {
      std::uint64_t roll = rng.below(10);
      if (roll < 5 || depth >= 2) {
        make_call();
      } else if (roll < 7) {
        // guard over a known variable
        const auto* v = pick_var();
        if (!v) {
          make_call();
          continue;
        }
        sam::GuardKind kind;
        if (rng.below(3) == 0) {
          // state-check guards come fused with their establishing call
          sam::ApiMethodId check{v->second, "ready", 0};
          sam::CallEvent c;
          c.id = check;
          c.receiver_var = v->first;
          events.emplace_back(std::move(c));
          kind = sam::GuardKind::state_check(check);
        } else {
          kind = rng.below(2) == 0 ? sam::GuardKind::null_check()
                                   : sam::GuardKind::comparison_to_constant();
        }
        events.emplace_back(sam::GuardOpenEvent{kind, v->first});
        make_block(depth + 1, rng.below(3));
        events.emplace_back(sam::GuardCloseEvent{});
      } else {
        static const std::vector<std::string> kExcs = {"IOException", "SqlError"};
        sam::TryOpenEvent t;
        std::size_t n = 1 + rng.below(2);
        for (std::size_t e = 0; e < n; ++e) t.caught.push_back(kExcs[rng.below(kExcs.size())]);
        // distinct types only; catch clauses repeat otherwise, which is fine too
        events.emplace_back(std::move(t));
        make_block(depth + 1, rng.below(3));
        events.emplace_back(sam::TryCloseEvent{});
      }
    }
  }
};

inline sam::UsageSequence random_renderable(std::uint64_t seed, const std::string& source_id) {
  RenderableGen gen(seed);
  gen.make_block(0, 2 + gen.rng.below(6));
  sam::UsageSequence seq;
  seq.source_id = source_id;
  seq.events = std::move(gen.events);
  return seq;
}

// ---------------------------------------------------------------------------
// random model bundles (for persistence round-trips)
// ---------------------------------------------------------------------------

inline sam::ModelBundle random_bundle(std::uint64_t seed) {
  sam::Rng rng(seed);
  sam::ModelBundle b;
  static const std::vector<std::string> kTokens = {
      "Alpha.use/1", "Beta.<init>/0", "^", "recv", "arg0", "nullcheck", "state:Gamma.peek/0",
      "str:a%20b", "int:pos", "-", "IOException,SqlError", "var:File", "cmpconst", "ignored"};
  auto key = [&rng](std::size_t fields) {
    sam::CountTable::Key k;
    for (std::size_t i = 0; i < fields; ++i) k.push_back(kTokens[rng.below(kTokens.size())]);
    return k;
  };
  for (std::uint64_t i = 0, n = rng.below(20); i < n; ++i) b.unigram.add(key(1), 1 + rng.below(50));
  for (std::uint64_t i = 0, n = rng.below(20); i < n; ++i) b.temporal.add(key(2), 1 + rng.below(50));
  for (std::uint64_t i = 0, n = rng.below(20); i < n; ++i) b.precondition.add(key(3), 1 + rng.below(50));
  for (std::uint64_t i = 0, n = rng.below(20); i < n; ++i) b.precond_slot_totals.add(key(2), 1 + rng.below(50));
  for (std::uint64_t i = 0, n = rng.below(20); i < n; ++i) b.postcondition.add(key(2), 1 + rng.below(50));
  for (std::uint64_t i = 0, n = rng.below(20); i < n; ++i) b.argvalue.add(key(3), 1 + rng.below(50));
  for (std::uint64_t i = 0, n = rng.below(20); i < n; ++i) b.argvalue_slot_totals.add(key(2), 1 + rng.below(50));
  for (std::uint64_t i = 0, n = rng.below(20); i < n; ++i) b.exception.add(key(2), 1 + rng.below(50));
  b.trained_sequences = rng.below(1000);
  return b;
}

}  // namespace testgen

#endif
