#include "sam/bench.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "sam/frontend.hpp"
#include "sam/rng.hpp"
#include "sam/text.hpp"

namespace sam {

FactorKind category_factor(Category c) {
  switch (c) {
    case Category::TemporalOrder: return FactorKind::TemporalOrder;
    case Category::ExceptionHandling: return FactorKind::Exception;
    case Category::MissingPrecondition: return FactorKind::Precondition;
    case Category::MissingPostcondition: return FactorKind::Postcondition;
    case Category::ArgumentValue: return FactorKind::ArgumentValue;
  }
  return FactorKind::TemporalOrder;
}

std::string category_name(Category c) {
  switch (c) {
    case Category::TemporalOrder: return "temporal-order";
    case Category::ExceptionHandling: return "exception-handling";
    case Category::MissingPrecondition: return "missing-precondition";
    case Category::MissingPostcondition: return "missing-postcondition";
    case Category::ArgumentValue: return "argument-value";
  }
  return "?";
}

std::optional<Category> parse_category(const std::string& name) {
  for (int i = 0; i < kCategoryCount; ++i) {
    if (category_name(Category(i)) == name) return Category(i);
  }
  return std::nullopt;
}

std::array<std::size_t, kCategoryCount> category_quotas(std::size_t total) {
  if (total < 5) throw std::invalid_argument("benchmark needs at least 5 cases");
  std::size_t weight_sum = 0;
  for (std::size_t w : kCategoryWeights) weight_sum += w;

  std::array<std::size_t, kCategoryCount> quotas{};
  std::array<std::pair<std::size_t, int>, kCategoryCount> remainders{};
  std::size_t assigned = 0;
  for (int i = 0; i < kCategoryCount; ++i) {
    std::size_t raw = total * kCategoryWeights[i];
    quotas[i] = raw / weight_sum;
    remainders[i] = {raw % weight_sum, i};
    assigned += quotas[i];
  }
  std::stable_sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;  // category order on ties
  });
  for (std::size_t r = 0; assigned < total; ++r) {
    ++quotas[remainders[r % kCategoryCount].second];
    ++assigned;
  }
  // minimum-one rule, funded by the currently largest category
  for (int i = 0; i < kCategoryCount; ++i) {
    while (quotas[i] == 0) {
      int largest = 0;
      for (int j = 1; j < kCategoryCount; ++j) {
        if (quotas[j] > quotas[largest]) largest = j;
      }
      --quotas[largest];
      ++quotas[i];
    }
  }
  return quotas;
}

// ---------------------------------------------------------------------------
// pattern library
// ---------------------------------------------------------------------------

namespace {

ApiMethodId mid(const std::string& type, const std::string& method, std::uint32_t arity) {
  return ApiMethodId{type, method, arity};
}

CallEvent call(const ApiMethodId& id, const std::string& recv, std::vector<CallArg> args,
               const std::string& result) {
  CallEvent c;
  c.id = id;
  c.receiver_var = recv;
  c.args = std::move(args);
  c.result_var = result;
  return c;
}

UsagePattern make_pattern(const std::string& id, std::vector<UsageEvent> events) {
  return UsagePattern{id, UsageSequence{id, std::move(events)}};
}

std::vector<UsagePattern> build_patterns() {
  std::vector<UsagePattern> out;

  // file read: guarded construction, read in try, checked result, charset literal
  out.push_back(make_pattern(
      "file-read",
      {
          call(mid("File", "<init>", 1), "", {CallArg::of(ArgAbstraction::str_lit("data.txt"))},
               "file"),
          GuardOpenEvent{GuardKind::null_check(), "file"},
          call(mid("FileInputStream", "<init>", 1), "", {CallArg::var("File", "file")}, "fis"),
          GuardCloseEvent{},
          call(mid("Bytes", "<init>", 0), "", {}, "bytes"),
          call(mid("Bytes", "fill", 0), "bytes", {}, ""),
          TryOpenEvent{{"IOException"}},
          call(mid("FileInputStream", "read", 1), "fis", {CallArg::var("Bytes", "bytes")}, "r"),
          TryCloseEvent{},
          GuardOpenEvent{GuardKind::comparison_to_constant(), "r"},
          GuardCloseEvent{},
          call(mid("String", "<init>", 2), "",
               {CallArg::var("Bytes", "bytes"), CallArg::of(ArgAbstraction::str_lit("UTF8"))},
               "s"),
      }));

  // hasNext before next
  out.push_back(make_pattern(
      "iterator",
      {
          call(mid("List", "<init>", 0), "", {}, "list"),
          call(mid("List", "iterator", 0), "list", {}, "it"),
          call(mid("Iterator", "hasNext", 0), "it", {}, ""),
          GuardOpenEvent{GuardKind::state_check(mid("Iterator", "hasNext", 0)), "it"},
          call(mid("Iterator", "next", 0), "it", {}, "item"),
          GuardCloseEvent{},
          call(mid("Item", "use", 0), "item", {}, ""),
      }));

  // charset-style constructor literal plus index argument
  out.push_back(make_pattern(
      "codec",
      {
          call(mid("Codec", "<init>", 1), "", {CallArg::of(ArgAbstraction::str_lit("ascii"))},
               "codec"),
          call(mid("Message", "<init>", 0), "", {}, "msg"),
          call(mid("Codec", "encode", 2), "codec",
               {CallArg::var("Message", "msg"),
                CallArg::of(ArgAbstraction::int_bucket(ArgAbstraction::IntBucket::Pos))},
               ""),
          call(mid("Codec", "close", 0), "codec", {}, ""),
      }));

  // query in try, checked row count, paired teardown calls
  out.push_back(make_pattern(
      "database",
      {
          call(mid("Db", "<init>", 0), "", {}, "db"),
          call(mid("Db", "open", 0), "db", {}, ""),
          TryOpenEvent{{"SqlError"}},
          call(mid("Db", "query", 1), "db", {CallArg::of(ArgAbstraction::str_lit("select *"))},
               "rows"),
          TryCloseEvent{},
          call(mid("Rows", "count", 0), "rows", {}, "n"),
          GuardOpenEvent{GuardKind::comparison_to_constant(), "n"},
          GuardCloseEvent{},
          call(mid("Db", "close", 0), "db", {}, ""),
          call(mid("Db", "release", 0), "db", {}, ""),
      }));

  // null-checked task handoff
  out.push_back(make_pattern(
      "executor",
      {
          call(mid("Runner", "<init>", 0), "", {}, "run"),
          call(mid("Task", "<init>", 0), "", {}, "task"),
          GuardOpenEvent{GuardKind::null_check(), "task"},
          call(mid("Runner", "submit", 1), "run", {CallArg::var("Task", "task")}, ""),
          GuardCloseEvent{},
          call(mid("Runner", "shutdown", 0), "run", {}, ""),
      }));

  // poll result null-checked before use
  out.push_back(make_pattern(
      "queue",
      {
          call(mid("Queue", "<init>", 0), "", {}, "q"),
          call(mid("Queue", "poll", 0), "q", {}, "elem"),
          GuardOpenEvent{GuardKind::null_check(), "elem"},
          call(mid("Elem", "consume", 0), "elem", {}, ""),
          GuardCloseEvent{},
      }));

  // separate try scopes around write and flush
  out.push_back(make_pattern(
      "writer",
      {
          call(mid("Writer", "<init>", 1), "", {CallArg::of(ArgAbstraction::str_lit("out.log"))},
               "w"),
          TryOpenEvent{{"IOError"}},
          call(mid("Writer", "write", 1), "w",
               {CallArg::of(ArgAbstraction::int_bucket(ArgAbstraction::IntBucket::Pos))}, ""),
          TryCloseEvent{},
          TryOpenEvent{{"IOError"}},
          call(mid("Writer", "flush", 0), "w", {}, ""),
          TryCloseEvent{},
          call(mid("Writer", "close", 0), "w", {}, ""),
      }));

  // find before group
  out.push_back(make_pattern(
      "matcher",
      {
          call(mid("Input", "<init>", 0), "", {}, "in"),
          call(mid("Regex", "<init>", 1), "", {CallArg::of(ArgAbstraction::str_lit("[a-z]+"))},
               "re"),
          call(mid("Regex", "matcher", 1), "re", {CallArg::var("Input", "in")}, "m"),
          call(mid("Matcher", "find", 0), "m", {}, ""),
          GuardOpenEvent{GuardKind::state_check(mid("Matcher", "find", 0)), "m"},
          call(mid("Matcher", "group", 0), "m", {}, "g"),
          GuardCloseEvent{},
          call(mid("Text", "emit", 0), "g", {}, ""),
      }));

  return out;
}

const std::vector<ApiMethodId>& noise_calls() {
  static const std::vector<ApiMethodId> kNoise = {mid("Probe", "<init>", 0),
                                                  mid("Trace", "<init>", 0)};
  return kNoise;
}

}  // namespace

const std::vector<UsagePattern>& pattern_library() {
  static const std::vector<UsagePattern> kPatterns = build_patterns();
  return kPatterns;
}

// ---------------------------------------------------------------------------
// instantiation
// ---------------------------------------------------------------------------

UsageSequence instantiate(const UsagePattern& pattern, std::uint64_t seed,
                          const std::string& source_id, bool with_noise) {
  Rng rng(seed);
  std::string suffix;
  suffix.push_back(char('a' + rng.below(26)));
  suffix.push_back(char('a' + rng.below(26)));

  auto rename = [&suffix](const std::string& name) {
    return name.empty() ? name : name + "_" + suffix;
  };

  UsageSequence seq;
  seq.source_id = source_id;

  if (with_noise) {
    // 0-2 leading noise calls; a two-call prefix always mixes both noise ids
    std::uint64_t roll = rng.below(10);
    std::vector<ApiMethodId> prefix;
    if (roll >= 4 && roll <= 6) {
      prefix.push_back(noise_calls()[rng.below(2)]);
    } else if (roll >= 7) {
      bool first = rng.below(2) == 0;
      prefix.push_back(noise_calls()[first ? 0 : 1]);
      prefix.push_back(noise_calls()[first ? 1 : 0]);
    }
    for (const ApiMethodId& id : prefix) seq.events.emplace_back(call(id, "", {}, ""));
  }

  for (const UsageEvent& e : pattern.events.events) {
    if (const CallEvent* c = as_call(e)) {
      CallEvent copy = *c;
      copy.receiver_var = rename(copy.receiver_var);
      copy.result_var = rename(copy.result_var);
      for (CallArg& a : copy.args) a.var_name = rename(a.var_name);
      seq.events.emplace_back(std::move(copy));
    } else if (const auto* g = std::get_if<GuardOpenEvent>(&e)) {
      seq.events.emplace_back(GuardOpenEvent{g->kind, rename(g->subject)});
    } else {
      seq.events.push_back(e);
    }
  }
  return seq;
}

std::vector<UsageSequence> gen_corpus(const std::vector<UsagePattern>& patterns, std::size_t n,
                                      std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("corpus size must be >= 1");
  if (patterns.empty()) throw std::invalid_argument("pattern list is empty");
  std::vector<UsageSequence> corpus;
  corpus.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const UsagePattern& p = patterns[i % patterns.size()];
    std::ostringstream sid;
    sid << "corpus_" << i << "#m";
    corpus.push_back(instantiate(p, derive_seed(seed, i), sid.str(), true));
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// mutation sites
// ---------------------------------------------------------------------------

namespace {

std::size_t matching_close(const UsageSequence& seq, std::size_t open) {
  int depth = 0;
  for (std::size_t j = open; j < seq.events.size(); ++j) {
    const UsageEvent& e = seq.events[j];
    if (std::holds_alternative<GuardOpenEvent>(e) || std::holds_alternative<TryOpenEvent>(e)) {
      ++depth;
    } else if (std::holds_alternative<GuardCloseEvent>(e) ||
               std::holds_alternative<TryCloseEvent>(e)) {
      --depth;
      if (depth == 0) return j;
    }
  }
  return seq.events.size();
}

struct MutationSite {
  std::size_t call_index = 0;  // anchor call in the clean sequence
  std::size_t open_index = 0;  // scope brackets (precondition/postcondition/exception)
  std::size_t close_index = 0;
  Slot slot;                   // precondition / argvalue
  std::uint32_t arg_slot = 0;  // argvalue
  bool fused = false;          // temporal: call establishes a state-check guard
};

std::optional<std::size_t> next_call_index(const UsageSequence& seq, std::size_t after) {
  for (std::size_t j = after + 1; j < seq.events.size(); ++j) {
    if (as_call(seq.events[j])) return j;
  }
  return std::nullopt;
}

std::vector<MutationSite> mutation_sites(const UsageSequence& seq, Category category) {
  std::vector<MutationSite> sites;
  const auto& ev = seq.events;

  switch (category) {
    case Category::TemporalOrder: {
      for (std::size_t i = 0; i < ev.size(); ++i) {
        const CallEvent* c = as_call(ev[i]);
        if (!c || !next_call_index(seq, i)) continue;
        MutationSite s;
        s.call_index = i;
        if (i + 1 < ev.size()) {
          const auto* g = std::get_if<GuardOpenEvent>(&ev[i + 1]);
          s.fused = g && g->kind.kind == GuardKind::Kind::StateCheckCall &&
                    g->kind.check_call == c->id && g->subject == c->receiver_var;
        }
        sites.push_back(s);
      }
      break;
    }
    case Category::ExceptionHandling: {
      for (std::size_t i = 0; i < ev.size(); ++i) {
        const auto* t = std::get_if<TryOpenEvent>(&ev[i]);
        if (!t || t->caught.size() != 1) continue;
        std::size_t close = matching_close(seq, i);
        if (close >= ev.size()) continue;
        // exactly one call inside
        std::size_t call = 0, calls = 0;
        for (std::size_t j = i + 1; j < close; ++j) {
          if (as_call(ev[j])) {
            call = j;
            ++calls;
          }
        }
        if (calls != 1) continue;
        sites.push_back(MutationSite{call, i, close, Slot{}, 0, false});
      }
      break;
    }
    case Category::MissingPrecondition: {
      for (std::size_t i = 0; i < ev.size(); ++i) {
        const auto* g = std::get_if<GuardOpenEvent>(&ev[i]);
        if (!g) continue;
        std::size_t close = matching_close(seq, i);
        if (close >= ev.size()) continue;
        // first call inside whose receiver or argument is the guarded variable
        for (std::size_t j = i + 1; j < close; ++j) {
          const CallEvent* c = as_call(ev[j]);
          if (!c) continue;
          std::optional<Slot> slot;
          if (c->receiver_var == g->subject) {
            slot = Slot::receiver();
          } else {
            for (std::size_t a = 0; a < c->args.size(); ++a) {
              if (c->args[a].var_name == g->subject) {
                slot = Slot::arg(std::uint32_t(a));
                break;
              }
            }
          }
          if (slot) {
            sites.push_back(MutationSite{j, i, close, *slot, 0, false});
            break;
          }
        }
      }
      break;
    }
    case Category::MissingPostcondition: {
      for (std::size_t i = 0; i < ev.size(); ++i) {
        const CallEvent* c = as_call(ev[i]);
        if (!c || c->result_var.empty()) continue;
        for (std::size_t j = i + 1; j <= i + 2 && j < ev.size(); ++j) {
          const auto* g = std::get_if<GuardOpenEvent>(&ev[j]);
          if (!g || g->subject != c->result_var) continue;
          if (g->kind.kind != GuardKind::Kind::NullCheck &&
              g->kind.kind != GuardKind::Kind::ComparisonToConstant) {
            continue;
          }
          // empty check scope only; a populated scope is a precondition site
          if (j + 1 >= ev.size() || !std::holds_alternative<GuardCloseEvent>(ev[j + 1])) continue;
          sites.push_back(MutationSite{i, j, j + 1, Slot{}, 0, false});
          break;
        }
      }
      break;
    }
    case Category::ArgumentValue: {
      for (std::size_t i = 0; i < ev.size(); ++i) {
        const CallEvent* c = as_call(ev[i]);
        if (!c) continue;
        for (std::size_t a = 0; a < c->args.size(); ++a) {
          auto kind = c->args[a].abstraction.kind;
          if (kind == ArgAbstraction::Kind::Str || kind == ArgAbstraction::Kind::Int) {
            sites.push_back(MutationSite{i, 0, 0, Slot::arg(std::uint32_t(a)),
                                         std::uint32_t(a), false});
          }
        }
      }
      break;
    }
  }
  return sites;
}

// ---------------------------------------------------------------------------
// mutation application
// ---------------------------------------------------------------------------

struct Mutation {
  UsageSequence faulty;
  EditScript ground_truth;
  std::size_t flag_index = 0;
  bool needs_bundle_truth = false;  // temporal: ground truth found among generated actions
  ApiMethodId removed_id;           // temporal
  bool fused = false;
};

void erase_events(UsageSequence& seq, std::vector<std::size_t> indices) {
  std::sort(indices.begin(), indices.end());
  for (auto it = indices.rbegin(); it != indices.rend(); ++it) {
    seq.events.erase(seq.events.begin() + *it);
  }
}

std::optional<Mutation> build_mutation(const UsageSequence& clean, Category category,
                                       const MutationSite& site, std::uint64_t seed) {
  Mutation m;
  m.faulty = clean;

  switch (category) {
    case Category::TemporalOrder: {
      const CallEvent removed = *as_call(clean.events[site.call_index]);
      std::vector<std::size_t> doomed = {site.call_index};
      if (site.fused) {
        std::size_t open = site.call_index + 1;
        std::size_t close = matching_close(clean, open);
        if (close >= clean.events.size()) return std::nullopt;
        doomed.push_back(open);
        doomed.push_back(close);
      }
      auto next = next_call_index(clean, site.call_index);
      if (!next) return std::nullopt;
      std::size_t shift = 0;
      for (std::size_t d : doomed) {
        if (d < *next) ++shift;
      }
      erase_events(m.faulty, doomed);
      m.flag_index = *next - shift;
      m.removed_id = removed.id;
      m.fused = site.fused;
      m.needs_bundle_truth = true;
      break;
    }
    case Category::ExceptionHandling: {
      const auto& t = std::get<TryOpenEvent>(clean.events[site.open_index]);
      RepairAction gt;
      gt.kind = RepairAction::Kind::WrapTryCatch;
      gt.target = site.call_index - 1;  // the open bracket before the call goes away
      gt.exception_type = t.caught[0];
      erase_events(m.faulty, {site.open_index, site.close_index});
      m.flag_index = gt.target;
      m.ground_truth = {gt};
      break;
    }
    case Category::MissingPrecondition: {
      const auto& g = std::get<GuardOpenEvent>(clean.events[site.open_index]);
      RepairAction gt;
      gt.kind = RepairAction::Kind::InsertGuard;
      gt.target = site.call_index - 1;
      gt.slot = site.slot;
      gt.guard = g.kind;
      erase_events(m.faulty, {site.open_index, site.close_index});
      m.flag_index = gt.target;
      m.ground_truth = {gt};
      break;
    }
    case Category::MissingPostcondition: {
      const auto& g = std::get<GuardOpenEvent>(clean.events[site.open_index]);
      RepairAction gt;
      gt.kind = RepairAction::Kind::InsertPostCheck;
      gt.target = site.call_index;  // brackets sit after the call
      gt.post_check = g.kind.kind == GuardKind::Kind::NullCheck
                          ? PostCheckKind::NullChecked
                          : PostCheckKind::ComparedToConstant;
      erase_events(m.faulty, {site.open_index, site.close_index});
      m.flag_index = site.call_index;
      m.ground_truth = {gt};
      break;
    }
    case Category::ArgumentValue: {
      CallEvent& c = std::get<CallEvent>(m.faulty.events[site.call_index]);
      const CallArg original = c.args[site.arg_slot];
      if (original.abstraction.kind == ArgAbstraction::Kind::Str) {
        std::ostringstream bogus;
        bogus << "__bad_" << std::hex << (seed & 0xFFFF);
        c.args[site.arg_slot] = CallArg::of(ArgAbstraction::str_lit(bogus.str()));
      } else {
        auto bucket = original.abstraction.bucket == ArgAbstraction::IntBucket::Neg
                          ? ArgAbstraction::IntBucket::Pos
                          : ArgAbstraction::IntBucket::Neg;
        c.args[site.arg_slot] = CallArg::of(ArgAbstraction::int_bucket(bucket));
      }
      RepairAction gt;
      gt.kind = RepairAction::Kind::ReplaceArg;
      gt.target = site.call_index;
      gt.slot = Slot::arg(site.arg_slot);
      gt.new_arg = original;
      m.flag_index = site.call_index;
      m.ground_truth = {gt};
      break;
    }
  }
  return m;
}

bool render_stable(const UsageSequence& seq) {
  ParseResult parsed = parse(render(seq), "check");
  if (!parsed.unit) return false;
  try {
    std::vector<UsageSequence> lowered = lower(*parsed.unit);
    return lowered.size() == 1 && lowered[0].events == seq.events;
  } catch (const LowerError&) {
    return false;
  }
}

UsageSequence apply_script(const UsageSequence& seq, const EditScript& script) {
  UsageSequence out = seq;
  for (const RepairAction& a : script) out = apply(out, a);
  return out;
}

}  // namespace

std::optional<MisuseCase> inject(std::uint64_t case_seed, const UsageSequence& clean,
                                 Category category, const ModelBundle& bundle,
                                 const Thresholds& thresholds, std::size_t k,
                                 std::uint64_t& rejected) {
  std::vector<MutationSite> sites = mutation_sites(clean, category);
  if (sites.empty()) throw NotEligible(category);

  Rng rng(derive_seed(case_seed, 0x51735));
  std::size_t offset = rng.below(sites.size());

  for (std::size_t s = 0; s < sites.size(); ++s) {
    const MutationSite& site = sites[(s + offset) % sites.size()];
    std::optional<Mutation> mut = build_mutation(clean, category, site, case_seed);
    if (!mut) {
      ++rejected;
      continue;
    }

    MisuseCase out;
    out.category = category;
    out.clean = clean;
    out.faulty = mut->faulty;
    out.flag_index = mut->flag_index;
    out.case_seed = case_seed;

    std::vector<Finding> faulty_findings = detect(bundle, out.faulty, thresholds);
    bool flagged = false;
    for (const Finding& f : faulty_findings) {
      if (f.call_index == out.flag_index && f.factor == category_factor(category)) {
        flagged = true;
        break;
      }
    }
    if (!flagged) {
      ++rejected;
      continue;
    }

    if (mut->needs_bundle_truth) {
      // ground truth is the engine's own insertion for the removed call
      std::optional<RepairAction> gt;
      for (const RepairAction& a :
           generate_repair_actions(bundle, out.faulty, faulty_findings, k)) {
        if (a.target != out.flag_index) continue;
        if (mut->fused && a.kind == RepairAction::Kind::InsertGuard &&
            a.guard == GuardKind::state_check(mut->removed_id)) {
          gt = a;
          break;
        }
        if (!mut->fused && a.kind == RepairAction::Kind::InsertCallBefore &&
            a.new_call.id == mut->removed_id) {
          gt = a;
          break;
        }
      }
      if (!gt) {
        ++rejected;
        continue;
      }
      out.ground_truth = {*gt};
    } else {
      out.ground_truth = mut->ground_truth;
    }

    bool valid = detect(bundle, clean, thresholds).empty() &&
                 detect(bundle, apply_script(out.faulty, out.ground_truth), thresholds).empty() &&
                 render_stable(clean) && render_stable(out.faulty);
    if (!valid) {
      ++rejected;
      continue;
    }
    return out;
  }
  return std::nullopt;
}

Benchmark make_benchmark(const std::vector<UsagePattern>& patterns, std::size_t total,
                         std::uint64_t seed, const ModelBundle& bundle,
                         const Thresholds& thresholds, std::size_t k) {
  std::array<std::size_t, kCategoryCount> quotas = category_quotas(total);
  Benchmark bench;
  std::size_t case_index = 0;

  for (int cat = 0; cat < kCategoryCount; ++cat) {
    for (std::size_t q = 0; q < quotas[cat]; ++q, ++case_index) {
      std::uint64_t case_seed = derive_seed(seed, case_index);
      bool done = false;
      constexpr std::size_t kMaxAttempts = 64;
      for (std::size_t attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
        std::uint64_t attempt_seed = derive_seed(case_seed, attempt + 1);
        Rng rng(attempt_seed);
        std::size_t pat_offset = rng.below(patterns.size());
        for (std::size_t p = 0; p < patterns.size() && !done; ++p) {
          const UsagePattern& pattern = patterns[(p + pat_offset) % patterns.size()];
          std::ostringstream sid;
          sid << "case_" << case_index << "#m";
          UsageSequence clean =
              instantiate(pattern, derive_seed(attempt_seed, p), sid.str(), true);
          try {
            std::optional<MisuseCase> c = inject(derive_seed(attempt_seed, 0xC0DE + p), clean,
                                                 Category(cat), bundle, thresholds, k,
                                                 bench.rejected);
            if (c) {
              c->pattern_id = pattern.id;
              bench.cases.push_back(std::move(*c));
              done = true;
            }
          } catch (const NotEligible&) {
            // pattern has no site for this category; try the next one
          }
        }
      }
      if (!done) {
        throw std::runtime_error("could not generate a valid case for category " +
                                 category_name(Category(cat)));
      }
    }
  }
  return bench;
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

namespace {

std::string rate_text(std::size_t num, std::size_t den) {
  if (den == 0) return "n/a";
  return format_decimal6(cpp_int(num), cpp_int(den));
}

}  // namespace

std::string EvalMetrics::recall_text() const { return rate_text(detected, cases); }

std::string EvalMetrics::precision_text() const {
  return rate_text(detected, detected + clean_findings);
}

std::string EvalMetrics::repair1_text() const { return rate_text(repair1, cases); }

std::string EvalMetrics::repairk_text() const { return rate_text(repairk, cases); }

EvalMetrics evaluate(const ModelBundle& bundle, const std::vector<MisuseCase>& cases,
                     const Thresholds& thresholds, std::size_t max_length, std::size_t k,
                     std::size_t jobs) {
  EvalMetrics metrics;
  metrics.cases = cases.size();
  metrics.k = k;

  struct CaseResult {
    bool detected = false;
    std::size_t clean_findings = 0;
    bool repair1 = false;
    bool repairk = false;
    std::exception_ptr error;
  };
  std::vector<CaseResult> results(cases.size());

  auto run_case = [&](std::size_t i) {
    const MisuseCase& c = cases[i];
    CaseResult& r = results[i];
    try {
      r.clean_findings = detect(bundle, c.clean, thresholds).size();
      for (const Finding& f : detect(bundle, c.faulty, thresholds)) {
        if (f.call_index == c.flag_index && f.factor == category_factor(c.category)) {
          r.detected = true;
          break;
        }
      }
      const std::string target = write_ir(apply_script(c.faulty, c.ground_truth));
      RepairResult repair = correct(bundle, c.faulty, thresholds, max_length, k);
      for (std::size_t j = 0; j < repair.candidates.size() && j < k; ++j) {
        if (write_ir(repair.candidates[j].repaired) == target) {
          r.repairk = true;
          if (j == 0) r.repair1 = true;
          break;
        }
      }
    } catch (...) {
      r.error = std::current_exception();
    }
  };

  if (jobs <= 1 || cases.size() <= 1) {
    for (std::size_t i = 0; i < cases.size(); ++i) run_case(i);
  } else {
    std::size_t n_threads = std::min(jobs, cases.size());
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
      threads.emplace_back([&, t]() {
        for (std::size_t i = t; i < cases.size(); i += n_threads) run_case(i);
      });
    }
    for (std::thread& th : threads) th.join();
  }
  for (const CaseResult& r : results) {
    if (r.error) std::rethrow_exception(r.error);
  }

  for (std::size_t i = 0; i < cases.size(); ++i) {
    const CaseResult& r = results[i];
    CategoryMetrics& cm = metrics.per_category[std::size_t(cases[i].category)];
    ++cm.cases;
    metrics.clean_findings += r.clean_findings;
    if (r.detected) {
      ++metrics.detected;
      ++cm.detected;
    }
    if (r.repair1) {
      ++metrics.repair1;
      ++cm.repair1;
    }
    if (r.repairk) {
      ++metrics.repairk;
      ++cm.repairk;
    }
  }
  return metrics;
}

std::string EvalMetrics::render_text() const {
  std::ostringstream out;
  auto row = [&out](const std::string& label, const std::string& value) {
    out << label;
    for (std::size_t i = label.size(); i < 22; ++i) out << ' ';
    out << value << "\n";
  };
  row("cases", std::to_string(cases));
  row("detected", std::to_string(detected));
  row("detection recall", recall_text());
  row("clean findings", std::to_string(clean_findings));
  row("detection precision", precision_text());
  row("repair@1", std::to_string(repair1));
  row("repair@1 rate", repair1_text());
  row("repair@" + std::to_string(k), std::to_string(repairk));
  row("repair@" + std::to_string(k) + " rate", repairk_text());
  out << "\n";
  out << "category                 cases  detected  repair@1  repair@" << k << "\n";
  for (int i = 0; i < kCategoryCount; ++i) {
    const CategoryMetrics& cm = per_category[i];
    std::string name = category_name(Category(i));
    out << name;
    for (std::size_t s = name.size(); s < 22; ++s) out << ' ';
    auto cell = [&out](std::size_t v, int width) {
      std::string s = std::to_string(v);
      for (int w = int(s.size()); w < width; ++w) out << ' ';
      out << s;
    };
    cell(cm.cases, 8);
    cell(cm.detected, 10);
    cell(cm.repair1, 10);
    cell(cm.repairk, 10);
    out << "\n";
  }
  return out.str();
}

std::string EvalMetrics::render_json() const {
  std::ostringstream out;
  out << "{";
  out << "\"cases\":" << cases << ",";
  out << "\"detected\":" << detected << ",";
  out << "\"recall\":\"" << recall_text() << "\",";
  out << "\"clean_findings\":" << clean_findings << ",";
  out << "\"precision\":\"" << precision_text() << "\",";
  out << "\"repair_at_1\":" << repair1 << ",";
  out << "\"repair_at_1_rate\":\"" << repair1_text() << "\",";
  out << "\"repair_at_k\":" << repairk << ",";
  out << "\"repair_at_k_rate\":\"" << repairk_text() << "\",";
  out << "\"k\":" << k << ",";
  out << "\"per_category\":{";
  for (int i = 0; i < kCategoryCount; ++i) {
    const CategoryMetrics& cm = per_category[i];
    if (i) out << ",";
    out << "\"" << category_name(Category(i)) << "\":{\"cases\":" << cm.cases
        << ",\"detected\":" << cm.detected << ",\"repair_at_1\":" << cm.repair1
        << ",\"repair_at_k\":" << cm.repairk << "}";
  }
  out << "}}";
  return out.str();
}

}  // namespace sam
