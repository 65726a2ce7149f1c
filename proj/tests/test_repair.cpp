#include <set>

#include "doctest.h"

#include "gen_random.hpp"
#include "oracles.hpp"
#include "sam/bench.hpp"
#include "sam/repair.hpp"

using namespace sam;

namespace {

CallEvent cv(const std::string& type, const std::string& method, std::vector<CallArg> args = {},
             const std::string& recv = "", const std::string& result = "") {
  CallEvent c;
  c.id = ApiMethodId{type, method, std::uint32_t(args.size())};
  c.receiver_var = recv;
  c.args = std::move(args);
  c.result_var = result;
  return c;
}

const Thresholds kTheta = Thresholds::from_decimal("0.1");

std::vector<UsageSequence> read_try_corpus(int n = 15) {
  std::vector<UsageSequence> corpus;
  for (int i = 0; i < n; ++i) {
    corpus.push_back(UsageSequence{"s" + std::to_string(i) + "#m",
                                   {cv("S", "open", {}, "s"), TryOpenEvent{{"IOException"}},
                                    cv("S", "read", {}, "s"), TryCloseEvent{}}});
  }
  return corpus;
}

std::string serialize_result(const RepairResult& r) {
  std::string out = "explored=" + std::to_string(r.explored) + "\n";
  for (const RepairCandidate& c : r.candidates) {
    out += encode_script(c.edits) + "\n" + write_ir(c.repaired) + "--\n";
  }
  return out;
}

}  // namespace

TEST_CASE("generate: the dominant exception pattern becomes a wrap action") {
  ModelBundle b = train(read_try_corpus());
  UsageSequence faulty{"q#m", {cv("S", "open", {}, "s"), cv("S", "read", {}, "s")}};
  auto findings = detect(b, faulty, kTheta);
  REQUIRE(!findings.empty());
  auto actions = generate_repair_actions(b, faulty, findings, 3);
  bool has_wrap = false;
  for (const RepairAction& a : actions) {
    has_wrap |= a.kind == RepairAction::Kind::WrapTryCatch && a.exception_type == "IOException" &&
                a.target == 1;
  }
  CHECK(has_wrap);
}

TEST_CASE("generate: the dominant guard becomes an insert-guard action") {
  std::vector<UsageSequence> corpus;
  for (int i = 0; i < 12; ++i) {
    corpus.push_back(UsageSequence{"s" + std::to_string(i) + "#m",
                                   {GuardOpenEvent{GuardKind::null_check(), "f"},
                                    cv("FileInputStream", "<init>", {CallArg::var("File", "f")}),
                                    GuardCloseEvent{}}});
  }
  ModelBundle b = train(corpus);
  UsageSequence faulty{"q#m",
                       {cv("FileInputStream", "<init>", {CallArg::var("File", "f")})}};
  auto findings = detect(b, faulty, kTheta);
  REQUIRE(!findings.empty());
  auto actions = generate_repair_actions(b, faulty, findings, 3);
  bool has_guard = false;
  for (const RepairAction& a : actions) {
    has_guard |= a.kind == RepairAction::Kind::InsertGuard && a.slot == Slot::arg(0) &&
                 a.guard == GuardKind::null_check();
  }
  CHECK(has_guard);
}

TEST_CASE("generate: k=1 temporal finding yields exactly insert-predecessor plus delete") {
  std::vector<UsageSequence> corpus;
  for (int i = 0; i < 12; ++i) {
    corpus.push_back(
        UsageSequence{"s" + std::to_string(i) + "#m", {cv("X", "a"), cv("X", "b")}});
  }
  ModelBundle b = train(corpus);
  UsageSequence faulty{"q#m", {cv("X", "c"), cv("X", "b")}};
  auto findings = detect(b, faulty, kTheta);
  REQUIRE(findings.size() == 1);
  CHECK(findings[0].factor == FactorKind::TemporalOrder);
  auto actions = generate_repair_actions(b, faulty, findings, 1);
  REQUIRE(actions.size() == 2);
  CHECK(actions[0].kind == RepairAction::Kind::InsertCallBefore);
  CHECK(actions[0].new_call.id.encode() == "X.a/0");
  CHECK(actions[1].kind == RepairAction::Kind::DeleteCall);
  CHECK(actions[1].target == 1);

  CHECK_THROWS_AS(generate_repair_actions(b, faulty, {}, 3), EmptyFindings);
}

TEST_CASE("apply: wrap-try-catch brackets exactly the target call") {
  UsageSequence seq{"q#m", {cv("A", "a"), cv("S", "read", {}, "s"), cv("B", "b")}};
  RepairAction wrap;
  wrap.kind = RepairAction::Kind::WrapTryCatch;
  wrap.target = 1;
  wrap.exception_type = "IOException";
  UsageSequence out = apply(seq, wrap);
  REQUIRE(out.events.size() == 5);
  CHECK(std::holds_alternative<TryOpenEvent>(out.events[1]));
  CHECK(as_call(out.events[2]));
  CHECK(std::holds_alternative<TryCloseEvent>(out.events[3]));
  CHECK(!validate(out));
  // scope attribution, via the independent oracle
  CHECK(oracle::handled_exceptions(out, 2) == std::vector<std::string>{"IOException"});
  CHECK(context_of(out, 2).handled_exceptions == std::vector<std::string>{"IOException"});
  // purity
  CHECK(seq.events.size() == 3);
}

TEST_CASE("apply: delete-call on a single-call sequence leaves a valid empty one") {
  UsageSequence seq{"q#m", {cv("A", "a")}};
  RepairAction del;
  del.kind = RepairAction::Kind::DeleteCall;
  del.target = 0;
  UsageSequence out = apply(seq, del);
  CHECK(out.events.empty());
  CHECK(!validate(out));
}

TEST_CASE("apply: deleting a state-check call unwraps its orphaned guard") {
  ApiMethodId has_next{"Iterator", "hasNext", 0};
  UsageSequence seq{"q#m",
                    {cv("Iterator", "hasNext", {}, "it"),
                     GuardOpenEvent{GuardKind::state_check(has_next), "it"},
                     cv("Iterator", "next", {}, "it", "x"), GuardCloseEvent{}}};
  RepairAction del;
  del.kind = RepairAction::Kind::DeleteCall;
  del.target = 0;
  UsageSequence out = apply(seq, del);
  REQUIRE(out.events.size() == 1);
  CHECK(as_call(out.events[0])->id.encode() == "Iterator.next/0");
}

TEST_CASE("apply: insert-guard fuses the establishing call for state checks") {
  ApiMethodId has_next{"Iterator", "hasNext", 0};
  UsageSequence bare{"q#m", {cv("Iterator", "next", {}, "it", "x")}};
  RepairAction ins;
  ins.kind = RepairAction::Kind::InsertGuard;
  ins.target = 0;
  ins.slot = Slot::receiver();
  ins.guard = GuardKind::state_check(has_next);
  UsageSequence out = apply(bare, ins);
  REQUIRE(out.events.size() == 4);
  CHECK(as_call(out.events[0])->id == has_next);
  CHECK(std::holds_alternative<GuardOpenEvent>(out.events[1]));
  CHECK(std::holds_alternative<GuardCloseEvent>(out.events[3]));

  // no duplicate when the call is already in place
  UsageSequence primed{"q#m",
                       {cv("Iterator", "hasNext", {}, "it"), cv("Iterator", "next", {}, "it", "x")}};
  ins.target = 1;
  UsageSequence out2 = apply(primed, ins);
  REQUIRE(out2.events.size() == 4);
  CHECK(as_call(out2.events[0])->id == has_next);
  CHECK(std::holds_alternative<GuardOpenEvent>(out2.events[1]));
}

TEST_CASE("apply: insert-post-check adds an empty scope right after the call") {
  UsageSequence seq{"q#m", {cv("S", "read", {}, "s", "r"), cv("B", "b")}};
  RepairAction ins;
  ins.kind = RepairAction::Kind::InsertPostCheck;
  ins.target = 0;
  ins.post_check = PostCheckKind::ComparedToConstant;
  UsageSequence out = apply(seq, ins);
  REQUIRE(out.events.size() == 4);
  CHECK(context_of(out, 0).post_check == PostCheckKind::ComparedToConstant);

  UsageSequence no_result{"q#m", {cv("S", "read", {}, "s")}};
  CHECK_THROWS_AS(apply(no_result, ins), InvalidTarget);
}

TEST_CASE("apply: replace-arg swaps exactly one slot") {
  UsageSequence seq{"q#m",
                    {cv("String", "<init>",
                        {CallArg::var("Bytes", "b"), CallArg::of(ArgAbstraction::str_lit("bad"))})}};
  RepairAction rep;
  rep.kind = RepairAction::Kind::ReplaceArg;
  rep.target = 0;
  rep.slot = Slot::arg(1);
  rep.new_arg = CallArg::of(ArgAbstraction::str_lit("UTF8"));
  UsageSequence out = apply(seq, rep);
  CHECK(as_call(out.events[0])->args[1].abstraction == ArgAbstraction::str_lit("UTF8"));
  CHECK(as_call(out.events[0])->args[0] == CallArg::var("Bytes", "b"));
  CHECK(as_call(seq.events[0])->args[1].abstraction == ArgAbstraction::str_lit("bad"));

  rep.slot = Slot::arg(5);
  CHECK_THROWS_AS(apply(seq, rep), InvalidTarget);
  rep.slot = Slot::arg(1);
  rep.target = 3;
  CHECK_THROWS_AS(apply(seq, rep), InvalidTarget);
}

TEST_CASE("generated actions always produce valid sequences") {
  for (std::uint64_t round = 0; round < 40; ++round) {
    auto corpus = testgen::random_corpus(round * 67 + 19, 10);
    ModelBundle b = train(corpus);
    UsageSequence probe = testgen::random_sequence(round * 7 + 1, "probe#m");
    auto findings = detect(b, probe, Thresholds::from_decimal("0.5"));
    if (findings.empty()) continue;
    for (const RepairAction& a : generate_repair_actions(b, probe, findings, 3)) {
      UsageSequence out = apply(probe, a);
      CHECK(!validate(out));
      CHECK(RepairAction::parse(a.encode()) == a);  // action text round-trips
    }
  }
}

TEST_CASE("correct: clean input returns the sole zero-edit candidate") {
  ModelBundle b = train(read_try_corpus());
  UsageSequence clean{"q#m",
                      {cv("S", "open", {}, "s"), TryOpenEvent{{"IOException"}},
                       cv("S", "read", {}, "s"), TryCloseEvent{}}};
  RepairResult r = correct(b, clean, kTheta, 3, 3);
  REQUIRE(r.candidates.size() == 1);
  CHECK(r.candidates[0].edits.empty());
  CHECK(r.candidates[0].repaired == clean);
  CHECK(r.explored == 1);
}

TEST_CASE("correct: a missing catch is repaired by the trained wrap at depth one") {
  ModelBundle b = train(read_try_corpus());
  UsageSequence faulty{"q#m", {cv("S", "open", {}, "s"), cv("S", "read", {}, "s")}};
  RepairResult r = correct(b, faulty, kTheta, 1, 3);
  REQUIRE(!r.candidates.empty());
  const RepairCandidate& top = r.candidates[0];
  REQUIRE(top.edits.size() == 1);
  CHECK(top.edits[0].kind == RepairAction::Kind::WrapTryCatch);
  CHECK(top.edits[0].exception_type == "IOException");
  CHECK(detect(b, top.repaired, kTheta).empty());
}

TEST_CASE("correct: unrepairable within zero edits gives an empty candidate list") {
  ModelBundle b = train(read_try_corpus());
  UsageSequence faulty{"q#m", {cv("S", "open", {}, "s"), cv("S", "read", {}, "s")}};
  RepairResult r = correct(b, faulty, kTheta, 0, 3);
  CHECK(r.candidates.empty());
  CHECK(r.explored == 1);
}

TEST_CASE("correct: soundness, bound, and budget invariants") {
  for (std::uint64_t round = 0; round < 30; ++round) {
    auto corpus = testgen::random_corpus(round * 41 + 23, 10);
    ModelBundle b = train(corpus);
    UsageSequence probe = testgen::random_sequence(round * 13 + 5, "probe#m");
    const std::size_t max_length = 2, k = 2;
    RepairResult r = correct(b, probe, Thresholds::from_decimal("0.3"), max_length, k);

    std::size_t max_findings = detect(b, probe, Thresholds::from_decimal("0.3")).size();
    std::set<std::string> texts;
    for (const RepairCandidate& c : r.candidates) {
      CHECK(detect(b, c.repaired, Thresholds::from_decimal("0.3")).empty());
      CHECK(c.edits.size() <= max_length);
      CHECK(!validate(c.repaired));
      CHECK(texts.insert(write_ir(c.repaired)).second);  // deduplicated
    }
    (void)max_findings;
  }
}

TEST_CASE("correct: candidate set equals exhaustive enumeration on small instances") {
  std::size_t checked = 0;
  for (std::uint64_t round = 0; checked < 25 && round < 200; ++round) {
    auto corpus = testgen::random_corpus(round * 53 + 29, 8);
    ModelBundle b = train(corpus);
    UsageSequence probe = testgen::random_sequence(round * 11 + 7, "probe#m");
    Thresholds theta = Thresholds::from_decimal("0.3");
    if (detect(b, probe, theta).empty()) continue;
    ++checked;

    RepairResult r = correct(b, probe, theta, 2, 2);
    oracle::EnumResult brute = oracle::enumerate_repairs(b, theta, probe, 2, 2);

    std::map<std::string, std::size_t> got;
    for (const RepairCandidate& c : r.candidates) got[write_ir(c.repaired)] = c.edits.size();
    CHECK(got == brute.candidates);
    // pruning only ever removes work relative to plain enumeration
    CHECK(r.explored <= brute.nodes);
  }
  CHECK(checked == 25);
}

TEST_CASE("correct: deterministic byte-for-byte") {
  auto corpus = testgen::random_corpus(31337, 12);
  ModelBundle b = train(corpus);
  UsageSequence probe = testgen::random_sequence(999, "probe#m");
  Thresholds theta = Thresholds::from_decimal("0.3");
  std::string first = serialize_result(correct(b, probe, theta, 2, 3));
  for (int i = 0; i < 3; ++i) {
    CHECK(serialize_result(correct(b, probe, theta, 2, 3)) == first);
  }
}

TEST_CASE("correct: two seeded faults need two edits and match the oracle") {
  // trained idiom: guarded constructor, then read wrapped in try
  std::vector<UsageSequence> corpus;
  for (int i = 0; i < 20; ++i) {
    corpus.push_back(UsageSequence{
        "s" + std::to_string(i) + "#m",
        {GuardOpenEvent{GuardKind::null_check(), "f"},
         cv("FileInputStream", "<init>", {CallArg::var("File", "f")}, "", "fis"),
         GuardCloseEvent{}, TryOpenEvent{{"IOException"}}, cv("FileInputStream", "read", {}, "fis"),
         TryCloseEvent{}}});
  }
  ModelBundle b = train(corpus);
  UsageSequence faulty{"q#m",
                       {cv("FileInputStream", "<init>", {CallArg::var("File", "f")}, "", "fis"),
                        cv("FileInputStream", "read", {}, "fis")}};
  auto findings = detect(b, faulty, kTheta);
  CHECK(findings.size() == 2);

  RepairResult r = correct(b, faulty, kTheta, 2, 3);
  oracle::EnumResult brute = oracle::enumerate_repairs(b, kTheta, faulty, 2, 3);
  std::map<std::string, std::size_t> got;
  for (const RepairCandidate& c : r.candidates) got[write_ir(c.repaired)] = c.edits.size();
  CHECK(got == brute.candidates);

  REQUIRE(!r.candidates.empty());
  const RepairCandidate& top = r.candidates[0];
  CHECK(top.edits.size() == 2);
  std::set<RepairAction::Kind> kinds;
  for (const RepairAction& a : top.edits) kinds.insert(a.kind);
  CHECK(kinds == std::set<RepairAction::Kind>{RepairAction::Kind::InsertGuard,
                                              RepairAction::Kind::WrapTryCatch});

  // budget: at most sum over depths of ((k+1) * max findings)^d nodes
  std::uint64_t budget = 0, layer = 1;
  for (std::size_t d = 0; d <= 2; ++d) {
    budget += layer;
    layer *= (3 + 1) * findings.size();
  }
  CHECK(r.explored <= budget);
}

TEST_CASE("deleting everything ranks below an equally clean insertion") {
  // both candidates are finding-free; the empty result must come last
  std::vector<UsageSequence> corpus;
  for (int i = 0; i < 12; ++i) {
    corpus.push_back(
        UsageSequence{"s" + std::to_string(i) + "#m", {cv("X", "a"), cv("X", "b")}});
  }
  ModelBundle b = train(corpus);
  UsageSequence faulty{"q#m", {cv("X", "b")}};
  RepairResult r = correct(b, faulty, kTheta, 1, 3);
  REQUIRE(r.candidates.size() == 2);
  CHECK(r.candidates[0].edits[0].kind == RepairAction::Kind::InsertCallBefore);
  CHECK(r.candidates[0].repaired.events.size() == 2);
  CHECK(r.candidates[1].edits[0].kind == RepairAction::Kind::DeleteCall);
  CHECK(r.candidates[1].repaired.events.empty());
  CHECK(r.candidates[1].factor_count == 0);
}

TEST_CASE("an inserted post-check shadows an existing one in the window") {
  UsageSequence seq{"q#m",
                    {cv("S", "read", {}, "s", "r"),
                     GuardOpenEvent{GuardKind::comparison_to_constant(), "r"},
                     GuardCloseEvent{}}};
  CHECK(context_of(seq, 0).post_check == PostCheckKind::ComparedToConstant);
  RepairAction ins;
  ins.kind = RepairAction::Kind::InsertPostCheck;
  ins.target = 0;
  ins.post_check = PostCheckKind::NullChecked;
  UsageSequence out = apply(seq, ins);
  CHECK(context_of(out, 0).post_check == PostCheckKind::NullChecked);
  CHECK(!validate(out));
}

TEST_CASE("edit scripts print and parse") {
  RepairAction wrap;
  wrap.kind = RepairAction::Kind::WrapTryCatch;
  wrap.target = 4;
  wrap.exception_type = "IOException";
  RepairAction del;
  del.kind = RepairAction::Kind::DeleteCall;
  del.target = 2;
  EditScript script{wrap, del};
  std::string text = format_script(script);
  CHECK(text == "EDIT 1: WrapTryCatch @ call 4 exc=IOException\nEDIT 2: DeleteCall @ call 2\n");
  CHECK(parse_script(text) == script);
}
