#include "doctest.h"

#include "gen_random.hpp"
#include "sam/frontend.hpp"
#include "sam/rng.hpp"

using namespace sam;

namespace {

std::vector<UsageSequence> lower_text(const std::string& text) {
  ParseResult r = parse(text, "t.mj");
  REQUIRE_MESSAGE(r.unit.has_value(), "parse failed");
  return lower(*r.unit);
}

const char* kFileReadProgram = R"(
void readFile() {
  File file = new File("data.txt");
  if (file != null) {
    FileInputStream fis = new FileInputStream(file);
  }
  Bytes bytes = new Bytes();
  try {
    int r = fis.read(bytes);
  } catch (IOException e) {
  }
  if (r != -1) {
  }
  String s = new String(bytes, "UTF8");
}
)";

}  // namespace

TEST_CASE("parse accepts an empty method") {
  ParseResult r = parse("void m() { }", "t.mj");
  REQUIRE(r.unit);
  REQUIRE(r.unit->methods.size() == 1);
  CHECK(r.unit->methods[0].name == "m");
  CHECK(r.unit->methods[0].body.empty());
}

TEST_CASE("parse handles the file-reading program") {
  ParseResult r = parse(kFileReadProgram, "fileread.mj");
  REQUIRE(r.unit);
  auto seqs = lower(*r.unit);
  REQUIRE(seqs.size() == 1);
  const UsageSequence& seq = seqs[0];

  std::vector<std::string> ids;
  for (const UsageEvent& e : seq.events) {
    if (const CallEvent* c = as_call(e)) ids.push_back(c->id.encode());
  }
  CHECK(ids == std::vector<std::string>{"File.<init>/1", "FileInputStream.<init>/1",
                                        "Bytes.<init>/0", "FileInputStream.read/1",
                                        "String.<init>/2"});

  // string constructor keeps the exact charset literal
  const CallEvent* last = as_call(seq.events.back());
  REQUIRE(last);
  CHECK(last->args[1].abstraction == ArgAbstraction::str_lit("UTF8"));
}

TEST_CASE("parse reports malformed conditions with a position") {
  ParseResult r = parse("void m() { if (x { } }", "t.mj");
  CHECK(!r.unit);
  REQUIRE(!r.diagnostics.empty());
  CHECK(r.diagnostics[0].line == 1);
  CHECK(r.diagnostics[0].col > 1);
}

TEST_CASE("parse never crashes on arbitrary bytes and points inside the input") {
  Rng rng(0xF00D);
  for (int round = 0; round < 400; ++round) {
    std::string text;
    std::size_t n = rng.below(160);
    for (std::size_t i = 0; i < n; ++i) {
      static const char pool[] = "void mif(){};=.\"!,xyz019 \n\t\\%$#\xC3\xA9";
      text.push_back(pool[rng.below(sizeof pool - 1)]);
    }
    ParseResult r = parse(text, "fuzz.mj");
    if (!r.unit && !text.empty()) {
      REQUIRE(!r.diagnostics.empty());
      // positions index a real character of the input
      std::vector<std::string> lines{""};
      for (char c : text) {
        if (c == '\n') {
          lines.emplace_back();
        } else {
          lines.back().push_back(c);
        }
      }
      for (const Diagnostic& d : r.diagnostics) {
        REQUIRE(d.line >= 1);
        REQUIRE(std::size_t(d.line) <= lines.size());
        CHECK(d.col >= 1);
        CHECK(std::size_t(d.col) <= lines[d.line - 1].size() + 1);
      }
    }
  }
}

TEST_CASE("deep nesting is rejected, not a crash") {
  std::string text = "void m() { ";
  for (int i = 0; i < 5000; ++i) text += "if (x != null) { ";
  ParseResult r = parse(text, "deep.mj");
  CHECK(!r.unit);
}

TEST_CASE("lower: constructor then read gives the constructor as predecessor") {
  auto seqs = lower_text(
      "void m() { File f = null; FileInputStream fis = new FileInputStream(f); "
      "Bytes b = new Bytes(); fis.read(b); }");
  auto all = contexts(seqs[0]);
  REQUIRE(all.size() == 3);
  CHECK(all[2].first.encode() == "FileInputStream.read/1");
  REQUIRE(all[2].second.predecessor);
  CHECK(all[2].second.predecessor->encode() == "Bytes.<init>/0");

  auto two = lower_text(
      "void m() { File f = null; FileInputStream fis = new FileInputStream(f); Bytes b = null; "
      "fis.read(b); }");
  auto pair = contexts(two[0]);
  REQUIRE(pair.size() == 2);
  REQUIRE(pair[1].second.predecessor);
  CHECK(pair[1].second.predecessor->encode() == "FileInputStream.<init>/1");
}

TEST_CASE("lower: null-check guard lands on the argument slot") {
  auto seqs = lower_text(
      "void m() { File file = null; if (file != null) { FileInputStream fis = new "
      "FileInputStream(file); } }");
  auto all = contexts(seqs[0]);
  REQUIRE(all.size() == 1);
  const GuardKind* g = all[0].second.guard_for(Slot::arg(0));
  REQUIRE(g);
  CHECK(*g == GuardKind::null_check());
}

TEST_CASE("lower: comparing the result against a constant is a post-check") {
  auto seqs = lower_text(
      "void m() { FileInputStream fis = null; Bytes b = null; int r = fis.read(b); "
      "if (r != -1) { } }");
  auto all = contexts(seqs[0]);
  REQUIRE(all.size() == 1);
  CHECK(all[0].second.post_check == PostCheckKind::ComparedToConstant);
}

TEST_CASE("lower: state-check conditions emit the checking call then the guard") {
  auto seqs = lower_text(
      "void m() { List l = new List(); Iterator it = l.iterator(); if (it.hasNext()) { "
      "Item x = it.next(); } }");
  const UsageSequence& seq = seqs[0];
  auto all = contexts(seq);
  REQUIRE(all.size() == 4);
  CHECK(all[2].first.encode() == "Iterator.hasNext/0");
  CHECK(all[3].first.encode() == "Iterator.next/0");
  REQUIRE(all[3].second.predecessor);
  CHECK(all[3].second.predecessor->encode() == "Iterator.hasNext/0");
  const GuardKind* g = all[3].second.guard_for(Slot::receiver());
  REQUIRE(g);
  CHECK(g->kind == GuardKind::Kind::StateCheckCall);
  CHECK(g->check_call->encode() == "Iterator.hasNext/0");
}

TEST_CASE("lower: catch scopes register handled exceptions") {
  auto seqs = lower_text(
      "void m() { FileInputStream fis = null; Bytes b = null; try { fis.read(b); } "
      "catch (IOException e) { } }");
  auto all = contexts(seqs[0]);
  REQUIRE(all.size() == 1);
  CHECK(all[0].second.handled_exceptions == std::vector<std::string>{"IOException"});
}

TEST_CASE("lower: unknown receivers are an error with a position") {
  ParseResult r = parse("void m() { ghost.use(); }", "t.mj");
  REQUIRE(r.unit);
  CHECK_THROWS_AS(lower(*r.unit), LowerError);
  try {
    lower(*r.unit);
  } catch (const LowerError& e) {
    CHECK(e.line == 1);
  }
}

TEST_CASE("lower: while conditions guard like if conditions") {
  auto seqs = lower_text(
      "void m() { List l = new List(); Iterator it = l.iterator(); while (it.hasNext()) { "
      "Item x = it.next(); } }");
  auto all = contexts(seqs[0]);
  REQUIRE(all.size() == 4);
  const GuardKind* g = all[3].second.guard_for(Slot::receiver());
  REQUIRE(g);
  CHECK(g->kind == GuardKind::Kind::StateCheckCall);
}

TEST_CASE("render: empty sequence is an empty method") {
  UsageSequence seq{"x.mj#m", {}};
  CHECK(render(seq) == "void m() {\n}\n");
}

TEST_CASE("render: try scopes come back as try/catch") {
  UsageSequence seq = lower_text(
      "void m() { FileInputStream fis = null; Bytes b = null; try { fis.read(b); } "
      "catch (IOException e) { } }")[0];
  std::string text = render(seq);
  CHECK(text.find("try {") != std::string::npos);
  CHECK(text.find("catch (IOException") != std::string::npos);
  auto again = lower_text(text);
  CHECK(again[0].events == seq.events);
}

TEST_CASE("render round-trips 1000 random renderable sequences") {
  for (std::uint64_t round = 0; round < 1000; ++round) {
    UsageSequence seq = testgen::random_renderable(round * 2654435761 + 17, "r.mj#m");
    CAPTURE(round);
    std::string source = render(seq);
    ParseResult parsed = parse(source, "r.mj");
    REQUIRE_MESSAGE(parsed.unit.has_value(), source);
    auto lowered = lower(*parsed.unit);
    REQUIRE(lowered.size() == 1);
    CHECK(lowered[0].events == seq.events);
    CHECK(lowered[0].source_id == seq.source_id);
  }
}
