#include "sam/usage_ir.hpp"

#include <algorithm>
#include <sstream>

#include "sam/text.hpp"

namespace sam {

// ---------------------------------------------------------------------------
// encodings
// ---------------------------------------------------------------------------

std::string ApiMethodId::encode() const {
  return percent_encode(receiver_type) + "." + percent_encode(method_name) + "/" +
         std::to_string(arity);
}

ApiMethodId ApiMethodId::parse(const std::string& text) {
  auto slash = text.rfind('/');
  auto dot = text.find('.');
  if (slash == std::string::npos || dot == std::string::npos || dot > slash) {
    throw std::invalid_argument("bad method id: " + text);
  }
  ApiMethodId id;
  id.receiver_type = percent_decode(text.substr(0, dot));
  id.method_name = percent_decode(text.substr(dot + 1, slash - dot - 1));
  id.arity = std::uint32_t(std::stoul(text.substr(slash + 1)));
  if (id.receiver_type.empty() || id.method_name.empty()) {
    throw std::invalid_argument("bad method id: " + text);
  }
  return id;
}

ArgAbstraction ArgAbstraction::null_lit() { return ArgAbstraction{}; }

ArgAbstraction ArgAbstraction::int_lit(long long value) {
  return int_bucket(value < 0 ? IntBucket::Neg : value == 0 ? IntBucket::Zero : IntBucket::Pos);
}

ArgAbstraction ArgAbstraction::int_bucket(IntBucket b) {
  ArgAbstraction a;
  a.kind = Kind::Int;
  a.bucket = b;
  return a;
}

ArgAbstraction ArgAbstraction::str_lit(const std::string& value) {
  ArgAbstraction a;
  a.kind = Kind::Str;
  a.text = value;
  return a;
}

ArgAbstraction ArgAbstraction::bool_lit(bool value) {
  ArgAbstraction a;
  a.kind = Kind::Bool;
  a.bool_value = value;
  return a;
}

ArgAbstraction ArgAbstraction::var_ref(const std::string& declared_type) {
  ArgAbstraction a;
  a.kind = Kind::Var;
  a.text = declared_type;
  return a;
}

ArgAbstraction ArgAbstraction::call_result() {
  ArgAbstraction a;
  a.kind = Kind::Call;
  return a;
}

std::string ArgAbstraction::encode() const {
  switch (kind) {
    case Kind::Null:
      return "null";
    case Kind::Int:
      return bucket == IntBucket::Neg ? "int:neg" : bucket == IntBucket::Zero ? "int:zero" : "int:pos";
    case Kind::Str:
      return "str:" + percent_encode(text);
    case Kind::Bool:
      return bool_value ? "bool:true" : "bool:false";
    case Kind::Var:
      return "var:" + percent_encode(text);
    case Kind::Call:
      return "call";
  }
  return "null";
}

ArgAbstraction ArgAbstraction::parse(const std::string& text) {
  if (text == "null") return null_lit();
  if (text == "call") return call_result();
  auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad argument abstraction: " + text);
  std::string tag = text.substr(0, colon);
  std::string rest = text.substr(colon + 1);
  if (tag == "int") {
    if (rest == "neg") return int_bucket(IntBucket::Neg);
    if (rest == "zero") return int_bucket(IntBucket::Zero);
    if (rest == "pos") return int_bucket(IntBucket::Pos);
  } else if (tag == "str") {
    return str_lit(percent_decode(rest));
  } else if (tag == "bool") {
    if (rest == "true") return bool_lit(true);
    if (rest == "false") return bool_lit(false);
  } else if (tag == "var") {
    return var_ref(percent_decode(rest));
  }
  throw std::invalid_argument("bad argument abstraction: " + text);
}

GuardKind GuardKind::none() { return GuardKind{}; }

GuardKind GuardKind::null_check() {
  GuardKind g;
  g.kind = Kind::NullCheck;
  return g;
}

GuardKind GuardKind::comparison_to_constant() {
  GuardKind g;
  g.kind = Kind::ComparisonToConstant;
  return g;
}

GuardKind GuardKind::state_check(const ApiMethodId& id) {
  GuardKind g;
  g.kind = Kind::StateCheckCall;
  g.check_call = id;
  return g;
}

std::string GuardKind::encode() const {
  switch (kind) {
    case Kind::None:
      return "none";
    case Kind::NullCheck:
      return "nullcheck";
    case Kind::ComparisonToConstant:
      return "cmpconst";
    case Kind::StateCheckCall:
      return "state:" + check_call->encode();
  }
  return "none";
}

GuardKind GuardKind::parse(const std::string& text) {
  if (text == "none") return none();
  if (text == "nullcheck") return null_check();
  if (text == "cmpconst") return comparison_to_constant();
  if (text.rfind("state:", 0) == 0) return state_check(ApiMethodId::parse(text.substr(6)));
  throw std::invalid_argument("bad guard kind: " + text);
}

std::string encode(PostCheckKind k) {
  switch (k) {
    case PostCheckKind::ComparedToConstant:
      return "cmpconst";
    case PostCheckKind::NullChecked:
      return "nullcheck";
    case PostCheckKind::Ignored:
      return "ignored";
  }
  return "ignored";
}

PostCheckKind parse_post_check(const std::string& text) {
  if (text == "cmpconst") return PostCheckKind::ComparedToConstant;
  if (text == "nullcheck") return PostCheckKind::NullChecked;
  if (text == "ignored") return PostCheckKind::Ignored;
  throw std::invalid_argument("bad post-check kind: " + text);
}

std::string factor_name(FactorKind k) {
  switch (k) {
    case FactorKind::TemporalOrder:
      return "TemporalOrder";
    case FactorKind::Precondition:
      return "Precondition";
    case FactorKind::Postcondition:
      return "Postcondition";
    case FactorKind::ArgumentValue:
      return "ArgumentValue";
    case FactorKind::Exception:
      return "Exception";
  }
  return "?";
}

std::optional<FactorKind> parse_factor(const std::string& name) {
  for (int i = 0; i < kFactorCount; ++i) {
    if (factor_name(FactorKind(i)) == name) return FactorKind(i);
  }
  return std::nullopt;
}

std::string Slot::encode() const {
  return is_receiver() ? "recv" : "arg" + std::to_string(index);
}

Slot Slot::parse(const std::string& text) {
  if (text == "recv") return receiver();
  if (text.rfind("arg", 0) == 0) return arg(std::uint32_t(std::stoul(text.substr(3))));
  throw std::invalid_argument("bad slot: " + text);
}

// ---------------------------------------------------------------------------
// validation
// ---------------------------------------------------------------------------

std::optional<ValidationError> validate(const UsageSequence& seq) {
  // stack entries: 'G' for guard scopes, 'T' for try scopes
  std::vector<char> stack;
  for (std::size_t i = 0; i < seq.events.size(); ++i) {
    const UsageEvent& e = seq.events[i];
    if (std::holds_alternative<GuardOpenEvent>(e)) {
      stack.push_back('G');
    } else if (std::holds_alternative<TryOpenEvent>(e)) {
      stack.push_back('T');
    } else if (std::holds_alternative<GuardCloseEvent>(e)) {
      if (stack.empty() || stack.back() != 'G') {
        return ValidationError{ValidationError::Kind::UnbalancedScope, i};
      }
      stack.pop_back();
    } else if (std::holds_alternative<TryCloseEvent>(e)) {
      if (stack.empty() || stack.back() != 'T') {
        return ValidationError{ValidationError::Kind::UnbalancedScope, i};
      }
      stack.pop_back();
    } else if (const CallEvent* c = as_call(e)) {
      if (c->args.size() != c->id.arity) {
        return ValidationError{ValidationError::Kind::ArityMismatch, i};
      }
    }
  }
  if (!stack.empty()) {
    return ValidationError{ValidationError::Kind::UnbalancedScope, seq.events.size()};
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// context extraction
// ---------------------------------------------------------------------------

const GuardKind* CallContext::guard_for(Slot s) const {
  for (const auto& [slot, kind] : guards) {
    if (slot == s) return &kind;
  }
  return nullptr;
}

namespace {

// Innermost-first enclosing scopes of the event at `index`.
struct EnclosingScopes {
  std::vector<const GuardOpenEvent*> guards;  // innermost first
  std::vector<const TryOpenEvent*> tries;
};

EnclosingScopes enclosing_scopes(const UsageSequence& seq, std::size_t index) {
  std::vector<std::size_t> open;  // event indices of currently open scopes
  for (std::size_t i = 0; i < index; ++i) {
    const UsageEvent& e = seq.events[i];
    if (std::holds_alternative<GuardOpenEvent>(e) || std::holds_alternative<TryOpenEvent>(e)) {
      open.push_back(i);
    } else if (std::holds_alternative<GuardCloseEvent>(e) ||
               std::holds_alternative<TryCloseEvent>(e)) {
      if (!open.empty()) open.pop_back();
    }
  }
  EnclosingScopes scopes;
  for (auto it = open.rbegin(); it != open.rend(); ++it) {
    const UsageEvent& e = seq.events[*it];
    if (const auto* g = std::get_if<GuardOpenEvent>(&e)) {
      scopes.guards.push_back(g);
    } else if (const auto* t = std::get_if<TryOpenEvent>(&e)) {
      scopes.tries.push_back(t);
    }
  }
  return scopes;
}

GuardKind guard_on_var(const EnclosingScopes& scopes, const std::string& var) {
  if (var.empty()) return GuardKind::none();
  for (const GuardOpenEvent* g : scopes.guards) {
    if (g->subject == var) return g->kind;
  }
  return GuardKind::none();
}

}  // namespace

CallContext context_of(const UsageSequence& seq, std::size_t call_index) {
  if (call_index >= seq.events.size() || !as_call(seq.events[call_index])) {
    throw NotACall(call_index);
  }
  const CallEvent& call = *as_call(seq.events[call_index]);

  CallContext ctx;
  ctx.call_index = call_index;

  // predecessor: nearest preceding call event
  for (std::size_t i = call_index; i-- > 0;) {
    if (const CallEvent* prev = as_call(seq.events[i])) {
      ctx.predecessor = prev->id;
      break;
    }
  }

  EnclosingScopes scopes = enclosing_scopes(seq, call_index);

  // guards, one slot per receiver/argument
  if (!call.receiver_var.empty()) {
    ctx.guards.emplace_back(Slot::receiver(), guard_on_var(scopes, call.receiver_var));
  }
  for (std::size_t i = 0; i < call.args.size(); ++i) {
    ctx.guards.emplace_back(Slot::arg(std::uint32_t(i)),
                            guard_on_var(scopes, call.args[i].var_name));
  }

  // post-check: a guard on the result variable opening within the next two events
  ctx.post_check = PostCheckKind::Ignored;
  if (!call.result_var.empty()) {
    for (std::size_t i = call_index + 1; i <= call_index + 2 && i < seq.events.size(); ++i) {
      const auto* g = std::get_if<GuardOpenEvent>(&seq.events[i]);
      if (g && g->subject == call.result_var) {
        if (g->kind.kind == GuardKind::Kind::ComparisonToConstant) {
          ctx.post_check = PostCheckKind::ComparedToConstant;
          break;
        }
        if (g->kind.kind == GuardKind::Kind::NullCheck) {
          ctx.post_check = PostCheckKind::NullChecked;
          break;
        }
      }
    }
  }

  for (const CallArg& a : call.args) ctx.args.push_back(a.abstraction);

  // handled exceptions: union of enclosing catch sets, sorted + deduplicated
  for (const TryOpenEvent* t : scopes.tries) {
    ctx.handled_exceptions.insert(ctx.handled_exceptions.end(), t->caught.begin(),
                                  t->caught.end());
  }
  std::sort(ctx.handled_exceptions.begin(), ctx.handled_exceptions.end());
  ctx.handled_exceptions.erase(
      std::unique(ctx.handled_exceptions.begin(), ctx.handled_exceptions.end()),
      ctx.handled_exceptions.end());

  return ctx;
}

std::vector<std::pair<ApiMethodId, CallContext>> contexts(const UsageSequence& seq) {
  std::vector<std::pair<ApiMethodId, CallContext>> out;
  for (std::size_t i = 0; i < seq.events.size(); ++i) {
    if (const CallEvent* c = as_call(seq.events[i])) {
      out.emplace_back(c->id, context_of(seq, i));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// interchange text
// ---------------------------------------------------------------------------

namespace {

std::string encode_call_arg(const CallArg& a) {
  std::string s = a.abstraction.encode();
  if (a.abstraction.kind == ArgAbstraction::Kind::Var && !a.var_name.empty()) {
    s += ":" + percent_encode(a.var_name);
  }
  return s;
}

CallArg parse_call_arg(const std::string& text) {
  if (text.rfind("var:", 0) == 0) {
    auto rest = text.substr(4);
    auto colon = rest.find(':');
    if (colon != std::string::npos) {
      CallArg a;
      a.abstraction = ArgAbstraction::var_ref(percent_decode(rest.substr(0, colon)));
      a.var_name = percent_decode(rest.substr(colon + 1));
      return a;
    }
  }
  return CallArg::of(ArgAbstraction::parse(text));
}

std::string var_or_dash(const std::string& v) { return v.empty() ? "-" : percent_encode(v); }

std::string dash_to_var(const std::string& v) { return v == "-" ? "" : percent_decode(v); }

}  // namespace

std::string write_ir(const UsageSequence& seq) {
  std::ostringstream out;
  out << "SAMIR 1 " << percent_encode(seq.source_id) << "\n";
  for (const UsageEvent& e : seq.events) {
    if (const CallEvent* c = as_call(e)) {
      out << "CALL " << percent_encode(c->id.receiver_type) << " "
          << percent_encode(c->id.method_name) << " " << c->id.arity << " recv="
          << var_or_dash(c->receiver_var) << " result=" << var_or_dash(c->result_var) << " args=";
      for (std::size_t i = 0; i < c->args.size(); ++i) {
        if (i) out << ",";
        out << encode_call_arg(c->args[i]);
      }
      out << "\n";
    } else if (const auto* g = std::get_if<GuardOpenEvent>(&e)) {
      out << "GUARD+ " << g->kind.encode() << " " << percent_encode(g->subject) << "\n";
    } else if (std::holds_alternative<GuardCloseEvent>(e)) {
      out << "GUARD-\n";
    } else if (const auto* t = std::get_if<TryOpenEvent>(&e)) {
      out << "TRY+ ";
      if (t->caught.empty()) {
        out << "-";
      } else {
        for (std::size_t i = 0; i < t->caught.size(); ++i) {
          if (i) out << ",";
          out << percent_encode(t->caught[i]);
        }
      }
      out << "\n";
    } else {
      out << "TRY-\n";
    }
  }
  return out.str();
}

UsageSequence read_ir(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  UsageSequence seq;
  bool saw_header = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (!saw_header) {
      auto parts = split(line, ' ');
      if (parts.size() != 3 || parts[0] != "SAMIR") {
        throw IrSyntaxError(lineno, "expected 'SAMIR 1 <source_id>' header");
      }
      if (parts[1] != "1") throw IrSyntaxError(lineno, "unsupported IR version " + parts[1]);
      seq.source_id = percent_decode(parts[2]);
      saw_header = true;
      continue;
    }
    auto parts = split(line, ' ');
    const std::string& tag = parts[0];
    try {
      if (tag == "CALL") {
        if (parts.size() != 7) throw std::invalid_argument("expected 7 fields");
        CallEvent c;
        c.id.receiver_type = percent_decode(parts[1]);
        c.id.method_name = percent_decode(parts[2]);
        c.id.arity = std::uint32_t(std::stoul(parts[3]));
        if (parts[4].rfind("recv=", 0) != 0 || parts[5].rfind("result=", 0) != 0 ||
            parts[6].rfind("args=", 0) != 0) {
          throw std::invalid_argument("expected recv=/result=/args= fields");
        }
        c.receiver_var = dash_to_var(parts[4].substr(5));
        c.result_var = dash_to_var(parts[5].substr(7));
        std::string args = parts[6].substr(5);
        if (!args.empty()) {
          for (const std::string& a : split(args, ',')) c.args.push_back(parse_call_arg(a));
        }
        seq.events.emplace_back(std::move(c));
      } else if (tag == "GUARD+") {
        if (parts.size() != 3) throw std::invalid_argument("expected 'GUARD+ <kind> <var>'");
        GuardOpenEvent g;
        g.kind = GuardKind::parse(parts[1]);
        g.subject = percent_decode(parts[2]);
        seq.events.emplace_back(std::move(g));
      } else if (tag == "GUARD-") {
        if (parts.size() != 1) throw std::invalid_argument("unexpected fields after GUARD-");
        seq.events.emplace_back(GuardCloseEvent{});
      } else if (tag == "TRY+") {
        if (parts.size() != 2) throw std::invalid_argument("expected 'TRY+ <Exc1,...>'");
        TryOpenEvent t;
        if (parts[1] != "-") {
          for (const std::string& e : split(parts[1], ',')) t.caught.push_back(percent_decode(e));
        }
        seq.events.emplace_back(std::move(t));
      } else if (tag == "TRY-") {
        if (parts.size() != 1) throw std::invalid_argument("unexpected fields after TRY-");
        seq.events.emplace_back(TryCloseEvent{});
      } else {
        throw std::invalid_argument("unknown event tag '" + tag + "'");
      }
    } catch (const IrSyntaxError&) {
      throw;
    } catch (const std::exception& e) {
      throw IrSyntaxError(lineno, e.what());
    }
  }
  if (!saw_header) throw IrSyntaxError(lineno ? lineno : 1, "missing SAMIR header");
  return seq;
}

}  // namespace sam
