#include "sam/repair.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "sam/text.hpp"

namespace sam {

// ---------------------------------------------------------------------------
// action serialization
// ---------------------------------------------------------------------------

namespace {

std::string encode_call_arg_full(const CallArg& a) {
  std::string s = a.abstraction.encode();
  if (a.abstraction.kind == ArgAbstraction::Kind::Var && !a.var_name.empty()) {
    s += ":" + percent_encode(a.var_name);
  }
  return s;
}

CallArg parse_call_arg_full(const std::string& text) {
  if (text.rfind("var:", 0) == 0) {
    auto rest = text.substr(4);
    auto colon = rest.find(':');
    if (colon != std::string::npos) {
      return CallArg::var(percent_decode(rest.substr(0, colon)),
                          percent_decode(rest.substr(colon + 1)));
    }
  }
  return CallArg::of(ArgAbstraction::parse(text));
}

std::string field(const std::string& line, const std::string& name) {
  auto pos = line.find(" " + name + "=");
  if (pos == std::string::npos) {
    throw std::invalid_argument("missing field '" + name + "' in action: " + line);
  }
  auto start = pos + name.size() + 2;
  auto end = line.find(' ', start);
  return line.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace

std::string RepairAction::encode() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::InsertCallBefore: {
      out << "InsertCallBefore @ call " << target << " new=" << new_call.id.encode()
          << " recv=" << (new_call.receiver_var.empty() ? "-" : percent_encode(new_call.receiver_var))
          << " result=" << (new_call.result_var.empty() ? "-" : percent_encode(new_call.result_var))
          << " args=";
      for (std::size_t i = 0; i < new_call.args.size(); ++i) {
        if (i) out << ",";
        out << encode_call_arg_full(new_call.args[i]);
      }
      break;
    }
    case Kind::InsertGuard:
      out << "InsertGuard @ call " << target << " slot=" << slot.encode()
          << " kind=" << guard.encode();
      break;
    case Kind::InsertPostCheck:
      out << "InsertPostCheck @ call " << target << " kind=" << sam::encode(post_check);
      break;
    case Kind::ReplaceArg:
      out << "ReplaceArg @ call " << target << " slot=" << slot.encode()
          << " arg=" << encode_call_arg_full(new_arg);
      break;
    case Kind::WrapTryCatch:
      out << "WrapTryCatch @ call " << target << " exc=" << percent_encode(exception_type);
      break;
    case Kind::DeleteCall:
      out << "DeleteCall @ call " << target;
      break;
  }
  return out.str();
}

RepairAction RepairAction::parse(const std::string& text) {
  auto at = text.find(" @ call ");
  if (at == std::string::npos) throw std::invalid_argument("bad action: " + text);
  RepairAction a;
  std::string name = text.substr(0, at);
  a.target = std::stoull(text.substr(at + 8));
  if (name == "InsertCallBefore") {
    a.kind = Kind::InsertCallBefore;
    a.new_call.id = ApiMethodId::parse(field(text, "new"));
    std::string recv = field(text, "recv");
    a.new_call.receiver_var = recv == "-" ? "" : percent_decode(recv);
    std::string result = field(text, "result");
    a.new_call.result_var = result == "-" ? "" : percent_decode(result);
    std::string args = field(text, "args");
    if (!args.empty()) {
      for (const std::string& part : split(args, ',')) {
        a.new_call.args.push_back(parse_call_arg_full(part));
      }
    }
  } else if (name == "InsertGuard") {
    a.kind = Kind::InsertGuard;
    a.slot = Slot::parse(field(text, "slot"));
    a.guard = GuardKind::parse(field(text, "kind"));
  } else if (name == "InsertPostCheck") {
    a.kind = Kind::InsertPostCheck;
    a.post_check = parse_post_check(field(text, "kind"));
  } else if (name == "ReplaceArg") {
    a.kind = Kind::ReplaceArg;
    a.slot = Slot::parse(field(text, "slot"));
    a.new_arg = parse_call_arg_full(field(text, "arg"));
  } else if (name == "WrapTryCatch") {
    a.kind = Kind::WrapTryCatch;
    a.exception_type = percent_decode(field(text, "exc"));
  } else if (name == "DeleteCall") {
    a.kind = Kind::DeleteCall;
  } else {
    throw std::invalid_argument("unknown action '" + name + "'");
  }
  return a;
}

std::string encode_script(const EditScript& script) {
  std::string out;
  for (std::size_t i = 0; i < script.size(); ++i) {
    if (i) out += "; ";
    out += script[i].encode();
  }
  return out;
}

std::string format_script(const EditScript& script) {
  std::string out;
  for (std::size_t i = 0; i < script.size(); ++i) {
    out += "EDIT " + std::to_string(i + 1) + ": " + script[i].encode() + "\n";
  }
  return out;
}

EditScript parse_script(const std::string& text) {
  EditScript script;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto colon = line.find(": ");
    if (line.rfind("EDIT ", 0) != 0 || colon == std::string::npos) {
      throw std::invalid_argument("bad edit line: " + line);
    }
    script.push_back(RepairAction::parse(line.substr(colon + 2)));
  }
  return script;
}

// ---------------------------------------------------------------------------
// action generation
// ---------------------------------------------------------------------------

namespace {

const CallEvent& call_at(const UsageSequence& seq, std::size_t index) {
  if (index >= seq.events.size() || !as_call(seq.events[index])) {
    throw InvalidTarget("event " + std::to_string(index) + " is not a call");
  }
  return *as_call(seq.events[index]);
}

// Smallest fresh-name counter start: one past any existing "_f<n>" in the sequence.
std::size_t fresh_name_start(const UsageSequence& seq) {
  std::size_t next = 0;
  auto consider = [&next](const std::string& name) {
    if (name.rfind("_f", 0) != 0) return;
    const std::string digits = name.substr(2);
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) return;
    next = std::max(next, std::size_t(std::stoull(digits)) + 1);
  };
  for (const UsageEvent& e : seq.events) {
    if (const CallEvent* c = as_call(e)) {
      consider(c->receiver_var);
      consider(c->result_var);
      for (const CallArg& a : c->args) consider(a.var_name);
    }
  }
  return next;
}

// ranked (count desc, tie-break text asc) selection helper
struct Ranked {
  std::uint64_t count;
  std::string tie_key;
  RepairAction action;
};

void take_top_k(std::vector<Ranked>& ranked, std::size_t k, std::vector<RepairAction>& out) {
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.tie_key < b.tie_key;
  });
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(ranked[i].action);
}

CallEvent synthesize_call(const ModelBundle& bundle, const ApiMethodId& id,
                          const CallEvent& insertion_target, std::size_t& fresh) {
  CallEvent c;
  c.id = id;
  if (!id.is_constructor()) {
    if (!insertion_target.receiver_var.empty() &&
        insertion_target.id.receiver_type == id.receiver_type) {
      c.receiver_var = insertion_target.receiver_var;
    } else {
      c.receiver_var = "_f" + std::to_string(fresh++);
    }
  }
  for (std::uint32_t i = 0; i < id.arity; ++i) {
    // most frequent trained abstraction for this slot, null when unseen
    auto options = bundle.argvalue.with_prefix({id.encode(), Slot::arg(i).encode()});
    std::string best;
    std::uint64_t best_count = 0;
    for (const auto& [key, count] : options) {
      if (count > best_count || (count == best_count && !best.empty() && key[2] < best)) {
        best = key[2];
        best_count = count;
      }
    }
    if (best.empty()) {
      c.args.push_back(CallArg::of(ArgAbstraction::null_lit()));
    } else {
      ArgAbstraction abs = ArgAbstraction::parse(best);
      if (abs.kind == ArgAbstraction::Kind::Var) {
        c.args.push_back(CallArg::var(abs.text, "_f" + std::to_string(fresh++)));
      } else {
        c.args.push_back(CallArg::of(abs));
      }
    }
  }
  if (id.is_constructor()) c.result_var = "_f" + std::to_string(fresh++);
  return c;
}

}  // namespace

std::vector<RepairAction> generate_repair_actions(const ModelBundle& bundle,
                                                  const UsageSequence& seq,
                                                  const std::vector<Finding>& findings,
                                                  std::size_t k) {
  if (findings.empty()) throw EmptyFindings("no findings to repair");
  if (k < 1) throw std::invalid_argument("k must be >= 1");

  std::vector<RepairAction> actions;
  std::set<std::string> seen;

  auto emit = [&actions, &seen](std::vector<RepairAction> batch) {
    for (RepairAction& a : batch) {
      std::string key = a.encode();
      if (seen.insert(key).second) actions.push_back(std::move(a));
    }
  };

  for (const Finding& f : findings) {
    const CallEvent& call = call_at(seq, f.call_index);
    const CallContext ctx = context_of(seq, f.call_index);
    const std::string mk = f.method.encode();
    std::vector<Ranked> ranked;

    switch (f.factor) {
      case FactorKind::TemporalOrder: {
        for (const auto& [key, count] : bundle.temporal.entries()) {
          if (key.size() != 2 || key[1] != mk || key[0] == kStartToken) continue;
          std::size_t fresh = fresh_name_start(seq);
          RepairAction a;
          a.kind = RepairAction::Kind::InsertCallBefore;
          a.target = f.call_index;
          a.new_call = synthesize_call(bundle, ApiMethodId::parse(key[0]), call, fresh);
          ranked.push_back({count, a.encode(), std::move(a)});
        }
        std::vector<RepairAction> batch;
        take_top_k(ranked, k, batch);
        RepairAction del;
        del.kind = RepairAction::Kind::DeleteCall;
        del.target = f.call_index;
        batch.push_back(del);
        emit(std::move(batch));
        break;
      }
      case FactorKind::Precondition: {
        for (const auto& [slot, observed] : ctx.guards) {
          // guards can only be inserted around variables
          const std::string* var = nullptr;
          if (slot.is_receiver()) {
            var = &call.receiver_var;
          } else if (std::size_t(slot.index) < call.args.size()) {
            var = &call.args[slot.index].var_name;
          }
          if (!var || var->empty()) continue;
          for (const auto& [key, count] :
               bundle.precondition.with_prefix({mk, slot.encode()})) {
            const std::string& kind_text = key[2];
            if (kind_text == "none" || kind_text == observed.encode()) continue;
            RepairAction a;
            a.kind = RepairAction::Kind::InsertGuard;
            a.target = f.call_index;
            a.slot = slot;
            a.guard = GuardKind::parse(kind_text);
            ranked.push_back({count, a.encode(), std::move(a)});
          }
        }
        std::vector<RepairAction> batch;
        take_top_k(ranked, k, batch);
        emit(std::move(batch));
        break;
      }
      case FactorKind::Postcondition: {
        if (call.result_var.empty()) break;
        for (const auto& [key, count] : bundle.postcondition.with_prefix({mk})) {
          const std::string& kind_text = key[1];
          if (kind_text == "ignored" || kind_text == sam::encode(ctx.post_check)) continue;
          RepairAction a;
          a.kind = RepairAction::Kind::InsertPostCheck;
          a.target = f.call_index;
          a.post_check = parse_post_check(kind_text);
          ranked.push_back({count, a.encode(), std::move(a)});
        }
        std::vector<RepairAction> batch;
        take_top_k(ranked, k, batch);
        emit(std::move(batch));
        break;
      }
      case FactorKind::ArgumentValue: {
        for (std::size_t i = 0; i < ctx.args.size(); ++i) {
          const std::string slot_text = Slot::arg(std::uint32_t(i)).encode();
          for (const auto& [key, count] : bundle.argvalue.with_prefix({mk, slot_text})) {
            const std::string& abs_text = key[2];
            if (abs_text == ctx.args[i].encode()) continue;
            RepairAction a;
            a.kind = RepairAction::Kind::ReplaceArg;
            a.target = f.call_index;
            a.slot = Slot::arg(std::uint32_t(i));
            ArgAbstraction abs = ArgAbstraction::parse(abs_text);
            if (abs.kind == ArgAbstraction::Kind::Var) {
              std::size_t fresh = fresh_name_start(seq);
              a.new_arg = CallArg::var(abs.text, "_f" + std::to_string(fresh));
            } else {
              a.new_arg = CallArg::of(abs);
            }
            ranked.push_back({count, a.encode(), std::move(a)});
          }
        }
        std::vector<RepairAction> batch;
        take_top_k(ranked, k, batch);
        emit(std::move(batch));
        break;
      }
      case FactorKind::Exception: {
        // rank whole trained patterns, then peel individual missing types
        std::vector<std::pair<std::uint64_t, std::string>> patterns;
        for (const auto& [key, count] : bundle.exception.with_prefix({mk})) {
          if (key[1] == "-") continue;
          patterns.emplace_back(count, key[1]);
        }
        std::stable_sort(patterns.begin(), patterns.end(), [](const auto& a, const auto& b) {
          if (a.first != b.first) return a.first > b.first;
          return a.second < b.second;
        });
        std::vector<RepairAction> batch;
        std::set<std::string> emitted_types;
        for (const auto& [count, pattern] : patterns) {
          for (const std::string& enc : split(pattern, ',')) {
            std::string type = percent_decode(enc);
            if (std::find(ctx.handled_exceptions.begin(), ctx.handled_exceptions.end(), type) !=
                ctx.handled_exceptions.end()) {
              continue;
            }
            if (!emitted_types.insert(type).second) continue;
            if (batch.size() >= k) break;
            RepairAction a;
            a.kind = RepairAction::Kind::WrapTryCatch;
            a.target = f.call_index;
            a.exception_type = type;
            batch.push_back(std::move(a));
          }
          if (batch.size() >= k) break;
        }
        emit(std::move(batch));
        break;
      }
    }
  }
  return actions;
}

// ---------------------------------------------------------------------------
// apply
// ---------------------------------------------------------------------------

UsageSequence apply(const UsageSequence& seq, const RepairAction& action) {
  const CallEvent& target = call_at(seq, action.target);
  UsageSequence out = seq;
  auto& ev = out.events;

  switch (action.kind) {
    case RepairAction::Kind::InsertCallBefore:
      ev.insert(ev.begin() + action.target, UsageEvent(action.new_call));
      break;

    case RepairAction::Kind::InsertGuard: {
      std::string subject;
      if (action.slot.is_receiver()) {
        subject = target.receiver_var;
      } else if (std::size_t(action.slot.index) < target.args.size()) {
        subject = target.args[action.slot.index].var_name;
      }
      if (subject.empty()) {
        throw InvalidTarget("guard slot " + action.slot.encode() + " has no variable");
      }
      ev.insert(ev.begin() + action.target + 1, UsageEvent(GuardCloseEvent{}));
      ev.insert(ev.begin() + action.target,
                UsageEvent(GuardOpenEvent{action.guard, subject}));
      // a state-check guard needs its establishing call right before the scope
      if (action.guard.kind == GuardKind::Kind::StateCheckCall) {
        bool already = false;
        if (action.target > 0) {
          if (const CallEvent* prev = as_call(ev[action.target - 1])) {
            already = prev->id == *action.guard.check_call && prev->receiver_var == subject;
          }
        }
        if (!already) {
          CallEvent check;
          check.id = *action.guard.check_call;
          check.receiver_var = subject;
          ev.insert(ev.begin() + action.target, UsageEvent(std::move(check)));
        }
      }
      break;
    }

    case RepairAction::Kind::InsertPostCheck: {
      if (target.result_var.empty()) {
        throw InvalidTarget("call has no result to check");
      }
      GuardKind kind = action.post_check == PostCheckKind::NullChecked
                           ? GuardKind::null_check()
                           : GuardKind::comparison_to_constant();
      ev.insert(ev.begin() + action.target + 1, UsageEvent(GuardCloseEvent{}));
      ev.insert(ev.begin() + action.target + 1,
                UsageEvent(GuardOpenEvent{kind, target.result_var}));
      break;
    }

    case RepairAction::Kind::ReplaceArg:
      if (action.slot.is_receiver() || std::size_t(action.slot.index) >= target.args.size()) {
        throw InvalidTarget("argument slot " + action.slot.encode() + " out of range");
      }
      std::get<CallEvent>(ev[action.target]).args[action.slot.index] = action.new_arg;
      break;

    case RepairAction::Kind::WrapTryCatch:
      ev.insert(ev.begin() + action.target + 1, UsageEvent(TryCloseEvent{}));
      ev.insert(ev.begin() + action.target,
                UsageEvent(TryOpenEvent{{action.exception_type}}));
      break;

    case RepairAction::Kind::DeleteCall: {
      CallEvent deleted = target;
      ev.erase(ev.begin() + action.target);
      // unwrap a state-check guard orphaned by deleting its establishing call
      if (action.target < ev.size()) {
        const auto* g = std::get_if<GuardOpenEvent>(&ev[action.target]);
        if (g && g->kind.kind == GuardKind::Kind::StateCheckCall &&
            g->kind.check_call == deleted.id && g->subject == deleted.receiver_var) {
          int depth = 0;
          for (std::size_t j = action.target; j < ev.size(); ++j) {
            if (std::holds_alternative<GuardOpenEvent>(ev[j]) ||
                std::holds_alternative<TryOpenEvent>(ev[j])) {
              ++depth;
            } else if (std::holds_alternative<GuardCloseEvent>(ev[j]) ||
                       std::holds_alternative<TryCloseEvent>(ev[j])) {
              --depth;
              if (depth == 0) {
                ev.erase(ev.begin() + j);
                ev.erase(ev.begin() + action.target);
                break;
              }
            }
          }
        }
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// search
// ---------------------------------------------------------------------------

namespace {

struct SearchState {
  const ModelBundle& bundle;
  const Thresholds& thresholds;
  std::size_t max_length;
  std::size_t k;
  std::map<std::string, std::size_t> visited;          // canonical text -> least depth
  std::map<std::string, RepairCandidate> candidates;   // canonical text -> best candidate
  std::uint64_t explored = 0;
};

bool script_before(const EditScript& a, const EditScript& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return encode_script(a) < encode_script(b);
}

void record_candidate(SearchState& st, const std::string& text, const UsageSequence& seq,
                      const EditScript& script) {
  auto it = st.candidates.find(text);
  if (it == st.candidates.end()) {
    RepairCandidate c;
    c.edits = script;
    c.repaired = seq;
    st.candidates.emplace(text, std::move(c));
  } else if (script_before(script, it->second.edits)) {
    it->second.edits = script;
  }
}

void search(SearchState& st, const UsageSequence& seq, const std::string& text,
            const EditScript& script, std::size_t depth) {
  ++st.explored;
  std::vector<Finding> findings = detect(st.bundle, seq, st.thresholds);
  if (findings.empty()) {
    record_candidate(st, text, seq, script);
    return;
  }
  if (depth >= st.max_length) return;
  for (const RepairAction& a : generate_repair_actions(st.bundle, seq, findings, st.k)) {
    UsageSequence next = apply(seq, a);
    std::string next_text = write_ir(next);
    EditScript next_script = script;
    next_script.push_back(a);
    auto cand = st.candidates.find(next_text);
    if (cand != st.candidates.end()) {
      // already known clean; keep the better script
      if (script_before(next_script, cand->second.edits)) cand->second.edits = next_script;
      continue;
    }
    auto seen = st.visited.find(next_text);
    if (seen != st.visited.end() && seen->second <= depth + 1) continue;
    st.visited[next_text] = depth + 1;
    search(st, next, next_text, next_script, depth + 1);
  }
}

}  // namespace

bool candidate_less(const RepairCandidate& a, const RepairCandidate& b) {
  if (a.edits.size() != b.edits.size()) return a.edits.size() < b.edits.size();
  // geometric means: (an/ad)^(1/afc) vs (bn/bd)^(1/bfc); zero-call candidates rank last
  if (a.factor_count == 0 || b.factor_count == 0) {
    if (a.factor_count != b.factor_count) return a.factor_count > b.factor_count;
  } else if (a.factor_count == b.factor_count) {
    cpp_int lhs = a.prob_num * b.prob_den;
    cpp_int rhs = b.prob_num * a.prob_den;
    if (lhs != rhs) return lhs > rhs;
  } else {
    cpp_int lhs = boost::multiprecision::pow(a.prob_num, unsigned(b.factor_count)) *
                  boost::multiprecision::pow(b.prob_den, unsigned(a.factor_count));
    cpp_int rhs = boost::multiprecision::pow(b.prob_num, unsigned(a.factor_count)) *
                  boost::multiprecision::pow(a.prob_den, unsigned(b.factor_count));
    if (lhs != rhs) return lhs > rhs;
  }
  return a.script_key < b.script_key;
}

RepairResult correct(const ModelBundle& bundle, const UsageSequence& seq,
                     const Thresholds& thresholds, std::size_t max_length, std::size_t k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (auto err = validate(seq)) {
    throw std::invalid_argument("invalid sequence at event " + std::to_string(err->position));
  }

  SearchState st{bundle, thresholds, max_length, k, {}, {}, 0};
  std::string root_text = write_ir(seq);
  st.visited[root_text] = 0;
  search(st, seq, root_text, {}, 0);

  RepairResult result;
  result.explored = st.explored;
  for (auto& [text, cand] : st.candidates) {
    cand.script_key = encode_script(cand.edits);
    cpp_int num = 1, den = 1;
    std::uint64_t count = 0;
    double log_sum = 0.0;
    for (const FactorReport& r : report(bundle, cand.repaired)) {
      for (int f = 0; f < kFactorCount; ++f) {
        const Probability& p = r.probabilities[f];
        num *= cpp_int(std::uint64_t(p.num >> 64)) << 64 | cpp_int(std::uint64_t(p.num));
        den *= cpp_int(std::uint64_t(p.den >> 64)) << 64 | cpp_int(std::uint64_t(p.den));
        log_sum += std::log(p.to_double());
        ++count;
      }
    }
    cand.prob_num = num;
    cand.prob_den = den;
    cand.factor_count = count;
    cand.geomean = count == 0 ? 0.0 : std::exp(log_sum / double(count));
    result.candidates.push_back(std::move(cand));
  }
  std::sort(result.candidates.begin(), result.candidates.end(), candidate_less);
  return result;
}

}  // namespace sam
