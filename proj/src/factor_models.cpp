#include "sam/factor_models.hpp"

#include <array>
#include <istream>
#include <ostream>
#include <sstream>

#include "sam/text.hpp"

namespace sam {

std::uint64_t CountTable::prefix_total(const Key& prefix) const {
  std::uint64_t total = 0;
  for (auto it = entries_.lower_bound(prefix); it != entries_.end(); ++it) {
    const Key& k = it->first;
    if (k.size() < prefix.size() || !std::equal(prefix.begin(), prefix.end(), k.begin())) break;
    total += it->second;
  }
  return total;
}

std::vector<std::pair<CountTable::Key, std::uint64_t>> CountTable::with_prefix(
    const Key& prefix) const {
  std::vector<std::pair<Key, std::uint64_t>> out;
  for (auto it = entries_.lower_bound(prefix); it != entries_.end(); ++it) {
    const Key& k = it->first;
    if (k.size() < prefix.size() || !std::equal(prefix.begin(), prefix.end(), k.begin())) break;
    out.emplace_back(k, it->second);
  }
  return out;
}

std::string exception_pattern_key(const std::vector<std::string>& handled) {
  if (handled.empty()) return "-";
  std::vector<std::string> enc;
  enc.reserve(handled.size());
  for (const std::string& e : handled) enc.push_back(percent_encode(e));
  return join(enc, ",");
}

void train_into(ModelBundle& bundle, const UsageSequence& seq) {
  if (auto err = validate(seq)) {
    throw std::invalid_argument("invalid sequence '" + seq.source_id + "' at event " +
                                std::to_string(err->position));
  }
  for (const auto& [id, ctx] : contexts(seq)) {
    const std::string m = id.encode();
    bundle.unigram.add({m});
    bundle.temporal.add({ctx.predecessor ? ctx.predecessor->encode() : kStartToken, m});
    for (const auto& [slot, kind] : ctx.guards) {
      bundle.precondition.add({m, slot.encode(), kind.encode()});
      bundle.precond_slot_totals.add({m, slot.encode()});
    }
    bundle.postcondition.add({m, encode(ctx.post_check)});
    for (std::size_t i = 0; i < ctx.args.size(); ++i) {
      const std::string slot = Slot::arg(std::uint32_t(i)).encode();
      bundle.argvalue.add({m, slot, ctx.args[i].encode()});
      bundle.argvalue_slot_totals.add({m, slot});
    }
    bundle.exception.add({m, exception_pattern_key(ctx.handled_exceptions)});
  }
  bundle.trained_sequences += 1;
}

ModelBundle train(std::span<const UsageSequence> corpus) {
  ModelBundle bundle;
  for (const UsageSequence& seq : corpus) train_into(bundle, seq);
  return bundle;
}

ModelBundle merge(const ModelBundle& a, const ModelBundle& b) {
  if (a.version != b.version) {
    throw VersionMismatch("cannot merge bundles of versions " + std::to_string(a.version) +
                          " and " + std::to_string(b.version));
  }
  ModelBundle out = a;
  out.unigram.merge_from(b.unigram);
  out.temporal.merge_from(b.temporal);
  out.precondition.merge_from(b.precondition);
  out.precond_slot_totals.merge_from(b.precond_slot_totals);
  out.postcondition.merge_from(b.postcondition);
  out.argvalue.merge_from(b.argvalue);
  out.argvalue_slot_totals.merge_from(b.argvalue_slot_totals);
  out.exception.merge_from(b.exception);
  out.trained_sequences += b.trained_sequences;
  return out;
}

Probability p_temporal(const ModelBundle& bundle, const std::optional<ApiMethodId>& predecessor,
                       const ApiMethodId& m) {
  const std::string mk = m.encode();
  const std::string pk = predecessor ? predecessor->encode() : kStartToken;
  return Probability::ratio(bundle.temporal.at({pk, mk}), bundle.unigram.at({mk}));
}

Probability p_precondition(const ModelBundle& bundle, const ApiMethodId& m,
                           const CallContext& context) {
  const std::string mk = m.encode();
  Probability p;
  for (const auto& [slot, kind] : context.guards) {
    const std::string sk = slot.encode();
    p = p * Probability::ratio(bundle.precondition.at({mk, sk, kind.encode()}),
                               bundle.precond_slot_totals.at({mk, sk}));
  }
  return p;
}

Probability p_postcondition(const ModelBundle& bundle, const ApiMethodId& m,
                            const CallContext& context) {
  const std::string mk = m.encode();
  return Probability::ratio(bundle.postcondition.at({mk, encode(context.post_check)}),
                            bundle.unigram.at({mk}));
}

Probability p_argvalue(const ModelBundle& bundle, const ApiMethodId& m,
                       const CallContext& context) {
  const std::string mk = m.encode();
  Probability p;
  for (std::size_t i = 0; i < context.args.size(); ++i) {
    const std::string sk = Slot::arg(std::uint32_t(i)).encode();
    p = p * Probability::ratio(bundle.argvalue.at({mk, sk, context.args[i].encode()}),
                               bundle.argvalue_slot_totals.at({mk, sk}));
  }
  return p;
}

Probability p_exception(const ModelBundle& bundle, const ApiMethodId& m,
                        const CallContext& context) {
  const std::string mk = m.encode();
  return Probability::ratio(
      bundle.exception.at({mk, exception_pattern_key(context.handled_exceptions)}),
      bundle.unigram.at({mk}));
}

Probability factor_probability(const ModelBundle& bundle, FactorKind factor, const ApiMethodId& m,
                               const CallContext& context) {
  switch (factor) {
    case FactorKind::TemporalOrder:
      return p_temporal(bundle, context.predecessor, m);
    case FactorKind::Precondition:
      return p_precondition(bundle, m, context);
    case FactorKind::Postcondition:
      return p_postcondition(bundle, m, context);
    case FactorKind::ArgumentValue:
      return p_argvalue(bundle, m, context);
    case FactorKind::Exception:
      return p_exception(bundle, m, context);
  }
  return Probability();
}

// ---------------------------------------------------------------------------
// persistence
// ---------------------------------------------------------------------------

namespace {

struct TableSlot {
  const char* name;
  CountTable ModelBundle::* member;
};

constexpr std::array<TableSlot, 8> kTables = {{
    {"unigram", &ModelBundle::unigram},
    {"temporal", &ModelBundle::temporal},
    {"precondition", &ModelBundle::precondition},
    {"precond_slot_totals", &ModelBundle::precond_slot_totals},
    {"postcondition", &ModelBundle::postcondition},
    {"argvalue", &ModelBundle::argvalue},
    {"argvalue_slot_totals", &ModelBundle::argvalue_slot_totals},
    {"exception", &ModelBundle::exception},
}};

}  // namespace

void save(const ModelBundle& bundle, std::ostream& sink) {
  sink << "SAMMODEL " << bundle.version << "\n";
  sink << "sequences " << bundle.trained_sequences << "\n";
  for (const TableSlot& slot : kTables) {
    const CountTable& table = bundle.*(slot.member);
    for (const auto& [key, count] : table.entries()) {
      sink << slot.name;
      for (const std::string& field : key) sink << "\t" << field;
      sink << "\t" << count << "\n";
    }
  }
}

ModelBundle load(std::istream& source) {
  ModelBundle bundle;
  std::string line;
  std::size_t lineno = 0;

  if (!std::getline(source, line)) throw CorruptModel(1, "empty model file");
  ++lineno;
  {
    auto parts = split(line, ' ');
    if (parts.size() != 2 || parts[0] != "SAMMODEL") {
      throw CorruptModel(lineno, "expected 'SAMMODEL <version>' header");
    }
    if (parts[1] != "1") {
      throw VersionMismatch("unsupported model version " + parts[1]);
    }
  }

  if (!std::getline(source, line)) throw CorruptModel(2, "missing 'sequences' line");
  ++lineno;
  {
    auto parts = split(line, ' ');
    if (parts.size() != 2 || parts[0] != "sequences") {
      throw CorruptModel(lineno, "expected 'sequences <n>'");
    }
    try {
      bundle.trained_sequences = std::stoull(parts[1]);
    } catch (const std::exception&) {
      throw CorruptModel(lineno, "bad sequence count '" + parts[1] + "'");
    }
  }

  std::size_t table_index = 0;
  while (std::getline(source, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() < 2) throw CorruptModel(lineno, "expected '<table>\\t<keys...>\\t<count>'");
    // Tables appear in fixed order; advance until the name matches.
    while (table_index < kTables.size() && fields[0] != kTables[table_index].name) ++table_index;
    if (table_index >= kTables.size()) {
      throw CorruptModel(lineno, "unknown or out-of-order table '" + fields[0] + "'");
    }
    CountTable::Key key(fields.begin() + 1, fields.end() - 1);
    if (key.empty()) throw CorruptModel(lineno, "entry with empty key");
    std::uint64_t count = 0;
    try {
      count = std::stoull(fields.back());
    } catch (const std::exception&) {
      throw CorruptModel(lineno, "bad count '" + fields.back() + "'");
    }
    (bundle.*(kTables[table_index].member)).add(key, count);
  }
  return bundle;
}

}  // namespace sam
