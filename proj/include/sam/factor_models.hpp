#ifndef SAM_FACTOR_MODELS_HPP
#define SAM_FACTOR_MODELS_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "sam/rational.hpp"
#include "sam/usage_ir.hpp"

namespace sam {

// Pseudo-predecessor key for calls with nothing before them.
inline const std::string kStartToken = "^";

// Count table over opaque string-tuple keys. Absent key means zero.
class CountTable {
 public:
  using Key = std::vector<std::string>;

  std::uint64_t at(const Key& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second;
  }

  void add(const Key& key, std::uint64_t n = 1) { entries_[key] += n; }

  void merge_from(const CountTable& other) {
    for (const auto& [k, v] : other.entries_) entries_[k] += v;
  }

  // Sum of counts over keys starting with the given prefix.
  std::uint64_t prefix_total(const Key& prefix) const;

  // Entries whose key starts with the prefix, in key order.
  std::vector<std::pair<Key, std::uint64_t>> with_prefix(const Key& prefix) const;

  const std::map<Key, std::uint64_t>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  bool operator==(const CountTable&) const = default;

 private:
  std::map<Key, std::uint64_t> entries_;
};

struct ModelBundle {
  std::uint32_t version = 1;
  CountTable unigram;               // (m)
  CountTable temporal;              // (predecessor | ^, m)
  CountTable precondition;          // (m, slot, guard kind)
  CountTable precond_slot_totals;   // (m, slot)
  CountTable postcondition;         // (m, post-check kind)
  CountTable argvalue;              // (m, slot, abstraction)
  CountTable argvalue_slot_totals;  // (m, slot)
  CountTable exception;             // (m, handled-exception pattern)
  std::uint64_t trained_sequences = 0;

  bool operator==(const ModelBundle&) const = default;
};

// Canonical key text for a handled-exception set: sorted comma-joined, "-" when empty.
std::string exception_pattern_key(const std::vector<std::string>& handled);

struct FactorProbability {
  FactorKind kind;
  Probability value;
};

// Counting pass over one sequence's call contexts.
void train_into(ModelBundle& bundle, const UsageSequence& seq);

ModelBundle train(std::span<const UsageSequence> corpus);

struct VersionMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ModelBundle merge(const ModelBundle& a, const ModelBundle& b);

Probability p_temporal(const ModelBundle& bundle, const std::optional<ApiMethodId>& predecessor,
                       const ApiMethodId& m);
Probability p_precondition(const ModelBundle& bundle, const ApiMethodId& m,
                           const CallContext& context);
Probability p_postcondition(const ModelBundle& bundle, const ApiMethodId& m,
                            const CallContext& context);
Probability p_argvalue(const ModelBundle& bundle, const ApiMethodId& m,
                       const CallContext& context);
Probability p_exception(const ModelBundle& bundle, const ApiMethodId& m,
                        const CallContext& context);

Probability factor_probability(const ModelBundle& bundle, FactorKind factor, const ApiMethodId& m,
                               const CallContext& context);

struct CorruptModel : std::runtime_error {
  CorruptModel(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line(line) {}
  std::size_t line;
};

void save(const ModelBundle& bundle, std::ostream& sink);
ModelBundle load(std::istream& source);

}  // namespace sam

#endif
