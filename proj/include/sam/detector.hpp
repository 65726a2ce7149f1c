#ifndef SAM_DETECTOR_HPP
#define SAM_DETECTOR_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "sam/factor_models.hpp"
#include "sam/rational.hpp"
#include "sam/usage_ir.hpp"

namespace sam {

struct InvalidThreshold : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Global threshold with optional per-factor overrides. The decimal text is
// kept for report output.
struct Thresholds {
  Rational global{1, 10};
  std::string global_text = "0.1";
  std::array<std::optional<Rational>, kFactorCount> per_factor;
  std::array<std::string, kFactorCount> per_factor_text;

  static Thresholds from_decimal(const std::string& text);
  void set_override(FactorKind factor, const std::string& text);

  const Rational& for_factor(FactorKind f) const {
    const auto& o = per_factor[std::size_t(f)];
    return o ? *o : global;
  }
  const std::string& text_for(FactorKind f) const {
    const auto& o = per_factor[std::size_t(f)];
    return o ? per_factor_text[std::size_t(f)] : global_text;
  }
};

// Validates 0 < value < 1.
Rational parse_threshold(const std::string& text);

struct Finding {
  std::string source_id;
  std::size_t call_index = 0;  // event index
  ApiMethodId method;
  FactorKind factor = FactorKind::TemporalOrder;
  Probability probability;
  Rational threshold;
  std::string threshold_text;
};

struct FactorReport {
  std::size_t call_index = 0;
  ApiMethodId method;
  CallContext context;
  std::array<Probability, kFactorCount> probabilities;
};

// All five factor probabilities for every call, in event order.
std::vector<FactorReport> report(const ModelBundle& bundle, const UsageSequence& seq);

// The (call, factor) pairs with probability strictly below the factor's
// threshold, ordered by (call_index, factor enumeration order).
std::vector<Finding> detect(const ModelBundle& bundle, const UsageSequence& seq,
                            const Thresholds& thresholds);

// "<source_id>:<call_index> <recv>.<method>/<arity> <factor> p=0.xxxxxx θ=<text>"
std::string format_finding(const Finding& f);

}  // namespace sam

#endif
