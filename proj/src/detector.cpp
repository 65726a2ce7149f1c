#include "sam/detector.hpp"

#include <sstream>

namespace sam {

Rational parse_threshold(const std::string& text) {
  Rational r;
  try {
    r = parse_decimal(text);
  } catch (const std::exception& e) {
    throw InvalidThreshold(e.what());
  }
  if (r.num == 0 || uint128(r.num) >= uint128(r.den)) {
    throw InvalidThreshold("threshold must be in (0, 1): " + text);
  }
  return r;
}

Thresholds Thresholds::from_decimal(const std::string& text) {
  Thresholds t;
  t.global = parse_threshold(text);
  t.global_text = text;
  return t;
}

void Thresholds::set_override(FactorKind factor, const std::string& text) {
  per_factor[std::size_t(factor)] = parse_threshold(text);
  per_factor_text[std::size_t(factor)] = text;
}

std::vector<FactorReport> report(const ModelBundle& bundle, const UsageSequence& seq) {
  if (auto err = validate(seq)) {
    throw std::invalid_argument("invalid sequence '" + seq.source_id + "' at event " +
                                std::to_string(err->position));
  }
  std::vector<FactorReport> out;
  for (const auto& [id, ctx] : contexts(seq)) {
    FactorReport r;
    r.call_index = ctx.call_index;
    r.method = id;
    r.context = ctx;
    for (int f = 0; f < kFactorCount; ++f) {
      r.probabilities[f] = factor_probability(bundle, FactorKind(f), id, ctx);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Finding> detect(const ModelBundle& bundle, const UsageSequence& seq,
                            const Thresholds& thresholds) {
  std::vector<Finding> findings;
  for (const FactorReport& r : report(bundle, seq)) {
    for (int f = 0; f < kFactorCount; ++f) {
      FactorKind factor = FactorKind(f);
      const Rational& theta = thresholds.for_factor(factor);
      if (r.probabilities[f].less_than(theta)) {
        findings.push_back(Finding{seq.source_id, r.call_index, r.method, factor,
                                   r.probabilities[f], theta, thresholds.text_for(factor)});
      }
    }
  }
  return findings;
}

std::string format_finding(const Finding& f) {
  std::ostringstream out;
  out << f.source_id << ":" << f.call_index << " " << f.method.encode() << " "
      << factor_name(f.factor) << " p=" << f.probability.decimal6() << " θ=" << f.threshold_text;
  return out.str();
}

}  // namespace sam
