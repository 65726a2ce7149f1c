#ifndef SAM_BENCH_HPP
#define SAM_BENCH_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sam/detector.hpp"
#include "sam/factor_models.hpp"
#include "sam/repair.hpp"
#include "sam/usage_ir.hpp"

namespace sam {

// Root-cause categories of seeded misuses, with their benchmark mix weights.
enum class Category : std::uint8_t {
  TemporalOrder = 0,
  ExceptionHandling = 1,
  MissingPrecondition = 2,
  MissingPostcondition = 3,
  ArgumentValue = 4,
};

constexpr int kCategoryCount = 5;
constexpr std::array<std::size_t, kCategoryCount> kCategoryWeights = {75, 27, 22, 15, 5};

FactorKind category_factor(Category c);
std::string category_name(Category c);
std::optional<Category> parse_category(const std::string& name);

// Largest-remainder split of `total` by the category weights, then a
// minimum-one adjustment funded by the largest categories. total >= 5.
std::array<std::size_t, kCategoryCount> category_quotas(std::size_t total);

// A usage idiom template. Variable names are roles, renamed per instance.
struct UsagePattern {
  std::string id;
  UsageSequence events;
};

const std::vector<UsagePattern>& pattern_library();

// Fresh-named instance, optionally with leading benign noise calls.
UsageSequence instantiate(const UsagePattern& pattern, std::uint64_t seed,
                          const std::string& source_id, bool with_noise);

// Deterministic clean corpus: round-robin over the patterns.
std::vector<UsageSequence> gen_corpus(const std::vector<UsagePattern>& patterns, std::size_t n,
                                      std::uint64_t seed);

struct MisuseCase {
  Category category = Category::TemporalOrder;
  UsageSequence clean;
  UsageSequence faulty;
  EditScript ground_truth;
  std::size_t flag_index = 0;  // event index in faulty expected to be flagged
  std::string pattern_id;
  std::uint64_t case_seed = 0;
};

struct NotEligible : std::runtime_error {
  explicit NotEligible(Category c)
      : std::runtime_error("no eligible mutation site for category " + category_name(c)) {}
};

// Applies one category mutation to a clean sequence. Throws NotEligible when
// the sequence has no structural site for the category; returns nullopt (and
// bumps `rejected`) when every candidate site fails validation against the
// bundle. k bounds action generation when deriving the ground-truth edit.
std::optional<MisuseCase> inject(std::uint64_t case_seed, const UsageSequence& clean,
                                 Category category, const ModelBundle& bundle,
                                 const Thresholds& thresholds, std::size_t k,
                                 std::uint64_t& rejected);

struct Benchmark {
  std::vector<MisuseCase> cases;
  std::uint64_t rejected = 0;  // discarded instantiation/site attempts
};

Benchmark make_benchmark(const std::vector<UsagePattern>& patterns, std::size_t total,
                         std::uint64_t seed, const ModelBundle& bundle,
                         const Thresholds& thresholds, std::size_t k);

struct CategoryMetrics {
  std::size_t cases = 0;
  std::size_t detected = 0;
  std::size_t repair1 = 0;
  std::size_t repairk = 0;
};

struct EvalMetrics {
  std::size_t cases = 0;
  std::size_t detected = 0;         // faulty flagged at the mutated call+factor
  std::size_t clean_findings = 0;   // findings on paired clean snippets
  std::size_t repair1 = 0;
  std::size_t repairk = 0;
  std::size_t k = 3;
  std::array<CategoryMetrics, kCategoryCount> per_category{};

  // "n/a" when undefined (zero cases)
  std::string recall_text() const;
  std::string precision_text() const;
  std::string repair1_text() const;
  std::string repairk_text() const;

  std::string render_text() const;
  std::string render_json() const;
};

EvalMetrics evaluate(const ModelBundle& bundle, const std::vector<MisuseCase>& cases,
                     const Thresholds& thresholds, std::size_t max_length, std::size_t k,
                     std::size_t jobs = 1);

}  // namespace sam

#endif
