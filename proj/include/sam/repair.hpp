#ifndef SAM_REPAIR_HPP
#define SAM_REPAIR_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "sam/detector.hpp"
#include "sam/factor_models.hpp"
#include "sam/usage_ir.hpp"

namespace sam {

struct InvalidTarget : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EmptyFindings : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct RepairAction {
  enum class Kind {
    InsertCallBefore,
    InsertGuard,
    InsertPostCheck,
    ReplaceArg,
    WrapTryCatch,
    DeleteCall,
  };

  Kind kind = Kind::DeleteCall;
  std::size_t target = 0;     // event index of the call the action anchors to
  CallEvent new_call;         // InsertCallBefore
  Slot slot;                  // InsertGuard / ReplaceArg
  GuardKind guard;            // InsertGuard
  PostCheckKind post_check = PostCheckKind::Ignored;  // InsertPostCheck
  CallArg new_arg;            // ReplaceArg
  std::string exception_type; // WrapTryCatch

  bool operator==(const RepairAction&) const = default;

  std::string encode() const;
  static RepairAction parse(const std::string& text);
};

using EditScript = std::vector<RepairAction>;

std::string encode_script(const EditScript& script);

// "EDIT <n>: <action>" lines, one per action.
std::string format_script(const EditScript& script);
EditScript parse_script(const std::string& text);

struct RepairCandidate {
  EditScript edits;
  UsageSequence repaired;
  // score: (fewer edits, higher geometric mean of factor probabilities, script order)
  cpp_int prob_num = 1, prob_den = 1;  // product over all calls and factors
  std::uint64_t factor_count = 0;      // 5 * number of calls
  double geomean = 1.0;                // display value
  std::string script_key;
};

struct RepairResult {
  std::vector<RepairCandidate> candidates;  // ranked best first
  std::uint64_t explored = 0;               // visited search nodes
};

// Up to k instantiations per action family of each finding, drawn from the
// most probable trained observations. Deterministic order.
std::vector<RepairAction> generate_repair_actions(const ModelBundle& bundle,
                                                  const UsageSequence& seq,
                                                  const std::vector<Finding>& findings,
                                                  std::size_t k);

UsageSequence apply(const UsageSequence& seq, const RepairAction& action);

RepairResult correct(const ModelBundle& bundle, const UsageSequence& seq,
                     const Thresholds& thresholds, std::size_t max_length, std::size_t k);

// true if a ranks strictly better than b
bool candidate_less(const RepairCandidate& a, const RepairCandidate& b);

}  // namespace sam

#endif
