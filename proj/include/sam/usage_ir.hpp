#ifndef SAM_USAGE_IR_HPP
#define SAM_USAGE_IR_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sam {

// ---------------------------------------------------------------------------
// Identifiers and observation abstractions
// ---------------------------------------------------------------------------

struct ApiMethodId {
  std::string receiver_type;
  std::string method_name;  // "<init>" for constructors
  std::uint32_t arity = 0;

  bool operator==(const ApiMethodId&) const = default;
  bool operator<(const ApiMethodId& o) const {
    if (receiver_type != o.receiver_type) return receiver_type < o.receiver_type;
    if (method_name != o.method_name) return method_name < o.method_name;
    return arity < o.arity;
  }

  bool is_constructor() const { return method_name == "<init>"; }

  // "FileInputStream.read/1"
  std::string encode() const;
  static ApiMethodId parse(const std::string& text);
};

struct ArgAbstraction {
  enum class Kind : std::uint8_t { Null, Int, Str, Bool, Var, Call };
  enum class IntBucket : std::uint8_t { Neg, Zero, Pos };

  Kind kind = Kind::Null;
  IntBucket bucket = IntBucket::Zero;  // Int only
  bool bool_value = false;             // Bool only
  std::string text;                    // Str: exact literal; Var: declared type

  bool operator==(const ArgAbstraction&) const = default;

  static ArgAbstraction null_lit();
  static ArgAbstraction int_lit(long long value);
  static ArgAbstraction int_bucket(IntBucket b);
  static ArgAbstraction str_lit(const std::string& value);
  static ArgAbstraction bool_lit(bool value);
  static ArgAbstraction var_ref(const std::string& declared_type);
  static ArgAbstraction call_result();

  // "null" | "int:neg|zero|pos" | "str:<pct>" | "bool:true|false" | "var:<type>" | "call"
  std::string encode() const;
  static ArgAbstraction parse(const std::string& text);
};

struct GuardKind {
  enum class Kind : std::uint8_t { None, NullCheck, ComparisonToConstant, StateCheckCall };

  Kind kind = Kind::None;
  std::optional<ApiMethodId> check_call;  // StateCheckCall only

  bool operator==(const GuardKind&) const = default;

  static GuardKind none();
  static GuardKind null_check();
  static GuardKind comparison_to_constant();
  static GuardKind state_check(const ApiMethodId& id);

  // "none" | "nullcheck" | "cmpconst" | "state:<Type.m/arity>"
  std::string encode() const;
  static GuardKind parse(const std::string& text);
};

enum class PostCheckKind : std::uint8_t { ComparedToConstant, NullChecked, Ignored };

std::string encode(PostCheckKind k);
PostCheckKind parse_post_check(const std::string& text);

enum class FactorKind : std::uint8_t {
  TemporalOrder,
  Precondition,
  Postcondition,
  ArgumentValue,
  Exception,
};

constexpr int kFactorCount = 5;
std::string factor_name(FactorKind k);
std::optional<FactorKind> parse_factor(const std::string& name);

// Slot of a call a guard or argument observation attaches to:
// the receiver or one of the argument positions.
struct Slot {
  std::int32_t index = -1;  // -1 receiver, >= 0 argument position

  bool operator==(const Slot&) const = default;
  bool operator<(const Slot& o) const { return index < o.index; }

  static Slot receiver() { return Slot{-1}; }
  static Slot arg(std::uint32_t i) { return Slot{std::int32_t(i)}; }
  bool is_receiver() const { return index < 0; }

  std::string encode() const;  // "recv" | "arg<i>"
  static Slot parse(const std::string& text);
};

// ---------------------------------------------------------------------------
// Events and sequences
// ---------------------------------------------------------------------------

// One argument at a call site: its abstraction plus, for variable
// references, the source variable name used for guard attribution.
struct CallArg {
  ArgAbstraction abstraction;
  std::string var_name;  // nonempty only for Var abstractions

  bool operator==(const CallArg&) const = default;

  static CallArg of(const ArgAbstraction& a) { return CallArg{a, ""}; }
  static CallArg var(const std::string& type, const std::string& name) {
    return CallArg{ArgAbstraction::var_ref(type), name};
  }
};

struct CallEvent {
  ApiMethodId id;
  std::string receiver_var;  // empty = no receiver (constructors, IR-level statics)
  std::vector<CallArg> args;
  std::string result_var;  // empty = result unused/absent

  bool operator==(const CallEvent&) const = default;
};

struct GuardOpenEvent {
  GuardKind kind;
  std::string subject;  // guarded variable

  bool operator==(const GuardOpenEvent&) const = default;
};

struct GuardCloseEvent {
  bool operator==(const GuardCloseEvent&) const = default;
};

struct TryOpenEvent {
  std::vector<std::string> caught;  // exception type names, source order

  bool operator==(const TryOpenEvent&) const = default;
};

struct TryCloseEvent {
  bool operator==(const TryCloseEvent&) const = default;
};

using UsageEvent =
    std::variant<CallEvent, GuardOpenEvent, GuardCloseEvent, TryOpenEvent, TryCloseEvent>;

struct UsageSequence {
  std::string source_id;
  std::vector<UsageEvent> events;

  bool operator==(const UsageSequence&) const = default;
};

inline const CallEvent* as_call(const UsageEvent& e) { return std::get_if<CallEvent>(&e); }

// ---------------------------------------------------------------------------
// Factor observations for one call site
// ---------------------------------------------------------------------------

struct CallContext {
  std::size_t call_index = 0;  // event index of the call
  std::optional<ApiMethodId> predecessor;
  // One entry per slot (receiver first when present, then each argument),
  // GuardKind::none() when unguarded.
  std::vector<std::pair<Slot, GuardKind>> guards;
  PostCheckKind post_check = PostCheckKind::Ignored;
  std::vector<ArgAbstraction> args;
  std::vector<std::string> handled_exceptions;  // sorted, deduplicated

  bool operator==(const CallContext&) const = default;

  const GuardKind* guard_for(Slot s) const;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

struct ValidationError {
  enum class Kind { UnbalancedScope, ArityMismatch };
  Kind kind;
  std::size_t position;  // event index

  bool operator==(const ValidationError&) const = default;
};

std::optional<ValidationError> validate(const UsageSequence& seq);

struct NotACall : std::invalid_argument {
  explicit NotACall(std::size_t index)
      : std::invalid_argument("event " + std::to_string(index) + " is not a call"), index(index) {}
  std::size_t index;
};

// Derives the five factor observations for the call at the given event index.
CallContext context_of(const UsageSequence& seq, std::size_t call_index);

// One (id, context) entry per call event, in event order.
std::vector<std::pair<ApiMethodId, CallContext>> contexts(const UsageSequence& seq);

// ---------------------------------------------------------------------------
// IR interchange text
// ---------------------------------------------------------------------------

struct IrSyntaxError : std::runtime_error {
  IrSyntaxError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line(line) {}
  std::size_t line;
};

std::string write_ir(const UsageSequence& seq);
UsageSequence read_ir(const std::string& text);

}  // namespace sam

#endif
