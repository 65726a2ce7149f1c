#ifndef SAM_FRONTEND_HPP
#define SAM_FRONTEND_HPP

#include <optional>
#include <string>
#include <vector>

#include "sam/usage_ir.hpp"

namespace sam {

// ---------------------------------------------------------------------------
// Syntax tree
// ---------------------------------------------------------------------------

struct Expr {
  enum class Kind { New, MethodCall, Literal, VarRef };
  enum class Lit { Int, Str, Bool, Null };

  Kind kind = Kind::Literal;
  std::string type_name;   // New
  std::string receiver;    // MethodCall
  std::string method;      // MethodCall
  std::vector<Expr> args;  // New / MethodCall (literal or variable args)
  Lit lit = Lit::Null;
  long long int_value = 0;
  std::string str_value;
  bool bool_value = false;
  std::string var_name;  // VarRef
  int line = 0, col = 0;
};

struct Cond {
  enum class Kind { CompareNull, CompareLiteral, StateCall };
  Kind kind = Kind::CompareNull;
  std::string subject;
  bool negated = true;  // "!=" vs "=="
  Expr literal;         // CompareLiteral
  std::string method;   // StateCall
  int line = 0, col = 0;
};

struct Stmt {
  enum class Kind { VarDecl, CallStmt, If, While, Try, Return };

  struct Catch {
    std::string type;
    std::string var;
    std::vector<Stmt> block;
  };

  Kind kind = Kind::Return;
  std::string decl_type, decl_name;  // VarDecl
  std::optional<Expr> expr;          // VarDecl initializer / CallStmt call
  std::optional<Cond> cond;          // If / While
  std::vector<Stmt> block;           // If-then / While / Try body
  std::vector<Stmt> else_block;      // If
  std::vector<Catch> catches;        // Try
  int line = 0, col = 0;
};

struct MethodDecl {
  std::string name;
  std::vector<Stmt> body;
  int line = 0, col = 0;
};

struct SourceUnit {
  std::string path;
  std::vector<MethodDecl> methods;
};

struct Diagnostic {
  int line = 0, col = 0;  // 1-based
  std::string message;
};

struct ParseResult {
  std::optional<SourceUnit> unit;  // present iff diagnostics empty
  std::vector<Diagnostic> diagnostics;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

ParseResult parse(const std::string& text, const std::string& path = "");

struct LowerError : std::runtime_error {
  LowerError(const std::string& message, int line, int col)
      : std::runtime_error(message + " at " + std::to_string(line) + ":" + std::to_string(col)),
        line(line),
        col(col) {}
  int line, col;
};

// One UsageSequence per method; source_id is "<path>#<method>".
std::vector<UsageSequence> lower(const SourceUnit& unit);

// Emits mini-language source whose lowering reproduces the sequence. The
// method name is taken from the "#"-suffix of source_id when present.
std::string render(const UsageSequence& seq);

}  // namespace sam

#endif
