#include "sam/frontend.hpp"

#include <map>
#include <sstream>

#include "sam/text.hpp"

namespace sam {

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

namespace {

struct Token {
  enum class Kind {
    Ident,
    Int,
    Str,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Dot,
    Assign,
    EqEq,
    NotEq,
    Eof,
    Bad,
  };
  Kind kind = Kind::Eof;
  std::string text;
  long long int_value = 0;
  int line = 1, col = 1;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) {}

  std::vector<Token> run(std::vector<Diagnostic>& diagnostics) {
    std::vector<Token> tokens;
    while (true) {
      skip_space_and_comments();
      Token t;
      t.line = line_;
      t.col = col_;
      if (at_end()) {
        t.kind = Token::Kind::Eof;
        tokens.push_back(t);
        break;
      }
      char c = peek();
      if (is_ident_start(c)) {
        while (!at_end() && is_ident_char(peek())) t.text.push_back(take());
        t.kind = Token::Kind::Ident;
      } else if (is_digit(c) || (c == '-' && is_digit(peek(1)))) {
        bool neg = c == '-';
        if (neg) take();
        unsigned long long v = 0;
        while (!at_end() && is_digit(peek())) {
          v = v * 10 + (unsigned long long)(take() - '0');
          if (v > (1ULL << 62)) v = (1ULL << 62);  // clamp pathological literals
        }
        t.kind = Token::Kind::Int;
        t.int_value = neg ? -(long long)v : (long long)v;
      } else if (c == '"') {
        take();
        bool closed = false;
        while (!at_end()) {
          char d = take();
          if (d == '"') {
            closed = true;
            break;
          }
          if (d == '\\' && !at_end()) {
            char e = take();
            switch (e) {
              case 'n': t.text.push_back('\n'); break;
              case 't': t.text.push_back('\t'); break;
              case 'r': t.text.push_back('\r'); break;
              default: t.text.push_back(e); break;
            }
          } else {
            t.text.push_back(d);
          }
        }
        if (!closed) {
          diagnostics.push_back({t.line, t.col, "unterminated string literal"});
          t.kind = Token::Kind::Bad;
        } else {
          t.kind = Token::Kind::Str;
        }
      } else {
        switch (take()) {
          case '{': t.kind = Token::Kind::LBrace; break;
          case '}': t.kind = Token::Kind::RBrace; break;
          case '(': t.kind = Token::Kind::LParen; break;
          case ')': t.kind = Token::Kind::RParen; break;
          case ';': t.kind = Token::Kind::Semi; break;
          case ',': t.kind = Token::Kind::Comma; break;
          case '.': t.kind = Token::Kind::Dot; break;
          case '=':
            if (!at_end() && peek() == '=') {
              take();
              t.kind = Token::Kind::EqEq;
            } else {
              t.kind = Token::Kind::Assign;
            }
            break;
          case '!':
            if (!at_end() && peek() == '=') {
              take();
              t.kind = Token::Kind::NotEq;
            } else {
              diagnostics.push_back({t.line, t.col, "stray '!'"});
              t.kind = Token::Kind::Bad;
            }
            break;
          default:
            diagnostics.push_back({t.line, t.col, "unexpected character"});
            t.kind = Token::Kind::Bad;
            break;
        }
      }
      tokens.push_back(std::move(t));
    }
    return tokens;
  }

 private:
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }
  static bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
  }
  static bool is_ident_char(char c) { return is_ident_start(c) || is_digit(c); }

  bool at_end() const { return pos_ >= src_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
  }
  char take() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }
  void skip_space_and_comments() {
    while (!at_end()) {
      char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        take();
      } else if (c == '/' && peek(1) == '/') {
        while (!at_end() && peek() != '\n') take();
      } else {
        break;
      }
    }
  }

  const std::string& src_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

constexpr int kMaxNesting = 200;

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::vector<Diagnostic>& diagnostics)
      : tokens_(std::move(tokens)), diagnostics_(diagnostics) {}

  SourceUnit run(const std::string& path) {
    SourceUnit unit;
    unit.path = path;
    while (!failed_ && !at(Token::Kind::Eof)) {
      unit.methods.push_back(parse_method());
    }
    return unit;
  }

  bool failed() const { return failed_; }

 private:
  const Token& cur() const { return tokens_[pos_]; }
  bool at(Token::Kind k) const { return cur().kind == k; }
  bool at_keyword(const char* kw) const {
    return cur().kind == Token::Kind::Ident && cur().text == kw;
  }
  const Token& advance() { return tokens_[pos_ + 1 < tokens_.size() ? pos_++ : pos_]; }

  void fail(const std::string& message) {
    if (!failed_) {
      // report at the previous token when already past the end
      const Token& at =
          cur().kind == Token::Kind::Eof && pos_ > 0 ? tokens_[pos_ - 1] : cur();
      diagnostics_.push_back({at.line, at.col, message});
    }
    failed_ = true;
  }

  bool expect(Token::Kind k, const char* what) {
    if (failed_) return false;
    if (!at(k)) {
      fail(std::string("expected ") + what);
      return false;
    }
    advance();
    return true;
  }

  std::string expect_ident(const char* what) {
    if (failed_) return "";
    if (!at(Token::Kind::Ident)) {
      fail(std::string("expected ") + what);
      return "";
    }
    return advance().text;
  }

  static bool is_reserved(const std::string& s) {
    return s == "void" || s == "if" || s == "else" || s == "while" || s == "try" ||
           s == "catch" || s == "return" || s == "new" || s == "true" || s == "false" ||
           s == "null";
  }

  std::string expect_name(const char* what) {
    std::string s = expect_ident(what);
    if (!failed_ && is_reserved(s)) fail(std::string("reserved word used as ") + what);
    return s;
  }

  MethodDecl parse_method() {
    MethodDecl m;
    m.line = cur().line;
    m.col = cur().col;
    if (!at_keyword("void")) {
      fail("expected 'void' at start of method");
      return m;
    }
    advance();
    m.name = expect_name("method name");
    expect(Token::Kind::LParen, "'('");
    expect(Token::Kind::RParen, "')'");
    m.body = parse_block();
    return m;
  }

  std::vector<Stmt> parse_block() {
    std::vector<Stmt> stmts;
    if (++depth_ > kMaxNesting) {
      fail("nesting too deep");
      --depth_;
      return stmts;
    }
    expect(Token::Kind::LBrace, "'{'");
    while (!failed_ && !at(Token::Kind::RBrace)) {
      if (at(Token::Kind::Eof)) {
        fail("unexpected end of input inside block");
        break;
      }
      stmts.push_back(parse_stmt());
    }
    expect(Token::Kind::RBrace, "'}'");
    --depth_;
    return stmts;
  }

  Stmt parse_stmt() {
    Stmt s;
    s.line = cur().line;
    s.col = cur().col;
    if (at_keyword("if")) {
      advance();
      s.kind = Stmt::Kind::If;
      expect(Token::Kind::LParen, "'('");
      s.cond = parse_cond();
      expect(Token::Kind::RParen, "')'");
      s.block = parse_block();
      if (at_keyword("else")) {
        advance();
        s.else_block = parse_block();
      }
      return s;
    }
    if (at_keyword("while")) {
      advance();
      s.kind = Stmt::Kind::While;
      expect(Token::Kind::LParen, "'('");
      s.cond = parse_cond();
      expect(Token::Kind::RParen, "')'");
      s.block = parse_block();
      return s;
    }
    if (at_keyword("try")) {
      advance();
      s.kind = Stmt::Kind::Try;
      s.block = parse_block();
      if (!at_keyword("catch")) fail("expected 'catch' after try block");
      while (!failed_ && at_keyword("catch")) {
        advance();
        Stmt::Catch c;
        expect(Token::Kind::LParen, "'('");
        c.type = expect_name("exception type");
        c.var = expect_name("catch variable");
        expect(Token::Kind::RParen, "')'");
        c.block = parse_block();
        s.catches.push_back(std::move(c));
      }
      return s;
    }
    if (at_keyword("return")) {
      advance();
      s.kind = Stmt::Kind::Return;
      expect(Token::Kind::Semi, "';'");
      return s;
    }
    if (at_keyword("new")) {
      s.kind = Stmt::Kind::CallStmt;
      s.expr = parse_call_expr();
      expect(Token::Kind::Semi, "';'");
      return s;
    }
    if (at(Token::Kind::Ident)) {
      // Either "TYPE name = expr ;" or "recv.m(args) ;"
      if (tokens_[pos_ + 1 < tokens_.size() ? pos_ + 1 : pos_].kind == Token::Kind::Dot) {
        s.kind = Stmt::Kind::CallStmt;
        s.expr = parse_call_expr();
        expect(Token::Kind::Semi, "';'");
        return s;
      }
      s.kind = Stmt::Kind::VarDecl;
      s.decl_type = expect_name("type name");
      s.decl_name = expect_name("variable name");
      expect(Token::Kind::Assign, "'='");
      s.expr = parse_expr();
      expect(Token::Kind::Semi, "';'");
      return s;
    }
    fail("expected statement");
    return s;
  }

  Expr parse_call_expr() {
    Expr e;
    e.line = cur().line;
    e.col = cur().col;
    if (at_keyword("new")) {
      advance();
      e.kind = Expr::Kind::New;
      e.type_name = expect_name("type name");
      parse_args(e.args);
      return e;
    }
    e.kind = Expr::Kind::MethodCall;
    e.receiver = expect_name("receiver variable");
    expect(Token::Kind::Dot, "'.'");
    e.method = expect_name("method name");
    parse_args(e.args);
    return e;
  }

  Expr parse_expr() {
    if (at_keyword("new") ||
        (at(Token::Kind::Ident) && !is_reserved(cur().text) &&
         tokens_[pos_ + 1 < tokens_.size() ? pos_ + 1 : pos_].kind == Token::Kind::Dot)) {
      return parse_call_expr();
    }
    return parse_atom();
  }

  // literal or variable reference
  Expr parse_atom() {
    Expr e;
    e.line = cur().line;
    e.col = cur().col;
    if (at(Token::Kind::Int)) {
      e.kind = Expr::Kind::Literal;
      e.lit = Expr::Lit::Int;
      e.int_value = advance().int_value;
      return e;
    }
    if (at(Token::Kind::Str)) {
      e.kind = Expr::Kind::Literal;
      e.lit = Expr::Lit::Str;
      e.str_value = advance().text;
      return e;
    }
    if (at_keyword("true") || at_keyword("false")) {
      e.kind = Expr::Kind::Literal;
      e.lit = Expr::Lit::Bool;
      e.bool_value = advance().text == "true";
      return e;
    }
    if (at_keyword("null")) {
      advance();
      e.kind = Expr::Kind::Literal;
      e.lit = Expr::Lit::Null;
      return e;
    }
    if (at(Token::Kind::Ident) && !is_reserved(cur().text)) {
      e.kind = Expr::Kind::VarRef;
      e.var_name = advance().text;
      return e;
    }
    fail("expected literal or variable");
    return e;
  }

  void parse_args(std::vector<Expr>& args) {
    expect(Token::Kind::LParen, "'('");
    if (!failed_ && !at(Token::Kind::RParen)) {
      args.push_back(parse_atom());
      while (!failed_ && at(Token::Kind::Comma)) {
        advance();
        args.push_back(parse_atom());
      }
    }
    expect(Token::Kind::RParen, "')'");
  }

  Cond parse_cond() {
    Cond c;
    c.line = cur().line;
    c.col = cur().col;
    c.subject = expect_name("condition variable");
    if (at(Token::Kind::Dot)) {
      advance();
      c.kind = Cond::Kind::StateCall;
      c.method = expect_name("method name");
      expect(Token::Kind::LParen, "'('");
      expect(Token::Kind::RParen, "')'");
      return c;
    }
    if (at(Token::Kind::EqEq)) {
      c.negated = false;
      advance();
    } else if (at(Token::Kind::NotEq)) {
      c.negated = true;
      advance();
    } else {
      fail("expected '==', '!=' or '.' in condition");
      return c;
    }
    if (at_keyword("null")) {
      advance();
      c.kind = Cond::Kind::CompareNull;
      return c;
    }
    c.kind = Cond::Kind::CompareLiteral;
    c.literal = parse_atom();
    if (!failed_ && c.literal.kind != Expr::Kind::Literal) {
      fail("conditions compare against literals");
    }
    return c;
  }

  std::vector<Token> tokens_;
  std::vector<Diagnostic>& diagnostics_;
  std::size_t pos_ = 0;
  bool failed_ = false;
  int depth_ = 0;
};

}  // namespace

ParseResult parse(const std::string& text, const std::string& path) {
  ParseResult result;
  Lexer lexer(text);
  std::vector<Token> tokens = lexer.run(result.diagnostics);
  if (!result.diagnostics.empty()) return result;
  Parser parser(std::move(tokens), result.diagnostics);
  SourceUnit unit = parser.run(path);
  if (parser.failed() || !result.diagnostics.empty()) return result;
  result.unit = std::move(unit);
  return result;
}

// ---------------------------------------------------------------------------
// Lowering
// ---------------------------------------------------------------------------

namespace {

class Lowerer {
 public:
  explicit Lowerer(const std::string& path) : path_(path) {}

  UsageSequence run(const MethodDecl& method) {
    UsageSequence seq;
    seq.source_id = path_ + "#" + method.name;
    env_.clear();
    events_ = &seq.events;
    lower_block(method.body);
    return seq;
  }

 private:
  std::string resolve(const std::string& var, int line, int col) const {
    auto it = env_.find(var);
    if (it == env_.end()) {
      throw LowerError("unknown variable '" + var + "'", line, col);
    }
    return it->second;
  }

  CallArg lower_arg(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Literal:
        switch (e.lit) {
          case Expr::Lit::Int:
            return CallArg::of(ArgAbstraction::int_lit(e.int_value));
          case Expr::Lit::Str:
            return CallArg::of(ArgAbstraction::str_lit(e.str_value));
          case Expr::Lit::Bool:
            return CallArg::of(ArgAbstraction::bool_lit(e.bool_value));
          case Expr::Lit::Null:
            return CallArg::of(ArgAbstraction::null_lit());
        }
        break;
      case Expr::Kind::VarRef:
        return CallArg::var(resolve(e.var_name, e.line, e.col), e.var_name);
      default:
        break;
    }
    throw LowerError("unsupported argument expression", e.line, e.col);
  }

  // Lowers a call expression into a Call event with the given result binding.
  void lower_call(const Expr& e, const std::string& result_var) {
    CallEvent c;
    if (e.kind == Expr::Kind::New) {
      c.id = ApiMethodId{e.type_name, "<init>", std::uint32_t(e.args.size())};
    } else {
      c.id = ApiMethodId{resolve(e.receiver, e.line, e.col), e.method,
                         std::uint32_t(e.args.size())};
      c.receiver_var = e.receiver;
    }
    for (const Expr& a : e.args) c.args.push_back(lower_arg(a));
    c.result_var = result_var;
    events_->emplace_back(std::move(c));
  }

  GuardOpenEvent lower_cond(const Cond& cond) {
    GuardOpenEvent g;
    g.subject = cond.subject;
    switch (cond.kind) {
      case Cond::Kind::CompareNull:
        g.kind = GuardKind::null_check();
        break;
      case Cond::Kind::CompareLiteral:
        g.kind = GuardKind::comparison_to_constant();
        break;
      case Cond::Kind::StateCall: {
        ApiMethodId id{resolve(cond.subject, cond.line, cond.col), cond.method, 0};
        // the state-check call itself is an observable call event
        CallEvent c;
        c.id = id;
        c.receiver_var = cond.subject;
        events_->emplace_back(std::move(c));
        g.kind = GuardKind::state_check(id);
        break;
      }
    }
    return g;
  }

  void lower_block(const std::vector<Stmt>& stmts) {
    for (const Stmt& s : stmts) {
      switch (s.kind) {
        case Stmt::Kind::VarDecl: {
          const Expr& init = *s.expr;
          if (init.kind == Expr::Kind::New || init.kind == Expr::Kind::MethodCall) {
            lower_call(init, s.decl_name);
          }
          env_[s.decl_name] = s.decl_type;
          break;
        }
        case Stmt::Kind::CallStmt:
          lower_call(*s.expr, "");
          break;
        case Stmt::Kind::If:
        case Stmt::Kind::While: {
          GuardOpenEvent g = lower_cond(*s.cond);
          events_->emplace_back(std::move(g));
          lower_block(s.block);
          events_->emplace_back(GuardCloseEvent{});
          lower_block(s.else_block);
          break;
        }
        case Stmt::Kind::Try: {
          TryOpenEvent t;
          for (const Stmt::Catch& c : s.catches) t.caught.push_back(c.type);
          events_->emplace_back(std::move(t));
          lower_block(s.block);
          events_->emplace_back(TryCloseEvent{});
          for (const Stmt::Catch& c : s.catches) {
            env_[c.var] = c.type;
            lower_block(c.block);
          }
          break;
        }
        case Stmt::Kind::Return:
          break;
      }
    }
  }

  std::string path_;
  std::map<std::string, std::string> env_;
  std::vector<UsageEvent>* events_ = nullptr;
};

}  // namespace

std::vector<UsageSequence> lower(const SourceUnit& unit) {
  std::vector<UsageSequence> out;
  Lowerer lowerer(unit.path);
  for (const MethodDecl& m : unit.methods) out.push_back(lowerer.run(m));
  return out;
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

std::string escape_str(const std::string& raw) {
  std::string out;
  for (char c : raw) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c); break;
    }
  }
  return out;
}

std::string render_arg(const CallArg& a) {
  const ArgAbstraction& abs = a.abstraction;
  switch (abs.kind) {
    case ArgAbstraction::Kind::Null:
      return "null";
    case ArgAbstraction::Kind::Int:
      switch (abs.bucket) {
        case ArgAbstraction::IntBucket::Neg: return "-1";
        case ArgAbstraction::IntBucket::Zero: return "0";
        case ArgAbstraction::IntBucket::Pos: return "1";
      }
      return "0";
    case ArgAbstraction::Kind::Str:
      return "\"" + escape_str(abs.text) + "\"";
    case ArgAbstraction::Kind::Bool:
      return abs.bool_value ? "true" : "false";
    case ArgAbstraction::Kind::Var:
      return a.var_name;
    case ArgAbstraction::Kind::Call:
      // call-result abstractions have no expression form here; degrade to null
      return "null";
  }
  return "null";
}

class Renderer {
 public:
  explicit Renderer(const UsageSequence& seq) : seq_(seq) {}

  std::string run() {
    collect_type_needs();
    std::string name = "m";
    auto hash = seq_.source_id.rfind('#');
    if (hash != std::string::npos && is_identifier(seq_.source_id.substr(hash + 1))) {
      name = seq_.source_id.substr(hash + 1);
    }
    line("void " + name + "() {");
    indent_ = 1;
    for (std::size_t i = 0; i < seq_.events.size(); ++i) i = render_event(i);
    // close any scopes left open by an unbalanced sequence
    while (indent_ > 1) {
      --indent_;
      line("}");
    }
    indent_ = 0;
    line("}");
    return out_.str();
  }

 private:
  void collect_type_needs() {
    for (const UsageEvent& e : seq_.events) {
      const CallEvent* c = as_call(e);
      if (!c) continue;
      if (!c->receiver_var.empty() && !needs_.count(c->receiver_var)) {
        needs_[c->receiver_var] = c->id.receiver_type;
      }
      for (const CallArg& a : c->args) {
        if (a.abstraction.kind == ArgAbstraction::Kind::Var && !a.var_name.empty() &&
            !needs_.count(a.var_name)) {
          needs_[a.var_name] = a.abstraction.text;
        }
      }
    }
  }

  void line(const std::string& text) {
    for (int i = 0; i < indent_; ++i) out_ << "  ";
    out_ << text << "\n";
  }

  // Emits "T v = null;" when v is unbound or bound to a different type.
  void ensure_var(const std::string& var, const std::string& type) {
    if (var.empty()) return;
    auto it = bound_.find(var);
    if (it != bound_.end() && it->second == type) return;
    line(type + " " + var + " = null;");
    bound_[var] = type;
  }

  std::string call_expr_text(const CallEvent& c) {
    std::string args;
    for (std::size_t i = 0; i < c.args.size(); ++i) {
      if (i) args += ", ";
      args += render_arg(c.args[i]);
    }
    if (c.id.is_constructor()) return "new " + c.id.receiver_type + "(" + args + ")";
    std::string recv = c.receiver_var.empty() ? synth_receiver(c.id.receiver_type) : c.receiver_var;
    return recv + "." + c.id.method_name + "(" + args + ")";
  }

  // Receiver-less non-constructor calls have no direct syntax; route them
  // through a synthesized null receiver of the right type.
  std::string synth_receiver(const std::string& type) {
    std::string name = "_x" + std::to_string(synth_counter_++);
    ensure_var(name, type);
    return name;
  }

  void declare_call_vars(const CallEvent& c) {
    if (!c.receiver_var.empty()) ensure_var(c.receiver_var, c.id.receiver_type);
    for (const CallArg& a : c.args) {
      if (a.abstraction.kind == ArgAbstraction::Kind::Var && !a.var_name.empty()) {
        ensure_var(a.var_name, a.abstraction.text);
      }
    }
  }

  std::string result_type(const CallEvent& c) {
    if (c.id.is_constructor()) return c.id.receiver_type;
    auto it = needs_.find(c.result_var);
    return it != needs_.end() ? it->second : "int";
  }

  // Renders the event at index i; returns the index of the last event consumed.
  std::size_t render_event(std::size_t i) {
    const UsageEvent& e = seq_.events[i];
    if (const CallEvent* c = as_call(e)) {
      // fused state-check: "if (recv.m()) {" covers the call and the guard
      if (i + 1 < seq_.events.size() && c->args.empty() && c->result_var.empty() &&
          !c->receiver_var.empty()) {
        const auto* g = std::get_if<GuardOpenEvent>(&seq_.events[i + 1]);
        if (g && g->kind.kind == GuardKind::Kind::StateCheckCall &&
            g->kind.check_call == c->id && g->subject == c->receiver_var) {
          ensure_var(c->receiver_var, c->id.receiver_type);
          line("if (" + c->receiver_var + "." + c->id.method_name + "()) {");
          ++indent_;
          return i + 1;
        }
      }
      declare_call_vars(*c);
      std::string expr = call_expr_text(*c);
      if (c->result_var.empty()) {
        line(expr + ";");
      } else {
        std::string type = result_type(*c);
        line(type + " " + c->result_var + " = " + expr + ";");
        bound_[c->result_var] = type;
      }
      return i;
    }
    if (const auto* g = std::get_if<GuardOpenEvent>(&e)) {
      switch (g->kind.kind) {
        case GuardKind::Kind::NullCheck:
          line("if (" + g->subject + " != null) {");
          break;
        case GuardKind::Kind::ComparisonToConstant:
          line("if (" + g->subject + " != 0) {");
          break;
        case GuardKind::Kind::StateCheckCall:
          // bare state-check guard; re-lowering will re-introduce the call
          ensure_var(g->subject, g->kind.check_call->receiver_type);
          line("if (" + g->subject + "." + g->kind.check_call->method_name + "()) {");
          break;
        case GuardKind::Kind::None:
          line("if (" + g->subject + " != null) {");
          break;
      }
      ++indent_;
      return i;
    }
    if (std::holds_alternative<GuardCloseEvent>(e)) {
      if (indent_ > 1) --indent_;
      line("}");
      return i;
    }
    if (const auto* t = std::get_if<TryOpenEvent>(&e)) {
      if (t->caught.empty()) {
        // catch-less try has no syntax; drop the brackets
        skipped_tries_.push_back(true);
        return i;
      }
      skipped_tries_.push_back(false);
      pending_catches_.push_back(t->caught);
      line("try {");
      ++indent_;
      return i;
    }
    // TryClose
    if (!skipped_tries_.empty() && skipped_tries_.back()) {
      skipped_tries_.pop_back();
      return i;
    }
    if (!skipped_tries_.empty()) skipped_tries_.pop_back();
    if (indent_ > 1) --indent_;
    std::vector<std::string> caught;
    if (!pending_catches_.empty()) {
      caught = pending_catches_.back();
      pending_catches_.pop_back();
    }
    for (std::size_t k = 0; k < caught.size(); ++k) {
      std::string var = "_r" + std::to_string(catch_counter_++);
      line(std::string(k == 0 ? "} catch (" : "} catch (") + caught[k] + " " + var + ") {");
      ++indent_;
      --indent_;
    }
    line("}");
    return i;
  }

  const UsageSequence& seq_;
  std::ostringstream out_;
  int indent_ = 0;
  std::map<std::string, std::string> needs_;   // first-use type per variable
  std::map<std::string, std::string> bound_;   // current declared type per variable
  std::vector<std::vector<std::string>> pending_catches_;
  std::vector<bool> skipped_tries_;
  int catch_counter_ = 0;
  int synth_counter_ = 0;
};

}  // namespace

std::string render(const UsageSequence& seq) { return Renderer(seq).run(); }

}  // namespace sam
