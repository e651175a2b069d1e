#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "geode/geopatch.hpp"

namespace geode::plan {

struct Pos {
  int line = 0;
  int col = 0;
};

/// Plan-level failure with a source position. `expected` lists token kinds
/// for syntax errors; `context` carries the raw planner output for
/// extraction failures.
class PlanError : public Error {
public:
  PlanError(Errc code, Pos pos, const std::string& message, std::vector<std::string> expected = {},
            std::string context = {});

  Pos pos() const noexcept { return pos_; }
  const std::vector<std::string>& expected() const noexcept { return expected_; }
  const std::string& context() const noexcept { return context_; }

private:
  Pos pos_;
  std::vector<std::string> expected_;
  std::string context_;
};

/// Runtime failure of one call; keeps the wrapped error's code.
class RuntimeError : public Error {
public:
  RuntimeError(Errc inner, const std::string& expert, Pos pos, const std::string& message);

  Errc inner() const noexcept { return inner_; }
  const std::string& expert() const noexcept { return expert_; }
  Pos pos() const noexcept { return pos_; }

private:
  Errc inner_;
  std::string expert_;
  Pos pos_;
};

// ---- extraction and lexing ------------------------------------------------

/// Plan text from planner output: the first ```geoplan fenced block (any
/// fenced block if none is tagged), else the whole output, reduced to its
/// trailing run of statement-like lines. Smart quotes become plain quotes
/// and zero-width characters are dropped. Idempotent.
std::string extract_plan(const std::string& output);

enum class Tok { ident, string, number, lparen, rparen, comma, equals, newline, end };
const char* to_string(Tok t) noexcept;

struct Token {
  Tok kind;
  std::string text;  // identifier name, decoded string, or number spelling
  Pos pos;
  std::size_t offset = 0;
  std::size_t length = 0;
};

std::vector<Token> lex(const std::string& source);

// ---- AST -------------------------------------------------------------------

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Arg {
  std::optional<std::string> name;
  ExprPtr value;
  Pos pos;
};

struct Expr {
  enum class Kind { call, ref, text, number, boolean };
  Kind kind;
  std::string name;  // callee, referenced identifier, or text literal
  double number = 0;
  bool flag = false;
  std::vector<Arg> args;
  Pos pos;
};

struct Binding {
  std::string name;
  ExprPtr value;
  Pos pos;
};

struct Plan {
  std::vector<Binding> bindings;
  ExprPtr answer;
  ExprPtr salient;
  Pos return_pos;
};

Plan parse(const std::string& source);
std::string print_plan(const Plan& plan);
/// Structural equality, positions ignored.
bool same_structure(const Plan& a, const Plan& b);

// ---- types and registry ------------------------------------------------------

struct Type {
  enum class Kind { patch, number, text, boolean, enumeration, any, typevar };
  Kind kind = Kind::any;
  std::vector<std::string> values;

  static Type patch() { return {Kind::patch, {}}; }
  static Type number() { return {Kind::number, {}}; }
  static Type text() { return {Kind::text, {}}; }
  static Type boolean() { return {Kind::boolean, {}}; }
  static Type any() { return {Kind::any, {}}; }
  static Type typevar() { return {Kind::typevar, {}}; }
  static Type one_of(std::vector<std::string> v) { return {Kind::enumeration, std::move(v)}; }
};

std::string to_string(const Type& t);

using Value = std::variant<double, std::string, bool, GeoPatch>;

std::string type_name(const Value& v);
/// Source-form rendering of a default (e.g. 'patch', 0.5, true).
std::string literal_text(const Value& v);

struct Param {
  std::string name;
  Type type;
  std::optional<Value> fallback;
};

struct ExpertSignature {
  std::string name;
  std::vector<Param> params;
  Type result;
  std::string doc;
  /// Extra positional arguments of type Any are accepted after `params`.
  bool variadic = false;
  /// Grouping used in listings: retrieval, analysis, functional, builtin.
  std::string category = "functional";
};

/// `name(a: Patch, mode: 'patch'|'point' = 'patch') -> Patch`
std::string signature_line(const ExpertSignature& sig);

/// Per-call side channel for implementations.
struct CallContext {
  /// The user query the plan answers.
  std::string query;
  std::optional<double> age_s;
  std::vector<std::string> notes;
};

using ExpertFn = std::function<Value(const std::vector<Value>& args, CallContext& ctx)>;

class Registry {
public:
  struct Entry {
    ExpertSignature sig;
    ExpertFn fn;
  };

  /// Throws precondition on duplicate names or empty enums.
  void add(ExpertSignature sig, ExpertFn fn);
  const Entry* find(const std::string& name) const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  /// Closest registered name by edit distance, if reasonably close.
  std::optional<std::string> suggest(const std::string& name) const;

private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

/// point_value, greater, select, format, describe.
void register_builtins(Registry& registry);

/// Number rendering shared by describe and data_to_text: 4 significant digits.
std::string format_number(double v);

// ---- checking and execution ---------------------------------------------------

struct TypedCall {
  const Registry::Entry* entry = nullptr;
  /// One slot per argument in call order: parameters first (defaults
  /// filled), then variadic extras.
  std::vector<std::variant<ExprPtr, Value>> slots;
};

struct TypedPlan {
  Plan plan;
  std::map<const Expr*, TypedCall> calls;
  std::map<std::string, Type> binding_types;
};

TypedPlan typecheck(const Plan& plan, const Registry& registry);

struct TraceRecord {
  std::string expert;
  int line = 0;
  double duration_ms = 0;
  std::optional<double> age_s;
  /// "ok" or the stable error code.
  std::string outcome;
  std::vector<std::string> notes;
};

struct ExecutionTrace {
  std::vector<TraceRecord> calls;
  double total_ms = 0;
  /// Top-level expression evaluations (bindings + 2 on success).
  std::size_t evaluations = 0;
};

struct ExecutionResult {
  std::string answer;
  GeoPatch salient;
  ExecutionTrace trace;
};

/// Runs the plan. Expert failures surface as RuntimeError(expert_runtime);
/// the partial trace is written to `trace_out` when given.
ExecutionResult execute(const TypedPlan& plan, const std::string& query = {},
                        ExecutionTrace* trace_out = nullptr);

} // namespace geode::plan
