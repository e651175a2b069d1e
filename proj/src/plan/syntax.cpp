#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "geode/plan.hpp"

namespace geode::plan {

namespace {

std::string where(Pos p) { return "line " + std::to_string(p.line) + ", col " + std::to_string(p.col); }

std::string join(const std::vector<std::string>& v, const std::string& sep)
{
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? sep : "") + v[i];
  return out;
}

std::string one_line(std::string s, std::size_t max)
{
  for (auto& c : s)
    if (c == '\n' || c == '\r')
      c = ' ';
  if (s.size() > max)
    s = s.substr(0, max) + "...";
  return s;
}

std::string normalize(const std::string& in)
{
  static const std::vector<std::pair<std::string, std::string>> repl{
      {"\xE2\x80\x9C", "\""}, {"\xE2\x80\x9D", "\""}, {"\xE2\x80\x9E", "\""}, {"\xE2\x80\x9F", "\""},
      {"\xE2\x80\xB3", "\""}, {"\xE2\x80\x98", "'"},  {"\xE2\x80\x99", "'"},  {"\xE2\x80\x9A", "'"},
      {"\xE2\x80\x9B", "'"},  {"\xE2\x80\xB2", "'"},  {"\xE2\x80\x8B", ""},   {"\xE2\x80\x8C", ""},
      {"\xE2\x80\x8D", ""},   {"\xE2\x81\xA0", ""},   {"\xEF\xBB\xBF", ""},   {"\r\n", "\n"},
      {"\r", "\n"},
  };
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size();) {
    bool hit = false;
    for (const auto& [from, to] : repl) {
      if (in.compare(i, from.size(), from) == 0) {
        out += to;
        i += from.size();
        hit = true;
        break;
      }
    }
    if (!hit)
      out += in[i++];
  }
  return out;
}

std::vector<std::string> split_lines(const std::string& s)
{
  std::vector<std::string> lines;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur))
    lines.push_back(cur);
  return lines;
}

std::string trim(const std::string& s)
{
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos)
    return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

bool statement_like(const std::string& raw)
{
  const std::string line = trim(raw);
  if (line.empty() || line[0] == '#')
    return true;
  if (line.rfind("return", 0) == 0 && (line.size() == 6 || !ident_char(line[6])))
    return true;
  if (!ident_start(line[0]))
    return false;
  std::size_t i = 0;
  while (i < line.size() && ident_char(line[i]))
    ++i;
  while (i < line.size() && (line[i] == ' ' || line[i] == '\t'))
    ++i;
  return i < line.size() && line[i] == '=' && (i + 1 == line.size() || line[i + 1] != '=');
}

bool meaningful(const std::string& raw)
{
  const std::string line = trim(raw);
  return !line.empty() && line[0] != '#';
}

// Fence opener: ``` followed by an optional info string.
std::optional<std::string> fence_info(const std::string& raw)
{
  const std::string line = trim(raw);
  if (line.rfind("```", 0) != 0)
    return std::nullopt;
  std::string info = trim(line.substr(3));
  std::transform(info.begin(), info.end(), info.begin(), [](unsigned char c) { return std::tolower(c); });
  return info;
}

std::string trailing_run(const std::vector<std::string>& lines)
{
  std::size_t start = lines.size();
  while (start > 0 && statement_like(lines[start - 1]))
    --start;
  std::size_t end = lines.size();
  while (start < end && trim(lines[start]).empty())
    ++start;
  while (end > start && trim(lines[end - 1]).empty())
    --end;
  std::string out;
  for (std::size_t i = start; i < end; ++i)
    out += lines[i] + (i + 1 < end ? "\n" : "");
  return out;
}

} // namespace

PlanError::PlanError(Errc code, Pos pos, const std::string& message, std::vector<std::string> expected,
                     std::string context)
    : Error(code, (pos.line > 0 ? where(pos) + ": " : std::string()) + message +
                      (expected.empty() ? "" : "; expected " + join(expected, " or "))),
      pos_(pos), expected_(std::move(expected)), context_(std::move(context))
{
}

RuntimeError::RuntimeError(Errc inner, const std::string& expert, Pos pos, const std::string& message)
    : Error(Errc::expert_runtime, "line " + std::to_string(pos.line) + ": " + expert + " failed: " +
                                      errc_code(inner) + ": " + message),
      inner_(inner), expert_(expert), pos_(pos)
{
}

std::string extract_plan(const std::string& output)
{
  const std::vector<std::string> lines = split_lines(normalize(output));

  std::optional<std::vector<std::string>> block;
  for (int pass = 0; pass < 2 && !block; ++pass) {
    for (std::size_t i = 0; i < lines.size() && !block; ++i) {
      const auto info = fence_info(lines[i]);
      if (!info || (pass == 0 && *info != "geoplan"))
        continue;
      std::vector<std::string> body;
      std::size_t j = i + 1;
      while (j < lines.size() && !fence_info(lines[j]))
        body.push_back(lines[j++]);
      if (j < lines.size())
        block = std::move(body);
      i = j;
    }
  }

  const std::string plan = trailing_run(block ? *block : lines);
  const auto plan_lines = split_lines(plan);
  if (std::none_of(plan_lines.begin(), plan_lines.end(), meaningful))
    throw PlanError(Errc::extraction, {}, "no GeoPlan statements in planner output: \"" +
                                              one_line(output, 120) + "\"",
                    {}, output);
  return plan;
}

const char* to_string(Tok t) noexcept
{
  switch (t) {
  case Tok::ident: return "identifier";
  case Tok::string: return "string";
  case Tok::number: return "number";
  case Tok::lparen: return "'('";
  case Tok::rparen: return "')'";
  case Tok::comma: return "','";
  case Tok::equals: return "'='";
  case Tok::newline: return "end of line";
  case Tok::end: return "end of plan";
  }
  return "token";
}

std::vector<Token> lex(const std::string& src)
{
  std::vector<Token> out;
  int line = 1;
  std::size_t line_start = 0;
  std::size_t i = 0;
  auto pos_at = [&](std::size_t at) { return Pos{line, static_cast<int>(at - line_start) + 1}; };
  auto push = [&](Tok k, std::string text, std::size_t start) {
    out.push_back({k, std::move(text), pos_at(start), start, i - start});
  };

  while (i < src.size()) {
    const char c = src[i];
    const std::size_t start = i;
    if (c == ' ' || c == '\t') {
      ++i;
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n')
        ++i;
    } else if (c == '\n') {
      ++i;
      push(Tok::newline, "\n", start);
      ++line;
      line_start = i;
    } else if (c == '(' || c == ')' || c == ',' || c == '=') {
      ++i;
      push(c == '(' ? Tok::lparen : c == ')' ? Tok::rparen : c == ',' ? Tok::comma : Tok::equals,
           std::string(1, c), start);
    } else if (ident_start(c)) {
      while (i < src.size() && ident_char(src[i]))
        ++i;
      push(Tok::ident, src.substr(start, i - start), start);
    } else if (c == '"' || c == '\'') {
      std::string text;
      ++i;
      for (;;) {
        if (i >= src.size() || src[i] == '\n')
          throw PlanError(Errc::bad_literal, pos_at(start), "unterminated string literal");
        const char d = src[i++];
        if (d == c)
          break;
        if (d != '\\') {
          text += d;
          continue;
        }
        if (i >= src.size())
          throw PlanError(Errc::bad_literal, pos_at(start), "unterminated string literal");
        const char e = src[i++];
        switch (e) {
        case '\\': text += '\\'; break;
        case '"': text += '"'; break;
        case '\'': text += '\''; break;
        case 'n': text += '\n'; break;
        case 't': text += '\t'; break;
        default:
          throw PlanError(Errc::bad_literal, pos_at(i - 2),
                          std::string("unknown escape '\\") + e + "' in string literal");
        }
      }
      push(Tok::string, std::move(text), start);
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' ||
               ((c == '-' || c == '+') && i + 1 < src.size() &&
                (std::isdigit(static_cast<unsigned char>(src[i + 1])) || src[i + 1] == '.'))) {
      if (c == '-' || c == '+')
        ++i;
      const std::size_t digits = i;
      while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i])))
        ++i;
      bool ok = i > digits;
      if (i < src.size() && src[i] == '.') {
        ++i;
        const std::size_t frac = i;
        while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i])))
          ++i;
        ok = ok && i > frac;
      }
      while (i < src.size() && (ident_char(src[i]) || src[i] == '.')) {
        ok = false;
        ++i;
      }
      const std::string text = src.substr(start, i - start);
      if (!ok)
        throw PlanError(Errc::bad_literal, pos_at(start), "malformed number '" + text + "'");
      push(Tok::number, text, start);
    } else {
      std::string ch(1, c);
      // Keep multi-byte characters whole in the message.
      while (i + ch.size() < src.size() && (static_cast<unsigned char>(src[i + ch.size()]) & 0xC0) == 0x80)
        ch += src[i + ch.size()];
      throw PlanError(Errc::syntax, pos_at(start), "unexpected character '" + ch + "'");
    }
  }
  out.push_back({Tok::end, "", pos_at(i), i, 0});
  return out;
}

namespace {

class Parser {
public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  Plan plan()
  {
    Plan p;
    std::map<std::string, int> bound;
    skip_newlines();
    while (!at(Tok::end)) {
      const Token& head = peek();
      if (head.kind == Tok::ident && head.text == "return") {
        p.return_pos = head.pos;
        next();
        p.answer = expr();
        if (!at(Tok::comma)) {
          if (at(Tok::newline) || at(Tok::end))
            throw PlanError(Errc::return_arity, p.return_pos,
                            "return needs two values: <text answer>, <salient patch>");
          fail({to_string(Tok::comma)});
        }
        next();
        p.salient = expr();
        if (at(Tok::comma))
          throw PlanError(Errc::return_arity, p.return_pos,
                          "return takes exactly two values: <text answer>, <salient patch>");
        end_of_statement();
        skip_newlines();
        if (!at(Tok::end))
          throw PlanError(Errc::syntax, peek().pos, "statement after return", {to_string(Tok::end)});
        return p;
      }
      if (head.kind != Tok::ident)
        fail({"identifier", "'return'"});
      if (head.text == "true" || head.text == "false")
        throw PlanError(Errc::syntax, head.pos, "cannot bind to '" + head.text + "'");
      Binding b{head.text, nullptr, head.pos};
      next();
      if (!at(Tok::equals))
        fail({to_string(Tok::equals)});
      next();
      b.value = expr();
      end_of_statement();
      if (auto it = bound.find(b.name); it != bound.end())
        throw PlanError(Errc::ssa_rebind, b.pos,
                        "'" + b.name + "' is already bound on line " + std::to_string(it->second));
      bound[b.name] = b.pos.line;
      p.bindings.push_back(std::move(b));
      skip_newlines();
    }
    throw PlanError(Errc::missing_return, peek().pos,
                    "plan has no return statement; end with: return <text answer>, <salient patch>");
  }

private:
  const Token& peek(std::size_t k = 0) const { return t_[std::min(i_ + k, t_.size() - 1)]; }
  bool at(Tok k) const { return peek().kind == k; }
  void next()
  {
    if (i_ + 1 < t_.size())
      ++i_;
  }
  void skip_newlines()
  {
    while (at(Tok::newline))
      next();
  }
  [[noreturn]] void fail(std::vector<std::string> expected, const std::string& what = {}) const
  {
    const Token& t = peek();
    std::string found = t.kind == Tok::ident || t.kind == Tok::number ? "'" + t.text + "'"
                        : t.kind == Tok::string                         ? "string"
                                                                        : to_string(t.kind);
    throw PlanError(Errc::syntax, t.pos, (what.empty() ? "unexpected " : what + ": found ") + found,
                    std::move(expected));
  }
  void end_of_statement()
  {
    if (!at(Tok::newline) && !at(Tok::end))
      fail({to_string(Tok::newline)});
  }

  ExprPtr expr()
  {
    const Token& t = peek();
    auto e = std::make_shared<Expr>();
    e->pos = t.pos;
    switch (t.kind) {
    case Tok::string:
      e->kind = Expr::Kind::text;
      e->name = t.text;
      next();
      return e;
    case Tok::number:
      e->kind = Expr::Kind::number;
      e->number = std::stod(t.text);
      next();
      return e;
    case Tok::ident:
      if (t.text == "true" || t.text == "false") {
        e->kind = Expr::Kind::boolean;
        e->flag = t.text == "true";
        next();
        return e;
      }
      if (t.text == "return")
        fail({"expression"});
      e->name = t.text;
      next();
      if (!at(Tok::lparen)) {
        e->kind = Expr::Kind::ref;
        return e;
      }
      e->kind = Expr::Kind::call;
      call_args(*e);
      return e;
    default:
      fail({"expression"});
    }
  }

  void call_args(Expr& call)
  {
    const std::string unclosed = "unclosed call to '" + call.name + "' opened at " + where(call.pos);
    next(); // (
    if (at(Tok::rparen)) {
      next();
      return;
    }
    bool named_seen = false;
    for (;;) {
      Arg a;
      a.pos = peek().pos;
      if (at(Tok::ident) && peek(1).kind == Tok::equals) {
        a.name = peek().text;
        next();
        next();
        named_seen = true;
      } else if (named_seen) {
        throw PlanError(Errc::syntax, a.pos, "positional argument after named argument in call to '" +
                                                 call.name + "'");
      }
      if (at(Tok::newline) || at(Tok::end))
        fail({"expression", to_string(Tok::rparen)}, unclosed);
      a.value = expr();
      call.args.push_back(std::move(a));
      if (at(Tok::comma)) {
        next();
        continue;
      }
      if (at(Tok::rparen)) {
        next();
        return;
      }
      if (at(Tok::newline) || at(Tok::end))
        fail({to_string(Tok::comma), to_string(Tok::rparen)}, unclosed);
      fail({to_string(Tok::comma), to_string(Tok::rparen)});
    }
  }

  std::vector<Token> t_;
  std::size_t i_ = 0;
};

std::string quote(const std::string& s)
{
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
    case '\\': out += "\\\\"; break;
    case '"': out += "\\\""; break;
    case '\n': out += "\\n"; break;
    case '\t': out += "\\t"; break;
    default: out += c;
    }
  }
  return out + "\"";
}

std::string number_text(double v)
{
  // Shortest fixed-point spelling that reads back to the same double.
  std::vector<char> buf(400);
  for (int prec = 0; prec <= 340; ++prec) {
    std::snprintf(buf.data(), buf.size(), "%.*f", prec, v);
    if (std::stod(buf.data()) == v)
      break;
  }
  std::string s = buf.data();
  return s == "-0" ? "0" : s;
}

std::string print_expr(const Expr& e)
{
  switch (e.kind) {
  case Expr::Kind::text: return quote(e.name);
  case Expr::Kind::number: return number_text(e.number);
  case Expr::Kind::boolean: return e.flag ? "true" : "false";
  case Expr::Kind::ref: return e.name;
  case Expr::Kind::call: {
    std::string out = e.name + "(";
    for (std::size_t i = 0; i < e.args.size(); ++i) {
      if (i)
        out += ", ";
      if (e.args[i].name)
        out += *e.args[i].name + "=";
      out += print_expr(*e.args[i].value);
    }
    return out + ")";
  }
  }
  return "";
}

bool same_expr(const Expr& a, const Expr& b)
{
  if (a.kind != b.kind || a.name != b.name || a.args.size() != b.args.size())
    return false;
  if (a.kind == Expr::Kind::number && a.number != b.number)
    return false;
  if (a.kind == Expr::Kind::boolean && a.flag != b.flag)
    return false;
  for (std::size_t i = 0; i < a.args.size(); ++i)
    if (a.args[i].name != b.args[i].name || !same_expr(*a.args[i].value, *b.args[i].value))
      return false;
  return true;
}

} // namespace

Plan parse(const std::string& source) { return Parser(lex(source)).plan(); }

std::string print_plan(const Plan& plan)
{
  std::string out;
  for (const auto& b : plan.bindings)
    out += b.name + " = " + print_expr(*b.value) + "\n";
  out += "return " + print_expr(*plan.answer) + ", " + print_expr(*plan.salient) + "\n";
  return out;
}

bool same_structure(const Plan& a, const Plan& b)
{
  if (a.bindings.size() != b.bindings.size())
    return false;
  for (std::size_t i = 0; i < a.bindings.size(); ++i)
    if (a.bindings[i].name != b.bindings[i].name || !same_expr(*a.bindings[i].value, *b.bindings[i].value))
      return false;
  return same_expr(*a.answer, *b.answer) && same_expr(*a.salient, *b.salient);
}

} // namespace geode::plan
