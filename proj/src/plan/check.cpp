#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "geode/plan.hpp"

namespace geode::plan {

namespace {

std::string quoted_list(const std::vector<std::string>& v)
{
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? ", '" : "'") + v[i] + "'";
  return out;
}

std::size_t edit_distance(const std::string& a, const std::string& b)
{
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j)
    row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t placeholders(const std::string& s)
{
  std::size_t n = 0;
  for (std::size_t at = s.find("{}"); at != std::string::npos; at = s.find("{}", at + 2))
    ++n;
  return n;
}

bool same_type(const Type& a, const Type& b)
{
  auto norm = [](Type::Kind k) { return k == Type::Kind::enumeration ? Type::Kind::text : k; };
  return norm(a.kind) == norm(b.kind);
}

} // namespace

std::string to_string(const Type& t)
{
  switch (t.kind) {
  case Type::Kind::patch: return "Patch";
  case Type::Kind::number: return "Number";
  case Type::Kind::text: return "Text";
  case Type::Kind::boolean: return "Bool";
  case Type::Kind::any: return "Any";
  case Type::Kind::typevar: return "T";
  case Type::Kind::enumeration: {
    std::string out;
    for (std::size_t i = 0; i < t.values.size(); ++i)
      out += (i ? "|'" : "'") + t.values[i] + "'";
    return out;
  }
  }
  return "Any";
}

std::string type_name(const Value& v)
{
  switch (v.index()) {
  case 0: return "Number";
  case 1: return "Text";
  case 2: return "Bool";
  default: return "Patch";
  }
}

std::string format_number(double v)
{
  if (std::isnan(v))
    return "missing";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  std::string s = buf;
  return s == "-0" ? "0" : s;
}

std::string literal_text(const Value& v)
{
  if (const auto* d = std::get_if<double>(&v))
    return format_number(*d);
  if (const auto* s = std::get_if<std::string>(&v))
    return "'" + *s + "'";
  if (const auto* b = std::get_if<bool>(&v))
    return *b ? "true" : "false";
  return std::get<GeoPatch>(v).name();
}

std::string signature_line(const ExpertSignature& sig)
{
  std::string out = sig.name + "(";
  for (std::size_t i = 0; i < sig.params.size(); ++i) {
    const Param& p = sig.params[i];
    out += (i ? ", " : "") + p.name + ": " + to_string(p.type);
    if (p.fallback)
      out += " = " + literal_text(*p.fallback);
  }
  if (sig.variadic)
    out += std::string(sig.params.empty() ? "" : ", ") + "...";
  return out + ") -> " + to_string(sig.result);
}

void Registry::add(ExpertSignature sig, ExpertFn fn)
{
  if (index_.count(sig.name))
    throw Error(Errc::precondition, "expert '" + sig.name + "' registered twice");
  for (const auto& p : sig.params)
    if (p.type.kind == Type::Kind::enumeration && p.type.values.empty())
      throw Error(Errc::precondition, "empty enum for " + sig.name + "." + p.name);
  index_[sig.name] = entries_.size();
  entries_.push_back({std::move(sig), std::move(fn)});
}

const Registry::Entry* Registry::find(const std::string& name) const
{
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

std::optional<std::string> Registry::suggest(const std::string& name) const
{
  std::optional<std::string> best;
  std::size_t best_d = std::max<std::size_t>(3, name.size() / 3) + 1;
  for (const auto& e : entries_) {
    const std::size_t d = edit_distance(name, e.sig.name);
    if (d < best_d) {
      best_d = d;
      best = e.sig.name;
    }
  }
  return best;
}

void register_builtins(Registry& r)
{
  r.add({"point_value", {{"patch", Type::patch(), {}}}, Type::number(),
         "Value of the first data point of a patch.", false, "builtin"},
        [](const std::vector<Value>& a, CallContext&) -> Value {
          const auto& pts = get_data_points(std::get<GeoPatch>(a[0]));
          for (const auto& p : pts)
            if (p.value)
              return *p.value;
          throw Error(Errc::missing_value, "patch '" + std::get<GeoPatch>(a[0]).name() +
                                               "' has no data point with a value");
        });
  r.add({"greater", {{"a", Type::number(), {}}, {"b", Type::number(), {}}}, Type::boolean(),
         "True when a > b.", false, "builtin"},
        [](const std::vector<Value>& a, CallContext&) -> Value {
          return std::get<double>(a[0]) > std::get<double>(a[1]);
        });
  r.add({"select", {{"condition", Type::boolean(), {}}, {"if_true", Type::typevar(), {}}, {"if_false", Type::typevar(), {}}},
         Type::typevar(), "if_true when condition holds, else if_false.", false, "builtin"},
        [](const std::vector<Value>& a, CallContext&) -> Value {
          return std::get<bool>(a[0]) ? a[1] : a[2];
        });
  r.add({"format", {{"template", Type::text(), {}}}, Type::text(),
         "Replaces each {} in template with the next argument, rendered as by describe.", true, "builtin"},
        [](const std::vector<Value>& a, CallContext&) -> Value {
          const std::string& t = std::get<std::string>(a[0]);
          if (placeholders(t) != a.size() - 1)
            throw Error(Errc::format_error, "template has " + std::to_string(placeholders(t)) +
                                                " placeholders but " + std::to_string(a.size() - 1) +
                                                " arguments were given");
          std::string out;
          std::size_t k = 1, at = 0;
          for (std::size_t hit = t.find("{}"); hit != std::string::npos; hit = t.find("{}", at)) {
            out += t.substr(at, hit - at);
            const Value& v = a[k++];
            if (const auto* s = std::get_if<std::string>(&v))
              out += *s;
            else if (const auto* d = std::get_if<double>(&v))
              out += format_number(*d);
            else if (const auto* b = std::get_if<bool>(&v))
              out += *b ? "true" : "false";
            else
              out += std::get<GeoPatch>(v).name();
            at = hit + 2;
          }
          return out + t.substr(at);
        });
  r.add({"describe", {{"value", Type::any(), {}}}, Type::text(),
         "Short text form: numbers to 4 significant digits, patches as '<name> patch (<kind>)'.", false,
         "builtin"},
        [](const std::vector<Value>& a, CallContext&) -> Value {
          const Value& v = a[0];
          if (const auto* s = std::get_if<std::string>(&v))
            return *s;
          if (const auto* d = std::get_if<double>(&v))
            return format_number(*d);
          if (const auto* b = std::get_if<bool>(&v))
            return std::string(*b ? "true" : "false");
          const auto& p = std::get<GeoPatch>(v);
          return p.name() + " patch (" + to_string(p.ptype()) + ")";
        });
}

namespace {

class Checker {
public:
  Checker(const Plan& plan, const Registry& reg) : reg_(reg) { out_.plan = plan; }

  TypedPlan run()
  {
    const Plan& p = out_.plan;
    for (const auto& b : p.bindings)
      later_[b.name] = b.pos.line;
    for (const auto& b : p.bindings) {
      const Type t = check(*b.value);
      out_.binding_types[b.name] = t;
      types_[b.name] = t;
      if (b.value->kind == Expr::Kind::text)
        consts_[b.name] = b.value->name;
    }
    const Type a = check(*p.answer);
    const Type s = check(*p.salient);
    if (a.kind != Type::Kind::text || s.kind != Type::Kind::patch) {
      const bool text_ok = a.kind == Type::Kind::text;
      throw PlanError(Errc::return_type, text_ok ? p.salient->pos : p.answer->pos,
                      "return must be (Text, Patch), got (" + to_string(a) + ", " + to_string(s) + ")");
    }
    return std::move(out_);
  }

private:
  Type check(const Expr& e)
  {
    switch (e.kind) {
    case Expr::Kind::text: return Type::text();
    case Expr::Kind::number: return Type::number();
    case Expr::Kind::boolean: return Type::boolean();
    case Expr::Kind::ref: {
      auto it = types_.find(e.name);
      if (it != types_.end())
        return it->second;
      auto later = later_.find(e.name);
      if (later != later_.end())
        throw PlanError(Errc::unbound_reference, e.pos,
                        "'" + e.name + "' is used before it is bound on line " + std::to_string(later->second));
      throw PlanError(Errc::unbound_reference, e.pos, "'" + e.name + "' is not bound");
    }
    case Expr::Kind::call: return check_call(e);
    }
    return Type::any();
  }

  // Literal text value of an argument, following text-literal bindings.
  std::optional<std::string> constant(const Expr& e) const
  {
    if (e.kind == Expr::Kind::text)
      return e.name;
    if (e.kind == Expr::Kind::ref)
      if (auto it = consts_.find(e.name); it != consts_.end())
        return it->second;
    return std::nullopt;
  }

  Type check_call(const Expr& e)
  {
    const Registry::Entry* entry = reg_.find(e.name);
    if (!entry) {
      const auto hint = reg_.suggest(e.name);
      throw PlanError(Errc::unknown_expert, e.pos,
                      "unknown expert '" + e.name + "'" + (hint ? "; did you mean '" + *hint + "'?" : ""));
    }
    const ExpertSignature& sig = entry->sig;
    const std::size_t np = sig.params.size();
    std::vector<const Arg*> bound(np, nullptr);
    std::vector<const Arg*> extras;
    std::size_t positional = 0;
    for (const auto& a : e.args) {
      if (!a.name) {
        if (positional < np)
          bound[positional] = &a;
        else if (sig.variadic)
          extras.push_back(&a);
        else
          throw PlanError(Errc::arity, a.pos, sig.name + " takes at most " + std::to_string(np) +
                                                  " argument" + (np == 1 ? "" : "s") + ", got " +
                                                  std::to_string(e.args.size()));
        ++positional;
        continue;
      }
      auto it = std::find_if(sig.params.begin(), sig.params.end(),
                             [&](const Param& p) { return p.name == *a.name; });
      if (it == sig.params.end())
        throw PlanError(Errc::arity, a.pos, sig.name + " has no parameter '" + *a.name + "'");
      const std::size_t k = static_cast<std::size_t>(it - sig.params.begin());
      if (bound[k])
        throw PlanError(Errc::arity, a.pos, "parameter '" + *a.name + "' of " + sig.name + " given twice");
      bound[k] = &a;
    }

    TypedCall call{entry, {}};
    std::optional<Type> tv;
    for (std::size_t k = 0; k < np; ++k) {
      const Param& p = sig.params[k];
      if (!bound[k]) {
        if (!p.fallback)
          throw PlanError(Errc::arity, e.pos, sig.name + " is missing required parameter '" + p.name + "'");
        call.slots.emplace_back(*p.fallback);
        continue;
      }
      const Expr& arg = *bound[k]->value;
      const Type got = check(arg);
      const std::string what = "parameter '" + p.name + "' of " + sig.name;
      switch (p.type.kind) {
      case Type::Kind::any: break;
      case Type::Kind::typevar:
        if (!tv)
          tv = got;
        else if (!same_type(*tv, got))
          throw PlanError(Errc::type_mismatch, arg.pos,
                          what + " must match the other branch (" + to_string(*tv) + "), got " + to_string(got));
        break;
      case Type::Kind::enumeration: {
        if (got.kind != Type::Kind::text)
          throw PlanError(Errc::type_mismatch, arg.pos,
                          what + " expects one of " + quoted_list(p.type.values) + ", got " + to_string(got));
        const auto lit = constant(arg);
        if (!lit)
          throw PlanError(Errc::type_mismatch, arg.pos,
                          what + " needs a literal, one of " + quoted_list(p.type.values));
        if (std::find(p.type.values.begin(), p.type.values.end(), *lit) == p.type.values.end())
          throw PlanError(Errc::enum_violation, arg.pos,
                          what + " must be one of " + quoted_list(p.type.values) + "; got '" + *lit + "'");
        break;
      }
      default:
        if (!same_type(p.type, got))
          throw PlanError(Errc::type_mismatch, arg.pos,
                          what + " expects " + to_string(p.type) + ", got " + to_string(got));
      }
      call.slots.emplace_back(bound[k]->value);
    }
    for (const Arg* a : extras) {
      check(*a->value);
      call.slots.emplace_back(a->value);
    }
    if (sig.name == "format" && bound[0]) {
      if (const auto lit = constant(*bound[0]->value); lit && placeholders(*lit) != extras.size())
        throw PlanError(Errc::arity, e.pos,
                        "format template has " + std::to_string(placeholders(*lit)) + " placeholder" +
                            (placeholders(*lit) == 1 ? "" : "s") + " but " + std::to_string(extras.size()) +
                            " argument" + (extras.size() == 1 ? "" : "s"));
    }
    out_.calls[&e] = std::move(call);
    if (sig.result.kind == Type::Kind::typevar)
      return tv.value_or(Type::any());
    return sig.result;
  }

  const Registry& reg_;
  TypedPlan out_;
  std::map<std::string, Type> types_;
  std::map<std::string, std::string> consts_;
  std::map<std::string, int> later_;
};

class Interpreter {
public:
  Interpreter(const TypedPlan& plan, const std::string& query, ExecutionTrace& trace)
      : plan_(plan), query_(query), trace_(trace)
  {
  }

  Value eval(const Expr& e)
  {
    switch (e.kind) {
    case Expr::Kind::text: return e.name;
    case Expr::Kind::number: return e.number;
    case Expr::Kind::boolean: return e.flag;
    case Expr::Kind::ref: return env_.at(e.name);
    case Expr::Kind::call: break;
    }
    const TypedCall& call = plan_.calls.at(&e);
    std::vector<Value> args;
    args.reserve(call.slots.size());
    for (const auto& slot : call.slots) {
      if (const auto* ex = std::get_if<ExprPtr>(&slot))
        args.push_back(eval(**ex));
      else
        args.push_back(std::get<Value>(slot));
    }
    TraceRecord rec;
    rec.expert = e.name;
    rec.line = e.pos.line;
    CallContext ctx;
    ctx.query = query_;
    const auto t0 = std::chrono::steady_clock::now();
    auto finish = [&](std::string outcome) {
      rec.duration_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
      rec.outcome = std::move(outcome);
      rec.age_s = ctx.age_s;
      rec.notes = ctx.notes;
      trace_.calls.push_back(rec);
    };
    try {
      Value v = call.entry->fn(args, ctx);
      finish("ok");
      return v;
    } catch (const RuntimeError&) {
      throw;
    } catch (const Error& err) {
      finish(errc_code(err.code()));
      throw RuntimeError(err.code(), e.name, e.pos, err.detail());
    } catch (const std::exception& err) {
      finish(errc_code(Errc::internal));
      throw RuntimeError(Errc::internal, e.name, e.pos, err.what());
    }
  }

  void bind(const std::string& name, Value v) { env_.insert_or_assign(name, std::move(v)); }

private:
  const TypedPlan& plan_;
  const std::string& query_;
  ExecutionTrace& trace_;
  std::map<std::string, Value> env_;
};

} // namespace

TypedPlan typecheck(const Plan& plan, const Registry& registry) { return Checker(plan, registry).run(); }

ExecutionResult execute(const TypedPlan& plan, const std::string& query, ExecutionTrace* trace_out)
{
  ExecutionTrace trace;
  const auto t0 = std::chrono::steady_clock::now();
  auto stamp = [&] {
    trace.total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    if (trace_out)
      *trace_out = trace;
  };
  Interpreter in(plan, query, trace);
  try {
    for (const auto& b : plan.plan.bindings) {
      ++trace.evaluations;
      in.bind(b.name, in.eval(*b.value));
    }
    ++trace.evaluations;
    Value answer = in.eval(*plan.plan.answer);
    ++trace.evaluations;
    Value salient = in.eval(*plan.plan.salient);
    stamp();
    return {std::get<std::string>(std::move(answer)), std::get<GeoPatch>(std::move(salient)), trace};
  } catch (...) {
    stamp();
    throw;
  }
}

} // namespace geode::plan
