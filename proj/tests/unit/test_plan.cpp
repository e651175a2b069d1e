#include "doctest.h"

#include <random>

#include "geode/experts.hpp"
#include "geode/plan.hpp"
#include "../support/temp_dir.hpp"
#include "../support/world_registry.hpp"

using namespace geode;
using namespace geode::plan;

namespace {

Errc code_of(auto&& fn)
{
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return Errc::internal;
}

std::string message_of(auto&& fn)
{
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

const Registry& registry()
{
  static auto reg = testing::world_registry();
  return *reg;
}

TypedPlan check(const std::string& src) { return typecheck(parse(src), registry()); }

} // namespace

TEST_SUITE("plan")
{
  TEST_CASE("extraction")
  {
    const std::string out =
        "Here is the plan:\n```geoplan\np = point_location_expert(\"Paris\")\nreturn describe(p), p\n```\nHope this helps!";
    const std::string plan = "p = point_location_expert(\"Paris\")\nreturn describe(p), p";
    CHECK(extract_plan(out) == plan);
    CHECK(extract_plan(plan) == plan);
    CHECK(code_of([] { extract_plan("I cannot answer that."); }) == Errc::extraction);
    CHECK(code_of([] { extract_plan(""); }) == Errc::extraction);

    // Bare plan after prose.
    CHECK(extract_plan("Sure! Let me think.\n\n" + plan + "\n") == plan);
    // Untagged fence when nothing is tagged.
    CHECK(extract_plan("```\n" + plan + "\n```") == plan);
    // The tagged fence wins over an earlier untagged one.
    CHECK(extract_plan("```python\nprint(1)\n```\n```geoplan\n" + plan + "\n```") == plan);
  }

  TEST_CASE("extraction normalizes quotes and zero-width characters")
  {
    const std::string smart = "p = point_location_expert(\xE2\x80\x9CPa\xE2\x80\x8Bris\xE2\x80\x9D)\nreturn describe(p), p";
    CHECK(extract_plan(smart) == "p = point_location_expert(\"Paris\")\nreturn describe(p), p");
    CHECK(extract_plan("x = f(\xE2\x80\x98" "a" "\xE2\x80\x99)\nreturn x, x") == "x = f('a')\nreturn x, x");
  }

  TEST_CASE("extraction is idempotent")
  {
    const std::vector<std::string> inputs{
        "Plan:\n```geoplan\na = f(\n  b\nreturn a, a\n```",
        "prose\nx = 1\n\n# note\nreturn x, x\n\n",
        "```geoplan\nthis is prose\nreturn a, b\n```",
        "```\nq = 1\n```\ntrailing words",
        "a = 1\nreturn a, a",
    };
    for (const auto& in : inputs) {
      const std::string once = extract_plan(in);
      CHECK(extract_plan(once) == once);
    }
  }

  TEST_CASE("parse examples")
  {
    const Plan p = parse("a = geocode_point(\"Rome\")\nreturn describe(a), a");
    REQUIRE(p.bindings.size() == 1);
    CHECK(p.bindings[0].name == "a");
    CHECK(p.answer->kind == Expr::Kind::call);
    CHECK(p.answer->name == "describe");
    CHECK(p.salient->kind == Expr::Kind::ref);

    try {
      parse("a = f(\na = g()");
      FAIL("expected a syntax error");
    } catch (const PlanError& e) {
      CHECK(e.code() == Errc::syntax);
      CHECK(e.pos().line == 1);
      CHECK(std::string(e.what()).find("unclosed call to 'f'") != std::string::npos);
      CHECK_FALSE(e.expected().empty());
    }

    try {
      parse("a = f()\na = g()\nreturn describe(a), a");
      FAIL("expected an SSA error");
    } catch (const PlanError& e) {
      CHECK(e.code() == Errc::ssa_rebind);
      CHECK(e.pos().line == 2);
    }
  }

  TEST_CASE("literals and comments")
  {
    const Plan p = parse("# header\na = f('it\\'s', \"tab\\t\", -2.5, +3, true)  # trailing\n\nreturn a, a\n");
    const auto& args = p.bindings[0].value->args;
    REQUIRE(args.size() == 5);
    CHECK(args[0].value->name == "it's");
    CHECK(args[1].value->name == "tab\t");
    CHECK(args[2].value->number == -2.5);
    CHECK(args[3].value->number == 3);
    CHECK(args[4].value->flag);

    CHECK(code_of([] { parse("a = f(1.2.3)\nreturn a, a"); }) == Errc::bad_literal);
    CHECK(code_of([] { parse("a = f(\"open)\nreturn a, a"); }) == Errc::bad_literal);
    CHECK(code_of([] { parse("a = f('\\q')\nreturn a, a"); }) == Errc::bad_literal);
    CHECK(code_of([] { parse("a = f(12abc)\nreturn a, a"); }) == Errc::bad_literal);
    CHECK(code_of([] { parse("a = f(x=1, 2)\nreturn a, a"); }) == Errc::syntax);
    CHECK(code_of([] { parse("a = f() g()\nreturn a, a"); }) == Errc::syntax);
    CHECK(code_of([] { parse("a = f() ; \nreturn a, a"); }) == Errc::syntax);
  }

  TEST_CASE("return shape")
  {
    CHECK(code_of([] { parse("a = f()"); }) == Errc::missing_return);
    CHECK(code_of([] { parse(""); }) == Errc::missing_return);
    CHECK(code_of([] { parse("a = f()\nreturn a"); }) == Errc::return_arity);
    CHECK(code_of([] { parse("a = f()\nreturn a, a, a"); }) == Errc::return_arity);
    CHECK(code_of([] { parse("return a, a\nb = f()"); }) == Errc::syntax);
  }

  TEST_CASE("golden plans round-trip through the printer")
  {
    for (const auto& [query, text] : testing::golden_plans()) {
      CAPTURE(query);
      const Plan p = parse(text);
      const Plan q = parse(print_plan(p));
      CHECK(same_structure(p, q));
      CHECK(print_plan(q) == print_plan(p));
    }
  }

  TEST_CASE("number printing round-trips")
  {
    for (double v : {0.1, -0.000001, 123456789.125, 1e-30, 5e20, 0.0, -7.0}) {
      const Plan p = parse("a = f(" + std::string(v < 0 ? "-" : "") + "1)\nreturn a, a");
      Expr e = *p.bindings[0].value->args[0].value;
      e.number = v;
      auto call = std::make_shared<Expr>(*p.bindings[0].value);
      call->args[0].value = std::make_shared<Expr>(e);
      Plan q = p;
      q.bindings[0].value = call;
      const Plan r = parse(print_plan(q));
      CHECK(r.bindings[0].value->args[0].value->number == v);
    }
  }

  TEST_CASE("typecheck accepts the golden plans")
  {
    for (const auto& [query, text] : testing::golden_plans()) {
      CAPTURE(query);
      const TypedPlan t = check(text);
      CHECK(t.binding_types.count("answer") == 1);
      CHECK(to_string(t.binding_types.at("answer")) == "Text");
    }
  }

  TEST_CASE("typecheck errors")
  {
    const std::string msg = message_of([] {
      check("p = patch_location_expert(\"Delhi\")\nq = air_quality_expert(p, parameter=\"pm99\", mode=\"patch\")\nreturn describe(q), q");
    });
    CHECK(msg.rfind("PLAN_ENUM", 0) == 0);
    for (const auto& v : clients::air_quality_parameters())
      CHECK(msg.find("'" + v + "'") != std::string::npos);

    CHECK(code_of([] { check("p = point_location_expert(\"Rome\")\nreturn p, p"); }) == Errc::return_type);
    CHECK(code_of([] { check("p = point_location_expert(\"Rome\")\nreturn describe(p), describe(p)"); }) ==
          Errc::return_type);

    const std::string hint = message_of([] { check("p = point_locaton_expert(\"Rome\")\nreturn describe(p), p"); });
    CHECK(hint.find("did you mean 'point_location_expert'") != std::string::npos);

    CHECK(code_of([] { check("p = point_location_expert()\nreturn describe(p), p"); }) == Errc::arity);
    CHECK(code_of([] { check("p = point_location_expert(\"a\", \"b\")\nreturn describe(p), p"); }) == Errc::arity);
    CHECK(code_of([] { check("p = point_location_expert(place=\"a\")\nreturn describe(p), p"); }) == Errc::arity);
    CHECK(code_of([] { check("p = point_location_expert(\"a\", name=\"b\")\nreturn describe(p), p"); }) ==
          Errc::arity);
    CHECK(code_of([] { check("p = point_location_expert(3)\nreturn describe(p), p"); }) == Errc::type_mismatch);
    CHECK(code_of([] { check("p = humidity_expert(q)\nq = point_location_expert(\"a\")\nreturn describe(p), p"); }) ==
          Errc::unbound_reference);
    CHECK(code_of([] { check("p = point_location_expert(\"a\")\nreturn describe(p), zz"); }) ==
          Errc::unbound_reference);
  }

  TEST_CASE("enum arguments follow literal bindings")
  {
    CHECK_NOTHROW(check("p = point_location_expert(\"a\")\nm = \"point\"\nh = humidity_expert(p, mode=m)\nreturn describe(h), h"));
    CHECK(code_of([] { check("p = point_location_expert(\"a\")\nm = describe(p)\nh = humidity_expert(p, mode=m)\nreturn describe(h), h"); }) ==
          Errc::type_mismatch);
    CHECK(code_of([] { check("p = point_location_expert(\"a\")\nh = humidity_expert(p, mode=3)\nreturn describe(h), h"); }) ==
          Errc::type_mismatch);
  }

  TEST_CASE("select and format")
  {
    CHECK(code_of([] { check("x = select(true, 1, \"a\")\np = point_location_expert(\"a\")\nreturn describe(x), p"); }) ==
          Errc::type_mismatch);
    CHECK(code_of([] { check("x = format(\"{} {}\", 1)\np = point_location_expert(\"a\")\nreturn x, p"); }) ==
          Errc::arity);
    const TypedPlan t = check("x = select(true, 1, 2)\np = point_location_expert(\"a\")\nreturn describe(x), p");
    CHECK(to_string(t.binding_types.at("x")) == "Number");
  }

  TEST_CASE("defaults are filled")
  {
    const TypedPlan t = check("p = patch_location_expert(\"Delhi\")\nq = air_quality_expert(p)\nreturn describe(q), q");
    const Expr* call = t.plan.bindings[1].value.get();
    const auto& slots = t.calls.at(call).slots;
    REQUIRE(slots.size() == 3);
    CHECK(std::get<std::string>(std::get<Value>(slots[1])) == "pm2_5");
    CHECK(std::get<std::string>(std::get<Value>(slots[2])) == "patch");
  }

  TEST_CASE("builtins")
  {
    auto run = [](const std::string& expr) {
      return execute(check("x = " + expr + "\np = point_location_expert(\"Rome\")\nreturn describe(x), p")).answer;
    };
    CHECK(run("select(greater(5, 3), \"Atlanta\", \"Chicago\")") == "Atlanta");
    CHECK(run("select(greater(3, 3), \"Atlanta\", \"Chicago\")") == "Chicago");
    CHECK(run("format(\"It rains more in {}\", \"Chicago\")") == "It rains more in Chicago");
    CHECK(run("format(\"{} and {}\", 3.14159, true)") == "3.142 and true");
    CHECK(run("3.14159") == "3.142");
    CHECK(run("point_location_expert(\"Rome\")") == "Rome patch (point)");

    GeoPatch p = make_point_patch({1, 2}, "m").with_points({DataPoint{{1, 2}, "m", 3.2, "mm"}});
    const auto& pv = *registry().find("point_value");
    CallContext ctx;
    CHECK(std::get<double>(pv.fn({p}, ctx)) == 3.2);
    CHECK(code_of([&] { pv.fn({make_point_patch({1, 2}, "m")}, ctx); }) == Errc::missing_value);
    CHECK(code_of([&] { registry().find("format")->fn({std::string("{}")}, ctx); }) == Errc::format_error);
  }

  TEST_CASE("data_to_text")
  {
    CHECK(data_to_text(Value(3.14159)) == "3.142");
    CHECK(data_to_text(std::vector<Value>{1.0, 2.0}) == "1, 2");
    const GeoPatch r = make_region_patch("Delhi", {bbox_ring(BBox(28.4, 28.9, 76.8, 77.4))});
    const std::string t = data_to_text(Value(r));
    CHECK(t.find("region") != std::string::npos);
    CHECK(t.find("million sq km") != std::string::npos);
  }

  TEST_CASE("execution")
  {
    const TypedPlan t = check("p = point_location_expert(\"Paris\")\nreturn describe(p), p");
    const ExecutionResult r = execute(t);
    CHECK(r.answer == "Paris patch (point)");
    CHECK(r.trace.calls.size() == 2);
    CHECK(r.trace.evaluations == 3);
    CHECK(r.trace.total_ms > 0);
    for (const auto& c : r.trace.calls)
      CHECK(c.outcome == "ok");
  }

  TEST_CASE("golden plans execute against the synthetic world")
  {
    for (const auto& [query, text] : testing::golden_plans()) {
      CAPTURE(query);
      const TypedPlan t = check(text);
      const ExecutionResult r = execute(t, query);
      CHECK(r.trace.evaluations == t.plan.bindings.size() + 2);
      CHECK_FALSE(r.answer.empty());
    }
  }

  TEST_CASE("runtime errors name the call and keep the trace")
  {
    testing::TempDir dir;
    auto cfg = testing::world_config();
    cfg.mode = clients::NetMode::offline;
    cfg.fixtures = dir.str();
    auto reg = make_registry(std::make_shared<clients::Upstream>(cfg));
    const TypedPlan t = typecheck(
        parse("label = format(\"x\")\np = point_location_expert(\"Rome\")\nh = humidity_expert(p, mode=\"point\")\nreturn label, h"),
        *reg);
    ExecutionTrace trace;
    try {
      execute(t, "", &trace);
      FAIL("expected a runtime error");
    } catch (const RuntimeError& e) {
      CHECK(e.code() == Errc::expert_runtime);
      CHECK(e.inner() == Errc::fixture_miss);
      CHECK(e.expert() == "point_location_expert");
      CHECK(e.pos().line == 2);
    }
    REQUIRE(trace.calls.size() == 2);
    CHECK(trace.calls[0].outcome == "ok");
    CHECK(trace.calls[1].outcome == "FIXTURE_MISS");
  }

  TEST_CASE("runtime wraps analysis failures")
  {
    const TypedPlan t = check("p = point_location_expert(\"Rome\")\nq = imputation_expert(p)\nreturn describe(q), q");
    try {
      execute(t);
      FAIL("expected a runtime error");
    } catch (const RuntimeError& e) {
      CHECK(e.inner() == Errc::missing_raster);
      CHECK(std::string(e.what()).find("line 2: imputation_expert failed") != std::string::npos);
    }
  }
}
