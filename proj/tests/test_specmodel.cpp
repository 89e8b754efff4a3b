#include <doctest.h>

#include <algorithm>

#include "benchkit/cli.hpp"
#include "benchkit/specmodel.hpp"
#include "support.hpp"

using namespace benchkit;
using testsupport::Rng;

namespace {

const char* kMinimal = R"js({
  "name": "minimal",
  "parameter_sets": [{"name": "base", "parameters": {"nodes": [8]}}],
  "steps": [{"name": "execute", "kind": "execute", "command": "app -N ${nodes}"}],
  "fom": {"pattern": "FOM: time=(\\S+) s", "kind": "time"}
})js";

std::vector<Finding> findings_of(std::string_view text) {
  try {
    parse_spec(text);
  } catch (const SpecError& e) {
    return e.findings();
  }
  return {};
}

bool any_contains(const std::vector<Finding>& findings, std::string_view needle) {
  return std::any_of(findings.begin(), findings.end(),
                     [&](const Finding& f) { return f.message.find(needle) != std::string::npos; });
}

std::string with_steps(const std::string& steps) {
  return R"js({"name": "cyc", "parameter_sets": [{"name": "b", "parameters": {"nodes": [1]}}],
            "steps": )js" + steps + R"js(, "fom": {"pattern": "t=(\\S+)", "kind": "time"}})js";
}

}  // namespace

TEST_CASE("minimal document parses") {
  const auto spec = parse_spec(kMinimal);
  CHECK(spec.name == "minimal");
  REQUIRE(spec.steps.size() == 1);
  CHECK(spec.steps[0].name == "execute");
  REQUIRE(spec.parameter_sets.size() == 1);
  REQUIRE(spec.parameter_sets[0].parameters.size() == 1);
  CHECK(spec.parameter_sets[0].parameters[0].values == std::vector<std::string>{"8"});
  CHECK(spec.fom.unit == "s");
}

TEST_CASE("step dependency cycle is rejected") {
  const auto f = findings_of(with_steps(R"js([
      {"name": "A", "kind": "execute", "depends_on": ["B"], "command": "a"},
      {"name": "B", "kind": "execute", "depends_on": ["A"], "command": "b"}])js"));
  REQUIRE_FALSE(f.empty());
  CHECK(any_contains(f, "cycle"));
}

TEST_CASE("self dependency is a cycle") {
  CHECK(any_contains(findings_of(with_steps(R"js([{"name": "A", "kind": "execute", "depends_on": ["A"], "command": "a"}])js")),
                     "cycle"));
}

TEST_CASE("parameter template cycle is rejected") {
  const auto f = findings_of(R"js({"name": "x", "parameter_sets": [{"name": "b", "parameters": {
      "a": {"template": "${b}"}, "b": {"template": "${a}"}}}],
      "steps": [{"name": "s", "kind": "execute", "command": "run"}],
      "fom": {"pattern": "t=(\\S+)", "kind": "time"}})js");
  CHECK(any_contains(f, "cycle"));
}

TEST_CASE("serialize then parse is the identity on random valid specs") {
  Rng rng(20250101);
  for (int i = 0; i < 300; ++i) {
    const auto spec = testsupport::random_spec(rng);
    REQUIRE(validate_spec(spec).empty());
    const auto text = serialize_spec(spec);
    const auto back = parse_spec(text);
    CHECK(back == spec);
    CHECK(serialize_spec(back) == text);
  }
}

TEST_CASE("suite validation") {
  SUBCASE("duplicate names") {
    auto a = parse_spec(kMinimal);
    auto b = a;
    a.name = b.name = "arbor";
    const auto f = validate_suite({a, b});
    REQUIRE(f.size() == 1);
    CHECK(f[0].benchmark == "arbor");
    CHECK(f[0].message.find("duplicate") != std::string::npos);
  }
  SUBCASE("empty suite") { CHECK(validate_suite({}).empty()); }
  SUBCASE("bundled corpus") {
    const auto specs = load_definitions(testsupport::source_dir() / "definitions");
    CHECK(specs.size() >= 5);
    CHECK(validate_suite(specs).empty());
    std::vector<std::string> names;
    for (const auto& s : specs) names.push_back(s.name);
    for (const char* want : {"amdahl-sleeper", "ior-easy", "ior-hard", "linktest-bisection", "stream-triad"}) {
      CHECK(std::find(names.begin(), names.end(), want) != names.end());
    }
  }
}

TEST_CASE("bundled synthetic parameterizations") {
  const auto dir = testsupport::source_dir() / "definitions";
  const auto value_of = [](const BenchmarkSpec& s, const std::string& name) {
    for (const auto& set : s.parameter_sets) {
      if (const auto* p = set.find(name)) return p->values;
    }
    return std::vector<std::string>{};
  };
  const auto easy = load_definitions(dir / "ior-easy.bench.json").at(0);
  CHECK(value_of(easy, "transfer_size") == std::vector<std::string>{"16m"});
  CHECK(value_of(easy, "file_mode") == std::vector<std::string>{"-F"});
  const auto hard = load_definitions(dir / "ior-hard.bench.json").at(0);
  CHECK(value_of(hard, "transfer_size") == std::vector<std::string>{"4k"});
  CHECK(value_of(hard, "block_size") == std::vector<std::string>{"4k"});
  CHECK(value_of(hard, "nodes") == std::vector<std::string>{"64"});
  CHECK(hard.steps.at(1).command.find("-F") == std::string::npos);
  const auto link = load_definitions(dir / "linktest-bisection.bench.json").at(0);
  CHECK(value_of(link, "message_bytes") == std::vector<std::string>{"16777216"});
  CHECK(value_of(link, "bidirectional") == std::vector<std::string>{"1"});
}

TEST_CASE("every single-field corruption of a valid document is rejected whole") {
  const std::vector<std::string> broken = {
      R"js({"name": "", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)", "kind": "time"}})js",
      R"js({"name": "a", "steps": [], "fom": {"pattern": "(x)", "kind": "time"}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "bogus", "command": "x"}], "fom": {"pattern": "(x)", "kind": "time"}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x", "iterations": 0}], "fom": {"pattern": "(x)", "kind": "time"}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "${nope}"}], "fom": {"pattern": "(x)", "kind": "time"}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "${unterminated"}], "fom": {"pattern": "(x)", "kind": "time"}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "depends_on": ["ghost"], "command": "x"}], "fom": {"pattern": "(x)", "kind": "time"}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "x", "kind": "time"}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)(y)", "kind": "time"}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x", "kind": "time"}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)", "kind": "rate"}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)", "kind": "rate", "work_units": -1}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)", "kind": "time", "unit": "parsecs"}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)", "kind": "time", "lower_is_better": false}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)", "kind": "time"}, "verification": [{"kind": "scalar_tolerance", "target": "e"}]})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)", "kind": "time"}, "verification": [{"kind": "key_presence", "target": "e", "rel_tolerance": -1}]})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)", "kind": "time"}, "variants": [{"name": "small", "memory_fraction": 0.4}]})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)", "kind": "time"}, "variants": [{"name": "hs", "memory_fraction": 0.5}]})js",
      R"js({"name": "a", "parameter_sets": [{"name": "b", "parameters": {"n": []}}], "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)", "kind": "time"}})js",
      R"js({"name": "a", "reference_nodes": 0, "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)", "kind": "time"}})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}], "fom": {"pattern": "(x)", "kind": "time"}, "colour": 1})js",
      R"js({"name": "a", "steps": [{"name": "s", "kind": "execute", "command": "x"}]})js",
      R"js([1, 2])js",
  };
  for (const auto& text : broken) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_spec(text), SpecError);
    CHECK_FALSE(findings_of(text).empty());
  }
}

TEST_CASE("syntax errors report a position") {
  const auto f = findings_of("{\n  \"name\": \"a\",\n  \"steps\": [,]\n}");
  REQUIRE(f.size() == 1);
  CHECK(f[0].message.find("line 3") != std::string::npos);
}

TEST_CASE("unknown fields are named") {
  const auto f = findings_of(R"js({"name": "a", "stepz": []})js");
  CHECK(any_contains(f, "stepz"));
}

TEST_CASE("tag selection and override") {
  const auto spec = parse_spec(R"js({"name": "t", "parameter_sets": [
      {"name": "base", "parameters": {"n": [1, 2]}},
      {"name": "big", "active_tags": ["big", "huge"], "parameters": {"n": [64]}}],
      "steps": [{"name": "s", "kind": "execute", "command": "x ${n}"}],
      "fom": {"pattern": "(x)", "kind": "time"}})js");
  CHECK(spec.parameter_sets[0].active_for({}));
  CHECK(spec.parameter_sets[0].active_for({"anything"}));
  CHECK_FALSE(spec.parameter_sets[1].active_for({}));
  CHECK_FALSE(spec.parameter_sets[1].active_for({"small"}));
  CHECK(spec.parameter_sets[1].active_for({"huge", "small"}));
}

TEST_CASE("variant budgets on a 40 GB device") {
  const auto platform = *builtin_platform("simulated");
  REQUIRE(platform.device_memory_bytes == 40'000'000'000ULL);
  const std::pair<const char*, std::uint64_t> expected[] = {{"tiny", 10'000'000'000ULL},
                                                           {"small", 20'000'000'000ULL},
                                                           {"medium", 30'000'000'000ULL},
                                                           {"large", 40'000'000'000ULL}};
  for (const auto& [name, bytes] : expected) {
    const VariantDef v{name, canonical_fraction(*memory_variant_from(name)), {}};
    CHECK(variant_budget_bytes(v, platform) == bytes);
  }
  CHECK(memory_variant_from("T") == MemoryVariant::tiny);
  CHECK(memory_variant_from("L") == MemoryVariant::large);
  CHECK_FALSE(memory_variant_from("XL"));
}

TEST_CASE("variant budget scales with device memory for any capacity") {
  Rng rng(7);
  for (int i = 0; i < 500; ++i) {
    PlatformProfile p;
    p.device_memory_bytes = std::uniform_int_distribution<std::uint64_t>(1, 1ULL << 40)(rng);
    for (int v = 0; v < 4; ++v) {
      const auto variant = static_cast<MemoryVariant>(v);
      const VariantDef def{std::string(to_string(variant)), canonical_fraction(variant), {}};
      const auto oracle = static_cast<long double>(p.device_memory_bytes) * (v + 1) / 4;
      CHECK(std::abs(static_cast<long double>(variant_budget_bytes(def, p)) - oracle) <= 0.5L);
    }
  }
}

TEST_CASE("platform profiles") {
  CHECK(builtin_platform("local")->backend == BackendKind::local);
  CHECK(builtin_platform("simulated")->backend == BackendKind::simulated);
  CHECK_FALSE(builtin_platform("cray"));
  const auto p = parse_platform(testsupport::slurp(testsupport::source_dir() /
                                                   "definitions/platforms/slurm.platform.json"));
  CHECK(p.backend == BackendKind::external_scheduler);
  CHECK(p.devices_per_node == 4);
  CHECK_THROWS_AS(parse_platform(R"js({"name": "x", "backend": "pbs"})js"), SpecError);
  CHECK_THROWS_AS(parse_platform(R"js({"name": "x", "backend": "local", "devices_per_node": 0})js"), SpecError);
}

TEST_CASE("template references") {
  CHECK(template_references("a ${x} b ${y} ${x}") == std::vector<std::string>{"x", "y"});
  CHECK(template_references("no placeholders $ here").empty());
}

TEST_CASE("schema document is generated from the type definitions") {
  const auto doc = testsupport::slurp(testsupport::source_dir() / "docs/schema.md");
  CHECK(doc == schema_reference());
}
