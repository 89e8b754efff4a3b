#include "benchkit/specmodel.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "benchkit/numbers.hpp"
#include "template_text.hpp"

namespace benchkit {

using ojson = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(std::string message, std::string benchmark = {}) {
  throw SpecError({Finding{std::move(benchmark), std::move(message)}});
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
           c == '-' || c == '.';
  });
}

// Converts a byte offset into "line L, column C" for syntax errors.
std::string position_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

ojson parse_document(std::string_view text) {
  try {
    return ojson::parse(text.begin(), text.end());
  } catch (const ojson::parse_error& e) {
    // e.byte is 1-based and points just past the offending character.
    const auto at = e.byte > 0 ? e.byte - 1 : 0;
    std::string what = e.what();
    if (const auto p = what.find("parse error"); p != std::string::npos) what = what.substr(p);
    fail("syntax error at " + position_of(text, at) + ": " + what);
  }
}

void expect_object(const ojson& j, const std::string& where) {
  if (!j.is_object()) fail(where + ": expected an object");
}

void check_fields(const ojson& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      fail(where + ": unknown field '" + key + "'");
    }
  }
}

std::string get_string(const ojson& j, const char* key, const std::string& where, bool required = true) {
  if (!j.contains(key)) {
    if (required) fail(where + ": missing field '" + key + "'");
    return {};
  }
  if (!j[key].is_string()) fail(where + ": field '" + key + "' must be a string");
  return j[key].get<std::string>();
}

double get_number(const ojson& j, const char* key, const std::string& where) {
  if (!j[key].is_number()) fail(where + ": field '" + key + "' must be a number");
  return j[key].get<double>();
}

int get_int(const ojson& j, const char* key, const std::string& where) {
  if (!j[key].is_number_integer()) fail(where + ": field '" + key + "' must be an integer");
  return j[key].get<int>();
}

std::vector<std::string> get_string_list(const ojson& j, const char* key, const std::string& where) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  if (!j[key].is_array()) fail(where + ": field '" + key + "' must be a list of strings");
  for (const auto& item : j[key]) {
    if (!item.is_string()) fail(where + ": field '" + key + "' must be a list of strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

TagSet get_tags(const ojson& j, const char* key, const std::string& where) {
  const auto list = get_string_list(j, key, where);
  return {list.begin(), list.end()};
}

std::string literal_text(const ojson& v, const std::string& where) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number() || v.is_boolean()) return v.dump();
  fail(where + ": parameter values must be strings, numbers or booleans");
}

ParameterSet parse_parameter_set(const ojson& j, const std::string& where) {
  expect_object(j, where);
  check_fields(j, {"name", "parameters", "active_tags"}, where);
  ParameterSet set;
  set.name = get_string(j, "name", where);
  set.active_tags = get_tags(j, "active_tags", where);
  if (!j.contains("parameters")) fail(where + ": missing field 'parameters'");
  if (!j["parameters"].is_object()) fail(where + ": 'parameters' must be an object");
  for (const auto& [pname, pvalue] : j["parameters"].items()) {
    const auto pwhere = where + " parameter '" + pname + "'";
    ParameterDef def;
    def.name = pname;
    if (pvalue.is_array()) {
      for (const auto& v : pvalue) def.values.push_back(literal_text(v, pwhere));
    } else if (pvalue.is_object()) {
      check_fields(pvalue, {"template"}, pwhere);
      def.template_text = get_string(pvalue, "template", pwhere);
    } else {
      def.values.push_back(literal_text(pvalue, pwhere));
    }
    set.parameters.push_back(std::move(def));
  }
  return set;
}

Step parse_step(const ojson& j, const std::string& where) {
  expect_object(j, where);
  check_fields(j, {"name", "kind", "depends_on", "command", "iterations"}, where);
  Step step;
  step.name = get_string(j, "name", where);
  const auto kind_text = get_string(j, "kind", where);
  const auto kind = step_kind_from(kind_text);
  if (!kind) fail(where + ": unknown step kind '" + kind_text + "'");
  step.kind = *kind;
  step.depends_on = get_string_list(j, "depends_on", where);
  step.command = get_string(j, "command", where);
  if (j.contains("iterations")) step.iterations = get_int(j, "iterations", where);
  return step;
}

FomSpec parse_fom(const ojson& j) {
  const std::string where = "fom";
  expect_object(j, where);
  check_fields(j, {"pattern", "unit", "kind", "work_units", "lower_is_better"}, where);
  FomSpec fom;
  fom.pattern = get_string(j, "pattern", where);
  if (j.contains("unit")) fom.unit = get_string(j, "unit", where);
  const auto kind = get_string(j, "kind", where);
  if (kind == "time") {
    fom.kind = FomKind::time;
  } else if (kind == "rate") {
    fom.kind = FomKind::rate;
  } else {
    fail("fom: unknown kind '" + kind + "'");
  }
  if (j.contains("work_units")) fom.work_units = get_number(j, "work_units", where);
  if (j.contains("lower_is_better")) {
    if (!j["lower_is_better"].is_boolean()) fail("fom: 'lower_is_better' must be a boolean");
    fom.lower_is_better = j["lower_is_better"].get<bool>();
  }
  return fom;
}

VerificationRule parse_rule(const ojson& j, const std::string& where) {
  expect_object(j, where);
  check_fields(j, {"kind", "target", "reference", "rel_tolerance"}, where);
  VerificationRule rule;
  const auto kind = get_string(j, "kind", where);
  if (kind == "scalar_tolerance") {
    rule.kind = VerificationKind::scalar_tolerance;
  } else if (kind == "exact_match") {
    rule.kind = VerificationKind::exact_match;
  } else if (kind == "key_presence") {
    rule.kind = VerificationKind::key_presence;
  } else {
    fail(where + ": unknown verification kind '" + kind + "'");
  }
  rule.target = get_string(j, "target", where);
  if (j.contains("reference")) rule.reference = literal_text(j["reference"], where);
  if (j.contains("rel_tolerance")) rule.rel_tolerance = get_number(j, "rel_tolerance", where);
  return rule;
}

VariantDef parse_variant(const ojson& j, const std::string& where) {
  expect_object(j, where);
  check_fields(j, {"name", "memory_fraction", "tag_overrides"}, where);
  VariantDef v;
  v.name = get_string(j, "name", where);
  if (j.contains("memory_fraction")) v.memory_fraction = get_number(j, "memory_fraction", where);
  v.tag_overrides = get_tags(j, "tag_overrides", where);
  return v;
}

template <typename T, typename F>
std::vector<T> parse_list(const ojson& doc, const char* key, F parse_one) {
  std::vector<T> out;
  if (!doc.contains(key)) return out;
  if (!doc[key].is_array()) fail(std::string("'") + key + "' must be a list");
  std::size_t index = 0;
  for (const auto& item : doc[key]) {
    out.push_back(parse_one(item, std::string(key) + "[" + std::to_string(index++) + "]"));
  }
  return out;
}

ojson tags_json(const TagSet& tags) {
  ojson arr = ojson::array();
  for (const auto& t : tags) arr.push_back(t);
  return arr;
}

// Depth-first cycle detection over a name graph; returns one cycle path if found.
std::optional<std::vector<std::string>> find_cycle(const std::map<std::string, std::vector<std::string>>& edges) {
  enum class Mark { none, active, done };
  std::map<std::string, Mark> mark;
  std::vector<std::string> stack;
  std::optional<std::vector<std::string>> cycle;

  std::function<bool(const std::string&)> visit = [&](const std::string& node) {
    auto& m = mark[node];
    if (m == Mark::done) return false;
    if (m == Mark::active) {
      const auto it = std::find(stack.begin(), stack.end(), node);
      cycle = std::vector<std::string>(it, stack.end());
      cycle->push_back(node);
      return true;
    }
    m = Mark::active;
    stack.push_back(node);
    if (const auto e = edges.find(node); e != edges.end()) {
      for (const auto& next : e->second) {
        if (visit(next)) return true;
      }
    }
    stack.pop_back();
    mark[node] = Mark::done;
    return false;
  };
  for (const auto& [node, _] : edges) {
    if (visit(node)) return cycle;
  }
  return std::nullopt;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

bool is_time_unit(std::string_view unit) {
  return unit == "s" || unit == "ms" || unit == "us" || unit == "ns" || unit == "min" || unit == "h";
}

}  // namespace

SpecError::SpecError(std::vector<Finding> findings)
    : std::runtime_error([&] {
        std::string msg;
        for (const auto& f : findings) {
          if (!msg.empty()) msg += "; ";
          msg += f.benchmark.empty() ? f.message : f.benchmark + ": " + f.message;
        }
        return msg;
      }()),
      findings_(std::move(findings)) {}

bool ParameterSet::active_for(const TagSet& tags) const {
  if (active_tags.empty()) return true;
  return std::any_of(active_tags.begin(), active_tags.end(), [&](const auto& t) { return tags.count(t) > 0; });
}

const ParameterDef* ParameterSet::find(std::string_view param) const {
  for (const auto& p : parameters) {
    if (p.name == param) return &p;
  }
  return nullptr;
}

const Step* BenchmarkSpec::find_step(std::string_view step) const {
  for (const auto& s : steps) {
    if (s.name == step) return &s;
  }
  return nullptr;
}

std::string_view to_string(StepKind kind) {
  switch (kind) {
    case StepKind::compile: return "compile";
    case StepKind::execute: return "execute";
    case StepKind::postprocess: return "postprocess";
    case StepKind::verify: return "verify";
  }
  return "execute";
}

std::string_view to_string(FomKind kind) { return kind == FomKind::time ? "time" : "rate"; }

std::string_view to_string(VerificationKind kind) {
  switch (kind) {
    case VerificationKind::scalar_tolerance: return "scalar_tolerance";
    case VerificationKind::exact_match: return "exact_match";
    case VerificationKind::key_presence: return "key_presence";
  }
  return "key_presence";
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::local: return "local";
    case BackendKind::simulated: return "simulated";
    case BackendKind::external_scheduler: return "external-scheduler";
  }
  return "local";
}

std::string_view to_string(MemoryVariant variant) {
  switch (variant) {
    case MemoryVariant::tiny: return "tiny";
    case MemoryVariant::small: return "small";
    case MemoryVariant::medium: return "medium";
    case MemoryVariant::large: return "large";
  }
  return "large";
}

std::optional<StepKind> step_kind_from(std::string_view text) {
  if (text == "compile") return StepKind::compile;
  if (text == "execute") return StepKind::execute;
  if (text == "postprocess") return StepKind::postprocess;
  if (text == "verify") return StepKind::verify;
  return std::nullopt;
}

std::optional<MemoryVariant> memory_variant_from(std::string_view text) {
  if (text == "tiny" || text == "T") return MemoryVariant::tiny;
  if (text == "small" || text == "S") return MemoryVariant::small;
  if (text == "medium" || text == "M") return MemoryVariant::medium;
  if (text == "large" || text == "L") return MemoryVariant::large;
  return std::nullopt;
}

double canonical_fraction(MemoryVariant variant) {
  switch (variant) {
    case MemoryVariant::tiny: return 0.25;
    case MemoryVariant::small: return 0.50;
    case MemoryVariant::medium: return 0.75;
    case MemoryVariant::large: return 1.00;
  }
  return 1.0;
}

std::uint64_t variant_budget_bytes(const VariantDef& variant, const PlatformProfile& platform) {
  if (!variant.memory_fraction) {
    throw std::invalid_argument("variant '" + variant.name + "' carries no memory fraction");
  }
  return static_cast<std::uint64_t>(
      std::llround(*variant.memory_fraction * static_cast<double>(platform.device_memory_bytes)));
}

std::vector<std::string> template_references(std::string_view text) {
  std::vector<std::string> refs;
  for (const auto& piece : detail::tokenize_template(text)) {
    if (piece.placeholder && std::find(refs.begin(), refs.end(), piece.text) == refs.end()) {
      refs.push_back(piece.text);
    }
  }
  return refs;
}

BenchmarkSpec parse_spec(std::string_view text) {
  const auto doc = parse_document(text);
  expect_object(doc, "document");
  check_fields(doc,
               {"name", "description", "reference_nodes", "parameter_sets", "steps", "variants", "fom",
                "verification"},
               "document");

  BenchmarkSpec spec;
  spec.name = get_string(doc, "name", "document");
  try {
    spec.description = get_string(doc, "description", "document", false);
    if (doc.contains("reference_nodes")) spec.reference_nodes = get_int(doc, "reference_nodes", "document");
    spec.parameter_sets = parse_list<ParameterSet>(doc, "parameter_sets", parse_parameter_set);
    spec.steps = parse_list<Step>(doc, "steps", parse_step);
    spec.variants = parse_list<VariantDef>(doc, "variants", parse_variant);
    if (!doc.contains("fom")) fail("document: missing field 'fom'");
    spec.fom = parse_fom(doc["fom"]);
    spec.verification = parse_list<VerificationRule>(doc, "verification", parse_rule);
  } catch (const SpecError& e) {
    auto findings = e.findings();
    for (auto& f : findings) f.benchmark = spec.name;
    throw SpecError(std::move(findings));
  }

  if (auto findings = validate_spec(spec); !findings.empty()) throw SpecError(std::move(findings));
  return spec;
}

std::string serialize_spec(const BenchmarkSpec& spec) {
  ojson doc;
  doc["name"] = spec.name;
  doc["description"] = spec.description;
  doc["reference_nodes"] = spec.reference_nodes;

  doc["parameter_sets"] = ojson::array();
  for (const auto& set : spec.parameter_sets) {
    ojson js;
    js["name"] = set.name;
    if (!set.active_tags.empty()) js["active_tags"] = tags_json(set.active_tags);
    js["parameters"] = ojson::object();
    for (const auto& p : set.parameters) {
      if (p.template_text) {
        js["parameters"][p.name] = ojson{{"template", *p.template_text}};
      } else {
        js["parameters"][p.name] = p.values;
      }
    }
    doc["parameter_sets"].push_back(std::move(js));
  }

  doc["steps"] = ojson::array();
  for (const auto& s : spec.steps) {
    ojson js;
    js["name"] = s.name;
    js["kind"] = std::string(to_string(s.kind));
    if (!s.depends_on.empty()) js["depends_on"] = s.depends_on;
    js["command"] = s.command;
    if (s.iterations != 1) js["iterations"] = s.iterations;
    doc["steps"].push_back(std::move(js));
  }

  if (!spec.variants.empty()) {
    doc["variants"] = ojson::array();
    for (const auto& v : spec.variants) {
      ojson jv;
      jv["name"] = v.name;
      if (v.memory_fraction) jv["memory_fraction"] = *v.memory_fraction;
      if (!v.tag_overrides.empty()) jv["tag_overrides"] = tags_json(v.tag_overrides);
      doc["variants"].push_back(std::move(jv));
    }
  }

  ojson fom;
  fom["pattern"] = spec.fom.pattern;
  fom["unit"] = spec.fom.unit;
  fom["kind"] = std::string(to_string(spec.fom.kind));
  if (spec.fom.work_units) fom["work_units"] = *spec.fom.work_units;
  if (!spec.fom.lower_is_better) fom["lower_is_better"] = false;
  doc["fom"] = std::move(fom);

  if (!spec.verification.empty()) {
    doc["verification"] = ojson::array();
    for (const auto& r : spec.verification) {
      ojson jr;
      jr["kind"] = std::string(to_string(r.kind));
      jr["target"] = r.target;
      if (r.reference) jr["reference"] = *r.reference;
      if (r.kind == VerificationKind::scalar_tolerance || r.rel_tolerance != 0.0) {
        jr["rel_tolerance"] = r.rel_tolerance;
      }
      doc["verification"].push_back(std::move(jr));
    }
  }
  return doc.dump(2) + "\n";
}

std::vector<Finding> validate_spec(const BenchmarkSpec& spec) {
  std::vector<Finding> findings;
  const auto add = [&](std::string msg) { findings.push_back({spec.name, std::move(msg)}); };

  if (!is_identifier(spec.name)) add("benchmark name must be a non-empty identifier");
  if (spec.reference_nodes < 1) add("reference_nodes must be a positive integer");

  // Parameters.
  std::set<std::string> defined;
  std::map<std::string, std::vector<std::string>> param_edges;
  std::set<std::string> set_names;
  for (const auto& set : spec.parameter_sets) {
    if (!is_identifier(set.name)) add("parameter set name must be a non-empty identifier");
    if (!set_names.insert(set.name).second) add("duplicate parameter set '" + set.name + "'");
    std::set<std::string> local;
    for (const auto& p : set.parameters) {
      if (!is_identifier(p.name) || !detail::is_placeholder_char(p.name[0], true)) {
        add("parameter name '" + p.name + "' is not a valid identifier");
      }
      if (!local.insert(p.name).second) add("parameter '" + p.name + "' declared twice in set '" + set.name + "'");
      defined.insert(p.name);
      if (p.template_text) {
        if (!p.values.empty()) add("parameter '" + p.name + "' has both values and a template");
        try {
          auto& e = param_edges[p.name];
          for (auto& ref : template_references(*p.template_text)) e.push_back(std::move(ref));
        } catch (const detail::TemplateSyntaxError& err) {
          add("parameter '" + p.name + "': " + err.what());
        }
      } else if (p.values.empty()) {
        add("parameter '" + p.name + "' has an empty value list");
      }
    }
  }
  if (const auto cycle = find_cycle(param_edges)) {
    add("parameter-reference cycle: " + join(*cycle, " -> "));
  }
  for (const auto& [name, refs] : param_edges) {
    for (const auto& ref : refs) {
      if (!defined.count(ref)) add("parameter '" + name + "' references unknown parameter '" + ref + "'");
    }
  }

  // Steps.
  if (spec.steps.empty()) add("at least one step is required");
  std::set<std::string> step_names;
  for (const auto& s : spec.steps) {
    if (!is_identifier(s.name)) add("step name must be a non-empty identifier");
    if (!step_names.insert(s.name).second) add("duplicate step '" + s.name + "'");
    if (s.iterations < 1) add("step '" + s.name + "': iterations must be >= 1");
    try {
      for (const auto& ref : template_references(s.command)) {
        if (!defined.count(ref)) add("step '" + s.name + "' references unknown parameter '" + ref + "'");
      }
    } catch (const detail::TemplateSyntaxError& err) {
      add("step '" + s.name + "': " + err.what());
    }
  }
  std::map<std::string, std::vector<std::string>> step_edges;
  for (const auto& s : spec.steps) {
    auto& e = step_edges[s.name];
    for (const auto& dep : s.depends_on) {
      if (!step_names.count(dep)) {
        add("step '" + s.name + "' depends on undeclared step '" + dep + "'");
      } else {
        e.push_back(dep);
      }
    }
  }
  if (const auto cycle = find_cycle(step_edges)) add("step dependency cycle: " + join(*cycle, " -> "));

  // Figure of merit.
  try {
    const std::regex re(spec.fom.pattern, std::regex::ECMAScript);
    if (re.mark_count() != 1) add("fom pattern must have exactly one capture group");
  } catch (const std::regex_error& e) {
    add(std::string("fom pattern does not compile: ") + e.what());
  }
  if (spec.fom.kind == FomKind::rate) {
    if (!spec.fom.work_units) {
      add("fom of kind rate requires work_units");
    } else if (!(*spec.fom.work_units > 0.0) || !std::isfinite(*spec.fom.work_units)) {
      add("fom work_units must be a positive real");
    }
  } else {
    if (spec.fom.work_units) add("fom work_units is only allowed for kind rate");
    if (!is_time_unit(spec.fom.unit)) add("fom of kind time needs a time unit (s, ms, us, ns, min, h)");
  }
  if (!spec.fom.lower_is_better) add("fom must be lower-is-better after normalization");

  // Verification.
  for (const auto& r : spec.verification) {
    if (r.target.empty()) add("verification rule needs a target");
    if (!(r.rel_tolerance >= 0.0)) add("verification rel_tolerance must be non-negative");
    if ((r.kind == VerificationKind::scalar_tolerance || r.kind == VerificationKind::exact_match) &&
        !r.reference) {
      add(std::string(to_string(r.kind)) + " rule on '" + r.target + "' needs a reference");
    }
  }

  // Variants.
  std::set<std::string> variant_names;
  for (const auto& v : spec.variants) {
    if (!is_identifier(v.name)) add("variant name must be a non-empty identifier");
    if (!variant_names.insert(v.name).second) add("duplicate variant '" + v.name + "'");
    const auto canonical = v.name == "tiny" || v.name == "small" || v.name == "medium" || v.name == "large";
    if (canonical) {
      const auto expected = canonical_fraction(*memory_variant_from(v.name));
      if (!v.memory_fraction || *v.memory_fraction != expected) {
        add("variant '" + v.name + "' must have memory_fraction " + format_real(expected));
      }
    } else if (v.memory_fraction) {
      add("free variant tag '" + v.name + "' must not carry a memory fraction");
    }
  }
  return findings;
}

std::vector<Finding> validate_suite(const std::vector<BenchmarkSpec>& specs) {
  std::vector<Finding> findings;
  std::map<std::string, int> seen;
  for (const auto& spec : specs) {
    auto own = validate_spec(spec);
    findings.insert(findings.end(), own.begin(), own.end());
    if (++seen[spec.name] == 2) findings.push_back({spec.name, "duplicate benchmark name '" + spec.name + "'"});
  }
  return findings;
}

PlatformProfile parse_platform(std::string_view text) {
  const auto doc = parse_document(text);
  expect_object(doc, "platform");
  check_fields(doc,
               {"name", "backend", "submission_template", "environment", "devices_per_node", "device_memory_bytes"},
               "platform");
  PlatformProfile p;
  p.name = get_string(doc, "name", "platform");
  const auto backend = get_string(doc, "backend", "platform");
  if (backend == "local") {
    p.backend = BackendKind::local;
  } else if (backend == "simulated") {
    p.backend = BackendKind::simulated;
  } else if (backend == "external-scheduler") {
    p.backend = BackendKind::external_scheduler;
  } else {
    fail("platform: unknown backend '" + backend + "'");
  }
  if (doc.contains("submission_template")) p.submission_template = get_string(doc, "submission_template", "platform");
  if (doc.contains("environment")) {
    if (!doc["environment"].is_object()) fail("platform: 'environment' must be an object");
    for (const auto& [k, v] : doc["environment"].items()) p.environment.emplace_back(k, literal_text(v, "platform"));
  }
  if (doc.contains("devices_per_node")) p.devices_per_node = get_int(doc, "devices_per_node", "platform");
  if (doc.contains("device_memory_bytes")) {
    if (!doc["device_memory_bytes"].is_number_unsigned()) {
      fail("platform: 'device_memory_bytes' must be a positive integer");
    }
    p.device_memory_bytes = doc["device_memory_bytes"].get<std::uint64_t>();
  }
  if (auto findings = validate_platform(p); !findings.empty()) throw SpecError(std::move(findings));
  return p;
}

std::vector<Finding> validate_platform(const PlatformProfile& platform) {
  std::vector<Finding> findings;
  if (!is_identifier(platform.name)) findings.push_back({platform.name, "platform name must be an identifier"});
  if (platform.devices_per_node < 1) findings.push_back({platform.name, "devices_per_node must be >= 1"});
  if (platform.device_memory_bytes == 0) findings.push_back({platform.name, "device_memory_bytes must be > 0"});
  try {
    (void)template_references(platform.submission_template);
  } catch (const detail::TemplateSyntaxError& e) {
    findings.push_back({platform.name, std::string("submission_template: ") + e.what()});
  }
  return findings;
}

std::optional<PlatformProfile> builtin_platform(std::string_view name) {
  if (name == "local") return PlatformProfile{.name = "local", .backend = BackendKind::local};
  if (name == "simulated") return PlatformProfile{.name = "simulated", .backend = BackendKind::simulated};
  return std::nullopt;
}

namespace {

struct FieldDoc {
  std::string_view field;
  std::string_view type;
  std::string_view note;
};

struct TypeDoc {
  std::string_view name;
  std::string_view summary;
  std::vector<FieldDoc> fields;
};

const std::vector<TypeDoc>& schema_types() {
  static const std::vector<TypeDoc> types = {
      {"Benchmark definition (`*.bench.json`)",
       "Top-level object. Unknown fields are rejected.",
       {{"name", "string, required", "identifier, unique within a suite"},
        {"description", "string", "free text"},
        {"reference_nodes", "integer >= 1", "node count of the reference execution (default 8)"},
        {"parameter_sets", "list of parameter sets", ""},
        {"steps", "list of steps, at least one", "dependency graph must be acyclic"},
        {"variants", "list of variants", ""},
        {"fom", "figure-of-merit object, required", ""},
        {"verification", "list of verification rules", ""}}},
      {"Parameter set",
       "Active iff `active_tags` is empty or intersects the requested tags. Later active sets override "
       "earlier ones parameter by parameter.",
       {{"name", "string, required", "identifier"},
        {"active_tags", "list of strings", "empty: always active"},
        {"parameters", "object, required",
         "name -> list of literal values, a single literal, or `{\"template\": \"...\"}`"}}},
      {"Step",
       "Commands are templates; `${name}` is replaced by the parameter value in a single pass.",
       {{"name", "string, required", "identifier, unique"},
        {"kind", "`compile` | `execute` | `postprocess` | `verify`", "required"},
        {"depends_on", "list of step names", "must name declared steps"},
        {"command", "string, required", "template text"},
        {"iterations", "integer >= 1", "default 1"}}},
      {"Figure of merit (`fom`)",
       "The last match of `pattern` in the step output is the FOM value.",
       {{"pattern", "string, required", "ECMAScript regex with exactly one capture group"},
        {"unit", "string", "for kind `time`: s, ms, us, ns, min or h (default s)"},
        {"kind", "`time` | `rate`", "required"},
        {"work_units", "number > 0", "required iff kind is `rate`; time = work_units / rate"},
        {"lower_is_better", "boolean", "must be true (default)"}}},
      {"Verification rule",
       "`reference` is a literal value or a path to a reference file (one value per line, `#` comments).",
       {{"kind", "`scalar_tolerance` | `exact_match` | `key_presence`", "required"},
        {"target", "string, required", "metric name (`fom`, `time_s`) or output key"},
        {"reference", "string or number", "required for scalar_tolerance and exact_match"},
        {"rel_tolerance", "number >= 0", "scalar_tolerance only"}}},
      {"Variant",
       "Requesting a variant name as a tag adds its `tag_overrides` to the requested tags.",
       {{"name", "`tiny` | `small` | `medium` | `large` or a free tag", "required"},
        {"memory_fraction", "0.25 | 0.5 | 0.75 | 1.0", "required for the four canonical names, forbidden otherwise"},
        {"tag_overrides", "list of strings", ""}}},
      {"Platform profile (`*.platform.json`)",
       "The rendered step command is substituted into `submission_template` as `${command}`.",
       {{"name", "string, required", "identifier"},
        {"backend", "`local` | `simulated` | `external-scheduler`", "required"},
        {"submission_template", "string", "default `${command}`"},
        {"environment", "object", "exported to every step"},
        {"devices_per_node", "integer >= 1", "default 1"},
        {"device_memory_bytes", "integer > 0", "default 40000000000"}}},
  };
  return types;
}

}  // namespace

std::string schema_reference() {
  std::ostringstream out;
  out << "# Benchmark definition schema\n\n"
      << "Generated by `benchkit validate --print-schema`. Definitions are JSON documents.\n";
  for (const auto& type : schema_types()) {
    out << "\n## " << type.name << "\n\n" << type.summary << "\n\n";
    out << "| field | type | notes |\n|---|---|---|\n";
    for (const auto& f : type.fields) out << "| `" << f.field << "` | " << f.type << " | " << f.note << " |\n";
  }
  return out.str();
}

}  // namespace benchkit
