#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "benchkit/specmodel.hpp"

namespace testsupport {

using Rng = std::mt19937_64;

inline std::filesystem::path source_dir() { return BENCHKIT_SOURCE_DIR; }
inline std::filesystem::path tool_dir() { return BENCHKIT_TOOL_DIR; }

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("benchkit-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline double uniform_real(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(uniform_real(rng, std::log(lo), std::log(hi)));
}

inline std::string random_identifier(Rng& rng, const std::string& prefix) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789_";
  std::string s = prefix;
  const int n = uniform_int(rng, 1, 6);
  for (int i = 0; i < n; ++i) s += alphabet[uniform_int(rng, 0, static_cast<int>(alphabet.size()) - 1)];
  return s;
}

inline std::string random_literal(Rng& rng) {
  static const std::string alphabet = "abcXYZ0123456789-_.:/ \"\\$";
  switch (uniform_int(rng, 0, 2)) {
    case 0: return std::to_string(uniform_int(rng, -1000, 100000));
    case 1: {
      std::string s;
      const int n = uniform_int(rng, 0, 8);
      for (int i = 0; i < n; ++i) s += alphabet[uniform_int(rng, 0, static_cast<int>(alphabet.size()) - 1)];
      return s;
    }
    default: return std::to_string(uniform_int(rng, 1, 9)) + "e" + std::to_string(uniform_int(rng, 0, 20));
  }
}

// A valid spec: literal parameters in the first set, templates referencing
// earlier parameters, optional tag-gated override sets, an acyclic step DAG.
inline benchkit::BenchmarkSpec random_spec(Rng& rng) {
  using namespace benchkit;
  BenchmarkSpec spec;
  spec.name = random_identifier(rng, "bench_");
  spec.description = random_literal(rng);
  spec.reference_nodes = uniform_int(rng, 1, 1024);

  std::vector<std::string> names;
  ParameterSet base;
  base.name = "base";
  const int literal_count = uniform_int(rng, 1, 4);
  for (int i = 0; i < literal_count; ++i) {
    ParameterDef p;
    p.name = "p" + std::to_string(i);
    const int n = uniform_int(rng, 1, 3);
    for (int k = 0; k < n; ++k) p.values.push_back(random_literal(rng));
    names.push_back(p.name);
    base.parameters.push_back(std::move(p));
  }
  const int template_count = uniform_int(rng, 0, 2);
  for (int i = 0; i < template_count; ++i) {
    ParameterDef p;
    p.name = "t" + std::to_string(i);
    p.template_text = "x${" + names[uniform_int(rng, 0, static_cast<int>(names.size()) - 1)] + "}-$${" +
                      names[uniform_int(rng, 0, static_cast<int>(names.size()) - 1)] + "}";
    names.push_back(p.name);
    base.parameters.push_back(std::move(p));
  }
  spec.parameter_sets.push_back(std::move(base));
  const int extra_sets = uniform_int(rng, 0, 2);
  for (int s = 0; s < extra_sets; ++s) {
    ParameterSet set;
    set.name = "set" + std::to_string(s);
    set.active_tags.insert(random_identifier(rng, "tag"));
    ParameterDef p;
    p.name = "p" + std::to_string(uniform_int(rng, 0, literal_count - 1));
    p.values.push_back(random_literal(rng));
    set.parameters.push_back(std::move(p));
    spec.parameter_sets.push_back(std::move(set));
  }

  const int step_count = uniform_int(rng, 1, 5);
  for (int i = 0; i < step_count; ++i) {
    Step s;
    s.name = "step" + std::to_string(i);
    s.kind = static_cast<StepKind>(uniform_int(rng, 0, 3));
    for (int j = 0; j < i; ++j) {
      if (uniform_int(rng, 0, 2) == 0) s.depends_on.push_back("step" + std::to_string(j));
    }
    s.command = "run ${" + names[uniform_int(rng, 0, static_cast<int>(names.size()) - 1)] + "} --flag";
    s.iterations = uniform_int(rng, 1, 3);
    spec.steps.push_back(std::move(s));
  }

  if (uniform_int(rng, 0, 1) == 0) {
    spec.fom = {"FOM: time=(\\S+)", std::vector<std::string>{"s", "ms", "us", "ns", "min", "h"}[uniform_int(rng, 0, 5)],
                FomKind::time, std::nullopt, true};
  } else {
    spec.fom = {"rate=([0-9.eE+-]+)", "tokens/s", FomKind::rate, log_uniform(rng, 1.0, 1e12), true};
  }

  const int rules = uniform_int(rng, 0, 3);
  for (int i = 0; i < rules; ++i) {
    VerificationRule r;
    r.kind = static_cast<VerificationKind>(uniform_int(rng, 0, 2));
    r.target = random_identifier(rng, "key");
    if (r.kind != VerificationKind::key_presence) r.reference = random_literal(rng);
    if (r.kind == VerificationKind::scalar_tolerance) r.rel_tolerance = log_uniform(rng, 1e-12, 1e-2);
    spec.verification.push_back(std::move(r));
  }

  static const char* canonical[] = {"tiny", "small", "medium", "large"};
  static const double fractions[] = {0.25, 0.5, 0.75, 1.0};
  for (int v = 0; v < 4; ++v) {
    if (uniform_int(rng, 0, 2) != 0) continue;
    VariantDef def;
    def.name = canonical[v];
    def.memory_fraction = fractions[v];
    if (uniform_int(rng, 0, 1)) def.tag_overrides.insert(random_identifier(rng, "tag"));
    spec.variants.push_back(std::move(def));
  }
  if (uniform_int(rng, 0, 1)) spec.variants.push_back({"hs", std::nullopt, {"high-scaling"}});
  return spec;
}

}  // namespace testsupport
