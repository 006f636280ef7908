#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scope_refine/minic/ast.hpp"
#include "scope_refine/minic/interpreter.hpp"

namespace scope_refine::testing {

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Path inside a per-user scratch directory, created on first use.
inline std::string temp_path(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "scope_refine_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

// (file name, source) for every .mc fixture, sorted by name.
inline std::vector<std::pair<std::string, std::string>> fixture_programs() {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& entry : std::filesystem::directory_iterator(SR_FIXTURE_DIR "/programs")) {
    if (entry.path().extension() == ".mc") {
      out.emplace_back(entry.path().filename().string(), read_file(entry.path()));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Argument vector matching the entry signature; ints mostly small with the
// occasional zero and extreme.
template <class Rng>
std::vector<minic::Value> random_args(const minic::FunctionDef& f, Rng& rng) {
  std::vector<minic::Value> args;
  for (const auto& p : f.params) {
    if (p.type == minic::Type::Bool) {
      args.push_back(minic::Value::of_bool(rng() & 1));
      continue;
    }
    const auto roll = rng() % 20;
    std::int64_t v;
    if (roll == 0) {
      v = 0;
    } else if (roll == 1) {
      v = static_cast<std::int64_t>(rng());
    } else {
      v = static_cast<std::int64_t>(rng() % 41) - 20;
    }
    args.push_back(minic::Value::of_int(v));
  }
  return args;
}

}  // namespace scope_refine::testing
