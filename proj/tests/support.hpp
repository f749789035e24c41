#pragma once

// Helpers shared by the test binaries and the acceptance runner.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <numeric>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "intentcap/core/elements.hpp"
#include "intentcap/embeddings/provider.hpp"
#include "intentcap/llm/gateway.hpp"
#include "intentcap/llm/scripted_stub.hpp"

namespace testing {

inline std::filesystem::path fixtures() { return INTENTCAP_FIXTURES; }

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("intentcap-" + tag + "-" + std::to_string(rd()));
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

 private:
  std::filesystem::path path_;
};

using Matrix = std::vector<std::vector<double>>;

// Brute-force references. They deliberately share no code with the solver.

/// Max over all functions from the smaller side into the larger one of the
/// summed weights (rows map to columns when rows <= cols).
inline double brute_best_function(const Matrix& w) {
  const std::size_t r = w.size(), c = r ? w[0].size() : 0;
  if (r == 0 || c == 0) return 0.0;
  const bool rows_small = r <= c;
  const std::size_t from = rows_small ? r : c, to = rows_small ? c : r;
  std::vector<std::size_t> f(from, 0);
  double best = -1.0;
  while (true) {
    double total = 0.0;
    for (std::size_t k = 0; k < from; ++k) total += rows_small ? w[k][f[k]] : w[f[k]][k];
    best = std::max(best, total);
    std::size_t k = 0;
    while (k < from && ++f[k] == to) f[k++] = 0;
    if (k == from) break;
  }
  return best;
}

/// Max over all injections from the smaller side into the larger one.
inline double brute_best_injection(const Matrix& w) {
  const std::size_t r = w.size(), c = r ? w[0].size() : 0;
  if (r == 0 || c == 0) return 0.0;
  const bool rows_small = r <= c;
  const std::size_t from = rows_small ? r : c, to = rows_small ? c : r;
  std::vector<std::size_t> perm(to);
  std::iota(perm.begin(), perm.end(), 0);
  double best = -1.0;
  // Every injection is the prefix of some permutation of the larger side.
  do {
    double total = 0.0;
    for (std::size_t k = 0; k < from; ++k) total += rows_small ? w[k][perm[k]] : w[perm[k]][k];
    best = std::max(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline std::vector<double> random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(dim);
  double n2 = 0.0;
  for (auto& x : v) {
    x = g(rng);
    n2 += x * x;
  }
  for (auto& x : v) x /= std::sqrt(n2);
  return v;
}

inline intentcap::llm::ModelProfile stub_model(const std::string& id, std::int64_t max_output = 100000) {
  intentcap::llm::ModelProfile m;
  m.model_id = id;
  m.provider_kind = intentcap::llm::ProviderKind::scripted_stub;
  m.max_output_tokens = max_output;
  return m;
}

/// Gateway over in-memory stubs, one per listed model id, in record mode
/// with an in-memory cassette.
inline intentcap::llm::Gateway stub_gateway(
    const std::vector<std::pair<std::string, intentcap::llm::StubScript>>& scripts,
    intentcap::llm::CassetteMode mode = intentcap::llm::CassetteMode::record,
    intentcap::llm::GatewayOptions options = {}) {
  intentcap::llm::Gateway::ClientMap clients;
  for (const auto& [id, script] : scripts) clients[id] = std::make_shared<intentcap::llm::ScriptedStubClient>(script);
  return intentcap::llm::Gateway(std::move(clients), std::make_shared<intentcap::llm::Cassette>(), mode, {}, options);
}

inline intentcap::Intention intention(const std::string& id, const std::vector<std::string>& in,
                                      const std::vector<std::string>& proc, const std::vector<std::string>& out) {
  return {id, intentcap::SignalTriple(in, proc, out), {}};
}

/// Copies the desk configuration and the files it names into `dir`.
inline std::filesystem::path desk_workspace(const std::filesystem::path& dir) {
  for (const char* f : {"desk.json", "catalog.txt", "desk_cassette.jsonl", "stub_split_merge.json"}) {
    std::filesystem::copy_file(fixtures() / f, dir / f, std::filesystem::copy_options::overwrite_existing);
  }
  return dir / "desk.json";
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

#ifdef INTENTCAP_CLI
struct CliResult {
  int code = -1;
  std::string output;  // stdout and stderr together
};

/// Runs the CLI with `args` (already shell-quoted where needed).
inline CliResult run_cli(const std::string& args, const std::filesystem::path& scratch) {
  const auto out = scratch / "cli-output.txt";
  const std::string cmd = std::string("\"") + INTENTCAP_CLI + "\" " + args + " > \"" + out.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = slurp(out);
  return r;
}
#endif

}  // namespace testing
