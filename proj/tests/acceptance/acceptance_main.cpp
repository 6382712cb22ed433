#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <thread>

#include <unistd.h>

#include "ruelle/job.hpp"

using namespace ruelle;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds) {
  std::printf("[%s] %2d %-36s %8.2fs  %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), seconds, detail.c_str());
  std::fflush(stdout);
}

// verify-all twice in fresh processes; every emitted file except timings.json must match byte for byte.
CriterionResult determinism() {
  CriterionResult r;
  r.id = 11;
  r.name = "determinism";
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path root = fs::temp_directory_path() / ("ruelle_determinism_" + std::to_string(::getpid()));
  fs::remove_all(root);
  fs::create_directories(root);
  {
    std::ofstream(root / "verify.ini") << "command = verify-all\n";
  }
  int codes[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = root / ("run" + std::to_string(i));
    const std::string cmd = std::string("\"") + RUELLE_CLI_PATH + "\" --config \"" + (root / "verify.ini").string() +
                            "\" --out \"" + out.string() + "\" > /dev/null 2>&1";
    codes[i] = std::system(cmd.c_str());
  }
  r.require(codes[0] == codes[1], "exit codes differ");
  std::size_t compared = 0;
  std::set<std::string> names;
  for (int i = 0; i < 2; ++i)
    for (const auto& e : fs::directory_iterator(root / ("run" + std::to_string(i)))) names.insert(e.path().filename().string());
  for (const auto& n : names) {
    if (n == "timings.json") continue;
    const fs::path a = root / "run0" / n, b = root / "run1" / n;
    r.require(fs::exists(a) && fs::exists(b), n + " missing from one run");
    if (fs::exists(a) && fs::exists(b)) {
      r.require(slurp(a) == slurp(b), n + " differs between runs");
      ++compared;
    }
  }
  r.require(names.count("manifest.json") > 0, "no manifest emitted");
  r.record("files_compared", static_cast<double>(compared));
  fs::remove_all(root);
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

int main() {
  set_thread_count(std::max(1u, std::thread::hardware_concurrency()));
  AcceptanceSuite suite;
  int failed = 0;
  for (int id = 1; id <= kCriterionCount; ++id) {
    auto r = suite.run(id);
    report(r.id, r.name, r.passed, r.detail(), r.seconds);
    failed += !r.passed;
  }
  auto d = determinism();
  report(d.id, d.name, d.passed, d.detail(), d.seconds);
  failed += !d.passed;
  std::printf("%d/%d criteria passed\n", 11 - failed, 11);
  return failed ? 1 : 0;
}
