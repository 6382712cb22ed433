#include <cstdlib>
#include <iostream>
#include <thread>

#include "ruelle/job.hpp"

using namespace ruelle;

namespace {

unsigned env_threads() {
  const char* s = std::getenv("RUELLE_THREADS");
  if (!s || !*s) return 0;
  char* end = nullptr;
  const unsigned long v = std::strtoul(s, &end, 10);
  if (*end != '\0' || v == 0) throw ConfigError(std::string("RUELLE_THREADS must be a positive integer, got '") + s + "'");
  return static_cast<unsigned>(v);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ruelle: transfer operators, Gibbs measures and zero-temperature limits"};
  std::string config_path, out_dir;
  unsigned threads = 0;
  bool verify = false;
  app.add_option("--config", config_path, "job config (INI)")->required();
  app.add_option("--out", out_dir, "output directory (overrides the config's output key)");
  app.add_option("--threads", threads, "worker threads (overrides RUELLE_THREADS)")->check(CLI::PositiveNumber);
  app.add_flag("--verify", verify, "fail when a post-run invariant check fails");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  fs::path out;
  try {
    auto cfg = parse_config_file(config_path);
    out = !out_dir.empty() ? fs::path(out_dir) : !cfg.output.empty() ? cfg.base_dir / cfg.output : fs::path("ruelle_out");
    unsigned t = threads;
    if (!t) t = env_threads();
    if (!t) t = cfg.threads;
    if (!t) t = std::max(1u, std::thread::hardware_concurrency());
    set_thread_count(t);
    auto m = run_job(cfg, out, verify);
    std::cout << cfg.command << ": " << m.files.size() << " files written to " << out.string() << "\n";
    return 0;
  } catch (const std::exception& e) {
    const json j = error_json(e);
    const int rc = j["error"]["exit_code"].get<int>();
    if (out.empty() && !out_dir.empty()) out = out_dir;
    if (!out.empty()) {
      try {
        ReportWriter(out).write_json("error.json", j);
      } catch (const std::exception&) {
      }
    }
    std::cerr << j.dump() << "\n";
    return rc;
  }
}
