// End-to-end checks of the command-line tool: exit codes, file outputs,
// determinism of repeated builds. Runs the real binary via std::system.

#include <cstdio>
#include <cstdlib>
#include <sys/wait.h>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int failures = 0;

void check(bool ok, const std::string& what) {
  std::printf("%s %s\n", ok ? "[ok]  " : "[FAIL]", what.c_str());
  if (!ok) ++failures;
}

int run(const std::string& args) {
  const std::string cmd = std::string(QDAA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / "qdaa_cli_tests";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string base = " --kappa 4 --sims 10 --seed 42 --step 5e-4 --tmax 10 --threads 2 -o ";
  const fs::path a1 = dir / "a1.qdaa";
  const fs::path a2 = dir / "a2.qdaa";

  check(run("build oscillatory" + base + a1.string() + " --report-out " + (dir / "r.json").string()) == 0,
        "build oscillatory exits 0");
  check(fs::exists(a1), "automaton file written");
  check(fs::exists(dir / "r.json"), "report JSON written");

  check(run("build oscillatory" + base + a2.string()) == 0, "second build exits 0");
  check(slurp(a1) == slurp(a2), "repeated builds are byte identical");

  check(run("build oscillatory --kappa 0 -o " + (dir / "bad.qdaa").string()) == 1,
        "kappa 0 is a usage error (exit 1)");
  check(run("build " + (dir / "missing.model").string() + base + (dir / "x.qdaa").string()) == 1,
        "missing model file exits 1");

  {
    std::ofstream bad(dir / "bad.model");
    bad << "var X\neq X = 1*X*X\nthresholds X = 0 1\ninit X = [0, 1]\n";
  }
  check(run("build " + (dir / "bad.model").string() + base + (dir / "x.qdaa").string()) == 1,
        "non-multi-affine model exits 1");

  check(run("bounds " + a1.string()) == 0, "bounds exits 0");
  check(run("bounds " + (dir / "bad.model").string()) == 1, "bounds on a corrupt file exits 1");

  check(run("export " + a1.string() + " --format dot -o " + (dir / "a.dot").string()) == 0, "dot export");
  check(slurp(dir / "a.dot").find("digraph") == 0, "dot output is a digraph");
  check(run("export " + a1.string() + " --format csv -o " + (dir / "a.csv").string()) == 0, "csv export");
  check(run("export " + a1.string() + " --format xml -o " + (dir / "a.xml").string()) == 1,
        "unknown export format exits 1");

  check(run("render " + a1.string() + " --axes X,Y -o " + (dir / "a.svg").string()) == 0, "render");
  check(slurp(dir / "a.svg").find("<svg") != std::string::npos, "render output is SVG");
  check(run("render " + a1.string() + " --axes X,Q -o " + (dir / "b.svg").string()) == 1,
        "unknown axis name exits 1");

  check(run("compare-rats oscillatory --kappa 4 --sims 10 --seed 42 --step 5e-4 --tmax 10") == 0,
        "compare-rats runs");

  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
