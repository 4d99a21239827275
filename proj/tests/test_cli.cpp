#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "qevent/serialize.hpp"

// End-to-end checks of the qevent binary. The binary path arrives through
// the QEVENT_BIN compile definition set by CMake.

namespace {

std::string bin() { return QEVENT_BIN; }

int run(const std::string& args) {
  const std::string cmd = bin() + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string tmp_path(const std::string& name) {
  return std::string("/tmp/qevent_cli_test_") + name;
}

}  // namespace

TEST_CASE("unknown subcommand and missing sources exit 2") {
  CHECK(run("definitely-not-a-subcommand") == 2);
  CHECK(run("or-blended --shots 10") == 2);          // no instance source
  CHECK(run("or-blended --instance /nope.json") == 2);
  CHECK(run("gen-instance") == 2);                   // --kind required
}

TEST_CASE("gen-instance feeds or-blended and the run passes") {
  const std::string inst = tmp_path("case1.json");
  const std::string result = tmp_path("case1_result.json");
  CHECK(run("gen-instance --kind case-one --dim 4 --m 6 --eps 0.1 --beta 0.5 "
            "--seed 5 --output " + inst) == 0);
  CHECK(run("or-blended --instance " + inst +
            " --shots 5000 --seed 3 --threads 2 --output " + result) == 0);
  qevent::Json j = qevent::load_json_file(result);
  CHECK(j["command"] == "or-blended");
  CHECK(j["pass"] == true);
  CHECK(j["seed"] == 3);
  CHECK(j.contains("instance_hash"));
  CHECK(j.contains("exact_accept"));
}

TEST_CASE("or-random refuses a non-projective instance with exit 2") {
  // hand-build an instance whose only measurement is a strict effect
  qevent::SplitRng rng(3);
  qevent::MeasurementEnsemble ens(
      {qevent::TwoOutcomeMeasurement(qevent::random_effect(3, rng))});
  qevent::OrInstance inst(ens, qevent::random_state(3, rng),
                          qevent::CaseTag::Unknown, 0.5, 1.0);
  const std::string path = tmp_path("effect.json");
  qevent::write_text_file(path,
                          qevent::or_instance_to_json(inst).dump() + "\n");
  CHECK(run("or-random --instance " + path + " --shots 100 --seed 1") == 2);
  // the blended protocol handles the same instance fine
  CHECK(run("or-blended --instance " + path + " --shots 100 --seed 1") == 0);
}

TEST_CASE("verify-bounds exits 0 and is byte-deterministic") {
  const std::string out_a = tmp_path("vb_a.json");
  const std::string out_b = tmp_path("vb_b.json");
  const std::string jsonl = tmp_path("vb.jsonl");
  CHECK(run("verify-bounds --count 2 --seed 11 --threads 2 --jsonl " + jsonl +
            " --output " + out_a) == 0);
  CHECK(run("verify-bounds --count 2 --seed 11 --threads 1 --output " + out_b) ==
        0);
  CHECK(slurp(out_a) == slurp(out_b));
  // one JSON object per report line
  std::istringstream lines(slurp(jsonl));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    qevent::Json j = qevent::Json::parse(line);
    CHECK(j.contains("bound"));
    CHECK(j["pass"] == true);
    ++count;
  }
  CHECK(count == 2 * static_cast<int>(qevent::all_bound_ids().size()));
}

TEST_CASE("identical config produces byte-identical primary output") {
  const std::string out_a = tmp_path("det_a.json");
  const std::string out_b = tmp_path("det_b.json");
  const std::string args =
      "or-random --gen case-two --dim 4 --m 5 --delta 0.05 --gen-seed 2 "
      "--shots 4000 --seed 9 ";
  CHECK(run(args + "--threads 2 --output " + out_a) == 0);
  CHECK(run(args + "--threads 1 --output " + out_b) == 0);
  CHECK(slurp(out_a) == slurp(out_b));
}

TEST_CASE("accept-probability curves land in the CSV") {
  const std::string csv = tmp_path("curves.csv");
  const std::string result = tmp_path("curves_result.json");
  CHECK(run("or-blended --gen case-one --dim 3 --m 4 --eps 0.2 --beta 0.3 "
            "--gen-seed 4 --shots 2000 --seed 6 --csv " + csv + " --output " +
            result) == 0);
  const std::string contents = slurp(csv);
  CHECK(contents.rfind("k,blended_accept,random_accept\n", 0) == 0);
  int rows = 0;
  for (char c : contents) {
    if (c == '\n') ++rows;
  }
  CHECK(rows == 1 + 4 + 1);  // header + k = 0..4
}

TEST_CASE("mean-estimate and event-find emit self-describing results") {
  const std::string result = tmp_path("mean.json");
  CHECK(run("mean-estimate --gen random-projective --dim 3 --m 2 --gen-seed 8 "
            "--t 4 --copies 2 --shots 3000 --seed 2 --threads 2 --output " +
            result) == 0);
  qevent::Json j = qevent::load_json_file(result);
  CHECK(j["pass"] == true);
  CHECK(j.contains("true_mean"));
  CHECK(j.contains("mean_estimate"));

  const std::string ev = tmp_path("event.json");
  CHECK(run("event-find --gen case-one --dim 4 --m 5 --eps 0.1 --beta 0.4 "
            "--gen-seed 3 --mode blended --shots 5000 --seed 4 --output " +
            ev) == 0);
  qevent::Json je = qevent::load_json_file(ev);
  CHECK(je["pass"] == true);
  CHECK(je.contains("good_rate"));
  CHECK(je["theorem_bounds"].contains("good_rate_lower"));
}

TEST_CASE("trajectory dumps are one JSON record per shot") {
  const std::string traj = tmp_path("traj.jsonl");
  CHECK(run("or-blended --gen case-one --dim 3 --m 3 --eps 0.2 --beta 0.2 "
            "--gen-seed 1 --shots 7 --seed 2 --trajectories " + traj) == 0);
  std::istringstream lines(slurp(traj));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    qevent::Json j = qevent::Json::parse(line);
    CHECK(j.contains("outcomes"));
    CHECK(j.contains("final_state"));
    ++count;
  }
  CHECK(count == 7);
}

TEST_CASE("counterexample subcommand reports exact and sampled rates") {
  const std::string result = tmp_path("ce.json");
  CHECK(run("counterexample --kind blended --eps 0.2 --shots 5000 --seed 12 "
            "--threads 2 --output " + result) == 0);
  qevent::Json j = qevent::load_json_file(result);
  CHECK(j["pass"] == true);
  CHECK(j.contains("exact_first_in_b_conditional"));
  CHECK(j["theorem_bounds"].contains("accept_lower"));
}
