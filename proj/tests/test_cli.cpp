#include <doctest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "eiss/evaluation.hpp"
#include "eiss/export.hpp"
#include "eiss/image.hpp"
#include "eiss/synthetic.hpp"
#include "test_support.hpp"

using namespace eiss;
namespace fs = std::filesystem;

#ifndef EISS_BIN_PATH
#define EISS_BIN_PATH "eiss"
#endif

namespace {

int run_cli(const std::string& args, const fs::path& stdout_file = {}) {
  std::string cmd = std::string(EISS_BIN_PATH) + " " + args;
  cmd += stdout_file.empty() ? " > /dev/null 2>&1" : " > " + stdout_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

size_t line_count(const fs::path& path) {
  const std::string text = test::read_file(path);
  return std::count(text.begin(), text.end(), '\n');
}

// writes a tiny VOC-style dataset of synthetic images
void write_dataset(const fs::path& root, int count) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "annotations");
  SyntheticSpec spec;
  spec.frame_width = 64;
  spec.frame_height = 64;
  for (int i = 0; i < count; ++i) {
    const SyntheticSample s = generate_synthetic(spec, 4000 + i);
    char name[32];
    std::snprintf(name, sizeof(name), "img_%03d", i);
    save_image(s.image, (root / "images" / (std::string(name) + ".ppm")).string());
    std::ofstream xml(root / "annotations" / (std::string(name) + ".xml"));
    xml << "<annotation><filename>" << name << ".ppm</filename>"
        << "<size><width>64</width><height>64</height></size>"
        << "<object><name>class_" << s.class_id << "</name><bndbox>"
        << "<xmin>" << s.truth.x + 1 << "</xmin><ymin>" << s.truth.y + 1 << "</ymin>"
        << "<xmax>" << s.truth.x + s.truth.w << "</xmax><ymax>" << s.truth.y + s.truth.h
        << "</ymax></bndbox></object></annotation>";
  }
}

}  // namespace

TEST_CASE("cli run on a synthetic image writes trace and prediction") {
  const auto dir = test::make_temp_dir("cli_run");
  const int rc = run_cli("run --synthetic --seed 3 --out " + (dir / "out").string());
  CHECK(rc == 0);
  REQUIRE(fs::exists(dir / "out" / "trace.csv"));
  REQUIRE(fs::exists(dir / "out" / "prediction.json"));
  REQUIRE(fs::exists(dir / "out" / "run_manifest.json"));
  const size_t rows = line_count(dir / "out" / "trace.csv");
  CHECK(rows >= 2);        // header + at least one iteration
  CHECK(rows <= 31);       // header + at most 30 iterations
  const std::string pred = test::read_file(dir / "out" / "prediction.json");
  CHECK(pred.find("\"final_region\"") != std::string::npos);
  CHECK(pred.find("\"stop_reason\"") != std::string::npos);
  CHECK(pred.find("\"progression\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("cli run stops after one iteration under a huge eta") {
  const auto dir = test::make_temp_dir("cli_eta");
  const int rc = run_cli("run --synthetic --seed 3 --eta 1000000 --out " + (dir / "out").string());
  CHECK(rc == 0);
  CHECK(line_count(dir / "out" / "trace.csv") == 2);  // header + 1 row
  fs::remove_all(dir);
}

TEST_CASE("cli validation failures exit 2") {
  const auto dir = test::make_temp_dir("cli_bad");
  CHECK(run_cli("run --image /nonexistent.ppm --out " + (dir / "out").string()) == 2);
  CHECK(run_cli("run --out " + (dir / "out").string()) == 2);  // no input mode
  CHECK(run_cli("definitely-not-a-command") == 2);
  CHECK(run_cli("synth-bench --count 0 --out " + (dir / "out").string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("cli evaluate runs a voc dataset end to end") {
  const auto dir = test::make_temp_dir("cli_eval");
  write_dataset(dir, 4);
  // one broken annotation lands in the skipped list without aborting
  test::write_text(dir / "annotations" / "broken.xml", "<annotation><filename>");

  const auto log = dir / "stdout.txt";
  const int rc = run_cli("evaluate --images " + (dir / "images").string() + " --annotations " +
                             (dir / "annotations").string() + " --cap 100 --out " +
                             (dir / "out").string(),
                         log);
  CHECK(rc == 0);
  const std::string out = test::read_file(log);
  CHECK(out.find("mean_iou=") != std::string::npos);

  const EvalReport report = load_report((dir / "out" / "report.json").string());
  CHECK(report.images.size() == 4);
  REQUIRE(report.skipped.size() == 1);
  CHECK(report.skipped[0].image_id == "broken.xml");
  fs::remove_all(dir);
}

TEST_CASE("cli evaluate of an empty dataset exits 0 with an empty report") {
  const auto dir = test::make_temp_dir("cli_empty");
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "annotations");
  const int rc = run_cli("evaluate --images " + (dir / "images").string() + " --annotations " +
                         (dir / "annotations").string() + " --out " + (dir / "out").string());
  CHECK(rc == 0);
  const EvalReport report = load_report((dir / "out" / "report.json").string());
  CHECK(report.images.empty());
  CHECK(report.classes.empty());
  fs::remove_all(dir);
}

TEST_CASE("cli synth-bench single image and infeasible spec") {
  const auto dir = test::make_temp_dir("cli_one");
  CHECK(run_cli("synth-bench --count 1 --seed 6 --out " + (dir / "one").string()) == 0);
  const EvalReport report = load_report((dir / "one" / "report.json").string());
  CHECK(report.images.size() == 1);
  // fraction window beyond what the margins allow
  CHECK(run_cli("synth-bench --count 2 --frac-lo 0.98 --frac-hi 0.99 --out " +
                (dir / "bad").string()) == 2);
  fs::remove_all(dir);
}

TEST_CASE("cli reruns are byte-identical") {
  const auto dir = test::make_temp_dir("cli_rerun");
  const std::string args = "synth-bench --count 4 --seed 11 --out ";
  CHECK(run_cli(args + (dir / "a").string()) == 0);
  CHECK(run_cli(args + (dir / "b").string()) == 0);
  CHECK(test::read_file(dir / "a" / "report.json") == test::read_file(dir / "b" / "report.json"));
  CHECK(test::read_file(dir / "a" / "curves.csv") == test::read_file(dir / "b" / "curves.csv"));
  CHECK_FALSE(test::read_file(dir / "a" / "report.json").empty());
  fs::remove_all(dir);
}

TEST_CASE("cli manifest drives a run and flags override it") {
  const auto dir = test::make_temp_dir("cli_manifest");
  test::write_text(dir / "manifest.json", R"({
    "config": {"eta": 1000000.0, "seed": 9},
    "backend": {"kind": "oracle"},
    "input": {"synthetic": {"count": 1, "seed": 9}},
    "output_dir": ")" + (dir / "from_manifest").string() + R"("
  })");

  SUBCASE("manifest alone") {
    const int rc = run_cli("run --synthetic --manifest " + (dir / "manifest.json").string());
    CHECK(rc == 0);
    CHECK(line_count(dir / "from_manifest" / "trace.csv") == 2);  // eta from manifest
  }
  SUBCASE("flag overrides manifest eta") {
    const int rc = run_cli("run --synthetic --manifest " + (dir / "manifest.json").string() +
                           " --eta 10 --out " + (dir / "flag_out").string());
    CHECK(rc == 0);
    CHECK(line_count(dir / "flag_out" / "trace.csv") > 2);
    const std::string copy = test::read_file(dir / "flag_out" / "run_manifest.json");
    CHECK(copy.find("\"eta\": 10.0") != std::string::npos);
  }
  fs::remove_all(dir);
}

TEST_CASE("cli export regenerates csv from a saved report") {
  const auto dir = test::make_temp_dir("cli_export");
  CHECK(run_cli("synth-bench --count 3 --seed 2 --out " + (dir / "out").string()) == 0);
  CHECK(run_cli("export --report " + (dir / "out" / "report.json").string() +
                " --format csv --out " + (dir / "re.csv").string()) == 0);
  CHECK(test::read_file(dir / "re.csv") == test::read_file(dir / "out" / "curves.csv"));
  CHECK(run_cli("export --report " + (dir / "out" / "report.json").string() +
                " --format plot --out " + (dir / "replot").string()) == 0);
  CHECK(fs::exists(dir / "replot" / "overall.iou.norm.tsv"));
  fs::remove_all(dir);
}
