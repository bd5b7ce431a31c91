#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const auto p = fs::temp_directory_path() / ("mtf_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return dir;
}

struct Run {
  int code;
  std::string out;
};

Run mtf(const std::string& args) {
  const auto out_file = work_dir() / "stdout.txt";
  const std::string cmd = "cd '" + work_dir().string() + "' && '" + MTF_CLI_PATH + "' " + args +
                          " > '" + out_file.string() + "' 2> '" + (work_dir() / "stderr.txt").string() + "'";
  const int status = std::system(cmd.c_str());
  std::ifstream in(out_file);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(work_dir() / p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream out(work_dir() / p);
  out << text;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("synth writes a manifest and one file per pair") {
  CHECK(mtf("synth --types 3 --sizes 60,60,60 --clusters 3 --seed 7 --out s1").code == 0);
  for (const auto* f : {"manifest.json", "r_0_1.mtx", "r_0_2.mtx", "r_1_2.mtx"})
    CHECK(fs::exists(work_dir() / "s1" / f));
  CHECK(mtf("synth --types 3 --sizes 60,60,60 --clusters 3 --seed 7 --out s2").code == 0);
  for (const auto* f : {"manifest.json", "r_0_1.mtx", "r_0_2.mtx", "r_1_2.mtx", "labels_0.txt"})
    CHECK(slurp(fs::path("s1") / f) == slurp(fs::path("s2") / f));
  CHECK(mtf("synth --types 3 --sizes 60,60,60 --clusters 3 --seed 8 --out s3").code == 0);
  CHECK(slurp("s1/r_0_1.mtx") != slurp("s3/r_0_1.mtx"));
}

TEST_CASE("usage errors exit 2") {
  CHECK(mtf("synth --types 3 --sizes 60,60,60 --seed 7").code == 2);
  CHECK(mtf("").code == 2);
  CHECK(mtf("frobnicate").code == 2);
  CHECK(mtf("synth --types 3 --sizes 60,60 --clusters 3").code == 2);
  CHECK(mtf("cluster s1/manifest.json").code == 2);
  CHECK(mtf("cluster s1/manifest.json --clusters three").code == 2);
  CHECK(mtf("--help").code == 0);
}

TEST_CASE("runtime errors exit 1") {
  CHECK(mtf("cluster missing.json --clusters 2").code == 1);
  CHECK(mtf("synth --types 2 --sizes 5,5 --clusters 3 --noise 2").code == 1);
  CHECK(mtf("cluster s1/manifest.json --clusters 3 --k 500 --out bad").code == 1);
}

TEST_CASE("noiseless cluster run recovers every type") {
  REQUIRE(mtf("synth --types 2 --sizes 60,45 --clusters 3 --seed 1 --out clean").code == 0);
  const auto run = mtf("cluster clean/manifest.json --clusters 3 --seed 2 --out clean_run");
  REQUIRE(run.code == 0);
  CHECK(run.out.find("type 0 (type0): nmi=1.0000 ac=1.0000") != std::string::npos);
  CHECK(run.out.find("type 1 (type1): nmi=1.0000 ac=1.0000") != std::string::npos);
  CHECK(fs::exists(work_dir() / "clean_run" / "metrics.csv"));
  CHECK(fs::exists(work_dir() / "clean_run" / "config.json"));
}

TEST_CASE("delta 0 zeroes the inter column") {
  const auto run = mtf("cluster s1/manifest.json --clusters 3 --delta 0 --max-iters 20 --out d0");
  REQUIRE(run.code == 0);
  const auto at = run.out.find("iterations=");
  REQUIRE(at != std::string::npos);
  const std::size_t iterations = std::stoul(run.out.substr(at + 11));
  std::istringstream trace(slurp("d0/trace.csv"));
  std::string line;
  std::getline(trace, line);
  CHECK(line == "iter,reconstruction,intra,inter,total");
  std::size_t rows = 0;
  while (std::getline(trace, line)) {
    std::stringstream cells(line);
    std::string cell;
    for (int c = 0; c < 4; ++c) std::getline(cells, cell, ',');
    CHECK(cell == "0");
    ++rows;
  }
  CHECK(rows == iterations + 1);
}

TEST_CASE("zero iterations reports the initialization") {
  const auto run = mtf("cluster s1/manifest.json --clusters 3 --max-iters 0 --out z");
  CHECK(run.code == 0);
  CHECK(run.out.find("iterations=0") != std::string::npos);
  CHECK(run.out.find("nmi=") != std::string::npos);
  const auto trace = slurp("z/trace.csv");
  CHECK(std::count(trace.begin(), trace.end(), '\n') == 2);
}

TEST_CASE("repeated runs and config replay are byte-identical") {
  const std::string flags = "--clusters 3 --lambda 5 --delta-ratio 0.2 --max-iters 40 --seed 3 --dump-factors";
  REQUIRE(mtf("cluster s1/manifest.json " + flags + " --out a").code == 0);
  REQUIRE(mtf("cluster s1/manifest.json " + flags + " --out b").code == 0);
  REQUIRE(mtf("cluster --config a/config.json --dump-factors --out c").code == 0);
  for (const auto* f : {"labels_0.txt", "labels_1.txt", "labels_2.txt", "trace.csv",
                        "metrics.csv", "config.json", "g_0.mtx", "s_0_1.mtx"}) {
    CHECK(slurp(fs::path("a") / f) == slurp(fs::path("b") / f));
    CHECK(slurp(fs::path("a") / f) == slurp(fs::path("c") / f));
  }
}

TEST_CASE("thread count does not change the outputs") {
  REQUIRE(mtf("cluster s1/manifest.json --clusters 3 --max-iters 30 --out t1").code == 0);
  REQUIRE(mtf("--threads 4 cluster s1/manifest.json --clusters 3 --max-iters 30 --out t4").code == 0);
  CHECK(slurp("t1/trace.csv") == slurp("t4/trace.csv"));
  CHECK(slurp("t1/labels_0.txt") == slurp("t4/labels_0.txt"));
}

TEST_CASE("eval") {
  write("p.txt", "0\n0\n1\n1\n");
  write("q.txt", "1\n1\n0\n0\n");
  write("short.txt", "0\n1\n");
  auto run = mtf("eval --pred p.txt --truth p.txt");
  CHECK(run.code == 0);
  CHECK(run.out.find("nmi=1.000000\naccuracy=1.000000") != std::string::npos);
  run = mtf("eval --pred p.txt --truth q.txt --csv scores.csv --label perm");
  CHECK(run.code == 0);
  CHECK(run.out.find("accuracy=1.000000") != std::string::npos);
  CHECK(slurp("scores.csv").find("perm,1.000000,1.000000,nan") != std::string::npos);
  CHECK(mtf("eval --pred p.txt --truth short.txt").code == 1);

  write("three.txt", "0\n0\n1\n");
  write("data.mtx",
        "%%MatrixMarket matrix coordinate real general\n3 2 4\n1 1 1\n2 2 1\n3 1 2\n3 2 3\n");
  run = mtf("eval --pred three.txt --truth three.txt --data data.mtx");
  CHECK(run.code == 0);
  CHECK(run.out.find("cohesiveness=1.250000") != std::string::npos);
}

TEST_CASE("sweep") {
  const auto run = mtf(
      "sweep s1/manifest.json --clusters 3 --max-iters 10 --delta-ratios 0.01,0.1,1 --seeds 0,1 "
      "--eval-type 0 --out sweep.csv");
  REQUIRE(run.code == 0);
  const auto csv = slurp("sweep.csv");
  CHECK(csv.rfind("lambda,delta_ratio,p,seed,type,nmi,ac,iters,total_obj\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 10);
  REQUIRE(mtf("sweep s1/manifest.json --clusters 3 --max-iters 10 --delta-ratios 0.01,0.1,1 "
              "--seeds 0,1 --eval-type 0 --out sweep2.csv").code == 0);
  CHECK(slurp("sweep2.csv") == csv);
}

TEST_CASE("scale") {
  const auto run = mtf("scale --sizes 30,20,20 --clusters 2 --iters 2 --repeats 1 --out scale.csv");
  REQUIRE(run.code == 0);
  const auto csv = slurp("scale.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
}

TEST_CASE("graphs dump") {
  REQUIRE(mtf("graphs s1/manifest.json --k 3 --p 4 --out g").code == 0);
  for (const auto* f : {"w_0.mtx", "l_2.mtx", "q_1.mtx", "z_0_1.mtx", "z_1_0.mtx", "z_2_1.mtx"})
    CHECK(fs::exists(work_dir() / "g" / f));
}

}  // TEST_SUITE
