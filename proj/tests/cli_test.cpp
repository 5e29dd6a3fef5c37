#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RunResult run_cli(const std::string& args) {
  static int counter = 0;
  fs::path err_path = fs::temp_directory_path() / ("lf_cli_err_" + std::to_string(++counter));
  std::string cmd = std::string(LF_CLI_PATH) + " " + args + " 2>" + err_path.string();
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_file(err_path);
  fs::remove(err_path);
  return r;
}

std::string fixture(const std::string& name) {
  return std::string(LF_FIXTURE_DIR) + "/" + name;
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("lf_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("polytope validate accepts the projective plane") {
  RunResult r = run_cli("polytope validate --input " + fixture("cp2.json"));
  CHECK(r.exit_code == 0);
  Json j = Json::parse(r.out);
  CHECK(j["delzant"] == true);
  CHECK(j["checks"].size() == 6);
  CHECK(r.err.empty());
}

TEST_CASE("polytope validate reports the non-delzant vertex and exits 1") {
  RunResult r = run_cli("polytope validate --input " + fixture("weighted_triangle.json"));
  CHECK(r.exit_code == 1);
  Json j = Json::parse(r.out);
  CHECK(j["delzant"] == false);
  bool found = false;
  for (const auto& c : j["checks"])
    if (c["name"] == "unimodularity") {
      CHECK(c["pass"] == false);
      CHECK(c["detail"].get<std::string>().find("vertex") != std::string::npos);
      found = true;
    }
  CHECK(found);
  Json e = Json::parse(r.err);
  CHECK(e["error"] == "validation");
}

TEST_CASE("polytope vertices enumerates the triangle") {
  RunResult r = run_cli("polytope vertices --input " + fixture("cp2.json"));
  CHECK(r.exit_code == 0);
  Json j = Json::parse(r.out);
  CHECK(j["count"] == 3);
  for (const auto& v : j["vertices"]) CHECK(v["active_facets"].size() == 2);
}

TEST_CASE("missing and malformed inputs are usage failures") {
  RunResult missing = run_cli("polytope validate --input /nonexistent/poly.json");
  CHECK(missing.exit_code == 2);
  CHECK(Json::parse(missing.err)["error"] == "usage");

  fs::path dir = fresh_dir("malformed");
  std::ofstream(dir / "bad.json") << "{ not json";
  RunResult malformed = run_cli("polytope validate --input " + (dir / "bad.json").string());
  CHECK(malformed.exit_code == 2);
  CHECK(Json::parse(malformed.err)["error"] == "usage");

  RunResult unknown = run_cli("polytope validate --frobnicate");
  CHECK(unknown.exit_code == 2);
  CHECK(Json::parse(unknown.err)["error"] == "usage");
}

TEST_CASE("pencil reports the conic splitting with its singular values") {
  RunResult r = run_cli("pencil --polytope " + fixture("cp2.json") + " --direction 1,1");
  CHECK(r.exit_code == 0);
  Json j = Json::parse(r.out);
  CHECK(j["plus_exponents"] == Json({{"0", "1"}, {"1", "1"}}));
  CHECK(j["minus_exponents"] == Json({{"2", "2"}}));
  CHECK(j["base_locus"].size() == 2);
  CHECK(j["reduced_basis"] == Json::array({{"1", "-1"}}));
  REQUIRE(j["singular_values"].size() == 2);
  CHECK(j["singular_values"][0]["value"] == "0");
  CHECK(j["singular_values"][1]["value"] == "infinity");
  for (const auto& sv : j["singular_values"]) CHECK(sv["expected"] == true);
}

TEST_CASE("pencil direction sign flip swaps the two sides") {
  Json pos = Json::parse(run_cli("pencil --polytope " + fixture("cp2.json") + " --direction 1,1").out);
  Json neg =
      Json::parse(run_cli("pencil --polytope " + fixture("cp2.json") + " --direction -1,-1").out);
  CHECK(pos["plus_exponents"] == neg["minus_exponents"]);
  CHECK(pos["minus_exponents"] == neg["plus_exponents"]);
}

TEST_CASE("pencil rejects zero and one-signed directions") {
  RunResult zero = run_cli("pencil --polytope " + fixture("cp2.json") + " --direction 0,0");
  CHECK(zero.exit_code == 2);
  CHECK(Json::parse(zero.err)["error"] == "usage");

  // a cone fixture makes every coefficient positive for direction (1,1)
  fs::path dir = fresh_dir("cone");
  std::ofstream(dir / "cone.json")
      << R"({"dimension": 2, "normals": [[1,0],[0,1],[1,1]], "offsets": ["0","0","0"]})";
  RunResult cone =
      run_cli("pencil --polytope " + (dir / "cone.json").string() + " --direction 1,1");
  CHECK(cone.exit_code == 1);
  Json e = Json::parse(cone.err);
  CHECK(e["error"] == "infeasible");
  CHECK(e["message"].get<std::string>().find("mixed") != std::string::npos);
}

TEST_CASE("torus build emits standard and exotic artifacts") {
  fs::path dir = fresh_dir("torus");
  RunResult clifford = run_cli("torus build --polytope " + fixture("cp2.json") +
                               " --direction 1,1 --loop circle:center=0,radius=1 --levels 0"
                               " --grid 24x24 --out " +
                               (dir / "clifford").string());
  REQUIRE(clifford.exit_code == 0);
  Json cs = Json::parse(clifford.out);
  CHECK(cs["status"] == "ok");
  CHECK(cs["classification"] == "clifford");
  CHECK(cs["class"] == "standard");
  Json crep = Json::parse(read_file(dir / "clifford" / "torus_report.json"));
  CHECK(crep["verification"]["pass"] == true);
  CHECK(std::abs(crep["winding_around_origin"].get<long>()) == 1);
  std::string csv = read_file(dir / "clifford" / "torus_cloud.csv");
  CHECK(csv.substr(0, csv.find('\n')) ==
        "s,theta_1,re_z1,im_z1,re_z2,im_z2,re_z3,im_z3,omega_residual");

  RunResult chek = run_cli("torus build --polytope " + fixture("cp2.json") +
                           " --direction 1,1 --loop circle:center=1,radius=0.25 --levels 0"
                           " --grid 64x64 --out " +
                           (dir / "chekanov").string());
  REQUIRE(chek.exit_code == 0);
  Json es = Json::parse(chek.out);
  CHECK(es["classification"] == "chekanov");
  CHECK(es["class"] == "exotic");
  Json erep = Json::parse(read_file(dir / "chekanov" / "torus_report.json"));
  CHECK(erep["verification"]["pass"] == true);
  CHECK(erep["winding_around_origin"] == 0);
}

TEST_CASE("torus build refuses loops inside the singular margin") {
  RunResult r = run_cli("torus build --polytope " + fixture("cp2.json") +
                        " --direction 1,1 --loop circle:center=0.02,radius=0.01 --levels 0"
                        " --grid 16x16");
  CHECK(r.exit_code == 1);
  Json e = Json::parse(r.err);
  CHECK(e["error"] == "infeasible");
  CHECK(e["message"].get<std::string>().find("margin") != std::string::npos);
}

TEST_CASE("torus build checks the level count") {
  RunResult r = run_cli("torus build --polytope " + fixture("cp2.json") +
                        " --direction 1,1 --loop circle:center=0,radius=1 --levels 0,0"
                        " --grid 16x16");
  CHECK(r.exit_code == 2);
  CHECK(Json::parse(r.err)["error"] == "usage");
}

TEST_CASE("mironov build reports the affine double cover") {
  fs::path dir = fresh_dir("mir_aff");
  RunResult r = run_cli("mironov build --model cn:2 --weights 1,1 --levels 0.5 --grid 16x16"
                        " --out " +
                        dir.string());
  REQUIRE(r.exit_code == 0);
  Json s = Json::parse(r.out);
  CHECK(s["status"] == "ok");
  CHECK(s["cycle_dimension"] == 2);
  CHECK(s["self_intersections"]["cluster_count"] == 128);
  CHECK(s["self_intersections"]["nodes_involved"] == 256);
  CHECK(s["self_intersections"]["largest_cluster"] == 2);
  Json rep = Json::parse(read_file(dir / "cycle_report.json"));
  CHECK(rep["verification"]["pass"] == true);
}

TEST_CASE("mironov build handles the grassmannian and the bare real locus") {
  RunResult gr = run_cli("mironov build --model gr24 --weights 1,1,1,0,0,0 --levels 0.4");
  REQUIRE(gr.exit_code == 0);
  Json grep = Json::parse(gr.out);
  CHECK(grep["model"] == "grassmann");
  CHECK(grep["cycle_dimension"] == 4);
  CHECK(grep["verification"]["pass"] == true);

  RunResult k0 = run_cli("mironov build --model cp2 --weights \"\" --grid 4x1");
  REQUIRE(k0.exit_code == 0);
  Json krep = Json::parse(k0.out);
  CHECK(krep["subtorus_rank"] == 0);
  CHECK(krep["cycle_dimension"] == 2);
  CHECK(krep["verification"]["pass"] == true);

  RunResult bad = run_cli("mironov build --model gr24 --weights 1,1,1,0,0,0 --levels 1.0");
  CHECK(bad.exit_code == 1);
  CHECK(Json::parse(bad.err)["error"] == "infeasible");
}

TEST_CASE("repeated runs produce byte-identical report bodies") {
  fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
  std::string torus_args = "torus build --polytope " + fixture("cp2.json") +
                           " --direction 1,1 --loop circle:center=1,radius=0.25 --levels 0"
                           " --grid 64x64 --out ";
  REQUIRE(run_cli(torus_args + a.string()).exit_code == 0);
  REQUIRE(run_cli(torus_args + b.string()).exit_code == 0);
  CHECK(read_file(a / "torus_report.json") == read_file(b / "torus_report.json"));
  CHECK(read_file(a / "torus_cloud.csv") == read_file(b / "torus_cloud.csv"));

  fs::path c = fresh_dir("det_c"), d = fresh_dir("det_d");
  std::string mir_args = "mironov build --model cp2 --weights 1,0,0 --levels 0.4 --grid 5x8"
                         " --seed 7 --out ";
  REQUIRE(run_cli(mir_args + c.string()).exit_code == 0);
  REQUIRE(run_cli(mir_args + d.string()).exit_code == 0);
  CHECK(read_file(c / "cycle_report.json") == read_file(d / "cycle_report.json"));
  CHECK(read_file(c / "cycle_cloud.csv") == read_file(d / "cycle_cloud.csv"));
}
