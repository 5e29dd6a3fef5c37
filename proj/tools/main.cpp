#include <CLI11.hpp>

#include <lagforge/chekanov.hpp>
#include <lagforge/divisors.hpp>
#include <lagforge/mironov.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace lf = lagforge;
namespace fs = std::filesystem;

namespace {

const char* kind_name(lf::ErrorKind k) {
  switch (k) {
    case lf::ErrorKind::usage: return "usage";
    case lf::ErrorKind::infeasible: return "infeasible";
    case lf::ErrorKind::numeric: return "numeric";
    case lf::ErrorKind::validation: return "validation";
  }
  return "unknown";
}

void emit_error(const std::string& kind, const std::string& message) {
  lf::Json e;
  e["error"] = kind;
  e["message"] = message;
  std::cerr << e.dump() << "\n";
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : text) {
    if (ch == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<lf::Integer> parse_int_list(const std::string& text) {
  std::vector<lf::Integer> out;
  if (strip(text).empty()) return out;
  for (const std::string& part : split(text, ',')) {
    std::string t = strip(part);
    try {
      std::size_t used = 0;
      long long v = std::stoll(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      out.push_back(v);
    } catch (const std::exception&) {
      lf::fail_usage("cannot parse integer '" + t + "'");
    }
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  if (strip(text).empty()) return out;
  for (const std::string& part : split(text, ',')) {
    std::string t = strip(part);
    try {
      std::size_t used = 0;
      double v = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
      out.push_back(v);
    } catch (const std::exception&) {
      lf::fail_usage("cannot parse number '" + t + "'");
    }
  }
  return out;
}

// "a", "bi", "a+bi", "a-bi"
lf::Complex parse_complex(const std::string& text) {
  std::string t = strip(text);
  if (t.empty()) lf::fail_usage("empty complex literal");
  double re = 0, im = 0;
  try {
    if (t.back() == 'i') {
      std::string body = t.substr(0, t.size() - 1);
      std::size_t cut = body.find_last_of("+-");
      if (cut == std::string::npos || cut == 0) {
        im = body.empty() || body == "+" || body == "-" ? (body == "-" ? -1.0 : 1.0)
                                                        : std::stod(body);
      } else {
        re = std::stod(body.substr(0, cut));
        std::string imag = body.substr(cut);
        im = imag == "+" ? 1.0 : (imag == "-" ? -1.0 : std::stod(imag));
      }
    } else {
      std::size_t used = 0;
      re = std::stod(t, &used);
      if (used != t.size()) throw std::invalid_argument(t);
    }
  } catch (const std::exception&) {
    lf::fail_usage("cannot parse complex literal '" + t + "'");
  }
  return {re, im};
}

void parse_grid(const std::string& text, int& first, int& second) {
  auto parts = split(text, 'x');
  if (parts.size() != 2) lf::fail_usage("grid must look like 64x64");
  try {
    first = std::stoi(strip(parts[0]));
    second = std::stoi(strip(parts[1]));
  } catch (const std::exception&) {
    lf::fail_usage("grid must look like 64x64");
  }
  if (first < 1 || second < 1) lf::fail_usage("grid sizes must be positive");
}

// circle:center=<c>,radius=<r>[,samples=<n>][,orientation=<+1|-1>]
// polyline:points=<c>|<c>|...[,samples=<n>]
lf::LoopSpec parse_loop(const std::string& text) {
  std::size_t colon = text.find(':');
  if (colon == std::string::npos) lf::fail_usage("loop spec needs a 'circle:' or 'polyline:' prefix");
  std::string kind = strip(text.substr(0, colon));
  lf::LoopSpec loop;
  bool saw_radius = false, saw_points = false;
  for (const std::string& item : split(text.substr(colon + 1), ',')) {
    std::string entry = strip(item);
    if (entry.empty()) continue;
    std::size_t eq = entry.find('=');
    if (eq == std::string::npos) lf::fail_usage("loop entry '" + entry + "' is not key=value");
    std::string key = strip(entry.substr(0, eq));
    std::string value = strip(entry.substr(eq + 1));
    if (key == "center") {
      loop.center = parse_complex(value);
    } else if (key == "radius") {
      loop.radius = parse_double_list(value).at(0);
      saw_radius = true;
    } else if (key == "samples") {
      loop.samples = static_cast<int>(parse_double_list(value).at(0));
    } else if (key == "orientation") {
      loop.orientation = static_cast<int>(parse_double_list(value).at(0));
    } else if (key == "points") {
      for (const std::string& pt : split(value, '|')) loop.vertices.push_back(parse_complex(pt));
      saw_points = true;
    } else {
      lf::fail_usage("unknown loop key '" + key + "'");
    }
  }
  if (kind == "circle") {
    loop.kind = lf::LoopSpec::Kind::circle;
    if (!saw_radius) lf::fail_usage("circle loop needs radius=");
  } else if (kind == "polyline") {
    loop.kind = lf::LoopSpec::Kind::polyline;
    if (!saw_points) lf::fail_usage("polyline loop needs points=");
  } else {
    lf::fail_usage("unknown loop kind '" + kind + "'");
  }
  return loop;
}

// rows separated by ';', entries by ','; empty string -> rank 0
lf::IntMatrix parse_weight_rows(const std::string& text, int coords) {
  if (strip(text).empty()) return lf::IntMatrix(0, coords);
  auto rows = split(text, ';');
  lf::IntMatrix w(static_cast<int>(rows.size()), coords);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto entries = parse_int_list(rows[i]);
    if (static_cast<int>(entries.size()) != coords)
      lf::fail_usage("weight row has " + std::to_string(entries.size()) + " entries, expected " +
                     std::to_string(coords));
    for (int j = 0; j < coords; ++j) w.at(static_cast<int>(i), j) = entries[static_cast<std::size_t>(j)];
  }
  return w;
}

lf::AmbientModel parse_model(const std::string& text) {
  std::string t = strip(text);
  if (t == "gr24") return lf::ambient_grassmann24();
  if (t.rfind("cp", 0) == 0) {
    try {
      int n = std::stoi(t.substr(2));
      return lf::ambient_projective(n);
    } catch (const std::exception&) {
      lf::fail_usage("cannot parse projective model '" + t + "'");
    }
  }
  if (t.rfind("cn:", 0) == 0) {
    try {
      int n = std::stoi(t.substr(3));
      return lf::ambient_affine(n);
    } catch (const std::exception&) {
      lf::fail_usage("cannot parse affine model '" + t + "'");
    }
  }
  lf::fail_usage("unknown model '" + t + "' (expected cp<n>, cn:<n>, or gr24)");
  return {};
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) lf::fail_usage("cannot open output file: " + path.string());
  out << body;
  if (!out) lf::fail_usage("failed writing output file: " + path.string());
}

// report body goes to --out when given, stdout otherwise
void deliver(const std::string& out_path, const lf::Json& body) {
  std::string text = body.dump(2);
  text += "\n";
  if (out_path.empty())
    std::cout << text;
  else
    write_text(out_path, text);
}

std::string projective_string(const lf::ProjectivePoint& p) {
  if (std::abs(p.minus) == 0.0) return "infinity";
  if (std::abs(p.plus) == 0.0) return "0";
  lf::Complex t = p.plus / p.minus;
  std::ostringstream os;
  os << lf::round_sig(t.real());
  if (t.imag() != 0.0) os << (t.imag() > 0 ? "+" : "") << lf::round_sig(t.imag()) << "i";
  return os.str();
}

struct PolytopeArgs {
  std::string action;
  std::string input;
  std::string out;
};

int cmd_polytope(const PolytopeArgs& args) {
  lf::DelzantPolytope p = lf::load_polytope_file(args.input);
  if (args.action == "validate") {
    lf::ValidationReport report = lf::validate_delzant(p);
    lf::Json j;
    j["delzant"] = report.pass;
    lf::Json checks = lf::Json::array();
    for (const auto& c : report.checks) {
      lf::Json cj;
      cj["name"] = c.name;
      cj["pass"] = c.pass;
      if (!c.detail.empty()) cj["detail"] = c.detail;
      checks.push_back(std::move(cj));
    }
    j["checks"] = std::move(checks);
    deliver(args.out, j);
    if (!report.pass) {
      std::string first;
      for (const auto& c : report.checks)
        if (!c.pass) {
          first = c.name + ": " + c.detail;
          break;
        }
      emit_error("validation", "polytope is not delzant; " + first);
      return 1;
    }
    return 0;
  }
  // vertices
  auto vs = lf::vertices(p);
  lf::Json j;
  j["count"] = vs.size();
  lf::Json list = lf::Json::array();
  for (const auto& v : vs) {
    lf::Json vj;
    lf::Json coords = lf::Json::array();
    for (const auto& q : v.coordinates) coords.push_back(lf::rational_to_string(q));
    vj["coordinates"] = std::move(coords);
    vj["active_facets"] = v.active_facets;
    list.push_back(std::move(vj));
  }
  j["vertices"] = std::move(list);
  deliver(args.out, j);
  return 0;
}

struct PencilArgs {
  std::string polytope;
  std::string direction;
  std::string out;
};

int cmd_pencil(const PencilArgs& args) {
  lf::DelzantPolytope p = lf::load_polytope_file(args.polytope);
  std::vector<lf::Integer> a = parse_int_list(args.direction);
  bool all_zero = true;
  for (const lf::Integer& v : a)
    if (v != 0) all_zero = false;
  if (a.empty() || all_zero) lf::fail_usage("direction must be a nonzero integer vector");

  lf::PencilData pencil = lf::split_pencil(p, a);
  lf::ReductionData rd = lf::reduction_setup(p);
  auto singulars = lf::singular_values(rd, pencil);

  lf::Json j = lf::pencil_to_json(pencil);
  lf::Json sj = lf::Json::array();
  for (const auto& sv : singulars) {
    lf::Json e;
    e["value"] = projective_string(sv.value);
    e["expected"] = sv.expected;
    sj.push_back(std::move(e));
  }
  j["singular_values"] = std::move(sj);
  deliver(args.out, j);
  return 0;
}

struct TorusArgs {
  std::string polytope;
  std::string direction;
  std::string loop;
  std::string levels;
  std::string grid = "64x64";
  std::string out;
  double area_scale = lf::kTwoPi;
  double tol = 1e-6;
};

int cmd_torus(const TorusArgs& args) {
  lf::DelzantPolytope p = lf::load_polytope_file(args.polytope);
  std::vector<lf::Integer> a = parse_int_list(args.direction);
  bool all_zero = true;
  for (const lf::Integer& v : a)
    if (v != 0) all_zero = false;
  if (a.empty() || all_zero) lf::fail_usage("direction must be a nonzero integer vector");
  if (!(args.area_scale > 0)) lf::fail_usage("area scale must be positive");
  if (!(args.tol > 0)) lf::fail_usage("tolerance must be positive");

  int loop_samples = 0, circle_samples = 0;
  parse_grid(args.grid, loop_samples, circle_samples);
  lf::LoopSpec loop = parse_loop(args.loop);
  loop.samples = loop_samples;

  std::vector<double> levels = parse_double_list(args.levels);
  if (static_cast<int>(levels.size()) != p.dimension - 1)
    lf::fail_usage("expected " + std::to_string(p.dimension - 1) + " level values, got " +
                   std::to_string(levels.size()));
  lf::ReducedIntegralValues c;
  c.c = Eigen::Map<const Eigen::VectorXd>(levels.data(), static_cast<Eigen::Index>(levels.size()));

  lf::ReductionData rd = lf::reduction_setup(p, args.area_scale);
  lf::PencilData pencil = lf::split_pencil(p, a);
  lf::TorusSample torus = lf::build_torus(rd, pencil, loop, c, circle_samples);
  lf::VerificationReport verification = lf::verify_lagrangian(torus, args.tol);
  lf::Json report = lf::torus_report_json(torus, verification);

  if (!args.out.empty()) {
    fs::create_directories(args.out);
    write_text(fs::path(args.out) / "torus_report.json", report.dump(2) + "\n");
    std::ostringstream csv;
    lf::export_torus_csv(torus, csv);
    write_text(fs::path(args.out) / "torus_cloud.csv", csv.str());

    lf::Json summary;
    summary["status"] = verification.pass ? "ok" : "fail";
    std::string cls = report["classification"].get<std::string>();
    summary["classification"] = cls;
    summary["class"] =
        cls == "clifford" ? "standard" : (cls == "chekanov" ? "exotic" : "other");
    summary["max_lagrangian_residual"] = verification.to_json()["max_residual"];
    summary["report"] = (fs::path(args.out) / "torus_report.json").string();
    summary["cloud"] = (fs::path(args.out) / "torus_cloud.csv").string();
    std::cout << summary.dump(2) << "\n";
  } else {
    deliver("", report);
  }

  if (!verification.pass) {
    emit_error("numeric", "lagrangian verification failed: max residual " +
                              std::to_string(verification.max_residual) + " > " +
                              std::to_string(args.tol));
    return 1;
  }
  return 0;
}

struct MironovArgs {
  std::string model;
  std::string weights;
  std::string levels;
  std::string grid = "5x12";
  std::string out;
  double tol = 1e-5;
  double rank_tol = 1e-8;
  std::uint64_t seed = 0;
};

int cmd_mironov(const MironovArgs& args) {
  lf::AmbientModel model = parse_model(args.model);
  lf::SubtorusSpec spec;
  spec.weights = parse_weight_rows(args.weights, model.coords);
  std::vector<double> levels = parse_double_list(args.levels);
  if (levels.size() != static_cast<std::size_t>(spec.weights.rows()))
    lf::fail_usage("expected " + std::to_string(spec.weights.rows()) + " level values, got " +
                   std::to_string(levels.size()));
  spec.c = Eigen::Map<const Eigen::VectorXd>(levels.data(), static_cast<Eigen::Index>(levels.size()));
  if (!(args.tol > 0) || !(args.rank_tol > 0)) lf::fail_usage("tolerances must be positive");

  int chart_resolution = 0, angular_resolution = 0;
  parse_grid(args.grid, chart_resolution, angular_resolution);

  lf::RealLevelSample base = lf::real_level_set(model, spec, chart_resolution, args.seed);
  lf::MironovCycleSample cycle = lf::torus_sweep(model, spec, base, angular_resolution);
  lf::VerificationReport verification =
      lf::verify_lagrangian_immersion(cycle, args.tol, args.rank_tol);
  lf::Json report = lf::cycle_report_json(cycle, verification);

  if (!args.out.empty()) {
    fs::create_directories(args.out);
    write_text(fs::path(args.out) / "cycle_report.json", report.dump(2) + "\n");
    std::ostringstream csv;
    lf::export_cycle_csv(cycle, csv);
    write_text(fs::path(args.out) / "cycle_cloud.csv", csv.str());

    lf::Json summary;
    summary["status"] = verification.pass ? "ok" : "fail";
    summary["cycle_dimension"] = cycle.dim();
    summary["node_count"] = cycle.node_count();
    summary["self_intersections"] = report["self_intersections"];
    summary["report"] = (fs::path(args.out) / "cycle_report.json").string();
    summary["cloud"] = (fs::path(args.out) / "cycle_cloud.csv").string();
    std::cout << summary.dump(2) << "\n";
  } else {
    deliver("", report);
  }

  if (!verification.pass) {
    emit_error("numeric", "lagrangian verification failed: max residual " +
                              std::to_string(verification.max_residual) + " > " +
                              std::to_string(args.tol));
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toric lagrangian construction toolkit"};
  app.require_subcommand(1);

  PolytopeArgs pa;
  CLI::App* polytope = app.add_subcommand("polytope", "validate fixtures or enumerate vertices");
  polytope->require_subcommand(1);
  CLI::App* validate = polytope->add_subcommand("validate", "run the delzant checks");
  validate->add_option("--input", pa.input, "polytope fixture JSON")->required();
  validate->add_option("--out", pa.out, "write the report here instead of stdout");
  CLI::App* verts = polytope->add_subcommand("vertices", "exact vertex enumeration");
  verts->add_option("--input", pa.input, "polytope fixture JSON")->required();
  verts->add_option("--out", pa.out, "write the list here instead of stdout");

  PencilArgs pe;
  CLI::App* pencil = app.add_subcommand("pencil", "split a divisor relation into a pencil");
  pencil->add_option("--polytope", pe.polytope, "polytope fixture JSON")->required();
  pencil->add_option("--direction", pe.direction, "integer direction, e.g. \"1,1\"")->required();
  pencil->add_option("--out", pe.out, "write the report here instead of stdout");

  TorusArgs ta;
  CLI::App* torus = app.add_subcommand("torus", "torus pipeline");
  CLI::App* torus_build = torus->add_subcommand("build", "sample and verify one torus");
  torus_build->add_option("--polytope", ta.polytope, "polytope fixture JSON")->required();
  torus_build->add_option("--direction", ta.direction, "pencil direction")->required();
  torus_build->add_option("--loop", ta.loop, "loop spec, e.g. circle:center=1,radius=0.25")
      ->required();
  torus_build->add_option("--levels", ta.levels, "reduced integral values, comma separated")
      ->required();
  torus_build->add_option("--grid", ta.grid, "loop x circle samples (default 64x64)");
  torus_build->add_option("--out", ta.out, "artifact directory");
  torus_build->add_option("--area-scale", ta.area_scale, "symplectic area of a primitive disc");
  torus_build->add_option("--tol", ta.tol, "lagrangian residual tolerance");
  torus->require_subcommand(1);

  MironovArgs ma;
  CLI::App* mironov = app.add_subcommand("mironov", "real-locus cycle pipeline");
  CLI::App* mironov_build = mironov->add_subcommand("build", "sample and verify one cycle");
  mironov_build->add_option("--model", ma.model, "ambient model: cp<n>, cn:<n>, gr24")->required();
  mironov_build
      ->add_option("--weights", ma.weights,
                   "subtorus weight rows, ';' separated; empty for the bare real locus")
      ->required();
  mironov_build->add_option("--levels", ma.levels, "moment levels, one per weight row");
  mironov_build->add_option("--grid", ma.grid, "chart x angular resolution (default 5x12)");
  mironov_build->add_option("--out", ma.out, "artifact directory");
  mironov_build->add_option("--tol", ma.tol, "lagrangian residual tolerance");
  mironov_build->add_option("--rank-tol", ma.rank_tol, "immersion rank tolerance");
  mironov_build->add_option("--seed", ma.seed, "sampling seed");
  mironov->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("usage", e.what());
    return 2;
  }

  try {
    if (validate->parsed()) {
      pa.action = "validate";
      return cmd_polytope(pa);
    }
    if (verts->parsed()) {
      pa.action = "vertices";
      return cmd_polytope(pa);
    }
    if (pencil->parsed()) return cmd_pencil(pe);
    if (torus_build->parsed()) return cmd_torus(ta);
    if (mironov_build->parsed()) return cmd_mironov(ma);
    emit_error("usage", "no command selected");
    return 2;
  } catch (const lf::Error& e) {
    emit_error(kind_name(e.kind()), e.what());
    return e.kind() == lf::ErrorKind::usage ? 2 : 1;
  } catch (const std::exception& e) {
    emit_error("usage", e.what());
    return 2;
  }
}
