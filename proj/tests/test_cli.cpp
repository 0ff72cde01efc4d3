#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "relucert/network.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = RELUCERT_CLI_PATH;

struct CmdResult {
  int status;
  std::string out;
};

CmdResult run_raw(const std::string& cmd) {
  FILE* pipe = popen((cmd + " 2>/dev/null").c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::array<char, 4096> buf;
  std::string out;
  std::size_t n = 0;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), n);
  const int rc = pclose(pipe);
  return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, out};
}

CmdResult run(const std::string& args) { return run_raw(kCli + " " + args); }

fs::path workdir() {
  const fs::path dir = fs::temp_directory_path() / "relucert_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path write_example_net() {
  relucert::ReluNetwork net;
  net.input_dim = 2;
  relucert::DenseLayer layer;
  layer.weights = Eigen::MatrixXd::Identity(2, 2);
  layer.biases = Eigen::VectorXd::Zero(2);
  net.hidden.push_back(layer);
  net.output_weights = Eigen::VectorXd(2);
  net.output_weights << 1, 1;
  net.output_bias = -1.0;
  const fs::path p = workdir() / "example.json";
  std::ofstream(p) << relucert::save_network(net).dump(2);
  return p;
}

fs::path write_constant_net() {
  relucert::ReluNetwork net;
  net.input_dim = 2;
  net.output_weights = Eigen::VectorXd::Zero(2);
  net.output_bias = -1.0;
  const fs::path p = workdir() / "constant.json";
  std::ofstream(p) << relucert::save_network(net).dump(2);
  return p;
}

}  // namespace

TEST_CASE("gen writes valid deterministic networks") {
  const auto dir = workdir();
  const auto a = dir / "gen_a.json";
  const auto b = dir / "gen_b.json";
  CHECK(run("gen --dim 64 --widths 32,16 --seed 7 --out " + a.string()).status == 0);
  CHECK(run("gen --dim 64 --widths 32,16 --seed 7 --out " + b.string()).status == 0);
  CHECK(slurp(a) == slurp(b));

  const auto net = relucert::load_network_file(a.string());
  CHECK(net.total_units() == 49);
  CHECK(relucert::validate(net).empty());

  CHECK(run("gen --dim 4 --widths 3,0 --seed 1").status == 1);
  CHECK(run("gen --widths 3 --seed 1").status == 1);
}

TEST_CASE("certify emits certificates with the documented exit codes") {
  const auto net = write_example_net();

  auto res = run("certify --net " + net.string() + " --x [1,1] --r 0.5");
  CHECK(res.status == 0);
  const auto doc = json::parse(res.out);
  CHECK(doc["bound_paper"] == 1.0);
  CHECK(doc["bound_sum_exp"] == 1.0);
  CHECK(doc["bound_exact_cap"] == 1.0);
  CHECK(doc["n"] == 3);
  CHECK(doc["label"] == 1);
  CHECK(doc["margin"].get<double>() == doctest::Approx(1.0 / std::sqrt(2.0)));

  // point on a region hyperplane: susceptible set
  CHECK(run("certify --net " + net.string() + " --x [0,1] --r 0.5").status == 2);

  // input errors
  CHECK(run("certify --net /nonexistent.json --x [1,1] --r 0.5").status == 1);
  CHECK(run("certify --net " + net.string() + " --x [1,1,1] --r 0.5").status == 1);
  CHECK(run("certify --net " + net.string() + " --x [1,1]").status == 1);

  // epsilon adds the required-margin report
  res = run("certify --net " + net.string() + " --x [1,1] --r 0.5 --epsilon 0.01");
  CHECK(res.status == 0);
  const auto with_eps = json::parse(res.out);
  CHECK(with_eps.contains("required_margin"));
  CHECK(with_eps["required_margin"]["epsilon"] == 0.01);
}

TEST_CASE("estimate and certificate validation") {
  const auto constant = write_constant_net();
  auto res = run("estimate --net " + constant.string() +
                 " --x [0,0] --r 1 --n-samples 1000 --seed 5");
  CHECK(res.status == 0);
  auto doc = json::parse(res.out);
  CHECK(doc["point_estimate"] == 1.0);
  CHECK(doc["samples"] == 1000);
  CHECK(doc.contains("wall_time_s"));

  // reproducibility across runs
  const auto again = run("estimate --net " + constant.string() +
                         " --x [0,0] --r 1 --n-samples 1000 --seed 5");
  CHECK(json::parse(again.out)["agreements"] == doc["agreements"]);

  // certificate + estimate round trip: margin > r so the bound is exact 1
  const auto example = write_example_net();
  const auto cert_path = workdir() / "cert.json";
  res = run("certify --net " + example.string() + " --x [1,1] --r 0.5 --out " +
            cert_path.string());
  CHECK(res.status == 0);
  res = run("estimate --net " + example.string() + " --cert " + cert_path.string() +
            " --n-samples 5000 --seed 9");
  CHECK(res.status == 0);
  doc = json::parse(res.out);
  CHECK(doc["validation"]["pass"] == true);

  // corrupt the certificate: claim bound 1 at a coin-flip point
  auto cert_doc = json::parse(slurp(cert_path));
  cert_doc["x"] = {0.0, 1.0};
  cert_doc["margin"] = 0.0;
  const auto bad_path = workdir() / "cert_bad.json";
  std::ofstream(bad_path) << cert_doc.dump();
  res = run("estimate --net " + example.string() + " --cert " + bad_path.string() +
            " --n-samples 10000 --seed 9");
  CHECK(res.status == 3);

  // mismatched flags vs certificate
  CHECK(run("estimate --net " + example.string() + " --cert " + cert_path.string() +
            " --x [9,9] --n-samples 100")
            .status == 1);
}

TEST_CASE("input point can come from a file and the seed from the environment") {
  const auto net = write_example_net();
  const auto x_file = workdir() / "x.json";
  std::ofstream(x_file) << "[1, 1]";
  const auto res =
      run("certify --net " + net.string() + " --x @" + x_file.string() + " --r 0.5");
  CHECK(res.status == 0);
  CHECK(json::parse(res.out)["bound_paper"] == 1.0);

  // RELUCERT_SEED provides the default seed; an explicit --seed overrides it
  const std::string base = "estimate --net " + net.string() +
                           " --x [0.9,0.9] --r 0.5 --n-samples 2000";
  const auto env_run = run_raw("env RELUCERT_SEED=424242 " + kCli + " " + base);
  const auto flag_run = run(base + " --seed 424242");
  const auto default_run = run(base);
  CHECK(env_run.status == 0);
  CHECK(json::parse(env_run.out)["seed"] == 424242);
  CHECK(json::parse(env_run.out)["agreements"] ==
        json::parse(flag_run.out)["agreements"]);
  CHECK(json::parse(default_run.out)["seed"] == 12345);
}

TEST_CASE("region report") {
  const auto net = write_example_net();
  const auto res = run("region --net " + net.string() + " --x [1,1]");
  CHECK(res.status == 0);
  const auto doc = json::parse(res.out);
  CHECK(doc["label"] == 1);
  CHECK(doc["units"].size() == 2);
  CHECK(doc["decision"]["c"] == -1.0);
  CHECK(doc["margin"].get<double>() == doctest::Approx(1.0 / std::sqrt(2.0)));
}

TEST_CASE("sweep emits a csv with increasing bounds") {
  const auto res =
      run("sweep --dims 4,16,64,256 --ratio 0.3 --n-samples 2000 --seed 3");
  CHECK(res.status == 0);

  std::istringstream in(res.out);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line ==
        "d,a,r,bound_paper,bound_exact_cap,mc_estimate,mc_ci_low,mc_ci_high");
  double prev_bound = -1.0;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream cells(line);
    std::string cell;
    std::vector<double> values;
    while (std::getline(cells, cell, ',')) values.push_back(std::stod(cell));
    REQUIRE(values.size() == 8);
    CHECK(values[3] > prev_bound);
    prev_bound = values[3];
    ++rows;
  }
  CHECK(rows == 4);

  CHECK(run("sweep --ratio 0.3").status == 1);
  CHECK(run("sweep --dims 4,8 --ratio 0").status == 1);
}

TEST_CASE("render2d rasterizes the partition deterministically") {
  const auto net = write_example_net();
  const auto img_a = workdir() / "part_a.ppm";
  const auto img_b = workdir() / "part_b.ppm";
  CHECK(run("render2d --net " + net.string() + " --bbox -2,-2,2,2 --res 64 --out " +
            img_a.string())
            .status == 0);
  CHECK(run("render2d --net " + net.string() + " --bbox -2,-2,2,2 --res 64 --out " +
            img_b.string())
            .status == 0);
  const std::string bytes = slurp(img_a);
  CHECK(bytes == slurp(img_b));
  REQUIRE(bytes.rfind("P6\n64 64\n255\n", 0) == 0);
  const std::string pixels = bytes.substr(13);
  REQUIRE(pixels.size() == 64 * 64 * 3);

  // four pattern cells (quadrants); boundary pixels are black
  std::set<std::array<unsigned char, 3>> colors;
  bool any_black = false;
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    const std::array<unsigned char, 3> c{static_cast<unsigned char>(pixels[i]),
                                         static_cast<unsigned char>(pixels[i + 1]),
                                         static_cast<unsigned char>(pixels[i + 2])};
    if (c == std::array<unsigned char, 3>{0, 0, 0}) {
      any_black = true;
      continue;
    }
    colors.insert(c);
  }
  CHECK(colors.size() == 4);
  CHECK(any_black);

  // marked point and perturbation sphere show up in red
  const auto img_c = workdir() / "part_c.ppm";
  CHECK(run("render2d --net " + net.string() +
            " --bbox -2,-2,2,2 --res 64 --x [1,1] --r 0.5 --out " + img_c.string())
            .status == 0);
  const std::string marked = slurp(img_c).substr(13);
  bool any_red = false;
  for (std::size_t i = 0; i < marked.size(); i += 3) {
    if (static_cast<unsigned char>(marked[i]) == 255 && marked[i + 1] == 0 &&
        marked[i + 2] == 0) {
      any_red = true;
    }
  }
  CHECK(any_red);

  // constant classifier renders a single color
  const auto constant = write_constant_net();
  const auto img_d = workdir() / "part_d.ppm";
  CHECK(run("render2d --net " + constant.string() +
            " --bbox -2,-2,2,2 --res 32 --out " + img_d.string())
            .status == 0);
  const std::string flat = slurp(img_d).substr(13);
  std::set<std::array<unsigned char, 3>> flat_colors;
  for (std::size_t i = 0; i < flat.size(); i += 3) {
    flat_colors.insert({static_cast<unsigned char>(flat[i]),
                        static_cast<unsigned char>(flat[i + 1]),
                        static_cast<unsigned char>(flat[i + 2])});
  }
  CHECK(flat_colors.size() == 1);

  // the raster is input-space only, so it needs a 2-D network
  const auto dir = workdir();
  const auto net3 = dir / "net3.json";
  CHECK(run("gen --dim 3 --widths 4 --seed 1 --out " + net3.string()).status == 0);
  CHECK(run("render2d --net " + net3.string() + " --bbox -1,-1,1,1 --res 16 --out " +
            (dir / "bad.ppm").string())
            .status == 1);
}
