// relucert: probabilistic robustness certificates for ReLU networks with a
// Heaviside output, validated by Monte Carlo estimation.
//
// Data goes to stdout (or --out), human-readable summaries to stderr.
// Exit codes: 0 success, 1 input/parse/shape error, 2 queried point lies on
// a region hyperplane (no certificate exists), 3 certificate refuted by the
// Monte Carlo estimate.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "relucert/certify.hpp"
#include "relucert/geometry.hpp"
#include "relucert/montecarlo.hpp"
#include "relucert/network.hpp"
#include "relucert/region.hpp"
#include "relucert/rng.hpp"

namespace {

constexpr std::uint64_t kDefaultSeed = 12345;

using nlohmann::json;

[[noreturn]] void fail(const std::string& message, int code = 1) {
  json err;
  err["error"] = message;
  std::cerr << err.dump() << "\n";
  std::exit(code);
}

Eigen::VectorXd parse_point(const std::string& spec) {
  std::string text = spec;
  if (!spec.empty() && spec[0] == '@') {
    std::ifstream in(spec.substr(1));
    if (!in) fail("cannot open input vector file: " + spec.substr(1));
    std::stringstream buf;
    buf << in.rdbuf();
    text = buf.str();
  }
  json arr;
  try {
    arr = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("cannot parse --x: ") + e.what());
  }
  if (!arr.is_array() || arr.empty()) fail("--x must be a non-empty JSON array");
  Eigen::VectorXd x(arr.size());
  Eigen::Index i = 0;
  for (const auto& v : arr) {
    if (!v.is_number()) fail("--x must contain only numbers");
    x[i++] = v.get<double>();
  }
  return x;
}

void write_output(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << "\n";
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) fail("cannot write output file: " + out_path);
  out << content;
}

relucert::ReluNetwork load_net_or_fail(const std::string& path) {
  if (path.empty()) fail("--net is required");
  try {
    return relucert::load_network_file(path);
  } catch (const std::exception& e) {
    fail(e.what());
  }
}

void require_point_flag(const std::string& x_spec) {
  if (x_spec.empty()) fail("--x is required");
}

int cmd_gen(int dim, const std::vector<int>& widths, std::uint64_t seed,
            const std::string& out_path) {
  relucert::ReluNetwork net;
  try {
    net = relucert::generate_network(dim, widths, seed);
  } catch (const std::exception& e) {
    fail(e.what());
  }
  write_output(out_path, relucert::save_network(net).dump(2));
  std::cerr << "generated network: d=" << dim << " units=" << net.total_units()
            << " seed=" << seed << "\n";
  return 0;
}

int cmd_certify(const std::string& net_path, const std::string& x_spec,
                double r, double epsilon, const std::string& out_path) {
  require_point_flag(x_spec);
  if (!(r > 0.0)) fail("certify needs --r > 0");
  const auto net = load_net_or_fail(net_path);
  const auto x = parse_point(x_spec);
  if (x.size() != net.input_dim) {
    fail("--x has " + std::to_string(x.size()) + " entries, network expects " +
         std::to_string(net.input_dim));
  }
  relucert::RobustnessCertificate cert;
  try {
    cert = relucert::deep_certificate(net, x, r);
  } catch (const relucert::SusceptibleInputError& e) {
    json err;
    err["error"] = e.what();
    err["layer"] = e.layer;
    err["index"] = e.index;
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    fail(e.what());
  }
  json doc = relucert::certificate_to_json(cert);
  doc["net"] = net_path;
  if (epsilon > 0.0) {
    doc["required_margin"] = {
        {"epsilon", epsilon},
        {"margin", relucert::required_margin(epsilon, r, cert.d, cert.n)}};
  }
  write_output(out_path, doc.dump(2));
  std::cerr << "label=" << cert.label << " margin="
            << (std::isfinite(cert.margin) ? std::to_string(cert.margin) : "inf")
            << " bounds: paper=" << cert.bound_paper
            << " sum_exp=" << cert.bound_sum_exp
            << " exact_cap=" << cert.bound_exact_cap << "\n";
  return 0;
}

int cmd_estimate(const std::string& net_path, std::string x_spec, double r,
                 bool r_given, std::uint64_t n_samples, std::uint64_t seed,
                 double confidence, int workers, const std::string& cert_path,
                 const std::string& out_path) {
  const auto net = load_net_or_fail(net_path);

  relucert::RobustnessCertificate cert;
  bool have_cert = false;
  if (!cert_path.empty()) {
    std::ifstream in(cert_path);
    if (!in) fail("cannot open certificate file: " + cert_path);
    try {
      json doc;
      in >> doc;
      cert = relucert::certificate_from_json(doc);
    } catch (const std::exception& e) {
      fail("cannot parse certificate: " + std::string(e.what()));
    }
    have_cert = true;
  }

  Eigen::VectorXd x;
  if (!x_spec.empty()) {
    x = parse_point(x_spec);
  } else if (have_cert) {
    x = cert.x;
  } else {
    fail("estimate needs --x (or --cert to take the point from)");
  }
  if (!r_given) {
    if (!have_cert) fail("estimate needs --r (or --cert to take the radius from)");
    r = cert.r;
  }
  if (have_cert &&
      (x.size() != cert.x.size() || (x.array() != cert.x.array()).any() || r != cert.r)) {
    fail("certificate refers to a different (x, r) than the flags given");
  }

  const auto t0 = std::chrono::steady_clock::now();
  relucert::McEstimate est;
  try {
    est = relucert::estimate_local_robustness(net, x, r, n_samples, seed,
                                              confidence, workers);
  } catch (const std::exception& e) {
    fail(e.what());
  }
  const double wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json est_doc = relucert::estimate_to_json(est);
  est_doc["net"] = net_path;
  est_doc["wall_time_s"] = wall_s;

  if (!have_cert) {
    write_output(out_path, est_doc.dump(2));
    std::cerr << "agreement " << est.agreements << "/" << est.samples << " = "
              << est.point_estimate << " ci=[" << est.ci_low << ", "
              << est.ci_high << "]\n";
    return 0;
  }

  const auto report = relucert::validate_certificate(cert, est);
  json doc;
  doc["estimate"] = std::move(est_doc);
  doc["validation"] = {{"pass", report.pass},
                       {"slack", report.slack},
                       {"ci_high", report.ci_high},
                       {"bound_paper", report.bound_paper},
                       {"bound_sum_exp", report.bound_sum_exp},
                       {"bound_exact_cap", report.bound_exact_cap}};
  write_output(out_path, doc.dump(2));
  std::cerr << (report.pass ? "PASS" : "FAIL") << " slack=" << report.slack
            << "\n";
  return report.pass ? 0 : 3;
}

int cmd_region(const std::string& net_path, const std::string& x_spec,
               const std::string& out_path) {
  require_point_flag(x_spec);
  const auto net = load_net_or_fail(net_path);
  const auto x = parse_point(x_spec);
  if (x.size() != net.input_dim) {
    fail("--x has " + std::to_string(x.size()) + " entries, network expects " +
         std::to_string(net.input_dim));
  }
  try {
    const auto region = relucert::build_region(net, x);
    write_output(out_path, relucert::region_report_json(region).dump(2));
  } catch (const std::exception& e) {
    fail(e.what());
  }
  return 0;
}

int cmd_sweep(const std::vector<int>& dims, double ratio, double r,
              std::uint64_t n_samples, std::uint64_t seed, double confidence,
              int workers, const std::string& out_path) {
  if (dims.empty()) fail("sweep needs a non-empty --dims list");
  if (!(ratio > 0.0)) fail("sweep needs --ratio > 0");
  if (!(r > 0.0)) fail("sweep needs --r > 0");

  std::ostringstream csv;
  csv << "d,a,r,bound_paper,bound_exact_cap,mc_estimate,mc_ci_low,mc_ci_high\n";
  csv.precision(17);
  int row = 0;
  for (int d : dims) {
    if (d < 1) fail("sweep dimensions must be positive");
    // Canonical single-perceptron fixture: hyperplane x1 = 0, query point at
    // distance a = ratio * r from it.
    relucert::ReluNetwork net;
    net.input_dim = d;
    net.output_weights = Eigen::VectorXd::Unit(d, 0);
    net.output_bias = 0.0;
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    x[0] = ratio * r;

    const auto cert = relucert::deep_certificate(net, x, r);
    const auto est = relucert::estimate_local_robustness(
        net, x, r, n_samples, seed + static_cast<std::uint64_t>(row), confidence,
        workers);
    csv << d << "," << x[0] << "," << r << "," << cert.bound_paper << ","
        << cert.bound_exact_cap << "," << est.point_estimate << ","
        << est.ci_low << "," << est.ci_high << "\n";
    ++row;
  }
  write_output(out_path, csv.str());
  return 0;
}

// Stable pattern fingerprint: fold the activity bits and the label layer by
// layer through the 64-bit mixer.
std::uint64_t pattern_hash(const relucert::ReluNetwork& net,
                           const Eigen::VectorXd& x) {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL;
  Eigen::VectorXd y = x;
  for (const auto& layer : net.hidden) {
    Eigen::VectorXd pre = layer.weights * y + layer.biases;
    for (Eigen::Index j = 0; j < pre.size(); ++j) {
      h = relucert::mix64(h ^ (pre[j] > 0.0 ? 0xD6E8FEB86659FD93ULL : 0xA5A5A5A5A5A5A5A5ULL));
    }
    y = pre.cwiseMax(0.0);
  }
  return h;
}

int cmd_render2d(const std::string& net_path, const std::string& bbox_spec,
                 int res, const std::string& x_spec, double r, bool r_given,
                 const std::string& out_path) {
  if (bbox_spec.empty()) fail("render2d needs --bbox x0,y0,x1,y1");
  const auto net = load_net_or_fail(net_path);
  if (net.input_dim != 2) {
    fail("render2d draws the input-space partition and needs a network with "
         "input_dim = 2 (got " + std::to_string(net.input_dim) + ")");
  }
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  {
    std::istringstream in(bbox_spec);
    char c1 = 0, c2 = 0, c3 = 0;
    if (!(in >> x0 >> c1 >> y0 >> c2 >> x1 >> c3 >> y1) || c1 != ',' ||
        c2 != ',' || c3 != ',' || !(x1 > x0) || !(y1 > y0)) {
      fail("--bbox must be x0,y0,x1,y1 with x1 > x0 and y1 > y0");
    }
  }
  if (res < 2) fail("--res must be at least 2");
  if (out_path.empty()) fail("render2d needs --out (binary image data)");

  const int w = res, h = res;
  const double px = (x1 - x0) / w;
  const double py = (y1 - y0) / h;

  std::vector<std::uint64_t> hashes(static_cast<std::size_t>(w) * h);
  std::vector<int> labels(static_cast<std::size_t>(w) * h);
  Eigen::VectorXd p(2);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      p[0] = x0 + (j + 0.5) * px;
      p[1] = y1 - (i + 0.5) * py;  // row 0 is the top of the image
      const std::size_t idx = static_cast<std::size_t>(i) * w + j;
      hashes[idx] = pattern_hash(net, p);
      labels[idx] = relucert::forward(net, p).label;
    }
  }

  Eigen::VectorXd marker(2);
  bool have_marker = false;
  if (!x_spec.empty()) {
    marker = parse_point(x_spec);
    if (marker.size() != 2) fail("--x must be 2-dimensional for render2d");
    have_marker = true;
  }

  std::string pixels(static_cast<std::size_t>(w) * h * 3, '\0');
  const double half_diag = 0.5 * std::hypot(px, py);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      const std::size_t idx = static_cast<std::size_t>(i) * w + j;
      const std::uint64_t hash = hashes[idx];
      // Muted palette so the overlays stand out.
      unsigned char red = static_cast<unsigned char>(72 + (hash & 0x7F));
      unsigned char green = static_cast<unsigned char>(72 + ((hash >> 8) & 0x7F));
      unsigned char blue = static_cast<unsigned char>(72 + ((hash >> 16) & 0x7F));

      const bool boundary =
          (j + 1 < w && labels[idx] != labels[idx + 1]) ||
          (i + 1 < h && labels[idx] != labels[idx + static_cast<std::size_t>(w)]);
      if (boundary) red = green = blue = 0;

      if (have_marker) {
        const double cx = x0 + (j + 0.5) * px;
        const double cy = y1 - (i + 0.5) * py;
        const double dist = std::hypot(cx - marker[0], cy - marker[1]);
        const bool on_circle = r_given && std::abs(dist - r) <= half_diag;
        const bool on_point = dist <= 1.5 * half_diag;
        if (on_circle || on_point) {
          red = 255;
          green = blue = 0;
        }
      }
      pixels[idx * 3] = static_cast<char>(red);
      pixels[idx * 3 + 1] = static_cast<char>(green);
      pixels[idx * 3 + 2] = static_cast<char>(blue);
    }
  }

  std::ofstream out(out_path, std::ios::binary);
  if (!out) fail("cannot write output file: " + out_path);
  out << "P6\n" << w << " " << h << "\n255\n";
  out.write(pixels.data(), static_cast<std::streamsize>(pixels.size()));
  std::cerr << "wrote " << w << "x" << h << " pixmap to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic robustness certification of ReLU networks "
               "under uniform spherical input perturbations"};
  app.require_subcommand(1);

  std::string net_path, x_spec, out_path, cert_path, bbox_spec, widths_spec;
  double r = 0.0, epsilon = 0.0, confidence = 0.99, ratio = 0.0;
  std::uint64_t n_samples = 100000, seed = kDefaultSeed;
  int dim = 0, res = 256, workers = 1;
  std::vector<int> dims;

  auto add_seed = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "RNG seed (default 12345)")
        ->envname("RELUCERT_SEED");
  };

  auto* gen = app.add_subcommand("gen", "Generate a seeded random network");
  gen->add_option("--dim", dim, "input dimension");
  gen->add_option("--widths", widths_spec,
                  "hidden layer widths, comma separated (empty for none)");
  add_seed(gen);
  gen->add_option("--out", out_path, "output path (default stdout)");

  auto* certify = app.add_subcommand("certify", "Certify local robustness at a point");
  certify->add_option("--net", net_path, "network JSON file");
  certify->add_option("--x", x_spec, "input point: JSON array or @file");
  certify->add_option("--r", r, "perturbation radius");
  certify->add_option("--epsilon", epsilon,
                      "also report the margin needed for misclassification "
                      "probability <= epsilon");
  certify->add_option("--out", out_path, "output path (default stdout)");

  auto* estimate = app.add_subcommand(
      "estimate", "Monte Carlo estimate of local robustness; with --cert, "
                  "validate the certificate (exit 3 on refutation)");
  estimate->add_option("--net", net_path, "network JSON file");
  estimate->add_option("--x", x_spec, "input point: JSON array or @file");
  auto* r_opt = estimate->add_option("--r", r, "perturbation radius");
  estimate->add_option("--n-samples", n_samples, "sample count (default 100000)");
  add_seed(estimate);
  estimate->add_option("--confidence", confidence,
                       "confidence level for the Wilson interval (default 0.99)");
  estimate->add_option("--cert", cert_path, "certificate JSON to validate");
  estimate->add_option("--workers", workers, "worker threads (default 1)");
  estimate->add_option("--out", out_path, "output path (default stdout)");

  auto* region = app.add_subcommand("region", "Report the linear region of a point");
  region->add_option("--net", net_path, "network JSON file");
  region->add_option("--x", x_spec, "input point: JSON array or @file");
  region->add_option("--out", out_path, "output path (default stdout)");

  auto* sweep = app.add_subcommand(
      "sweep", "Single-perceptron dimension sweep at fixed margin/radius ratio");
  sweep->add_option("--dims", dims, "dimensions, comma separated")
      ->delimiter(',');
  sweep->add_option("--ratio", ratio, "margin / radius ratio");
  auto* sweep_r = sweep->add_option("--r", r, "perturbation radius (default 1.0)");
  sweep->add_option("--n-samples", n_samples, "samples per row (default 100000)");
  add_seed(sweep);
  sweep->add_option("--confidence", confidence, "Wilson confidence (default 0.99)");
  sweep->add_option("--workers", workers, "worker threads (default 1)");
  sweep->add_option("--out", out_path, "output path (default stdout)");

  auto* render = app.add_subcommand(
      "render2d", "Rasterize the linear-region partition of a 2-D network");
  render->add_option("--net", net_path, "network JSON file");
  render->add_option("--bbox", bbox_spec, "view box x0,y0,x1,y1");
  render->add_option("--res", res, "pixels per side (default 256)");
  render->add_option("--x", x_spec, "point to mark");
  auto* render_r = render->add_option("--r", r, "sphere radius to draw around --x");
  render->add_option("--out", out_path, "output image path (.ppm)");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    std::vector<int> widths;
    if (!widths_spec.empty()) {
      std::istringstream in(widths_spec);
      std::string tok;
      while (std::getline(in, tok, ',')) {
        try {
          widths.push_back(std::stoi(tok));
        } catch (const std::exception&) {
          fail("--widths must be a comma-separated list of integers");
        }
      }
    }
    return cmd_gen(dim, widths, seed, out_path);
  }
  if (certify->parsed()) return cmd_certify(net_path, x_spec, r, epsilon, out_path);
  if (estimate->parsed()) {
    return cmd_estimate(net_path, x_spec, r, !r_opt->empty(), n_samples, seed,
                        confidence, workers, cert_path, out_path);
  }
  if (region->parsed()) return cmd_region(net_path, x_spec, out_path);
  if (sweep->parsed()) {
    if (sweep_r->empty()) r = 1.0;
    return cmd_sweep(dims, ratio, r, n_samples, seed, confidence, workers, out_path);
  }
  if (render->parsed()) {
    return cmd_render2d(net_path, bbox_spec, res, x_spec, r, !render_r->empty(),
                        out_path);
  }
  return 0;
}
