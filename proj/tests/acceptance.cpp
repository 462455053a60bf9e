// Acceptance driver: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Usage: acceptance [work_dir]
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Geometry>

#include "checks.hpp"
#include "oracles.hpp"
#include "torsionscope/diagmetrics.hpp"
#include "torsionscope/experiments.hpp"
#include "torsionscope/ph_torsion.hpp"
#include "torsionscope/serialize.hpp"

using namespace torsionscope;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path g_work;
std::map<std::string, bool> g_cli_ok;

// runs a CI preset through the CLI into work/<tag>/<preset>, once per tag
bool run_cli(const std::string& preset, const std::string& tag) {
  const auto key = tag + "/" + preset;
  if (auto it = g_cli_ok.find(key); it != g_cli_ok.end()) return it->second;
  const auto dir = g_work / tag / preset;
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string cmd = std::string("\"") + TS_CLI_PATH + "\" experiment --preset " + preset +
                          " --profile ci --out \"" + dir.string() + "\" > \"" + (dir / "stdout.log").string() +
                          "\" 2>&1";
  const bool ok = std::system(cmd.c_str()) == 0;
  // the log is ours, not part of the preset output
  fs::rename(dir / "stdout.log", g_work / (tag + "_" + preset + ".log"));
  g_cli_ok[key] = ok;
  return ok;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::uint32_t> prime_set(const TorsionReport& r) {
  std::vector<std::uint32_t> v;
  for (const auto& f : r.findings) v.push_back(f.prime);
  return v;
}

// ------------------------------------------------------------ criteria

Outcome crit1() {
  const auto t0 = std::chrono::steady_clock::now();
  int agree = 0, torsional = 0;
  std::string first_bad;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto f = oracle::random_filtration(seed);
    const int top = std::min(f.max_dim(), 3);
    const auto fast = torsion_check(f, {2, 3, 5}, top);
    const auto slow = torsion_oracle(f, {2, 3, 5}, top);
    const bool ok = fast.has_torsion == slow.has_torsion && prime_set(fast) == prime_set(slow);
    agree += ok;
    torsional += slow.has_torsion;
    if (!ok && first_bad.empty()) first_bad = " first mismatch at seed " + std::to_string(seed);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {agree == 200 && secs <= 300,
          std::to_string(agree) + "/200 agree (" + std::to_string(torsional) + " torsional), " + fmt("%.1f s", secs) +
              first_bad};
}

Outcome crit2() {
  const std::vector<Coefficients> fields = {Coefficients::prime(2), Coefficients::prime(3), Coefficients::prime(5),
                                            Coefficients::rational()};
  std::vector<Filtration> fixtures;
  for (std::uint64_t seed = 0; seed < 200; ++seed) fixtures.push_back(oracle::random_filtration(seed));
  fixtures.push_back(oracle::closure_filtration(oracle::rp2_triangles()));
  fixtures.push_back(oracle::closure_filtration(oracle::moebius_triangles()));
  fixtures.push_back(oracle::closure_filtration(oracle::moore3_triangles()));
  for (const auto& cloud : {double_loop_fixture(300, 7), triple_loop_fixture(300, 7)}) {
    const auto d = DistanceMatrix::from_cloud(cloud);
    fixtures.push_back(build_rips(d, {2, 0.21 * enclosing_radius(d)}));
  }
  int dim0_ok = 0;
  for (const auto& f : fixtures) {
    const auto ref = reduce(f, fields[0], 0);
    bool same = true;
    for (std::size_t k = 1; k < fields.size(); ++k) same = same && ref.same_intervals(reduce(f, fields[k], 0), 0);
    dim0_ok += same;
  }
  int planar_ok = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto c = generate_random_cloud(8 + seed % 13, 2, 9000 + seed);
    const auto f = build_rips(c, {2, std::nullopt});
    const auto ref = reduce(f, Coefficients::rational(), 1);
    bool same = true;
    for (std::uint32_t q : {2u, 3u, 5u, 7u}) same = same && ref.same_intervals(reduce(f, Coefficients::prime(q), 1), 1);
    planar_ok += same;
  }
  const int nfix = int(fixtures.size());
  return {dim0_ok == nfix && planar_ok == 50, "dim-0 identical on " + std::to_string(dim0_ok) + "/" +
                                                  std::to_string(nfix) + " fixtures; planar dim-1 identical on " +
                                                  std::to_string(planar_ok) + "/50"};
}

Outcome crit3() {
  const auto h = integral_homology(oracle::closure_filtration(oracle::rp2_triangles()), 0.0, 2);
  const bool tri_ok = h.groups[1].to_string() == "Z/2" && h.groups[2].to_string() == "0";
  // sample: 400 points, scale range chosen by sweeping radii up to 0.43 x enclosing
  const auto cloud = generate_projective_plane(400, 0);
  const auto d = DistanceMatrix::from_cloud(cloud);
  const auto f = build_rips(d, {2, 0.43 * enclosing_radius(d)});
  const auto s = checks::rp2_sweep(f);
  std::string range = s.discrepant.empty() ? "none"
                                           : fmt("[%.4f, ", s.discrepant.front()) + fmt("%.4f]", s.discrepant.back());
  return {tri_ok && !s.discrepant.empty() && s.euler_equal,
          "triangulation H1 = " + h.groups[1].to_string() + "; sample Z/2 > Z/3 in H1 at " +
              std::to_string(s.discrepant.size()) + " radii " + range + "; Euler equal over Z/2,Z/3,Z/5,Q at every radius: " +
              (s.euler_equal ? "yes" : "no")};
}

Outcome crit4() {
  Rng rng(4242);
  double worst_b = 0, worst_w = 0;
  for (int t = 0; t < 2000; ++t) {
    const auto a = oracle::random_diagram(rng, 6), b = oracle::random_diagram(rng, 6);
    const auto [bn, w1] = oracle::brute_force_distances(a, b);
    worst_b = std::max(worst_b, std::abs(bottleneck(a, b) - bn));
    worst_w = std::max(worst_w, std::abs(wasserstein1(a, b) - w1));
  }
  double worst_e = 0;
  for (std::size_t n = 1; n <= 100; ++n)
    worst_e = std::max(worst_e, std::abs(persistence_entropy(BarLengthSet(std::vector<double>(n, 0.7))) -
                                         std::log(double(n))));
  double margin = INFINITY;
  for (std::uint64_t seed = 0; seed < 100; ++seed) margin = std::min(margin, checks::entropy_substitution_margin(seed));
  double worst_q = 0;
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 1 + rng.below(500);
    const double a = rng.uniform(0.01, 0.99);
    const double direct = double(n) * (a * std::log(1 / a) - a * (1 - a)) / ((1 - a) * (1 - a));
    worst_q = std::max(worst_q, std::abs(max_feature_count(n, a) - direct));
  }
  const bool ok = worst_b <= 1e-9 && worst_w <= 1e-9 && worst_e <= 1e-12 && margin >= -1e-12 && worst_q <= 1e-12;
  return {ok, "2000 pairs: max |bottleneck - oracle| " + fmt("%.2g", worst_b) + ", max |W1 - oracle| " +
                  fmt("%.2g", worst_w) + "; entropy of equal bars off log n by " + fmt("%.2g", worst_e) +
                  "; substitution inequality min margin " + fmt("%.3g", margin) + "; Q max deviation " +
                  fmt("%.2g", worst_q)};
}

Outcome crit5() {
  const Activation acts[] = {Activation::Linear, Activation::Relu, Activation::LeakyRelu, Activation::Sigmoid,
                             Activation::Tanh,   Activation::Elu,  Activation::Softplus};
  double worst = 0;
  for (auto a : acts)
    for (bool bn : {false, true})
      for (std::uint64_t seed = 0; seed < 3; ++seed) worst = std::max(worst, checks::nn_gradient_error(a, bn, seed));
  const double r1 = checks::linear_decoder_rank_ratio(false, 3), r2 = checks::linear_decoder_rank_ratio(true, 4);
  return {worst <= 1e-5 && r1 <= 1e-8 && r2 <= 1e-8,
          "max relative gradient error " + fmt("%.2g", worst) + " over 14 activation/batch-norm combinations; s3/s1 " +
              fmt("%.2g", r1) + " (plain), " + fmt("%.2g", r2) + " (batch norm)"};
}

Outcome crit6() {
  Rng rng(6);
  const Matrix x = checks::random_matrix(rng, 12, 3);
  // a reflection keeps every pairwise distance bit-identical, so the loss must be exactly 0;
  // translations and rotations perturb distances by rounding (~1e-16), squared below 1e-20
  Matrix refl = x;
  refl.col(1) = -x.col(1);
  const double topo_refl = topo_loss(x, refl).value;
  Matrix moved(12, 3);
  moved.col(0) = -x.col(2);
  moved.col(1) = x.col(0).array() + 0.5;
  moved.col(2) = x.col(1);
  const double topo_iso = topo_loss(x, moved).value;
  const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.8, Eigen::Vector3d(1, 1, 0).normalized()).toRotationMatrix();
  const double topo_rot = topo_loss(x, Matrix(x * rot.transpose())).value;
  double rtd_self = 0;
  for (int t = 0; t < 10; ++t) {
    const Matrix p = checks::random_matrix(rng, 10, 3);
    rtd_self = std::max(rtd_self, rtd_loss(p, p).value);
  }
  double topo_g = 0, rtd_g = 0;
  int compared = 0, skipped = 0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    topo_g = std::max(topo_g, checks::topo_gradient_error(s));
    const auto c = checks::rtd_gradient_check(s);
    rtd_g = std::max(rtd_g, c.worst);
    compared += c.compared;
    skipped += c.skipped;
  }
  // weight 0 against vanilla, both loss kinds
  const auto data = double_loop_fixture(128, 3);
  bool bitwise = true;
  for (auto kind : {TopoLossKind::TopoAE, TopoLossKind::Rtd}) {
    TrainConfig cfg;
    cfg.epochs = kind == TopoLossKind::Rtd ? kRtdWarmupEpochs + 3 : 3;
    cfg.seed = 5;
    cfg.eval_batch_size = 64;
    if (kind == TopoLossKind::Rtd) cfg.lr_schedule = rtd_lr_schedule();
    auto a = AutoencoderModel::from_widths({3, 32, 32, 2, 32, 32, 3}, {}, 8);
    auto b = a;
    const auto ha = train(a, data, cfg, {mse_term()}).history;
    const auto hb = train(b, data, cfg, {mse_term(), combined_loss(kind, 0.0)}).history;
    bitwise = bitwise && a.flat_parameters() == b.flat_parameters() && ha.size() == hb.size();
    for (std::size_t e = 0; e < ha.size() && bitwise; ++e) bitwise = ha[e].mse == hb[e].mse;
  }
  const bool ok = topo_refl == 0.0 && topo_iso <= 1e-20 && topo_rot <= 1e-20 && rtd_self == 0.0 && topo_g <= 1e-4 && rtd_g <= 1e-4 && bitwise;
  return {ok, "topo on reflected copy " + fmt("%.3g", topo_refl) + ", permuted+translated " + fmt("%.2g", topo_iso) + ", rotated " + fmt("%.2g", topo_rot) +
                  "; rtd(p,p) max " + fmt("%.3g", rtd_self) + "; gradient rel error topo " + fmt("%.2g", topo_g) +
                  ", rtd " + fmt("%.2g", rtd_g) + " (" + std::to_string(compared) + " coords, " +
                  std::to_string(skipped) + " skipped at pairing switches); weight-0 trajectories bitwise equal: " +
                  (bitwise ? "yes" : "no")};
}

Outcome crit7() {
  const auto t0 = std::chrono::steady_clock::now();
  // part 1: vanilla AE, 600-point double loop, 100 epochs, lr 1e-3, batch 32
  const auto cloud = double_loop_fixture(600, 7);
  const std::uint64_t run_seed = derive_seed(1000, 0);
  auto model = AutoencoderModel::from_widths({3, 32, 32, 2, 32, 32, 3}, {}, run_seed);
  TrainConfig cfg;
  cfg.epochs = 100;
  cfg.batch_size = 32;
  cfg.learning_rate = 1e-3;
  cfg.seed = derive_seed(run_seed, 1);
  const auto hist = train(model, cloud, cfg, {mse_term()}).history;
  const double mse = hist.back().mse;
  bool finite = true;
  for (const auto& e : hist) finite = finite && std::isfinite(e.mse);

  // part 2: CI loops-vanilla report; re-audit every saved output independently
  const bool ran = run_cli("loops-vanilla", "run1");
  const auto dir = g_work / "run1" / "loops-vanilla";
  int runs = 0, agree = 0, latent_audits = 0, flagged = 0;
  bool flags_ok = ran;
  if (ran) {
    const auto rep = read_json_file((dir / "report.json").string());
    std::vector<int> listed;
    for (const auto& v : rep["result"]["torsion_flagged"]) listed.push_back(v.get<int>());
    std::vector<int> recomputed;
    for (const auto& entry : fs::directory_iterator(dir / "runs")) {
      const auto name = entry.path().filename().string();
      if (name.rfind("run_", 0) != 0 || name.find("_model") != std::string::npos) continue;
      const auto run = read_json_file(entry.path().string());
      ++runs;
      const int id = run["run_id"].get<int>();
      char stem[32];
      std::snprintf(stem, sizeof stem, "run_%02d_output.csv", id);
      const auto out = read_cloud((dir / "plots" / stem).string());
      TorsionAuditConfig audit = loop_audit_config();
      audit.radius = run["output_audit"]["radius"].get<double>();
      audit.confirm = false;
      const auto again = audit_cloud(out, audit);
      const auto recorded = report_from_json(run["output_audit"]);
      agree += again.report.has_torsion == recorded.has_torsion && again.report.findings == recorded.findings;
      if (again.report.has_torsion) recomputed.push_back(id);
      const auto& la = run["latent_audit"];
      latent_audits += la["simplices"].get<std::size_t>() > 0 && !la["skipped"].get<bool>();
      if (recorded.has_torsion && !run["output_audit"]["confirmed"].get<bool>()) flags_ok = false;
    }
    std::sort(recomputed.begin(), recomputed.end());
    flagged = int(listed.size());
    flags_ok = flags_ok && recomputed == listed;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = mse < 0.005 && finite && ran && runs == 5 && agree == runs && latent_audits == runs && flags_ok &&
                  secs <= 1200;
  return {ok, "600-point vanilla MSE after 100 epochs " + fmt("%.5f", mse) + "; CI report: " + std::to_string(runs) +
                  " runs, " + std::to_string(flagged) + " flagged, re-audit agrees on " + std::to_string(agree) +
                  ", latent audits " + std::to_string(latent_audits) + "/" + std::to_string(runs) + ", " +
                  fmt("%.0f s", secs)};
}

Outcome crit8() {
  if (!run_cli("fragility", "run1")) return {false, "fragility preset failed"};
  const auto rep = read_json_file((g_work / "run1" / "fragility" / "report.json").string())["result"];
  const bool terminated = rep["terminated"].get<bool>();
  const double frac = rep["shifted_fraction"].get<double>();
  const auto& trace = rep["trace"];
  bool full = !trace.empty() && trace.size() == rep["rounds_run"].get<std::size_t>();
  for (const auto& r : trace)
    for (const char* k : {"mse", "bottleneck_h0", "bottleneck_h1", "wasserstein_h0", "wasserstein_h1", "report"})
      full = full && r.contains(k);
  const bool ok = full && ((terminated && frac <= 0.05 && !trace.back()["report"]["has_torsion"].get<bool>()) ||
                           (!terminated));
  return {ok, std::string(terminated ? "terminated torsion-free" : "did not terminate") + " after " +
                  std::to_string(trace.size()) + " rounds, " + std::to_string(rep["shifted_points"].get<int>()) +
                  " points shifted (" + fmt("%.2f%%", 100 * frac) + "), initial " +
                  rep["initial"]["summary"].get<std::string>() + ", final MSE " +
                  fmt("%.5f", trace.back()["mse"].get<double>()) + "; trace complete: " + (full ? "yes" : "no")};
}

Outcome crit9() {
  int identical = 0, total = 0;
  std::string diffs;
  for (const auto& preset : preset_names()) {
    ++total;
    if (!run_cli(preset, "run1") || !run_cli(preset, "run2")) {
      diffs += " " + preset + "(failed)";
      continue;
    }
    const auto a = g_work / "run1" / preset, b = g_work / "run2" / preset;
    bool same = true;
    std::size_t files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
      if (!e.is_regular_file()) continue;
      ++files;
      const auto rel = fs::relative(e.path(), a);
      if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) same = false;
    }
    std::size_t files_b = 0;
    for (const auto& e : fs::recursive_directory_iterator(b)) files_b += e.is_regular_file();
    same = same && files == files_b && files > 0;
    identical += same;
    if (!same) diffs += " " + preset;
  }
  return {identical == total, std::to_string(identical) + "/" + std::to_string(total) +
                                  " presets byte-identical across reruns" + (diffs.empty() ? "" : "; differ:" + diffs)};
}

}  // namespace

int main(int argc, char** argv) {
  g_work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "torsionscope_acceptance";
  fs::create_directories(g_work);
  const std::vector<std::pair<int, std::function<Outcome()>>> all = {
      {1, crit1}, {2, crit2}, {3, crit3}, {4, crit4}, {5, crit5}, {6, crit6}, {7, crit7}, {8, crit8}, {9, crit9}};
  int failed = 0;
  for (const auto& [n, fn] : all) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %d: %s  %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
