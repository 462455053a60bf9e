#include "torsionscope/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>

#include <Eigen/QR>

#include "text_util.hpp"
#include "torsionscope/diagmetrics.hpp"
#include "torsionscope/error.hpp"
#include "torsionscope/random.hpp"

namespace torsionscope {

namespace fs = std::filesystem;
using detail::format_double;

// ------------------------------------------------------------------ audits

double audit_radius(const PointCloud& cloud, const TorsionAuditConfig& config) {
  if (config.radius) return *config.radius;
  return config.radius_fraction * enclosing_radius(DistanceMatrix::from_cloud(cloud));
}

namespace {

struct Scan {
  AuditResult audit;
  Filtration filtration;
};

Scan scan_cloud(const PointCloud& cloud, const TorsionAuditConfig& config) {
  require(config.max_dim >= 1 && config.max_hom_dim >= 0 && config.max_hom_dim < config.max_dim,
          ErrorCode::InvalidArgument, "audit needs 0 <= max_hom_dim < max_dim");
  Scan s;
  const auto d = DistanceMatrix::from_cloud(cloud);
  s.audit.radius = config.radius ? *config.radius : config.radius_fraction * enclosing_radius(d);
  s.audit.report.primes_tested = config.primes;
  std::sort(s.audit.report.primes_tested.begin(), s.audit.report.primes_tested.end());
  const auto count = count_rips_simplices(d, config.max_dim, s.audit.radius, config.simplex_cap);
  if (count > config.simplex_cap) {
    s.audit.skipped = true;
    s.audit.simplices = count;
    s.audit.note = "simplex cap " + std::to_string(config.simplex_cap) + " exceeded";
    return s;
  }
  RipsOptions opt;
  opt.max_dim = config.max_dim;
  opt.max_radius = s.audit.radius;
  opt.simplex_cap = config.simplex_cap;
  s.filtration = build_rips(d, opt);
  s.audit.simplices = s.filtration.size();
  s.audit.report = torsion_check(s.filtration, config.primes, config.max_hom_dim);
  if (config.confirm && s.audit.report.has_torsion) {
    std::vector<std::uint32_t> flagged;
    for (const auto& f : s.audit.report.findings) flagged.push_back(f.prime);
    std::reverse(flagged.begin(), flagged.end());
    const auto again = torsion_check(s.filtration, flagged, config.max_hom_dim);
    s.audit.confirmed = again.findings == s.audit.report.findings;
    if (!s.audit.confirmed) s.audit.note = "confirming pass disagreed";
  }
  return s;
}

}  // namespace

AuditResult audit_cloud(const PointCloud& cloud, const TorsionAuditConfig& config) {
  return scan_cloud(cloud, config).audit;
}

Json audit_to_json(const AuditResult& a) {
  Json j = report_to_json(a.report);
  j["radius"] = a.radius;
  j["simplices"] = a.simplices;
  j["confirmed"] = a.confirmed;
  j["skipped"] = a.skipped;
  if (!a.note.empty()) j["note"] = a.note;
  return j;
}

// --------------------------------------------------------------- fragility

namespace {

PersistenceDiagram z2_diagram(const Filtration& f) { return reduce(f, Coefficients::prime(2), 1); }

}  // namespace

FragilityTrace fragility_study(const PointCloud& cloud, double sigma, int max_rounds, std::uint64_t seed,
                               const TorsionAuditConfig& audit) {
  require(sigma > 0.0, ErrorCode::InvalidArgument, "sigma must be positive");
  require(max_rounds >= 1, ErrorCode::InvalidArgument, "max_rounds must be positive");
  auto cfg = audit;
  cfg.radius = audit_radius(cloud, audit);  // one scale for every round
  cfg.confirm = false;
  auto scan = scan_cloud(cloud, cfg);
  require(!scan.audit.skipped, ErrorCode::CapacityExceeded, scan.audit.note);
  require(scan.audit.report.has_torsion, ErrorCode::Precondition, "non-torsional input: " + scan.audit.report.summary());

  FragilityTrace trace;
  trace.initial = scan.audit.report;
  trace.radius = *cfg.radius;
  trace.sigma = sigma;
  const auto original_dgm = z2_diagram(scan.filtration);
  PointCloud current = cloud;
  std::set<std::size_t> shifted;
  for (int r = 1; r <= max_rounds; ++r) {
    FragilityRound round;
    round.round = r;
    const auto* first = scan.audit.report.earliest();
    for (auto v : scan.filtration.vertices(first->first_index)) round.shifted_now.push_back(v);
    current = perturb_gaussian(current, round.shifted_now, sigma, derive_seed(seed, std::uint64_t(r))).first;
    shifted.insert(round.shifted_now.begin(), round.shifted_now.end());
    round.shifted_total = shifted.size();
    round.mse = mean_squared_displacement(cloud, current);
    scan = scan_cloud(current, cfg);
    require(!scan.audit.skipped, ErrorCode::CapacityExceeded, scan.audit.note);
    round.report = scan.audit.report;
    const auto dgm = z2_diagram(scan.filtration);
    round.bottleneck_h0 = bottleneck(original_dgm, dgm, 0);
    round.bottleneck_h1 = bottleneck(original_dgm, dgm, 1);
    round.wasserstein_h0 = wasserstein1(original_dgm, dgm, 0);
    round.wasserstein_h1 = wasserstein1(original_dgm, dgm, 1);
    trace.rounds.push_back(round);
    if (!round.report.has_torsion) {
      trace.terminated = true;
      break;
    }
  }
  trace.shifted_points = shifted.size();
  trace.shifted_fraction = double(shifted.size()) / double(cloud.size());
  return trace;
}

// -------------------------------------------------------- prime sensitivity

namespace {

std::vector<std::uint32_t> prime_set(const TorsionReport& r) {
  std::vector<std::uint32_t> out;
  for (const auto& f : r.findings) out.push_back(f.prime);
  return out;
}

}  // namespace

PrimeSensitivityResult prime_sensitivity_study(const PointCloud& cloud, double sigma, int trials, std::uint64_t seed,
                                               const TorsionAuditConfig& audit) {
  require(sigma >= 0.0, ErrorCode::InvalidArgument, "sigma must be nonnegative");
  require(trials >= 0, ErrorCode::InvalidArgument, "trials must be nonnegative");
  auto cfg = audit;
  cfg.radius = audit_radius(cloud, audit);
  cfg.confirm = false;
  PrimeSensitivityResult res;
  res.sigma = sigma;
  res.original = audit_cloud(cloud, cfg).report;
  const auto base = prime_set(res.original);
  for (int t = 0; t < trials; ++t) {
    PrimeTrial trial;
    trial.trial = t;
    trial.seed = derive_seed(seed, std::uint64_t(t));
    const auto moved = perturb_gaussian(cloud, std::nullopt, sigma, trial.seed);
    trial.mse = moved.second.mse;
    trial.report = audit_cloud(moved.first, cfg).report;
    trial.verdict_changed = prime_set(trial.report) != base;
    if (trial.verdict_changed) ++res.changed;
    res.trials.push_back(std::move(trial));
  }
  return res;
}

// ---------------------------------------------------------- reconstruction

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::Vanilla: return "mse";
    case LossKind::TopoAE: return "topo";
    case LossKind::Rtd: return "rtd";
  }
  return "mse";
}

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "mse" || s == "vanilla") return LossKind::Vanilla;
  if (s == "topo" || s == "topoae") return LossKind::TopoAE;
  if (s == "rtd") return LossKind::Rtd;
  fail(ErrorCode::InvalidArgument, "unknown loss '" + s + "' (expected mse, topo or rtd)");
}

std::vector<LossTerm> loss_terms(LossKind kind, double weight) {
  std::vector<LossTerm> terms{mse_term()};
  if (kind == LossKind::TopoAE) terms.push_back(combined_loss(TopoLossKind::TopoAE, weight));
  if (kind == LossKind::Rtd) terms.push_back(combined_loss(TopoLossKind::Rtd, weight));
  return terms;
}

double run_loss(const RunRecord& run, const std::string& loss) {
  if (loss == "mse") return run.mse;
  if (loss == "total") return run.total;
  return run.aux;
}

std::vector<int> lowest_runs(const std::vector<RunRecord>& runs, const std::string& loss, std::size_t k) {
  std::vector<std::size_t> idx(runs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double x = run_loss(runs[a], loss), y = run_loss(runs[b], loss);
    return x != y ? x < y : runs[a].run_id < runs[b].run_id;
  });
  std::vector<int> out;
  for (std::size_t i = 0; i < std::min(k, idx.size()); ++i) out.push_back(runs[idx[i]].run_id);
  return out;
}

std::string torsion_label(const RunRecord& run) {
  if (run.output_audit.skipped) return "Skipped";
  return run.output_audit.report.summary();
}

ExperimentReport reconstruction_experiment(const PointCloud& cloud, const ExperimentConfig& config,
                                           const std::string& name) {
  require(config.n_runs >= 1, ErrorCode::InvalidArgument, "n_runs must be positive");
  require(!config.widths.empty() && config.widths.front() == cloud.dim() && config.widths.back() == cloud.dim(),
          ErrorCode::InvalidArgument, "architecture input/output widths must equal the cloud dimension");
  ExperimentReport rep;
  rep.name = name;
  rep.loss = config.loss;
  const Matrix X = cloud.to_matrix();
  for (int r = 0; r < config.n_runs; ++r) {
    RunRecord run;
    run.run_id = r;
    run.seed = derive_seed(config.seed, std::uint64_t(r));
    run.loss_weight = config.loss == LossKind::Vanilla ? 0.0 : config.loss_weight;
    auto model = AutoencoderModel::from_widths(config.widths, config.arch, run.seed);
    auto tc = config.train;
    tc.seed = derive_seed(run.seed, 1);
    const auto terms = loss_terms(config.loss, run.loss_weight);
    try {
      run.history = train(model, cloud, tc, terms).history;
    } catch (const Error& e) {
      fail(e.code(), name + " run " + std::to_string(r) + ": " + e.what());
    }
    // final full-data losses, evaluated the same way as the last epoch
    const auto full = model.forward(X, Mode::Eval);
    run.mse = mse_loss(full.output, X);
    run.total = run.mse;
    if (!run.history.empty()) {
      const auto& last = run.history.back();
      run.mse = last.mse;
      run.total = last.total;
      for (const auto& [n, v] : last.aux) run.aux = v;
    } else if (terms.size() > 1) {
      // untrained model: evaluate the auxiliary term directly
      auto t0 = tc;
      t0.epochs = 0;
      double acc = 0.0;
      std::size_t cnt = 0;
      for (std::size_t s = 0; s < cloud.size(); s += t0.eval_batch_size) {
        const std::size_t len = std::min(t0.eval_batch_size, cloud.size() - s);
        if (len < 2) continue;
        const auto rows = Eigen::seqN(Eigen::Index(s), Eigen::Index(len));
        acc += terms[1].fn(X(rows, Eigen::all), full.latent(rows, Eigen::all), full.output(rows, Eigen::all), false).value;
        ++cnt;
      }
      run.aux = cnt ? acc / double(cnt) : 0.0;
      run.total = run.mse + run.loss_weight * run.aux;
    }
    run.output = PointCloud::from_matrix(full.output);
    run.latent = PointCloud::from_matrix(full.latent);
    run.output_audit = audit_cloud(run.output, config.output_audit);
    run.latent_audit = audit_cloud(run.latent, config.latent_audit);
    run.model = std::move(model);
    if (run.output_audit.report.has_torsion) rep.torsion_flagged.push_back(r);
    if (run.latent_audit.report.has_torsion) rep.latent_torsion_flagged.push_back(r);
    rep.runs.push_back(std::move(run));
  }
  std::vector<std::string> boards{"mse"};
  if (config.loss != LossKind::Vanilla) boards.insert(boards.end(), {to_string(config.loss), "total"});
  for (const auto& b : boards) rep.leaderboards.push_back({b, lowest_runs(rep.runs, b, config.leaderboard_size)});
  return rep;
}

// ---------------------------------------------------------- hyperparameters

double param(const ParamSet& p, const std::string& name) {
  for (const auto& [n, v] : p)
    if (n == name) return v;
  fail(ErrorCode::InvalidArgument, "no parameter named '" + name + "'");
}

SearchResult hyperparam_search(const std::function<double(const ParamSet&)>& objective,
                               const std::vector<ParamRange>& space, int n_calls, std::uint64_t seed) {
  require(n_calls >= 1, ErrorCode::InvalidArgument, "n_calls must be positive");
  for (const auto& r : space) {
    if (!r.choices.empty()) continue;
    require(r.lo <= r.hi, ErrorCode::InvalidArgument, "parameter '" + r.name + "' has lo > hi");
    require(r.scale == Scale::Linear || r.lo > 0.0, ErrorCode::InvalidArgument,
            "log-scaled parameter '" + r.name + "' needs a positive range");
  }
  Rng rng(seed);
  SearchResult res;
  bool have = false;
  for (int c = 0; c < n_calls; ++c) {
    SearchTrial t;
    t.call = c;
    for (const auto& r : space) {
      double v;
      if (!r.choices.empty())
        v = r.choices[std::size_t(rng.below(r.choices.size()))];
      else if (r.lo == r.hi)
        v = r.lo;
      else
        v = r.scale == Scale::Log ? rng.log_uniform(r.lo, r.hi) : rng.uniform(r.lo, r.hi);
      t.params.emplace_back(r.name, v);
    }
    try {
      t.objective = objective(t.params);
      require(std::isfinite(t.objective), ErrorCode::NumericFailure, "objective is not finite");
    } catch (const std::exception& e) {
      t.failed = true;
      t.error = e.what();
    }
    if (!t.failed && (!have || t.objective < res.best_objective)) {
      res.best = t.params;
      res.best_objective = t.objective;
      have = true;
    }
    res.trace.push_back(std::move(t));
  }
  require(have, ErrorCode::NumericFailure, "every hyperparameter trial failed");
  return res;
}

// ----------------------------------------------------------------- screens

HighdimScreen highdim_screen(std::size_t n_clouds, std::size_t n_points, std::size_t dim, std::uint64_t seed,
                             const TorsionAuditConfig& audit) {
  HighdimScreen s;
  s.dim = dim;
  for (std::size_t c = 0; c < n_clouds; ++c) {
    ScreenedCloud sc;
    sc.seed = derive_seed(seed, c);
    sc.audit = audit_cloud(generate_random_cloud(n_points, dim, sc.seed), audit);
    if (sc.audit.report.has_torsion) s.torsional.push_back(s.screened.size());
    s.screened.push_back(std::move(sc));
  }
  return s;
}

ExperimentConfig highdim_config(std::size_t dim) {
  ExperimentConfig c;
  c.train.epochs = 50;
  if (dim == 10) {
    c.widths = {10, 128, 64, 8, 64, 128, 10};
    c.train.learning_rate = 0.001366;
    c.train.weight_decay = 2.43e-5;
    c.train.batch_size = 32;
  } else if (dim == 13) {
    c.widths = {13, 64, 32, 8, 32, 64, 13};
    c.train.learning_rate = 0.00042818;
    c.train.weight_decay = 1.21e-5;
    c.train.batch_size = 128;
  } else {
    fail(ErrorCode::InvalidArgument, "tuned settings exist for d = 10 and d = 13 only");
  }
  return c;
}

PointCloud planted_projective_plane(std::size_t n_points, std::size_t dim, std::uint64_t seed) {
  require(dim >= 4, ErrorCode::InvalidArgument, "the projective plane sample lives in R^4");
  const auto base = generate_projective_plane(n_points, seed);
  Rng rng(derive_seed(seed, 0xE3B));
  Eigen::MatrixXd g(Eigen::Index(dim), 4);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < 4; ++j) g(i, j) = rng.normal();
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() * Eigen::MatrixXd::Identity(g.rows(), 4);
  return apply_linear(base, q);  // orthonormal columns: an isometric copy
}

// ------------------------------------------------------------------ fixtures

PointCloud double_loop_fixture(std::size_t n_points, std::uint64_t seed) {
  LoopBandParams p;
  p.windings = 2;
  p.twist = 1;
  p.n_points = n_points;
  p.seed = seed;
  return generate_loop_band(p);
}

PointCloud triple_loop_fixture(std::size_t n_points, std::uint64_t seed) {
  LoopBandParams p;
  p.windings = 3;
  p.twist = 1;
  p.n_points = n_points;
  p.seed = seed;
  return generate_loop_band(p);
}

TorsionAuditConfig loop_audit_config() {
  TorsionAuditConfig c;
  c.max_dim = 2;
  c.max_hom_dim = 1;
  c.radius_fraction = 0.25;
  return c;
}

// ------------------------------------------------------------------ presets

namespace {

constexpr const char* kVersion = "1.0.0";

struct Out {
  fs::path root;
  std::function<void(const std::string&)> log;

  void say(const std::string& s) const {
    if (log) log(s);
  }
  void json(const std::string& rel, const Json& j) const { write_json_file((root / rel).string(), j); }
  void text(const std::string& rel, const std::string& s) const { detail::write_file((root / rel).string(), s); }
};

std::string csv_cloud(const PointCloud& c) {
  std::string s;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto p = c.point(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      if (k) s += ',';
      s += format_double(p[k]);
    }
    s += '\n';
  }
  return s;
}

Json config_json(const TorsionAuditConfig& c) {
  Json j;
  j["max_dim"] = c.max_dim;
  j["max_hom_dim"] = c.max_hom_dim;
  if (c.radius)
    j["radius"] = *c.radius;
  else
    j["radius_fraction"] = c.radius_fraction;
  j["primes"] = c.primes;
  j["simplex_cap"] = c.simplex_cap;
  return j;
}

Json config_json(const ExperimentConfig& c) {
  Json j;
  j["widths"] = c.widths;
  j["hidden_activation"] = std::string(to_string(c.arch.hidden_activation));
  j["batch_norm"] = c.arch.batch_norm;
  j["train"] = train_config_to_json(c.train);
  j["loss"] = to_string(c.loss);
  j["loss_weight"] = c.loss_weight;
  j["n_runs"] = c.n_runs;
  j["seed"] = c.seed;
  j["output_audit"] = config_json(c.output_audit);
  j["latent_audit"] = config_json(c.latent_audit);
  return j;
}

Json run_json(const RunRecord& r) {
  Json hist = Json::array();
  for (const auto& e : r.history) {
    Json h{{"epoch", e.epoch}, {"lr", e.lr}, {"train_loss", e.train_loss}, {"mse", e.mse}};
    for (const auto& [n, v] : e.aux) h[n] = v;
    h["total"] = e.total;
    hist.push_back(std::move(h));
  }
  Json j;
  j["run_id"] = r.run_id;
  j["seed"] = r.seed;
  j["loss_weight"] = r.loss_weight;
  j["final"] = {{"mse", r.mse}, {"aux", r.aux}, {"total", r.total}};
  j["torsion"] = torsion_label(r);
  j["output_audit"] = audit_to_json(r.output_audit);
  j["latent_audit"] = audit_to_json(r.latent_audit);
  j["checkpoint"] = r.checkpoint;
  j["history"] = std::move(hist);
  return j;
}

Json search_json(const SearchResult& s) {
  Json trace = Json::array();
  for (const auto& t : s.trace) {
    Json p;
    for (const auto& [n, v] : t.params) p[n] = v;
    Json e{{"call", t.call}, {"params", p}, {"failed", t.failed}};
    if (t.failed)
      e["error"] = t.error;
    else
      e["objective"] = t.objective;
    trace.push_back(std::move(e));
  }
  Json best;
  for (const auto& [n, v] : s.best) best[n] = v;
  return {{"method", "seeded random search"}, {"best", best}, {"best_objective", s.best_objective}, {"trace", trace}};
}

/// Writes run files, plot series and leaderboard.csv; returns the report body.
Json write_experiment(const Out& out, const ExperimentReport& rep, const ExperimentConfig& cfg,
                      const std::string& prefix = "") {
  std::string loss_csv = "run,mse,aux,total,output_torsion,latent_torsion\n";
  for (const auto& r : rep.runs) {
    const std::string id = prefix + "run_" + (r.run_id < 10 ? "0" : "") + std::to_string(r.run_id);
    auto copy = r;
    copy.checkpoint = "runs/" + id + "_model.json";
    out.json(copy.checkpoint, model_to_json(r.model, &cfg.train));
    out.json("runs/" + id + ".json", run_json(copy));
    out.text("plots/" + id + "_output.csv", csv_cloud(r.output));
    out.text("plots/" + id + "_latent.csv", csv_cloud(r.latent));
    loss_csv += std::to_string(r.run_id) + "," + format_double(r.mse) + "," + format_double(r.aux) + "," +
                format_double(r.total) + "," + (r.output_audit.report.has_torsion ? "1" : "0") + "," +
                (r.latent_audit.report.has_torsion ? "1" : "0") + "\n";
  }
  out.text("plots/" + prefix + "loss_vs_run.csv", loss_csv);

  Json boards = Json::object();
  for (const auto& b : rep.leaderboards) {
    Json rows = Json::array();
    for (int id : b.run_ids) {
      const auto& r = rep.runs[std::size_t(id)];
      Json row{{"run_id", id}, {"mse", r.mse}};
      if (rep.loss != LossKind::Vanilla) row[to_string(rep.loss)] = r.aux;
      row["total"] = r.total;
      row["torsion"] = torsion_label(r);
      rows.push_back(std::move(row));
    }
    boards[b.loss] = std::move(rows);
  }
  std::vector<double> mses;
  for (const auto& r : rep.runs) mses.push_back(r.mse);
  std::sort(mses.begin(), mses.end());
  std::size_t audited = 0, confirmed = 0;
  for (const auto& r : rep.runs) {
    audited += 2;
    confirmed += r.output_audit.confirmed;
  }
  Json runs = Json::array();
  for (const auto& r : rep.runs)
    runs.push_back({{"run_id", r.run_id}, {"mse", r.mse}, {"aux", r.aux}, {"total", r.total}, {"torsion", torsion_label(r)},
                    {"latent", r.latent_audit.report.summary()}});
  Json j;
  j["name"] = rep.name;
  j["loss"] = to_string(rep.loss);
  j["config"] = config_json(cfg);
  j["runs"] = std::move(runs);
  j["leaderboards"] = std::move(boards);
  j["torsion_flagged"] = rep.torsion_flagged;
  j["latent_torsion_flagged"] = rep.latent_torsion_flagged;
  j["summary"] = {{"n_runs", rep.runs.size()},
                  {"torsional_outputs", rep.torsion_flagged.size()},
                  {"torsional_latents", rep.latent_torsion_flagged.size()},
                  {"audits_run", audited},
                  {"flagged_confirmed", confirmed == rep.runs.size()},
                  {"mse_min", mses.front()},
                  {"mse_median", mses[mses.size() / 2]},
                  {"mse_max", mses.back()}};
  return j;
}

std::string leaderboard_csv(const ExperimentReport& rep) {
  const bool aux = rep.loss != LossKind::Vanilla;
  std::string s = "leaderboard,rank,run_id,mse," + (aux ? to_string(rep.loss) + "," : "") + "total,torsion\n";
  for (const auto& b : rep.leaderboards)
    for (std::size_t k = 0; k < b.run_ids.size(); ++k) {
      const auto& r = rep.runs[std::size_t(b.run_ids[k])];
      s += b.loss + "," + std::to_string(k + 1) + "," + std::to_string(r.run_id) + "," + format_double(r.mse) + "," +
           (aux ? format_double(r.aux) + "," : "") + format_double(r.total) + "," + torsion_label(r) + "\n";
    }
  return s;
}

// -- individual presets

Json preset_fragility(const Out& out, Profile profile, Json& manifest) {
  const bool ci = profile == Profile::Ci;
  const std::size_t n = ci ? 300 : 600;
  const auto cloud = triple_loop_fixture(n);
  auto audit = loop_audit_config();
  audit.radius_fraction = 0.21;
  const double sigma = 0.1;
  const int rounds = ci ? 20 : 60;
  const std::uint64_t seed = 11;
  manifest["seeds"] = {{"fixture", 7}, {"perturbation", seed}};
  manifest["config"] = {{"fixture", "triple loop band, " + std::to_string(n) + " points"}, {"sigma", sigma},
                        {"max_rounds", rounds}, {"audit", config_json(audit)}};
  out.say("fragility: triple loop, sigma " + format_double(sigma));
  const auto tr = fragility_study(cloud, sigma, rounds, seed, audit);
  std::string csv = "round,shifted_now,shifted_total,mse,bottleneck_h0,bottleneck_h1,wasserstein_h0,wasserstein_h1,verdict\n";
  Json rows = Json::array();
  for (const auto& r : tr.rounds) {
    csv += std::to_string(r.round) + "," + std::to_string(r.shifted_now.size()) + "," + std::to_string(r.shifted_total) +
           "," + format_double(r.mse) + "," + format_double(r.bottleneck_h0) + "," + format_double(r.bottleneck_h1) + "," +
           format_double(r.wasserstein_h0) + "," + format_double(r.wasserstein_h1) + "," + r.report.summary() + "\n";
    Json j{{"round", r.round},           {"shifted_now", r.shifted_now},       {"shifted_total", r.shifted_total},
           {"mse", r.mse},               {"bottleneck_h0", r.bottleneck_h0},   {"bottleneck_h1", r.bottleneck_h1},
           {"wasserstein_h0", r.wasserstein_h0}, {"wasserstein_h1", r.wasserstein_h1},
           {"report", report_to_json(r.report)}};
    out.json("runs/round_" + std::string(r.round < 10 ? "0" : "") + std::to_string(r.round) + ".json", j);
    rows.push_back(std::move(j));
    out.say("  round " + std::to_string(r.round) + ": " + r.report.summary());
  }
  out.text("plots/fragility_trace.csv", csv);
  out.text("leaderboard.csv", csv);
  return {{"initial", report_to_json(tr.initial)},
          {"radius", tr.radius},
          {"sigma", tr.sigma},
          {"terminated", tr.terminated},
          {"rounds_run", tr.rounds.size()},
          {"shifted_points", tr.shifted_points},
          {"shifted_fraction", tr.shifted_fraction},
          {"within_5_percent", tr.terminated && tr.shifted_fraction <= 0.05},
          {"trace", rows}};
}

Json preset_prime(const Out& out, Profile profile, Json& manifest) {
  const bool ci = profile == Profile::Ci;
  const std::size_t n = ci ? 300 : 600;
  const auto cloud = triple_loop_fixture(n);
  auto audit = loop_audit_config();
  audit.radius_fraction = 0.21;
  const double sigma = 0.02;
  const int trials = ci ? 8 : 40;
  const std::uint64_t seed = 13;
  manifest["seeds"] = {{"fixture", 7}, {"perturbation", seed}};
  manifest["config"] = {{"fixture", "triple loop band, " + std::to_string(n) + " points"}, {"sigma", sigma},
                        {"trials", trials}, {"audit", config_json(audit)}};
  out.say("prime sensitivity: " + std::to_string(trials) + " trials");
  const auto res = prime_sensitivity_study(cloud, sigma, trials, seed, audit);
  std::string csv = "trial,seed,mse,verdict,changed\n";
  Json rows = Json::array();
  for (const auto& t : res.trials) {
    csv += std::to_string(t.trial) + "," + std::to_string(t.seed) + "," + format_double(t.mse) + "," + t.report.summary() +
           "," + (t.verdict_changed ? "1" : "0") + "\n";
    Json j{{"trial", t.trial}, {"seed", t.seed}, {"mse", t.mse}, {"report", report_to_json(t.report)},
           {"verdict_changed", t.verdict_changed}};
    out.json("runs/trial_" + std::string(t.trial < 10 ? "0" : "") + std::to_string(t.trial) + ".json", j);
    rows.push_back(std::move(j));
  }
  out.text("plots/prime_trials.csv", csv);
  out.text("leaderboard.csv", csv);
  return {{"original", report_to_json(res.original)},
          {"sigma", sigma},
          {"changed_trials", res.changed},
          {"finding", res.changed ? "torsion verdict changed in some trials" : "none found"},
          {"trials", rows}};
}

ExperimentConfig loop_experiment_config(LossKind kind, Profile profile) {
  ExperimentConfig c;
  c.widths = {3, 32, 32, 2, 32, 32, 3};
  c.loss = kind;
  c.n_runs = profile == Profile::Ci ? 5 : 40;
  c.train.epochs = profile == Profile::Ci ? 20 : 100;
  c.train.learning_rate = 1e-3;
  c.train.batch_size = 32;
  c.seed = 1000 + std::uint64_t(kind);
  c.output_audit = loop_audit_config();
  c.latent_audit = loop_audit_config();
  if (kind == LossKind::Rtd) {
    c.train.lr_schedule = rtd_lr_schedule();
    c.train.eval_batch_size = c.train.batch_size;
  }
  return c;
}

/// Total loss on one fixed training batch after a short training run.
double single_batch_objective(const PointCloud& cloud, const ExperimentConfig& base, double weight, int epochs) {
  auto model = AutoencoderModel::from_widths(base.widths, base.arch, derive_seed(base.seed, 77));
  auto tc = base.train;
  tc.epochs = epochs;
  tc.aux_eval_every = 0;
  tc.seed = derive_seed(base.seed, 78);
  const auto terms = loss_terms(base.loss, weight);
  train(model, cloud, tc, terms);
  const Matrix X = cloud.to_matrix().topRows(Eigen::Index(std::min<std::size_t>(base.train.batch_size, cloud.size())));
  const auto c = model.forward(X, Mode::Eval);
  double total = 0.0;
  for (const auto& t : terms) total += t.weight * t.fn(X, c.latent, c.output, false).value;
  return total;
}

Json preset_loops(const Out& out, LossKind kind, Profile profile, Json& manifest, ExperimentReport& rep_out) {
  const std::size_t n = profile == Profile::Ci ? 300 : 600;
  const auto cloud = double_loop_fixture(n);
  auto cfg = loop_experiment_config(kind, profile);
  Json search = nullptr;
  if (kind != LossKind::Vanilla) {
    const bool topo = kind == LossKind::TopoAE;
    const ParamRange range{topo ? "eta" : "chi", topo ? 0.1 : 1e-6, topo ? 3.0 : 1e3, Scale::Log, {}};
    const int calls = profile == Profile::Ci ? 3 : 20;
    const int epochs = profile == Profile::Ci ? (topo ? 5 : 12) : (topo ? 20 : 30);
    out.say(std::string("searching ") + range.name + " over " + std::to_string(calls) + " calls");
    const auto res = hyperparam_search(
        [&](const ParamSet& p) { return single_batch_objective(cloud, cfg, p.front().second, epochs); }, {range}, calls,
        cfg.seed + 1);
    cfg.loss_weight = res.best.front().second;
    search = search_json(res);
    search["objective"] = "total loss on a single training batch after " + std::to_string(epochs) + " epochs";
  }
  manifest["seeds"] = {{"fixture", 7}, {"experiment", cfg.seed}};
  manifest["config"] = config_json(cfg);
  manifest["config"]["fixture"] = "double loop band, " + std::to_string(n) + " points";
  out.say("training " + std::to_string(cfg.n_runs) + " runs x " + std::to_string(cfg.train.epochs) + " epochs (" +
          to_string(kind) + ")");
  rep_out = reconstruction_experiment(cloud, cfg, "loops-" + std::string(kind == LossKind::Vanilla ? "vanilla"
                                                                        : kind == LossKind::TopoAE ? "topo"
                                                                                                    : "rtd"));
  for (const auto& r : rep_out.runs) out.say("  run " + std::to_string(r.run_id) + ": mse " + format_double(r.mse) + ", " + torsion_label(r));
  Json j = write_experiment(out, rep_out, cfg);
  if (!search.is_null()) j["hyperparameter_search"] = std::move(search);
  out.text("leaderboard.csv", leaderboard_csv(rep_out));
  return j;
}

Json preset_highdim(const Out& out, std::size_t dim, Profile profile, Json& manifest) {
  const bool ci = profile == Profile::Ci;
  const std::size_t n_clouds = ci ? 40 : 1000, n_points = ci ? 24 : 40;
  const std::uint64_t seed = 2000 + dim;
  TorsionAuditConfig screen_audit;
  screen_audit.max_dim = 3;
  screen_audit.max_hom_dim = 2;
  screen_audit.radius_fraction = 1.0;
  out.say("screening " + std::to_string(n_clouds) + " random clouds in R^" + std::to_string(dim));
  const auto screen = highdim_screen(n_clouds, n_points, dim, seed, screen_audit);

  std::string csv = "cloud,seed,simplices,skipped,verdict\n";
  Json screened = Json::array();
  for (std::size_t c = 0; c < screen.screened.size(); ++c) {
    const auto& s = screen.screened[c];
    csv += std::to_string(c) + "," + std::to_string(s.seed) + "," + std::to_string(s.audit.simplices) + "," +
           (s.audit.skipped ? "1" : "0") + "," + s.audit.report.summary() + "\n";
    if (s.audit.report.has_torsion || s.audit.skipped)
      screened.push_back({{"cloud", c}, {"seed", s.seed}, {"audit", audit_to_json(s.audit)}});
  }
  out.text("plots/screen.csv", csv);

  struct Input {
    std::string label;
    PointCloud cloud;
    TorsionAuditConfig audit;
  };
  std::vector<Input> inputs;
  for (auto c : screen.torsional)
    inputs.push_back({"screened_" + std::to_string(c), generate_random_cloud(n_points, dim, screen.screened[c].seed),
                      screen_audit});
  bool planted = false;
  if (inputs.empty()) {
    // nothing torsional at this screen size: carry on with a known torsional stand-in
    planted = true;
    TorsionAuditConfig a;
    a.max_dim = 2;
    a.max_hom_dim = 1;
    a.radius_fraction = 0.45;
    inputs.push_back({"planted_projective_plane", planted_projective_plane(400, dim, 0), a});
    out.say("no torsional cloud found; using the planted projective-plane stand-in");
  }

  auto cfg = highdim_config(dim);
  cfg.train.epochs = ci ? 10 : 50;
  cfg.n_runs = 1;
  Json experiments = Json::array();
  ExperimentReport merged;
  merged.name = "highdim-" + std::to_string(dim);
  int next = 0;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    cfg.seed = derive_seed(seed, 100 + k);
    cfg.output_audit = inputs[k].audit;
    cfg.latent_audit = inputs[k].audit;
    const auto input_audit = audit_cloud(inputs[k].cloud, inputs[k].audit);
    auto rep = reconstruction_experiment(inputs[k].cloud, cfg, inputs[k].label);
    for (auto& r : rep.runs) {
      r.run_id = next++;
      if (r.output_audit.report.has_torsion) merged.torsion_flagged.push_back(r.run_id);
      if (r.latent_audit.report.has_torsion) merged.latent_torsion_flagged.push_back(r.run_id);
      out.say("  " + inputs[k].label + ": mse " + format_double(r.mse) + ", " + torsion_label(r) + ", latent " +
              r.latent_audit.report.summary());
      experiments.push_back({{"input", inputs[k].label}, {"input_audit", audit_to_json(input_audit)}, {"run_id", r.run_id}});
      merged.runs.push_back(std::move(r));
    }
  }
  merged.leaderboards.push_back({"mse", lowest_runs(merged.runs, "mse", 3)});
  manifest["seeds"] = {{"screen", seed}};
  manifest["config"] = {{"n_clouds", n_clouds}, {"n_points", n_points}, {"dim", dim}, {"screen_audit", config_json(screen_audit)},
                        {"experiment", config_json(cfg)}};
  Json j = write_experiment(out, merged, cfg);
  j["screen"] = {{"n_clouds", n_clouds},
                 {"n_points", n_points},
                 {"torsional", screen.torsional.size()},
                 {"skipped", std::count_if(screen.screened.begin(), screen.screened.end(),
                                           [](const auto& s) { return s.audit.skipped; })},
                 {"flagged_or_skipped", screened}};
  j["planted_stand_in"] = planted;
  j["inputs"] = std::move(experiments);
  out.text("leaderboard.csv", leaderboard_csv(merged));
  return j;
}

}  // namespace

std::vector<std::string> preset_names() {
  return {"fragility", "prime-sensitivity", "loops-vanilla", "loops-topo", "loops-rtd", "highdim-10", "highdim-13"};
}

Json run_preset(const std::string& preset, Profile profile, const std::string& out_dir,
                const std::function<void(const std::string&)>& log) {
  const auto names = preset_names();
  require(std::find(names.begin(), names.end(), preset) != names.end(), ErrorCode::InvalidArgument,
          "unknown preset '" + preset + "'");
  const Out out{fs::path(out_dir), log};
  std::error_code ec;
  fs::create_directories(out.root / "runs", ec);
  fs::create_directories(out.root / "plots", ec);
  require(!ec, ErrorCode::Io, "cannot create " + out_dir + ": " + ec.message());

  Json manifest;
  manifest["tool"] = "torsionscope";
  manifest["version"] = kVersion;
  manifest["preset"] = preset;
  manifest["profile"] = profile == Profile::Ci ? "ci" : "full";
  manifest["threads"] = 1;
  manifest["rng"] = "mt19937_64 with splitmix64-derived streams";
  manifest["substitutions"] = {
      "Bayesian optimization replaced by seeded random search with the same call budget",
      "torsion detection by comparing rational and Z/q pairings on a capped Vietoris-Rips filtration"};

  Json body;
  ExperimentReport rep;
  if (preset == "fragility")
    body = preset_fragility(out, profile, manifest);
  else if (preset == "prime-sensitivity")
    body = preset_prime(out, profile, manifest);
  else if (preset == "loops-vanilla")
    body = preset_loops(out, LossKind::Vanilla, profile, manifest, rep);
  else if (preset == "loops-topo")
    body = preset_loops(out, LossKind::TopoAE, profile, manifest, rep);
  else if (preset == "loops-rtd")
    body = preset_loops(out, LossKind::Rtd, profile, manifest, rep);
  else
    body = preset_highdim(out, preset == "highdim-10" ? 10 : 13, profile, manifest);

  Json report;
  report["preset"] = preset;
  report["profile"] = manifest["profile"];
  report["result"] = std::move(body);
  out.json("report.json", report);
  out.json("manifest.json", manifest);
  return report;
}

}  // namespace torsionscope
