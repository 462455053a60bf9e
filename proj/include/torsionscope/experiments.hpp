#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "torsionscope/neuralnet.hpp"
#include "torsionscope/ph_torsion.hpp"
#include "torsionscope/pointcloud.hpp"
#include "torsionscope/serialize.hpp"
#include "torsionscope/topoloss.hpp"

namespace torsionscope {

// ------------------------------------------------------------------ audits

/// How a cloud is screened for torsion. The Rips radius is `radius` when
/// set, else radius_fraction times the cloud's enclosing radius.
struct TorsionAuditConfig {
  int max_dim = 2;
  int max_hom_dim = 1;
  double radius_fraction = 0.25;
  std::optional<double> radius;
  std::vector<std::uint32_t> primes = kDefaultTorsionPrimes;
  std::size_t simplex_cap = 5'000'000;
  /// Re-run flagged verdicts with the flagged primes in reverse order.
  bool confirm = true;
};

struct AuditResult {
  TorsionReport report;
  std::size_t simplices = 0;
  double radius = 0.0;
  bool confirmed = true;  // trivially true when nothing was flagged
  bool skipped = false;   // simplex cap exceeded
  std::string note;
};

double audit_radius(const PointCloud& cloud, const TorsionAuditConfig& config);
AuditResult audit_cloud(const PointCloud& cloud, const TorsionAuditConfig& config);
Json audit_to_json(const AuditResult& a);

// --------------------------------------------------------------- fragility

struct FragilityRound {
  int round = 0;
  std::vector<std::size_t> shifted_now;  // vertices of the simplex at the first torsion index
  std::size_t shifted_total = 0;         // distinct points shifted so far
  double mse = 0.0;                      // vs the original cloud
  double bottleneck_h0 = 0.0, bottleneck_h1 = 0.0;
  double wasserstein_h0 = 0.0, wasserstein_h1 = 0.0;
  TorsionReport report;  // verdict after this round's shift
};

struct FragilityTrace {
  TorsionReport initial;
  double radius = 0.0;
  double sigma = 0.0;
  bool terminated = false;  // torsion-free within max_rounds
  std::size_t shifted_points = 0;
  double shifted_fraction = 0.0;
  std::vector<FragilityRound> rounds;
};

/// Repeatedly shifts the vertices of the simplex where torsion first shows
/// up, until the detector reports no torsion or max_rounds is reached.
/// Distances are taken over Z/2 between the original and shifted diagrams.
FragilityTrace fragility_study(const PointCloud& cloud, double sigma, int max_rounds, std::uint64_t seed,
                               const TorsionAuditConfig& audit);

// -------------------------------------------------------- prime sensitivity

struct PrimeTrial {
  int trial = 0;
  std::uint64_t seed = 0;
  double mse = 0.0;
  TorsionReport report;
  bool verdict_changed = false;  // different torsion prime set than the original
};

struct PrimeSensitivityResult {
  TorsionReport original;
  double sigma = 0.0;
  std::vector<PrimeTrial> trials;
  std::size_t changed = 0;
};

PrimeSensitivityResult prime_sensitivity_study(const PointCloud& cloud, double sigma, int trials, std::uint64_t seed,
                                               const TorsionAuditConfig& audit);

// ---------------------------------------------------------- reconstruction

enum class LossKind { Vanilla, TopoAE, Rtd };
std::string to_string(LossKind k);
LossKind loss_kind_from_string(const std::string& s);

struct ExperimentConfig {
  std::vector<std::size_t> widths{3, 32, 32, 2, 32, 32, 3};
  ArchitectureOptions arch;
  TrainConfig train;
  LossKind loss = LossKind::Vanilla;
  double loss_weight = 0.0;  // eta or chi
  int n_runs = 1;
  std::uint64_t seed = 0;  // run r uses derive_seed(seed, r)
  TorsionAuditConfig output_audit;
  TorsionAuditConfig latent_audit;
  std::size_t leaderboard_size = 3;
};

struct RunRecord {
  int run_id = 0;
  std::uint64_t seed = 0;
  double loss_weight = 0.0;
  std::vector<EpochRecord> history;
  double mse = 0.0;
  double aux = 0.0;  // topo or rtd on the full data (0 for vanilla)
  double total = 0.0;
  AuditResult output_audit;
  AuditResult latent_audit;
  std::string checkpoint;  // relative path when written
  AutoencoderModel model;
  PointCloud output;
  PointCloud latent;
};

struct Leaderboard {
  std::string loss;  // mse, topo, rtd or total
  std::vector<int> run_ids;
};

struct ExperimentReport {
  std::string name;
  LossKind loss = LossKind::Vanilla;
  std::vector<RunRecord> runs;
  std::vector<Leaderboard> leaderboards;
  std::vector<int> torsion_flagged;  // from the audits alone
  std::vector<int> latent_torsion_flagged;
};

/// Loss terms for a run: MSE plus the optional topological term.
std::vector<LossTerm> loss_terms(LossKind kind, double weight);

/// Trains n_runs seeded models on the cloud and audits each output and
/// latent cloud for torsion.
ExperimentReport reconstruction_experiment(const PointCloud& cloud, const ExperimentConfig& config,
                                           const std::string& name = "reconstruction");

/// Runs sorted by the given loss (ties by run id), first k.
std::vector<int> lowest_runs(const std::vector<RunRecord>& runs, const std::string& loss, std::size_t k);
double run_loss(const RunRecord& run, const std::string& loss);

/// "Torsion: (2, 8701)" / "No Torsion" per run, as in the tables.
std::string torsion_label(const RunRecord& run);

// ---------------------------------------------------------- hyperparameters

enum class Scale { Linear, Log };

struct ParamRange {
  std::string name;
  double lo = 0.0, hi = 0.0;
  Scale scale = Scale::Linear;
  std::vector<double> choices;  // when nonempty, sampled uniformly from these instead
};

using ParamSet = std::vector<std::pair<std::string, double>>;
double param(const ParamSet& p, const std::string& name);

struct SearchTrial {
  int call = 0;
  ParamSet params;
  double objective = 0.0;
  bool failed = false;
  std::string error;
};

struct SearchResult {
  ParamSet best;
  double best_objective = 0.0;
  std::vector<SearchTrial> trace;
};

/// Seeded random search; failing calls are logged and skipped.
SearchResult hyperparam_search(const std::function<double(const ParamSet&)>& objective,
                               const std::vector<ParamRange>& space, int n_calls, std::uint64_t seed);

// ----------------------------------------------------------------- screens

struct ScreenedCloud {
  std::uint64_t seed = 0;
  bool planted = false;
  AuditResult audit;
};

struct HighdimScreen {
  std::size_t dim = 0;
  std::vector<ScreenedCloud> screened;
  std::vector<std::size_t> torsional;  // indices into screened
};

/// Screens n_clouds uniform random clouds (seeds derived from `seed`).
HighdimScreen highdim_screen(std::size_t n_clouds, std::size_t n_points, std::size_t dim, std::uint64_t seed,
                             const TorsionAuditConfig& audit);

/// Appendix-style architecture and optimizer settings for d = 10 and 13.
ExperimentConfig highdim_config(std::size_t dim);

/// A projective-plane sample isometrically placed in R^dim; the stand-in
/// used when a screen finds no torsional cloud.
PointCloud planted_projective_plane(std::size_t n_points, std::size_t dim, std::uint64_t seed);

// ------------------------------------------------------------------ presets

enum class Profile { Ci, Full };

/// Runs a named preset and writes report.json, leaderboard.csv, runs/*.json,
/// plots/*.csv and manifest.json under out_dir. Returns the report JSON.
Json run_preset(const std::string& preset, Profile profile, const std::string& out_dir,
                const std::function<void(const std::string&)>& log = {});

std::vector<std::string> preset_names();

// fixtures shared by presets, tests and the CLI
PointCloud double_loop_fixture(std::size_t n_points = 600, std::uint64_t seed = 7);
PointCloud triple_loop_fixture(std::size_t n_points = 600, std::uint64_t seed = 7);

/// Audit settings used for the loop fixtures and their reconstructions.
TorsionAuditConfig loop_audit_config();

}  // namespace torsionscope
