// torsionscope command-line front end; talks to the library only through the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "torsionscope/torsionscope.h"

namespace {

struct Failure {
  ts_status status;
};

void check(ts_status s) {
  if (s != TS_OK) throw Failure{s};
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

using Cloud = Handle<ts_cloud, ts_cloud_free>;
using Filt = Handle<ts_filtration, ts_filtration_free>;
using Diagram = Handle<ts_diagram, ts_diagram_free>;
using Model = Handle<ts_model, ts_model_free>;

struct Str {
  char* p = nullptr;
  ~Str() { ts_string_free(p); }
};

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text << "\n";
    return;
  }
  std::ofstream f(path, std::ios::binary);
  f << text << "\n";
  if (!f) throw std::runtime_error("cannot write " + path);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void log_line(const char* line, void*) { std::cerr << line << "\n"; }

bool is_filtration_file(const std::string& path) {
  const auto ends = [&](const char* s) {
    const std::string x(s);
    return path.size() >= x.size() && path.compare(path.size() - x.size(), x.size(), x) == 0;
  };
  return ends(".filt") || ends(".txt");
}

// Loads a filtration either from a dump or by building Rips on a cloud.
void load_filtration(Filt& f, const std::string& in, int maxdim, double radius, std::size_t cap) {
  if (is_filtration_file(in)) {
    check(ts_filtration_read(in.c_str(), f.out()));
    return;
  }
  Cloud c;
  check(ts_cloud_read(in.c_str(), c.out()));
  check(ts_rips(c.get(), maxdim, radius, cap, f.out()));
}

std::vector<std::uint32_t> parse_primes(const std::string& s) {
  std::vector<std::uint32_t> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(static_cast<std::uint32_t>(std::stoul(tok)));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"torsionscope: torsion in persistent homology of point clouds, and autoencoder audits"};
  app.require_subcommand(1);
  app.set_version_flag("--version", ts_version());

  // generate
  auto* gen = app.add_subcommand("generate", "sample a fixture point cloud");
  std::string shape = "band", gen_out;
  int windings = 2, twist = 1;
  std::size_t gen_n = 600, gen_dim = 0;
  double band_width = 0.2;
  std::uint64_t gen_seed = 0;
  gen->add_option("--shape", shape, "band | rp2 | random")->check(CLI::IsMember({"band", "rp2", "random"}));
  gen->add_option("--out", gen_out, "output .csv or .json")->required();
  gen->add_option("--seed", gen_seed);
  gen->add_option("-n,--points", gen_n);
  gen->add_option("--dim", gen_dim, "ambient dimension (rp2: >= 4, random: any)");
  gen->add_option("--windings", windings, "band: turns around the axis (2 double, 3 triple loop)");
  gen->add_option("--twist", twist);
  gen->add_option("--width", band_width);

  // perturb
  auto* per = app.add_subcommand("perturb", "Gaussian shift of all or selected points");
  std::string per_in, per_out;
  double sigma = 0.01;
  std::uint64_t per_seed = 0;
  std::vector<std::size_t> indices;
  per->add_option("--in", per_in)->required()->check(CLI::ExistingFile);
  per->add_option("--out", per_out)->required();
  per->add_option("--sigma", sigma)->required();
  per->add_option("--seed", per_seed);
  per->add_option("--indices", indices, "point indices (default: all)")->delimiter(',');

  // ph
  auto* ph = app.add_subcommand("ph", "persistence diagram of a Rips filtration");
  std::string ph_in, ph_out, coeff = "q2", dump;
  int ph_maxdim = 2, ph_homdim = -1;
  double ph_radius = -1;
  std::size_t ph_cap = 0;
  ph->add_option("--in", ph_in, "cloud (.csv/.json) or filtration dump (.filt/.txt)")->required()->check(CLI::ExistingFile);
  ph->add_option("--out", ph_out, "diagram JSON (default stdout)");
  ph->add_option("--maxdim", ph_maxdim, "top simplex dimension");
  ph->add_option("--homdim", ph_homdim, "top homology dimension (default maxdim - 1)");
  ph->add_option("--coeff", coeff, "q<p> or rational");
  ph->add_option("--radius", ph_radius, "Rips radius cap (default enclosing radius)");
  ph->add_option("--cap", ph_cap, "simplex cap");
  ph->add_option("--dump-filtration", dump, "also write the filtration dump here");

  // torsion-check
  auto* tc = app.add_subcommand("torsion-check", "detect torsion by comparing rational and Z/q pairings");
  std::string tc_in, tc_out, primes = "2,3,5,7,11,13";
  int tc_maxdim = 2, tc_homdim = -1;
  double tc_radius = -1;
  std::size_t tc_cap = 0;
  bool oracle = false;
  std::vector<std::size_t> homology;
  tc->add_option("--in", tc_in, "cloud or filtration dump")->required()->check(CLI::ExistingFile);
  tc->add_option("--out", tc_out, "report JSON (default stdout)");
  tc->add_option("--maxdim", tc_maxdim);
  tc->add_option("--homdim", tc_homdim, "top homology dimension (default maxdim - 1)");
  tc->add_option("--primes", primes);
  tc->add_option("--radius", tc_radius);
  tc->add_option("--cap", tc_cap);
  tc->add_flag("--oracle", oracle, "Smith-normal-form scan over all filtration pairs (small inputs)");
  tc->add_option("--homology", homology, "lower,upper: integral homology of that prefix pair instead")
      ->delimiter(',')
      ->expected(2);

  // dgm-dist
  auto* dd = app.add_subcommand("dgm-dist", "bottleneck or 1-Wasserstein distance between diagrams");
  std::string da, db, metric = "bottleneck", inf_policy = "exclude";
  int dd_dim = 1;
  double dd_cap = 0;
  dd->add_option("--a", da)->required()->check(CLI::ExistingFile);
  dd->add_option("--b", db)->required()->check(CLI::ExistingFile);
  dd->add_option("--dim", dd_dim);
  dd->add_option("--metric", metric)->check(CLI::IsMember({"bottleneck", "wasserstein"}));
  dd->add_option("--infinite", inf_policy, "exclude | match | cap")->check(CLI::IsMember({"exclude", "match", "cap"}));
  dd->add_option("--cap", dd_cap, "death value for infinite bars under --infinite cap");

  // entropy
  auto* en = app.add_subcommand("entropy", "persistence entropy and noise classification");
  std::string en_in, en_out;
  int en_dim = 1;
  double alpha = 0, en_cap = 0;
  en->add_option("--in", en_in)->required()->check(CLI::ExistingFile);
  en->add_option("--out", en_out);
  en->add_option("--dim", en_dim);
  en->add_option("--alpha", alpha, "scale ratio in (0,1) for noise classification");
  en->add_option("--cap", en_cap, "keep infinite bars, capped at this death");

  // train
  auto* tr = app.add_subcommand("train", "train an autoencoder");
  std::string tr_in, tr_out, recon_out, latent_out, hist_out, arch_s, loss = "mse", activation = "relu";
  int epochs = 100;
  std::size_t batch = 32;
  double lr = 1e-3, wd = 0, weight = 1.0;
  std::uint64_t tr_seed = 0;
  bool no_bn = false;
  tr->add_option("--in", tr_in)->required()->check(CLI::ExistingFile);
  tr->add_option("--out", tr_out, "checkpoint JSON")->required();
  tr->add_option("--arch", arch_s, "layer widths, e.g. 3,32,32,2,32,32,3");
  tr->add_option("--loss", loss)->check(CLI::IsMember({"mse", "topo", "rtd"}));
  tr->add_option("--weight", weight, "eta (topo) or chi (rtd)");
  tr->add_option("--epochs", epochs);
  tr->add_option("--batch", batch);
  tr->add_option("--lr", lr);
  tr->add_option("--wd", wd);
  tr->add_option("--seed", tr_seed);
  tr->add_option("--activation", activation);
  tr->add_flag("--no-batchnorm", no_bn);
  tr->add_option("--reconstruction", recon_out, "write the reconstructed cloud here");
  tr->add_option("--latent", latent_out, "write the latent codes here");
  tr->add_option("--history", hist_out, "write per-epoch losses (JSON) here");

  // experiment
  auto* ex = app.add_subcommand("experiment", "run a preset study");
  std::string preset, profile = "ci", ex_out;
  std::vector<std::string> presets;
  for (const char* p = ts_preset_names(); *p; p += std::char_traits<char>::length(p) + 1) presets.emplace_back(p);
  ex->add_option("--preset", preset)->required()->check(CLI::IsMember(presets));
  ex->add_option("--profile", profile)->check(CLI::IsMember({"ci", "full"}));
  ex->add_option("--out", ex_out, "output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      Cloud c;
      if (shape == "band")
        check(ts_generate_band(windings, twist, gen_n, band_width, gen_seed, c.out()));
      else if (shape == "rp2")
        check(ts_generate_rp2(gen_n, gen_dim ? gen_dim : 4, gen_seed, c.out()));
      else
        check(ts_generate_random(gen_n, gen_dim ? gen_dim : 3, gen_seed, c.out()));
      check(ts_cloud_write(c.get(), gen_out.c_str()));
    } else if (*per) {
      Cloud c, moved;
      check(ts_cloud_read(per_in.c_str(), c.out()));
      double mse = 0;
      check(ts_perturb(c.get(), indices.empty() ? nullptr : indices.data(), indices.size(), sigma, per_seed,
                       moved.out(), &mse));
      check(ts_cloud_write(moved.get(), per_out.c_str()));
      std::cout << "mse " << mse << "\n";
    } else if (*ph) {
      Filt f;
      load_filtration(f, ph_in, ph_maxdim, ph_radius, ph_cap);
      if (!dump.empty()) check(ts_filtration_write(f.get(), dump.c_str()));
      const int top = ph_homdim >= 0 ? ph_homdim : std::max(0, ts_filtration_max_dim(f.get()) - 1);
      Diagram d;
      check(ts_diagram_compute(f.get(), coeff.c_str(), top, d.out()));
      if (ph_out.empty()) {
        Str s;
        check(ts_diagram_json(d.get(), &s.p));
        std::cout << s.p << "\n";
      } else {
        check(ts_diagram_write(d.get(), ph_out.c_str()));
      }
    } else if (*tc) {
      Filt f;
      load_filtration(f, tc_in, tc_maxdim, tc_radius, tc_cap);
      const int top = tc_homdim >= 0 ? tc_homdim : std::max(0, ts_filtration_max_dim(f.get()) - 1);
      Str s;
      if (!homology.empty()) {
        check(ts_homology_json(f.get(), homology[0], homology[1], top, &s.p));
      } else {
        const auto ps = parse_primes(primes);
        check(ts_torsion_check_json(f.get(), ps.data(), ps.size(), top, oracle ? 1 : 0, &s.p));
      }
      emit(s.p, tc_out);
    } else if (*dd) {
      Diagram a, b;
      check(ts_diagram_read(da.c_str(), a.out()));
      check(ts_diagram_read(db.c_str(), b.out()));
      const auto policy = inf_policy == "exclude" ? TS_INF_EXCLUDE : inf_policy == "match" ? TS_INF_MATCH : TS_INF_CAP;
      double v = 0;
      check(ts_diagram_distance(a.get(), b.get(), dd_dim, metric == "bottleneck" ? TS_BOTTLENECK : TS_WASSERSTEIN1,
                                policy, dd_cap, &v));
      std::printf("%.17g\n", v);
    } else if (*en) {
      Diagram d;
      check(ts_diagram_read(en_in.c_str(), d.out()));
      Str s;
      check(ts_entropy_json(d.get(), en_dim, alpha, en_cap, &s.p));
      emit(s.p, en_out);
    } else if (*tr) {
      Cloud c;
      check(ts_cloud_read(tr_in.c_str(), c.out()));
      std::string opts = "{";
      if (!arch_s.empty()) opts += "\"arch\":[" + arch_s + "],";
      opts += "\"loss\":\"" + loss + "\",\"weight\":" + num(weight) + ",\"activation\":\"" + activation +
              "\",\"batch_norm\":" + (no_bn ? "false" : "true") + ",\"seed\":" + std::to_string(tr_seed) +
              ",\"train\":{\"epochs\":" + std::to_string(epochs) + ",\"batch_size\":" + std::to_string(batch) +
              ",\"learning_rate\":" + num(lr) + ",\"weight_decay\":" + num(wd) +
              ",\"seed\":" + std::to_string(tr_seed);
      opts += "}}";
      Model m;
      Str hist;
      check(ts_train(c.get(), opts.c_str(), log_line, nullptr, m.out(), &hist.p));
      check(ts_model_write(m.get(), tr_out.c_str()));
      if (!hist_out.empty()) emit(hist.p, hist_out);
      if (!recon_out.empty() || !latent_out.empty()) {
        Cloud r, z;
        check(ts_model_apply(m.get(), c.get(), r.out(), z.out()));
        if (!recon_out.empty()) check(ts_cloud_write(r.get(), recon_out.c_str()));
        if (!latent_out.empty()) check(ts_cloud_write(z.get(), latent_out.c_str()));
      }
    } else if (*ex) {
      Str s;
      check(ts_experiment(preset.c_str(), profile.c_str(), ex_out.c_str(), log_line, nullptr, &s.p));
      std::cerr << "wrote " << ex_out << "/report.json\n";
    }
  } catch (const Failure& f) {
    std::cerr << "error (" << ts_status_name(f.status) << "): " << ts_last_error() << "\n";
    return static_cast<int>(f.status) + 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1 + TS_IO;
  }
  return 0;
}
