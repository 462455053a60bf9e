#include "torsionscope/torsionscope.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "text_util.hpp"
#include "torsionscope/diagmetrics.hpp"
#include "torsionscope/error.hpp"
#include "torsionscope/experiments.hpp"

using namespace torsionscope;

struct ts_cloud {
  PointCloud cloud;
};
struct ts_filtration {
  Filtration f;
};
struct ts_diagram {
  PersistenceDiagram d;
};
struct ts_model {
  AutoencoderModel m;
  TrainConfig config;
  bool has_config = false;
};

namespace {

thread_local std::string g_error;

ts_status set_error(ts_status s, const std::string& msg) {
  g_error = msg;
  return s;
}

template <typename F>
ts_status guarded(F&& body) {
  try {
    body();
    return TS_OK;
  } catch (const Error& e) {
    return set_error(static_cast<ts_status>(e.code()), e.what());
  } catch (const nlohmann::json::exception& e) {
    return set_error(TS_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(TS_CAPACITY_EXCEEDED, "out of memory");
  } catch (const std::exception& e) {
    return set_error(TS_INTERNAL, e.what());
  }
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorCode::InvalidArgument, std::string(what) + " must not be null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Json entropy_json(const PersistenceDiagram& d, int dim, double alpha, double cap) {
  const auto bars = BarLengthSet::from_diagram(d, dim, cap > 0 ? std::optional<double>(cap) : std::nullopt);
  Json j;
  j["dim"] = dim;
  j["bars"] = bars.size();
  j["total_length"] = bars.total();
  j["entropy"] = bars.empty() ? 0.0 : persistence_entropy(bars);
  j["min_feature_length"] = bars.empty() ? 0.0 : min_feature_length(bars);
  if (alpha > 0 && !bars.empty()) {
    const auto c = classify_noise(bars.sorted_descending(), alpha);
    j["noise"] = {{"alpha", alpha},
                  {"q_bound", c.q_bound},
                  {"feature_count", c.feature_count},
                  {"features", c.features},
                  {"noise", c.noise},
                  {"quotients", c.quotients}};
  }
  return j;
}

}  // namespace

extern "C" {

const char* ts_version(void) { return "1.0.0"; }
const char* ts_last_error(void) { return g_error.c_str(); }

const char* ts_status_name(ts_status s) {
  switch (s) {
    case TS_OK: return "ok";
    case TS_INVALID_ARGUMENT: return "invalid argument";
    case TS_PRECONDITION: return "precondition failed";
    case TS_CAPACITY_EXCEEDED: return "capacity exceeded";
    case TS_NUMERIC_FAILURE: return "numeric failure";
    case TS_IO: return "i/o error";
    case TS_INTERNAL: return "internal error";
  }
  return "unknown";
}

void ts_string_free(char* s) { std::free(s); }

// ---- clouds

ts_status ts_cloud_read(const char* path, ts_cloud** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ts_cloud{read_cloud(path)};
  });
}

ts_status ts_cloud_write(const ts_cloud* c, const char* path) {
  return guarded([&] {
    need(c, "cloud");
    need(path, "path");
    write_cloud(c->cloud, path);
  });
}

ts_status ts_cloud_from_array(const double* coords, size_t n, size_t dim, ts_cloud** out) {
  return guarded([&] {
    need(out, "out");
    require(n == 0 || coords, ErrorCode::InvalidArgument, "coords must not be null");
    *out = new ts_cloud{PointCloud(dim, std::vector<double>(coords, coords + n * dim))};
  });
}

size_t ts_cloud_size(const ts_cloud* c) { return c ? c->cloud.size() : 0; }
size_t ts_cloud_dim(const ts_cloud* c) { return c ? c->cloud.dim() : 0; }
const double* ts_cloud_data(const ts_cloud* c) { return c ? c->cloud.coords().data() : nullptr; }
void ts_cloud_free(ts_cloud* c) { delete c; }

ts_status ts_generate_band(int windings, int twist, size_t n, double band_width, uint64_t seed, ts_cloud** out) {
  return guarded([&] {
    need(out, "out");
    LoopBandParams p;
    p.windings = windings;
    p.twist = twist;
    p.n_points = n;
    if (band_width > 0) p.band_width = band_width;
    p.seed = seed;
    *out = new ts_cloud{generate_loop_band(p)};
  });
}

ts_status ts_generate_rp2(size_t n, size_t dim, uint64_t seed, ts_cloud** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ts_cloud{dim == 4 ? generate_projective_plane(n, seed) : planted_projective_plane(n, dim, seed)};
  });
}

ts_status ts_generate_random(size_t n, size_t dim, uint64_t seed, ts_cloud** out) {
  return guarded([&] {
    need(out, "out");
    *out = new ts_cloud{generate_random_cloud(n, dim, seed)};
  });
}

ts_status ts_perturb(const ts_cloud* c, const size_t* indices, size_t n_indices, double sigma, uint64_t seed,
                     ts_cloud** out, double* mse) {
  return guarded([&] {
    need(c, "cloud");
    need(out, "out");
    std::optional<std::vector<std::size_t>> idx;
    if (indices) idx.emplace(indices, indices + n_indices);
    auto [moved, rec] = perturb_gaussian(c->cloud, idx, sigma, seed);
    if (mse) *mse = rec.mse;
    *out = new ts_cloud{std::move(moved)};
  });
}

// ---- filtrations

ts_status ts_rips(const ts_cloud* c, int max_dim, double radius, size_t cap, ts_filtration** out) {
  return guarded([&] {
    need(c, "cloud");
    need(out, "out");
    RipsOptions o;
    o.max_dim = max_dim;
    if (radius >= 0) o.max_radius = radius;
    if (cap > 0) o.simplex_cap = cap;
    *out = new ts_filtration{build_rips(c->cloud, o)};
  });
}

ts_status ts_filtration_read(const char* path, ts_filtration** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ts_filtration{parse_filtration(detail::read_file(path))};
  });
}

ts_status ts_filtration_write(const ts_filtration* f, const char* path) {
  return guarded([&] {
    need(f, "filtration");
    need(path, "path");
    detail::write_file(path, dump_filtration(f->f));
  });
}

size_t ts_filtration_size(const ts_filtration* f) { return f ? f->f.size() : 0; }
int ts_filtration_max_dim(const ts_filtration* f) { return f ? f->f.max_dim() : -1; }
void ts_filtration_free(ts_filtration* f) { delete f; }

// ---- diagrams

ts_status ts_diagram_compute(const ts_filtration* f, const char* coeffs, int max_hom_dim, ts_diagram** out) {
  return guarded([&] {
    need(f, "filtration");
    need(coeffs, "coefficients");
    need(out, "out");
    *out = new ts_diagram{reduce(f->f, Coefficients::parse(coeffs), max_hom_dim)};
  });
}

ts_status ts_diagram_read(const char* path, ts_diagram** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new ts_diagram{diagram_from_json(read_json_file(path))};
  });
}

ts_status ts_diagram_write(const ts_diagram* d, const char* path) {
  return guarded([&] {
    need(d, "diagram");
    need(path, "path");
    write_json_file(path, diagram_to_json(d->d));
  });
}

ts_status ts_diagram_json(const ts_diagram* d, char** json) {
  return guarded([&] {
    need(d, "diagram");
    need(json, "json");
    *json = dup(diagram_to_json(d->d).dump(2));
  });
}

void ts_diagram_free(ts_diagram* d) { delete d; }

ts_status ts_diagram_distance(const ts_diagram* a, const ts_diagram* b, int dim, ts_metric metric,
                              ts_infinite_bars infinite, double cap, double* out) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    need(out, "out");
    DistanceOptions o;
    switch (infinite) {
      case TS_INF_EXCLUDE: o.infinite = InfiniteBars::Exclude; break;
      case TS_INF_MATCH: o.infinite = InfiniteBars::Match; break;
      case TS_INF_CAP: o.infinite = InfiniteBars::Cap; break;
      default: fail(ErrorCode::InvalidArgument, "unknown infinite-bar policy");
    }
    o.cap = cap;
    if (metric == TS_BOTTLENECK)
      *out = bottleneck(a->d, b->d, dim, o);
    else if (metric == TS_WASSERSTEIN1)
      *out = wasserstein1(a->d, b->d, dim, o);
    else
      fail(ErrorCode::InvalidArgument, "unknown metric");
  });
}

ts_status ts_entropy_json(const ts_diagram* d, int dim, double alpha, double cap, char** json) {
  return guarded([&] {
    need(d, "diagram");
    need(json, "json");
    require(alpha < 1.0, ErrorCode::InvalidArgument, "alpha must lie in (0, 1)");
    *json = dup(entropy_json(d->d, dim, alpha, cap).dump(2));
  });
}

// ---- torsion

ts_status ts_torsion_check_json(const ts_filtration* f, const uint32_t* primes, size_t n_primes, int max_hom_dim,
                                int oracle, char** json) {
  return guarded([&] {
    need(f, "filtration");
    need(json, "json");
    std::vector<std::uint32_t> ps = kDefaultTorsionPrimes;
    if (primes && n_primes) ps.assign(primes, primes + n_primes);
    const auto r = oracle ? torsion_oracle(f->f, ps, max_hom_dim) : torsion_check(f->f, ps, max_hom_dim);
    Json j = report_to_json(r);
    j["simplices"] = f->f.size();
    *json = dup(j.dump(2));
  });
}

ts_status ts_homology_json(const ts_filtration* f, size_t lower, size_t upper, int max_hom_dim, char** json) {
  return guarded([&] {
    need(f, "filtration");
    need(json, "json");
    *json = dup(homology_to_json(relative_integral_homology_by_prefix(f->f, lower, upper, max_hom_dim)).dump(2));
  });
}

// ---- models

ts_status ts_train(const ts_cloud* data, const char* options_json, ts_log_fn log, void* user, ts_model** out,
                   char** history_json) {
  return guarded([&] {
    need(data, "data");
    need(out, "out");
    const Json opt = options_json && *options_json ? Json::parse(options_json) : Json::object();
    const auto d = data->cloud.dim();
    const auto widths = opt.value("arch", std::vector<std::size_t>{d, 32, 32, 2, 32, 32, d});
    ArchitectureOptions arch;
    arch.batch_norm = opt.value("batch_norm", true);
    arch.hidden_activation = activation_from_string(opt.value("activation", std::string("relu")));
    const auto kind = loss_kind_from_string(opt.value("loss", std::string("mse")));
    const double weight = opt.value("weight", 1.0);
    TrainConfig tc = opt.contains("train") ? train_config_from_json(opt["train"]) : TrainConfig{};
    if (kind == LossKind::Rtd && tc.lr_schedule.empty()) tc.lr_schedule = rtd_lr_schedule();
    auto model = AutoencoderModel::from_widths(widths, arch, opt.value("seed", tc.seed));
    const auto result = train(model, data->cloud, tc, loss_terms(kind, weight), [&](const EpochRecord& e) {
      if (!log) return;
      std::string line = "epoch " + std::to_string(e.epoch) + " lr " + detail::format_double(e.lr) + " mse " +
                         detail::format_double(e.mse);
      for (const auto& [n, v] : e.aux) line += " " + n + " " + detail::format_double(v);
      line += " total " + detail::format_double(e.total);
      log(line.c_str(), user);
    });
    if (history_json) {
      Json h = Json::array();
      for (const auto& e : result.history) {
        Json r{{"epoch", e.epoch}, {"lr", e.lr}, {"train_loss", e.train_loss}, {"mse", e.mse}};
        for (const auto& [n, v] : e.aux) r[n] = v;
        r["total"] = e.total;
        h.push_back(std::move(r));
      }
      *history_json = dup(h.dump(2));
    }
    *out = new ts_model{std::move(model), tc, true};
  });
}

ts_status ts_model_read(const char* path, ts_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    const auto j = read_json_file(path);
    auto* m = new ts_model{model_from_json(j), {}, false};
    if (j.contains("train_config")) {
      m->config = train_config_from_json(j["train_config"]);
      m->has_config = true;
    }
    *out = m;
  });
}

ts_status ts_model_write(const ts_model* m, const char* path) {
  return guarded([&] {
    need(m, "model");
    need(path, "path");
    write_json_file(path, model_to_json(m->m, m->has_config ? &m->config : nullptr));
  });
}

ts_status ts_model_apply(const ts_model* m, const ts_cloud* data, ts_cloud** reconstruction, ts_cloud** latent) {
  return guarded([&] {
    need(m, "model");
    need(data, "data");
    if (reconstruction) *reconstruction = new ts_cloud{reconstruct(m->m, data->cloud)};
    if (latent) *latent = new ts_cloud{latent_codes(m->m, data->cloud)};
  });
}

void ts_model_free(ts_model* m) { delete m; }

// ---- experiments

ts_status ts_experiment(const char* preset, const char* profile, const char* out_dir, ts_log_fn log, void* user,
                        char** report_json) {
  return guarded([&] {
    need(preset, "preset");
    need(out_dir, "out_dir");
    const std::string p = profile ? profile : "ci";
    require(p == "ci" || p == "full", ErrorCode::InvalidArgument, "profile must be ci or full");
    auto report = run_preset(preset, p == "ci" ? Profile::Ci : Profile::Full, out_dir, [&](const std::string& s) {
      if (log) log(s.c_str(), user);
    });
    if (report_json) *report_json = dup(report.dump(2));
  });
}

const char* ts_preset_names(void) {
  static const std::string names = [] {
    std::string s;
    for (const auto& n : preset_names()) s += n + '\0';
    return s + '\0';
  }();
  return names.c_str();
}

}  // extern "C"
