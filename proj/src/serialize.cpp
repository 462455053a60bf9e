#include "torsionscope/serialize.hpp"

#include <cmath>

#include "text_util.hpp"
#include "torsionscope/error.hpp"

namespace torsionscope {

Json number_or_inf(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  require(!std::isnan(v), ErrorCode::NumericFailure, "cannot serialize NaN");
  return v;
}

double number_from_json(const Json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return kInfinity;
    if (s == "-inf") return -kInfinity;
    fail(ErrorCode::InvalidArgument, "expected a number or \"inf\", got \"" + s + "\"");
  }
  require(j.is_number(), ErrorCode::InvalidArgument, "expected a number");
  return j.get<double>();
}

Json diagram_to_json(const PersistenceDiagram& d) {
  Json pairs = Json::array();
  for (const auto& p : d.pairs()) {
    Json e;
    e["birth"] = p.birth;
    e["death"] = number_or_inf(p.death);
    e["dim"] = p.dim;
    e["birth_index"] = p.birth_index;
    e["death_index"] = p.death_index ? Json(*p.death_index) : Json(nullptr);
    pairs.push_back(std::move(e));
  }
  Json j;
  j["coefficients"] = d.coefficients().name();
  j["max_hom_dim"] = d.max_hom_dim();
  j["pairs"] = std::move(pairs);
  return j;
}

PersistenceDiagram diagram_from_json(const Json& j) {
  try {
    const auto coeffs = Coefficients::parse(j.at("coefficients").get<std::string>());
    std::vector<PersistencePair> pairs;
    int top = 0;
    for (const auto& e : j.at("pairs")) {
      PersistencePair p;
      p.birth = number_from_json(e.at("birth"));
      p.death = number_from_json(e.at("death"));
      p.dim = e.at("dim").get<int>();
      p.birth_index = e.value("birth_index", std::size_t{0});
      if (e.contains("death_index") && !e["death_index"].is_null()) p.death_index = e["death_index"].get<std::size_t>();
      require(p.death_index.has_value() == std::isfinite(p.death), ErrorCode::InvalidArgument,
              "finite pairs need a death_index and infinite ones must not have one");
      top = std::max(top, p.dim);
      pairs.push_back(p);
    }
    return PersistenceDiagram(coeffs, std::move(pairs), j.value("max_hom_dim", top));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("malformed diagram JSON: ") + e.what());
  }
}

std::string method_name(TorsionMethod m) {
  return m == TorsionMethod::PrimeComparison ? "prime_comparison" : "snf_oracle";
}

Json report_to_json(const TorsionReport& r) {
  Json j;
  j["has_torsion"] = r.has_torsion;
  j["summary"] = r.summary();
  j["method"] = method_name(r.method);
  j["primes_tested"] = r.primes_tested;
  Json f = Json::array();
  for (const auto& x : r.findings) f.push_back({{"prime", x.prime}, {"first_index", x.first_index}, {"hom_dim", x.hom_dim}});
  j["findings"] = std::move(f);
  return j;
}

TorsionReport report_from_json(const Json& j) {
  try {
    TorsionReport r;
    r.has_torsion = j.at("has_torsion").get<bool>();
    r.method = j.value("method", std::string("prime_comparison")) == "snf_oracle" ? TorsionMethod::SnfOracle
                                                                                  : TorsionMethod::PrimeComparison;
    r.primes_tested = j.at("primes_tested").get<std::vector<std::uint32_t>>();
    for (const auto& x : j.at("findings"))
      r.findings.push_back({x.at("prime").get<std::uint32_t>(), x.at("first_index").get<std::size_t>(),
                            x.at("hom_dim").get<int>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("malformed torsion report JSON: ") + e.what());
  }
}

Json homology_to_json(const IntegralHomologySummary& h) {
  Json groups = Json::array();
  for (const auto& g : h.groups) {
    std::vector<std::string> torsion;
    for (const auto& t : g.torsion) torsion.push_back(t.get_str());
    groups.push_back({{"dim", g.dim}, {"free_rank", g.free_rank}, {"torsion", torsion}, {"group", g.to_string()}});
  }
  return {{"groups", groups}, {"torsion_primes", h.torsion_primes()}};
}

Json train_config_to_json(const TrainConfig& c) {
  Json sched = Json::array();
  for (const auto& p : c.lr_schedule)
    sched.push_back({{"first_epoch", p.first_epoch}, {"last_epoch", p.last_epoch}, {"lr", p.lr}});
  Json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["weight_decay"] = c.weight_decay;
  j["seed"] = c.seed;
  j["adam"] = {{"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.adam_eps}};
  j["lr_schedule"] = std::move(sched);
  j["eval_batch_size"] = c.eval_batch_size;
  j["aux_eval_every"] = c.aux_eval_every;
  return j;
}

TrainConfig train_config_from_json(const Json& j) {
  try {
    TrainConfig c;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.weight_decay = j.value("weight_decay", c.weight_decay);
    c.seed = j.value("seed", c.seed);
    if (j.contains("adam")) {
      c.beta1 = j["adam"].value("beta1", c.beta1);
      c.beta2 = j["adam"].value("beta2", c.beta2);
      c.adam_eps = j["adam"].value("eps", c.adam_eps);
    }
    if (j.contains("lr_schedule"))
      for (const auto& p : j["lr_schedule"])
        c.lr_schedule.push_back({p.at("first_epoch").get<int>(), p.at("last_epoch").get<int>(), p.at("lr").get<double>()});
    c.eval_batch_size = j.value("eval_batch_size", c.eval_batch_size);
    c.aux_eval_every = j.value("aux_eval_every", c.aux_eval_every);
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("malformed train config JSON: ") + e.what());
  }
}

namespace {

template <typename M>
Json matrix_json(const M& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) r.push_back(m(i, k));
    rows.push_back(std::move(r));
  }
  return rows;
}

Json row_json(const RowVector& v) {
  Json r = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) r.push_back(v(k));
  return r;
}

void read_matrix(const Json& j, Matrix& m) {
  require(j.size() == std::size_t(m.rows()), ErrorCode::InvalidArgument, "weight matrix has the wrong shape");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const auto& r = j[std::size_t(i)];
    require(r.size() == std::size_t(m.cols()), ErrorCode::InvalidArgument, "weight matrix has the wrong shape");
    for (Eigen::Index k = 0; k < m.cols(); ++k) m(i, k) = r[std::size_t(k)].get<double>();
  }
}

void read_row(const Json& j, RowVector& v) {
  require(j.size() == std::size_t(v.size()), ErrorCode::InvalidArgument, "parameter vector has the wrong size");
  for (Eigen::Index k = 0; k < v.size(); ++k) v(k) = j[std::size_t(k)].get<double>();
}

Json spec_json(const LayerSpec& s) {
  return {{"in_dim", s.in_dim},
          {"out_dim", s.out_dim},
          {"activation", std::string(to_string(s.activation))},
          {"batch_norm", s.batch_norm}};
}

LayerSpec spec_from(const Json& j) {
  return {j.at("in_dim").get<std::size_t>(), j.at("out_dim").get<std::size_t>(),
          activation_from_string(j.at("activation").get<std::string>()), j.at("batch_norm").get<bool>()};
}

}  // namespace

Json model_to_json(const AutoencoderModel& model, const TrainConfig* config) {
  Json layers = Json::array();
  for (std::size_t k = 0; k < model.layers().size(); ++k) {
    const auto& l = model.layers()[k];
    Json e;
    e["part"] = k < model.encoder_size() ? "encoder" : "decoder";
    e["spec"] = spec_json(l.spec);
    e["weight"] = matrix_json(l.weight);
    e["bias"] = row_json(l.bias);
    if (l.spec.batch_norm) {
      e["gamma"] = row_json(l.gamma);
      e["beta"] = row_json(l.beta);
      e["running_mean"] = row_json(l.running_mean);
      e["running_var"] = row_json(l.running_var);
    }
    layers.push_back(std::move(e));
  }
  Json j;
  j["format"] = "torsionscope-autoencoder";
  j["version"] = 1;
  j["seed"] = model.seed();
  j["input_dim"] = model.input_dim();
  j["latent_dim"] = model.latent_dim();
  j["layers"] = std::move(layers);
  if (config) j["train_config"] = train_config_to_json(*config);
  return j;
}

AutoencoderModel model_from_json(const Json& j) {
  try {
    require(j.value("format", std::string()) == "torsionscope-autoencoder", ErrorCode::InvalidArgument,
            "not an autoencoder checkpoint");
    std::vector<LayerSpec> enc, dec;
    for (const auto& e : j.at("layers"))
      (e.at("part").get<std::string>() == "encoder" ? enc : dec).push_back(spec_from(e.at("spec")));
    AutoencoderModel m(enc, dec, j.value("seed", std::uint64_t{0}));
    std::size_t k = 0;
    for (const auto& e : j.at("layers")) {
      auto& l = m.layers()[k++];
      read_matrix(e.at("weight"), l.weight);
      read_row(e.at("bias"), l.bias);
      if (l.spec.batch_norm) {
        read_row(e.at("gamma"), l.gamma);
        read_row(e.at("beta"), l.beta);
        read_row(e.at("running_mean"), l.running_mean);
        read_row(e.at("running_var"), l.running_var);
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, std::string("malformed checkpoint JSON: ") + e.what());
  }
}

Json read_json_file(const std::string& path) {
  const auto text = detail::read_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::InvalidArgument, path + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) { detail::write_file(path, j.dump(2) + "\n"); }

}  // namespace torsionscope
