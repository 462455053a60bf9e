#include "torsionscope/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "torsionscope/error.hpp"
#include "torsionscope/random.hpp"

namespace torsionscope {

namespace {

Matrix activate_all(Activation a, const Matrix& x) {
  if (a == Activation::Linear) return x;
  return x.unaryExpr([a](double v) { return activate(a, v); });
}

Matrix derivative_all(Activation a, const Matrix& x) {
  if (a == Activation::Linear) return Matrix::Ones(x.rows(), x.cols());
  return x.unaryExpr([a](double v) { return activate_derivative(a, v); });
}

DenseLayer make_layer(const LayerSpec& spec, Rng& rng) {
  DenseLayer l;
  l.spec = spec;
  const auto in = Eigen::Index(spec.in_dim), out = Eigen::Index(spec.out_dim);
  // uniform fan-in scaling, bound 1/sqrt(fan_in)
  const double bound = 1.0 / std::sqrt(double(spec.in_dim));
  l.weight.resize(out, in);
  for (Eigen::Index i = 0; i < out; ++i)
    for (Eigen::Index j = 0; j < in; ++j) l.weight(i, j) = rng.uniform(-bound, bound);
  l.bias.resize(out);
  for (Eigen::Index i = 0; i < out; ++i) l.bias(i) = rng.uniform(-bound, bound);
  if (spec.batch_norm) {
    l.gamma = RowVector::Ones(out);
    l.beta = RowVector::Zero(out);
    l.running_mean = RowVector::Zero(out);
    l.running_var = RowVector::Ones(out);
  }
  return l;
}

}  // namespace

AutoencoderModel::AutoencoderModel(std::vector<LayerSpec> encoder, std::vector<LayerSpec> decoder,
                                   std::uint64_t seed)
    : encoder_size_(encoder.size()), seed_(seed) {
  require(!encoder.empty() && !decoder.empty(), ErrorCode::InvalidArgument,
          "encoder and decoder need at least one layer each");
  Rng rng(derive_seed(seed, 0x1417));
  for (const auto& s : encoder) layers_.push_back(make_layer(s, rng));
  for (const auto& s : decoder) layers_.push_back(make_layer(s, rng));
  validate();
}

void AutoencoderModel::validate() const {
  require(!layers_.empty() && encoder_size_ >= 1 && encoder_size_ < layers_.size(), ErrorCode::InvalidArgument,
          "model needs a nonempty encoder and decoder");
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    const auto& s = layers_[k].spec;
    require(s.in_dim >= 1 && s.out_dim >= 1, ErrorCode::InvalidArgument, "layer dims must be positive");
    if (k > 0)
      require(layers_[k - 1].spec.out_dim == s.in_dim, ErrorCode::InvalidArgument,
              "layer " + std::to_string(k) + " input dim does not match the previous output");
  }
  require(layers_.back().spec.out_dim == input_dim(), ErrorCode::InvalidArgument,
          "decoder output dim must equal the input dim");
  require(latent_dim() < input_dim(), ErrorCode::InvalidArgument, "latent dim must be below the input dim");
}

AutoencoderModel AutoencoderModel::from_widths(const std::vector<std::size_t>& widths,
                                               const ArchitectureOptions& options, std::uint64_t seed) {
  require(widths.size() >= 3, ErrorCode::InvalidArgument, "architecture needs input, latent and output widths");
  const std::size_t latent =
      std::size_t(std::min_element(widths.begin() + 1, widths.end() - 1) - widths.begin());
  std::vector<LayerSpec> enc, dec;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    LayerSpec s{widths[k], widths[k + 1], Activation::Linear, false};
    const bool hidden = k + 1 != latent && k + 2 != widths.size();
    if (hidden) {
      s.activation = options.hidden_activation;
      s.batch_norm = options.batch_norm;
    }
    (k < latent ? enc : dec).push_back(s);
  }
  return AutoencoderModel(std::move(enc), std::move(dec), seed);
}

std::vector<LayerSpec> AutoencoderModel::encoder_specs() const {
  std::vector<LayerSpec> out;
  for (std::size_t k = 0; k < encoder_size_; ++k) out.push_back(layers_[k].spec);
  return out;
}

std::vector<LayerSpec> AutoencoderModel::decoder_specs() const {
  std::vector<LayerSpec> out;
  for (std::size_t k = encoder_size_; k < layers_.size(); ++k) out.push_back(layers_[k].spec);
  return out;
}

ForwardCache AutoencoderModel::forward(const Matrix& batch, Mode mode) const {
  require(std::size_t(batch.cols()) == input_dim(), ErrorCode::InvalidArgument,
          "batch has " + std::to_string(batch.cols()) + " columns, model expects " + std::to_string(input_dim()));
  require(batch.rows() >= 1, ErrorCode::InvalidArgument, "empty batch");
  ForwardCache c;
  c.mode = mode;
  const std::size_t L = layers_.size();
  c.inputs.resize(L);
  c.pre.resize(L);
  c.xhat.resize(L);
  c.batch_mean.resize(L);
  c.batch_var.resize(L);
  Matrix x = batch;
  for (std::size_t k = 0; k < L; ++k) {
    const auto& l = layers_[k];
    c.inputs[k] = x;
    Matrix z = x * l.weight.transpose();
    z.rowwise() += l.bias;
    if (l.spec.batch_norm) {
      RowVector mean, var;
      if (mode == Mode::Train) {
        require(batch.rows() >= 2, ErrorCode::Precondition, "batch norm in train mode needs at least two samples");
        mean = z.colwise().mean();
        var = (z.rowwise() - mean).array().square().colwise().mean().matrix();
        c.batch_mean[k] = mean;
        c.batch_var[k] = var;
      } else {
        mean = l.running_mean;
        var = l.running_var;
      }
      const RowVector inv_std = (var.array() + kBatchNormEps).rsqrt().matrix();
      Matrix xh = ((z.rowwise() - mean).array().rowwise() * inv_std.array()).matrix();
      z = (xh.array().rowwise() * l.gamma.array()).matrix();
      z.rowwise() += l.beta;
      c.xhat[k] = std::move(xh);
    }
    c.pre[k] = z;
    x = activate_all(l.spec.activation, z);
    if (k + 1 == encoder_size_) c.latent = x;
  }
  c.output = std::move(x);
  return c;
}

Matrix AutoencoderModel::encode(const Matrix& batch) const { return forward(batch, Mode::Eval).latent; }

Matrix AutoencoderModel::decode(const Matrix& latent) const {
  require(std::size_t(latent.cols()) == latent_dim(), ErrorCode::InvalidArgument, "latent dim mismatch");
  // run the decoder half only
  Matrix x = latent;
  for (std::size_t k = encoder_size_; k < layers_.size(); ++k) {
    const auto& l = layers_[k];
    Matrix z = x * l.weight.transpose();
    z.rowwise() += l.bias;
    if (l.spec.batch_norm) {
      const RowVector inv_std = (l.running_var.array() + kBatchNormEps).rsqrt().matrix();
      z = (((z.rowwise() - l.running_mean).array().rowwise() * inv_std.array()).rowwise() * l.gamma.array())
              .matrix();
      z.rowwise() += l.beta;
    }
    x = activate_all(l.spec.activation, z);
  }
  return x;
}

void AutoencoderModel::update_running_stats(const ForwardCache& cache, double momentum) {
  if (cache.mode != Mode::Train) return;
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    auto& l = layers_[k];
    if (!l.spec.batch_norm) continue;
    const double n = double(cache.inputs[k].rows());
    const RowVector unbiased = cache.batch_var[k] * (n / (n - 1.0));
    l.running_mean = (1.0 - momentum) * l.running_mean + momentum * cache.batch_mean[k];
    l.running_var = (1.0 - momentum) * l.running_var + momentum * unbiased;
  }
}

ParameterGradients AutoencoderModel::backward(const ForwardCache& c, const Matrix& d_latent,
                                              const Matrix& d_output) const {
  const std::size_t L = layers_.size();
  const auto N = c.output.rows();
  ParameterGradients g;
  g.weight.resize(L);
  g.bias.resize(L);
  g.gamma.resize(L);
  g.beta.resize(L);
  Matrix dA = d_output.size() ? d_output : Matrix::Zero(N, c.output.cols());
  for (std::size_t k = L; k-- > 0;) {
    const auto& l = layers_[k];
    if (k + 1 == encoder_size_ && d_latent.size()) dA += d_latent;
    Matrix dz = (dA.array() * derivative_all(l.spec.activation, c.pre[k]).array()).matrix();
    if (l.spec.batch_norm) {
      const Matrix& xh = c.xhat[k];
      g.gamma[k] = (dz.array() * xh.array()).colwise().sum().matrix();
      g.beta[k] = dz.colwise().sum();
      const Matrix dxh = (dz.array().rowwise() * l.gamma.array()).matrix();
      if (c.mode == Mode::Train) {
        const RowVector inv_std = (c.batch_var[k].array() + kBatchNormEps).rsqrt().matrix();
        const RowVector s1 = dxh.colwise().sum();
        const RowVector s2 = (dxh.array() * xh.array()).colwise().sum().matrix();
        Matrix t = double(N) * dxh;
        t.rowwise() -= s1;
        t -= (xh.array().rowwise() * s2.array()).matrix();
        dz = ((t.array().rowwise() * inv_std.array()) / double(N)).matrix();
      } else {
        const RowVector inv_std = (l.running_var.array() + kBatchNormEps).rsqrt().matrix();
        dz = (dxh.array().rowwise() * inv_std.array()).matrix();
      }
    }
    g.weight[k] = dz.transpose() * c.inputs[k];
    g.bias[k] = dz.colwise().sum();
    if (k > 0) dA = dz * l.weight;
  }
  return g;
}

std::size_t AutoencoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) {
    n += std::size_t(l.weight.size() + l.bias.size());
    if (l.spec.batch_norm) n += std::size_t(l.gamma.size() + l.beta.size());
  }
  return n;
}

namespace {

template <typename M>
void append(std::vector<double>& out, const M& m) {
  // row-major order regardless of storage
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
}

template <typename M>
void take(const std::vector<double>& in, std::size_t& pos, M& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = in[pos++];
}

}  // namespace

std::vector<double> AutoencoderModel::flat_parameters() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers_) {
    append(out, l.weight);
    append(out, l.bias);
    if (l.spec.batch_norm) {
      append(out, l.gamma);
      append(out, l.beta);
    }
  }
  return out;
}

void AutoencoderModel::set_flat_parameters(const std::vector<double>& values) {
  require(values.size() == parameter_count(), ErrorCode::InvalidArgument, "parameter vector has the wrong size");
  std::size_t pos = 0;
  for (auto& l : layers_) {
    take(values, pos, l.weight);
    take(values, pos, l.bias);
    if (l.spec.batch_norm) {
      take(values, pos, l.gamma);
      take(values, pos, l.beta);
    }
  }
}

std::vector<double> AutoencoderModel::flatten(const ParameterGradients& g) {
  std::vector<double> out;
  for (std::size_t k = 0; k < g.weight.size(); ++k) {
    append(out, g.weight[k]);
    append(out, g.bias[k]);
    if (g.gamma[k].size()) {
      append(out, g.gamma[k]);
      append(out, g.beta[k]);
    }
  }
  return out;
}

bool operator==(const AutoencoderModel& a, const AutoencoderModel& b) {
  if (a.layers_.size() != b.layers_.size() || a.encoder_size_ != b.encoder_size_) return false;
  for (std::size_t k = 0; k < a.layers_.size(); ++k) {
    const auto &x = a.layers_[k], &y = b.layers_[k];
    if (x.spec.in_dim != y.spec.in_dim || x.spec.out_dim != y.spec.out_dim ||
        x.spec.activation != y.spec.activation || x.spec.batch_norm != y.spec.batch_norm)
      return false;
    if (x.weight != y.weight || x.bias != y.bias) return false;
    if (x.spec.batch_norm && (x.gamma != y.gamma || x.beta != y.beta || x.running_mean != y.running_mean ||
                              x.running_var != y.running_var))
      return false;
  }
  return true;
}

// ---------------------------------------------------------------------- losses

double mse_loss(const Matrix& output, const Matrix& target) {
  require(output.rows() == target.rows() && output.cols() == target.cols(), ErrorCode::InvalidArgument,
          "mse shape mismatch");
  require(output.size() > 0, ErrorCode::InvalidArgument, "mse of empty matrices");
  return (output - target).squaredNorm() / double(output.size());
}

Matrix mse_grad(const Matrix& output, const Matrix& target) {
  return 2.0 * (output - target) / double(output.size());
}

LossTerm mse_term() {
  LossTerm t;
  t.name = "mse";
  t.fn = [](const Matrix& input, const Matrix&, const Matrix& output, bool grad) {
    LossValue v;
    v.value = mse_loss(output, input);
    if (grad) v.d_output = mse_grad(output, input);
    return v;
  };
  return t;
}

// -------------------------------------------------------------------- training

double TrainConfig::lr_at(int epoch) const {
  for (const auto& p : lr_schedule)
    if (epoch >= p.first_epoch && epoch <= p.last_epoch) return p.lr;
  return learning_rate;
}

void TrainConfig::validate() const {
  require(epochs >= 0, ErrorCode::InvalidArgument, "epochs must be nonnegative");
  require(batch_size >= 1 && eval_batch_size >= 1, ErrorCode::InvalidArgument, "batch sizes must be positive");
  require(learning_rate >= 0 && weight_decay >= 0, ErrorCode::InvalidArgument,
          "learning rate and weight decay must be nonnegative");
  for (std::size_t k = 0; k < lr_schedule.size(); ++k) {
    const auto& p = lr_schedule[k];
    require(p.first_epoch >= 1 && p.first_epoch <= p.last_epoch && p.lr >= 0, ErrorCode::InvalidArgument,
            "invalid learning-rate phase");
    if (k > 0)
      require(lr_schedule[k - 1].last_epoch < p.first_epoch, ErrorCode::InvalidArgument,
              "learning-rate phases must be disjoint and ordered");
  }
}

StepResult backward_and_step(AutoencoderModel& model, AdamState& adam, const Matrix& batch,
                             const std::vector<const LossTerm*>& terms, const TrainConfig& config, double lr) {
  const auto cache = model.forward(batch, Mode::Train);
  Matrix d_latent = Matrix::Zero(cache.latent.rows(), cache.latent.cols());
  Matrix d_output = Matrix::Zero(cache.output.rows(), cache.output.cols());
  StepResult res;
  for (const auto* t : terms) {
    const auto v = t->fn(batch, cache.latent, cache.output, true);
    require(std::isfinite(v.value), ErrorCode::NumericFailure, "loss term '" + t->name + "' is not finite");
    res.term_values.push_back(v.value);
    res.total += t->weight * v.value;
    if (t->weight == 0.0) continue;
    if (v.d_latent.size()) d_latent += t->weight * v.d_latent;
    if (v.d_output.size()) d_output += t->weight * v.d_output;
  }
  auto grad = AutoencoderModel::flatten(model.backward(cache, d_latent, d_output));
  for (std::size_t k = 0; k < grad.size(); ++k)
    require(std::isfinite(grad[k]), ErrorCode::NumericFailure,
            "non-finite gradient at parameter " + std::to_string(k));

  auto params = model.flat_parameters();
  if (adam.m.size() != params.size()) {
    adam.m.assign(params.size(), 0.0);
    adam.v.assign(params.size(), 0.0);
    adam.t = 0;
  }
  ++adam.t;
  const double bc1 = 1.0 - std::pow(config.beta1, double(adam.t));
  const double bc2 = 1.0 - std::pow(config.beta2, double(adam.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grad[k] + config.weight_decay * params[k];
    adam.m[k] = config.beta1 * adam.m[k] + (1.0 - config.beta1) * g;
    adam.v[k] = config.beta2 * adam.v[k] + (1.0 - config.beta2) * g * g;
    const double mh = adam.m[k] / bc1, vh = adam.v[k] / bc2;
    params[k] -= lr * mh / (std::sqrt(vh) + config.adam_eps);
  }
  model.set_flat_parameters(params);
  model.update_running_stats(cache);
  return res;
}

namespace {

bool uses_batch_norm(const AutoencoderModel& m) {
  return std::any_of(m.layers().begin(), m.layers().end(), [](const auto& l) { return l.spec.batch_norm; });
}

}  // namespace

TrainResult train(AutoencoderModel& model, const PointCloud& data, const TrainConfig& config,
                  const std::vector<LossTerm>& terms, const EpochCallback& on_epoch) {
  config.validate();
  require(data.dim() == model.input_dim(), ErrorCode::InvalidArgument, "data dim does not match the model");
  require(!terms.empty(), ErrorCode::InvalidArgument, "no loss terms");
  const Matrix X = data.to_matrix();
  const std::size_t N = data.size();
  const bool bn = uses_batch_norm(model);
  TrainResult out;
  std::vector<std::size_t> order(N);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = config.lr_at(epoch);
    std::vector<const LossTerm*> active;
    for (const auto& t : terms)
      if (t.first_epoch <= epoch) active.push_back(&t);

    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(config.seed, std::uint64_t(epoch)));
    rng.shuffle(std::span<std::size_t>(order));

    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < N; start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, N - start);
      if (len < 2 && bn) continue;  // batch statistics undefined
      Matrix batch(Eigen::Index(len), X.cols());
      for (std::size_t r = 0; r < len; ++r) batch.row(Eigen::Index(r)) = X.row(Eigen::Index(order[start + r]));
      sum += backward_and_step(model, out.adam, batch, active, config, lr).total;
      ++batches;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.train_loss = batches ? sum / double(batches) : 0.0;
    const auto full = model.forward(X, Mode::Eval);
    rec.mse = mse_loss(full.output, X);
    require(std::isfinite(rec.mse), ErrorCode::NumericFailure, "evaluation MSE is not finite");
    rec.total = rec.mse;
    const bool due = epoch == config.epochs || (config.aux_eval_every > 0 && epoch % config.aux_eval_every == 0);
    for (const auto& t : terms) {
      if (t.name == "mse" || !due) continue;
      double acc = 0.0;
      std::size_t cnt = 0;
      for (std::size_t start = 0; start < N; start += config.eval_batch_size) {
        const std::size_t len = std::min(config.eval_batch_size, N - start);
        if (len < 2) continue;
        const auto rows = Eigen::seqN(Eigen::Index(start), Eigen::Index(len));
        acc += t.fn(X(rows, Eigen::all), full.latent(rows, Eigen::all), full.output(rows, Eigen::all), false).value;
        ++cnt;
      }
      rec.aux.emplace_back(t.name, cnt ? acc / double(cnt) : 0.0);
      rec.total += t.weight * rec.aux.back().second;
    }
    out.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return out;
}

PointCloud reconstruct(const AutoencoderModel& model, const PointCloud& data) {
  return PointCloud::from_matrix(model.forward(data.to_matrix(), Mode::Eval).output);
}

PointCloud latent_codes(const AutoencoderModel& model, const PointCloud& data) {
  return PointCloud::from_matrix(model.encode(data.to_matrix()));
}

}  // namespace torsionscope
