#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "torsionscope/pointcloud.hpp"

namespace torsionscope {

using Matrix = Eigen::MatrixXd;  // samples are rows
using RowVector = Eigen::RowVectorXd;

struct LayerSpec {
  std::size_t in_dim = 1;
  std::size_t out_dim = 1;
  Activation activation = Activation::Linear;
  bool batch_norm = false;
};

/// Dense layer: z = x W^T + b, then optional batch norm, then activation.
struct DenseLayer {
  LayerSpec spec;
  Matrix weight;  // out x in
  RowVector bias;
  RowVector gamma, beta;  // batch-norm scale/shift
  RowVector running_mean, running_var;
};

struct ArchitectureOptions {
  Activation hidden_activation = Activation::Relu;
  bool batch_norm = true;  // after every hidden layer; latent and output stay plain linear
};

enum class Mode { Train, Eval };

/// Everything the backward pass needs from one forward pass.
struct ForwardCache {
  Mode mode = Mode::Train;
  std::vector<Matrix> inputs;  // input of each layer
  std::vector<Matrix> pre;     // pre-activation (after batch norm)
  std::vector<Matrix> xhat;    // normalized z, batch-norm layers only
  std::vector<RowVector> batch_mean, batch_var;
  Matrix latent;
  Matrix output;
};

/// Gradients in the same layout as the model parameters.
struct ParameterGradients {
  std::vector<Matrix> weight;
  std::vector<RowVector> bias, gamma, beta;
};

class AutoencoderModel {
 public:
  AutoencoderModel() = default;
  AutoencoderModel(std::vector<LayerSpec> encoder, std::vector<LayerSpec> decoder, std::uint64_t seed);

  /// Widths like {3,32,32,2,32,32,3}; the narrowest layer is the latent space.
  static AutoencoderModel from_widths(const std::vector<std::size_t>& widths, const ArchitectureOptions& options,
                                      std::uint64_t seed);

  std::size_t input_dim() const { return layers_.front().spec.in_dim; }
  std::size_t latent_dim() const { return layers_[encoder_size_ - 1].spec.out_dim; }
  std::size_t encoder_size() const noexcept { return encoder_size_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }
  std::vector<LayerSpec> encoder_specs() const;
  std::vector<LayerSpec> decoder_specs() const;

  /// Pure forward pass. Train mode normalizes with batch statistics and
  /// leaves the running averages alone (see update_running_stats).
  ForwardCache forward(const Matrix& batch, Mode mode) const;
  Matrix encode(const Matrix& batch) const;  // eval mode
  Matrix decode(const Matrix& latent) const;  // eval mode

  void update_running_stats(const ForwardCache& cache, double momentum = 0.1);

  /// Backpropagates dL/dlatent and dL/doutput (either may be empty).
  ParameterGradients backward(const ForwardCache& cache, const Matrix& d_latent, const Matrix& d_output) const;

  std::size_t parameter_count() const;
  std::vector<double> flat_parameters() const;
  void set_flat_parameters(const std::vector<double>& values);
  static std::vector<double> flatten(const ParameterGradients& g);

  friend bool operator==(const AutoencoderModel& a, const AutoencoderModel& b);

 private:
  void validate() const;
  std::vector<DenseLayer> layers_;
  std::size_t encoder_size_ = 0;
  std::uint64_t seed_ = 0;
};

inline constexpr double kBatchNormEps = 1e-5;

/// Mean over samples and coordinates of the squared error.
double mse_loss(const Matrix& output, const Matrix& target);
Matrix mse_grad(const Matrix& output, const Matrix& target);

/// One differentiable loss term. `fn` sees the batch input, latent codes and
/// reconstruction, returns the value and (when asked) gradients with respect
/// to latent and output. Empty gradient matrices mean zero.
struct LossValue {
  double value = 0.0;
  Matrix d_latent;
  Matrix d_output;
};
using LossFn = std::function<LossValue(const Matrix& input, const Matrix& latent, const Matrix& output, bool grad)>;

struct LossTerm {
  std::string name;
  LossFn fn;
  double weight = 1.0;
  int first_epoch = 1;  // term is active from this epoch on
};

LossTerm mse_term();

struct LrPhase {
  int first_epoch = 1;
  int last_epoch = 1;  // inclusive
  double lr = 1e-3;
};

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;
  std::uint64_t seed = 0;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  std::vector<LrPhase> lr_schedule;  // epochs outside every phase use learning_rate
  /// Batch size used when evaluating auxiliary terms on the full data set.
  std::size_t eval_batch_size = 128;
  /// Auxiliary terms are evaluated every this many epochs (0: last epoch only).
  int aux_eval_every = 1;

  double lr_at(int epoch) const;
  void validate() const;
};

/// Adam moments, one slot per parameter tensor.
struct AdamState {
  std::vector<double> m, v;
  std::uint64_t t = 0;
};

struct StepResult {
  std::vector<double> term_values;
  double total = 0.0;
};

/// Computes the weighted loss and gradients on one batch, applies one Adam
/// step (L2 weight decay folded into the gradient) and updates batch-norm
/// running statistics. Throws NumericFailure on a non-finite loss or gradient.
StepResult backward_and_step(AutoencoderModel& model, AdamState& adam, const Matrix& batch,
                             const std::vector<const LossTerm*>& terms, const TrainConfig& config, double lr);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;  // mean weighted batch loss
  double mse = 0.0;         // full data, eval mode
  std::vector<std::pair<std::string, double>> aux;  // auxiliary terms, full data in eval batches
  double total = 0.0;       // mse + weighted aux terms evaluated this epoch
};

struct TrainResult {
  std::vector<EpochRecord> history;
  AdamState adam;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Seeded shuffled mini-batch training. Each epoch ends with a full-data
/// evaluation in eval mode. Auxiliary terms are averaged over a fixed
/// partition of the data into consecutive batches of eval_batch_size.
TrainResult train(AutoencoderModel& model, const PointCloud& data, const TrainConfig& config,
                  const std::vector<LossTerm>& terms, const EpochCallback& on_epoch = {});

/// Eval-mode reconstruction/latent of a whole cloud.
PointCloud reconstruct(const AutoencoderModel& model, const PointCloud& data);
PointCloud latent_codes(const AutoencoderModel& model, const PointCloud& data);

}  // namespace torsionscope
