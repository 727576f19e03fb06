#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "icsv/raster.hpp"
#include "icsv/rng.hpp"

namespace icsv {

/// (batch, channels, height, width) tensor of doubles.
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<double> data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        data(static_cast<std::size_t>(n_) * c_ * h_ * w_, 0.0) {}

  std::size_t size() const { return data.size(); }
  double& at(int in, int ic, int iy, int ix) {
    return data[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  const double& at(int in, int ic, int iy, int ix) const {
    return data[((static_cast<std::size_t>(in) * c + ic) * h + iy) * w + ix];
  }
  bool same_shape(const Tensor4& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  bool all_finite() const;
};

struct Param {
  std::vector<double> value;
  std::vector<double> grad;

  void resize(std::size_t k) {
    value.assign(k, 0.0);
    grad.assign(k, 0.0);
  }
};

class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor4 forward(const Tensor4& x) = 0;
  virtual Tensor4 backward(const Tensor4& dy) = 0;
  virtual std::vector<Param*> params() { return {}; }
  virtual std::string kind() const = 0;
};

std::unique_ptr<Layer> make_conv3x3(int in_channels, int out_channels, Rng& rng);
std::unique_ptr<Layer> make_relu();
std::unique_ptr<Layer> make_sigmoid();
std::unique_ptr<Layer> make_maxpool2();
std::unique_ptr<Layer> make_upsample2();
std::unique_ptr<Layer> make_global_avg_pool();
std::unique_ptr<Layer> make_dense(int in_features, int out_features, Rng& rng);

/// A trainable network: forward, backward, parameter access, and an
/// architecture descriptor used by the checkpoint format.
class Model {
 public:
  virtual ~Model() = default;
  virtual Tensor4 forward(const Tensor4& x) = 0;
  virtual void backward(const Tensor4& dloss) = 0;
  virtual std::vector<Param*> params() = 0;
  virtual std::string arch() const = 0;

  void zero_grad();
};

/// Plain layer chain; arch_name must be reconstructible by the caller if the
/// model is checkpointed (the built-in factories below take care of that).
std::unique_ptr<Model> make_sequential(std::vector<std::unique_ptr<Layer>> layers,
                                       std::string arch_name);

/// Patch classifier: four conv+relu+pool stages (8,16,32,64 channels),
/// global average pool, dense to 2 logits [p, n].
std::unique_ptr<Model> make_classifier(int in_channels, std::uint64_t seed);

/// Encoder-decoder with skip concatenation for SEM reconstruction;
/// 1 input channel, sigmoid output in [0,1].
std::unique_ptr<Model> make_translator(std::uint64_t seed);

struct LossGrad {
  double loss = 0.0;
  Tensor4 grad;
};

/// Softmax cross-entropy over 2 logits, weighted per sample class.
/// Channel 0 is the positive logit p, channel 1 the negative logit n.
LossGrad weighted_ce_loss(const Tensor4& logits, const std::vector<int>& labels, double w_pos,
                          double w_neg);

/// w_pos = N/(P+N), w_neg = P/(P+N).
std::pair<double, double> class_weights(std::int64_t positives, std::int64_t negatives);

LossGrad l1_loss(const Tensor4& pred, const Tensor4& target);

enum class LrSchedule { Constant, LinearDecayLastHalf };
enum class LossKind { WeightedCE, L1 };

struct TrainConfig {
  int epochs = 10;
  double lr = 0.01;
  LrSchedule lr_schedule = LrSchedule::LinearDecayLastHalf;
  int batch_size = 8;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::WeightedCE;
  double w_pos = 1.0;
  double w_neg = 1.0;
  double momentum = 0.9;
};

/// lr for (0-based) epoch e: constant until epochs/2, then linear to 0.
double lr_at(const TrainConfig& cfg, int epoch);

/// Lazy sample access so datasets larger than memory-resident tensors work.
struct ClassifierDataset {
  std::size_t count = 0;
  std::function<void(std::size_t index, Tensor4& x, int& label)> get;
};

struct TranslatorDataset {
  std::size_t count = 0;
  std::function<void(std::size_t index, Tensor4& x, Tensor4& target)> get;
};

/// Momentum SGD over shuffled minibatches; throws on non-finite loss.
/// Returns the mean loss per epoch.
std::vector<double> train_classifier(Model& model, const ClassifierDataset& data,
                                     const TrainConfig& cfg);
std::vector<double> train_translator(Model& model, const TranslatorDataset& data,
                                     const TrainConfig& cfg);

/// Max relative error between analytic and central-difference gradients of the
/// given scalar loss over every parameter.
double grad_check(Model& model, const Tensor4& input,
                  const std::function<LossGrad(const Tensor4&)>& loss_fn, double epsilon);

struct CheckpointMeta {
  std::uint64_t seed = 0;
  int epoch = 0;
};

/// Fresh model with the same architecture and identical parameters
/// (for concurrent inference; layer activation storage is per instance).
std::unique_ptr<Model> clone_model(const Model& model);

/// Versioned header (arch, seed, epoch, sizes) + parameters as LE float32.
void save_checkpoint(const Model& model, const std::string& path, const CheckpointMeta& meta);
std::unique_ptr<Model> load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

}  // namespace icsv
