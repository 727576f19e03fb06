#include "icsv/neural.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

namespace icsv {

using Json = nlohmann::json;
using Mat = Eigen::MatrixXd;

bool Tensor4::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void Model::zero_grad() {
  for (Param* p : params()) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

namespace {

double he_bound(int fan_in) { return std::sqrt(6.0 / fan_in); }

class Conv3x3 final : public Layer {
 public:
  Conv3x3(int in_c, int out_c, Rng& rng) : in_c_(in_c), out_c_(out_c) {
    weight_.resize(static_cast<std::size_t>(out_c) * in_c * 9);
    bias_.resize(out_c);
    const double bound = he_bound(in_c * 9);
    for (auto& v : weight_.value) v = rng.uniform(-bound, bound);
  }

  Tensor4 forward(const Tensor4& x) override {
    if (x.c != in_c_) throw Error("conv3x3: channel mismatch");
    x_ = x;
    Tensor4 y(x.n, out_c_, x.h, x.w);
    const Eigen::Map<const Mat> w(weight_.value.data(), 9 * in_c_, out_c_);
    Mat cols(9 * in_c_, static_cast<Eigen::Index>(x.h) * x.w);
    for (int b = 0; b < x.n; ++b) {
      im2col(x, b, cols);
      Mat out = w.transpose() * cols;  // out_c x (h*w)
      double* dst = y.data.data() + static_cast<std::size_t>(b) * out_c_ * x.h * x.w;
      for (int oc = 0; oc < out_c_; ++oc) {
        const double bb = bias_.value[oc];
        for (Eigen::Index p = 0; p < out.cols(); ++p) dst[oc * out.cols() + p] = out(oc, p) + bb;
      }
    }
    return y;
  }

  Tensor4 backward(const Tensor4& dy) override {
    Tensor4 dx(x_.n, in_c_, x_.h, x_.w);
    const Eigen::Index hw = static_cast<Eigen::Index>(x_.h) * x_.w;
    Eigen::Map<Mat> dw(weight_.grad.data(), 9 * in_c_, out_c_);
    const Eigen::Map<const Mat> w(weight_.value.data(), 9 * in_c_, out_c_);
    Mat cols(9 * in_c_, hw);
    for (int b = 0; b < x_.n; ++b) {
      im2col(x_, b, cols);
      const Eigen::Map<const Mat> g(dy.data.data() + static_cast<std::size_t>(b) * out_c_ * hw, hw,
                                    out_c_);
      dw.noalias() += cols * g;
      for (int oc = 0; oc < out_c_; ++oc) bias_.grad[oc] += g.col(oc).sum();
      Mat dcols = w * g.transpose();  // (9*in_c) x hw
      col2im(dcols, b, dx);
    }
    return dx;
  }

  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  std::string kind() const override { return "conv3x3"; }

 private:
  // column p = (y*w+x); row = (ic*9 + ky*3 + kx); zero padding of 1
  void im2col(const Tensor4& x, int b, Mat& cols) const {
    cols.setZero();
    const int H = x.h, W = x.w;
    const double* base = x.data.data() + static_cast<std::size_t>(b) * in_c_ * H * W;
    for (int ic = 0; ic < in_c_; ++ic) {
      const double* ch = base + static_cast<std::size_t>(ic) * H * W;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const int r = ic * 9 + ky * 3 + kx;
          for (int y = 0; y < H; ++y) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= H) continue;
            const int x0 = std::max(0, 1 - kx);
            const int x1 = std::min(W, W + 1 - kx);
            for (int xx = x0; xx < x1; ++xx)
              cols(r, static_cast<Eigen::Index>(y) * W + xx) = ch[sy * W + xx + kx - 1];
          }
        }
    }
  }

  void col2im(const Mat& dcols, int b, Tensor4& dx) const {
    const int H = dx.h, W = dx.w;
    double* base = dx.data.data() + static_cast<std::size_t>(b) * in_c_ * H * W;
    for (int ic = 0; ic < in_c_; ++ic) {
      double* ch = base + static_cast<std::size_t>(ic) * H * W;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          const int r = ic * 9 + ky * 3 + kx;
          for (int y = 0; y < H; ++y) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= H) continue;
            const int x0 = std::max(0, 1 - kx);
            const int x1 = std::min(W, W + 1 - kx);
            for (int xx = x0; xx < x1; ++xx)
              ch[sy * W + xx + kx - 1] += dcols(r, static_cast<Eigen::Index>(y) * W + xx);
          }
        }
    }
  }

  int in_c_, out_c_;
  Param weight_;  // stored as (9*in_c) x out_c, column-major
  Param bias_;
  Tensor4 x_;
};

class ReLU final : public Layer {
 public:
  Tensor4 forward(const Tensor4& x) override {
    x_ = x;
    Tensor4 y = x;
    for (auto& v : y.data) v = v > 0 ? v : 0.0;
    return y;
  }
  Tensor4 backward(const Tensor4& dy) override {
    Tensor4 dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i)
      if (x_.data[i] <= 0) dx.data[i] = 0.0;
    return dx;
  }
  std::string kind() const override { return "relu"; }

 private:
  Tensor4 x_;
};

class Sigmoid final : public Layer {
 public:
  Tensor4 forward(const Tensor4& x) override {
    y_ = x;
    for (auto& v : y_.data) v = 1.0 / (1.0 + std::exp(-v));
    return y_;
  }
  Tensor4 backward(const Tensor4& dy) override {
    Tensor4 dx = dy;
    for (std::size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= y_.data[i] * (1.0 - y_.data[i]);
    return dx;
  }
  std::string kind() const override { return "sigmoid"; }

 private:
  Tensor4 y_;
};

class MaxPool2 final : public Layer {
 public:
  Tensor4 forward(const Tensor4& x) override {
    if (x.h % 2 || x.w % 2) throw Error("maxpool2: odd spatial dimension");
    in_shape_ = {x.n, x.c, x.h, x.w};
    Tensor4 y(x.n, x.c, x.h / 2, x.w / 2);
    argmax_.assign(y.size(), 0);
    std::size_t o = 0;
    for (int b = 0; b < x.n; ++b)
      for (int ic = 0; ic < x.c; ++ic)
        for (int yy = 0; yy < y.h; ++yy)
          for (int xx = 0; xx < y.w; ++xx, ++o) {
            double best = -1e300;
            std::size_t best_i = 0;
            for (int dy = 0; dy < 2; ++dy)
              for (int dx = 0; dx < 2; ++dx) {
                const std::size_t i =
                    ((static_cast<std::size_t>(b) * x.c + ic) * x.h + 2 * yy + dy) * x.w + 2 * xx +
                    dx;
                if (x.data[i] > best) {
                  best = x.data[i];
                  best_i = i;
                }
              }
            y.data[o] = best;
            argmax_[o] = best_i;
          }
    return y;
  }
  Tensor4 backward(const Tensor4& dy) override {
    Tensor4 dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
    for (std::size_t o = 0; o < dy.data.size(); ++o) dx.data[argmax_[o]] += dy.data[o];
    return dx;
  }
  std::string kind() const override { return "maxpool2"; }

 private:
  std::array<int, 4> in_shape_{};
  std::vector<std::size_t> argmax_;
};

class Upsample2 final : public Layer {
 public:
  Tensor4 forward(const Tensor4& x) override {
    in_shape_ = {x.n, x.c, x.h, x.w};
    Tensor4 y(x.n, x.c, x.h * 2, x.w * 2);
    for (int b = 0; b < x.n; ++b)
      for (int ic = 0; ic < x.c; ++ic)
        for (int yy = 0; yy < y.h; ++yy)
          for (int xx = 0; xx < y.w; ++xx) y.at(b, ic, yy, xx) = x.at(b, ic, yy / 2, xx / 2);
    return y;
  }
  Tensor4 backward(const Tensor4& dy) override {
    Tensor4 dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
    for (int b = 0; b < dy.n; ++b)
      for (int ic = 0; ic < dy.c; ++ic)
        for (int yy = 0; yy < dy.h; ++yy)
          for (int xx = 0; xx < dy.w; ++xx) dx.at(b, ic, yy / 2, xx / 2) += dy.at(b, ic, yy, xx);
    return dx;
  }
  std::string kind() const override { return "upsample2"; }

 private:
  std::array<int, 4> in_shape_{};
};

class GlobalAvgPool final : public Layer {
 public:
  Tensor4 forward(const Tensor4& x) override {
    in_shape_ = {x.n, x.c, x.h, x.w};
    Tensor4 y(x.n, x.c, 1, 1);
    const double inv = 1.0 / (static_cast<double>(x.h) * x.w);
    for (int b = 0; b < x.n; ++b)
      for (int ic = 0; ic < x.c; ++ic) {
        double s = 0;
        for (int yy = 0; yy < x.h; ++yy)
          for (int xx = 0; xx < x.w; ++xx) s += x.at(b, ic, yy, xx);
        y.at(b, ic, 0, 0) = s * inv;
      }
    return y;
  }
  Tensor4 backward(const Tensor4& dy) override {
    Tensor4 dx(in_shape_[0], in_shape_[1], in_shape_[2], in_shape_[3]);
    const double inv = 1.0 / (static_cast<double>(dx.h) * dx.w);
    for (int b = 0; b < dx.n; ++b)
      for (int ic = 0; ic < dx.c; ++ic) {
        const double g = dy.at(b, ic, 0, 0) * inv;
        for (int yy = 0; yy < dx.h; ++yy)
          for (int xx = 0; xx < dx.w; ++xx) dx.at(b, ic, yy, xx) = g;
      }
    return dx;
  }
  std::string kind() const override { return "global-avg-pool"; }

 private:
  std::array<int, 4> in_shape_{};
};

class Dense final : public Layer {
 public:
  Dense(int in_f, int out_f, Rng& rng) : in_f_(in_f), out_f_(out_f) {
    weight_.resize(static_cast<std::size_t>(in_f) * out_f);
    bias_.resize(out_f);
    const double bound = he_bound(in_f);
    for (auto& v : weight_.value) v = rng.uniform(-bound, bound);
  }

  Tensor4 forward(const Tensor4& x) override {
    if (x.c * x.h * x.w != in_f_) throw Error("dense: feature count mismatch");
    x_ = x;
    Tensor4 y(x.n, out_f_, 1, 1);
    const Eigen::Map<const Mat> w(weight_.value.data(), in_f_, out_f_);
    const Eigen::Map<const Mat> xin(x.data.data(), in_f_, x.n);
    Eigen::Map<Mat> yout(y.data.data(), out_f_, y.n);
    yout.noalias() = w.transpose() * xin;
    for (int b = 0; b < x.n; ++b)
      for (int o = 0; o < out_f_; ++o) yout(o, b) += bias_.value[o];
    return y;
  }

  Tensor4 backward(const Tensor4& dy) override {
    Tensor4 dx(x_.n, x_.c, x_.h, x_.w);
    const Eigen::Map<const Mat> w(weight_.value.data(), in_f_, out_f_);
    const Eigen::Map<const Mat> xin(x_.data.data(), in_f_, x_.n);
    const Eigen::Map<const Mat> g(dy.data.data(), out_f_, dy.n);
    Eigen::Map<Mat> dw(weight_.grad.data(), in_f_, out_f_);
    Eigen::Map<Mat> dxm(dx.data.data(), in_f_, dx.n);
    dw.noalias() += xin * g.transpose();
    for (int b = 0; b < dy.n; ++b)
      for (int o = 0; o < out_f_; ++o) bias_.grad[o] += g(o, b);
    dxm.noalias() = w * g;
    return dx;
  }

  std::vector<Param*> params() override { return {&weight_, &bias_}; }
  std::string kind() const override { return "dense"; }

 private:
  int in_f_, out_f_;
  Param weight_;  // in_f x out_f, column-major
  Param bias_;
  Tensor4 x_;
};

Tensor4 concat_channels(const Tensor4& a, const Tensor4& b) {
  Tensor4 y(a.n, a.c + b.c, a.h, a.w);
  for (int i = 0; i < a.n; ++i) {
    std::memcpy(&y.at(i, 0, 0, 0), &a.at(i, 0, 0, 0),
                static_cast<std::size_t>(a.c) * a.h * a.w * sizeof(double));
    std::memcpy(&y.at(i, a.c, 0, 0), &b.at(i, 0, 0, 0),
                static_cast<std::size_t>(b.c) * b.h * b.w * sizeof(double));
  }
  return y;
}

std::pair<Tensor4, Tensor4> split_channels(const Tensor4& y, int c_a) {
  Tensor4 a(y.n, c_a, y.h, y.w), b(y.n, y.c - c_a, y.h, y.w);
  for (int i = 0; i < y.n; ++i) {
    std::memcpy(&a.at(i, 0, 0, 0), &y.at(i, 0, 0, 0),
                static_cast<std::size_t>(c_a) * y.h * y.w * sizeof(double));
    std::memcpy(&b.at(i, 0, 0, 0), &y.at(i, c_a, 0, 0),
                static_cast<std::size_t>(y.c - c_a) * y.h * y.w * sizeof(double));
  }
  return {std::move(a), std::move(b)};
}

void add_into(Tensor4& dst, const Tensor4& src) {
  for (std::size_t i = 0; i < dst.data.size(); ++i) dst.data[i] += src.data[i];
}

class SequentialModel final : public Model {
 public:
  SequentialModel(std::vector<std::unique_ptr<Layer>> layers, std::string arch)
      : layers_(std::move(layers)), arch_(std::move(arch)) {}

  Tensor4 forward(const Tensor4& x) override {
    Tensor4 cur = x;
    for (auto& l : layers_) cur = l->forward(cur);
    return cur;
  }
  void backward(const Tensor4& dloss) override {
    Tensor4 cur = dloss;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) cur = (*it)->backward(cur);
  }
  std::vector<Param*> params() override {
    std::vector<Param*> out;
    for (auto& l : layers_)
      for (Param* p : l->params()) out.push_back(p);
    return out;
  }
  std::string arch() const override { return arch_; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  std::string arch_;
};

class TranslatorModel final : public Model {
 public:
  explicit TranslatorModel(std::uint64_t seed) {
    Rng rng(seed);
    enc1_ = make_conv3x3(1, 8, rng);
    enc2_ = make_conv3x3(8, 16, rng);
    enc3_ = make_conv3x3(16, 32, rng);
    bott_ = make_conv3x3(32, 64, rng);
    dec3_ = make_conv3x3(96, 32, rng);
    dec2_ = make_conv3x3(48, 16, rng);
    dec1_ = make_conv3x3(24, 8, rng);
    out_ = make_conv3x3(8, 1, rng);
    for (int i = 0; i < 7; ++i) relu_[i] = make_relu();
    for (int i = 0; i < 3; ++i) {
      pool_[i] = make_maxpool2();
      up_[i] = make_upsample2();
    }
    sigmoid_ = make_sigmoid();
  }

  Tensor4 forward(const Tensor4& x) override {
    a1_ = relu_[0]->forward(enc1_->forward(x));
    const Tensor4 p1 = pool_[0]->forward(a1_);
    a2_ = relu_[1]->forward(enc2_->forward(p1));
    const Tensor4 p2 = pool_[1]->forward(a2_);
    a3_ = relu_[2]->forward(enc3_->forward(p2));
    const Tensor4 p3 = pool_[2]->forward(a3_);
    const Tensor4 b = relu_[3]->forward(bott_->forward(p3));
    const Tensor4 d3 = relu_[4]->forward(dec3_->forward(concat_channels(up_[2]->forward(b), a3_)));
    const Tensor4 d2 = relu_[5]->forward(dec2_->forward(concat_channels(up_[1]->forward(d3), a2_)));
    const Tensor4 d1 = relu_[6]->forward(dec1_->forward(concat_channels(up_[0]->forward(d2), a1_)));
    return sigmoid_->forward(out_->forward(d1));
  }

  void backward(const Tensor4& dloss) override {
    const Tensor4 dd1 = relu_[6]->backward(out_->backward(sigmoid_->backward(dloss)));
    auto [du1, da1_skip] = split_channels(dec1_->backward(dd1), 16);
    const Tensor4 dd2 = relu_[5]->backward(up_[0]->backward(du1));
    auto [du2, da2_skip] = split_channels(dec2_->backward(dd2), 32);
    const Tensor4 dd3 = relu_[4]->backward(up_[1]->backward(du2));
    auto [du3, da3_skip] = split_channels(dec3_->backward(dd3), 64);
    const Tensor4 db = relu_[3]->backward(up_[2]->backward(du3));
    Tensor4 da3 = pool_[2]->backward(bott_->backward(db));
    add_into(da3, da3_skip);
    Tensor4 da2 = pool_[1]->backward(enc3_->backward(relu_[2]->backward(da3)));
    add_into(da2, da2_skip);
    Tensor4 da1 = pool_[0]->backward(enc2_->backward(relu_[1]->backward(da2)));
    add_into(da1, da1_skip);
    enc1_->backward(relu_[0]->backward(da1));
  }

  std::vector<Param*> params() override {
    std::vector<Param*> out;
    for (Layer* l : {enc1_.get(), enc2_.get(), enc3_.get(), bott_.get(), dec3_.get(), dec2_.get(),
                     dec1_.get(), out_.get()})
      for (Param* p : l->params()) out.push_back(p);
    return out;
  }
  std::string arch() const override { return "translator"; }

 private:
  std::unique_ptr<Layer> enc1_, enc2_, enc3_, bott_, dec3_, dec2_, dec1_, out_;
  std::unique_ptr<Layer> relu_[7], pool_[3], up_[3], sigmoid_;
  Tensor4 a1_, a2_, a3_;
};

}  // namespace

std::unique_ptr<Layer> make_conv3x3(int in_channels, int out_channels, Rng& rng) {
  return std::make_unique<Conv3x3>(in_channels, out_channels, rng);
}
std::unique_ptr<Layer> make_relu() { return std::make_unique<ReLU>(); }
std::unique_ptr<Layer> make_sigmoid() { return std::make_unique<Sigmoid>(); }
std::unique_ptr<Layer> make_maxpool2() { return std::make_unique<MaxPool2>(); }
std::unique_ptr<Layer> make_upsample2() { return std::make_unique<Upsample2>(); }
std::unique_ptr<Layer> make_global_avg_pool() { return std::make_unique<GlobalAvgPool>(); }
std::unique_ptr<Layer> make_dense(int in_features, int out_features, Rng& rng) {
  return std::make_unique<Dense>(in_features, out_features, rng);
}

std::unique_ptr<Model> make_sequential(std::vector<std::unique_ptr<Layer>> layers,
                                       std::string arch_name) {
  return std::make_unique<SequentialModel>(std::move(layers), std::move(arch_name));
}

std::unique_ptr<Model> make_classifier(int in_channels, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::unique_ptr<Layer>> layers;
  int c = in_channels;
  for (int out : {8, 16, 32, 64}) {
    layers.push_back(make_conv3x3(c, out, rng));
    layers.push_back(make_relu());
    layers.push_back(make_maxpool2());
    c = out;
  }
  layers.push_back(make_global_avg_pool());
  layers.push_back(make_dense(64, 2, rng));
  return make_sequential(std::move(layers), "classifier:" + std::to_string(in_channels));
}

std::unique_ptr<Model> make_translator(std::uint64_t seed) {
  return std::make_unique<TranslatorModel>(seed);
}

LossGrad weighted_ce_loss(const Tensor4& logits, const std::vector<int>& labels, double w_pos,
                          double w_neg) {
  if (logits.c != 2 || logits.h != 1 || logits.w != 1)
    throw Error("weighted_ce_loss: expect (n,2,1,1) logits");
  if (static_cast<std::size_t>(logits.n) != labels.size())
    throw Error("weighted_ce_loss: label count mismatch");
  if (w_pos < 0 || w_neg < 0) throw Error("weighted_ce_loss: negative weight");

  LossGrad out;
  out.grad = Tensor4(logits.n, 2, 1, 1);
  const double inv_b = 1.0 / logits.n;
  for (int b = 0; b < logits.n; ++b) {
    const double p = logits.at(b, 0, 0, 0);
    const double n = logits.at(b, 1, 0, 0);
    const double m = std::max(p, n);
    const double z = std::exp(p - m) + std::exp(n - m);
    const double sp = std::exp(p - m) / z;
    const int target = labels[b] ? 0 : 1;  // channel 0 carries the positive logit
    const double weight = labels[b] ? w_pos : w_neg;
    const double s_target = target == 0 ? sp : 1.0 - sp;
    out.loss += weight * -std::log(std::max(s_target, 1e-300)) * inv_b;
    out.grad.at(b, 0, 0, 0) = weight * (sp - (target == 0 ? 1.0 : 0.0)) * inv_b;
    out.grad.at(b, 1, 0, 0) = weight * ((1.0 - sp) - (target == 1 ? 1.0 : 0.0)) * inv_b;
  }
  return out;
}

std::pair<double, double> class_weights(std::int64_t positives, std::int64_t negatives) {
  if (positives + negatives <= 0) throw Error("class_weights: empty sample set");
  const double total = static_cast<double>(positives + negatives);
  return {negatives / total, positives / total};
}

LossGrad l1_loss(const Tensor4& pred, const Tensor4& target) {
  if (!pred.same_shape(target)) throw Error("l1_loss: shape mismatch");
  LossGrad out;
  out.grad = Tensor4(pred.n, pred.c, pred.h, pred.w);
  const double inv = 1.0 / pred.size();
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const double d = pred.data[i] - target.data[i];
    out.loss += std::abs(d) * inv;
    out.grad.data[i] = d > 0 ? inv : d < 0 ? -inv : 0.0;
  }
  return out;
}

double lr_at(const TrainConfig& cfg, int epoch) {
  if (cfg.lr_schedule == LrSchedule::Constant) return cfg.lr;
  const int half = cfg.epochs / 2;
  if (epoch < half) return cfg.lr;
  return cfg.lr * static_cast<double>(cfg.epochs - epoch) / (cfg.epochs - half);
}

namespace {

struct SgdState {
  std::vector<std::vector<double>> velocity;

  void init(const std::vector<Param*>& params) {
    velocity.clear();
    for (Param* p : params) velocity.emplace_back(p->value.size(), 0.0);
  }
  void step(const std::vector<Param*>& params, double lr, double momentum) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto& v = velocity[k];
      auto& p = *params[k];
      for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = momentum * v[i] - lr * p.grad[i];
        p.value[i] += v[i];
      }
    }
  }
};

template <typename StepFn>
std::vector<double> train_loop(Model& model, std::size_t count, const TrainConfig& cfg,
                               StepFn&& run_batch) {
  if (count == 0) throw Error("train: empty dataset");
  auto params = model.params();
  SgdState sgd;
  sgd.init(params);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::vector<double> curve;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    const double lr = lr_at(cfg, epoch);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < count; start += cfg.batch_size) {
      const std::size_t end = std::min(count, start + cfg.batch_size);
      model.zero_grad();
      const double loss = run_batch(order, start, end);
      if (!std::isfinite(loss)) throw Error("train: loss diverged (non-finite)");
      sgd.step(params, lr, cfg.momentum);
      epoch_loss += loss;
      ++batches;
    }
    curve.push_back(epoch_loss / batches);
  }
  return curve;
}

Tensor4 stack_batch(const std::vector<Tensor4>& items) {
  const Tensor4& first = items.front();
  Tensor4 out(static_cast<int>(items.size()), first.c, first.h, first.w);
  const std::size_t stride = first.size();
  for (std::size_t i = 0; i < items.size(); ++i)
    std::copy(items[i].data.begin(), items[i].data.end(), out.data.begin() + i * stride);
  return out;
}

}  // namespace

std::vector<double> train_classifier(Model& model, const ClassifierDataset& data,
                                     const TrainConfig& cfg) {
  return train_loop(model, data.count, cfg,
                    [&](const std::vector<std::size_t>& order, std::size_t start, std::size_t end) {
                      std::vector<Tensor4> xs(end - start);
                      std::vector<int> labels(end - start);
                      for (std::size_t i = start; i < end; ++i)
                        data.get(order[i], xs[i - start], labels[i - start]);
                      const Tensor4 x = stack_batch(xs);
                      const Tensor4 logits = model.forward(x);
                      auto lg = weighted_ce_loss(logits, labels, cfg.w_pos, cfg.w_neg);
                      model.backward(lg.grad);
                      return lg.loss;
                    });
}

std::vector<double> train_translator(Model& model, const TranslatorDataset& data,
                                     const TrainConfig& cfg) {
  return train_loop(model, data.count, cfg,
                    [&](const std::vector<std::size_t>& order, std::size_t start, std::size_t end) {
                      std::vector<Tensor4> xs(end - start), ys(end - start);
                      for (std::size_t i = start; i < end; ++i)
                        data.get(order[i], xs[i - start], ys[i - start]);
                      const Tensor4 x = stack_batch(xs);
                      const Tensor4 y = stack_batch(ys);
                      const Tensor4 pred = model.forward(x);
                      auto lg = l1_loss(pred, y);
                      model.backward(lg.grad);
                      return lg.loss;
                    });
}

double grad_check(Model& model, const Tensor4& input,
                  const std::function<LossGrad(const Tensor4&)>& loss_fn, double epsilon) {
  if (epsilon <= 0) throw Error("grad_check: epsilon must be > 0");
  model.zero_grad();
  auto lg = loss_fn(model.forward(input));
  model.backward(lg.grad);

  auto params = model.params();
  std::vector<std::vector<double>> analytic;
  for (Param* p : params) analytic.push_back(p->grad);

  double max_rel = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    for (std::size_t i = 0; i < params[k]->value.size(); ++i) {
      double& v = params[k]->value[i];
      const double saved = v;
      v = saved + epsilon;
      const double f_plus = loss_fn(model.forward(input)).loss;
      v = saved - epsilon;
      const double f_minus = loss_fn(model.forward(input)).loss;
      v = saved;
      const double fd = (f_plus - f_minus) / (2 * epsilon);
      const double a = analytic[k][i];
      const double denom = std::max({std::abs(fd), std::abs(a), 1e-8});
      max_rel = std::max(max_rel, std::abs(fd - a) / denom);
    }
  }
  return max_rel;
}

namespace {
std::unique_ptr<Model> make_by_arch(const std::string& arch) {
  if (arch.rfind("classifier:", 0) == 0) return make_classifier(std::stoi(arch.substr(11)), 0);
  if (arch == "translator") return make_translator(0);
  throw Error("unknown arch '" + arch + "'");
}
}  // namespace

std::unique_ptr<Model> clone_model(const Model& model) {
  auto copy = make_by_arch(model.arch());
  auto src = const_cast<Model&>(model).params();
  auto dst = copy->params();
  for (std::size_t k = 0; k < src.size(); ++k) dst[k]->value = src[k]->value;
  return copy;
}

void save_checkpoint(const Model& model, const std::string& path, const CheckpointMeta& meta) {
  auto& m = const_cast<Model&>(model);
  const auto params = m.params();
  Json header;
  header["magic"] = "ICSVCKPT";
  header["version"] = 1;
  header["arch"] = model.arch();
  header["seed"] = meta.seed;
  header["epoch"] = meta.epoch;
  Json sizes = Json::array();
  for (Param* p : params) sizes.push_back(p->value.size());
  header["param_sizes"] = sizes;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write checkpoint: " + path);
  out << header.dump() << "\n";
  for (Param* p : params) {
    std::vector<float> f32(p->value.begin(), p->value.end());
    out.write(reinterpret_cast<const char*>(f32.data()),
              static_cast<std::streamsize>(f32.size() * sizeof(float)));
  }
  if (!out) throw Error("I/O failure writing checkpoint: " + path);
}

std::unique_ptr<Model> load_checkpoint(const std::string& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint: " + path);
  std::string line;
  std::getline(in, line);
  Json header = Json::parse(line, nullptr, false);
  if (header.is_discarded() || header.value("magic", "") != "ICSVCKPT")
    throw Error("checkpoint header mismatch: " + path);
  const std::string arch = header.at("arch");

  std::unique_ptr<Model> model;
  try {
    model = make_by_arch(arch);
  } catch (const Error&) {
    throw Error("checkpoint header mismatch: unknown arch '" + arch + "'");
  }

  const auto params = model->params();
  const auto sizes = header.at("param_sizes");
  if (sizes.size() != params.size()) throw Error("checkpoint header mismatch: param count");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (sizes[k].get<std::size_t>() != params[k]->value.size())
      throw Error("checkpoint header mismatch: param size");
    std::vector<float> f32(params[k]->value.size());
    in.read(reinterpret_cast<char*>(f32.data()),
            static_cast<std::streamsize>(f32.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(f32.size() * sizeof(float)))
      throw Error("truncated checkpoint: " + path);
    for (std::size_t i = 0; i < f32.size(); ++i) params[k]->value[i] = f32[i];
  }
  if (meta) {
    meta->seed = header.value("seed", std::uint64_t{0});
    meta->epoch = header.value("epoch", 0);
  }
  return model;
}

}  // namespace icsv
