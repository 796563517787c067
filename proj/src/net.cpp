/* Copyright 2026 The bayesseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "bayesseg/net.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "bayesseg/io.hpp"

namespace bayesseg {

namespace {

using ConstWeights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using GradWeights = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

ConstWeights weights_of(std::span<const double> params, const ConvSpec& c) {
  return ConstWeights(params.data() + c.weight_offset, c.out_channels, static_cast<Eigen::Index>(c.fan_in()));
}

Eigen::Map<const Eigen::VectorXd> bias_of(std::span<const double> params, const ConvSpec& c) {
  return Eigen::Map<const Eigen::VectorXd>(params.data() + c.bias_offset, c.out_channels);
}

// 3x3 patches with zero padding: row (ci*9 + ky*3 + kx), column (y*w + x).
void im2col3(const Activation& x, int h, int w, Activation& col) {
  const auto cin = x.rows();
  col.resize(cin * 9, static_cast<Eigen::Index>(h) * w);
  for (Eigen::Index ci = 0; ci < cin; ++ci) {
    const double* src = x.row(ci).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = col.row(ci * 9 + ky * 3 + kx).data();
        const int dy = ky - 1;
        const int dx = kx - 1;
        for (int y = 0; y < h; ++y) {
          double* out = dst + static_cast<std::ptrdiff_t>(y) * w;
          const int sy = y + dy;
          if (sy < 0 || sy >= h) {
            std::fill(out, out + w, 0.0);
            continue;
          }
          const double* in = src + static_cast<std::ptrdiff_t>(sy) * w;
          const int x_lo = std::max(0, -dx);
          const int x_hi = std::min(w, w - dx);
          for (int xx = 0; xx < x_lo; ++xx) out[xx] = 0.0;
          for (int xx = x_lo; xx < x_hi; ++xx) out[xx] = in[xx + dx];
          for (int xx = x_hi; xx < w; ++xx) out[xx] = 0.0;
        }
      }
    }
  }
}

Activation col2im3(const Activation& col, int h, int w) {
  const auto cin = col.rows() / 9;
  Activation dx = Activation::Zero(cin, static_cast<Eigen::Index>(h) * w);
  for (Eigen::Index ci = 0; ci < cin; ++ci) {
    double* dst = dx.row(ci).data();
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = col.row(ci * 9 + ky * 3 + kx).data();
        const int dy = ky - 1;
        const int ddx = kx - 1;
        for (int y = 0; y < h; ++y) {
          const int sy = y + dy;
          if (sy < 0 || sy >= h) continue;
          const double* in = src + static_cast<std::ptrdiff_t>(y) * w;
          double* out = dst + static_cast<std::ptrdiff_t>(sy) * w;
          const int x_lo = std::max(0, -ddx);
          const int x_hi = std::min(w, w - ddx);
          for (int xx = x_lo; xx < x_hi; ++xx) out[xx + ddx] += in[xx];
        }
      }
    }
  }
  return dx;
}

Activation conv_apply(std::span<const double> params, const ConvSpec& c, const Activation& col) {
  Activation out = weights_of(params, c) * col;
  out.colwise() += bias_of(params, c);
  return out;
}

// Accumulates weight/bias gradients and returns d(col).
Activation conv_backward(std::span<const double> params, const ConvSpec& c, const Activation& col,
                         const Activation& dout, std::span<double> grad) {
  GradWeights gw(grad.data() + c.weight_offset, c.out_channels, static_cast<Eigen::Index>(c.fan_in()));
  gw.noalias() += dout * col.transpose();
  Eigen::Map<Eigen::VectorXd>(grad.data() + c.bias_offset, c.out_channels) += dout.rowwise().sum();
  return weights_of(params, c).transpose() * dout;
}

Activation maxpool2(const Activation& x, int h, int w, std::vector<Eigen::Index>* argmax) {
  const int oh = h / 2;
  const int ow = w / 2;
  Activation out(x.rows(), static_cast<Eigen::Index>(oh) * ow);
  if (argmax) argmax->resize(static_cast<std::size_t>(out.size()));
  for (Eigen::Index c = 0; c < x.rows(); ++c) {
    const double* src = x.row(c).data();
    for (int y = 0; y < oh; ++y) {
      for (int xx = 0; xx < ow; ++xx) {
        Eigen::Index best = static_cast<Eigen::Index>(2 * y) * w + 2 * xx;
        for (Eigen::Index cand : {best + 1, best + w, best + w + 1}) {
          if (src[cand] > src[best]) best = cand;
        }
        const Eigen::Index o = static_cast<Eigen::Index>(y) * ow + xx;
        out(c, o) = src[best];
        if (argmax) (*argmax)[static_cast<std::size_t>(c * out.cols() + o)] = best;
      }
    }
  }
  return out;
}

Activation maxpool2_backward(const Activation& dout, const std::vector<Eigen::Index>& argmax, int h, int w) {
  Activation dx = Activation::Zero(dout.rows(), static_cast<Eigen::Index>(h) * w);
  for (Eigen::Index c = 0; c < dout.rows(); ++c) {
    for (Eigen::Index o = 0; o < dout.cols(); ++o) {
      dx(c, argmax[static_cast<std::size_t>(c * dout.cols() + o)]) += dout(c, o);
    }
  }
  return dx;
}

Activation upsample2(const Activation& x, int h, int w) {
  Activation out(x.rows(), static_cast<Eigen::Index>(4) * h * w);
  const int ow = 2 * w;
  for (Eigen::Index c = 0; c < x.rows(); ++c) {
    for (int y = 0; y < 2 * h; ++y) {
      for (int xx = 0; xx < ow; ++xx) {
        out(c, static_cast<Eigen::Index>(y) * ow + xx) = x(c, static_cast<Eigen::Index>(y / 2) * w + xx / 2);
      }
    }
  }
  return out;
}

Activation upsample2_backward(const Activation& dout, int h, int w) {
  Activation dx = Activation::Zero(dout.rows(), static_cast<Eigen::Index>(h) * w);
  const int ow = 2 * w;
  for (Eigen::Index c = 0; c < dout.rows(); ++c) {
    for (int y = 0; y < 2 * h; ++y) {
      for (int xx = 0; xx < ow; ++xx) {
        dx(c, static_cast<Eigen::Index>(y / 2) * w + xx / 2) += dout(c, static_cast<Eigen::Index>(y) * ow + xx);
      }
    }
  }
  return dx;
}

PixelProbs softmax_columns(const Activation& logits) {
  PixelProbs p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    double s = 0.0;
    for (Eigen::Index k = 0; k < logits.rows(); ++k) {
      p(k, j) = std::exp(logits(k, j) - m);
      s += p(k, j);
    }
    p.col(j) /= s;
  }
  return p;
}

}  // namespace

void NetConfig::validate() const {
  if (depth < 1) throw std::invalid_argument("depth must be >= 1");
  if (base_channels < 1) throw std::invalid_argument("base_channels must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("dropout_rate must be in [0,1)");
  if (num_classes < 2 || num_classes > 255) throw std::invalid_argument("num_classes must be in [2,255]");
  if (tile_size < 1 || tile_size % (1 << depth) != 0) {
    throw std::invalid_argument("tile_size " + std::to_string(tile_size) + " must be divisible by 2^depth = " +
                                std::to_string(1 << depth));
  }
}

UNet::UNet(const NetConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  auto make = [this](int cin, int cout, int k) {
    ConvSpec c{cin, cout, k, num_params_, 0};
    num_params_ += c.fan_in() * static_cast<std::size_t>(cout);
    c.bias_offset = num_params_;
    num_params_ += static_cast<std::size_t>(cout);
    convs_.push_back(c);
    return c;
  };
  auto channels = [&](int level) { return cfg_.base_channels << level; };

  int in = 1;
  for (int l = 0; l < cfg_.depth; ++l) {
    Block b;
    b.conv1 = make(in, channels(l), 3);
    b.conv2 = make(channels(l), channels(l), 3);
    encoder_.push_back(b);
    in = channels(l);
  }
  bottleneck_.conv1 = make(in, channels(cfg_.depth), 3);
  bottleneck_.conv2 = make(channels(cfg_.depth), channels(cfg_.depth), 3);
  decoder_.resize(static_cast<std::size_t>(cfg_.depth));
  for (int l = cfg_.depth - 1; l >= 0; --l) {
    Block b;
    b.conv1 = make(channels(l + 1) + channels(l), channels(l), 3);
    b.conv2 = make(channels(l), channels(l), 3);
    decoder_[static_cast<std::size_t>(l)] = b;
  }
  head_ = make(channels(0), cfg_.num_classes, 1);
}

std::vector<double> UNet::init_params(std::uint64_t seed) const {
  std::vector<double> p(num_params_, 0.0);
  Rng rng(seed);
  for (const auto& c : convs_) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(c.fan_in()));
    const std::size_t n = c.fan_in() * static_cast<std::size_t>(c.out_channels);
    for (std::size_t i = 0; i < n; ++i) p[c.weight_offset + i] = stddev * rng.normal();
  }
  return p;
}

Activation UNet::block_forward(std::span<const double> params, const Block& b, const Activation& x, int h, int w,
                               Rng* dropout, BlockTape* tape) const {
  Activation col1, col2;
  im2col3(x, h, w, col1);
  Activation a1 = conv_apply(params, b.conv1, col1).cwiseMax(0.0);
  im2col3(a1, h, w, col2);
  Activation a2 = conv_apply(params, b.conv2, col2).cwiseMax(0.0);
  Activation out = a2;
  Activation mask;
  if (dropout != nullptr && cfg_.dropout_rate > 0.0) {
    const double keep = 1.0 - cfg_.dropout_rate;
    const double scale = 1.0 / keep;
    mask.resize(a2.rows(), a2.cols());
    double* m = mask.data();
    for (Eigen::Index i = 0; i < mask.size(); ++i) m[i] = dropout->uniform() < keep ? scale : 0.0;
    out.array() *= mask.array();
  }
  if (tape) {
    tape->col1 = std::move(col1);
    tape->act1 = std::move(a1);
    tape->col2 = std::move(col2);
    tape->act2 = std::move(a2);
    tape->mask = std::move(mask);
    tape->height = h;
    tape->width = w;
  }
  return out;
}

Activation UNet::block_backward(std::span<const double> params, const Block& b, const BlockTape& tape,
                                const Activation& dy, std::span<double> grad) const {
  Activation da2 = dy;
  if (tape.mask.size() > 0) da2.array() *= tape.mask.array();
  da2.array() *= (tape.act2.array() > 0.0).cast<double>();
  Activation dcol2 = conv_backward(params, b.conv2, tape.col2, da2, grad);
  Activation da1 = col2im3(dcol2, tape.height, tape.width);
  da1.array() *= (tape.act1.array() > 0.0).cast<double>();
  Activation dcol1 = conv_backward(params, b.conv1, tape.col1, da1, grad);
  return col2im3(dcol1, tape.height, tape.width);
}

PixelProbs UNet::forward(std::span<const double> params, std::span<const double> input, Rng* dropout) const {
  Tape tape;
  return forward(params, input, dropout, tape);
}

PixelProbs UNet::forward(std::span<const double> params, std::span<const double> input, Rng* dropout,
                         Tape& tape) const {
  if (params.size() != num_params_) throw std::invalid_argument("forward: parameter count mismatch");
  const int d = cfg_.tile_size;
  if (input.size() != static_cast<std::size_t>(d) * d) {
    throw std::invalid_argument("forward: input must be " + std::to_string(d) + "x" + std::to_string(d));
  }
  const auto depth = static_cast<std::size_t>(cfg_.depth);
  tape.encoder.assign(depth, {});
  tape.skips.assign(depth, {});
  tape.pool_argmax.assign(depth, {});
  tape.decoder.assign(depth, {});

  Activation x = Eigen::Map<const Activation>(input.data(), 1, static_cast<Eigen::Index>(input.size()));
  int h = d;
  int w = d;
  for (std::size_t l = 0; l < depth; ++l) {
    tape.skips[l] = block_forward(params, encoder_[l], x, h, w, dropout, &tape.encoder[l]);
    x = maxpool2(tape.skips[l], h, w, &tape.pool_argmax[l]);
    h /= 2;
    w /= 2;
  }
  x = block_forward(params, bottleneck_, x, h, w, dropout, &tape.bottleneck);
  for (std::size_t l = depth; l-- > 0;) {
    Activation up = upsample2(x, h, w);
    h *= 2;
    w *= 2;
    Activation cat(up.rows() + tape.skips[l].rows(), up.cols());
    cat << up, tape.skips[l];
    x = block_forward(params, decoder_[l], cat, h, w, dropout, &tape.decoder[l]);
  }
  tape.head_in = x;
  tape.probs = softmax_columns(conv_apply(params, head_, x));
  return tape.probs;
}

void UNet::backward(std::span<const double> params, const Tape& tape, const PixelProbs& dprobs,
                    std::span<double> grad) const {
  if (grad.size() != num_params_) throw std::invalid_argument("backward: gradient size mismatch");
  const auto& p = tape.probs;
  // Softmax Jacobian: dz_k = p_k (g_k - sum_j p_j g_j).
  const Eigen::RowVectorXd dot = (p.array() * dprobs.array()).colwise().sum();
  Activation dlogits = (p.array() * (dprobs.array().rowwise() - dot.array())).matrix();
  Activation dx = conv_backward(params, head_, tape.head_in, dlogits, grad);

  const auto depth = static_cast<std::size_t>(cfg_.depth);
  std::vector<Activation> dskips(depth);
  for (std::size_t l = 0; l < depth; ++l) {
    const auto& bt = tape.decoder[l];
    Activation dcat = block_backward(params, decoder_[l], bt, dx, grad);
    const auto up_rows = dcat.rows() - tape.skips[l].rows();
    dskips[l] = dcat.bottomRows(tape.skips[l].rows());
    dx = upsample2_backward(dcat.topRows(up_rows), bt.height / 2, bt.width / 2);
  }
  dx = block_backward(params, bottleneck_, tape.bottleneck, dx, grad);
  for (std::size_t l = depth; l-- > 0;) {
    const auto& et = tape.encoder[l];
    Activation dy = maxpool2_backward(dx, tape.pool_argmax[l], et.height, et.width);
    dy += dskips[l];
    dx = block_backward(params, encoder_[l], et, dy, grad);
  }
}

ModelState ModelState::initialize(const NetConfig& cfg, std::uint64_t seed) {
  ModelState m;
  m.config = cfg;
  m.seed = seed;
  m.params = UNet(cfg).init_params(derive_seed(seed, 0x1417));
  m.quantize();
  return m;
}

void ModelState::quantize() {
  for (auto& v : params) v = static_cast<double>(static_cast<float>(v));
}

std::string encode_model(const ModelState& m) {
  std::ostringstream hdr;
  hdr.precision(17);
  hdr << "BNET1 depth=" << m.config.depth << " base_channels=" << m.config.base_channels
      << " dropout=" << m.config.dropout_rate << " classes=" << m.config.num_classes
      << " tile=" << m.config.tile_size << " seed=" << m.seed << " val_loss=" << m.val_loss_best
      << " params=" << m.params.size() << "\n";
  std::string out = hdr.str();
  out.reserve(out.size() + 4 * m.params.size());
  for (double v : m.params) detail::append_f32(out, static_cast<float>(v));
  return out;
}

ModelState decode_model(std::string_view bytes) {
  const auto body = detail::header_end(bytes, "BNET1 ");
  std::istringstream hdr(std::string(bytes.substr(6, body - 7)));
  ModelState m;
  std::size_t count = 0;
  int seen = 0;
  std::string field;
  while (hdr >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos) throw FormatError("BNET1: malformed header field '" + field + "'");
    const auto key = field.substr(0, eq);
    const auto val = field.substr(eq + 1);
    try {
      if (key == "depth") m.config.depth = std::stoi(val);
      else if (key == "base_channels") m.config.base_channels = std::stoi(val);
      else if (key == "dropout") m.config.dropout_rate = std::stod(val);
      else if (key == "classes") m.config.num_classes = std::stoi(val);
      else if (key == "tile") m.config.tile_size = std::stoi(val);
      else if (key == "seed") m.seed = std::stoull(val);
      else if (key == "val_loss") m.val_loss_best = std::stod(val);
      else if (key == "params") count = std::stoull(val);
      else throw FormatError("BNET1: unknown header field '" + key + "'");
    } catch (const std::logic_error&) {
      throw FormatError("BNET1: bad value for '" + key + "'");
    }
    ++seen;
  }
  if (seen != 8) throw FormatError("BNET1: incomplete header");
  try {
    m.config.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("BNET1: ") + e.what());
  }
  if (count != UNet(m.config).num_params()) throw FormatError("BNET1: parameter count does not match config");
  if (bytes.size() != body + 4 * count) throw FormatError("BNET1: body size mismatch");
  m.params.resize(count);
  for (std::size_t i = 0; i < count; ++i) m.params[i] = detail::read_f32(bytes.data() + body + 4 * i);
  return m;
}

void save_model(const std::filesystem::path& path, const ModelState& model) {
  write_file_atomic(path, encode_model(model));
}

ModelState load_model(const std::filesystem::path& path) { return decode_model(read_file(path)); }

PixelProbs mc_sample(const ModelState& model, const UNet& net, std::span<const double> sub_image,
                     std::uint64_t sample_seed) {
  Rng rng(sample_seed);
  return net.forward(model.params, sub_image, &rng);
}

PixelProbs mc_predict(const ModelState& model, std::span<const double> sub_image, int samples, std::uint64_t seed,
                      bool stochastic) {
  if (samples < 1) throw std::invalid_argument("mc_predict: sample count must be >= 1");
  const UNet net(model.config);
  if (!stochastic) return net.forward(model.params, sub_image, nullptr);
  PixelProbs mean = mc_sample(model, net, sub_image, mc_sample_seed(seed, 0));
  for (int t = 1; t < samples; ++t) mean += mc_sample(model, net, sub_image, mc_sample_seed(seed, t));
  mean /= static_cast<double>(samples);
  return mean;
}

}  // namespace bayesseg
