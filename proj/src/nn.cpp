#include "coevae/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "coevae/rng.hpp"

namespace coevae {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::identity: return "identity";
  }
  return "?";
}

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

std::string_view to_string(LossKind k) { return k == LossKind::l1 ? "l1" : "bce"; }

LossKind parse_loss(std::string_view s) {
  if (s == "l1") return LossKind::l1;
  if (s == "bce") return LossKind::bce;
  throw std::invalid_argument("unknown loss '" + std::string(s) + "'");
}

const Layer& AutoencoderModel::layer(std::size_t i) const {
  return i < encoder.size() ? encoder[i] : decoder.at(i - encoder.size());
}

Layer& AutoencoderModel::layer(std::size_t i) {
  return i < encoder.size() ? encoder[i] : decoder.at(i - encoder.size());
}

std::size_t Architecture::parameter_count() const {
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(latent_dim);
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    // Encoder layer and its mirrored decoder layer.
    count += widths[i + 1] * widths[i] + widths[i + 1];
    count += widths[i] * widths[i + 1] + widths[i];
  }
  return count;
}

namespace {

Layer make_layer(std::size_t in, std::size_t out, Activation act, Rng& rng) {
  Layer l;
  l.weights.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
  l.biases = Vector::Zero(static_cast<Eigen::Index>(out));
  l.activation = act;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (Eigen::Index r = 0; r < l.weights.rows(); ++r) {
    for (Eigen::Index c = 0; c < l.weights.cols(); ++c) {
      l.weights(r, c) = (2.0 * uniform01(rng) - 1.0) * bound;
    }
  }
  return l;
}

void apply_activation(Matrix& m, Activation a) {
  switch (a) {
    case Activation::relu: m = m.cwiseMax(0.0); break;
    case Activation::sigmoid: m = (1.0 + (-m.array()).exp()).inverse().matrix(); break;
    case Activation::identity: break;
  }
}

Matrix layer_forward(const Layer& l, const Matrix& input) {
  Matrix out = input * l.weights.transpose();
  out.rowwise() += l.biases.transpose();
  apply_activation(out, l.activation);
  return out;
}

void check_batch(const AutoencoderModel& model, const Matrix& batch) {
  if (static_cast<std::size_t>(batch.cols()) != model.input_dim()) {
    throw std::invalid_argument("batch width " + std::to_string(batch.cols()) +
                                " does not match model input " +
                                std::to_string(model.input_dim()));
  }
}

void check_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("loss: shape mismatch");
  }
  if (a.size() == 0) throw std::invalid_argument("loss: empty input");
}

}  // namespace

AutoencoderModel init_model(const Architecture& arch, double learning_rate, std::uint64_t seed) {
  if (arch.input_dim == 0 || arch.latent_dim == 0) {
    throw std::invalid_argument("architecture dimensions must be >= 1");
  }
  for (auto h : arch.hidden) {
    if (h == 0) throw std::invalid_argument("hidden layer width must be >= 1");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  std::vector<std::size_t> widths{arch.input_dim};
  widths.insert(widths.end(), arch.hidden.begin(), arch.hidden.end());
  widths.push_back(arch.latent_dim);

  Rng rng(seed);
  AutoencoderModel m;
  m.learning_rate = learning_rate;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    m.encoder.push_back(make_layer(widths[i], widths[i + 1], arch.hidden_activation, rng));
  }
  for (std::size_t i = widths.size() - 1; i > 0; --i) {
    const Activation act = (i == 1) ? arch.output_activation : arch.hidden_activation;
    m.decoder.push_back(make_layer(widths[i], widths[i - 1], act, rng));
  }
  return m;
}

void check_model(const AutoencoderModel& model) {
  if (model.encoder.empty() || model.decoder.empty()) {
    throw std::invalid_argument("model needs at least one encoder and one decoder layer");
  }
  if (!(model.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  std::size_t width = model.input_dim();
  for (std::size_t i = 0; i < model.layer_count(); ++i) {
    const Layer& l = model.layer(i);
    if (l.in_dim() != width || l.in_dim() == 0 || l.out_dim() == 0 ||
        static_cast<std::size_t>(l.biases.size()) != l.out_dim()) {
      throw std::invalid_argument("layer " + std::to_string(i) + " has inconsistent dimensions");
    }
    if (!l.weights.allFinite() || !l.biases.allFinite()) {
      throw std::invalid_argument("layer " + std::to_string(i) + " has non-finite parameters");
    }
    width = l.out_dim();
  }
  if (width != model.input_dim()) {
    throw std::invalid_argument("decoder output does not match encoder input");
  }
}

Matrix encode(const LayerStack& encoder, const Matrix& batch) {
  Matrix h = batch;
  for (const auto& l : encoder) h = layer_forward(l, h);
  return h;
}

Matrix decode(const LayerStack& decoder, const Matrix& latent) {
  Matrix h = latent;
  for (const auto& l : decoder) h = layer_forward(l, h);
  return h;
}

ForwardResult forward(const AutoencoderModel& model, const Matrix& batch, bool trace) {
  check_batch(model, batch);
  ForwardResult r;
  if (trace) r.trace.emplace();
  Matrix h = batch;
  for (std::size_t i = 0; i < model.layer_count(); ++i) {
    h = layer_forward(model.layer(i), h);
    if (trace) r.trace->layers.push_back(h);
  }
  r.reconstruction = std::move(h);
  return r;
}

double l1_loss(const Matrix& x, const Matrix& reconstruction) {
  check_same_shape(x, reconstruction);
  return (x - reconstruction).cwiseAbs().mean();
}

double bce_loss(const Matrix& x, const Matrix& reconstruction) {
  check_same_shape(x, reconstruction);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double p = std::clamp(reconstruction.data()[i], kBceEpsilon, 1.0 - kBceEpsilon);
    const double t = x.data()[i];
    sum -= t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return sum / static_cast<double>(x.size());
}

double loss(LossKind kind, const Matrix& x, const Matrix& reconstruction) {
  return kind == LossKind::l1 ? l1_loss(x, reconstruction) : bce_loss(x, reconstruction);
}

BackwardResult backward(const AutoencoderModel& model, const Matrix& batch, LossKind kind) {
  check_batch(model, batch);
  const std::size_t depth = model.layer_count();
  // activations[0] is the input; activations[i + 1] is layer i's output.
  std::vector<Matrix> activations;
  std::vector<Matrix> pre;
  activations.reserve(depth + 1);
  pre.reserve(depth);
  activations.push_back(batch);
  for (std::size_t i = 0; i < depth; ++i) {
    const Layer& l = model.layer(i);
    Matrix z = activations.back() * l.weights.transpose();
    z.rowwise() += l.biases.transpose();
    Matrix a = z;
    apply_activation(a, l.activation);
    pre.push_back(std::move(z));
    activations.push_back(std::move(a));
  }

  const Matrix& out = activations.back();
  const double scale = 1.0 / static_cast<double>(out.size());
  Matrix grad_out(out.rows(), out.cols());
  BackwardResult result;
  if (kind == LossKind::l1) {
    result.loss = l1_loss(batch, out);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      const double d = out.data()[i] - batch.data()[i];
      grad_out.data()[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
    }
  } else {
    result.loss = bce_loss(batch, out);
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      const double p = out.data()[i];
      const double t = batch.data()[i];
      if (p < kBceEpsilon || p > 1.0 - kBceEpsilon) {
        grad_out.data()[i] = 0.0;
      } else {
        grad_out.data()[i] = scale * (-t / p + (1.0 - t) / (1.0 - p));
      }
    }
  }

  std::vector<LayerGradient> grads(depth);
  Matrix delta = std::move(grad_out);
  for (std::size_t li = depth; li-- > 0;) {
    const Layer& l = model.layer(li);
    const Matrix& a = activations[li + 1];
    switch (l.activation) {
      case Activation::relu:
        delta = delta.cwiseProduct((pre[li].array() > 0.0).cast<double>().matrix());
        break;
      case Activation::sigmoid:
        delta = delta.cwiseProduct(a.cwiseProduct((1.0 - a.array()).matrix()));
        break;
      case Activation::identity: break;
    }
    grads[li].weights = delta.transpose() * activations[li];
    grads[li].biases = delta.colwise().sum().transpose();
    if (li > 0) delta = delta * l.weights;
  }
  const auto enc = static_cast<std::ptrdiff_t>(model.encoder.size());
  result.gradients.encoder.assign(std::make_move_iterator(grads.begin()),
                                  std::make_move_iterator(grads.begin() + enc));
  result.gradients.decoder.assign(std::make_move_iterator(grads.begin() + enc),
                                  std::make_move_iterator(grads.end()));
  return result;
}

namespace {

void apply_update(LayerStack& layers, const std::vector<LayerGradient>& grads, double lr) {
  if (layers.size() != grads.size()) throw std::invalid_argument("sgd_step: layer count mismatch");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].weights.rows() != grads[i].weights.rows() ||
        layers[i].weights.cols() != grads[i].weights.cols() ||
        layers[i].biases.size() != grads[i].biases.size()) {
      throw std::invalid_argument("sgd_step: gradient shape mismatch");
    }
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].weights -= lr * grads[i].weights;
    layers[i].biases -= lr * grads[i].biases;
  }
}

}  // namespace

void sgd_step(AutoencoderModel& model, const Gradients& gradients) {
  apply_update(model.encoder, gradients.encoder, model.learning_rate);
  apply_update(model.decoder, gradients.decoder, model.learning_rate);
}

NonzeroCount nonzero_count(const AutoencoderModel& model) {
  NonzeroCount c;
  for (const auto& l : model.encoder) {
    c.encoder_weights += static_cast<std::size_t>((l.weights.array() != 0.0).count());
    c.encoder_biases += static_cast<std::size_t>((l.biases.array() != 0.0).count());
    c.encoder_weight_total += static_cast<std::size_t>(l.weights.size());
    c.encoder_bias_total += static_cast<std::size_t>(l.biases.size());
  }
  for (const auto& l : model.decoder) {
    c.decoder_weights += static_cast<std::size_t>((l.weights.array() != 0.0).count());
    c.decoder_biases += static_cast<std::size_t>((l.biases.array() != 0.0).count());
    c.decoder_weight_total += static_cast<std::size_t>(l.weights.size());
    c.decoder_bias_total += static_cast<std::size_t>(l.biases.size());
  }
  return c;
}

Matrix to_matrix(const BitMatrix& bits) {
  Matrix m(static_cast<Eigen::Index>(bits.rows), static_cast<Eigen::Index>(bits.cols));
  for (std::size_t i = 0; i < bits.bits.size(); ++i) m.data()[i] = bits.bits[i];
  return m;
}

Matrix select_rows(const Matrix& data, const std::vector<std::size_t>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), data.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = data.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace coevae
