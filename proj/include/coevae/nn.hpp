#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coevae/problem.hpp"

namespace coevae {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { relu = 0, sigmoid = 1, identity = 2 };
enum class LossKind { l1, bce };

std::string_view to_string(Activation a);
Activation parse_activation(std::string_view s);
std::string_view to_string(LossKind k);
LossKind parse_loss(std::string_view s);

struct Layer {
  Matrix weights;  // out x in
  Vector biases;   // out
  Activation activation = Activation::identity;

  std::size_t in_dim() const { return static_cast<std::size_t>(weights.cols()); }
  std::size_t out_dim() const { return static_cast<std::size_t>(weights.rows()); }
  std::size_t parameter_count() const { return out_dim() * in_dim() + out_dim(); }
};

using LayerStack = std::vector<Layer>;

struct AutoencoderModel {
  LayerStack encoder;
  LayerStack decoder;
  double learning_rate = 1e-5;

  std::size_t input_dim() const { return encoder.front().in_dim(); }
  std::size_t latent_dim() const { return encoder.back().out_dim(); }
  std::size_t layer_count() const { return encoder.size() + decoder.size(); }
  // Encoder layers first, then decoder layers.
  const Layer& layer(std::size_t i) const;
  Layer& layer(std::size_t i);
  bool is_encoder_layer(std::size_t i) const { return i < encoder.size(); }
};

// Layer sizes from input to latent; the decoder mirrors them back to the
// input dimension. Hidden and latent layers use hidden_activation, the
// reconstruction layer uses output_activation.
struct Architecture {
  std::size_t input_dim = 128;
  std::vector<std::size_t> hidden;  // encoder-side hidden widths, input -> latent order
  std::size_t latent_dim = 12;
  Activation hidden_activation = Activation::relu;
  Activation output_activation = Activation::sigmoid;

  std::size_t parameter_count() const;
};

AutoencoderModel init_model(const Architecture& arch, double learning_rate, std::uint64_t seed);

// Validates encoder/decoder chaining and finite parameters.
void check_model(const AutoencoderModel& model);

// Post-activation values of every traversed layer, encoder first.
struct ActivationTrace {
  std::vector<Matrix> layers;
};

struct ForwardResult {
  Matrix reconstruction;
  std::optional<ActivationTrace> trace;
};

ForwardResult forward(const AutoencoderModel& model, const Matrix& batch, bool trace = false);
Matrix encode(const LayerStack& encoder, const Matrix& batch);
Matrix decode(const LayerStack& decoder, const Matrix& latent);

inline constexpr double kBceEpsilon = 1e-7;

double l1_loss(const Matrix& x, const Matrix& reconstruction);
double bce_loss(const Matrix& x, const Matrix& reconstruction);
double loss(LossKind kind, const Matrix& x, const Matrix& reconstruction);

struct LayerGradient {
  Matrix weights;
  Vector biases;
};

struct Gradients {
  std::vector<LayerGradient> encoder;
  std::vector<LayerGradient> decoder;
};

struct BackwardResult {
  Gradients gradients;
  double loss = 0.0;
};

// Gradient of the mean loss over all batch elements. Subgradients of |.| and
// ReLU at 0 are taken as 0.
BackwardResult backward(const AutoencoderModel& model, const Matrix& batch, LossKind kind);

// theta <- theta - learning_rate * grad for every encoder and decoder parameter.
void sgd_step(AutoencoderModel& model, const Gradients& gradients);

struct NonzeroCount {
  std::size_t encoder_weights = 0;
  std::size_t encoder_biases = 0;
  std::size_t decoder_weights = 0;
  std::size_t decoder_biases = 0;
  std::size_t encoder_weight_total = 0;
  std::size_t encoder_bias_total = 0;
  std::size_t decoder_weight_total = 0;
  std::size_t decoder_bias_total = 0;

  std::size_t encoder_nonzero() const { return encoder_weights + encoder_biases; }
  std::size_t decoder_nonzero() const { return decoder_weights + decoder_biases; }
  std::size_t nonzero() const { return encoder_nonzero() + decoder_nonzero(); }
  std::size_t weight_nonzero() const { return encoder_weights + decoder_weights; }
  std::size_t weight_total() const { return encoder_weight_total + decoder_weight_total; }
  std::size_t total() const {
    return weight_total() + encoder_bias_total + decoder_bias_total;
  }
};

NonzeroCount nonzero_count(const AutoencoderModel& model);

// Dense float view of 0/1 samples at the network boundary.
Matrix to_matrix(const BitMatrix& bits);
Matrix select_rows(const Matrix& data, const std::vector<std::size_t>& rows);

}  // namespace coevae
