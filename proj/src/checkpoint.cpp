#include "coevae/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace coevae {

namespace {

constexpr std::array<char, 8> kMagic{'C', 'O', 'E', 'V', 'A', 'E', 'C', 'K'};

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> buf{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(buf.data(), buf.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> buf{};
  in.read(reinterpret_cast<char*>(buf.data()), buf.size());
  if (!in) throw std::runtime_error("checkpoint: truncated input");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(buf[i]) << (8 * i);
  return value;
}

void put_f64(std::ostream& out, double v) { put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v)); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

}  // namespace

void write_checkpoint(std::ostream& out, const AutoencoderModel& model) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_f64(out, model.learning_rate);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.encoder.size()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(model.decoder.size()));
  for (std::size_t i = 0; i < model.layer_count(); ++i) {
    const Layer& l = model.layer(i);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.in_dim()));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(l.out_dim()));
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(l.activation));
  }
  for (std::size_t i = 0; i < model.layer_count(); ++i) {
    const Layer& l = model.layer(i);
    for (Eigen::Index k = 0; k < l.weights.size(); ++k) put_f64(out, l.weights.data()[k]);
    for (Eigen::Index k = 0; k < l.biases.size(); ++k) put_f64(out, l.biases[k]);
  }
}

AutoencoderModel read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("checkpoint: bad magic");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  AutoencoderModel m;
  m.learning_rate = get_f64(in);
  const auto n_enc = get_le<std::uint32_t>(in);
  const auto n_dec = get_le<std::uint32_t>(in);
  if (n_enc == 0 || n_dec == 0) throw std::runtime_error("checkpoint: empty encoder or decoder");
  for (std::uint32_t i = 0; i < n_enc + n_dec; ++i) {
    const auto in_dim = get_le<std::uint32_t>(in);
    const auto out_dim = get_le<std::uint32_t>(in);
    const auto act = get_le<std::uint8_t>(in);
    if (act > static_cast<std::uint8_t>(Activation::identity)) {
      throw std::runtime_error("checkpoint: unknown activation code");
    }
    Layer l;
    l.weights.resize(out_dim, in_dim);
    l.biases.resize(out_dim);
    l.activation = static_cast<Activation>(act);
    (i < n_enc ? m.encoder : m.decoder).push_back(std::move(l));
  }
  for (std::size_t i = 0; i < m.layer_count(); ++i) {
    Layer& l = m.layer(i);
    for (Eigen::Index k = 0; k < l.weights.size(); ++k) l.weights.data()[k] = get_f64(in);
    for (Eigen::Index k = 0; k < l.biases.size(); ++k) l.biases[k] = get_f64(in);
  }
  try {
    check_model(m);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("checkpoint: ") + e.what());
  }
  return m;
}

void save_checkpoint(const std::string& path, const AutoencoderModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_checkpoint(out, model);
}

AutoencoderModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_checkpoint(in);
}

}  // namespace coevae
