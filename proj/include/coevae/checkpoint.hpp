#pragma once

#include <iosfwd>
#include <string>

#include "coevae/nn.hpp"

namespace coevae {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout, all integers and floats little-endian:
//   "COEVAECK" magic, u32 version, f64 learning_rate,
//   u32 encoder layers, u32 decoder layers,
//   per layer: u32 in, u32 out, u8 activation,
//   then per layer: weights (row-major, out*in f64) followed by biases (out f64).
void write_checkpoint(std::ostream& out, const AutoencoderModel& model);
AutoencoderModel read_checkpoint(std::istream& in);

void save_checkpoint(const std::string& path, const AutoencoderModel& model);
AutoencoderModel load_checkpoint(const std::string& path);

}  // namespace coevae
