// SPDX-License-Identifier: Apache-2.0
#include "beamcast/gan_models.hpp"

#include <algorithm>
#include <bit>

namespace beamcast {

GanWidths GanWidths::scaled(double factor) const {
  if (!(factor > 0.0)) throw ConfigError("width scale must be positive");
  auto s = [factor](std::size_t w) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(factor * double(w))));
  };
  GanWidths out = *this;
  for (auto* v : {&out.resize, &out.encoders, &out.decoders, &out.disc_encoders})
    for (auto& w : *v) w = s(w);
  out.disc_first = s(disc_first);
  return out;
}

std::size_t GanShape::factor() const {
  if (n_low == 0 || n_high % n_low != 0)
    throw ConfigError("n_low (" + std::to_string(n_low) + ") must divide n_high (" +
                      std::to_string(n_high) + ")");
  return n_high / n_low;
}

void GanShape::validate() const {
  const std::size_t f = factor();
  if (n_users == 0) throw ConfigError("n_users must be positive");
  if (kernel == 0 || kernel % 2 == 0) throw ConfigError("kernel size must be odd");
  if (widths.resize.size() != 3) throw ConfigError("resize layer needs exactly 3 widths");
  if (widths.encoders.size() != 5) throw ConfigError("encoder group needs exactly 5 widths");
  if (widths.decoders.size() != 4) throw ConfigError("decoder group needs exactly 4 widths");
  if (widths.disc_encoders.size() != 4)
    throw ConfigError("critic needs exactly 4 encoder widths");
  if (!std::has_single_bit(f) || std::countr_zero(f) > static_cast<int>(widths.decoders.size()))
    throw ConfigError("upsampling factor " + std::to_string(f) +
                      " is not reachable with decoder strides in {1, 2}");
}

GenArch make_generator_arch(const GanShape& shape) {
  shape.validate();
  const auto& w = shape.widths;
  GenArch a;
  a.shape = shape;
  std::size_t c = 6;
  auto push = [&c](std::vector<BlockSpec>& group, std::string name, BlockKind kind,
                   std::size_t in, std::size_t width, std::size_t sh) {
    group.push_back({std::move(name), kind, in, width, sh, 1, true, true});
    c = width;
  };
  push(a.resize, "gen/resize0", BlockKind::kDecoder, c, w.resize[0], 1);
  push(a.resize, "gen/resize1", BlockKind::kDecoder, c, w.resize[1], 1);
  push(a.resize, "gen/resize2", BlockKind::kEncoder, c, w.resize[2], 1);
  for (std::size_t i = 0; i < w.encoders.size(); ++i)
    push(a.encoders, "gen/enc" + std::to_string(i), BlockKind::kEncoder, c, w.encoders[i], 1);

  const std::size_t doublings = static_cast<std::size_t>(std::countr_zero(shape.factor()));
  std::size_t repeat = 1;
  for (std::size_t j = 0; j < w.decoders.size(); ++j) {
    // Decoder j pairs with encoder (3 - j): deepest unused tap first.
    const std::size_t src = a.encoders.size() - 2 - j;
    a.skip_source.push_back(src);
    a.skip_repeat.push_back(repeat);
    const std::size_t sh = j < doublings ? 2 : 1;
    push(a.decoders, "gen/dec" + std::to_string(j), BlockKind::kDecoder,
         c + a.encoders[src].width, w.decoders[j], sh);
    repeat *= sh;
  }
  a.final_conv = {"gen/out", BlockKind::kConv, c, 2, 1, 1, false, false};
  return a;
}

DiscArch make_discriminator_arch(const GanShape& shape) {
  shape.validate();
  DiscArch a;
  a.shape = shape;
  const auto& w = shape.widths;
  a.blocks.push_back({"disc/in", BlockKind::kConv, 4, w.disc_first, 1, 1, false, true});
  std::size_t c = w.disc_first;
  std::size_t rows = shape.n_high;
  for (std::size_t i = 0; i < w.disc_encoders.size(); ++i) {
    const std::size_t sh = rows > 1 ? 2 : 1;
    rows = (rows + sh - 1) / sh;
    a.blocks.push_back(
        {"disc/enc" + std::to_string(i), BlockKind::kEncoder, c, w.disc_encoders[i], sh, 1, true, true});
    c = w.disc_encoders[i];
  }
  a.blocks.push_back({"disc/out", BlockKind::kConv, c, 1, 1, 1, false, false});
  return a;
}

std::size_t parameter_count(const std::vector<BlockSpec>& blocks, std::size_t kernel) {
  std::size_t n = 0;
  for (const auto& b : blocks)
    n += kernel * kernel * b.in_channels * b.width + b.width + (b.norm ? 2 * b.width : 0);
  return n;
}

std::size_t parameter_count(const GenArch& arch) {
  std::vector<BlockSpec> all = arch.resize;
  all.insert(all.end(), arch.encoders.begin(), arch.encoders.end());
  all.insert(all.end(), arch.decoders.begin(), arch.decoders.end());
  all.push_back(arch.final_conv);
  return parameter_count(all, arch.shape.kernel);
}

std::size_t parameter_count(const DiscArch& arch) {
  return parameter_count(arch.blocks, arch.shape.kernel);
}

}  // namespace beamcast
