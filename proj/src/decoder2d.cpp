#include "tap/decoder2d.hpp"

namespace tap {

DecoderConfig DecoderConfig::paper_preset() {
  DecoderConfig cfg;
  cfg.stages = {{256, 128, 5, 4, 1, 1},
                {128, 64, 3, 2, 1, 1},
                {64, 32, 3, 2, 1, 1},
                {32, 3, 3, 2, 1, 1}};
  return cfg;
}

DecoderConfig DecoderConfig::desk_preset() {
  DecoderConfig cfg;
  cfg.stages = {{128, 64, 3, 2, 1, 1}, {64, 32, 3, 2, 1, 1}, {32, 3, 3, 2, 1, 1}};
  return cfg;
}

void DecoderConfig::validate() const {
  if (stages.empty()) throw ConfigError("decoder config: no stages");
  for (std::size_t i = 0; i + 1 < stages.size(); ++i)
    if (stages[i].c_out != stages[i + 1].c_in)
      throw ConfigError("decoder config: stage " + std::to_string(i) + " outputs " +
                        std::to_string(stages[i].c_out) + " channels but stage " +
                        std::to_string(i + 1) + " expects " + std::to_string(stages[i + 1].c_in));
  if (stages.back().c_out != 3)
    throw ConfigError("decoder config: final stage must output 3 channels");
}

Index DecoderConfig::output_extent(Index input_extent) const {
  Index e = input_extent;
  for (const DecoderStage& s : stages)
    e = (e - 1) * s.stride - 2 * s.pad + s.kernel + s.out_pad;
  return e;
}

template <typename T>
void register_decoder_params(ParamSet<T>& params, const DecoderConfig& cfg) {
  cfg.validate();
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const DecoderStage& s = cfg.stages[i];
    const std::string base = "decoder.stage" + std::to_string(i);
    params.add(base + ".kernel", Tensor<T>::zeros(Shape{s.kernel, s.kernel, s.c_in, s.c_out}));
    params.add(base + ".bias", Tensor<T>::zeros(Shape{1, s.c_out}));
  }
}

template <typename T>
Tensor<T> decode(const Tensor<T>& fmap, ParamSet<T>& params, const DecoderConfig& cfg) {
  cfg.validate();
  if (fmap.shape().rank() != 3)
    throw ConfigError("decode: feature map must be rank 3, got " + fmap.shape().str());
  if (fmap.shape()[2] != cfg.stages.front().c_in)
    throw ConfigError("decode: feature map has " + std::to_string(fmap.shape()[2]) +
                      " channels, first stage expects " + std::to_string(cfg.stages.front().c_in));

  Tensor<T> x = fmap;
  for (std::size_t i = 0; i < cfg.stages.size(); ++i) {
    const DecoderStage& s = cfg.stages[i];
    const std::string base = "decoder.stage" + std::to_string(i);
    x = tconv2d(x, params.at(base + ".kernel"), s.stride, s.pad, s.out_pad);
    const Index oh = x.shape()[0], ow = x.shape()[1];
    Tensor<T> flat = add_row_bias(reshape(x, Shape{oh * ow, s.c_out}), params.at(base + ".bias"));
    if (i + 1 < cfg.stages.size()) flat = relu(flat);
    x = reshape(flat, Shape{oh, ow, s.c_out});
  }
  return x;
}

template void register_decoder_params(ParamSet<float>&, const DecoderConfig&);
template void register_decoder_params(ParamSet<double>&, const DecoderConfig&);
template Tensor<float> decode(const Tensor<float>&, ParamSet<float>&, const DecoderConfig&);
template Tensor<double> decode(const Tensor<double>&, ParamSet<double>&, const DecoderConfig&);

}  // namespace tap
