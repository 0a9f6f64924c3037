#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cvos/image.hpp"

namespace cvos {

// Channel-major feature maps (c, y, x), 64-bit floats.
struct Tensor3 {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(int c, int h, int w) : channels(c), height(h), width(w) {
    v.assign(static_cast<std::size_t>(c) * h * w, 0.0);
  }

  double& at(int c, int y, int x) {
    return v[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  double at(int c, int y, int x) const {
    return v[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  bool empty() const { return v.empty(); }

  bool operator==(const Tensor3&) const = default;
};

// Encoder: conv3x3(1->C) + ReLU + maxpool2x2, conv3x3(C->C) + ReLU +
// maxpool2x2, so features live at 1/4 resolution. ConvLSTM cell: one 3x3
// conv over the concatenation [features(C), prev_mask(1), hidden(Ch)]
// producing the four gates stacked in the order i, f, o, g. Decoder: 1x1
// conv Ch->1 to logits, nearest-neighbor x4 upsample, sigmoid.
struct ModelParams {
  int C = 8;   // encoder channels
  int Ch = 8;  // hidden channels

  std::vector<double> enc1_w;   // C x 1 x 3 x 3
  std::vector<double> enc1_b;   // C
  std::vector<double> enc2_w;   // C x C x 3 x 3
  std::vector<double> enc2_b;   // C
  std::vector<double> gates_w;  // (4*Ch) x (C+1+Ch) x 3 x 3
  std::vector<double> gates_b;  // 4*Ch
  std::vector<double> dec_w;    // 1 x Ch x 1 x 1
  std::vector<double> dec_b;    // 1
};

// Named views over the parameter tensors in declaration order (the
// checkpoint, Adam and gradient-check loops all iterate this).
struct TensorRef {
  const char* name;
  std::vector<double>* data;
  std::vector<int> shape;
};
struct ConstTensorRef {
  const char* name;
  const std::vector<double>* data;
  std::vector<int> shape;
};
std::vector<TensorRef> tensor_refs(ModelParams& params);
std::vector<ConstTensorRef> tensor_refs(const ModelParams& params);

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases 0 except
// the forget-gate bias at +1.
ModelParams init_params(int C, int Ch, std::uint64_t seed);
ModelParams zeros_like(const ModelParams& like);

// Per-object recurrent maps at 1/4 resolution; empty tensors mean the
// zero state at clip start.
struct RecurrentState {
  Tensor3 h;  // Ch x H/4 x W/4
  Tensor3 c;
};

// Frame must have height and width divisible by 4.
Tensor3 encode(const Image& frame, const ModelParams& params);

// 2x2 average pooling applied twice (the mask pathway into the cell).
Image downsample_quarter(const Image& full);

// One recurrent step: consumes features of the current frame and the
// previous mask at 1/4 resolution, advances the state, and returns the
// full-resolution mask probability map.
Image step(const Tensor3& features, const Image& prev_mask_quarter,
           RecurrentState& state, const ModelParams& params);

struct ClipData {
  std::vector<Image> frames;  // T >= 2 frames, intensities in [0,1]
  // targets[obj][t]: full-resolution 0/1 target for every frame of the
  // clip; targets[obj][0] is the given first-frame mask and must be
  // non-empty.
  std::vector<std::vector<Image>> targets;
};

struct ForwardResult {
  double loss = 0.0;
  // probs[obj][t-1]: predicted probability map for frame t, t = 1..T-1.
  std::vector<std::vector<Image>> probs;
};

// One-shot protocol over a clip: step t=1 always receives the given
// frame-0 mask; for t >= 2 the recurrent mask input is the GT mask of
// frame t-1 when use_gt[t] holds, else the model's own (detached)
// prediction. Loss is the mean binary cross-entropy over objects, steps
// t >= 1 and pixels. use_gt must have T entries; indices 0 and 1 are
// ignored.
ForwardResult forward_clip(const ClipData& clip,
                           const std::vector<bool>& use_gt,
                           const ModelParams& params);

// forward_clip plus exact BPTT gradients accumulated (+=) into *grads,
// which must be shaped like params (see zeros_like). No gradient flows
// through fed-back predictions.
ForwardResult backward_clip(const ClipData& clip,
                            const std::vector<bool>& use_gt,
                            const ModelParams& params, ModelParams* grads);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long long t = 0;
  ModelParams m;
  ModelParams v;
};
AdamState make_adam(const ModelParams& like);
// Throws std::runtime_error naming the offending tensor on non-finite
// gradients.
void adam_step(ModelParams& params, const ModelParams& grads,
               AdamState& state, double lr);

// Text header (magic, version, channel sizes, shape table), an END line,
// then raw little-endian doubles for each tensor in declaration order.
void save_checkpoint(const std::filesystem::path& path,
                     const ModelParams& params);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace cvos
