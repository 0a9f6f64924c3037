#include "cvos/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cvos/errors.hpp"
#include "cvos/rng.hpp"

namespace cvos {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Weight layout: w[((oc*in_c + ic)*3 + ky)*3 + kx], offsets ky,kx in
// {0,1,2} meaning {-1,0,+1}; zero padding.
void conv3x3_forward(const Tensor3& in, const std::vector<double>& w,
                     const std::vector<double>& b, int out_c, Tensor3& out) {
  const int ic_n = in.channels, h = in.height, wd = in.width;
  out = Tensor3(out_c, h, wd);
  for (int oc = 0; oc < out_c; ++oc) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < wd; ++x) {
        double acc = b[oc];
        for (int ic = 0; ic < ic_n; ++ic) {
          for (int ky = 0; ky < 3; ++ky) {
            const int yy = y + ky - 1;
            if (yy < 0 || yy >= h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int xx = x + kx - 1;
              if (xx < 0 || xx >= wd) continue;
              acc += w[((static_cast<std::size_t>(oc) * ic_n + ic) * 3 + ky) *
                           3 +
                       kx] *
                     in.at(ic, yy, xx);
            }
          }
        }
        out.at(oc, y, x) = acc;
      }
    }
  }
}

void conv3x3_backward(const Tensor3& in, const std::vector<double>& w,
                      int out_c, const Tensor3& d_out, Tensor3* d_in,
                      std::vector<double>* d_w, std::vector<double>* d_b) {
  const int ic_n = in.channels, h = in.height, wd = in.width;
  if (d_in) *d_in = Tensor3(ic_n, h, wd);
  for (int oc = 0; oc < out_c; ++oc) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < wd; ++x) {
        const double g = d_out.at(oc, y, x);
        if (d_b) (*d_b)[oc] += g;
        for (int ic = 0; ic < ic_n; ++ic) {
          for (int ky = 0; ky < 3; ++ky) {
            const int yy = y + ky - 1;
            if (yy < 0 || yy >= h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              const int xx = x + kx - 1;
              if (xx < 0 || xx >= wd) continue;
              const std::size_t wi =
                  ((static_cast<std::size_t>(oc) * ic_n + ic) * 3 + ky) * 3 +
                  kx;
              if (d_w) (*d_w)[wi] += g * in.at(ic, yy, xx);
              if (d_in) d_in->at(ic, yy, xx) += g * w[wi];
            }
          }
        }
      }
    }
  }
}

Tensor3 relu(const Tensor3& a) {
  Tensor3 out = a;
  for (double& v : out.v) v = v > 0.0 ? v : 0.0;
  return out;
}

// argmax holds, per output element, the flat index of the winning input.
Tensor3 maxpool2x2(const Tensor3& in, std::vector<std::size_t>* argmax) {
  const int h2 = in.height / 2, w2 = in.width / 2;
  Tensor3 out(in.channels, h2, w2);
  argmax->assign(out.v.size(), 0);
  for (int c = 0; c < in.channels; ++c) {
    for (int y = 0; y < h2; ++y) {
      for (int x = 0; x < w2; ++x) {
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_index = 0;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const std::size_t index =
                (static_cast<std::size_t>(c) * in.height + 2 * y + dy) *
                    in.width +
                2 * x + dx;
            if (in.v[index] > best) {
              best = in.v[index];
              best_index = index;
            }
          }
        }
        const std::size_t oi =
            (static_cast<std::size_t>(c) * h2 + y) * w2 + x;
        out.v[oi] = best;
        (*argmax)[oi] = best_index;
      }
    }
  }
  return out;
}

struct EncCache {
  Tensor3 in0, a1, p1, a2, p2;
  std::vector<std::size_t> arg1, arg2;
};

void check_frame_shape(const Image& frame) {
  if (frame.height <= 0 || frame.width <= 0 || frame.height % 4 != 0 ||
      frame.width % 4 != 0)
    throw std::invalid_argument(
        "model: frame size must be positive and divisible by 4, got " +
        std::to_string(frame.height) + "x" + std::to_string(frame.width));
}

void encode_cached(const Image& frame, const ModelParams& p, EncCache& cache) {
  check_frame_shape(frame);
  cache.in0 = Tensor3(1, frame.height, frame.width);
  cache.in0.v = frame.pixels;
  conv3x3_forward(cache.in0, p.enc1_w, p.enc1_b, p.C, cache.a1);
  cache.p1 = maxpool2x2(relu(cache.a1), &cache.arg1);
  conv3x3_forward(cache.p1, p.enc2_w, p.enc2_b, p.C, cache.a2);
  cache.p2 = maxpool2x2(relu(cache.a2), &cache.arg2);
}

void encode_backward(const EncCache& cache, const ModelParams& p,
                     const Tensor3& d_features, ModelParams* grads) {
  // pool2
  Tensor3 d_r2(p.C, cache.a2.height, cache.a2.width);
  for (std::size_t i = 0; i < d_features.v.size(); ++i)
    d_r2.v[cache.arg2[i]] += d_features.v[i];
  // relu2
  for (std::size_t i = 0; i < d_r2.v.size(); ++i)
    if (cache.a2.v[i] <= 0.0) d_r2.v[i] = 0.0;
  // conv2
  Tensor3 d_p1;
  conv3x3_backward(cache.p1, p.enc2_w, p.C, d_r2, &d_p1, &grads->enc2_w,
                   &grads->enc2_b);
  // pool1
  Tensor3 d_r1(p.C, cache.a1.height, cache.a1.width);
  for (std::size_t i = 0; i < d_p1.v.size(); ++i)
    d_r1.v[cache.arg1[i]] += d_p1.v[i];
  // relu1
  for (std::size_t i = 0; i < d_r1.v.size(); ++i)
    if (cache.a1.v[i] <= 0.0) d_r1.v[i] = 0.0;
  // conv1 (no gradient needed for the input frame)
  conv3x3_backward(cache.in0, p.enc1_w, p.C, d_r1, nullptr, &grads->enc1_w,
                   &grads->enc1_b);
}

struct StepCache {
  Tensor3 x;                  // (C+1+Ch) x h x w
  Tensor3 gi, gf, go, gg;     // activated gates, Ch x h x w
  Tensor3 c_prev, c, tc, hs;  // cell trajectories, Ch x h x w
  Image prob;                 // full resolution
};

void cell_forward(const Tensor3& features, const Image& mask_q,
                  const Tensor3& h_prev, const Tensor3& c_prev,
                  const ModelParams& p, StepCache& cache) {
  const int h = features.height, w = features.width;
  if (features.channels != p.C)
    throw std::invalid_argument("model: feature channels do not match C");
  if (mask_q.height != h || mask_q.width != w)
    throw std::invalid_argument(
        "model: mask input is not at feature resolution");
  const int N = p.C + 1 + p.Ch;

  cache.x = Tensor3(N, h, w);
  std::memcpy(cache.x.v.data(), features.v.data(),
              features.v.size() * sizeof(double));
  std::memcpy(cache.x.v.data() + features.v.size(), mask_q.pixels.data(),
              mask_q.pixels.size() * sizeof(double));
  if (!h_prev.empty()) {
    if (h_prev.channels != p.Ch || h_prev.height != h || h_prev.width != w)
      throw std::invalid_argument("model: hidden state shape mismatch");
    std::memcpy(cache.x.v.data() + (p.C + 1) * h * w, h_prev.v.data(),
                h_prev.v.size() * sizeof(double));
  }

  Tensor3 z;
  conv3x3_forward(cache.x, p.gates_w, p.gates_b, 4 * p.Ch, z);
  cache.gi = Tensor3(p.Ch, h, w);
  cache.gf = Tensor3(p.Ch, h, w);
  cache.go = Tensor3(p.Ch, h, w);
  cache.gg = Tensor3(p.Ch, h, w);
  const std::size_t plane = static_cast<std::size_t>(p.Ch) * h * w;
  for (std::size_t i = 0; i < plane; ++i) {
    cache.gi.v[i] = sigmoid(z.v[i]);
    cache.gf.v[i] = sigmoid(z.v[plane + i]);
    cache.go.v[i] = sigmoid(z.v[2 * plane + i]);
    cache.gg.v[i] = std::tanh(z.v[3 * plane + i]);
  }

  cache.c_prev = c_prev.empty() ? Tensor3(p.Ch, h, w) : c_prev;
  if (cache.c_prev.channels != p.Ch || cache.c_prev.height != h ||
      cache.c_prev.width != w)
    throw std::invalid_argument("model: cell state shape mismatch");
  cache.c = Tensor3(p.Ch, h, w);
  cache.tc = Tensor3(p.Ch, h, w);
  cache.hs = Tensor3(p.Ch, h, w);
  for (std::size_t i = 0; i < plane; ++i) {
    cache.c.v[i] = cache.gf.v[i] * cache.c_prev.v[i] +
                   cache.gi.v[i] * cache.gg.v[i];
    cache.tc.v[i] = std::tanh(cache.c.v[i]);
    cache.hs.v[i] = cache.go.v[i] * cache.tc.v[i];
  }

  cache.prob = Image(4 * h, 4 * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double logit = p.dec_b[0];
      for (int c = 0; c < p.Ch; ++c)
        logit += p.dec_w[c] * cache.hs.at(c, y, x);
      const double prob = sigmoid(logit);
      for (int dy = 0; dy < 4; ++dy)
        for (int dx = 0; dx < 4; ++dx)
          cache.prob.at(4 * y + dy, 4 * x + dx) = prob;
    }
  }
}

struct ClipCaches {
  std::vector<EncCache> enc;                  // frames 1..T-1
  std::vector<std::vector<StepCache>> steps;  // [obj][t-1]
};

double target_area(const Image& target) {
  double sum = 0.0;
  for (const double v : target.pixels) sum += v;
  return sum;
}

void validate_clip(const ClipData& clip, const std::vector<bool>& use_gt) {
  const std::size_t T = clip.frames.size();
  if (T < 2)
    throw std::invalid_argument("model: clips must have at least 2 frames");
  check_frame_shape(clip.frames[0]);
  const int H = clip.frames[0].height, W = clip.frames[0].width;
  for (const Image& frame : clip.frames)
    if (frame.height != H || frame.width != W)
      throw std::invalid_argument("model: clip frames differ in size");
  if (clip.targets.empty())
    throw std::invalid_argument("model: clip carries no objects");
  for (const auto& object : clip.targets) {
    if (object.size() != T)
      throw std::invalid_argument(
          "model: per-object targets must cover every frame");
    for (const Image& target : object)
      if (target.height != H || target.width != W)
        throw std::invalid_argument("model: target size mismatch");
    if (target_area(object[0]) <= 0.0)
      throw std::invalid_argument(
          "model: the first-frame mask of every object must be given");
  }
  if (use_gt.size() != T)
    throw std::invalid_argument("model: use_gt must have one entry per frame");
}

double run_forward(const ClipData& clip, const std::vector<bool>& use_gt,
                   const ModelParams& params, ClipCaches& caches,
                   ForwardResult& result) {
  validate_clip(clip, use_gt);
  const int T = static_cast<int>(clip.frames.size());
  const int nobj = static_cast<int>(clip.targets.size());
  const int H = clip.frames[0].height, W = clip.frames[0].width;
  const double scale =
      1.0 / (static_cast<double>(nobj) * (T - 1) * H * W);

  caches.enc.resize(T - 1);
  for (int t = 1; t < T; ++t)
    encode_cached(clip.frames[t], params, caches.enc[t - 1]);

  caches.steps.assign(nobj, {});
  result.probs.assign(nobj, {});
  result.loss = 0.0;
  for (int obj = 0; obj < nobj; ++obj) {
    caches.steps[obj].resize(T - 1);
    RecurrentState state;
    for (int t = 1; t < T; ++t) {
      const Image& mask_in = t == 1 ? clip.targets[obj][0]
                             : use_gt[t]
                                 ? clip.targets[obj][t - 1]
                                 : caches.steps[obj][t - 2].prob;
      StepCache& cache = caches.steps[obj][t - 1];
      cell_forward(caches.enc[t - 1].p2, downsample_quarter(mask_in), state.h,
                   state.c, params, cache);
      state.h = cache.hs;
      state.c = cache.c;
      result.probs[obj].push_back(cache.prob);
    }
  }

  // Loss in one deterministic sweep, from logits for numerical stability.
  double total = 0.0;
  for (int obj = 0; obj < nobj; ++obj) {
    for (int t = 1; t < T; ++t) {
      const StepCache& cache = caches.steps[obj][t - 1];
      const Image& y = clip.targets[obj][t];
      const int h = H / 4, w = W / 4;
      for (int qy = 0; qy < h; ++qy) {
        for (int qx = 0; qx < w; ++qx) {
          double logit = params.dec_b[0];
          for (int c = 0; c < params.Ch; ++c)
            logit += params.dec_w[c] * cache.hs.at(c, qy, qx);
          const double sp = softplus(logit);
          for (int dy = 0; dy < 4; ++dy)
            for (int dx = 0; dx < 4; ++dx)
              total += sp - logit * y.at(4 * qy + dy, 4 * qx + dx);
        }
      }
    }
  }
  result.loss = total * scale;
  return scale;
}

}  // namespace

std::vector<TensorRef> tensor_refs(ModelParams& p) {
  const int N = p.C + 1 + p.Ch;
  return {
      {"enc1_w", &p.enc1_w, {p.C, 1, 3, 3}},
      {"enc1_b", &p.enc1_b, {p.C}},
      {"enc2_w", &p.enc2_w, {p.C, p.C, 3, 3}},
      {"enc2_b", &p.enc2_b, {p.C}},
      {"gates_w", &p.gates_w, {4 * p.Ch, N, 3, 3}},
      {"gates_b", &p.gates_b, {4 * p.Ch}},
      {"dec_w", &p.dec_w, {1, p.Ch, 1, 1}},
      {"dec_b", &p.dec_b, {1}},
  };
}

std::vector<ConstTensorRef> tensor_refs(const ModelParams& p) {
  std::vector<ConstTensorRef> out;
  for (const TensorRef& ref : tensor_refs(const_cast<ModelParams&>(p)))
    out.push_back({ref.name, ref.data, ref.shape});
  return out;
}

ModelParams zeros_like(const ModelParams& like) {
  ModelParams p;
  p.C = like.C;
  p.Ch = like.Ch;
  for (const TensorRef& ref : tensor_refs(p)) {
    std::size_t n = 1;
    for (const int d : ref.shape) n *= static_cast<std::size_t>(d);
    ref.data->assign(n, 0.0);
  }
  return p;
}

ModelParams init_params(int C, int Ch, std::uint64_t seed) {
  if (C < 1 || Ch < 1)
    throw std::invalid_argument("model: channel counts must be positive");
  ModelParams like;
  like.C = C;
  like.Ch = Ch;
  ModelParams p = zeros_like(like);
  Rng rng(seed);
  for (const TensorRef& ref : tensor_refs(p)) {
    if (ref.shape.size() < 2) continue;  // biases stay zero
    std::size_t fan_in = 1;
    for (std::size_t d = 1; d < ref.shape.size(); ++d)
      fan_in *= static_cast<std::size_t>(ref.shape[d]);
    const double s = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& w : *ref.data) w = uniform_real(rng, -s, s);
  }
  // Forget-gate bias opens the cell's memory path at the start.
  for (int c = 0; c < Ch; ++c) p.gates_b[Ch + c] = 1.0;
  return p;
}

Tensor3 encode(const Image& frame, const ModelParams& params) {
  EncCache cache;
  encode_cached(frame, params, cache);
  return cache.p2;
}

Image downsample_quarter(const Image& full) {
  if (full.height % 4 != 0 || full.width % 4 != 0)
    throw std::invalid_argument(
        "downsample_quarter: size not divisible by 4");
  const int h = full.height / 4, w = full.width / 4;
  Image out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      for (int dy = 0; dy < 4; ++dy)
        for (int dx = 0; dx < 4; ++dx) sum += full.at(4 * y + dy, 4 * x + dx);
      out.at(y, x) = sum / 16.0;
    }
  return out;
}

Image step(const Tensor3& features, const Image& prev_mask_quarter,
           RecurrentState& state, const ModelParams& params) {
  StepCache cache;
  cell_forward(features, prev_mask_quarter, state.h, state.c, params, cache);
  state.h = cache.hs;
  state.c = cache.c;
  return cache.prob;
}

ForwardResult forward_clip(const ClipData& clip,
                           const std::vector<bool>& use_gt,
                           const ModelParams& params) {
  ClipCaches caches;
  ForwardResult result;
  run_forward(clip, use_gt, params, caches, result);
  return result;
}

ForwardResult backward_clip(const ClipData& clip,
                            const std::vector<bool>& use_gt,
                            const ModelParams& params, ModelParams* grads) {
  if (!grads) throw std::invalid_argument("backward_clip: grads is null");
  ClipCaches caches;
  ForwardResult result;
  const double scale = run_forward(clip, use_gt, params, caches, result);

  const int T = static_cast<int>(clip.frames.size());
  const int nobj = static_cast<int>(clip.targets.size());
  const int H = clip.frames[0].height, W = clip.frames[0].width;
  const int h = H / 4, w = W / 4;
  const std::size_t plane = static_cast<std::size_t>(params.Ch) * h * w;

  std::vector<Tensor3> d_features(T - 1);
  for (int t = 1; t < T; ++t) d_features[t - 1] = Tensor3(params.C, h, w);

  for (int obj = 0; obj < nobj; ++obj) {
    Tensor3 dH_next(params.Ch, h, w), dC_next(params.Ch, h, w);
    for (int t = T - 1; t >= 1; --t) {
      const StepCache& s = caches.steps[obj][t - 1];
      const Image& y = clip.targets[obj][t];

      // Decoder backward: nearest upsample folds the 4x4 block of
      // full-resolution BCE gradients onto each quarter-res logit.
      std::vector<double> dl(static_cast<std::size_t>(h) * w, 0.0);
      for (int qy = 0; qy < h; ++qy) {
        for (int qx = 0; qx < w; ++qx) {
          double g = 0.0;
          for (int dy = 0; dy < 4; ++dy)
            for (int dx = 0; dx < 4; ++dx)
              g += s.prob.at(4 * qy + dy, 4 * qx + dx) -
                   y.at(4 * qy + dy, 4 * qx + dx);
          dl[static_cast<std::size_t>(qy) * w + qx] = g * scale;
        }
      }

      Tensor3 dH = dH_next;
      for (int qy = 0; qy < h; ++qy) {
        for (int qx = 0; qx < w; ++qx) {
          const double g = dl[static_cast<std::size_t>(qy) * w + qx];
          grads->dec_b[0] += g;
          for (int c = 0; c < params.Ch; ++c) {
            grads->dec_w[c] += g * s.hs.at(c, qy, qx);
            dH.at(c, qy, qx) += params.dec_w[c] * g;
          }
        }
      }

      Tensor3 dz(4 * params.Ch, h, w);
      for (std::size_t i = 0; i < plane; ++i) {
        const double dh = dH.v[i];
        const double go = s.go.v[i], tc = s.tc.v[i];
        const double d_o = dh * tc;
        const double dc = dC_next.v[i] + dh * go * (1.0 - tc * tc);
        const double gi = s.gi.v[i], gg = s.gg.v[i], gf = s.gf.v[i];
        const double d_i = dc * gg;
        const double d_f = dc * s.c_prev.v[i];
        const double d_g = dc * gi;
        dz.v[i] = d_i * gi * (1.0 - gi);
        dz.v[plane + i] = d_f * gf * (1.0 - gf);
        dz.v[2 * plane + i] = d_o * go * (1.0 - go);
        dz.v[3 * plane + i] = d_g * (1.0 - gg * gg);
        dC_next.v[i] = dc * gf;  // flows into C_{t-1}
      }

      Tensor3 dx;
      conv3x3_backward(s.x, params.gates_w, 4 * params.Ch, dz, &dx,
                       &grads->gates_w, &grads->gates_b);
      const std::size_t fplane = static_cast<std::size_t>(params.C) * h * w;
      for (std::size_t i = 0; i < fplane; ++i)
        d_features[t - 1].v[i] += dx.v[i];
      const std::size_t hoff = static_cast<std::size_t>(params.C + 1) * h * w;
      for (std::size_t i = 0; i < plane; ++i) dH_next.v[i] = dx.v[hoff + i];
    }
  }

  for (int t = 1; t < T; ++t)
    encode_backward(caches.enc[t - 1], params, d_features[t - 1], grads);
  return result;
}

AdamState make_adam(const ModelParams& like) {
  AdamState state;
  state.m = zeros_like(like);
  state.v = zeros_like(like);
  return state;
}

void adam_step(ModelParams& params, const ModelParams& grads,
               AdamState& state, double lr) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const auto prefs = tensor_refs(params);
  const auto grefs = tensor_refs(grads);
  const auto mrefs = tensor_refs(state.m);
  const auto vrefs = tensor_refs(state.v);
  for (std::size_t k = 0; k < prefs.size(); ++k) {
    std::vector<double>& p = *prefs[k].data;
    const std::vector<double>& g = *grefs[k].data;
    std::vector<double>& m = *mrefs[k].data;
    std::vector<double>& v = *vrefs[k].data;
    if (p.size() != g.size())
      throw std::invalid_argument("adam_step: gradient shape mismatch at " +
                                  std::string(prefs[k].name));
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (!std::isfinite(g[i]))
        throw std::runtime_error("adam_step: non-finite gradient in " +
                                 std::string(prefs[k].name));
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

void save_checkpoint(const std::filesystem::path& path,
                     const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "CVOSCKPT 1\n";
  out << "channels " << params.C << ' ' << params.Ch << '\n';
  for (const ConstTensorRef& ref : tensor_refs(params)) {
    out << "tensor " << ref.name;
    for (const int d : ref.shape) out << ' ' << d;
    out << '\n';
  }
  out << "END\n";
  for (const ConstTensorRef& ref : tensor_refs(params))
    out.write(reinterpret_cast<const char*>(ref.data->data()),
              static_cast<std::streamsize>(ref.data->size() * sizeof(double)));
  if (!out) throw IoError("write failed: " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "CVOSCKPT 1")
    throw ParseError(path.string() + ": not a checkpoint (bad magic)");
  if (!std::getline(in, line))
    throw ParseError(path.string() + ": missing channel line");
  int C = 0, Ch = 0;
  {
    std::istringstream iss(line);
    std::string tag;
    if (!(iss >> tag >> C >> Ch) || tag != "channels" || C < 1 || Ch < 1)
      throw ParseError(path.string() + ": bad channel line '" + line + "'");
  }
  ModelParams like;
  like.C = C;
  like.Ch = Ch;
  ModelParams params = zeros_like(like);

  for (const TensorRef& ref : tensor_refs(params)) {
    if (!std::getline(in, line))
      throw ParseError(path.string() + ": truncated shape table");
    std::istringstream iss(line);
    std::string tag, name;
    if (!(iss >> tag >> name) || tag != "tensor" || name != ref.name)
      throw ParseError(path.string() + ": expected tensor " +
                       std::string(ref.name) + ", got '" + line + "'");
    for (const int want : ref.shape) {
      int got = 0;
      if (!(iss >> got) || got != want)
        throw ParseError(path.string() + ": shape mismatch for " +
                         std::string(ref.name));
    }
    int extra;
    if (iss >> extra)
      throw ParseError(path.string() + ": extra dimension for " +
                       std::string(ref.name));
  }
  if (!std::getline(in, line) || line != "END")
    throw ParseError(path.string() + ": missing END marker");

  for (const TensorRef& ref : tensor_refs(params)) {
    in.read(reinterpret_cast<char*>(ref.data->data()),
            static_cast<std::streamsize>(ref.data->size() * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) !=
        ref.data->size() * sizeof(double))
      throw ParseError(path.string() + ": truncated tensor data for " +
                       std::string(ref.name));
    for (const double v : *ref.data)
      if (!std::isfinite(v))
        throw ParseError(path.string() + ": non-finite value in " +
                         std::string(ref.name));
  }
  char trailing;
  if (in.read(&trailing, 1))
    throw ParseError(path.string() + ": trailing bytes after tensors");
  return params;
}

}  // namespace cvos
