#include "modfus/unet.hpp"

#include <cmath>
#include <stdexcept>

#include "modfus/diffusion.hpp"

namespace modfus {

namespace {

// Largest divisor of c that does not exceed the configured group count;
// guarantees c % groups == 0 for any width.
int norm_group_count(int c, int max_groups) {
  for (int g = std::min(c, max_groups); g > 1; --g) {
    if (c % g == 0) return g;
  }
  return 1;
}

template <typename T>
ConvParams<T> make_conv(int c_out, int c_in, int k, int stride) {
  ConvParams<T> p;
  p.c_out = c_out;
  p.c_in = c_in;
  p.k = k;
  p.stride = stride;
  p.w.assign(static_cast<std::size_t>(c_out) * c_in * k, T(0));
  p.b.assign(c_out, T(0));
  return p;
}

template <typename T>
LinearParams<T> make_linear(int n_out, int n_in) {
  LinearParams<T> p;
  p.n_out = n_out;
  p.n_in = n_in;
  p.w.assign(static_cast<std::size_t>(n_out) * n_in, T(0));
  p.b.assign(n_out, T(0));
  return p;
}

template <typename T>
NormParams<T> make_norm(int c, int max_groups) {
  NormParams<T> p;
  p.c = c;
  p.groups = norm_group_count(c, max_groups);
  p.gamma.assign(c, T(1));
  p.beta.assign(c, T(0));
  return p;
}

template <typename T>
ResBlockParams<T> make_block(int c_in, int c_out, const UNetConfig& cfg) {
  ResBlockParams<T> p;
  p.conv1 = make_conv<T>(c_out, c_in, cfg.kernel_size, 1);
  p.norm1 = make_norm<T>(c_out, cfg.norm_groups);
  p.film = make_linear<T>(2 * c_out, cfg.time_dim);
  p.conv2 = make_conv<T>(c_out, c_out, cfg.kernel_size, 1);
  p.norm2 = make_norm<T>(c_out, cfg.norm_groups);
  p.has_res = c_in != c_out;
  if (p.has_res) p.res = make_conv<T>(c_out, c_in, 1, 1);
  return p;
}

template <typename T>
UNetParams<T> make_params(const UNetConfig& cfg) {
  UNetParams<T> p;
  p.config = cfg;
  p.time_fc1 = make_linear<T>(cfg.time_dim, cfg.time_dim);
  p.time_fc2 = make_linear<T>(cfg.time_dim, cfg.time_dim);
  p.in_proj = make_conv<T>(cfg.down_channels[0], cfg.in_channels, cfg.kernel_size, 1);
  p.blocks[0] = make_block<T>(cfg.down_channels[0], cfg.down_channels[0], cfg);
  for (int i = 0; i < 3; ++i) {
    p.down[i] = make_conv<T>(cfg.down_channels[i + 1], cfg.down_channels[i], cfg.kernel_size, 2);
    p.blocks[i + 1] = make_block<T>(cfg.down_channels[i + 1], cfg.down_channels[i + 1], cfg);
  }
  p.down[3] = make_conv<T>(cfg.down_channels[3], cfg.down_channels[3], cfg.kernel_size, 2);
  p.mid = make_block<T>(cfg.down_channels[3], cfg.down_channels[3], cfg);
  // Up block j consumes the matching down-path block's output channelwise.
  const int skip_ch[4] = {cfg.down_channels[3], cfg.down_channels[2], cfg.down_channels[1],
                          cfg.down_channels[0]};
  const int src_ch[4] = {cfg.down_channels[3], cfg.up_channels[0], cfg.up_channels[1],
                         cfg.up_channels[2]};
  for (int j = 0; j < 4; ++j) {
    p.up[j] = make_conv<T>(src_ch[j], src_ch[j], cfg.kernel_size, 1);
    p.blocks[4 + j] = make_block<T>(src_ch[j] + skip_ch[j], cfg.up_channels[j], cfg);
  }
  p.out_proj = make_conv<T>(cfg.in_channels, cfg.up_channels[3], cfg.kernel_size, 1);
  return p;
}

template <typename T>
void fill_normal(std::vector<T>& v, double std, Rng& rng) {
  for (auto& x : v) x = static_cast<T>(std * rng.normal());
}

template <typename T>
void init_conv(ConvParams<T>& p, Rng& rng) {
  fill_normal(p.w, 1.0 / std::sqrt(static_cast<double>(p.c_in) * p.k), rng);
}

template <typename T>
void init_linear(LinearParams<T>& p, Rng& rng) {
  fill_normal(p.w, 1.0 / std::sqrt(static_cast<double>(p.n_in)), rng);
}

template <typename T>
void init_block(ResBlockParams<T>& p, Rng& rng) {
  init_conv(p.conv1, rng);
  init_linear(p.film, rng);
  init_conv(p.conv2, rng);
  if (p.has_res) init_conv(p.res, rng);
}

// ---- primitive forward/backward ----

template <typename T>
Tensor<T> conv_forward(const ConvParams<T>& p, const Tensor<T>& x) {
  const int pad = p.k / 2;
  const int out_len = p.stride == 1 ? x.len : x.len / 2;
  Tensor<T> y(p.c_out, out_len);
  for (int co = 0; co < p.c_out; ++co) {
    T* yrow = &y.data[static_cast<std::size_t>(co) * out_len];
    for (int n = 0; n < out_len; ++n) yrow[n] = p.b[co];
    for (int ci = 0; ci < p.c_in; ++ci) {
      const T* wrow = &p.w[(static_cast<std::size_t>(co) * p.c_in + ci) * p.k];
      const T* xrow = &x.data[static_cast<std::size_t>(ci) * x.len];
      for (int m = 0; m < p.k; ++m) {
        const T wv = wrow[m];
        int lo = 0, hi = out_len - 1;
        while (lo <= hi && p.stride * lo + m - pad < 0) ++lo;
        while (hi >= lo && p.stride * hi + m - pad >= x.len) --hi;
        const int shift = m - pad;
        for (int n = lo; n <= hi; ++n) yrow[n] += wv * xrow[p.stride * n + shift];
      }
    }
  }
  return y;
}

// Accumulates into gp (weight grads) and dx.
template <typename T>
void conv_backward(const ConvParams<T>& p, const Tensor<T>& x, const Tensor<T>& dy,
                   ConvParams<T>& gp, Tensor<T>& dx) {
  const int pad = p.k / 2;
  const int out_len = dy.len;
  for (int co = 0; co < p.c_out; ++co) {
    const T* dyrow = &dy.data[static_cast<std::size_t>(co) * out_len];
    T acc = T(0);
    for (int n = 0; n < out_len; ++n) acc += dyrow[n];
    gp.b[co] += acc;
    for (int ci = 0; ci < p.c_in; ++ci) {
      const std::size_t w_base = (static_cast<std::size_t>(co) * p.c_in + ci) * p.k;
      const T* xrow = &x.data[static_cast<std::size_t>(ci) * x.len];
      T* dxrow = &dx.data[static_cast<std::size_t>(ci) * x.len];
      for (int m = 0; m < p.k; ++m) {
        int lo = 0, hi = out_len - 1;
        while (lo <= hi && p.stride * lo + m - pad < 0) ++lo;
        while (hi >= lo && p.stride * hi + m - pad >= x.len) --hi;
        const int shift = m - pad;
        T wg = T(0);
        const T wv = p.w[w_base + m];
        for (int n = lo; n <= hi; ++n) {
          const int j = p.stride * n + shift;
          wg += dyrow[n] * xrow[j];
          dxrow[j] += wv * dyrow[n];
        }
        gp.w[w_base + m] += wg;
      }
    }
  }
}

template <typename T>
struct GnCache {
  Tensor<T> xhat;
  std::vector<T> invstd;
};

template <typename T>
Tensor<T> gn_forward(const NormParams<T>& p, const Tensor<T>& x, GnCache<T>& cache) {
  const int cpg = p.c / p.groups;
  const double n_el = static_cast<double>(cpg) * x.len;
  cache.xhat = Tensor<T>(x.ch, x.len);
  cache.invstd.assign(p.groups, T(0));
  Tensor<T> y(x.ch, x.len);
  for (int g = 0; g < p.groups; ++g) {
    double mean = 0.0;
    for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
      for (int n = 0; n < x.len; ++n) mean += x.at(c, n);
    }
    mean /= n_el;
    double var = 0.0;
    for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
      for (int n = 0; n < x.len; ++n) {
        const double d = x.at(c, n) - mean;
        var += d * d;
      }
    }
    var /= n_el;
    const T inv = static_cast<T>(1.0 / std::sqrt(var + 1e-5));
    cache.invstd[g] = inv;
    const T m = static_cast<T>(mean);
    for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
      for (int n = 0; n < x.len; ++n) {
        const T xh = (x.at(c, n) - m) * inv;
        cache.xhat.at(c, n) = xh;
        y.at(c, n) = p.gamma[c] * xh + p.beta[c];
      }
    }
  }
  return y;
}

template <typename T>
Tensor<T> gn_backward(const NormParams<T>& p, const GnCache<T>& cache, const Tensor<T>& dy,
                      NormParams<T>& gp) {
  const int cpg = p.c / p.groups;
  const double n_el = static_cast<double>(cpg) * dy.len;
  Tensor<T> dx(dy.ch, dy.len);
  for (int c = 0; c < p.c; ++c) {
    T dg = T(0), db = T(0);
    for (int n = 0; n < dy.len; ++n) {
      dg += dy.at(c, n) * cache.xhat.at(c, n);
      db += dy.at(c, n);
    }
    gp.gamma[c] += dg;
    gp.beta[c] += db;
  }
  for (int g = 0; g < p.groups; ++g) {
    double sum_dxh = 0.0, sum_dxh_xh = 0.0;
    for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
      for (int n = 0; n < dy.len; ++n) {
        const double dxh = static_cast<double>(dy.at(c, n)) * p.gamma[c];
        sum_dxh += dxh;
        sum_dxh_xh += dxh * cache.xhat.at(c, n);
      }
    }
    const double inv = cache.invstd[g];
    for (int c = g * cpg; c < (g + 1) * cpg; ++c) {
      for (int n = 0; n < dy.len; ++n) {
        const double dxh = static_cast<double>(dy.at(c, n)) * p.gamma[c];
        dx.at(c, n) = static_cast<T>(
            inv / n_el * (n_el * dxh - sum_dxh - cache.xhat.at(c, n) * sum_dxh_xh));
      }
    }
  }
  return dx;
}

template <typename T>
T sigmoid(T v) {
  return T(1) / (T(1) + std::exp(-v));
}

template <typename T>
Tensor<T> silu_forward(const Tensor<T>& x) {
  Tensor<T> y(x.ch, x.len);
  for (std::size_t k = 0; k < x.data.size(); ++k) y.data[k] = x.data[k] * sigmoid(x.data[k]);
  return y;
}

template <typename T>
Tensor<T> silu_backward(const Tensor<T>& x, const Tensor<T>& dy) {
  Tensor<T> dx(x.ch, x.len);
  for (std::size_t k = 0; k < x.data.size(); ++k) {
    const T s = sigmoid(x.data[k]);
    dx.data[k] = dy.data[k] * s * (T(1) + x.data[k] * (T(1) - s));
  }
  return dx;
}

template <typename T>
std::vector<T> silu_vec(const std::vector<T>& x) {
  std::vector<T> y(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] * sigmoid(x[k]);
  return y;
}

template <typename T>
std::vector<T> silu_vec_backward(const std::vector<T>& x, const std::vector<T>& dy) {
  std::vector<T> dx(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const T s = sigmoid(x[k]);
    dx[k] = dy[k] * s * (T(1) + x[k] * (T(1) - s));
  }
  return dx;
}

template <typename T>
std::vector<T> linear_forward(const LinearParams<T>& p, const std::vector<T>& x) {
  std::vector<T> y(p.n_out);
  for (int o = 0; o < p.n_out; ++o) {
    T acc = p.b[o];
    const T* wrow = &p.w[static_cast<std::size_t>(o) * p.n_in];
    for (int i = 0; i < p.n_in; ++i) acc += wrow[i] * x[i];
    y[o] = acc;
  }
  return y;
}

template <typename T>
std::vector<T> linear_backward(const LinearParams<T>& p, const std::vector<T>& x,
                               const std::vector<T>& dy, LinearParams<T>& gp) {
  std::vector<T> dx(p.n_in, T(0));
  for (int o = 0; o < p.n_out; ++o) {
    gp.b[o] += dy[o];
    const T* wrow = &p.w[static_cast<std::size_t>(o) * p.n_in];
    T* gwrow = &gp.w[static_cast<std::size_t>(o) * p.n_in];
    for (int i = 0; i < p.n_in; ++i) {
      gwrow[i] += dy[o] * x[i];
      dx[i] += wrow[i] * dy[o];
    }
  }
  return dx;
}

template <typename T>
Tensor<T> upsample2(const Tensor<T>& x) {
  Tensor<T> y(x.ch, x.len * 2);
  for (int c = 0; c < x.ch; ++c) {
    for (int n = 0; n < y.len; ++n) y.at(c, n) = x.at(c, n / 2);
  }
  return y;
}

template <typename T>
Tensor<T> upsample2_backward(const Tensor<T>& dy) {
  Tensor<T> dx(dy.ch, dy.len / 2);
  for (int c = 0; c < dy.ch; ++c) {
    for (int n = 0; n < dx.len; ++n) dx.at(c, n) = dy.at(c, 2 * n) + dy.at(c, 2 * n + 1);
  }
  return dx;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  Tensor<T> y(a.ch + b.ch, a.len);
  std::copy(a.data.begin(), a.data.end(), y.data.begin());
  std::copy(b.data.begin(), b.data.end(), y.data.begin() + a.data.size());
  return y;
}

// ---- residual block ----

template <typename T>
struct BlockCache {
  Tensor<T> x, h2, h3, h4, h6, out;
  GnCache<T> gn1, gn2;
  std::vector<T> scale;
};

template <typename T>
Tensor<T> block_forward(const ResBlockParams<T>& p, const Tensor<T>& x,
                        const std::vector<T>& temb, BlockCache<T>& cache) {
  cache.x = x;
  const Tensor<T> h1 = conv_forward(p.conv1, x);
  cache.h2 = gn_forward(p.norm1, h1, cache.gn1);
  const std::vector<T> sc_sh = linear_forward(p.film, temb);
  const int c_out = p.conv1.c_out;
  cache.scale.assign(sc_sh.begin(), sc_sh.begin() + c_out);
  cache.h3 = Tensor<T>(c_out, h1.len);
  for (int c = 0; c < c_out; ++c) {
    const T s = T(1) + sc_sh[c];
    const T sh = sc_sh[c_out + c];
    for (int n = 0; n < h1.len; ++n) cache.h3.at(c, n) = cache.h2.at(c, n) * s + sh;
  }
  cache.h4 = silu_forward(cache.h3);
  const Tensor<T> h5 = conv_forward(p.conv2, cache.h4);
  cache.h6 = gn_forward(p.norm2, h5, cache.gn2);
  Tensor<T> out = silu_forward(cache.h6);
  if (p.has_res) {
    const Tensor<T> r = conv_forward(p.res, x);
    for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] += r.data[k];
  } else {
    for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] += x.data[k];
  }
  cache.out = out;
  return out;
}

template <typename T>
Tensor<T> block_backward(const ResBlockParams<T>& p, const BlockCache<T>& cache,
                         const Tensor<T>& d_out, const std::vector<T>& temb,
                         ResBlockParams<T>& gp, std::vector<T>& d_temb) {
  const Tensor<T> d_h6 = silu_backward(cache.h6, d_out);
  const Tensor<T> d_h5 = gn_backward(p.norm2, cache.gn2, d_h6, gp.norm2);
  Tensor<T> d_h4(cache.h4.ch, cache.h4.len);
  conv_backward(p.conv2, cache.h4, d_h5, gp.conv2, d_h4);
  const Tensor<T> d_h3 = silu_backward(cache.h3, d_h4);

  const int c_out = p.conv1.c_out;
  std::vector<T> d_sc_sh(2 * c_out, T(0));
  Tensor<T> d_h2(c_out, d_h3.len);
  for (int c = 0; c < c_out; ++c) {
    const T s = T(1) + cache.scale[c];
    T dsc = T(0), dsh = T(0);
    for (int n = 0; n < d_h3.len; ++n) {
      const T g = d_h3.at(c, n);
      d_h2.at(c, n) = g * s;
      dsc += g * cache.h2.at(c, n);
      dsh += g;
    }
    d_sc_sh[c] = dsc;
    d_sc_sh[c_out + c] = dsh;
  }
  const std::vector<T> d_temb_local = linear_backward(p.film, temb, d_sc_sh, gp.film);
  for (std::size_t k = 0; k < d_temb.size(); ++k) d_temb[k] += d_temb_local[k];

  const Tensor<T> d_h1 = gn_backward(p.norm1, cache.gn1, d_h2, gp.norm1);
  Tensor<T> dx(cache.x.ch, cache.x.len);
  conv_backward(p.conv1, cache.x, d_h1, gp.conv1, dx);
  if (p.has_res) {
    conv_backward(p.res, cache.x, d_out, gp.res, dx);
  } else {
    for (std::size_t k = 0; k < dx.data.size(); ++k) dx.data[k] += d_out.data[k];
  }
  return dx;
}

// ---- whole network ----

template <typename T>
struct Workspace {
  std::vector<T> temb0, t_h1, t_h2, temb;
  Tensor<T> x_in;
  std::array<BlockCache<T>, 8> blocks;
  BlockCache<T> mid;
  std::array<Tensor<T>, 4> ups;  // nearest-upsampled inputs to the up convs
};

template <typename T>
std::vector<T> sinusoid(int t, int dim) {
  const int half = dim / 2;
  std::vector<T> e(dim);
  for (int k = 0; k < half; ++k) {
    const double freq =
        half > 1 ? std::exp(-std::log(10000.0) * k / (half - 1)) : 1.0;
    e[k] = static_cast<T>(std::sin(t * freq));
    e[half + k] = static_cast<T>(std::cos(t * freq));
  }
  return e;
}

template <typename T>
void check_input(const UNetParams<T>& params, const Tensor<T>& x, int t) {
  if (x.ch != params.config.in_channels) throw std::invalid_argument("unet: bad channel count");
  if (x.len < kUNetLengthMultiple || x.len % kUNetLengthMultiple != 0) {
    throw std::invalid_argument("unet: length must be a positive multiple of 16");
  }
  if (t < 1) throw std::invalid_argument("unet: step t must be >= 1");
}

template <typename T>
Tensor<T> forward_impl(const UNetParams<T>& params, const Tensor<T>& x, int t, Workspace<T>& ws) {
  check_input(params, x, t);
  ws.temb0 = sinusoid<T>(t, params.config.time_dim);
  ws.t_h1 = linear_forward(params.time_fc1, ws.temb0);
  ws.t_h2 = silu_vec(ws.t_h1);
  ws.temb = linear_forward(params.time_fc2, ws.t_h2);

  ws.x_in = x;
  Tensor<T> h = conv_forward(params.in_proj, x);
  h = block_forward(params.blocks[0], h, ws.temb, ws.blocks[0]);
  for (int i = 1; i < 4; ++i) {
    const Tensor<T> d = conv_forward(params.down[i - 1], h);
    h = block_forward(params.blocks[i], d, ws.temb, ws.blocks[i]);
  }
  const Tensor<T> d4 = conv_forward(params.down[3], h);
  h = block_forward(params.mid, d4, ws.temb, ws.mid);
  for (int j = 0; j < 4; ++j) {
    ws.ups[j] = upsample2(h);
    const Tensor<T> u = conv_forward(params.up[j], ws.ups[j]);
    const Tensor<T> cat = concat_channels(u, ws.blocks[3 - j].out);
    h = block_forward(params.blocks[4 + j], cat, ws.temb, ws.blocks[4 + j]);
  }
  return conv_forward(params.out_proj, h);
}

template <typename T>
void backward_impl(const UNetParams<T>& params, const Workspace<T>& ws, const Tensor<T>& d_eps,
                   UNetParams<T>& g) {
  std::vector<T> d_temb(params.config.time_dim, T(0));
  std::array<Tensor<T>, 4> d_skip;
  for (int i = 0; i < 4; ++i) {
    d_skip[i] = Tensor<T>(ws.blocks[i].out.ch, ws.blocks[i].out.len);
  }

  Tensor<T> d_h(ws.blocks[7].out.ch, ws.blocks[7].out.len);
  conv_backward(params.out_proj, ws.blocks[7].out, d_eps, g.out_proj, d_h);

  for (int j = 3; j >= 0; --j) {
    const Tensor<T> d_cat =
        block_backward(params.blocks[4 + j], ws.blocks[4 + j], d_h, ws.temb, g.blocks[4 + j],
                       d_temb);
    const int u_ch = params.up[j].c_out;
    Tensor<T> d_u(u_ch, d_cat.len);
    std::copy(d_cat.data.begin(), d_cat.data.begin() + d_u.data.size(), d_u.data.begin());
    Tensor<T>& skip = d_skip[3 - j];
    for (std::size_t k = 0; k < skip.data.size(); ++k) {
      skip.data[k] += d_cat.data[d_u.data.size() + k];
    }
    Tensor<T> d_ups(ws.ups[j].ch, ws.ups[j].len);
    conv_backward(params.up[j], ws.ups[j], d_u, g.up[j], d_ups);
    d_h = upsample2_backward(d_ups);
  }

  const Tensor<T> d_d4 = block_backward(params.mid, ws.mid, d_h, ws.temb, g.mid, d_temb);
  Tensor<T> d_prev(ws.blocks[3].out.ch, ws.blocks[3].out.len);
  conv_backward(params.down[3], ws.blocks[3].out, d_d4, g.down[3], d_prev);
  for (std::size_t k = 0; k < d_prev.data.size(); ++k) d_prev.data[k] += d_skip[3].data[k];
  d_h = std::move(d_prev);

  for (int i = 3; i >= 1; --i) {
    const Tensor<T> d_down =
        block_backward(params.blocks[i], ws.blocks[i], d_h, ws.temb, g.blocks[i], d_temb);
    Tensor<T> d_out(ws.blocks[i - 1].out.ch, ws.blocks[i - 1].out.len);
    conv_backward(params.down[i - 1], ws.blocks[i - 1].out, d_down, g.down[i - 1], d_out);
    for (std::size_t k = 0; k < d_out.data.size(); ++k) d_out.data[k] += d_skip[i - 1].data[k];
    d_h = std::move(d_out);
  }

  const Tensor<T> d_in =
      block_backward(params.blocks[0], ws.blocks[0], d_h, ws.temb, g.blocks[0], d_temb);
  Tensor<T> d_x(ws.x_in.ch, ws.x_in.len);
  conv_backward(params.in_proj, ws.x_in, d_in, g.in_proj, d_x);

  const std::vector<T> d_t_h2 = linear_backward(params.time_fc2, ws.t_h2, d_temb, g.time_fc2);
  const std::vector<T> d_t_h1 = silu_vec_backward(ws.t_h1, d_t_h2);
  linear_backward(params.time_fc1, ws.temb0, d_t_h1, g.time_fc1);
}

template <typename T>
void visit_conv(const std::string& name, ConvParams<T>& p, auto&& fn) {
  fn(name + ".w", std::vector<int>{p.c_out, p.c_in, p.k}, p.w);
  fn(name + ".b", std::vector<int>{p.c_out}, p.b);
}

template <typename T>
void visit_linear(const std::string& name, LinearParams<T>& p, auto&& fn) {
  fn(name + ".w", std::vector<int>{p.n_out, p.n_in}, p.w);
  fn(name + ".b", std::vector<int>{p.n_out}, p.b);
}

template <typename T>
void visit_norm(const std::string& name, NormParams<T>& p, auto&& fn) {
  fn(name + ".gamma", std::vector<int>{p.c}, p.gamma);
  fn(name + ".beta", std::vector<int>{p.c}, p.beta);
}

template <typename T>
void visit_block(const std::string& name, ResBlockParams<T>& p, auto&& fn) {
  visit_conv(name + ".conv1", p.conv1, fn);
  visit_norm(name + ".norm1", p.norm1, fn);
  visit_linear(name + ".film", p.film, fn);
  visit_conv(name + ".conv2", p.conv2, fn);
  visit_norm(name + ".norm2", p.norm2, fn);
  if (p.has_res) visit_conv(name + ".res", p.res, fn);
}

template <typename T>
void visit_all(UNetParams<T>& p, auto&& fn) {
  visit_linear("time.fc1", p.time_fc1, fn);
  visit_linear("time.fc2", p.time_fc2, fn);
  visit_conv("in_proj", p.in_proj, fn);
  for (int i = 0; i < 4; ++i) {
    visit_block("b" + std::to_string(i + 1), p.blocks[i], fn);
    visit_conv("down" + std::to_string(i + 1), p.down[i], fn);
  }
  visit_block("mid", p.mid, fn);
  for (int j = 0; j < 4; ++j) {
    visit_conv("up" + std::to_string(4 - j), p.up[j], fn);
    visit_block("b" + std::to_string(5 + j), p.blocks[4 + j], fn);
  }
  visit_conv("out_proj", p.out_proj, fn);
}

}  // namespace

void validate(const UNetConfig& config) {
  for (int c : config.down_channels) {
    if (c < 1) throw std::invalid_argument("unet config: down channel width < 1");
  }
  for (int c : config.up_channels) {
    if (c < 1) throw std::invalid_argument("unet config: up channel width < 1");
  }
  if (config.in_channels < 1) throw std::invalid_argument("unet config: in_channels < 1");
  if (config.kernel_size < 1 || config.kernel_size % 2 == 0) {
    throw std::invalid_argument("unet config: kernel size must be odd");
  }
  if (config.time_dim < 4 || config.time_dim % 2 != 0) {
    throw std::invalid_argument("unet config: time_dim must be even and >= 4");
  }
  if (config.norm_groups < 1) throw std::invalid_argument("unet config: norm_groups < 1");
}

template <typename T>
Tensor<T> to_tensor(const IQSignal& sig) {
  Tensor<T> x(2, static_cast<int>(sig.length()));
  for (std::size_t n = 0; n < sig.length(); ++n) {
    x.at(0, static_cast<int>(n)) = static_cast<T>(sig.i[n]);
    x.at(1, static_cast<int>(n)) = static_cast<T>(sig.q[n]);
  }
  return x;
}

template <typename T>
IQSignal to_signal(const Tensor<T>& x) {
  if (x.ch != 2) throw std::invalid_argument("to_signal: tensor is not 2-channel");
  IQSignal sig;
  sig.i.resize(x.len);
  sig.q.resize(x.len);
  for (int n = 0; n < x.len; ++n) {
    sig.i[n] = x.at(0, n);
    sig.q[n] = x.at(1, n);
  }
  return sig;
}

template <typename T>
UNetParams<T> unet_init(const UNetConfig& config, std::uint64_t seed) {
  validate(config);
  UNetParams<T> p = make_params<T>(config);
  Rng rng = Rng(seed).derive(0x0e7u);
  init_linear(p.time_fc1, rng);
  init_linear(p.time_fc2, rng);
  init_conv(p.in_proj, rng);
  for (int i = 0; i < 4; ++i) {
    init_block(p.blocks[i], rng);
    init_conv(p.down[i], rng);
  }
  init_block(p.mid, rng);
  for (int j = 0; j < 4; ++j) {
    init_conv(p.up[j], rng);
    init_block(p.blocks[4 + j], rng);
  }
  // out_proj stays zero: a fresh model is the exact 0-predictor.
  return p;
}

// make_params seeds norm scales at 1; accumulators must start at exactly 0.
template <typename T>
UNetParams<T> clear_tensors(UNetParams<T> p) {
  for_each_tensor(p, [](const std::string&, const std::vector<int>&, std::vector<T>& data) {
    std::fill(data.begin(), data.end(), T(0));
  });
  return p;
}

template <typename T>
UNetParams<T> zeros_like(const UNetParams<T>& params) {
  return clear_tensors(make_params<T>(params.config));
}

template <typename T>
UNetParams<T> unet_zeros(const UNetConfig& config) {
  validate(config);
  return clear_tensors(make_params<T>(config));
}

template <typename T>
std::size_t parameter_count(const UNetParams<T>& params) {
  std::size_t n = 0;
  for_each_tensor(params, [&](const std::string&, const std::vector<int>&,
                              const std::vector<T>& data) { n += data.size(); });
  return n;
}

template <typename T>
void for_each_tensor(UNetParams<T>& params, const std::type_identity_t<TensorVisitor<T>>& fn) {
  visit_all(params, [&](const std::string& name, const std::vector<int>& shape,
                        std::vector<T>& data) { fn(name, shape, data); });
}

template <typename T>
void for_each_tensor(const UNetParams<T>& params,
                     const std::type_identity_t<ConstTensorVisitor<T>>& fn) {
  visit_all(const_cast<UNetParams<T>&>(params),
            [&](const std::string& name, const std::vector<int>& shape, std::vector<T>& data) {
              fn(name, shape, data);
            });
}

template <typename T>
Tensor<T> unet_forward(const UNetParams<T>& params, const Tensor<T>& x, int t) {
  Workspace<T> ws;
  return forward_impl(params, x, t, ws);
}

template <typename T>
Tensor<T> unet_forward_capture(const UNetParams<T>& params, const Tensor<T>& x, int t,
                               BlockActivations<T>& acts) {
  Workspace<T> ws;
  Tensor<T> out = forward_impl(params, x, t, ws);
  for (int i = 0; i < 8; ++i) acts[i] = ws.blocks[i].out;
  return out;
}

template <typename T>
std::vector<TrainingExample<T>> make_training_examples(const std::vector<IQSignal>& batch,
                                                       const NoiseSchedule& sched, Rng& rng) {
  std::vector<TrainingExample<T>> out;
  out.reserve(batch.size());
  for (const auto& s0 : batch) {
    TrainingExample<T> ex;
    ex.t = static_cast<int>(rng.uniform_int(1, sched.T));
    const IQSignal eps = gaussian_like(s0.length(), rng);
    const IQSignal s_t = forward_sample(s0, ex.t, eps, sched);
    ex.s_t = to_tensor<T>(s_t);
    ex.eps = to_tensor<T>(eps);
    out.push_back(std::move(ex));
  }
  return out;
}

template <typename T>
double unet_loss(const UNetParams<T>& params, const std::vector<TrainingExample<T>>& examples) {
  if (examples.empty()) throw std::invalid_argument("unet_loss: empty batch");
  double total = 0.0;
  for (const auto& ex : examples) {
    Workspace<T> ws;
    const Tensor<T> out = forward_impl(params, ex.s_t, ex.t, ws);
    double acc = 0.0;
    for (std::size_t k = 0; k < out.data.size(); ++k) {
      const double d = static_cast<double>(out.data[k]) - ex.eps.data[k];
      acc += d * d;
    }
    total += acc / static_cast<double>(out.data.size());
  }
  return total / static_cast<double>(examples.size());
}

template <typename T>
double unet_loss_and_gradients(const UNetParams<T>& params,
                               const std::vector<TrainingExample<T>>& examples,
                               UNetParams<T>& grads) {
  if (examples.empty()) throw std::invalid_argument("unet_loss_and_gradients: empty batch");
  grads = zeros_like(params);
  double total = 0.0;
  const double bsz = static_cast<double>(examples.size());
  for (const auto& ex : examples) {
    Workspace<T> ws;
    const Tensor<T> out = forward_impl(params, ex.s_t, ex.t, ws);
    const double n_el = static_cast<double>(out.data.size());
    Tensor<T> d_out(out.ch, out.len);
    double acc = 0.0;
    for (std::size_t k = 0; k < out.data.size(); ++k) {
      const double d = static_cast<double>(out.data[k]) - ex.eps.data[k];
      acc += d * d;
      d_out.data[k] = static_cast<T>(2.0 * d / (n_el * bsz));
    }
    total += acc / n_el;
    backward_impl(params, ws, d_out, grads);
  }
  return total / bsz;
}

#define MODFUS_INSTANTIATE(T)                                                                  \
  template Tensor<T> to_tensor<T>(const IQSignal&);                                           \
  template IQSignal to_signal<T>(const Tensor<T>&);                                           \
  template UNetParams<T> unet_init<T>(const UNetConfig&, std::uint64_t);                      \
  template UNetParams<T> zeros_like<T>(const UNetParams<T>&);                                 \
  template UNetParams<T> unet_zeros<T>(const UNetConfig&);                                    \
  template std::size_t parameter_count<T>(const UNetParams<T>&);                              \
  template void for_each_tensor<T>(UNetParams<T>&, const TensorVisitor<T>&);                  \
  template void for_each_tensor<T>(const UNetParams<T>&, const ConstTensorVisitor<T>&);       \
  template Tensor<T> unet_forward<T>(const UNetParams<T>&, const Tensor<T>&, int);           \
  template Tensor<T> unet_forward_capture<T>(const UNetParams<T>&, const Tensor<T>&, int,    \
                                             BlockActivations<T>&);                          \
  template std::vector<TrainingExample<T>> make_training_examples<T>(                        \
      const std::vector<IQSignal>&, const NoiseSchedule&, Rng&);                             \
  template double unet_loss<T>(const UNetParams<T>&, const std::vector<TrainingExample<T>>&); \
  template double unet_loss_and_gradients<T>(const UNetParams<T>&,                           \
                                             const std::vector<TrainingExample<T>>&,         \
                                             UNetParams<T>&);

MODFUS_INSTANTIATE(float)
MODFUS_INSTANTIATE(double)

#undef MODFUS_INSTANTIATE

}  // namespace modfus
