#include "gls/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <vector>

#include "gls/modeling.hpp"
#include "gls/rng.hpp"

namespace gls {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

int env_threads() {
  const char* env = std::getenv("GLS_THREADS");
  if (env == nullptr) return 1;
  const int v = std::atoi(env);
  return v >= 1 ? v : 1;
}

}  // namespace

Instance grid_instance(const Image& img, TvMode mode, double lambda) {
  if (img.channels != 1)
    throw std::invalid_argument("grid_instance: single-channel images only");
  if (!(lambda > 0)) throw std::invalid_argument("grid_instance: lambda must be positive");
  const int w = img.width, h = img.height;
  const double l2 = lambda * lambda;
  Instance inst;
  inst.n = w * h;
  auto pix = [&](int x, int y) { return y * w + x; };

  if (mode == TvMode::anisotropic) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (x + 1 < w) {
          Group g;
          g.L.n = inst.n;
          g.L.edges.push_back({pix(x, y), pix(x + 1, y), l2});
          inst.groups.push_back(std::move(g));
        }
        if (y + 1 < h) {
          Group g;
          g.L.n = inst.n;
          g.L.edges.push_back({pix(x, y), pix(x, y + 1), l2});
          inst.groups.push_back(std::move(g));
        }
      }
    }
  } else {
    // One group per pixel: right and down differences that exist.
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        Group g;
        g.L.n = inst.n;
        if (x + 1 < w) g.L.edges.push_back({pix(x, y), pix(x + 1, y), l2});
        if (y + 1 < h) g.L.edges.push_back({pix(x, y), pix(x, y + 1), l2});
        inst.groups.push_back(std::move(g));
      }
    }
  }
  if (inst.groups.empty()) {  // 1x1 image: no differences
    Group g;
    g.L.n = inst.n;
    g.L.diag.push_back({0, 0.0});
    inst.groups.push_back(std::move(g));
  }
  return inst;
}

Instance multichannel_grid_instance(const Image& img, TvMode mode, double lambda,
                                    bool sqrt_fidelity) {
  if (!(lambda > 0))
    throw std::invalid_argument("multichannel_grid_instance: lambda must be positive");
  const int w = img.width, h = img.height, c = img.channels;
  const std::size_t wh = std::size_t(w) * h;
  // Calibrated so that identical channels reduce exactly to the
  // single-channel model under the matching fidelity form.
  const double we = sqrt_fidelity ? lambda * lambda : lambda * lambda * c;
  Instance inst;
  inst.n = int(wh) * c;
  auto var = [&](int x, int y, int ch) { return int(ch * wh + std::size_t(y) * w + x); };

  auto edge_group = [&](int x0, int y0, int x1, int y1) {
    Group g;
    g.L.n = inst.n;
    for (int ch = 0; ch < c; ++ch)
      g.L.edges.push_back({var(x0, y0, ch), var(x1, y1, ch), we});
    return g;
  };

  if (mode == TvMode::anisotropic) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (x + 1 < w) inst.groups.push_back(edge_group(x, y, x + 1, y));
        if (y + 1 < h) inst.groups.push_back(edge_group(x, y, x, y + 1));
      }
    }
  } else {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        Group g;
        g.L.n = inst.n;
        for (int ch = 0; ch < c; ++ch) {
          if (x + 1 < w) g.L.edges.push_back({var(x, y, ch), var(x + 1, y, ch), we});
          if (y + 1 < h) g.L.edges.push_back({var(x, y, ch), var(x, y + 1, ch), we});
        }
        inst.groups.push_back(std::move(g));
      }
    }
  }
  if (inst.groups.empty()) {
    Group g;
    g.L.n = inst.n;
    g.L.diag.push_back({0, 0.0});
    inst.groups.push_back(std::move(g));
  }
  return inst;
}

namespace {

// Channel-planar flattening of image intensities.
Vec planar_data(const Image& img) {
  const std::size_t wh = img.pixels();
  Vec v(wh * img.channels);
  for (int ch = 0; ch < img.channels; ++ch) {
    for (std::size_t p = 0; p < wh; ++p) v[ch * wh + p] = img.data[p * img.channels + ch];
  }
  return v;
}

Image from_planar(const Vec& x, int w, int h, int c) {
  Image out(w, h, c);
  const std::size_t wh = out.pixels();
  for (int ch = 0; ch < c; ++ch) {
    for (std::size_t p = 0; p < wh; ++p) out.data[p * c + ch] = clamp01(x[ch * wh + p]);
  }
  return out;
}

Image denoise_common(const Image& img, Instance smooth, const Vec& s0,
                     const DenoiseOptions& opt, Solution* info) {
  Solution sol;
  if (opt.sqrt_fidelity) {
    Instance full = smooth;
    Group fid;
    fid.L.n = full.n;
    for (int i = 0; i < full.n; ++i) fid.L.diag.push_back({i, 1.0});
    fid.s = SparseVec::from_dense(s0);
    full.groups.push_back(std::move(fid));
    sol = run_solver(full, opt.solver);
    if (obj(full, s0) < sol.objective) {
      sol.x = s0;
      sol.objective = obj(full, s0);
    }
  } else {
    sol = l22_fidelity_solve(smooth, s0, opt.solver, opt.search_tol);
  }
  Image out = from_planar(sol.x, img.width, img.height, img.channels);
  if (info != nullptr) *info = std::move(sol);
  return out;
}

}  // namespace

Image denoise(const Image& img, TvMode mode, double lambda, const DenoiseOptions& opt,
              Solution* info) {
  if (img.channels != 1) throw std::invalid_argument("denoise: single-channel images only");
  for (double v : img.data) {
    if (v < 0.0 || v > 1.0) throw std::invalid_argument("denoise: intensities must be in [0,1]");
  }
  Instance smooth = grid_instance(img, mode, lambda);
  return denoise_common(img, std::move(smooth), img.data, opt, info);
}

Image denoise_multichannel(const Image& img, TvMode mode, double lambda,
                           const DenoiseOptions& opt, Solution* info) {
  if (img.channels != 3)
    throw std::invalid_argument("denoise_multichannel: three-channel images only");
  Instance smooth = multichannel_grid_instance(img, mode, lambda, opt.sqrt_fidelity);
  return denoise_common(img, std::move(smooth), planar_data(img), opt, info);
}

Image poisson_blend(const Image& src, const Image& dst, const Image& mask, int offset_x,
                    int offset_y) {
  if (mask.channels != 1) throw std::invalid_argument("poisson_blend: mask must be grayscale");
  if (src.width != mask.width || src.height != mask.height)
    throw std::invalid_argument("poisson_blend: src and mask sizes differ");
  if (src.channels != dst.channels)
    throw std::invalid_argument("poisson_blend: channel count mismatch");

  // Region pixels in mask coordinates, row-major.
  std::vector<int> var_of(mask.pixels(), -1);
  std::vector<std::pair<int, int>> region;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (mask.at(x, y) > 0.5) {
        var_of[std::size_t(y) * mask.width + x] = static_cast<int>(region.size());
        region.emplace_back(x, y);
      }
    }
  }
  if (region.empty()) throw std::invalid_argument("poisson_blend: empty mask");
  for (const auto& [x, y] : region) {
    const int dx = x + offset_x, dy = y + offset_y;
    if (dx < 1 || dx >= dst.width - 1 || dy < 1 || dy >= dst.height - 1)
      throw std::invalid_argument("poisson_blend: mask region must be interior to dst");
  }

  const int nvars = static_cast<int>(region.size());
  auto in_region = [&](int x, int y) {
    if (x < 0 || x >= mask.width || y < 0 || y >= mask.height) return -1;
    return var_of[std::size_t(y) * mask.width + x];
  };

  static const int kDx[4] = {1, 0, -1, 0};
  static const int kDy[4] = {0, 1, 0, -1};

  Image out = dst;
  auto solve_channel = [&](int ch) {
    Instance inst;
    inst.n = nvars;
    for (int vi = 0; vi < nvars; ++vi) {
      const auto [x, y] = region[vi];
      for (int dir = 0; dir < 4; ++dir) {
        const int qx = x + kDx[dir], qy = y + kDy[dir];
        const int qv = in_region(qx, qy);
        const bool forward = dir < 2;  // right/down: each internal pair once
        if (qv >= 0) {
          if (!forward) continue;
          Group g;
          g.L.n = nvars;
          g.L.edges.push_back({std::min(vi, qv), std::max(vi, qv), 1.0});
          const double v_pq = src.at(x, y, ch) - src.at(qx, qy, ch);
          if (v_pq != 0.0) g.s = SparseVec::from_pairs({{vi, v_pq}});
          inst.groups.push_back(std::move(g));
        } else {
          // Boundary edge: pin p to the destination value across it plus the
          // source gradient, so a source matching the destination is a fixed
          // point. Neighbors outside the source frame carry no gradient.
          const int bx = x + offset_x + kDx[dir], by = y + offset_y + kDy[dir];
          const bool has_src =
              qx >= 0 && qx < src.width && qy >= 0 && qy < src.height;
          const double v_pq = has_src ? src.at(x, y, ch) - src.at(qx, qy, ch) : 0.0;
          Group g;
          g.L.n = nvars;
          g.L.diag.push_back({vi, 1.0});
          const double pin = dst.at(bx, by, ch) + v_pq;
          if (pin != 0.0) g.s = SparseVec::from_pairs({{vi, pin}});
          inst.groups.push_back(std::move(g));
        }
      }
    }
    QuadMinResult qm = quad_min(inst, Weights::ones(inst.k()), 1e-11);
    return qm.x;
  };

  std::vector<Vec> results(dst.channels);
  const int threads = std::min(env_threads(), dst.channels);
  if (threads > 1) {
    std::vector<std::future<Vec>> futs;
    for (int ch = 0; ch < dst.channels; ++ch)
      futs.push_back(std::async(std::launch::async, solve_channel, ch));
    for (int ch = 0; ch < dst.channels; ++ch) results[ch] = futs[ch].get();
  } else {
    for (int ch = 0; ch < dst.channels; ++ch) results[ch] = solve_channel(ch);
  }
  for (int ch = 0; ch < dst.channels; ++ch) {
    for (int vi = 0; vi < nvars; ++vi) {
      const auto [x, y] = region[vi];
      out.at(x + offset_x, y + offset_y, ch) = clamp01(results[ch][vi]);
    }
  }
  return out;
}

namespace {

struct PbmReader {
  const std::string& bytes;
  std::size_t pos = 0;
  explicit PbmReader(const std::string& b) : bytes(b) {}

  void skip_space_and_comments() {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
        ++pos;
      } else {
        break;
      }
    }
  }

  int next_int(const char* what) {
    skip_space_and_comments();
    if (pos >= bytes.size()) throw std::invalid_argument(std::string("netpbm: missing ") + what);
    int v = 0;
    bool any = false;
    while (pos < bytes.size() && bytes[pos] >= '0' && bytes[pos] <= '9') {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
      any = true;
      if (v > 1 << 28) throw std::invalid_argument("netpbm: value overflow");
    }
    if (!any) throw std::invalid_argument(std::string("netpbm: malformed ") + what);
    return v;
  }
};

}  // namespace

Image read_netpbm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P')
    throw std::invalid_argument("netpbm: missing magic number");
  const char kind = bytes[1];
  if (kind != '2' && kind != '3' && kind != '5' && kind != '6')
    throw std::invalid_argument("netpbm: unsupported format (want P2/P3/P5/P6)");
  const bool binary = kind == '5' || kind == '6';
  const int channels = (kind == '3' || kind == '6') ? 3 : 1;

  PbmReader rd(bytes);
  rd.pos = 2;
  const int w = rd.next_int("width");
  const int h = rd.next_int("height");
  const int maxval = rd.next_int("maxval");
  if (w < 1 || h < 1) throw std::invalid_argument("netpbm: bad dimensions");
  if (maxval < 1 || maxval > 65535) throw std::invalid_argument("netpbm: bad maxval");

  Image img(w, h, channels);
  const std::size_t count = img.pixels() * channels;
  if (binary) {
    if (rd.pos >= bytes.size()) throw std::invalid_argument("netpbm: truncated raster");
    ++rd.pos;  // single whitespace byte after maxval
    const int bpc = maxval > 255 ? 2 : 1;
    if (bytes.size() - rd.pos < count * bpc)
      throw std::invalid_argument("netpbm: truncated raster");
    for (std::size_t i = 0; i < count; ++i) {
      int v;
      if (bpc == 1) {
        v = static_cast<unsigned char>(bytes[rd.pos + i]);
      } else {
        v = (static_cast<unsigned char>(bytes[rd.pos + 2 * i]) << 8) |
            static_cast<unsigned char>(bytes[rd.pos + 2 * i + 1]);
      }
      img.data[i] = clamp01(double(v) / maxval);
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const int v = rd.next_int("sample");
      img.data[i] = clamp01(double(v) / maxval);
    }
  }
  return img;
}

std::string write_netpbm(const Image& img, int format, int maxval) {
  if (maxval < 1 || maxval > 65535) throw std::invalid_argument("netpbm: bad maxval");
  const bool color = format == 3 || format == 6;
  const bool binary = format == 5 || format == 6;
  if (format != 2 && format != 3 && format != 5 && format != 6)
    throw std::invalid_argument("netpbm: format must be one of 2, 3, 5, 6");
  if (color != (img.channels == 3))
    throw std::invalid_argument("netpbm: channel count does not match format");

  std::string out = "P" + std::to_string(format) + "\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n" + std::to_string(maxval) + "\n";
  const std::size_t count = img.pixels() * img.channels;
  auto quantize = [&](double v) {
    const long q = std::lround(clamp01(v) * maxval);
    return static_cast<int>(std::clamp(q, 0l, long(maxval)));
  };
  if (binary) {
    for (std::size_t i = 0; i < count; ++i) {
      const int v = quantize(img.data[i]);
      if (maxval > 255) {
        out.push_back(static_cast<char>((v >> 8) & 0xff));
        out.push_back(static_cast<char>(v & 0xff));
      } else {
        out.push_back(static_cast<char>(v & 0xff));
      }
    }
  } else {
    int on_line = 0;
    for (std::size_t i = 0; i < count; ++i) {
      out += std::to_string(quantize(img.data[i]));
      if (++on_line == 12) {
        out.push_back('\n');
        on_line = 0;
      } else {
        out.push_back(' ');
      }
    }
    if (on_line != 0) out.push_back('\n');
  }
  return out;
}

Image synthetic_test_image(int width, int height) {
  Image img(width, height, 1, 0.25);
  for (int y = height / 4; y < height / 2; ++y) {
    for (int x = width / 4; x < width / 2; ++x) img.at(x, y) = 0.85;
  }
  const double cx = 0.7 * width, cy = 0.3 * height;
  const double r = std::min(width, height) / 6.0;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double dx = x - cx, dy = y - cy;
      if (dx * dx + dy * dy <= r * r) img.at(x, y) = 0.6;
    }
  }
  return img;
}

void add_gaussian_noise(Image& img, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  for (double& v : img.data) v = clamp01(v + sigma * rng.normal());
}

}  // namespace gls
