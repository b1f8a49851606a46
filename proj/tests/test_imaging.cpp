#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gls/imaging.hpp"
#include "gls/modeling.hpp"
#include "gls/rng.hpp"
#include "support/oracles.hpp"

using gls::Image;
using gls::Instance;
using gls::TvMode;
using gls::Vec;

namespace {

gls::SolverChoice ipm_choice(double eps) {
  gls::SolverChoice c;
  c.kind = gls::SolverChoice::Kind::ipm;
  c.eps = eps;
  return c;
}

Image random_image(gls::Rng& rng, int w, int h, int c) {
  Image img(w, h, c);
  for (double& v : img.data) v = rng.uniform(0.0, 1.0);
  return img;
}

double tv_aniso(const Image& img, const Vec& x) {
  double acc = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int xx = 0; xx < img.width; ++xx) {
      const int p = y * img.width + xx;
      if (xx + 1 < img.width) acc += std::abs(x[p] - x[p + 1]);
      if (y + 1 < img.height) acc += std::abs(x[p] - x[p + img.width]);
    }
  }
  return acc;
}

}  // namespace

TEST_CASE("grid_instance structure") {
  SUBCASE("1x2 anisotropic: one group, one edge") {
    Image img(2, 1, 1);
    Instance inst = gls::grid_instance(img, TvMode::anisotropic, 1.0);
    CHECK(inst.k() == 1);
    CHECK(inst.groups[0].L.edges.size() == 1);
  }
  SUBCASE("2x2 isotropic: per-pixel groups with (2,1,1,0) edges") {
    Image img(2, 2, 1);
    Instance inst = gls::grid_instance(img, TvMode::isotropic, 1.0);
    REQUIRE(inst.k() == 4);
    CHECK(inst.groups[0].L.edges.size() == 2);
    CHECK(inst.groups[1].L.edges.size() == 1);
    CHECK(inst.groups[2].L.edges.size() == 1);
    CHECK(inst.groups[3].L.edges.size() == 0);
  }
  SUBCASE("3x3 counts") {
    Image img(3, 3, 1);
    Instance aniso = gls::grid_instance(img, TvMode::anisotropic, 1.0);
    CHECK(aniso.k() == 12);
    std::size_t edges = 0;
    for (const auto& g : aniso.groups) edges += g.L.edges.size();
    CHECK(edges == 12);
    Instance iso = gls::grid_instance(img, TvMode::isotropic, 1.0);
    CHECK(iso.k() == 9);
    edges = 0;
    for (const auto& g : iso.groups) edges += g.L.edges.size();
    CHECK(edges == 12);
  }
  SUBCASE("multichannel input is rejected") {
    Image img(2, 2, 3);
    CHECK_THROWS_AS(gls::grid_instance(img, TvMode::anisotropic, 1.0), std::invalid_argument);
  }
}

TEST_CASE("objective identities on the grid") {
  gls::Rng rng(3);
  Image img = random_image(rng, 4, 3, 1);
  const double lambda = 0.37;
  SUBCASE("anisotropic equals lambda * sum of absolute differences") {
    Instance inst = gls::grid_instance(img, TvMode::anisotropic, lambda);
    for (int trial = 0; trial < 10; ++trial) {
      Vec x(12);
      for (double& v : x) v = rng.uniform(-1.0, 2.0);
      CHECK(gls::obj(inst, x) == doctest::Approx(lambda * tv_aniso(img, x)).epsilon(1e-10));
    }
  }
  SUBCASE("isotropic equals the grouped square roots") {
    Instance inst = gls::grid_instance(img, TvMode::isotropic, lambda);
    for (int trial = 0; trial < 10; ++trial) {
      Vec x(12);
      for (double& v : x) v = rng.uniform(-1.0, 2.0);
      double want = 0;
      for (int y = 0; y < 3; ++y) {
        for (int xx = 0; xx < 4; ++xx) {
          const int p = y * 4 + xx;
          double q = 0;
          if (xx + 1 < 4) q += (x[p] - x[p + 1]) * (x[p] - x[p + 1]);
          if (y + 1 < 3) q += (x[p] - x[p + 4]) * (x[p] - x[p + 4]);
          want += lambda * std::sqrt(q);
        }
      }
      CHECK(gls::obj(inst, x) == doctest::Approx(want).epsilon(1e-10));
    }
  }
  SUBCASE("single-row image: isotropic and anisotropic objectives coincide") {
    Image row = random_image(rng, 6, 1, 1);
    Instance iso = gls::grid_instance(row, TvMode::isotropic, lambda);
    Instance aniso = gls::grid_instance(row, TvMode::anisotropic, lambda);
    for (int trial = 0; trial < 10; ++trial) {
      Vec x(6);
      for (double& v : x) v = rng.uniform(-1.0, 2.0);
      CHECK(gls::obj(iso, x) == doctest::Approx(gls::obj(aniso, x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("denoise") {
  gls::Rng rng(44);
  SUBCASE("constant image is a fixed point") {
    Image img(5, 4, 1, 0.6);
    gls::DenoiseOptions opt;
    opt.solver = ipm_choice(1e-6);
    Image out = gls::denoise(img, TvMode::isotropic, 0.5, opt);
    for (std::size_t i = 0; i < img.data.size(); ++i)
      CHECK(out.data[i] == doctest::Approx(0.6).epsilon(1e-9));
  }
  SUBCASE("tiny lambda returns the input") {
    Image img = random_image(rng, 5, 5, 1);
    gls::DenoiseOptions opt;
    opt.solver = ipm_choice(1e-8);
    opt.search_tol = 1e-5;
    Image out = gls::denoise(img, TvMode::anisotropic, 1e-5, opt);
    for (std::size_t i = 0; i < img.data.size(); ++i)
      CHECK(std::abs(out.data[i] - img.data[i]) <= 1e-3);
  }
  SUBCASE("model objective never exceeds the input's") {
    Image img = random_image(rng, 6, 6, 1);
    Instance smooth = gls::grid_instance(img, TvMode::isotropic, 0.3);
    for (bool sqrt_fid : {false, true}) {
      CAPTURE(sqrt_fid);
      gls::DenoiseOptions opt;
      opt.solver = ipm_choice(1e-6);
      opt.sqrt_fidelity = sqrt_fid;
      Image out = gls::denoise(img, TvMode::isotropic, 0.3, opt);
      double q = 0;
      for (std::size_t i = 0; i < img.data.size(); ++i)
        q += (out.data[i] - img.data[i]) * (out.data[i] - img.data[i]);
      const double fid = sqrt_fid ? std::sqrt(q) : q;
      const double out_obj = gls::obj(smooth, out.data) + fid;
      const double in_obj = gls::obj(smooth, img.data);  // fidelity vanishes at the input
      CHECK(out_obj <= in_obj + 1e-9);
    }
  }
}

TEST_CASE("multichannel denoise") {
  gls::Rng rng(55);
  SUBCASE("2x2 anisotropic RGB: four groups of three channel edges") {
    Image img(2, 2, 3);
    Instance inst = gls::multichannel_grid_instance(img, TvMode::anisotropic, 1.0, true);
    REQUIRE(inst.k() == 4);
    for (const auto& g : inst.groups) CHECK(g.L.edges.size() == 3);
  }
  SUBCASE("replicated gray image matches the single-channel result") {
    Image gray = random_image(rng, 5, 4, 1);
    Image rgb(5, 4, 3);
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 5; ++x) {
        for (int c = 0; c < 3; ++c) rgb.at(x, y, c) = gray.at(x, y);
      }
    }
    for (bool sqrt_fid : {true, false}) {
      CAPTURE(sqrt_fid);
      gls::DenoiseOptions opt;
      opt.solver = ipm_choice(1e-9);
      opt.sqrt_fidelity = sqrt_fid;
      opt.search_tol = 1e-5;
      Image single = gls::denoise(gray, TvMode::anisotropic, 0.4, opt);
      Image multi = gls::denoise_multichannel(rgb, TvMode::anisotropic, 0.4, opt);
      for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 5; ++x) {
          for (int c = 0; c < 3; ++c) {
            CHECK(std::abs(multi.at(x, y, c) - single.at(x, y)) <= 1e-6);
          }
        }
      }
    }
  }
  SUBCASE("channel count is enforced") {
    Image img(3, 3, 1);
    CHECK_THROWS_AS(gls::denoise_multichannel(img, TvMode::isotropic, 0.2, {}),
                    std::invalid_argument);
  }
}

TEST_CASE("poisson blend") {
  SUBCASE("zero guidance with constant boundary fills the region with the constant") {
    Image src(6, 6, 1, 0.3);  // constant source: zero gradients
    Image dst(10, 10, 1, 0.7);
    Image mask(6, 6, 1, 0.0);
    for (int y = 1; y < 5; ++y) {
      for (int x = 1; x < 5; ++x) mask.at(x, y) = 1.0;
    }
    Image out = gls::poisson_blend(src, dst, mask, 2, 2);
    for (std::size_t i = 0; i < out.data.size(); ++i)
      CHECK(out.data[i] == doctest::Approx(0.7).epsilon(1e-7));
  }
  SUBCASE("source equal to destination is a no-op") {
    gls::Rng rng(66);
    Image dst = random_image(rng, 8, 8, 1);
    Image src(4, 4, 1);
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) src.at(x, y) = dst.at(x + 2, y + 2);
    }
    Image mask(4, 4, 1, 1.0);
    Image out = gls::poisson_blend(src, dst, mask, 2, 2);
    for (std::size_t i = 0; i < out.data.size(); ++i)
      CHECK(out.data[i] == doctest::Approx(dst.data[i]).epsilon(1e-8).scale(1.0));
  }
  SUBCASE("8x8 random case matches the dense normal equations") {
    gls::Rng rng(77);
    Image src = random_image(rng, 8, 8, 1);
    Image dst = random_image(rng, 8, 8, 1);
    Image mask(8, 8, 1, 0.0);
    for (int y = 2; y < 6; ++y) {
      for (int x = 2; x < 6; ++x) mask.at(x, y) = 1.0;
    }
    Image out = gls::poisson_blend(src, dst, mask, 0, 0);

    // Independent assembly over the same row-major region ordering.
    std::vector<std::pair<int, int>> region;
    std::vector<int> var_of(64, -1);
    for (int y = 0; y < 8; ++y) {
      for (int x = 0; x < 8; ++x) {
        if (mask.at(x, y) > 0.5) {
          var_of[y * 8 + x] = static_cast<int>(region.size());
          region.emplace_back(x, y);
        }
      }
    }
    const int nv = static_cast<int>(region.size());
    std::vector<Vec> a(nv, Vec(nv, 0.0));
    Vec b(nv, 0.0);
    const int dx4[4] = {1, 0, -1, 0}, dy4[4] = {0, 1, 0, -1};
    for (int vi = 0; vi < nv; ++vi) {
      const auto [x, y] = region[vi];
      for (int dir = 0; dir < 4; ++dir) {
        const int qx = x + dx4[dir], qy = y + dy4[dir];
        const int qv = (qx >= 0 && qx < 8 && qy >= 0 && qy < 8) ? var_of[qy * 8 + qx] : -1;
        if (qv >= 0) {
          a[vi][vi] += 1.0;
          a[vi][qv] -= 1.0;
          b[vi] += src.at(x, y) - src.at(qx, qy);
        } else {
          a[vi][vi] += 1.0;
          b[vi] += dst.at(qx, qy) + src.at(x, y) - src.at(qx, qy);
        }
      }
    }
    Vec want;
    REQUIRE(oracle::gauss_solve(a, b, want));
    for (int vi = 0; vi < nv; ++vi) {
      const auto [x, y] = region[vi];
      CHECK(out.at(x, y) == doctest::Approx(std::clamp(want[vi], 0.0, 1.0)).epsilon(1e-6));
    }
  }
  SUBCASE("non-interior or empty masks are rejected") {
    Image src(4, 4, 1, 0.5), dst(8, 8, 1, 0.5);
    Image empty(4, 4, 1, 0.0);
    CHECK_THROWS_AS(gls::poisson_blend(src, dst, empty, 0, 0), std::invalid_argument);
    Image full(4, 4, 1, 1.0);
    CHECK_THROWS_AS(gls::poisson_blend(src, dst, full, -1, 2), std::invalid_argument);
    CHECK_THROWS_AS(gls::poisson_blend(src, dst, full, 5, 2), std::invalid_argument);
  }
}

TEST_CASE("netpbm") {
  SUBCASE("tiny ascii gray") {
    Image img = gls::read_netpbm("P2 1 1 255\n255\n");
    CHECK(img.width == 1);
    CHECK(img.height == 1);
    CHECK(img.channels == 1);
    CHECK(img.data[0] == doctest::Approx(1.0));
  }
  SUBCASE("ascii and binary gray agree") {
    gls::Rng rng(13);
    Image img = random_image(rng, 7, 5, 1);
    Image a = gls::read_netpbm(gls::write_netpbm(img, 2));
    Image b = gls::read_netpbm(gls::write_netpbm(img, 5));
    REQUIRE(a.data.size() == b.data.size());
    for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
  }
  SUBCASE("16x16 color binary round trip stays within the quantization bound") {
    gls::Rng rng(14);
    Image img = random_image(rng, 16, 16, 3);
    Image back = gls::read_netpbm(gls::write_netpbm(img, 6, 255));
    double max_err = 0;
    for (std::size_t i = 0; i < img.data.size(); ++i)
      max_err = std::max(max_err, std::abs(back.data[i] - img.data[i]));
    CHECK(max_err <= 1.0 / 510.0 + 1e-12);
  }
  SUBCASE("16-bit rasters") {
    gls::Rng rng(15);
    Image img = random_image(rng, 6, 4, 1);
    Image back = gls::read_netpbm(gls::write_netpbm(img, 5, 65535));
    for (std::size_t i = 0; i < img.data.size(); ++i)
      CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5 / 65535.0 + 1e-12);
  }
  SUBCASE("header comments") {
    Image img = gls::read_netpbm("P2 # format\n# size next\n2 1\n255\n0 128\n");
    CHECK(img.width == 2);
    CHECK(img.data[1] == doctest::Approx(128.0 / 255.0));
  }
  SUBCASE("malformed input") {
    CHECK_THROWS_AS(gls::read_netpbm("P7 1 1 255\n0"), std::invalid_argument);
    CHECK_THROWS_AS(gls::read_netpbm("P5 4 4 255\nxx"), std::invalid_argument);
    CHECK_THROWS_AS(gls::read_netpbm("P2 1 1 0\n0\n"), std::invalid_argument);
    CHECK_THROWS_AS(gls::read_netpbm(""), std::invalid_argument);
  }
}

TEST_CASE("synthetic pattern is deterministic and noise is seeded") {
  Image a = gls::synthetic_test_image(32, 32);
  Image b = gls::synthetic_test_image(32, 32);
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
  gls::add_gaussian_noise(a, 0.25, 42);
  gls::add_gaussian_noise(b, 0.25, 42);
  for (std::size_t i = 0; i < a.data.size(); ++i) CHECK(a.data[i] == b.data[i]);
  Image c = gls::synthetic_test_image(32, 32);
  gls::add_gaussian_noise(c, 0.25, 43);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.data.size(); ++i) any_diff |= a.data[i] != c.data[i];
  CHECK(any_diff);
}
