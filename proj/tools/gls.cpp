// Command-line front end: solvers, graph reductions and imaging over the
// text formats documented in the README.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "gls/gen.hpp"
#include "gls/imaging.hpp"
#include "gls/instance_io.hpp"
#include "gls/ipm.hpp"
#include "gls/modeling.hpp"
#include "gls/mw.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitSolver = 3;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

void write_trace(const std::string& path, const gls::Solution& sol) {
  std::string out = "# solver " + sol.solver_tag + "\n# columns";
  for (const std::string& c : sol.trace_columns) out += " " + c;
  out += "\n";
  for (const gls::Vec& row : sol.trace) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += " ";
      out += fmt(row[i]);
    }
    out += "\n";
  }
  spit(path, out);
}

gls::SolverChoice make_choice(const std::string& solver, double eps, bool strict) {
  gls::SolverChoice c;
  c.kind = solver == "ipm" ? gls::SolverChoice::Kind::ipm : gls::SolverChoice::Kind::mw;
  c.eps = eps;
  c.strict = strict;
  return c;
}

gls::TvMode parse_mode(const std::string& mode) {
  return mode == "iso" ? gls::TvMode::isotropic : gls::TvMode::anisotropic;
}

bool integral_values(const gls::WeightedGraph& g) {
  for (const auto& e : g.edges) {
    if (e.value != std::floor(e.value)) return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grouped least squares solvers, graph reductions and imaging"};
  app.require_subcommand(1);

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "solve an instance file");
  std::string solve_file, solve_solver = "mw", solve_trace, solve_out;
  double solve_eps = 0.1;
  bool solve_strict = false;
  solve_cmd->add_option("instance", solve_file)->required();
  solve_cmd->add_option("--solver", solve_solver)->check(CLI::IsMember({"mw", "ipm"}));
  solve_cmd->add_option("--eps", solve_eps);
  solve_cmd->add_flag("--strict", solve_strict);
  solve_cmd->add_option("--trace", solve_trace);
  solve_cmd->add_option("--out", solve_out, "write the minimizer, one value per line");

  // denoise
  auto* den_cmd = app.add_subcommand("denoise", "total-variation denoise a netpbm image");
  std::string den_in, den_out, den_mode = "iso", den_solver = "mw", den_trace;
  double den_lambda = 0.1, den_eps = 0.1, den_tol = 1e-3;
  bool den_sqrt = false;
  den_cmd->add_option("input", den_in)->required();
  den_cmd->add_option("output", den_out)->required();
  den_cmd->add_option("--lambda", den_lambda)->required();
  den_cmd->add_option("--mode", den_mode)->check(CLI::IsMember({"iso", "aniso"}));
  den_cmd->add_option("--solver", den_solver)->check(CLI::IsMember({"mw", "ipm"}));
  den_cmd->add_option("--eps", den_eps);
  den_cmd->add_option("--search-tol", den_tol);
  den_cmd->add_flag("--sqrt-fidelity", den_sqrt);
  den_cmd->add_option("--trace", den_trace);

  // blend
  auto* blend_cmd = app.add_subcommand("blend", "gradient-domain blend src into dst");
  std::string bl_src, bl_dst, bl_mask, bl_out, bl_offset = "0,0";
  blend_cmd->add_option("src", bl_src)->required();
  blend_cmd->add_option("dst", bl_dst)->required();
  blend_cmd->add_option("mask", bl_mask)->required();
  blend_cmd->add_option("output", bl_out)->required();
  blend_cmd->add_option("--offset", bl_offset, "X,Y placement of the mask in dst");

  // shortest-path
  auto* sp_cmd = app.add_subcommand("shortest-path", "s-t distance via the flow encoding");
  std::string sp_file;
  int sp_s = 0, sp_t = 0;
  double sp_penalty = 0, sp_eps = 0.25;
  sp_cmd->add_option("graph", sp_file)->required();
  sp_cmd->add_option("--s", sp_s)->required();
  sp_cmd->add_option("--t", sp_t)->required();
  sp_cmd->add_option("--penalty", sp_penalty);
  sp_cmd->add_option("--eps", sp_eps);

  // mincut
  auto* mc_cmd = app.add_subcommand("mincut", "s-t minimum cut via the fused encoding");
  std::string mc_file;
  int mc_s = 0, mc_t = 0;
  double mc_eps = 0.25;
  mc_cmd->add_option("graph", mc_file)->required();
  mc_cmd->add_option("--s", mc_s)->required();
  mc_cmd->add_option("--t", mc_t)->required();
  mc_cmd->add_option("--eps", mc_eps);

  // cluster
  auto* cl_cmd = app.add_subcommand("cluster", "convex clustering of a point set");
  std::string cl_file;
  double cl_lambda = 1.0, cl_eps = 1e-4, cl_tol = 1e-4;
  cl_cmd->add_option("points", cl_file)->required();
  cl_cmd->add_option("--lambda", cl_lambda)->required();
  cl_cmd->add_option("--eps", cl_eps);
  cl_cmd->add_option("--search-tol", cl_tol);

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "emit a deterministic instance file");
  std::string gen_kind = "random", gen_out, gen_mode = "iso";
  int gen_n = 10, gen_k = 3, gen_seed = 1;
  double gen_lambda = 0.1;
  gen_cmd->add_option("--kind", gen_kind)->check(CLI::IsMember({"tv", "random"}));
  gen_cmd->add_option("--n", gen_n);
  gen_cmd->add_option("--k", gen_k);
  gen_cmd->add_option("--seed", gen_seed);
  gen_cmd->add_option("--lambda", gen_lambda);
  gen_cmd->add_option("--mode", gen_mode)->check(CLI::IsMember({"iso", "aniso"}));
  gen_cmd->add_option("--out", gen_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*solve_cmd) {
      gls::Instance inst = gls::parse_instance(slurp(solve_file));
      gls::Solution sol = gls::run_solver(inst, make_choice(solve_solver, solve_eps, solve_strict));
      std::cout << "objective " << fmt(sol.objective) << "\n";
      std::cout << "iterations " << sol.iterations << "\n";
      if (!solve_trace.empty()) write_trace(solve_trace, sol);
      if (!solve_out.empty()) {
        std::string out;
        for (double v : sol.x) out += fmt(v) + "\n";
        spit(solve_out, out);
      }
    } else if (*den_cmd) {
      gls::Image img = gls::read_netpbm(slurp(den_in));
      gls::DenoiseOptions opt;
      opt.solver = make_choice(den_solver, den_eps, false);
      opt.sqrt_fidelity = den_sqrt;
      opt.search_tol = den_tol;
      gls::Solution info;
      gls::Image out = img.channels == 3
                           ? gls::denoise_multichannel(img, parse_mode(den_mode), den_lambda, opt, &info)
                           : gls::denoise(img, parse_mode(den_mode), den_lambda, opt, &info);
      spit(den_out, gls::write_netpbm(out, img.channels == 3 ? 6 : 5));
      std::cout << "objective " << fmt(info.objective) << "\n";
      std::cout << "iterations " << info.iterations << "\n";
      if (!den_trace.empty()) write_trace(den_trace, info);
    } else if (*blend_cmd) {
      int ox = 0, oy = 0;
      if (std::sscanf(bl_offset.c_str(), "%d,%d", &ox, &oy) != 2) {
        std::cerr << "error: --offset expects X,Y\n";
        return kExitUsage;
      }
      gls::Image src = gls::read_netpbm(slurp(bl_src));
      gls::Image dst = gls::read_netpbm(slurp(bl_dst));
      gls::Image mask = gls::read_netpbm(slurp(bl_mask));
      gls::Image out = gls::poisson_blend(src, dst, mask, ox, oy);
      spit(bl_out, gls::write_netpbm(out, out.channels == 3 ? 6 : 5));
      std::cout << "blended " << out.width << "x" << out.height << "\n";
    } else if (*sp_cmd) {
      gls::WeightedGraph g = gls::parse_graph(slurp(sp_file));
      gls::ShortestPathEncoding enc = gls::shortest_path_instance(g, sp_s, sp_t, sp_penalty);
      gls::IpmConfig cfg;
      cfg.eps = sp_eps;
      gls::Solution sol = gls::solve_ipm(enc.inst, cfg);
      const double raw = enc.decode(sol.x);
      if (integral_values(g)) {
        std::cout << "distance " << std::llround(raw) << " raw " << fmt(raw) << "\n";
      } else {
        std::cout << "distance " << fmt(raw) << "\n";
      }
    } else if (*mc_cmd) {
      gls::WeightedGraph g = gls::parse_graph(slurp(mc_file));
      gls::MincutEncoding enc = gls::mincut_instance(g, mc_s, mc_t);
      gls::IpmConfig cfg;
      cfg.eps = mc_eps;
      gls::Solution sol = gls::solve_ipm(enc.inst, cfg);
      gls::MincutEncoding::Decoded dec = enc.decode(sol.x);
      if (integral_values(g)) {
        std::cout << "cut " << std::llround(dec.value) << " raw " << fmt(dec.value) << "\n";
      } else {
        std::cout << "cut " << fmt(dec.value) << "\n";
      }
      std::cout << "source";
      for (int v = 0; v < g.n; ++v) {
        if (dec.side[v] == 0) std::cout << " " << v;
      }
      std::cout << "\nsink";
      for (int v = 0; v < g.n; ++v) {
        if (dec.side[v] == 1) std::cout << " " << v;
      }
      std::cout << "\n";
    } else if (*cl_cmd) {
      gls::PointSet ps = gls::parse_points(slurp(cl_file));
      gls::SolverChoice choice = make_choice("ipm", cl_eps, false);
      std::vector<gls::Vec> centers = gls::solve_clustering(ps, cl_lambda, choice, cl_tol);
      for (const gls::Vec& c : centers) {
        for (std::size_t a = 0; a < c.size(); ++a) {
          if (a > 0) std::cout << " ";
          std::cout << fmt(c[a]);
        }
        std::cout << "\n";
      }
    } else if (*gen_cmd) {
      gls::Instance inst;
      if (gen_kind == "tv") {
        inst = gls::gen_tv_instance(std::uint64_t(gen_seed), gen_n, gen_lambda,
                                    parse_mode(gen_mode));
      } else {
        gls::GenOptions opt;
        opt.n = gen_n;
        opt.k = gen_k;
        opt.ensure_anchor = true;
        inst = gls::gen_random_instance(std::uint64_t(gen_seed), opt);
      }
      const std::string text = gls::serialize_instance(inst);
      if (gen_out.empty()) {
        std::cout << text;
      } else {
        spit(gen_out, text);
      }
    }
  } catch (const gls::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitIo;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const gls::SolveError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
  return 0;
}
