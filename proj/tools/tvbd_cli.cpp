// tvbd: command-line front end.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tvbd/alternating.hpp"
#include "tvbd/deblur.hpp"
#include "tvbd/evalharness.hpp"
#include "tvbd/landscape.hpp"
#include "tvbd/pnm.hpp"
#include "tvbd/text_io.hpp"
#include "tvbd/tv1d.hpp"

using namespace tvbd;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot create '" + path + "'");
  return os;
}

/// "HxW" or a single odd number.
std::pair<int, int> parse_size(const std::string& s) {
  const auto x = s.find_first_of("xX");
  try {
    if (x == std::string::npos) {
      const int n = std::stoi(s);
      return {n, n};
    }
    return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
  } catch (const std::exception&) {
    throw DomainError("bad size '" + s + "', expected HxW");
  }
}

ColorMode parse_color(const std::string& s) {
  if (s == "gray") return ColorMode::grayscale;
  if (s == "coupled") return ColorMode::coupled_color;
  throw DomainError("unknown colour mode '" + s + "'");
}

struct DeblurArgs {
  std::string input, output = "restored.pgm", kernel_out = "kernel.txt", energy_csv;
  std::string kernel_size = "9x9", boundary = "free", color = "gray";
  DeblurConfig cfg;
};

void run_deblur(const DeblurArgs& a) {
  DeblurConfig cfg = a.cfg;
  const auto [kh, kw] = parse_size(a.kernel_size);
  cfg.kernel_height = kh;
  cfg.kernel_width = kw;
  cfg.boundary = parse_boundary_mode(a.boundary);
  cfg.color_mode = parse_color(a.color);
  const Image f = read_pnm(a.input);
  const auto res = deblur_blind(f, cfg, [](const IterationLog& e, const Image&, const Kernel&) {
    if (e.iteration == 0) std::fprintf(stderr, "level %d\n", e.level);
  });
  write_pnm(a.output, res.u);
  write_kernel(a.kernel_out, res.k);
  if (!a.energy_csv.empty()) {
    auto os = open_out(a.energy_csv);
    write_energy_csv(os, res.log);
  }
}

struct NonblindArgs {
  std::string input, kernel, output = "restored.pgm", boundary = "free";
  double lambda = 0.0068;
};

void run_nonblind(const NonblindArgs& a) {
  NonblindOptions opt;
  opt.boundary = parse_boundary_mode(a.boundary);
  const Image u = deblur_nonblind(read_pnm(a.input), read_kernel(a.kernel), a.lambda, opt);
  write_pnm(a.output, u);
}

struct Denoise1dArgs {
  std::string input, output;
  double lambda = 0.1;
};

void run_denoise1d(const Denoise1dArgs& a) {
  const auto f = read_signal_csv(a.input);
  if (f.empty()) throw DimensionError("denoise1d: empty signal");
  const auto u = tv_denoise(f, a.lambda);
  if (a.output.empty()) write_signal_csv(std::cout, u);
  else write_signal_csv(a.output, u);
}

struct LandscapeArgs {
  std::string mode = "min-u", input, output = "landscape.csv", heatmap, path_csv;
  std::vector<double> step{-0.5, 0.5, 10, 10}, blur{0.4, 0.3}, norms{1.0, 1.5, 2.5}, start;
  double lambda = 0.01;
  int resolution = 101;
};

void run_landscape(const LandscapeArgs& a) {
  Signal f;
  if (!a.input.empty()) {
    f.values = read_signal_csv(a.input);
  } else {
    if (a.step.size() != 4 || a.blur.size() != 2) throw DomainError("landscape: bad --step/--blur");
    const StepSignal s{a.step[0], a.step[1], static_cast<int>(a.step[2]),
                       static_cast<int>(a.step[3])};
    f = blur_step(s, Blur3{a.blur[0], a.blur[1]});
  }
  std::vector<SimplexGrid> grids;
  if (a.mode == "min-u") {
    LandscapeOptions opt;
    opt.resolution = a.resolution;
    LandscapeStats st;
    grids.push_back(landscape_min_u(f, a.lambda, opt, &st));
    std::fprintf(stderr, "invalid cells %d, cold-start rechecks %d, largest gap %.3g\n",
                 st.invalid_cells, st.rechecked, st.max_recheck_gap);
  } else if (a.mode == "fixed-u") {
    grids = landscape_fixed_u(f, a.lambda, a.norms, a.resolution);
  } else {
    throw DomainError("landscape: --mode must be min-u or fixed-u");
  }
  {
    auto os = open_out(a.output);
    write_landscape_csv(os, grids);
  }
  if (!a.heatmap.empty()) {
    // several norms are stacked vertically
    const int r = a.resolution;
    Image all(r, r * static_cast<int>(grids.size()));
    for (std::size_t g = 0; g < grids.size(); ++g) {
      const Image h = landscape_heatmap(grids[g]);
      for (int y = 0; y < r; ++y)
        for (int x = 0; x < r; ++x) all(x, static_cast<int>(g) * r + y) = h(x, y);
    }
    write_pnm(a.heatmap, all);
  }
  if (!a.path_csv.empty()) {
    const Blur3 start = a.start.size() == 2 ? Blur3{a.start[0], a.start[1]} : Blur3{1.0, 0.0};
    const auto path = pam_path_overlay(f, a.lambda, start);
    auto os = open_out(a.path_csv);
    os << "iteration,delta1,delta2,energy\n" << std::setprecision(12);
    for (std::size_t i = 0; i < path.size(); ++i)
      os << i << ',' << path[i].delta1 << ',' << path[i].delta2 << ',' << path[i].energy << '\n';
  }
}

struct EvalArgs {
  int cases = 20;
  unsigned seed = 2024;
  double noise = 0.0;
  std::vector<std::string> modes{"free", "symmetric", "periodic", "replicate"};
  std::string filtered = "both", output = "ratios.csv", histogram = "histogram.csv";
  int iters = 1000;
  int max_bin = 10;
};

void run_eval(const EvalArgs& a) {
  const auto cases = make_cases(a.cases, a.seed, a.noise);
  AblationOptions opt;
  opt.deblur.max_iters_per_level = a.iters;
  const auto refs = reference_ssds(cases, opt.ratio);
  std::vector<int> flags;
  if (a.filtered == "no" || a.filtered == "both") flags.push_back(0);
  if (a.filtered == "yes" || a.filtered == "both") flags.push_back(1);
  if (flags.empty()) throw DomainError("eval: --filtered must be no, yes or both");
  std::vector<ErrorRatioReport> reps;
  for (int filt : flags)
    for (const auto& m : a.modes) {
      reps.push_back(run_configuration(cases, parse_boundary_mode(m), filt, opt, refs));
      const auto& r = reps.back();
      std::fprintf(stderr, "%s filtered=%d: ratio<3 on %.0f%%\n",
                   std::string(to_string(r.mode)).c_str(), filt, 100 * r.fraction_below(3.0));
      for (const auto& msg : r.failures) std::fprintf(stderr, "  %s\n", msg.c_str());
    }
  auto os = open_out(a.output);
  write_ratio_csv(os, reps);
  auto hs = open_out(a.histogram);
  write_histogram_csv(hs, reps, a.max_bin);
}

struct TheoremArgs {
  int which = 4, count = 100;
  unsigned seed = 2024;
  std::string output = "theorem.csv", zero_mean = "full";
  int taps = 5;
};

void run_theorem(const TheoremArgs& a) {
  TheoremOptions opt;
  opt.pam_taps = a.taps;
  if (a.zero_mean == "full") opt.zero_mean = ZeroMean::full_support;
  else if (a.zero_mean == "interior") opt.zero_mean = ZeroMean::interior;
  else if (a.zero_mean == "none") opt.zero_mean = ZeroMean::none;
  else throw DomainError("theorem: --zero-mean must be full, interior or none");
  auto os = open_out(a.output);
  os << report_csv_header() << '\n';
  int passed = 0;
  for (const auto& t : sample_theorem_instances(a.count, a.seed)) {
    const auto rep = a.which == 3 ? verify_theorem3(t.step, t.blur, t.lambda, opt)
                                  : verify_theorem4(t.step, t.blur, t.lambda, opt);
    passed += rep.pass;
    write_report_csv_row(os, rep);
  }
  std::fprintf(stderr, "%d/%d instances pass\n", passed, a.count);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Total-variation blind deconvolution"};
  app.require_subcommand(1);

  DeblurArgs db;
  auto* c_deblur = app.add_subcommand("deblur", "blind deblurring of a PGM/PPM image");
  c_deblur->add_option("input", db.input, "blurry image")->required()->check(CLI::ExistingFile);
  c_deblur->add_option("-o,--output", db.output, "restored image");
  c_deblur->add_option("--kernel-out", db.kernel_out, "estimated kernel (text)");
  c_deblur->add_option("--energy-csv", db.energy_csv, "per-iteration energies");
  c_deblur->add_option("--kernel-size", db.kernel_size, "kernel size HxW (odd)");
  c_deblur->add_option("--lambda-min", db.cfg.lambda_min);
  c_deblur->add_option("--lambda-init", db.cfg.lambda_init);
  c_deblur->add_option("--anneal", db.cfg.anneal_factor);
  c_deblur->add_option("--levels", db.cfg.max_levels, "pyramid levels (0: automatic)");
  c_deblur->add_option("--iters", db.cfg.max_iters_per_level, "iterations per level");
  c_deblur->add_option("--eps-u", db.cfg.eps_u);
  c_deblur->add_option("--eps-k", db.cfg.eps_k);
  c_deblur->add_option("--boundary", db.boundary)
      ->check(CLI::IsMember({"free", "symmetric", "periodic", "replicate"}));
  c_deblur->add_flag("--filtered-kernel-estimation", db.cfg.filtered_kernel_estimation);
  c_deblur->add_option("--color", db.color)->check(CLI::IsMember({"gray", "coupled"}));
  c_deblur->callback([&] { run_deblur(db); });

  NonblindArgs nb;
  auto* c_nb = app.add_subcommand("nonblind", "non-blind TV deconvolution with a known kernel");
  c_nb->add_option("input", nb.input, "blurry image")->required()->check(CLI::ExistingFile);
  c_nb->add_option("--kernel", nb.kernel, "kernel text file")->required()->check(CLI::ExistingFile);
  c_nb->add_option("--lambda", nb.lambda);
  c_nb->add_option("-o,--output", nb.output);
  c_nb->add_option("--boundary", nb.boundary)
      ->check(CLI::IsMember({"free", "symmetric", "periodic", "replicate"}));
  c_nb->callback([&] { run_nonblind(nb); });

  Denoise1dArgs dn;
  auto* c_dn = app.add_subcommand("denoise1d", "exact 1D TV denoising of a CSV signal");
  c_dn->add_option("input", dn.input, "single-column CSV")->required()->check(CLI::ExistingFile);
  c_dn->add_option("--lambda", dn.lambda);
  c_dn->add_option("-o,--output", dn.output, "output CSV (default: stdout)");
  c_dn->callback([&] { run_denoise1d(dn); });

  LandscapeArgs ls;
  auto* c_ls = app.add_subcommand("landscape", "energy over 3-tap blurs");
  c_ls->add_option("--mode", ls.mode)->check(CLI::IsMember({"min-u", "fixed-u"}));
  c_ls->add_option("--input", ls.input, "signal CSV (default: a blurred step)");
  c_ls->add_option("--step", ls.step, "U1 U2 L1 L2")->expected(4);
  c_ls->add_option("--blur", ls.blur, "delta1 delta2")->expected(2);
  c_ls->add_option("--lambda", ls.lambda);
  c_ls->add_option("--resolution", ls.resolution);
  c_ls->add_option("--norms", ls.norms, "kernel norms for fixed-u");
  c_ls->add_option("-o,--output", ls.output);
  c_ls->add_option("--heatmap", ls.heatmap, "PGM heat map");
  c_ls->add_option("--path", ls.path_csv, "CSV of the PAM path");
  c_ls->add_option("--start", ls.start, "PAM start delta1 delta2")->expected(2);
  c_ls->callback([&] { run_landscape(ls); });

  EvalArgs ev;
  auto* c_ev = app.add_subcommand("eval", "error ratios on the synthetic suite");
  c_ev->add_option("--cases", ev.cases);
  c_ev->add_option("--seed", ev.seed);
  c_ev->add_option("--noise", ev.noise);
  c_ev->add_option("--modes", ev.modes);
  c_ev->add_option("--filtered", ev.filtered)->check(CLI::IsMember({"no", "yes", "both"}));
  c_ev->add_option("--iters", ev.iters);
  c_ev->add_option("--max-bin", ev.max_bin);
  c_ev->add_option("-o,--output", ev.output);
  c_ev->add_option("--histogram", ev.histogram);
  c_ev->callback([&] { run_eval(ev); });

  TheoremArgs th;
  auto* c_th = app.add_subcommand("theorem", "check the AM/PAM first-iteration results");
  c_th->add_option("--which", th.which)->check(CLI::IsMember({3, 4}));
  c_th->add_option("--count", th.count);
  c_th->add_option("--seed", th.seed);
  c_th->add_option("--taps", th.taps);
  c_th->add_option("--zero-mean", th.zero_mean)->check(CLI::IsMember({"full", "interior", "none"}));
  c_th->add_option("-o,--output", th.output);
  c_th->callback([&] { run_theorem(th); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
