#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "thermfuse/detect.hpp"
#include "thermfuse/dsconv.hpp"
#include "thermfuse/error.hpp"
#include "thermfuse/fusion.hpp"
#include "thermfuse/harness.hpp"
#include "thermfuse/image_ops.hpp"
#include "thermfuse/pgm.hpp"

namespace thermfuse::cli {

namespace {

namespace fs = std::filesystem;

struct Shared {
  std::uint64_t seed = 1;
  FusionParams fusion;
  DetectParams detect;
  std::string solver = "barrier";
  unsigned workers = 1;
};

void add_fusion_flags(CLI::App* cmd, Shared& s) {
  cmd->add_option("--lambda", s.fusion.lambda, "TV weight")->capture_default_str();
  cmd->add_option("--tol", s.fusion.tol, "relative duality-gap tolerance")->capture_default_str();
  cmd->add_option("--max-iter", s.fusion.max_iter, "iteration budget")->capture_default_str();
  cmd->add_option("--solver", s.solver, "barrier or primal-dual")
      ->check(CLI::IsMember({"barrier", "primal-dual"}))
      ->capture_default_str();
}

void add_detect_flags(CLI::App* cmd, Shared& s) {
  auto& d = s.detect;
  cmd->add_option("--saturate-low", d.saturate_low)->capture_default_str();
  cmd->add_option("--saturate-high", d.saturate_high)->capture_default_str();
  cmd->add_option("--median-k", d.median_k)->capture_default_str();
  cmd->add_option("--min-peak-mass", d.min_peak_mass)->capture_default_str();
  cmd->add_option("--smoothing-window", d.smoothing_window)->capture_default_str();
  cmd->add_option("--connectivity", d.connectivity)->capture_default_str();
  cmd->add_option("--valley-merge-ratio", d.valley_merge_ratio)->capture_default_str();
}

void add_common_flags(CLI::App* cmd, Shared& s) {
  cmd->add_option("--seed", s.seed, "random seed")->capture_default_str();
}

SolverKind solver_kind(const std::string& name) {
  return name == "primal-dual" ? SolverKind::kPrimalDual : SolverKind::kBarrier;
}

std::string box_text(const FaceBox& b) {
  return std::to_string(b.x0) + " " + std::to_string(b.y0) + " " + std::to_string(b.width) +
         " " + std::to_string(b.height) + "\n";
}

FusionResult run_fusion(const RegisteredPair& pair, const Shared& s) {
  const auto solver = make_solver(solver_kind(s.solver));
  return fuse(pair, s.fusion, *solver);
}

void print_fusion(std::ostream& out, const FusionResult& r) {
  char line[256];
  std::snprintf(line, sizeof line,
                "objective=%.10g data_term=%.10g tv_term=%.10g iterations=%d converged=%d\n",
                r.objective, r.data_term, r.tv_term, r.iterations, r.converged ? 1 : 0);
  out << line;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      items.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  items.push_back(cur);
  return items;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Thermal / visible face fusion toolkit", "thermfuse"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Print help for every subcommand");

  Shared s;

  // detect
  std::string detect_in, detect_box, detect_crop;
  auto* detect = app.add_subcommand("detect", "locate the face in a thermal image");
  detect->add_option("--in", detect_in, "thermal PGM")->required();
  detect->add_option("--out-box", detect_box, "writes 'x0 y0 w h'")->required();
  detect->add_option("--out-crop", detect_crop, "cropped thermal PGM");
  add_detect_flags(detect, s);
  add_common_flags(detect, s);

  // fuse
  std::string fuse_ir, fuse_vi, fuse_out;
  auto* fuse_cmd = app.add_subcommand("fuse", "gradient-transfer fusion of a registered pair");
  fuse_cmd->add_option("--ir", fuse_ir, "thermal PGM")->required();
  fuse_cmd->add_option("--vi", fuse_vi, "visible PGM")->required();
  fuse_cmd->add_option("--out", fuse_out, "fused PGM")->required();
  add_fusion_flags(fuse_cmd, s);
  add_common_flags(fuse_cmd, s);

  // sweep
  std::string sweep_ir, sweep_vi, sweep_out;
  std::vector<double> sweep_lambdas{0, 1, 2, 4, 7, 8, 10};
  auto* sweep_cmd = app.add_subcommand("sweep", "objective terms across a lambda grid");
  sweep_cmd->add_option("--ir", sweep_ir)->required();
  sweep_cmd->add_option("--vi", sweep_vi)->required();
  sweep_cmd->add_option("--lambdas", sweep_lambdas, "comma-separated lambdas")
      ->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--out", sweep_out, "CSV path")->required();
  sweep_cmd->add_option("--workers", s.workers, "threads, 0 = all cores")->capture_default_str();
  add_fusion_flags(sweep_cmd, s);
  add_common_flags(sweep_cmd, s);

  // augment
  std::string aug_in, aug_dir;
  int aug_fill = 0;
  auto* aug_cmd = app.add_subcommand("augment", "write the 19 rotated copies of an image");
  aug_cmd->add_option("--in", aug_in)->required();
  aug_cmd->add_option("--out-dir", aug_dir)->required();
  aug_cmd->add_option("--fill", aug_fill, "background intensity")
      ->check(CLI::Range(0, 255))
      ->capture_default_str();
  add_common_flags(aug_cmd, s);

  // evaluate
  std::string eval_manifest, eval_out, eval_modes = "thermal,visual,fused";
  double eval_split = 0.7;
  std::size_t eval_side = 16;
  auto* eval_cmd = app.add_subcommand("evaluate", "nearest-centroid accuracy per modality");
  eval_cmd->add_option("--manifest", eval_manifest)->required();
  eval_cmd->add_option("--out", eval_out, "report CSV")->required();
  eval_cmd->add_option("--modes", eval_modes, "comma-separated subset of thermal,visual,fused")
      ->capture_default_str();
  eval_cmd->add_option("--split", eval_split, "per-subject train fraction")->capture_default_str();
  eval_cmd->add_option("--embed-side", eval_side, "embedding side length")->capture_default_str();
  eval_cmd->add_option("--workers", s.workers, "threads, 0 = all cores")->capture_default_str();
  add_fusion_flags(eval_cmd, s);
  add_detect_flags(eval_cmd, s);
  add_common_flags(eval_cmd, s);

  // convbench
  std::string conv_out;
  std::vector<std::size_t> conv_hf{16, 32}, conv_hk{1, 3, 5}, conv_m{16}, conv_n{32, 64};
  auto* conv_cmd = app.add_subcommand("convbench", "counted MACs, standard vs separable");
  conv_cmd->add_option("--out", conv_out, "CSV path")->required();
  conv_cmd->add_option("--h-f", conv_hf)->delimiter(',')->capture_default_str();
  conv_cmd->add_option("--h-k", conv_hk)->delimiter(',')->capture_default_str();
  conv_cmd->add_option("--m", conv_m)->delimiter(',')->capture_default_str();
  conv_cmd->add_option("--n", conv_n)->delimiter(',')->capture_default_str();
  add_common_flags(conv_cmd, s);

  // pipeline
  std::string pipe_ir, pipe_vi, pipe_out, pipe_box;
  auto* pipe_cmd = app.add_subcommand("pipeline", "detect on thermal, crop both, fuse");
  pipe_cmd->add_option("--ir", pipe_ir, "thermal PGM")->required();
  pipe_cmd->add_option("--vi", pipe_vi, "visible PGM")->required();
  pipe_cmd->add_option("--out", pipe_out, "fused crop PGM")->required();
  pipe_cmd->add_option("--out-box", pipe_box, "writes 'x0 y0 w h'");
  add_fusion_flags(pipe_cmd, s);
  add_detect_flags(pipe_cmd, s);
  add_common_flags(pipe_cmd, s);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (detect->parsed()) {
      s.detect.validate();
      const GrayImage thermal = load_pgm(detect_in);
      const FaceBox box = detect_face(thermal, s.detect);
      if (!detect_crop.empty()) save_pgm(detect_crop, crop(thermal, box));
      write_file_atomic(detect_box, box_text(box));
      out << box_text(box);
    } else if (fuse_cmd->parsed()) {
      s.fusion.validate();
      const GrayImage ir = load_pgm(fuse_ir);
      const GrayImage vi = load_pgm(fuse_vi);
      const FusionResult r = run_fusion(RegisteredPair(to_real(ir), to_real(vi)), s);
      save_pgm(fuse_out, quantize(r.fused));
      print_fusion(out, r);
    } else if (sweep_cmd->parsed()) {
      s.fusion.validate();
      for (double l : sweep_lambdas) {
        FusionParams p = s.fusion;
        p.lambda = l;
        p.validate();
      }
      const RegisteredPair pair(to_real(load_pgm(sweep_ir)), to_real(load_pgm(sweep_vi)));
      const auto rows = sweep(pair, sweep_lambdas, s.fusion, s.workers, solver_kind(s.solver));
      const std::string csv = sweep_csv(rows);
      write_file_atomic(sweep_out, csv);
      out << csv;
    } else if (aug_cmd->parsed()) {
      const GrayImage img = load_pgm(aug_in);
      const auto views = harness::augment(img, static_cast<std::uint8_t>(aug_fill));
      fs::create_directories(aug_dir);
      const std::string stem = fs::path(aug_in).stem().string();
      for (std::size_t i = 0; i < views.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "_rot%+03d.pgm", harness::kAugmentAngles[i]);
        const fs::path path = fs::path(aug_dir) / (stem + name);
        save_pgm(path, views[i]);
        out << path.string() << "\n";
      }
    } else if (eval_cmd->parsed()) {
      s.detect.validate();
      s.fusion.validate();
      std::vector<harness::Mode> modes;
      for (const auto& m : split_list(eval_modes)) modes.push_back(harness::parse_mode(m));
      const auto manifest = harness::load_manifest(eval_manifest);
      std::vector<harness::AccuracyReport> reports;
      for (auto mode : modes) {
        harness::EvalConfig cfg;
        cfg.mode = mode;
        cfg.lambda = s.fusion.lambda;
        cfg.train_fraction = eval_split;
        cfg.seed = s.seed;
        cfg.embed_side = eval_side;
        cfg.detect = s.detect;
        cfg.fusion = s.fusion;
        cfg.workers = s.workers;
        reports.push_back(harness::evaluate(manifest, cfg));
      }
      const std::string csv = harness::report_csv(reports);
      write_file_atomic(eval_out, csv);
      out << csv;
    } else if (conv_cmd->parsed()) {
      std::string csv = "h_f,h_k,m,n,standard_macs,separable_macs,ratio,eq5_ratio\n";
      for (auto hf : conv_hf) {
        for (auto hk : conv_hk) {
          for (auto m : conv_m) {
            for (auto n : conv_n) {
              const dsconv::ConvSpec spec{hk, m, n};
              spec.validate();
              if (hf == 0) throw Error(ErrorKind::kShape, "feature map side must be positive");
              const dsconv::Tensor3 input(hf, hf, m);
              const auto standard = dsconv::conv_standard(input, dsconv::StandardKernel(hk, m, n));
              const auto sep = dsconv::separable(input, dsconv::DepthwiseKernel(hk, m),
                                                 dsconv::PointwiseKernel(m, n));
              const auto ratio = dsconv::Rational::make(sep.cost.macs, standard.cost.macs);
              csv += std::to_string(hf) + "," + std::to_string(hk) + "," + std::to_string(m) +
                     "," + std::to_string(n) + "," + std::to_string(standard.cost.macs) + "," +
                     std::to_string(sep.cost.macs) + "," + ratio.str() + "," +
                     dsconv::cost_ratio(spec).str() + "\n";
            }
          }
        }
      }
      write_file_atomic(conv_out, csv);
      out << csv;
    } else if (pipe_cmd->parsed()) {
      s.detect.validate();
      s.fusion.validate();
      const GrayImage ir = load_pgm(pipe_ir);
      const GrayImage vi = load_pgm(pipe_vi);
      const FaceBox box = detect_face(ir, s.detect);
      const FusionResult r = run_fusion(crop_pair(ir, vi, box), s);
      save_pgm(pipe_out, quantize(r.fused));
      if (!pipe_box.empty()) write_file_atomic(pipe_box, box_text(box));
      out << box_text(box);
      print_fusion(out, r);
    }
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kExitDomain;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitOk;
}

}  // namespace thermfuse::cli
