// poselift: synthesize keypoint data, train, infer with test-time correction,
// evaluate and run the gradient suite.

#include "poselift/data/checkpoint.hpp"
#include "poselift/data/dataset.hpp"
#include "poselift/data/skeleton.hpp"
#include "poselift/data/synth.hpp"
#include "poselift/gradcheck.hpp"
#include "poselift/inference.hpp"
#include "poselift/pipeline.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>

namespace {

using namespace poselift;
using nlohmann::json;

int run_synth(const std::string& out, const SynthConfig& cfg, std::uint64_t seed) {
  const SequenceDataset ds = synth_generate(cfg, seed);
  save_dataset(ds, out);
  std::cerr << "wrote " << ds.sequences.size() << " sequences, " << ds.frame_count() << " frames to " << out << '\n';
  return 0;
}

void report_dropped_frames(const SequenceDataset& ds, int clip_len, const char* label) {
  std::size_t dropped = 0, short_seqs = 0;
  for (const auto& s : ds.sequences) {
    dropped += s.frames.size() % static_cast<std::size_t>(clip_len);
    if (s.frames.size() < static_cast<std::size_t>(clip_len)) ++short_seqs;
  }
  if (dropped > 0)
    std::cerr << "WARNING: " << label << ": " << dropped << " trailing frames do not fill a clip of " << clip_len
              << " and are dropped";
  if (short_seqs > 0) std::cerr << " (" << short_seqs << " sequences shorter than one clip)";
  if (dropped > 0) std::cerr << '\n';
}

int run_train(const std::string& data3d_path, const std::string& data2d_path, const std::string& config_path,
              const std::string& out, int log_every) {
  const TrainConfig cfg = load_train_config(config_path);
  const SequenceDataset data3d = load_dataset(data3d_path);
  SequenceDataset data2d;
  if (!data2d_path.empty()) data2d = load_dataset(data2d_path);
  report_dropped_frames(data3d, cfg.clip_len, "data3d");
  if (!data2d_path.empty()) report_dropped_frames(data2d, cfg.clip_len, "data2d");

  std::string note;
  resolve_robust_joints(data3d.joint_names, &note);
  if (!note.empty()) std::cerr << note << '\n';

  Trainer trainer(data3d, data2d, cfg);
  trainer.on_step([&](char stage, int step, double loss) {
    if (log_every > 0 && (step % log_every == 0))
      std::cerr << "stage " << stage << " step " << step << " loss " << loss << '\n';
  });
  const auto t0 = std::chrono::steady_clock::now();
  const TrainResult res = trainer.run();
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_checkpoint(res.checkpoint, out);
  std::cerr << "trained " << cfg.steps_a << "+" << cfg.steps_b << "+" << cfg.steps_c << " steps in " << secs
            << " s, checkpoint " << out << '\n';
  return 0;
}

struct InferArgs {
  std::string model, data, out, csv, target;
  bool no_ssc = false;
  bool single_frame = false;
  int iters = 2;
  double step = 1e-2;
  double tau = 20.0;
  double eps = 5.0;
  std::string optimizer = "adam";
};

int run_infer(const InferArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.model);
  const SequenceDataset data = load_dataset(a.data);
  SequenceDataset targets;
  InferOptions opts;
  if (!a.target.empty()) {
    targets = load_dataset(a.target);
    opts.ssc_targets = &targets;
  }
  opts.ssc = !a.no_ssc;
  opts.single_frame = a.single_frame;
  opts.refine.max_iters = a.iters;
  opts.refine.step_size = a.step;
  opts.refine.tau_mm = a.tau;
  opts.refine.eps_mm = a.eps;
  opts.refine.optimizer = a.optimizer == "sgd" ? RefineOptimizer::sgd : RefineOptimizer::adam;
  std::string note;
  opts.refine.robust_joints = resolve_robust_joints(ckpt.joint_names, &note);
  if (opts.ssc) {
    opts.refine.validate(ckpt.model.joints);
    if (!note.empty()) std::cerr << note << '\n';
  }

  const std::vector<FramePrediction> preds = infer_dataset(ckpt, data, opts);
  std::ofstream out(a.out);
  if (!out) throw std::runtime_error("cannot write " + a.out);
  write_predictions(out, preds);
  if (!a.csv.empty()) {
    std::ofstream csv(a.csv);
    if (!csv) throw std::runtime_error("cannot write " + a.csv);
    write_predictions_csv(csv, preds);
  }
  if (opts.ssc) {
    std::map<std::string, std::size_t> verdicts;
    for (const auto& p : preds) ++verdicts[to_string(p.report->verdict)];
    std::cerr << "ssc verdicts:";
    for (const auto& [v, n] : verdicts) std::cerr << ' ' << v << '=' << n;
    std::cerr << '\n';
  }
  std::cerr << "wrote " << preds.size() << " frames to " << a.out << '\n';
  return 0;
}

int run_eval(const std::string& pred_path, const std::string& gt_path, const std::string& align) {
  const auto preds = read_predictions(pred_path);
  const SequenceDataset gt = load_dataset(gt_path);
  const EvalReport r = evaluate(preds, gt, align == "root" ? Alignment::root : Alignment::centroid);
  json j;
  j["align"] = align;
  j["per_sequence"] = r.per_sequence;
  j["overall_mpjpe_mm"] = r.overall;
  j["frames"] = r.frames;
  std::cout << j.dump(2) << '\n';
  return 0;
}

int run_gradcheck_cmd(std::uint64_t seed, int seeds) {
  GradcheckOptions opts;
  opts.seeds = seeds;
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_gradcheck(seed, opts);
  std::map<std::string, std::pair<int, double>> summary;  // failures, worst error
  int failures = 0;
  for (const auto& r : results) {
    auto& [fails, worst] = summary[r.name];
    worst = std::max(worst, r.max_rel_error);
    if (!r.passed) {
      ++fails;
      ++failures;
      std::cout << "FAIL " << r.name << " seed " << r.seed << ": rel error " << r.max_rel_error << " at "
                << r.worst_entry << '\n';
    }
  }
  for (const auto& [name, s] : summary)
    std::cout << (s.first == 0 ? "ok   " : "FAIL ") << name << "  max rel error " << s.second << '\n';
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << results.size() << " checks, " << failures << " failed, " << secs << " s\n";
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2D-to-3D pose lifting with test-time self-supervised correction"};
  app.require_subcommand(1);

  SynthConfig synth_cfg;
  std::string synth_out;
  std::uint64_t synth_seed = 7;
  auto* synth = app.add_subcommand("synth", "generate a synthetic keypoint dataset");
  synth->add_option("--out", synth_out, "output JSONL")->required();
  synth->add_option("--seqs", synth_cfg.num_seqs, "sequence count")->check(CLI::PositiveNumber);
  synth->add_option("--frames", synth_cfg.frames, "frames per sequence")->check(CLI::PositiveNumber);
  synth->add_option("--k", synth_cfg.joints, "joint count (14 or 17)")->check(CLI::IsMember({14, 17}));
  synth->add_option("--noise", synth_cfg.noise_px, "2D Gaussian noise sigma in pixels")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_seed, "random seed");

  std::string data3d, data2d, config, train_out;
  int log_every = 100;
  auto* train = app.add_subcommand("train", "train a model through the three stages");
  train->add_option("--data3d", data3d, "3D-annotated dataset")->required()->check(CLI::ExistingFile);
  train->add_option("--data2d", data2d, "2D-only dataset")->check(CLI::ExistingFile);
  train->add_option("--config", config, "training config JSON")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "checkpoint path")->required();
  train->add_option("--log-every", log_every, "progress interval in steps (0: silent)");

  InferArgs ia;
  auto* infer = app.add_subcommand("infer", "lift a dataset to 3D");
  infer->add_option("--model", ia.model, "checkpoint")->required()->check(CLI::ExistingFile);
  infer->add_option("--data", ia.data, "dataset")->required()->check(CLI::ExistingFile);
  infer->add_option("--out", ia.out, "predictions JSONL")->required();
  infer->add_flag("--no-ssc", ia.no_ssc, "skip test-time correction");
  infer->add_option("--ssc-iters", ia.iters, "correction iterations")->check(CLI::PositiveNumber);
  infer->add_option("--ssc-step", ia.step, "correction step size")->check(CLI::PositiveNumber);
  infer->add_option("--ssc-optimizer", ia.optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
  infer->add_option("--tau", ia.tau, "discard threshold (mm)");
  infer->add_option("--eps", ia.eps, "convergence threshold (mm)");
  infer->add_flag("--single-frame", ia.single_frame, "reset the temporal state every frame");
  infer->add_option("--ssc-target", ia.target, "refine against the 2D poses of this dataset")
      ->check(CLI::ExistingFile);
  infer->add_option("--dump-csv", ia.csv, "also write seq_id,t,joint,x,y,z rows");

  std::string pred, gt, align = "centroid";
  auto* eval = app.add_subcommand("eval", "MPJPE of predictions against ground truth");
  eval->add_option("--pred", pred, "predictions JSONL")->required()->check(CLI::ExistingFile);
  eval->add_option("--gt", gt, "ground-truth dataset")->required()->check(CLI::ExistingFile);
  eval->add_option("--align", align, "centroid or root")->check(CLI::IsMember({"centroid", "root"}));

  std::uint64_t gc_seed = 1;
  int gc_seeds = 20;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suite");
  gradcheck->add_option("--seed", gc_seed, "first seed");
  gradcheck->add_option("--seeds", gc_seeds, "seed count")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*synth) return run_synth(synth_out, synth_cfg, synth_seed);
    if (*train) return run_train(data3d, data2d, config, train_out, log_every);
    if (*infer) return run_infer(ia);
    if (*eval) return run_eval(pred, gt, align);
    if (*gradcheck) return run_gradcheck_cmd(gc_seed, gc_seeds);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
