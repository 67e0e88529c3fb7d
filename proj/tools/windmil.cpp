#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "windmil/error.hpp"
#include "windmil/harness/contours.hpp"
#include "windmil/harness/experiment.hpp"
#include "windmil/runtime.hpp"

namespace fs = std::filesystem;
namespace hs = windmil::harness;
namespace md = windmil::model;

namespace {

void log_line(const std::string& s) { std::cerr << s << '\n'; }

std::vector<hs::LoadedCase> load_all(const fs::path& dataset, const std::vector<std::string>& ids) {
  std::vector<hs::LoadedCase> out;
  out.reserve(ids.size());
  for (const auto& id : ids) out.push_back(hs::load_case(dataset, id));
  return out;
}

std::vector<md::LabeledCase> labeled(const std::vector<hs::LoadedCase>& cases, md::Target t) {
  std::vector<md::LabeledCase> out;
  for (const auto& c : cases) out.push_back({&c.graph, c.target(t)});
  return out;
}

std::vector<hs::EvalCase> eval_set(const std::vector<hs::LoadedCase>& cases, md::Target t, bool sym) {
  std::vector<const hs::LoadedCase*> ptrs;
  for (const auto& c : cases) ptrs.push_back(&c);
  auto plain = hs::make_eval_cases(ptrs, t);
  return sym ? hs::augment_sym(plain) : plain;
}

struct GenerateArgs {
  std::vector<std::string> basis;
  int subdiv = 10;
  std::string angles = "0:90:15";
  int grid = 64;
  int k = 8;
  int smooth_iters = 10;
  double smooth_lambda = 0.5;
  bool no_labels = false;
  std::string out;
};

void run_generate(const GenerateArgs& a) {
  hs::GenerateConfig cfg;
  cfg.subdiv = a.subdiv;
  cfg.angles = windmil::geometry::parse_angles(a.angles);
  cfg.grid_resolution = a.grid;
  cfg.k = a.k;
  cfg.smoothing = {a.smooth_iters, a.smooth_lambda};
  cfg.oracle_labels = !a.no_labels;
  if (!a.basis.empty()) {
    if (a.basis.size() != 3) throw windmil::ConfigError("--basis takes exactly three OBJ files");
    for (int i = 0; i < 3; ++i) cfg.basis_paths[i] = a.basis[i];
  }
  const auto s = hs::generate_dataset(cfg, a.out, [](std::size_t done, std::size_t total, const std::string& id) {
    if (done % 25 == 0 || done == total) log_line("[" + std::to_string(done) + "/" + std::to_string(total) + "] " + id);
  });
  std::printf("%zu geometries per angle, %zu cases (%zu boundary), %zu nodes, %.1f s\n", s.geometries_per_angle,
              s.case_count, s.boundary_cases, s.total_nodes, s.seconds);
}

struct TrainArgs {
  std::string dataset, split, out;
  std::string target = "cp_mean", mode = "equivariant", activation = "relu";
  std::uint64_t seed = 0;
  int hidden = 128, layers = 4, epochs = 200, patience = 20;
  double lr = 1e-3;
};

void run_train(const TrainArgs& a) {
  md::ModelConfig mc;
  mc.hidden_dim = a.hidden;
  mc.num_layers = a.layers;
  mc.activation = md::parse_activation(a.activation);
  mc.mode = md::parse_mode(a.mode);
  mc.target = md::parse_target(a.target);
  mc.seed = a.seed;
  md::TrainConfig tc;
  tc.learning_rate = a.lr;
  tc.max_epochs = a.epochs;
  tc.patience = a.patience;

  const auto split = hs::read_split(a.split);
  const auto train_cases = load_all(a.dataset, split.train);
  const auto dev_cases = load_all(a.dataset, split.dev);
  const auto tr = labeled(train_cases, mc.target);
  const auto dv = labeled(dev_cases, mc.target);
  const auto result = md::train(tr, dv, mc, tc, [](const md::EpochRecord& r) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "epoch %d  train_loss %.6g  dev_rmse %.6g", r.epoch, r.train_loss, r.dev_rmse);
    log_line(buf);
  });
  fs::create_directories(a.out);
  const auto path = fs::path(a.out) / (md::to_string(mc.mode) + "-" + md::to_string(mc.target) + ".bin");
  md::save_checkpoint({mc, tc, result.params}, path);
  std::printf("best epoch %d of %zu, checkpoint %s\n", result.best_epoch, result.history.size(), path.c_str());
}

void run_evaluate(const std::string& dataset, const std::string& ckpt_path, const std::string& split_path,
                  bool sym, const std::string& json_out) {
  const auto ck = md::load_checkpoint(ckpt_path);
  const auto split = hs::read_split(split_path);
  const auto test_cases = load_all(dataset, split.test);
  const auto set = eval_set(test_cases, ck.model.target, sym);
  const auto m = hs::evaluate(ck.params, ck.model, set, sym);
  auto j = hs::to_json(m);
  j["mode"] = md::to_string(ck.model.mode);
  const std::string text = j.dump(2);
  if (json_out.empty()) {
    std::cout << text << '\n';
  } else {
    std::ofstream out(json_out);
    if (!(out << text << '\n')) throw windmil::IoError("cannot write " + json_out);
  }
}

void run_export(const std::string& dataset, const std::string& case_id, const std::string& ckpt_path,
                std::string out) {
  const auto ck = md::load_checkpoint(ckpt_path);
  const auto c = hs::load_case(dataset, case_id);
  const auto mesh = windmil::geometry::read_obj(fs::path(dataset) / case_id / "mesh.obj");
  const Eigen::VectorXd pred = md::forward(c.graph, c.graph.features, ck.params, ck.model);
  const Eigen::VectorXd target = c.target(ck.model.target);
  if (out.empty()) out = case_id + "-" + md::to_string(ck.model.target) + ".vtk";
  hs::export_contours(mesh, {pred.data(), static_cast<std::size_t>(pred.size())},
                      {target.data(), static_cast<std::size_t>(target.size())}, out);
  std::printf("wrote %s\n", out.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  windmil::tune_allocator();
  CLI::App app{"windmil: building shape generation, surface Cp surrogates and evaluation"};
  app.require_subcommand(1);

  auto* basis = app.add_subcommand("basis", "Write the built-in flat/gable/hip basis meshes as OBJ");
  std::string basis_out = ".";
  basis->add_option("--out", basis_out, "Output directory");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Generate the case dataset");
  generate->add_option("--basis", gen.basis, "Three basis OBJ files (default: built-in set)")->expected(3);
  generate->add_option("--subdiv", gen.subdiv, "Barycentric lattice subdivision");
  generate->add_option("--angles", gen.angles, "start:stop:step or comma list, degrees");
  generate->add_option("--grid", gen.grid, "SDF grid resolution per axis");
  generate->add_option("--k", gen.k, "Neighbors per node");
  generate->add_option("--smooth-iters", gen.smooth_iters, "Laplacian smoothing iterations");
  generate->add_option("--smooth-lambda", gen.smooth_lambda, "Laplacian smoothing step");
  generate->add_flag("--no-labels", gen.no_labels, "Skip oracle labels");
  generate->add_option("--out", gen.out, "Dataset directory")->required();

  std::string label_dataset;
  auto* label = app.add_subcommand("label", "Write oracle labels for every case");
  label->add_option("--dataset", label_dataset)->required();

  std::string ingest_dataset, ingest_case, ingest_csv, ingest_flow;
  auto* ingest = app.add_subcommand("ingest", "Replace a case's labels from a pressure or cp table");
  ingest->add_option("--dataset", ingest_dataset)->required();
  ingest->add_option("--case", ingest_case)->required();
  ingest->add_option("--csv", ingest_csv, "node_id,p_mean,p_std or node_id,cp_mean,cp_std")->required();
  ingest->add_option("--flow", ingest_flow, "JSON with rho and u_ref (needed for pressure tables)");

  std::string split_kind = "interpolation", split_dataset, split_out;
  std::uint64_t split_seed = 0;
  std::vector<double> split_fractions;
  auto* split = app.add_subcommand("split", "Write a train/dev/test split");
  split->add_option("--kind", split_kind, "interpolation or extrapolation");
  split->add_option("--dataset", split_dataset)->required();
  split->add_option("--seed", split_seed);
  split->add_option("--fractions", split_fractions, "train dev test (interpolation) or train (extrapolation)");
  split->add_option("--out", split_out)->required();

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train one model");
  train->add_option("--dataset", tr.dataset)->required();
  train->add_option("--split", tr.split)->required();
  train->add_option("--target", tr.target, "cp_mean or cp_std");
  train->add_option("--mode", tr.mode, "baseline or equivariant");
  train->add_option("--seed", tr.seed);
  train->add_option("--hidden", tr.hidden);
  train->add_option("--layers", tr.layers);
  train->add_option("--activation", tr.activation, "relu or tanh");
  train->add_option("--lr", tr.lr);
  train->add_option("--epochs", tr.epochs);
  train->add_option("--patience", tr.patience);
  train->add_option("--out", tr.out, "Checkpoint directory")->required();

  std::string ev_dataset, ev_ckpt, ev_split, ev_json;
  bool ev_sym = false;
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on the test split");
  evaluate->add_option("--dataset", ev_dataset)->required();
  evaluate->add_option("--ckpt", ev_ckpt)->required();
  evaluate->add_option("--split", ev_split)->required();
  evaluate->add_flag("--sym", ev_sym, "Append mirrored copies of the test cases");
  evaluate->add_option("--json", ev_json, "Write metrics here instead of stdout");

  std::string experiment_path;
  auto* report = app.add_subcommand("report", "Run a full experiment and write report.json / report.md");
  report->add_option("--experiment", experiment_path)->required();

  std::string ex_dataset, ex_case, ex_ckpt, ex_out;
  auto* contours = app.add_subcommand("export-contours", "Write predicted and true Cp as VTK PolyData");
  contours->add_option("--dataset", ex_dataset)->required();
  contours->add_option("--case", ex_case)->required();
  contours->add_option("--ckpt", ex_ckpt)->required();
  contours->add_option("--out", ex_out, "Output .vtk path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*basis) {
      const auto b = windmil::geometry::default_basis();
      fs::create_directories(basis_out);
      const char* names[3] = {"flat.obj", "gable.obj", "hip.obj"};
      for (int i = 0; i < 3; ++i) windmil::geometry::write_obj(b.meshes[i], fs::path(basis_out) / names[i]);
    } else if (*generate) {
      run_generate(gen);
    } else if (*label) {
      hs::label_dataset(label_dataset);
    } else if (*ingest) {
      const auto meta = hs::read_case_meta(fs::path(ingest_dataset) / ingest_case);
      const auto labels = windmil::oracle::ingest_csv(ingest_csv, meta.node_count, ingest_flow);
      windmil::oracle::write_labels_csv(labels, fs::path(ingest_dataset) / ingest_case / "labels.csv");
    } else if (*split) {
      const auto metas = hs::list_cases(split_dataset);
      hs::SplitSpec s;
      if (hs::parse_split_kind(split_kind) == hs::SplitKind::kInterpolation) {
        std::array<double, 3> f{0.70, 0.15, 0.15};
        if (!split_fractions.empty()) {
          if (split_fractions.size() != 3) throw windmil::ConfigError("--fractions needs three values");
          f = {split_fractions[0], split_fractions[1], split_fractions[2]};
        }
        std::vector<std::string> ids;
        for (const auto& m : metas) ids.push_back(m.case_id);
        s = hs::split_interpolation(ids, f, split_seed);
      } else {
        if (split_fractions.size() > 1) throw windmil::ConfigError("--fractions takes one value for extrapolation");
        s = hs::split_extrapolation(metas, split_seed, split_fractions.empty() ? 0.8 : split_fractions[0]);
      }
      hs::write_split(s, split_out);
      std::printf("train %zu  dev %zu  test %zu\n", s.train.size(), s.dev.size(), s.test.size());
    } else if (*train) {
      run_train(tr);
    } else if (*evaluate) {
      run_evaluate(ev_dataset, ev_ckpt, ev_split, ev_sym, ev_json);
    } else if (*report) {
      const auto cfg = hs::read_experiment_config(experiment_path);
      const auto bundle = hs::run_experiment(cfg, log_line);
      std::cout << hs::render_markdown(bundle);
    } else if (*contours) {
      run_export(ex_dataset, ex_case, ex_ckpt, ex_out);
    }
  } catch (const windmil::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return windmil::exit_code(e);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
