#include "windmil/harness/experiment.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "windmil/error.hpp"

namespace windmil::harness {

namespace {

std::string fmt(double v, int digits) {
  if (!std::isfinite(v)) return "n/a";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string row_label(model::Mode mode, bool sym) { return model::to_string(mode) + (sym ? " +Sym" : ""); }

nlohmann::json history_json(const std::vector<model::EpochRecord>& h) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : h) out.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"dev_rmse", r.dev_rmse}});
  return out;
}

}  // namespace

std::vector<EvalCase> make_eval_cases(const std::vector<const LoadedCase*>& cases, model::Target t) {
  std::vector<EvalCase> out;
  out.reserve(cases.size());
  for (const LoadedCase* c : cases) out.push_back({c->meta.case_id, &c->graph, c->graph.features, c->target(t)});
  return out;
}

std::vector<EvalCase> augment_sym(const std::vector<EvalCase>& test) {
  std::vector<EvalCase> out = test;
  out.reserve(2 * test.size());
  for (const EvalCase& c : test) {
    out.push_back({c.case_id + "+sym", c.graph, graph::reflect_features(c.features), c.target});
  }
  return out;
}

MetricReport evaluate(const model::ModelParams& p, const model::ModelConfig& c,
                      const std::vector<EvalCase>& cases, bool sym_augmented) {
  std::vector<double> pred, target;
  for (const EvalCase& ec : cases) {
    const Eigen::VectorXd y = model::forward(*ec.graph, ec.features, p, c);
    if (!y.allFinite()) throw NumericError("non-finite prediction on case " + ec.case_id);
    pred.insert(pred.end(), y.begin(), y.end());
    target.insert(target.end(), ec.target.begin(), ec.target.end());
  }
  MetricReport m = compute_metrics(pred, target, default_tolerance(c.target));
  m.target = c.target;
  m.sym_augmented = sym_augmented;
  return m;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json targets = nlohmann::json::array(), modes = nlohmann::json::array();
  for (auto t : c.targets) targets.push_back(model::to_string(t));
  for (auto m : c.modes) modes.push_back(model::to_string(m));
  nlohmann::json mj = model::to_json(c.model);
  mj.erase("mode");
  mj.erase("target");
  nlohmann::json split = {{"kind", to_string(c.split_kind)}, {"seed", c.split_seed}};
  if (c.split_kind == SplitKind::kInterpolation) {
    split["fractions"] = c.fractions;
  } else {
    split["train_fraction"] = c.extrapolation_train_fraction;
  }
  if (!c.split_file.empty()) split["file"] = c.split_file.string();
  return {{"dataset", c.dataset.string()}, {"split", split},    {"model", mj},
          {"train", model::to_json(c.train)}, {"targets", targets}, {"modes", modes}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  ExperimentConfig c;
  try {
    c.dataset = resolve(j.at("dataset").get<std::string>());
    c.out_dir = resolve(j.value("out", std::string("experiment_out")));
    if (j.contains("split")) {
      const auto& s = j.at("split");
      c.split_kind = parse_split_kind(s.value("kind", std::string("interpolation")));
      c.split_seed = s.value("seed", std::uint64_t{0});
      if (s.contains("fractions")) c.fractions = s.at("fractions").get<std::array<double, 3>>();
      c.extrapolation_train_fraction = s.value("train_fraction", c.extrapolation_train_fraction);
      if (s.contains("file")) c.split_file = resolve(s.at("file").get<std::string>());
    }
    if (j.contains("model")) {
      nlohmann::json mj = model::to_json(c.model);
      mj.update(j.at("model"));
      c.model = model::model_config_from_json(mj);
    }
    if (j.contains("train")) c.train = model::train_config_from_json(j.at("train"));
    if (j.contains("targets")) {
      c.targets.clear();
      for (const auto& t : j.at("targets")) c.targets.push_back(model::parse_target(t.get<std::string>()));
    }
    if (j.contains("modes")) {
      c.modes.clear();
      for (const auto& m : j.at("modes")) c.modes.push_back(model::parse_mode(m.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment config: ") + e.what());
  }
  if (c.targets.empty() || c.modes.empty()) throw ConfigError("experiment needs at least one target and mode");
  return c;
}

ExperimentConfig read_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return experiment_config_from_json(nlohmann::json::parse(in), path.parent_path());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::optional<double> hitrate_gap(const ReportBundle& b, model::Mode mode, model::Target target) {
  const MetricReport* plain = nullptr;
  const MetricReport* sym = nullptr;
  for (const auto& r : b.rows) {
    if (r.mode != mode || r.metrics.target != target) continue;
    (r.metrics.sym_augmented ? sym : plain) = &r.metrics;
  }
  if (!plain || !sym) return std::nullopt;
  return sym->hitrate_pct - plain->hitrate_pct;
}

nlohmann::json to_json(const ReportBundle& b) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : b.rows) {
    nlohmann::json j = to_json(r.metrics);
    j["model"] = row_label(r.mode, r.metrics.sym_augmented);
    j["mode"] = model::to_string(r.mode);
    rows.push_back(j);
  }
  nlohmann::json gaps = nlohmann::json::array();
  for (auto t : b.config.targets) {
    for (auto m : b.config.modes) {
      if (const auto g = hitrate_gap(b, m, t)) {
        gaps.push_back({{"mode", model::to_string(m)}, {"target", model::to_string(t)}, {"hitrate_gap_points", *g}});
      }
    }
  }
  nlohmann::json runs = nlohmann::json::array();
  for (const auto& r : b.runs) {
    runs.push_back({{"mode", model::to_string(r.mode)},
                    {"target", model::to_string(r.target)},
                    {"best_epoch", r.best_epoch},
                    {"history", history_json(r.history)}});
  }
  return {{"experiment", to_json(b.config)},
          {"split",
           {{"kind", to_string(b.split.kind)},
            {"seed", b.split.seed},
            {"train", b.split.train.size()},
            {"dev", b.split.dev.size()},
            {"test", b.split.test.size()},
            {"train_hash", hash_ids(b.split.train)},
            {"dev_hash", hash_ids(b.split.dev)}}},
          {"rows", rows},
          {"hitrate_gaps", gaps},
          {"runs", runs},
          {"complete", b.complete}};
}

std::string render_markdown(const ReportBundle& b) {
  std::ostringstream md;
  md << "# " << to_string(b.split.kind) << " split\n\n";
  md << "Train / dev / test cases: " << b.split.train.size() << " / " << b.split.dev.size() << " / "
     << b.split.test.size() << ". +Sym appends a z-mirrored copy of every test case.\n\n";
  md << "| Model | Target | RMSE | MSE | MAE | R2 | Hitrate (%) |\n";
  md << "|---|---|---|---|---|---|---|\n";
  for (const auto& r : b.rows) {
    const auto& m = r.metrics;
    md << "| " << row_label(r.mode, m.sym_augmented) << " | " << model::to_string(m.target) << " | "
       << fmt(m.rmse, 4) << " | " << fmt(m.mse, 5) << " | " << fmt(m.mae, 4) << " | "
       << (m.r2_defined ? fmt(m.r2, 4) : "n/a") << " | " << fmt(m.hitrate_pct, 2) << " |\n";
  }
  md << "\n## Hitrate change under +Sym\n\n";
  md << "| Model | Target | Hitrate | Hitrate +Sym | Gap (points) |\n";
  md << "|---|---|---|---|---|\n";
  for (auto t : b.config.targets) {
    for (auto mode : b.config.modes) {
      const auto gap = hitrate_gap(b, mode, t);
      if (!gap) continue;
      double plain = 0, sym = 0;
      for (const auto& r : b.rows) {
        if (r.mode == mode && r.metrics.target == t) (r.metrics.sym_augmented ? sym : plain) = r.metrics.hitrate_pct;
      }
      md << "| " << model::to_string(mode) << " | " << model::to_string(t) << " | " << fmt(plain, 2) << " | "
         << fmt(sym, 2) << " | " << fmt(*gap, 2) << " |\n";
    }
  }
  if (!b.complete) md << "\nPartial report: the experiment did not finish.\n";
  return md.str();
}

void write_report(const ReportBundle& b, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream out(out_dir / "report.json");
    if (!out) throw IoError("cannot write " + (out_dir / "report.json").string());
    out << to_json(b).dump(2) << '\n';
  }
  std::ofstream md(out_dir / "report.md");
  if (!md) throw IoError("cannot write " + (out_dir / "report.md").string());
  md << render_markdown(b);
}

ReportBundle run_experiment(const ExperimentConfig& cfg, const LogFn& log) {
  auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  model::validate(cfg.model);
  model::validate(cfg.train);

  const auto metas = list_cases(cfg.dataset);
  std::vector<std::string> all_ids;
  for (const auto& m : metas) all_ids.push_back(m.case_id);

  ReportBundle bundle;
  bundle.config = cfg;
  if (!cfg.split_file.empty()) {
    bundle.split = read_split(cfg.split_file);
  } else if (cfg.split_kind == SplitKind::kInterpolation) {
    bundle.split = split_interpolation(all_ids, cfg.fractions, cfg.split_seed);
  } else {
    bundle.split = split_extrapolation(metas, cfg.split_seed, cfg.extrapolation_train_fraction);
  }
  validate(bundle.split, all_ids);
  std::filesystem::create_directories(cfg.out_dir / "ckpt");
  write_split(bundle.split, cfg.out_dir / "split.json");
  say("split " + to_string(bundle.split.kind) + ": " + std::to_string(bundle.split.train.size()) + " / " +
      std::to_string(bundle.split.dev.size()) + " / " + std::to_string(bundle.split.test.size()));

  std::map<std::string, LoadedCase> loaded;
  for (const auto& id : all_ids) loaded.emplace(id, load_case(cfg.dataset, id));
  auto pick = [&](const std::vector<std::string>& ids) {
    std::vector<const LoadedCase*> out;
    for (const auto& id : ids) out.push_back(&loaded.at(id));
    return out;
  };
  const auto train_cases = pick(bundle.split.train);
  const auto dev_cases = pick(bundle.split.dev);
  const auto test_cases = pick(bundle.split.test);

  for (auto target : cfg.targets) {
    std::vector<model::LabeledCase> train_set, dev_set;
    for (const auto* c : train_cases) train_set.push_back({&c->graph, c->target(target)});
    for (const auto* c : dev_cases) dev_set.push_back({&c->graph, c->target(target)});
    const auto test_plain = make_eval_cases(test_cases, target);
    const auto test_sym = augment_sym(test_plain);

    for (auto mode : cfg.modes) {
      model::ModelConfig mc = cfg.model;
      mc.mode = mode;
      mc.target = target;
      const std::string tag = model::to_string(mode) + "-" + model::to_string(target);
      say("training " + tag);
      const auto result = model::train(train_set, dev_set, mc, cfg.train, [&](const model::EpochRecord& r) {
        say("  " + tag + " epoch " + std::to_string(r.epoch) + " train_loss " + fmt(r.train_loss, 6) +
            " dev_rmse " + fmt(r.dev_rmse, 6));
      });
      model::save_checkpoint({mc, cfg.train, result.params}, cfg.out_dir / "ckpt" / (tag + ".bin"));
      bundle.runs.push_back({mode, target, result.best_epoch, result.history});
      bundle.rows.push_back({mode, evaluate(result.params, mc, test_plain, false)});
      bundle.rows.push_back({mode, evaluate(result.params, mc, test_sym, true)});
      write_report(bundle, cfg.out_dir);
    }
  }
  bundle.complete = true;
  write_report(bundle, cfg.out_dir);
  return bundle;
}

}  // namespace windmil::harness
