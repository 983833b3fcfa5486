#include "autoeval/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>

#include "autoeval/baselines.hpp"
#include "autoeval/data.hpp"
#include "autoeval/evaluate.hpp"
#include "autoeval/regressor.hpp"
#include "autoeval/representation.hpp"
#include "autoeval/simulate.hpp"

namespace autoeval {

namespace {

GroupConfig parse_group_config(const std::string& groups, const std::string& mode,
                               double t_low, double t_high) {
  GroupConfig cfg;
  cfg.high = cfg.medium = cfg.low = false;
  std::stringstream ss(groups);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (name == "high") cfg.high = true;
    else if (name == "medium") cfg.medium = true;
    else if (name == "low") cfg.low = true;
    else throw CLI::ValidationError("--groups", "unknown group '" + name + "'");
  }
  if (mode == "quantile") cfg.mode = GroupConfig::Mode::Quantile;
  else if (mode == "fixed") cfg.mode = GroupConfig::Mode::Fixed;
  else throw CLI::ValidationError("--mode", "want quantile|fixed");
  cfg.t_low = t_low;
  cfg.t_high = t_high;
  cfg.validate();
  return cfg;
}

void sort_by_id(std::vector<MetaSet>& corpus) {
  std::sort(corpus.begin(), corpus.end(),
            [](const MetaSet& a, const MetaSet& b) { return a.id < b.id; });
}

std::map<std::string, AccuracyVector> manifest_truths(const std::filesystem::path& path) {
  std::map<std::string, AccuracyVector> truths;
  for (ManifestEntry& e : load_manifest(path)) {
    if (!e.accuracy) {
      throw std::runtime_error("manifest entry '" + e.id + "' has no recorded accuracy");
    }
    if (!truths.emplace(e.id, std::move(*e.accuracy)).second) {
      throw std::runtime_error("duplicate manifest id '" + e.id + "'");
    }
  }
  return truths;
}

int cmd_gen(const std::string& config_path, const std::string& out_dir,
            std::uint64_t seed, bool seed_given, int sets, int instances,
            int categories) {
  CorpusConfig cfg;
  if (!config_path.empty()) cfg = load_corpus_config(config_path);
  if (seed_given) cfg.seed = seed;
  if (sets > 0) cfg.num_sets = sets;
  if (instances > 0) cfg.num_instances = instances;
  if (categories > 0) cfg.num_categories = categories;
  cfg.validate();

  std::cout << "[gen] seed=" << cfg.seed << " sets=" << cfg.num_sets
            << " instances=" << cfg.num_instances
            << " categories=" << cfg.num_categories << " signal=[" << cfg.signal.lo
            << "," << cfg.signal.hi << "] noise=[" << cfg.noise.lo << ","
            << cfg.noise.hi << "] temperature=[" << cfg.temperature.lo << ","
            << cfg.temperature.hi << "] confusion=[" << cfg.confusion.lo << ","
            << cfg.confusion.hi << "] out=" << out_dir << "\n";

  const std::vector<MetaSet> corpus = generate_corpus(cfg);
  save_corpus(corpus, out_dir);
  std::cout << "[gen] wrote " << corpus.size() << " meta-sets\n";
  return 0;
}

int cmd_extract(const std::string& data, const std::string& groups,
                const std::string& mode, double t_low, double t_high,
                const std::string& out, std::uint64_t seed) {
  const GroupConfig cfg = parse_group_config(groups, mode, t_low, t_high);
  std::cout << "[extract] seed=" << seed << " data=" << data << " groups=" << groups
            << " mode=" << mode;
  if (cfg.mode == GroupConfig::Mode::Fixed) {
    std::cout << " t_low=" << cfg.t_low << " t_high=" << cfg.t_high;
  }
  std::cout << " out=" << out << "\n";

  std::vector<MetaSet> corpus = load_corpus(data);
  sort_by_id(corpus);
  std::vector<std::string> ids;
  std::vector<SetRepresentation> reps;
  for (const MetaSet& set : corpus) {
    ids.push_back(set.id);
    reps.push_back(extract_representation(set.matrix, cfg));
  }
  save_representations(ids, reps, cfg, out);
  std::cout << "[extract] wrote " << reps.size() << " representations\n";
  return 0;
}

int cmd_train(const std::string& reps_path, const std::string& manifest_path,
              const std::string& model_out, const std::vector<std::string>& ablate,
              double lambda, int epochs, double lr, int batch, std::uint64_t seed,
              std::string trace_out) {
  const RepresentationFile file = load_representations(reps_path);
  const auto truths = manifest_truths(manifest_path);

  ModelConfig mcfg;
  mcfg.num_categories = file.num_categories;
  mcfg.num_groups = file.config.num_groups();
  mcfg.lambda = lambda;
  for (const std::string& a : ablate) {
    if (a == "mean") mcfg.use_mean = false;
    else if (a == "cov") mcfg.use_cov = false;
    else if (a == "var") mcfg.use_var = false;
    else throw CLI::ValidationError("--ablate", "want mean|cov|var");
  }
  TrainConfig tcfg;
  tcfg.epochs = epochs;
  tcfg.learning_rate = lr;
  tcfg.batch_size = batch;
  tcfg.seed = seed;

  std::cout << "[train] seed=" << seed << " epochs=" << epochs << " lr=" << lr
            << " batch=" << batch << " lambda=" << lambda
            << " use_mean=" << (mcfg.use_mean ? "true" : "false")
            << " use_cov=" << (mcfg.use_cov ? "true" : "false")
            << " use_var=" << (mcfg.use_var ? "true" : "false")
            << " sets=" << file.reps.size() << " categories=" << mcfg.num_categories
            << " groups=" << mcfg.num_groups << "\n";

  std::vector<AccuracyVector> targets;
  for (const std::string& id : file.ids) {
    const auto it = truths.find(id);
    if (it == truths.end()) {
      throw std::runtime_error("representation id '" + id + "' missing from manifest");
    }
    targets.push_back(it->second);
  }

  TrainResult result = train(file.reps, targets, tcfg, mcfg);
  save_model(result.model, model_out);

  if (trace_out.empty()) {
    trace_out = std::filesystem::path(model_out).replace_extension(".trace.csv").string();
  }
  std::ofstream trace(trace_out);
  if (!trace) throw std::runtime_error("cannot write " + trace_out);
  trace << "epoch,loss\n";
  char buf[40];
  for (std::size_t e = 0; e < result.loss_trace.size(); ++e) {
    std::snprintf(buf, sizeof(buf), "%.17g", result.loss_trace[e]);
    trace << e << "," << buf << "\n";
  }
  std::cout << "[train] final_loss=" << result.loss_trace.back() << " model=" << model_out
            << " trace=" << trace_out << "\n";
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& reps_path,
                const std::string& out, std::uint64_t seed) {
  std::cout << "[predict] seed=" << seed << " model=" << model_path
            << " reps=" << reps_path << " out=" << out << "\n";
  const MultiBranchModel model = load_model(model_path);
  const RepresentationFile file = load_representations(reps_path);
  if (file.num_categories != model.config.num_categories ||
      file.config.num_groups() != model.config.num_groups) {
    throw std::runtime_error("representation file does not match model shape");
  }
  std::vector<AccuracyVector> preds;
  for (const SetRepresentation& rep : file.reps) preds.push_back(predict(model, rep));
  write_predictions_csv(file.ids, preds, out);
  std::cout << "[predict] wrote " << preds.size() << " predictions\n";
  return 0;
}

int cmd_baseline(const std::string& data, const std::string& method, double tau1,
                 double tau2, const std::string& out, std::uint64_t seed) {
  BaselineConfig cfg;
  cfg.method = BaselineConfig::parse_method(method);
  cfg.tau1 = tau1;
  cfg.tau2 = tau2;
  cfg.validate();
  std::cout << "[baseline] seed=" << seed << " method=" << method;
  if (cfg.method == BaselineConfig::Method::PS) std::cout << " tau1=" << tau1;
  if (cfg.method == BaselineConfig::Method::ES) std::cout << " tau2=" << tau2;
  std::cout << " data=" << data << " out=" << out << "\n";

  std::vector<MetaSet> corpus = load_corpus(data);
  sort_by_id(corpus);
  std::vector<std::string> ids;
  std::vector<AccuracyVector> preds;
  for (const MetaSet& set : corpus) {
    ids.push_back(set.id);
    preds.push_back(run_baseline(set.matrix, cfg));
  }
  write_predictions_csv(ids, preds, out);
  std::cout << "[baseline] wrote " << preds.size() << " predictions\n";
  return 0;
}

EvalReport evaluate_against(const PredictionsFile& pred,
                            const std::map<std::string, AccuracyVector>& truths) {
  if (pred.ids.size() != truths.size()) {
    throw std::runtime_error("prediction/manifest set counts differ: " +
                             std::to_string(pred.ids.size()) + " vs " +
                             std::to_string(truths.size()));
  }
  std::vector<AccuracyVector> truth_rows;
  for (const std::string& id : pred.ids) {
    const auto it = truths.find(id);
    if (it == truths.end()) {
      throw std::runtime_error("prediction id '" + id + "' missing from manifest");
    }
    truth_rows.push_back(it->second);
  }
  return evaluate(pred.ids, pred.predictions, truth_rows);
}

int cmd_eval(const std::string& pred_path, const std::string& manifest_path,
             const std::string& out, const std::vector<std::string>& baseline_specs,
             const std::string& model_path, std::uint64_t seed) {
  std::cout << "[eval] seed=" << seed << " pred=" << pred_path
            << " manifest=" << manifest_path << " out=" << out << "\n";
  const auto truths = manifest_truths(manifest_path);
  EvalReport report = evaluate_against(read_predictions_csv(pred_path), truths);

  for (const std::string& spec : baseline_specs) {
    const std::size_t eq = spec.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--baseline", "want name=predictions.csv");
    }
    const EvalReport b =
        evaluate_against(read_predictions_csv(spec.substr(eq + 1)), truths);
    report.baselines.push_back(
        {spec.substr(0, eq), b.overall_rmse_pct, b.category_rmse_pct});
  }

  report.config_echo = nlohmann::ordered_json::object();
  report.config_echo["pred"] = pred_path;
  report.config_echo["manifest"] = manifest_path;
  report.config_echo["seed"] = seed;
  if (!model_path.empty()) {
    const MultiBranchModel model = load_model(model_path);
    nlohmann::ordered_json mc;
    mc["num_categories"] = model.config.num_categories;
    mc["num_groups"] = model.config.num_groups;
    mc["use_mean"] = model.config.use_mean;
    mc["use_cov"] = model.config.use_cov;
    mc["use_var"] = model.config.use_var;
    mc["lambda"] = model.config.lambda;
    report.config_echo["model_config"] = std::move(mc);
  }

  std::ofstream json_out(out);
  if (!json_out) throw std::runtime_error("cannot write " + out);
  json_out << report_to_json(report).dump(2) << "\n";
  if (!json_out) throw std::runtime_error("write failure on " + out);

  std::cout << report_table(report);
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args) {
  CLI::App app{"accuracy prediction on unlabeled test sets"};
  app.require_subcommand(1);

  int exit_code = 0;
  auto wrap = [&exit_code](auto fn) {
    return [fn, &exit_code]() {
      try {
        exit_code = fn();
      } catch (const CLI::Error&) {
        throw;
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        exit_code = 1;
      }
    };
  };

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic labeled corpus");
  std::string gen_config, gen_out;
  std::uint64_t gen_seed = 0;
  int gen_sets = 0, gen_instances = 0, gen_categories = 0;
  gen->add_option("--config", gen_config, "key = value config file");
  gen->add_option("--out", gen_out, "output directory")->required();
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "master seed");
  gen->add_option("--sets", gen_sets, "override number of meta-sets");
  gen->add_option("--instances", gen_instances, "override instances per set");
  gen->add_option("--categories", gen_categories, "override category count");
  gen->callback(wrap([&]() {
    return cmd_gen(gen_config, gen_out, gen_seed, gen_seed_opt->count() > 0, gen_sets,
                   gen_instances, gen_categories);
  }));

  // extract
  auto* ext = app.add_subcommand("extract", "compute set representations");
  std::string ext_data, ext_groups = "high,medium,low", ext_mode = "quantile", ext_out;
  double ext_tlow = 1.0 / 3.0, ext_thigh = 2.0 / 3.0;
  std::uint64_t ext_seed = 0;
  ext->add_option("--data", ext_data, "corpus directory or manifest")->required();
  ext->add_option("--groups", ext_groups, "comma list of high,medium,low");
  ext->add_option("--mode", ext_mode, "quantile|fixed");
  ext->add_option("--t-low", ext_tlow, "fixed-mode low threshold");
  ext->add_option("--t-high", ext_thigh, "fixed-mode high threshold");
  ext->add_option("--out", ext_out, "representations JSON")->required();
  ext->add_option("--seed", ext_seed, "unused; echoed");
  ext->callback(wrap([&]() {
    return cmd_extract(ext_data, ext_groups, ext_mode, ext_tlow, ext_thigh, ext_out,
                       ext_seed);
  }));

  // train
  auto* tr = app.add_subcommand("train", "fit the accuracy regressor");
  std::string tr_reps, tr_manifest, tr_model, tr_trace;
  std::vector<std::string> tr_ablate;
  double tr_lambda = 1.0, tr_lr = 1e-3;
  int tr_epochs = 200, tr_batch = 32;
  std::uint64_t tr_seed = 0;
  tr->add_option("--reps", tr_reps, "representations JSON")->required();
  tr->add_option("--manifest", tr_manifest, "manifest with true accuracies")->required();
  tr->add_option("--model-out", tr_model, "model JSON output")->required();
  tr->add_option("--ablate", tr_ablate, "disable a branch: mean|cov|var");
  tr->add_option("--lambda", tr_lambda, "category loss weight");
  tr->add_option("--epochs", tr_epochs, "training epochs");
  tr->add_option("--lr", tr_lr, "learning rate");
  tr->add_option("--batch", tr_batch, "minibatch size in meta-sets");
  tr->add_option("--seed", tr_seed, "init/shuffle seed");
  tr->add_option("--trace-out", tr_trace, "loss trace CSV (default: <model>.trace.csv)");
  tr->callback(wrap([&]() {
    return cmd_train(tr_reps, tr_manifest, tr_model, tr_ablate, tr_lambda, tr_epochs,
                     tr_lr, tr_batch, tr_seed, tr_trace);
  }));

  // predict
  auto* pr = app.add_subcommand("predict", "predict accuracies for representations");
  std::string pr_model, pr_reps, pr_out;
  std::uint64_t pr_seed = 0;
  pr->add_option("--model", pr_model, "model JSON")->required();
  pr->add_option("--reps", pr_reps, "representations JSON")->required();
  pr->add_option("--out", pr_out, "predictions CSV")->required();
  pr->add_option("--seed", pr_seed, "unused; echoed");
  pr->callback(wrap([&]() { return cmd_predict(pr_model, pr_reps, pr_out, pr_seed); }));

  // baseline
  auto* bl = app.add_subcommand("baseline", "score-threshold baseline predictions");
  std::string bl_data, bl_method, bl_out;
  double bl_tau1 = 0.8, bl_tau2 = 0.2;
  std::uint64_t bl_seed = 0;
  bl->add_option("--data", bl_data, "corpus directory or manifest")->required();
  bl->add_option("--method", bl_method, "ps|es|ac")->required();
  bl->add_option("--tau1", bl_tau1, "PS threshold");
  bl->add_option("--tau2", bl_tau2, "ES threshold");
  bl->add_option("--out", bl_out, "predictions CSV")->required();
  bl->add_option("--seed", bl_seed, "unused; echoed");
  bl->callback(wrap([&]() {
    return cmd_baseline(bl_data, bl_method, bl_tau1, bl_tau2, bl_out, bl_seed);
  }));

  // eval
  auto* ev = app.add_subcommand("eval", "RMSE report for predictions");
  std::string ev_pred, ev_manifest, ev_out, ev_model;
  std::vector<std::string> ev_baselines;
  std::uint64_t ev_seed = 0;
  ev->add_option("--pred", ev_pred, "predictions CSV")->required();
  ev->add_option("--manifest", ev_manifest, "manifest with true accuracies")->required();
  ev->add_option("--out", ev_out, "report JSON output")->required();
  ev->add_option("--baseline", ev_baselines, "extra rows, name=predictions.csv");
  ev->add_option("--model", ev_model, "model JSON; echoes its config in the report");
  ev->add_option("--seed", ev_seed, "unused; echoed");
  ev->callback(wrap([&]() {
    return cmd_eval(ev_pred, ev_manifest, ev_out, ev_baselines, ev_model, ev_seed);
  }));

  std::vector<const char*> argv;
  argv.push_back("autoeval");
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return exit_code;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(std::move(args));
}

}  // namespace autoeval
