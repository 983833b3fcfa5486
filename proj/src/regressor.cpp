#include "autoeval/regressor.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "autoeval/random.hpp"

namespace autoeval {

namespace {

using ordered_json = nlohmann::ordered_json;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::VectorXd relu(const Eigen::VectorXd& x) { return x.cwiseMax(0.0); }

Eigen::VectorXd relu_mask(const Eigen::VectorXd& pre) {
  return (pre.array() > 0.0).cast<double>();
}

Eigen::VectorXd standardize(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                            const Eigen::VectorXd& sd) {
  return ((x - mu).array() / sd.array()).matrix();
}

Eigen::VectorXd flatten_var_slice(const Eigen::MatrixXd& slice) {
  Eigen::VectorXd out(slice.size());
  Eigen::Index k = 0;
  for (Eigen::Index g = 0; g < slice.rows(); ++g) {
    for (Eigen::Index d = 0; d < slice.cols(); ++d) out(k++) = slice(g, d);
  }
  return out;
}

void check_shapes(const ModelConfig& cfg, const SetRepresentation& rep) {
  const Eigen::Index c = cfg.num_categories;
  const int g = cfg.num_groups;
  if (static_cast<int>(rep.f_mean.size()) != g ||
      static_cast<int>(rep.f_cov.size()) != g ||
      rep.num_categories() != c ||
      static_cast<Eigen::Index>(rep.f_var_all.size()) != c) {
    throw std::invalid_argument("representation shape does not match model config");
  }
  for (const Eigen::MatrixXd& s : rep.f_mean) {
    if (s.rows() != c || s.cols() != c) {
      throw std::invalid_argument("f_mean slice has wrong shape");
    }
  }
  for (const Eigen::MatrixXd& s : rep.f_var_all) {
    if (s.rows() != g || s.cols() != c) {
      throw std::invalid_argument("f_var_all slice has wrong shape");
    }
  }
}

// Everything backward needs from one forward pass.
struct Activations {
  Eigen::VectorXd xm, xc;
  Eigen::VectorXd m_a1, m_h1, m_a2, m_h2;
  Eigen::VectorXd c_a1, c_h1, c_a2, c_h2;
  Eigen::VectorXd global;
  Eigen::VectorXd g_a1, g_h1;
  double s = 0.0;
  double overall = 0.0;
  std::vector<Eigen::VectorXd> head_in, h_a1, h_h1;
  Eigen::VectorXd category;
};

void run_forward(const MultiBranchModel& model, const SetRepresentation& rep,
                 Activations& act) {
  const ModelConfig& cfg = model.config;
  check_shapes(cfg, rep);
  const Parameters& p = model.params;
  const Standardization& st = model.standardization;

  act.global = Eigen::VectorXd::Zero(cfg.global_dim());
  if (cfg.use_mean) {
    act.xm = standardize(flatten_slices(rep.f_mean), st.mean_mu, st.mean_sd);
    act.m_a1 = p.mean1.w * act.xm + p.mean1.b;
    act.m_h1 = relu(act.m_a1);
    act.m_a2 = p.mean2.w * act.m_h1 + p.mean2.b;
    act.m_h2 = relu(act.m_a2);
    act.global.head(cfg.branch_out) = act.m_h2;
  }
  if (cfg.use_cov) {
    act.xc = standardize(flatten_slices(rep.f_cov), st.cov_mu, st.cov_sd);
    act.c_a1 = p.cov1.w * act.xc + p.cov1.b;
    act.c_h1 = relu(act.c_a1);
    act.c_a2 = p.cov2.w * act.c_h1 + p.cov2.b;
    act.c_h2 = relu(act.c_a2);
    act.global.tail(cfg.branch_out) = act.c_h2;
  }

  act.g_a1 = p.global1.w * act.global + p.global1.b;
  act.g_h1 = relu(act.g_a1);
  act.s = (p.global_out.w * act.g_h1)(0) + p.global_out.b(0);
  act.overall = logistic(act.s);

  const Eigen::Index c = cfg.num_categories;
  act.head_in.resize(c);
  act.h_a1.resize(c);
  act.h_h1.resize(c);
  act.category.resize(c);
  for (Eigen::Index k = 0; k < c; ++k) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(cfg.head_input());
    u.head(cfg.global_dim()) = act.global;
    if (cfg.use_var) {
      u.tail(cfg.var_input()) =
          standardize(flatten_var_slice(rep.f_var_all[k]), st.var_mu, st.var_sd);
    }
    act.head_in[k] = std::move(u);
    act.h_a1[k] = p.head1.w * act.head_in[k] + p.head1.b;
    act.h_h1[k] = relu(act.h_a1[k]);
    const double t = (p.head_out.w * act.h_h1[k])(0) + p.head_out.b(0);
    act.category(k) = logistic(t);
  }
}

DenseLayer zero_layer(int out, int in) {
  return {Eigen::MatrixXd::Zero(out, in), Eigen::VectorXd::Zero(out)};
}

}  // namespace

void ModelConfig::validate() const {
  if (num_categories < 2) throw std::invalid_argument("need at least 2 categories");
  if (num_groups < 1 || num_groups > 3) {
    throw std::invalid_argument("num_groups must be 1..3");
  }
  if (!use_mean && !use_cov) {
    throw std::invalid_argument("at least one of the mean/cov branches must be enabled");
  }
  if (branch_hidden <= 0 || branch_out <= 0 || global_hidden <= 0 || head_hidden <= 0) {
    throw std::invalid_argument("hidden sizes must be positive");
  }
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
}

void TrainConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("learning rate must be > 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (!(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1 && epsilon > 0)) {
    throw std::invalid_argument("invalid moment decay constants");
  }
}

std::vector<std::pair<std::string, DenseLayer*>> layer_refs(Parameters& p) {
  return {{"mean_branch_1", &p.mean1},     {"mean_branch_2", &p.mean2},
          {"cov_branch_1", &p.cov1},       {"cov_branch_2", &p.cov2},
          {"global_head_1", &p.global1},   {"global_head_out", &p.global_out},
          {"category_head_1", &p.head1},   {"category_head_out", &p.head_out}};
}

std::vector<std::pair<std::string, const DenseLayer*>> layer_refs(const Parameters& p) {
  return {{"mean_branch_1", &p.mean1},     {"mean_branch_2", &p.mean2},
          {"cov_branch_1", &p.cov1},       {"cov_branch_2", &p.cov2},
          {"global_head_1", &p.global1},   {"global_head_out", &p.global_out},
          {"category_head_1", &p.head1},   {"category_head_out", &p.head_out}};
}

bool is_category_layer(const std::string& name) {
  return name.rfind("category_", 0) == 0;
}

Eigen::VectorXd flatten_slices(const std::vector<Eigen::MatrixXd>& slices) {
  Eigen::Index total = 0;
  for (const Eigen::MatrixXd& s : slices) total += s.size();
  Eigen::VectorXd out(total);
  Eigen::Index k = 0;
  for (const Eigen::MatrixXd& s : slices) {
    for (Eigen::Index d = 0; d < s.rows(); ++d) {
      for (Eigen::Index j = 0; j < s.cols(); ++j) out(k++) = s(d, j);
    }
  }
  return out;
}

Parameters zero_parameters(const ModelConfig& cfg) {
  Parameters p;
  p.mean1 = zero_layer(cfg.branch_hidden, cfg.branch_input());
  p.mean2 = zero_layer(cfg.branch_out, cfg.branch_hidden);
  p.cov1 = zero_layer(cfg.branch_hidden, cfg.branch_input());
  p.cov2 = zero_layer(cfg.branch_out, cfg.branch_hidden);
  p.global1 = zero_layer(cfg.global_hidden, cfg.global_dim());
  p.global_out = zero_layer(1, cfg.global_hidden);
  p.head1 = zero_layer(cfg.head_hidden, cfg.head_input());
  p.head_out = zero_layer(1, cfg.head_hidden);
  return p;
}

Parameters init_parameters(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Parameters p = zero_parameters(cfg);
  SplitMix64 rng(seed);
  for (auto& [name, layer] : layer_refs(p)) {
    const double r = std::sqrt(6.0 / double(layer->w.rows() + layer->w.cols()));
    for (Eigen::Index i = 0; i < layer->w.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer->w.cols(); ++j) {
        layer->w(i, j) = (2.0 * rng.next_unit() - 1.0) * r;
      }
    }
  }
  return p;
}

Standardization compute_standardization(const std::vector<SetRepresentation>& reps,
                                        const ModelConfig& cfg) {
  if (reps.empty()) throw std::invalid_argument("empty corpus");
  for (const SetRepresentation& rep : reps) check_shapes(cfg, rep);

  auto two_pass = [](const std::vector<Eigen::VectorXd>& samples,
                     Eigen::VectorXd& mu, Eigen::VectorXd& sd) {
    mu = Eigen::VectorXd::Zero(samples.front().size());
    for (const Eigen::VectorXd& x : samples) mu += x;
    mu /= double(samples.size());
    Eigen::VectorXd var = Eigen::VectorXd::Zero(mu.size());
    for (const Eigen::VectorXd& x : samples) {
      var += (x - mu).cwiseProduct(x - mu);
    }
    var /= double(samples.size());
    sd = var.cwiseSqrt().cwiseMax(1e-8);
  };

  std::vector<Eigen::VectorXd> mean_feats, cov_feats, var_feats;
  for (const SetRepresentation& rep : reps) {
    mean_feats.push_back(flatten_slices(rep.f_mean));
    cov_feats.push_back(flatten_slices(rep.f_cov));
    for (const Eigen::MatrixXd& slice : rep.f_var_all) {
      var_feats.push_back(flatten_var_slice(slice));
    }
  }

  Standardization st;
  two_pass(mean_feats, st.mean_mu, st.mean_sd);
  two_pass(cov_feats, st.cov_mu, st.cov_sd);
  two_pass(var_feats, st.var_mu, st.var_sd);
  return st;
}

ForwardResult forward(const MultiBranchModel& model, const SetRepresentation& rep) {
  Activations act;
  run_forward(model, rep, act);
  return {act.overall, act.category, act.global};
}

LossTerms loss_terms(double overall_pred, const Eigen::VectorXd& category_preds,
                     const AccuracyVector& target, double lambda) {
  if (!is_defined(target.overall)) {
    throw std::invalid_argument("target overall accuracy must be defined");
  }
  LossTerms t;
  const double diff = overall_pred - target.overall;
  t.overall_term = diff * diff;
  int defined = 0;
  double sum = 0.0;
  for (Eigen::Index k = 0; k < target.per_category.size(); ++k) {
    if (!is_defined(target.per_category(k))) continue;
    const double d = category_preds(k) - target.per_category(k);
    sum += d * d;
    ++defined;
  }
  t.category_term = defined > 0 ? sum / defined : 0.0;
  t.total = t.overall_term + lambda * t.category_term;
  return t;
}

GradientBundle backward(const MultiBranchModel& model, const SetRepresentation& rep,
                        const AccuracyVector& target, double lambda,
                        LossTerms* terms) {
  const ModelConfig& cfg = model.config;
  const Parameters& p = model.params;
  Activations act;
  run_forward(model, rep, act);

  const LossTerms lt = loss_terms(act.overall, act.category, target, lambda);
  if (terms) *terms = lt;

  GradientBundle g = zero_parameters(cfg);

  // Overall term. This is the only loss component that reaches the main
  // branch; the category term below treats act.global as a constant.
  const double d_s = 2.0 * (act.overall - target.overall) * act.overall *
                     (1.0 - act.overall);
  g.global_out.w += d_s * act.g_h1.transpose();
  g.global_out.b(0) += d_s;
  const Eigen::VectorXd d_g1 =
      (p.global_out.w.transpose() * d_s).cwiseProduct(relu_mask(act.g_a1));
  g.global1.w += d_g1 * act.global.transpose();
  g.global1.b += d_g1;
  const Eigen::VectorXd d_global = p.global1.w.transpose() * d_g1;

  if (cfg.use_mean) {
    const Eigen::VectorXd d_h2 =
        d_global.head(cfg.branch_out).cwiseProduct(relu_mask(act.m_a2));
    g.mean2.w += d_h2 * act.m_h1.transpose();
    g.mean2.b += d_h2;
    const Eigen::VectorXd d_h1 =
        (p.mean2.w.transpose() * d_h2).cwiseProduct(relu_mask(act.m_a1));
    g.mean1.w += d_h1 * act.xm.transpose();
    g.mean1.b += d_h1;
  }
  if (cfg.use_cov) {
    const Eigen::VectorXd d_h2 =
        d_global.tail(cfg.branch_out).cwiseProduct(relu_mask(act.c_a2));
    g.cov2.w += d_h2 * act.c_h1.transpose();
    g.cov2.b += d_h2;
    const Eigen::VectorXd d_h1 =
        (p.cov2.w.transpose() * d_h2).cwiseProduct(relu_mask(act.c_a1));
    g.cov1.w += d_h1 * act.xc.transpose();
    g.cov1.b += d_h1;
  }

  // Category term: gradients stop at the category head.
  int defined = 0;
  for (Eigen::Index k = 0; k < target.per_category.size(); ++k) {
    if (is_defined(target.per_category(k))) ++defined;
  }
  if (defined > 0 && lambda != 0.0) {
    for (Eigen::Index k = 0; k < target.per_category.size(); ++k) {
      if (!is_defined(target.per_category(k))) continue;
      const double pk = act.category(k);
      const double d_t = lambda * (2.0 / defined) *
                         (pk - target.per_category(k)) * pk * (1.0 - pk);
      g.head_out.w += d_t * act.h_h1[k].transpose();
      g.head_out.b(0) += d_t;
      const Eigen::VectorXd d_h1 =
          (p.head_out.w.transpose() * d_t).cwiseProduct(relu_mask(act.h_a1[k]));
      g.head1.w += d_h1 * act.head_in[k].transpose();
      g.head1.b += d_h1;
    }
  }
  return g;
}

TrainResult train(const std::vector<SetRepresentation>& reps,
                  const std::vector<AccuracyVector>& targets,
                  const TrainConfig& tcfg, const ModelConfig& mcfg) {
  tcfg.validate();
  mcfg.validate();
  if (reps.empty()) throw std::invalid_argument("empty training corpus");
  if (reps.size() != targets.size()) {
    throw std::invalid_argument("representation/target count mismatch");
  }

  MultiBranchModel model;
  model.config = mcfg;
  model.standardization = compute_standardization(reps, mcfg);
  model.params = init_parameters(mcfg, tcfg.seed);

  GradientBundle m = zero_parameters(mcfg);
  GradientBundle v = zero_parameters(mcfg);
  long step = 0;

  const std::size_t k = reps.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  SplitMix64 shuffle_rng = SplitMix64(tcfg.seed).fork(0x7261696e);

  std::vector<double> trace;
  trace.reserve(tcfg.epochs);

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    for (std::size_t i = k; i > 1; --i) {
      const std::size_t j = shuffle_rng.next() % i;
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < k; start += tcfg.batch_size) {
      const std::size_t end = std::min(k, start + tcfg.batch_size);
      std::vector<std::size_t> batch(order.begin() + start, order.begin() + end);
      std::sort(batch.begin(), batch.end());  // fixed-order gradient reduction

      GradientBundle grad = zero_parameters(mcfg);
      auto grad_refs = layer_refs(grad);
      for (std::size_t idx : batch) {
        LossTerms lt;
        const GradientBundle gi =
            backward(model, reps[idx], targets[idx], mcfg.lambda, &lt);
        epoch_loss += lt.total;
        auto gi_refs = layer_refs(gi);
        for (std::size_t li = 0; li < grad_refs.size(); ++li) {
          grad_refs[li].second->w += gi_refs[li].second->w;
          grad_refs[li].second->b += gi_refs[li].second->b;
        }
      }
      const double inv = 1.0 / double(batch.size());

      ++step;
      const double bc1 = 1.0 - std::pow(tcfg.beta1, double(step));
      const double bc2 = 1.0 - std::pow(tcfg.beta2, double(step));
      auto p_refs = layer_refs(model.params);
      auto m_refs = layer_refs(m);
      auto v_refs = layer_refs(v);
      for (std::size_t li = 0; li < p_refs.size(); ++li) {
        const Eigen::MatrixXd gw = grad_refs[li].second->w * inv;
        const Eigen::VectorXd gb = grad_refs[li].second->b * inv;
        Eigen::MatrixXd& mw = m_refs[li].second->w;
        Eigen::VectorXd& mb = m_refs[li].second->b;
        Eigen::MatrixXd& vw = v_refs[li].second->w;
        Eigen::VectorXd& vb = v_refs[li].second->b;
        mw = tcfg.beta1 * mw + (1.0 - tcfg.beta1) * gw;
        mb = tcfg.beta1 * mb + (1.0 - tcfg.beta1) * gb;
        vw = tcfg.beta2 * vw + (1.0 - tcfg.beta2) * gw.cwiseProduct(gw);
        vb = tcfg.beta2 * vb + (1.0 - tcfg.beta2) * gb.cwiseProduct(gb);
        p_refs[li].second->w.array() -=
            tcfg.learning_rate * (mw.array() / bc1) /
            ((vw.array() / bc2).sqrt() + tcfg.epsilon);
        p_refs[li].second->b.array() -=
            tcfg.learning_rate * (mb.array() / bc1) /
            ((vb.array() / bc2).sqrt() + tcfg.epsilon);
      }
    }
    trace.push_back(epoch_loss / double(k));
  }

  return {std::move(model), std::move(trace)};
}

AccuracyVector predict(const MultiBranchModel& model, const SetRepresentation& rep) {
  const ForwardResult out = forward(model, rep);
  return {out.category, out.overall};
}

namespace {

ordered_json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.begin(), v.end());
}

Eigen::VectorXd vector_from_json(const ordered_json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
}

ordered_json layer_to_json(const DenseLayer& layer) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
    rows.push_back(std::vector<double>(layer.w.row(i).begin(), layer.w.row(i).end()));
  }
  ordered_json out;
  out["w"] = std::move(rows);
  out["b"] = vector_to_json(layer.b);
  return out;
}

void layer_from_json(const ordered_json& j, DenseLayer& layer, const std::string& name) {
  const auto rows = j.at("w").get<std::vector<std::vector<double>>>();
  if (static_cast<Eigen::Index>(rows.size()) != layer.w.rows()) {
    throw std::runtime_error("model file: layer '" + name + "' has wrong row count");
  }
  for (Eigen::Index i = 0; i < layer.w.rows(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != layer.w.cols()) {
      throw std::runtime_error("model file: layer '" + name + "' has wrong column count");
    }
    for (Eigen::Index c = 0; c < layer.w.cols(); ++c) layer.w(i, c) = rows[i][c];
  }
  const Eigen::VectorXd b = vector_from_json(j.at("b"));
  if (b.size() != layer.b.size()) {
    throw std::runtime_error("model file: layer '" + name + "' has wrong bias size");
  }
  layer.b = b;
}

}  // namespace

void save_model(const MultiBranchModel& model, const std::filesystem::path& path) {
  ordered_json doc;
  doc["format_version"] = 1;
  ordered_json jc;
  jc["num_categories"] = model.config.num_categories;
  jc["num_groups"] = model.config.num_groups;
  jc["use_mean"] = model.config.use_mean;
  jc["use_cov"] = model.config.use_cov;
  jc["use_var"] = model.config.use_var;
  jc["branch_hidden"] = model.config.branch_hidden;
  jc["branch_out"] = model.config.branch_out;
  jc["global_hidden"] = model.config.global_hidden;
  jc["head_hidden"] = model.config.head_hidden;
  jc["lambda"] = model.config.lambda;
  doc["model_config"] = std::move(jc);

  ordered_json js;
  js["mean"] = {{"mu", vector_to_json(model.standardization.mean_mu)},
                {"sd", vector_to_json(model.standardization.mean_sd)}};
  js["cov"] = {{"mu", vector_to_json(model.standardization.cov_mu)},
               {"sd", vector_to_json(model.standardization.cov_sd)}};
  js["var"] = {{"mu", vector_to_json(model.standardization.var_mu)},
               {"sd", vector_to_json(model.standardization.var_sd)}};
  doc["standardization"] = std::move(js);

  ordered_json jp;
  for (const auto& [name, layer] : layer_refs(model.params)) {
    jp[name] = layer_to_json(*layer);
  }
  doc["parameters"] = std::move(jp);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failure on " + path.string());
}

MultiBranchModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  ordered_json doc;
  try {
    in >> doc;
  } catch (const std::exception& e) {
    throw std::runtime_error(path.string() + ": parse error: " + e.what());
  }
  if (doc.value("format_version", 0) != 1) {
    throw std::runtime_error(path.string() + ": unsupported format_version " +
                             std::to_string(doc.value("format_version", 0)));
  }

  MultiBranchModel model;
  const auto& jc = doc.at("model_config");
  model.config.num_categories = jc.at("num_categories").get<int>();
  model.config.num_groups = jc.at("num_groups").get<int>();
  model.config.use_mean = jc.at("use_mean").get<bool>();
  model.config.use_cov = jc.at("use_cov").get<bool>();
  model.config.use_var = jc.at("use_var").get<bool>();
  model.config.branch_hidden = jc.at("branch_hidden").get<int>();
  model.config.branch_out = jc.at("branch_out").get<int>();
  model.config.global_hidden = jc.at("global_hidden").get<int>();
  model.config.head_hidden = jc.at("head_hidden").get<int>();
  model.config.lambda = jc.at("lambda").get<double>();
  model.config.validate();

  const auto& js = doc.at("standardization");
  model.standardization.mean_mu = vector_from_json(js.at("mean").at("mu"));
  model.standardization.mean_sd = vector_from_json(js.at("mean").at("sd"));
  model.standardization.cov_mu = vector_from_json(js.at("cov").at("mu"));
  model.standardization.cov_sd = vector_from_json(js.at("cov").at("sd"));
  model.standardization.var_mu = vector_from_json(js.at("var").at("mu"));
  model.standardization.var_sd = vector_from_json(js.at("var").at("sd"));
  if (model.standardization.mean_mu.size() != model.config.branch_input() ||
      model.standardization.var_mu.size() != model.config.var_input()) {
    throw std::runtime_error(path.string() + ": standardization shape mismatch");
  }

  model.params = zero_parameters(model.config);
  for (auto& [name, layer] : layer_refs(model.params)) {
    layer_from_json(doc.at("parameters").at(name), *layer, name);
  }
  return model;
}

}  // namespace autoeval
