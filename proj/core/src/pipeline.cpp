#include "relurec/pipeline.hpp"

#include "parallel.hpp"
#include "relurec/dataset.hpp"
#include "relurec/errors.hpp"
#include "relurec/estimate.hpp"
#include "relurec/rng.hpp"
#include "relurec/tensor_io.hpp"

#include <json.hpp>

#include <fstream>
#include <set>

namespace relurec {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw config_error("unknown key \"" + it.key() + "\" in " + where);
    }
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

}  // namespace

RecoveryConfig ExperimentConfig::recovery_config(int network_m) const {
  RecoveryConfig rc;
  rc.ell = ell;
  rc.eta0 = thresholds.eta0;
  rc.eta1_rel = thresholds.eta1_rel;
  rc.eta2 = thresholds.eta2;
  rc.eta3 = thresholds.eta3;
  rc.m_max = thresholds.m_max > 0 ? thresholds.m_max : network_m;
  rc.good_set_c = thresholds.good_set_c;
  return rc;
}

RegressionOptions ExperimentConfig::regression_options(const ReluNetwork& net) const {
  RegressionOptions ro;
  ro.m = net.m;
  ro.B = net.B;
  ro.eps = epsilon;
  ro.mode = regression.mode == "full8" ? FeatureMode::Full8 : FeatureMode::Coordinated2;
  ro.steps = regression.steps;
  ro.certify = regression.certify;
  ro.eval_samples = regression.eval_samples;
  return ro;
}

ExperimentConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw config_error(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw config_error("config root must be an object");
  reject_unknown_keys(j,
                      {"version", "seed", "threads", "ell", "epsilon", "samples",
                       "network", "thresholds", "regression"},
                      "config");
  ExperimentConfig cfg;
  try {
    cfg.version = j.at("version").get<int>();
    if (cfg.version != 1) throw config_error("unsupported config version");
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("ell")) cfg.ell = j.at("ell").get<int>();
    if (j.contains("epsilon")) cfg.epsilon = j.at("epsilon").get<double>();
    if (j.contains("samples")) cfg.samples = j.at("samples").get<std::size_t>();

    const json& net = j.at("network");
    reject_unknown_keys(net, {"file", "generator"}, "network");
    if (net.contains("file") == net.contains("generator")) {
      throw config_error("network needs exactly one of \"file\" or \"generator\"");
    }
    if (net.contains("file")) {
      cfg.network_file = net.at("file").get<std::string>();
    } else {
      const json& g = net.at("generator");
      reject_unknown_keys(g, {"d", "m", "B", "bias_bound", "smin_floor", "ell"},
                          "network.generator");
      GeneratorOptions go;
      go.d = g.at("d").get<int>();
      go.m = g.at("m").get<int>();
      if (g.contains("B")) go.B = g.at("B").get<double>();
      if (g.contains("bias_bound")) go.bias_bound = g.at("bias_bound").get<double>();
      if (g.contains("smin_floor")) go.smin_floor = g.at("smin_floor").get<double>();
      go.ell = g.contains("ell") ? g.at("ell").get<int>() : cfg.ell;
      cfg.generator = go;
    }

    if (j.contains("thresholds")) {
      const json& t = j.at("thresholds");
      reject_unknown_keys(t, {"eta0", "eta1_rel", "eta2", "eta3", "m_max", "good_set_c"},
                          "thresholds");
      if (t.contains("eta0")) cfg.thresholds.eta0 = t.at("eta0").get<double>();
      if (t.contains("eta1_rel")) cfg.thresholds.eta1_rel = t.at("eta1_rel").get<double>();
      if (t.contains("eta2")) cfg.thresholds.eta2 = t.at("eta2").get<double>();
      if (t.contains("eta3")) cfg.thresholds.eta3 = t.at("eta3").get<double>();
      if (t.contains("m_max")) cfg.thresholds.m_max = t.at("m_max").get<int>();
      if (t.contains("good_set_c")) {
        cfg.thresholds.good_set_c = t.at("good_set_c").get<double>();
      }
    }
    if (j.contains("regression")) {
      const json& r = j.at("regression");
      reject_unknown_keys(r, {"mode", "certify", "steps", "eval_samples"}, "regression");
      if (r.contains("mode")) {
        cfg.regression.mode = r.at("mode").get<std::string>();
        if (cfg.regression.mode != "coordinated2" && cfg.regression.mode != "full8") {
          throw config_error("regression.mode must be coordinated2 or full8");
        }
      }
      if (r.contains("certify")) cfg.regression.certify = r.at("certify").get<bool>();
      if (r.contains("steps")) cfg.regression.steps = r.at("steps").get<int>();
      if (r.contains("eval_samples")) {
        cfg.regression.eval_samples = r.at("eval_samples").get<std::size_t>();
      }
    }
  } catch (const json::exception& e) {
    throw config_error(std::string("malformed config: ") + e.what());
  }
  if (cfg.ell < 1) throw config_error("ell must be >= 1");
  if (cfg.epsilon <= 0.0 || cfg.epsilon >= 1.0) throw config_error("epsilon must be in (0,1)");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open config " + path.string());
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return parse_config_text(text);
}

void set_worker_threads(int n) { detail::set_worker_threads(n); }

int worker_threads() { return detail::worker_threads(); }

namespace artifact {
std::string tensor_name(int k) { return "T_" + std::to_string(k) + ".tns"; }
}  // namespace artifact

void save_coefficients(const std::filesystem::path& dir, const HermiteCoefficientSet& set) {
  for (const auto& [k, tensor] : set.tensors) {
    write_tensor(dir / artifact::tensor_name(k), tensor);
  }
}

HermiteCoefficientSet load_coefficients(const std::filesystem::path& dir, int k_max) {
  HermiteCoefficientSet out;
  for (int k = 0; k <= k_max; ++k) {
    const auto path = dir / artifact::tensor_name(k);
    if (std::filesystem::exists(path)) out.set(k, read_tensor(path));
  }
  return out;
}

void save_predictor(const std::filesystem::path& path, const ConsolidatedPredictor& g) {
  json j;
  j["d"] = g.d;
  j["m"] = g.units.size();
  json a = json::array(), b = json::array(), w = json::array();
  for (const auto& u : g.units) {
    a.push_back(u.beta);
    b.push_back(u.b);
    for (Eigen::Index i = 0; i < u.w.size(); ++i) w.push_back(u.w[i]);
  }
  j["a"] = a;
  j["b"] = b;
  j["W_colmajor"] = w;
  double bound = 1.0;
  for (const auto& u : g.units) {
    bound = std::max({bound, std::abs(u.beta), std::abs(u.b)});
  }
  j["B"] = bound;
  write_json(path, j);
}

ConsolidatedPredictor load_predictor(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  const json j = json::parse(is);
  ConsolidatedPredictor g;
  g.d = j.at("d").get<int>();
  const auto m = j.at("m").get<std::size_t>();
  const auto a = j.at("a").get<std::vector<double>>();
  const auto b = j.at("b").get<std::vector<double>>();
  const auto w = j.at("W_colmajor").get<std::vector<double>>();
  if (a.size() != m || b.size() != m || w.size() != m * static_cast<std::size_t>(g.d)) {
    throw std::runtime_error("predictor JSON arrays do not match d, m");
  }
  for (std::size_t i = 0; i < m; ++i) {
    ConsolidatedUnit u;
    u.beta = a[i];
    u.b = b[i];
    u.w = Eigen::Map<const Eigen::VectorXd>(w.data() + i * g.d, g.d);
    g.units.push_back(std::move(u));
  }
  return g;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  if (cfg.threads > 0) detail::set_worker_threads(cfg.threads);

  json report;
  report["config"]["seed"] = cfg.seed;
  report["config"]["ell"] = cfg.ell;
  report["config"]["epsilon"] = cfg.epsilon;
  report["config"]["samples"] = cfg.samples;
  report["config"]["threads"] = cfg.threads;
  report["config"]["thresholds"] = {{"eta0", cfg.thresholds.eta0},
                                    {"eta1_rel", cfg.thresholds.eta1_rel},
                                    {"eta2", cfg.thresholds.eta2},
                                    {"eta3", cfg.thresholds.eta3},
                                    {"m_max", cfg.thresholds.m_max},
                                    {"good_set_c", cfg.thresholds.good_set_c}};
  report["config"]["regression"] = {{"mode", cfg.regression.mode},
                                    {"certify", cfg.regression.certify},
                                    {"steps", cfg.regression.steps},
                                    {"eval_samples", cfg.regression.eval_samples}};

  PipelineResult result;
  std::string stage;
  auto fail = [&](const std::string& what) {
    result.success = false;
    result.failed_stage = stage;
    result.error = what;
    report["error"] = {{"stage", stage}, {"message", what}};
    result.report_json = report.dump(2) + "\n";
    std::ofstream os(out / artifact::kRunReport);
    os << result.report_json;
    return result;
  };

  try {
    stage = "generate";
    const std::uint64_t gen_seed = derive_seed(cfg.seed, "generate");
    report["seeds"]["generate"] = gen_seed;
    ReluNetwork net;
    if (cfg.network_file) {
      net = load_network(*cfg.network_file);
      report["network"] = {{"source", *cfg.network_file}};
    } else {
      net = random_network(*cfg.generator, cfg.seed);
      report["network"] = {{"source", "generator"}};
    }
    report["network"]["d"] = net.d;
    report["network"]["m"] = net.m;
    report["network"]["B"] = net.B;
    save_network(out / artifact::kNetwork, net);

    stage = "sample";
    if (cfg.samples < 2) throw config_error("pipeline needs at least 2 samples");
    const std::uint64_t sample_seed = derive_seed(cfg.seed, "sample");
    report["seeds"]["sample"] = sample_seed;
    const Dataset data = sample(net, cfg.samples, sample_seed);
    save_dataset(out / artifact::kDataset, data);

    stage = "estimate";
    const std::size_t half = data.size() / 2;
    const Dataset first = data.slice(0, half);
    const int k_max = 2 * cfg.ell + 2;
    const HermiteCoefficientSet coeffs = estimate_coefficients_cv(first, k_max);
    double top_order_noise = 0.0;
    json est_report;
    est_report["N"] = first.size();
    for (int k = 0; k <= k_max; ++k) {
      const double err_est =
          frobenius_error_from_stderr(net.d, k, *coeffs.stderr_for(k));
      est_report["orders"][std::to_string(k)] = {
          {"entry_stderr", *coeffs.stderr_for(k)},
          {"frobenius_error_estimate", err_est},
          {"frobenius_error_vs_exact",
           frobenius_distance(coeffs.at(k), exact_hermite_coeff(net, k))}};
      write_tensor(out / artifact::tensor_name(k), coeffs.at(k));
      if (k == k_max) top_order_noise = err_est;
    }
    write_json(out / artifact::kEstimateReport, est_report);
    report["estimate"] = est_report;

    stage = "recover";
    const std::uint64_t recover_seed = derive_seed(cfg.seed, "recover");
    report["seeds"]["recover"] = recover_seed;
    RecoveryConfig rc = cfg.recovery_config(net.m);
    if (rc.eta0 <= 0.0) rc.eta0 = top_order_noise;  // noise budget from the data
    report["recover"]["eta0_effective"] = rc.eta0;
    const auto units = recover_parameters(coeffs, rc, recover_seed);
    save_units(out / artifact::kUnits, units);
    result.recovered_units = units.size();
    report["recover"]["units"] = units.size();
    report["recover"]["m_max"] = rc.m_max;
    report["recover"]["good_bias_radius"] =
        good_bias_radius(rc, cfg.epsilon, net.m, net.d, net.B);

    stage = "regress";
    const std::uint64_t regress_seed = derive_seed(cfg.seed, "regress");
    report["seeds"]["regress"] = regress_seed;
    const RegressionOptions ro = cfg.regression_options(net);
    const auto reg = run_regression(data, units, ro, regress_seed, &net);
    save_predictor(out / artifact::kFinalNetwork, reg.g);
    json metrics;
    metrics["mse_estimate"] = reg.mse_estimate;
    metrics["mse_stderr"] = reg.mse_stderr;
    metrics["units"] = reg.g.hidden_units();
    metrics["truncated_fraction"] = reg.truncated_fraction;
    metrics["tau"] = reg.tau;
    metrics["pgd_gap"] = reg.pgd_gap;
    write_json(out / artifact::kMetrics, metrics);
    report["regress"] = metrics;
    result.final_units = reg.g.hidden_units();
    result.mse_estimate = reg.mse_estimate;
    result.mse_stderr = reg.mse_stderr;

    stage = "match";
    const auto match = match_units(net, units);
    json mj;
    mj["total_cost"] = match.total_cost;
    mj["unmatched_true"] = match.unmatched_true;
    mj["unmatched_recovered"] = match.unmatched_recovered;
    json pairs = json::array();
    for (const auto& um : match.matches) {
      pairs.push_back({{"true_index", um.true_index},
                       {"recovered_index", um.recovered_index},
                       {"sign", um.sign},
                       {"w_error", um.w_error},
                       {"b_error", um.b_error},
                       {"a_error", um.a_error},
                       {"cost", um.cost}});
    }
    mj["matches"] = pairs;
    write_json(out / artifact::kMatchReport, mj);
    report["match"] = mj;
    result.total_match_cost = match.total_cost;
  } catch (const std::exception& e) {
    return fail(e.what());
  }

  result.success = true;
  result.report_json = report.dump(2) + "\n";
  std::ofstream os(out / artifact::kRunReport);
  os << result.report_json;
  return result;
}

}  // namespace relurec
