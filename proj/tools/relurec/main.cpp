// relurec: moment-based parameter recovery for depth-2 ReLU networks.
//
// Subcommands mirror the pipeline stages so runs can be driven end to end
// (pipeline) or stage by stage against a shared run directory.

#include <CLI11.hpp>

#include "relurec/dataset.hpp"
#include "relurec/errors.hpp"
#include "relurec/estimate.hpp"
#include "relurec/match.hpp"
#include "relurec/pipeline.hpp"
#include "relurec/recover.hpp"
#include "relurec/regress.hpp"
#include "relurec/rng.hpp"
#include "relurec/tensor_io.hpp"
#include "relurec/verify.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required = true) {
  auto* c = cmd->add_option("--config", args.config_path, "experiment config JSON");
  if (config_required) c->required();
  cmd->add_option("--out", args.out_dir, "run directory for artifacts");
  cmd->add_option("--seed", args.seed, "override the config root seed")
      ->each([&](const std::string&) { args.seed_given = true; });
  cmd->add_option("--threads", args.threads, "worker threads (0 = auto)");
}

relurec::ExperimentConfig resolve_config(const CommonArgs& args) {
  auto cfg = relurec::load_config(args.config_path);
  if (args.seed_given) cfg.seed = args.seed;
  if (args.threads > 0) cfg.threads = args.threads;
  if (cfg.threads > 0) relurec::set_worker_threads(cfg.threads);
  return cfg;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << j.dump(2) << '\n';
}

relurec::ReluNetwork resolve_network(const relurec::ExperimentConfig& cfg,
                                     const fs::path& out) {
  const fs::path stored = out / relurec::artifact::kNetwork;
  if (fs::exists(stored)) return relurec::load_network(stored);
  if (cfg.network_file) return relurec::load_network(*cfg.network_file);
  throw relurec::config_error("no network.json in the run directory; run generate first");
}

int cmd_generate(const CommonArgs& args) {
  const auto cfg = resolve_config(args);
  fs::create_directories(args.out_dir);
  relurec::ReluNetwork net;
  if (cfg.network_file) {
    net = relurec::load_network(*cfg.network_file);
  } else {
    net = relurec::random_network(*cfg.generator, cfg.seed);
  }
  relurec::save_network(fs::path(args.out_dir) / relurec::artifact::kNetwork, net);
  std::cout << "generated network d=" << net.d << " m=" << net.m << " B=" << net.B
            << '\n';
  return 0;
}

int cmd_sample(const CommonArgs& args, const std::string& output) {
  const auto cfg = resolve_config(args);
  fs::create_directories(args.out_dir);
  const auto net = resolve_network(cfg, args.out_dir);
  if (cfg.samples < 1) throw relurec::config_error("config.samples must be positive");
  const auto data =
      relurec::sample(net, cfg.samples, relurec::derive_seed(cfg.seed, "sample"));
  const fs::path path = output.empty()
                            ? fs::path(args.out_dir) / relurec::artifact::kDataset
                            : fs::path(output);
  relurec::save_dataset_auto(path, data);
  std::cout << "wrote " << data.size() << " samples to " << path.string() << '\n';
  return 0;
}

int cmd_estimate(const CommonArgs& args, const std::string& input, bool first_half) {
  const auto cfg = resolve_config(args);
  const fs::path out(args.out_dir);
  const fs::path data_path =
      input.empty() ? out / relurec::artifact::kDataset : fs::path(input);
  auto data = relurec::load_dataset_auto(data_path);
  if (first_half) data = data.slice(0, data.size() / 2);

  const relurec::ReluNetwork* truth = nullptr;
  relurec::ReluNetwork net;
  if (fs::exists(out / relurec::artifact::kNetwork)) {
    net = relurec::load_network(out / relurec::artifact::kNetwork);
    truth = &net;
  }

  const int k_max = 2 * cfg.ell + 2;
  const auto coeffs = relurec::estimate_coefficients_cv(data, k_max);
  json report;
  report["N"] = data.size();
  for (int k = 0; k <= k_max; ++k) {
    relurec::write_tensor(out / relurec::artifact::tensor_name(k), coeffs.at(k));
    json entry;
    entry["entry_stderr"] = *coeffs.stderr_for(k);
    entry["frobenius_error_estimate"] =
        relurec::frobenius_error_from_stderr(data.d, k, *coeffs.stderr_for(k));
    if (truth != nullptr) {
      entry["frobenius_error_vs_exact"] = relurec::frobenius_distance(
          coeffs.at(k), relurec::exact_hermite_coeff(*truth, k));
    }
    report["orders"][std::to_string(k)] = entry;
  }
  write_json_file(out / relurec::artifact::kEstimateReport, report);
  std::cout << "estimated T_0..T_" << k_max << " from " << data.size() << " samples\n";
  return 0;
}

int cmd_recover(const CommonArgs& args) {
  const auto cfg = resolve_config(args);
  const fs::path out(args.out_dir);
  const int k_max = 2 * cfg.ell + 2;
  const auto coeffs = relurec::load_coefficients(out, k_max);
  if (!coeffs.has(k_max)) {
    throw std::runtime_error("no " + relurec::artifact::tensor_name(k_max) + " under " +
                             out.string() + "; run estimate first");
  }
  int m_for_cap = cfg.thresholds.m_max;
  if (m_for_cap <= 0) {
    m_for_cap = resolve_network(cfg, out).m;
  }
  auto rc = cfg.recovery_config(m_for_cap);
  auto coeffs_with_noise = coeffs;
  if (fs::exists(out / relurec::artifact::kEstimateReport)) {
    // noise budget and entry weights from the estimate stage's own report
    std::ifstream is(out / relurec::artifact::kEstimateReport);
    const json report = json::parse(is);
    if (report.contains("orders")) {
      for (int k = 0; k <= k_max; ++k) {
        const std::string key = std::to_string(k);
        if (!report["orders"].contains(key)) continue;
        const json& entry = report["orders"][key];
        if (entry.contains("entry_stderr")) {
          coeffs_with_noise.set_stderr(k, entry["entry_stderr"].get<std::vector<double>>());
        }
        if (rc.eta0 <= 0.0 && k == k_max) {
          rc.eta0 = entry.value("frobenius_error_estimate", 0.0);
        }
      }
    }
  }
  const auto units = relurec::recover_parameters(coeffs_with_noise, rc,
                                                 relurec::derive_seed(cfg.seed, "recover"));
  relurec::save_units(out / relurec::artifact::kUnits, units);
  std::cout << "recovered " << units.size() << " units\n";
  return 0;
}

int cmd_regress(const CommonArgs& args, const std::string& input) {
  const auto cfg = resolve_config(args);
  const fs::path out(args.out_dir);
  const fs::path data_path =
      input.empty() ? out / relurec::artifact::kDataset : fs::path(input);
  const auto data = relurec::load_dataset_auto(data_path);
  const auto units = relurec::load_units(out / relurec::artifact::kUnits);

  const relurec::ReluNetwork net = resolve_network(cfg, out);
  const auto ro = cfg.regression_options(net);
  const auto reg = relurec::run_regression(data, units, ro,
                                           relurec::derive_seed(cfg.seed, "regress"), &net);
  relurec::save_predictor(out / relurec::artifact::kFinalNetwork, reg.g);
  json metrics;
  metrics["mse_estimate"] = reg.mse_estimate;
  metrics["mse_stderr"] = reg.mse_stderr;
  metrics["units"] = reg.g.hidden_units();
  metrics["truncated_fraction"] = reg.truncated_fraction;
  metrics["tau"] = reg.tau;
  metrics["pgd_gap"] = reg.pgd_gap;
  write_json_file(out / relurec::artifact::kMetrics, metrics);
  std::cout << "final predictor has " << reg.g.hidden_units()
            << " hidden units, mse estimate " << reg.mse_estimate << '\n';
  return 0;
}

int cmd_evaluate(const CommonArgs& args, std::size_t n_samples) {
  const auto cfg = resolve_config(args);
  const fs::path out(args.out_dir);
  const auto net = resolve_network(cfg, out);
  json report;

  if (fs::exists(out / relurec::artifact::kUnits)) {
    const auto units = relurec::load_units(out / relurec::artifact::kUnits);
    const auto match = relurec::match_units(net, units);
    report["match"] = {{"total_cost", match.total_cost},
                       {"max_unit_cost", match.max_unit_cost()},
                       {"unmatched_true", match.unmatched_true.size()},
                       {"unmatched_recovered", match.unmatched_recovered.size()}};
  }

  if (fs::exists(out / relurec::artifact::kFinalNetwork)) {
    const auto g = relurec::load_predictor(out / relurec::artifact::kFinalNetwork);
    const std::size_t n = n_samples > 0 ? n_samples : cfg.regression.eval_samples;
    relurec::Rng rng(relurec::derive_seed(cfg.seed, "evaluate"));
    Eigen::VectorXd x(net.d);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (int j = 0; j < net.d; ++j) x[j] = rng.gaussian();
      const double diff = relurec::evaluate(net, x) - g.evaluate(x);
      sum += diff * diff;
      sumsq += diff * diff * diff * diff;
    }
    const double mse = sum / static_cast<double>(n);
    const double var = std::max(0.0, sumsq / static_cast<double>(n) - mse * mse);
    report["mse"] = {{"estimate", mse},
                     {"stderr", std::sqrt(var / static_cast<double>(n))},
                     {"samples", n}};
  }

  if (report.empty()) {
    throw relurec::config_error("nothing to evaluate: no recovered units or predictor");
  }
  write_json_file(out / "evaluation.json", report);
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_pipeline(const CommonArgs& args) {
  const auto cfg = resolve_config(args);
  const auto result = relurec::run_pipeline(cfg, args.out_dir);
  if (!result.success) {
    std::cerr << "pipeline failed in stage " << result.failed_stage << ": "
              << result.error << '\n';
    return 1;
  }
  std::cout << "pipeline done: " << result.recovered_units << " units recovered, "
            << result.final_units << " in the final predictor, mse estimate "
            << result.mse_estimate << '\n';
  return 0;
}

int cmd_verify_lemmas(const CommonArgs& args, bool write_report) {
  relurec::VerifyOptions opt;
  if (args.seed_given) opt.seed = args.seed;
  const auto results = relurec::verify_lemmas(opt);
  json report = json::array();
  for (const auto& r : results) {
    std::cout << (r.passed ? "[PASS] " : "[FAIL] ") << r.name << ": " << r.detail << '\n';
    report.push_back(
        {{"name", r.name}, {"passed", r.passed}, {"worst_margin", r.worst_margin}});
  }
  if (write_report) {
    fs::create_directories(args.out_dir);
    write_json_file(fs::path(args.out_dir) / "lemma_report.json", report);
  }
  return relurec::all_passed(results) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moment-based recovery and improper learning of depth-2 ReLU networks"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string io_path;
  bool first_half = false;
  std::size_t eval_samples = 0;
  bool lemma_report = false;

  add_common(app.add_subcommand("generate", "draw or load the target network"), args);
  auto* s_sample = app.add_subcommand("sample", "draw Gaussian samples labelled by the network");
  add_common(s_sample, args);
  s_sample->add_option("--output", io_path, "dataset path (.csv for text, else binary)");
  auto* s_estimate = app.add_subcommand("estimate", "estimate Hermite coefficient tensors");
  add_common(s_estimate, args);
  s_estimate->add_option("--input", io_path, "dataset path (defaults to out/dataset.bin)");
  s_estimate->add_flag("--first-half", first_half,
                       "use only the first half of the dataset (pipeline split)");
  add_common(app.add_subcommand("recover", "recover units from estimated tensors"), args);
  auto* s_regress = app.add_subcommand("regress", "truncated regression on the second half");
  add_common(s_regress, args);
  s_regress->add_option("--input", io_path, "dataset path (defaults to out/dataset.bin)");
  auto* s_eval = app.add_subcommand("evaluate", "match report and held-out error");
  add_common(s_eval, args);
  s_eval->add_option("--samples", eval_samples, "Monte-Carlo samples for the error estimate");
  add_common(app.add_subcommand("pipeline", "run every stage into the run directory"), args);
  auto* s_verify = app.add_subcommand("verify-lemmas", "run the property suites");
  add_common(s_verify, args, /*config_required=*/false);
  s_verify->add_flag("--report", lemma_report, "also write lemma_report.json to --out");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("generate")) return cmd_generate(args);
    if (app.got_subcommand("sample")) return cmd_sample(args, io_path);
    if (app.got_subcommand("estimate")) return cmd_estimate(args, io_path, first_half);
    if (app.got_subcommand("recover")) return cmd_recover(args);
    if (app.got_subcommand("regress")) return cmd_regress(args, io_path);
    if (app.got_subcommand("evaluate")) return cmd_evaluate(args, eval_samples);
    if (app.got_subcommand("pipeline")) return cmd_pipeline(args);
    if (app.got_subcommand("verify-lemmas")) return cmd_verify_lemmas(args, lemma_report);
  } catch (const relurec::config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
