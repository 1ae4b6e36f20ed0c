#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pgd/experiments.hpp"
#include "pgd/simd/dispatch.hpp"

namespace {

std::vector<double> parse_p_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string p_list;
  std::string loss;
  double eta = 0.0;
  long long iters = -1;
  long long seed = -1;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "config JSON (schema_version 1)");
  cmd->add_option("--seed", f.seed, "dataset seed");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--p", f.p_list, "comma-separated list of p values");
  cmd->add_option("--eta", f.eta, "step size");
  cmd->add_option("--iters", f.iters, "iteration count");
  cmd->add_option("--loss", f.loss, "loss kind: exp | logistic")
      ->check(CLI::IsMember({"exp", "logistic"}));
  cmd->add_option("--workers", f.workers, "concurrent runs");
}

pgd::ExperimentConfig make_config(const std::string& experiment, const CommonFlags& f) {
  pgd::ExperimentConfig cfg = f.config_path.empty()
                                  ? pgd::default_config(experiment)
                                  : pgd::ExperimentConfig::from_json_file(f.config_path);
  cfg.experiment = experiment;
  if (f.seed >= 0) cfg.data_seed = static_cast<std::uint64_t>(f.seed);
  if (!f.out_dir.empty()) cfg.out_dir = f.out_dir;
  if (!f.p_list.empty()) cfg.p_values = parse_p_list(f.p_list);
  if (!f.loss.empty()) cfg.loss = f.loss;
  if (f.eta > 0.0) cfg.eta = f.eta;
  if (f.iters >= 0) cfg.iters = static_cast<std::size_t>(f.iters);
  if (f.workers > 0) cfg.workers = f.workers;
  return cfg;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"p-norm mirror-descent experiments"};
  app.require_subcommand(1);

  CommonFlags rates_f, bias_f, reg_f, toy_f, check_f;
  std::string gen_kind = "r2_anchored";
  long long gen_seed = 1;
  std::string gen_out = ".";

  auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset (CSV + sidecar)");
  gen->add_option("--kind", gen_kind,
                  "r2_anchored | r100_sparse | symmetric_pair | random_separable | two_moons");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output directory");

  auto* rates = app.add_subcommand("rates", "convergence-rate traces and summary");
  add_common(rates, rates_f);
  auto* bias = app.add_subcommand("bias-table", "rescaled-classifier norm table");
  add_common(bias, bias_f);
  auto* reg = app.add_subcommand("reg-path", "regularization path vs max margin");
  add_common(reg, reg_f);
  auto* toy = app.add_subcommand("toynet-hist", "small-network weight histograms");
  add_common(toy, toy_f);
  auto* check = app.add_subcommand("check-identities", "randomized identity sweeps");
  add_common(check, check_f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      pgd::GeneratorSpec spec;
      spec.kind = pgd::GeneratorSpec::kind_from_name(gen_kind);
      spec.seed = static_cast<std::uint64_t>(gen_seed);
      return pgd::cmd_gen_data(spec, gen_out);
    }
    if (rates->parsed()) return pgd::cmd_rates(make_config("rates", rates_f));
    if (bias->parsed()) return pgd::cmd_bias_table(make_config("bias_table", bias_f));
    if (reg->parsed()) return pgd::cmd_reg_path(make_config("reg_path", reg_f));
    if (toy->parsed()) return pgd::cmd_toynet_hist(make_config("toynet_hist", toy_f));
    if (check->parsed()) return pgd::cmd_check_identities(make_config("check_identities", check_f));
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pgd: %s\n", e.what());
    return 1;
  }
  return 1;
}
