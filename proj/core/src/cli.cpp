#include "phn/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "phn/errors.hpp"
#include "phn/io.hpp"
#include "phn/lyapunov.hpp"
#include "phn/parallel.hpp"
#include "phn/occupation.hpp"
#include "phn/queue_sim.hpp"
#include "phn/stats.hpp"

namespace phn::cli {

namespace {
using nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Context {
  json config;            // resolved config (after CLI overrides)
  std::uint64_t config_hash = 0;
  std::uint64_t master_seed = 0;
  std::size_t n_workers = 0;
  fs::path out_dir;
  DiffusionModel model;
};

Vec vec_from(const json& arr) {
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<int>(i)) = arr[i].get<double>();
  return v;
}

TestFunction parse_test_function(const json& h) {
  const std::string type = h.at("type").get<std::string>();
  if (type == "indicator_e") return indicator_e(h.value("c", 0.0));
  if (type == "indicator_coord")
    return indicator_coord(h.at("i").get<int>(), h.value("c", 0.0));
  if (type == "tanh") return tanh_h(vec_from(h.at("a")));
  throw InvalidArgument("unknown test function type: " + type);
}

json config_envelope(const Context& ctx) {
  json j;
  j["config"] = ctx.config;
  j["config_hash"] = io::fnv1a64(ctx.config.dump());
  j["master_seed"] = ctx.master_seed;
  j["version"] = PHN_VERSION;
  return j;
}

void write_json_report(const Context& ctx, const std::string& name, json body) {
  json envelope = config_envelope(ctx);
  for (auto& [key, value] : body.items()) envelope[key] = std::move(value);
  std::ofstream out(ctx.out_dir / name);
  if (!out) throw InvalidArgument("cannot write " + (ctx.out_dir / name).string());
  out << envelope.dump(2) << "\n";
}

std::ofstream open_csv(const Context& ctx, const std::string& name) {
  std::ofstream out(ctx.out_dir / name);
  if (!out) throw InvalidArgument("cannot write " + (ctx.out_dir / name).string());
  out << io::file_header(ctx.config_hash, ctx.master_seed) << "\n";
  return out;
}

// ---------------------------------------------------------------------------

int cmd_validate_model(const Context& ctx) {
  const DiffusionModel& m = ctx.model;
  std::cout << "model ok: d=" << m.dim() << " alpha=" << m.alpha << " beta=" << m.beta << "\n";
  std::cout << "R =\n" << m.R << "\n";
  std::cout << "gamma = " << m.gamma.transpose() << "\n";
  std::cout << "sigma_sq =\n" << m.sigma_sq << "\n";
  std::cout << "sigma (Cholesky) =\n" << m.sigma << "\n";
  std::cout << "c_ellip = " << io::format_double(m.c_ellip) << "\n";
  std::cout << "c_op = " << io::format_double(m.c_op)
            << " c_op_tilde = " << io::format_double(m.c_op_tilde) << "\n";
  return kExitOk;
}

int cmd_sample(const Context& ctx) {
  const json& cfg = ctx.config.at("em");
  const double eta = cfg.at("eta").get<double>();
  const auto n_samples = cfg.value<std::int64_t>("n_samples", 100000);
  const auto burn_in = cfg.value<std::int64_t>("burn_in", 10000);
  std::int64_t gap = cfg.value<std::int64_t>("gap", 0);
  if (gap <= 0) gap = static_cast<std::int64_t>(std::ceil(1.0 / eta));
  const int n_chains = cfg.value<int>("n_chains", 8);

  const SampleSet samples = sample_invariant(ctx.model, eta, n_samples, gap, burn_in,
                                             ctx.master_seed, n_chains, ctx.n_workers);
  io::write_samples_csv(ctx.out_dir / "samples.csv", samples, ctx.config_hash);
  if (cfg.value("binary", false))
    io::write_samples_binary(ctx.out_dir / "samples.bin", samples);

  const MomentEstimate m2 = moment_estimate(samples, 2.0);
  write_json_report(ctx, "sample_summary.json",
                    json{{"eta", eta},
                         {"n_samples", samples.size()},
                         {"gap", gap},
                         {"burn_in", burn_in},
                         {"n_chains", n_chains},
                         {"moment2", m2.value},
                         {"moment2_stderr", m2.std_error}});
  return kExitOk;
}

int cmd_converge(const Context& ctx) {
  const json& cfg = ctx.config.at("converge");
  SweepConfig sweep;
  sweep.n_samples = cfg.value<std::int64_t>("n_samples", 100000);
  sweep.burn_in = cfg.value<std::int64_t>("burn_in", 10000);
  sweep.gap = cfg.value<std::int64_t>("gap", -1);
  sweep.n_chains = cfg.value<int>("n_chains", 8);
  sweep.seed = ctx.master_seed;
  sweep.n_workers = ctx.n_workers;
  std::vector<double> etas = cfg.at("eta_list").get<std::vector<double>>();

  std::optional<Exact1DInvariant> exact;
  std::optional<SampleSet> reference;
  SweepOracle oracle;
  const std::string kind = cfg.value("oracle", std::string("exact"));
  if (kind == "exact") {
    if (ctx.model.dim() != 1)
      throw InvalidArgument("exact oracle requires a one-dimensional model");
    exact.emplace(ctx.model.alpha, ctx.model.beta);
    oracle.exact = &*exact;
  } else if (kind == "reference") {
    const double ref_eta = cfg.value("reference_eta", 1e-4);
    const auto ref_gap = static_cast<std::int64_t>(std::ceil(1.0 / ref_eta));
    reference = sample_invariant(
        ctx.model, ref_eta, sweep.n_samples, ref_gap, sweep.burn_in,
        rng::derive_seed(ctx.master_seed, rng::SeedRole::Calibration, 1), sweep.n_chains,
        ctx.n_workers);
    oracle.reference = &*reference;
  } else {
    throw InvalidArgument("converge oracle must be 'exact' or 'reference'");
  }

  const ConvergenceReport report = w1_convergence_sweep(ctx.model, etas, sweep, oracle);

  auto csv = open_csv(ctx, "converge.csv");
  csv << "eta,w1,envelope\n";
  for (const auto& row : report.rows)
    csv << io::format_double(row.eta) << "," << io::format_double(row.w1) << ","
        << io::format_double(row.envelope) << "\n";

  write_json_report(ctx, "converge_summary.json",
                    json{{"slope", report.slope}, {"c_fit", report.c_fit}});
  return kExitOk;
}

int cmd_clt(const Context& ctx) {
  const json& cfg = ctx.config.at("clt");
  CLTOptions opts;
  opts.calibration_factor = cfg.value("calibration_factor", 10.0);
  opts.n_workers = ctx.n_workers;
  if (cfg.contains("max_lag")) opts.max_lag = cfg["max_lag"].get<std::int64_t>();
  const CLTReport report = clt_experiment(
      ctx.model, parse_test_function(cfg.at("h")), cfg.at("eta").get<double>(),
      cfg.at("n").get<std::int64_t>(), cfg.value("replications", 200), ctx.master_seed, opts);

  auto csv = open_csv(ctx, "clt_normalized.csv");
  csv << "replication,normalized\n";
  for (std::size_t r = 0; r < report.normalized.size(); ++r)
    csv << r << "," << io::format_double(report.normalized[r]) << "\n";

  write_json_report(ctx, "clt_report.json",
                    json{{"h", report.h_id},
                         {"n", report.n},
                         {"eta", report.eta},
                         {"replications", report.replications},
                         {"mu_hat", report.mu_hat},
                         {"sigma_h2_hat", report.sigma_h2_hat},
                         {"ks_stat", report.ks_stat},
                         {"p_value", report.p_value},
                         {"degenerate", report.degenerate},
                         {"empirical_mean_h", report.empirical_mean_h}});
  return kExitOk;
}

int cmd_mdp(const Context& ctx) {
  const json& cfg = ctx.config.at("mdp");
  CLTOptions opts;
  opts.calibration_factor = cfg.value("calibration_factor", 10.0);
  opts.n_workers = ctx.n_workers;

  json body;
  if (cfg.contains("h")) {
    const MDPReport report = mdp_rate_check(
        ctx.model, parse_test_function(cfg.at("h")), cfg.at("eta").get<double>(),
        cfg.at("n_list").get<std::vector<std::int64_t>>(), cfg.value("a_exponent", 0.25),
        cfg.at("thresholds").get<std::vector<double>>(), cfg.value("replications", 200),
        ctx.master_seed, opts);
    auto csv = open_csv(ctx, "mdp_rows.csv");
    csv << "n,a_n,z,hits,replications,p_hat,empirical_rate,theoretical_rate,zero_hits\n";
    json rows = json::array();
    for (const auto& row : report.rows) {
      csv << row.n << "," << io::format_double(row.a_n) << "," << io::format_double(row.z)
          << "," << row.hits << "," << row.replications << "," << io::format_double(row.p_hat)
          << "," << io::format_double(row.empirical_rate) << ","
          << io::format_double(row.theoretical_rate) << "," << (row.zero_hits ? 1 : 0) << "\n";
      rows.push_back(json{{"n", row.n},
                          {"a_n", row.a_n},
                          {"z", row.z},
                          {"hits", row.hits},
                          {"p_hat", row.p_hat},
                          {"zero_hits", row.zero_hits}});
    }
    body["rows"] = rows;
    body["mu_hat"] = report.mu_hat;
    body["sigma_h2_hat"] = report.sigma_h2_hat;
  }
  if (cfg.contains("surrogate")) {
    const json& s = cfg["surrogate"];
    const GaussianSurrogateMDP sur = mdp_gaussian_surrogate(
        s.at("n").get<std::int64_t>(), cfg.value("a_exponent", 0.25),
        s.value("z", 1.0), ctx.master_seed, s.value<std::int64_t>("series_len", 100000));
    body["surrogate"] = json{{"n", sur.n},
                             {"a_n", sur.a_n},
                             {"z", sur.z},
                             {"sigma2_hat", sur.sigma2_hat},
                             {"empirical_rate", sur.empirical_rate},
                             {"theoretical_rate", sur.theoretical_rate},
                             {"ratio", sur.ratio}};
  }
  write_json_report(ctx, "mdp_report.json", std::move(body));
  return kExitOk;
}

int cmd_occupation(const Context& ctx) {
  const json& cfg = ctx.config.at("occupation");
  Vec x0 = Vec::Zero(ctx.model.dim());
  if (cfg.contains("x0")) x0 = vec_from(cfg["x0"]);
  const OccupationScalingReport report = occupation_scaling_check(
      ctx.model, x0, cfg.at("t").get<double>(), cfg.at("eta").get<double>(),
      cfg.at("eps_list").get<std::vector<double>>(), cfg.value<std::int64_t>("n_paths", 500),
      ctx.master_seed, cfg.value("tolerance", 0.2), ctx.n_workers);

  auto csv = open_csv(ctx, "occupation.csv");
  csv << "epsilon,mean_L,stderr,ratio_to_epsilon\n";
  for (const auto& est : report.estimates)
    csv << io::format_double(est.epsilon) << "," << io::format_double(est.mean_L) << ","
        << io::format_double(est.std_error) << ","
        << io::format_double(est.ratio_to_epsilon()) << "\n";

  write_json_report(ctx, "occupation_summary.json",
                    json{{"max_pairwise_ratio_gap", report.max_pairwise_ratio_gap},
                         {"linear_scaling", report.linear_scaling},
                         {"tolerance", report.tolerance}});
  return kExitOk;
}

int cmd_lyapunov_audit(const Context& ctx) {
  const json cfg = ctx.config.value("lyapunov", json::object());
  LyapunovOptions opts;
  opts.grid_radius = cfg.value("grid_radius", 20.0);
  opts.grid_points = cfg.value<std::int64_t>("grid_points", 10000);
  opts.search_kappa = cfg.value("kappa_search", true);
  opts.grid_seed = rng::derive_seed(ctx.master_seed, rng::SeedRole::Direction, 7);

  const LyapunovSpec spec = make_lyapunov_spec(ctx.model, opts);
  const Mat grid =
      make_audit_grid(ctx.model.dim(), opts.grid_radius, opts.grid_points, opts.grid_seed);
  const DriftFit fit = fit_drift_constants(ctx.model, spec, grid);
  const QtildeCheck chk = check_qtilde(spec.Qtilde, ctx.model.R, ctx.model.pt.p);

  json qtilde = json::array();
  for (int i = 0; i < spec.Qtilde.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < spec.Qtilde.cols(); ++j) row.push_back(spec.Qtilde(i, j));
    qtilde.push_back(row);
  }
  write_json_report(ctx, "lyapunov_audit.json",
                    json{{"c1", fit.c1},
                         {"c1_breve", fit.c1_breve},
                         {"grid_size", fit.grid_size},
                         {"grid_radius", fit.grid_radius},
                         {"violations", fit.violations},
                         {"kappa", fit.kappa},
                         {"c_hat2", fit.c_hat2},
                         {"qtilde", qtilde},
                         {"inequality1_lmax", chk.ineq1},
                         {"inequality2_lmax", chk.ineq2}});
  return kExitOk;
}

int cmd_queue_compare(const Context& ctx) {
  const json& cfg = ctx.config.at("queue");
  const double em_eta = cfg.value("em_eta", 1e-3);
  const auto em_samples_n = cfg.value<std::int64_t>("em_samples", 50000);
  const auto em_gap = static_cast<std::int64_t>(std::ceil(1.0 / em_eta));
  const SampleSet em_samples = sample_invariant(
      ctx.model, em_eta, em_samples_n, em_gap, cfg.value<std::int64_t>("em_burn_in", 10000),
      rng::derive_seed(ctx.master_seed, rng::SeedRole::Calibration, 2),
      cfg.value("em_chains", 8), ctx.n_workers);

  std::optional<Exact1DInvariant> oracle;
  if (ctx.model.dim() == 1 && cfg.value("oracle", true))
    oracle.emplace(ctx.model.alpha, ctx.model.beta);

  auto csv = open_csv(ctx, "queue_compare.csv");
  csv << "n,w1_vs_em,w1_vs_oracle,queue_samples\n";
  json rows = json::array();
  for (const int n : cfg.at("n_list").get<std::vector<int>>()) {
    QueueConfig qc;
    qc.n = n;
    qc.pt = ctx.model.pt;
    qc.alpha = ctx.model.alpha;
    qc.beta = ctx.model.beta;
    qc.horizon = cfg.value("horizon", 50000.0);
    qc.burn_in = cfg.value("burn_in", 50.0);
    qc.sample_spacing = cfg.value("spacing", 1.0);
    qc.seed = rng::derive_seed(ctx.master_seed, rng::SeedRole::Replication,
                               static_cast<std::uint64_t>(n));
    const SteadyStateComparison cmp = steady_state_compare(
        qc, ctx.model, em_samples, oracle ? &*oracle : nullptr,
        cfg.value("n_directions", 16),
        rng::derive_seed(ctx.master_seed, rng::SeedRole::Direction, 0));
    csv << cmp.n << "," << io::format_double(cmp.w1_vs_em) << ","
        << io::format_double(cmp.w1_vs_oracle) << "," << cmp.queue_samples << "\n";
    rows.push_back(json{{"n", cmp.n},
                        {"w1_vs_em", cmp.w1_vs_em},
                        {"w1_vs_oracle", cmp.w1_vs_oracle},
                        {"queue_samples", cmp.queue_samples}});
  }
  write_json_report(ctx, "queue_compare_summary.json", json{{"rows", rows}});
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"phnlab: invariant-measure experiments for the M/Ph/n+M limiting diffusion"};
  app.require_subcommand(1);

  struct SubOpts {
    std::string config_path;
    std::string out_override;
    std::int64_t seed_override = -1;
    int workers_override = -1;
  } opts;

  const std::vector<std::string> names = {"validate-model", "sample",     "converge",
                                          "clt",            "mdp",        "occupation",
                                          "lyapunov-audit", "queue-compare"};
  for (const auto& name : names) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config_path, "experiment config JSON")->required();
    sub->add_option("--out", opts.out_override, "output directory override");
    sub->add_option("--seed", opts.seed_override, "master seed override");
    sub->add_option("--workers", opts.workers_override, "worker pool size override");
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::cerr << "argument error: " << e.what() << "\n";
    return kExitValidation;
  }

  try {
    Context ctx;
    {
      std::ifstream in(opts.config_path);
      if (!in) throw InvalidArgument("cannot open config " + opts.config_path);
      try {
        ctx.config = json::parse(in);
      } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config parse error: ") + e.what());
      }
    }
    if (opts.seed_override >= 0) ctx.config["master_seed"] = opts.seed_override;
    if (!opts.out_override.empty()) ctx.config["output_dir"] = opts.out_override;
    if (opts.workers_override >= 0) ctx.config["n_workers"] = opts.workers_override;

    ctx.master_seed = ctx.config.value<std::uint64_t>("master_seed", 1);
    ctx.n_workers = resolve_workers(ctx.config.value<std::size_t>("n_workers", 0));
    ctx.out_dir = ctx.config.value("output_dir", std::string("out"));
    ctx.config_hash = io::fnv1a64(ctx.config.dump());
    if (!ctx.config.contains("model")) throw InvalidArgument("config is missing a model block");
    ctx.model = io::load_model_json(ctx.config["model"].dump());

    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub != "validate-model") fs::create_directories(ctx.out_dir);

    if (sub == "validate-model") return cmd_validate_model(ctx);
    if (sub == "sample") return cmd_sample(ctx);
    if (sub == "converge") return cmd_converge(ctx);
    if (sub == "clt") return cmd_clt(ctx);
    if (sub == "mdp") return cmd_mdp(ctx);
    if (sub == "occupation") return cmd_occupation(ctx);
    if (sub == "lyapunov-audit") return cmd_lyapunov_audit(ctx);
    if (sub == "queue-compare") return cmd_queue_compare(ctx);
    std::cerr << "unknown subcommand " << sub << "\n";
    return kExitValidation;
  } catch (const NonFiniteError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const NoValidConstantsError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Inequality2ViolatedError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "validation failure: " << e.what() << "\n";
    return kExitValidation;
  } catch (const json::exception& e) {
    std::cerr << "validation failure: config: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace phn::cli
