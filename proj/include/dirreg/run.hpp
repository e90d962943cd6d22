// Apache License, Version 2.0, refer to LICENSE.txt

#ifndef DIRREG_RUN_HPP
#define DIRREG_RUN_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dirreg/data.hpp"
#include "dirreg/design.hpp"
#include "dirreg/diagnostics.hpp"
#include "dirreg/errors.hpp"
#include "dirreg/formula.hpp"
#include "dirreg/infer_hmc.hpp"
#include "dirreg/infer_ml.hpp"
#include "dirreg/likelihood.hpp"
#include "dirreg/posterior.hpp"
#include "dirreg/svg.hpp"

namespace dirreg {

struct RunConfig {
  std::string input_path;
  std::string formula_text = "Y ~ 1";
  std::vector<std::string> response_cols;  // explicit names, or a single prefix
  int reference = 0;                        // 1-based; 0 = last component
  std::string method = "bayes";             // ml | bayes | both
  double prior_sd_beta = 5.0;
  double prior_sd_theta = 5.0;
  SamplerConfig sampler;
  double level = 0.95;
  std::string out_dir = "out";
  bool write_draws = true;
};

namespace rundetail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fmt_label_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// Explicit column list, or every header column sharing a prefix when a
// single non-column token is given.
inline std::vector<std::string> resolve_response_columns(const DataTable& table,
                                                         const std::vector<std::string>& spec) {
  require(!spec.empty(), "NoResponseColumns", "no response columns given");
  if (spec.size() == 1 && table.find(spec[0]) == nullptr) {
    std::vector<std::string> matched;
    for (const auto& col : table.columns)
      if (col.name.rfind(spec[0], 0) == 0) matched.push_back(col.name);
    require(!matched.empty(), "NoResponseColumns",
            "no column matches response prefix '" + spec[0] + "'");
    return matched;
  }
  return spec;
}

struct CovariateSetting {
  std::string label;
  Eigen::VectorXd x;                 // mean-design row
  std::vector<Eigen::Index> rows;    // data rows at this setting
};

// Unique mean-design rows in order of first appearance, labeled by the
// originating covariate values.
inline std::vector<CovariateSetting> covariate_settings(const DesignMatrix& X,
                                                        const std::vector<std::string>& terms,
                                                        const DataTable& data) {
  std::vector<CovariateSetting> settings;
  for (Eigen::Index i = 0; i < X.n(); ++i) {
    const Eigen::VectorXd row = X.values.row(i).transpose();
    bool found = false;
    for (auto& s : settings)
      if ((s.x - row).lpNorm<Eigen::Infinity>() == 0.0) {
        s.rows.push_back(i);
        found = true;
        break;
      }
    if (found) continue;
    CovariateSetting s;
    s.x = row;
    s.rows.push_back(i);
    if (terms.empty()) {
      s.label = "(all)";
    } else {
      for (std::size_t t = 0; t < terms.size(); ++t) {
        const Column& col = data.at(terms[t]);
        if (t) s.label += ",";
        s.label += terms[t] + "=";
        s.label += col.numeric ? fmt_label_value(col.num[static_cast<std::size_t>(i)])
                               : col.str[static_cast<std::size_t>(i)];
      }
    }
    settings.push_back(std::move(s));
  }
  return settings;
}

inline std::vector<std::string> free_parameter_names(const EvalContext& ctx) {
  std::vector<std::string> names;
  const CoefficientLayout& lay = ctx.layout;
  for (int c = 0; c < lay.C; ++c) {
    if (c == lay.reference) continue;
    for (int j = 0; j < lay.p_beta; ++j)
      names.push_back("beta." + ctx.Y.component_names[c] + "." + ctx.X.column_names[j]);
  }
  for (int j = 0; j < lay.p_gamma; ++j)
    names.push_back("gamma." + ctx.Z.column_names[j]);
  return names;
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "ParseError", "cannot write '" + path.string() + "'");
  out << contents;
}

inline std::string sanitize(const std::string& label) {
  std::string out;
  for (char c : label)
    out += (std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

}  // namespace rundetail

// Everything the artifact writers need, kept around so tests can poke at the
// pieces without re-reading files.
struct FitResult {
  EvalContext ctx;
  std::vector<std::string> response_cols;
  std::vector<std::string> free_names;
  std::vector<rundetail::CovariateSetting> settings;
  IngestReport ingest;
  std::optional<MLFit> ml;
  std::optional<std::vector<IntervalRow>> ml_intervals;
  std::optional<PosteriorDraws> draws;
  std::optional<Diagnostics> diagnostics;
  std::optional<SummaryTable> bayes_summary;
};

// Ingest + design + fit, no file output.
inline FitResult execute_fit(const RunConfig& config) {
  require(config.method == "ml" || config.method == "bayes" || config.method == "both",
          "InvalidMethod", "method must be ml, bayes or both");

  const FormulaSpec formula = parse_formula(config.formula_text);
  std::vector<std::string> covariates = formula.mean_terms;
  for (const auto& t : formula.precision_terms)
    if (std::find(covariates.begin(), covariates.end(), t) == covariates.end())
      covariates.push_back(t);

  const DataTable header_probe = read_csv(config.input_path);
  const std::vector<std::string> response =
      rundetail::resolve_response_columns(header_probe, config.response_cols);
  IngestedData ingested = ingest_csv(config.input_path, response, covariates);

  DesignMatrix X = build_design_matrix(formula.mean_terms, ingested.table);
  DesignMatrix Z = build_design_matrix(formula.precision_terms, ingested.table);

  ModelSpec spec;
  spec.formula = formula;
  spec.reference = (config.reference == 0) ? -1 : config.reference - 1;
  spec.prior_sd_beta = config.prior_sd_beta;
  spec.prior_sd_theta = config.prior_sd_theta;
  spec.varying_precision = !formula.constant_precision();

  FitResult result{EvalContext::make(std::move(ingested.response), std::move(X), std::move(Z),
                                     std::move(spec)),
                   response,
                   {},
                   {},
                   ingested.report,
                   std::nullopt,
                   std::nullopt,
                   std::nullopt,
                   std::nullopt,
                   std::nullopt};
  result.free_names = rundetail::free_parameter_names(result.ctx);
  result.settings =
      rundetail::covariate_settings(result.ctx.X, formula.mean_terms, ingested.table);

  if (config.method == "ml" || config.method == "both") {
    MLOptions opts;
    opts.seed = config.sampler.seed;
    result.ml = fit_ml(result.ctx, opts);
    if (result.ml->std_errors)
      result.ml_intervals = wald_intervals(*result.ml, config.level, result.ctx);
  }
  if (config.method == "bayes" || config.method == "both") {
    result.draws = run_chains(result.ctx, config.sampler);
    result.diagnostics = compute_diagnostics(*result.draws);
    SummaryTargets targets;
    for (const auto& s : result.settings)
      targets.expected_value_settings.emplace_back(s.label, s.x);
    result.bayes_summary = summarize_fit(*result.draws, result.ctx, targets, config.level);
  }
  return result;
}

namespace rundetail {

inline nlohmann::ordered_json config_json(const RunConfig& config) {
  nlohmann::ordered_json j;
  j["input"] = config.input_path;
  j["formula"] = config.formula_text;
  j["response_cols"] = config.response_cols;
  j["reference"] = config.reference;
  j["method"] = config.method;
  j["prior_sd_beta"] = config.prior_sd_beta;
  j["prior_sd_theta"] = config.prior_sd_theta;
  j["chains"] = config.sampler.chains;
  j["iterations"] = config.sampler.iterations;
  j["warmup"] = config.sampler.warmup;
  j["adapt_delta"] = config.sampler.target_accept;
  j["max_treedepth"] = config.sampler.max_treedepth;
  j["seed"] = config.sampler.seed;
  j["init_radius"] = config.sampler.init_radius;
  j["level"] = config.level;
  j["out"] = config.out_dir;
  j["write_draws"] = config.write_draws;
  return j;
}

inline nlohmann::ordered_json fit_json(const RunConfig& config, const FitResult& fit) {
  nlohmann::ordered_json j;
  j["config"] = config_json(config);
  j["ingestion"] = {{"rows_in", fit.ingest.rows_in},
                    {"rows_dropped", fit.ingest.rows_dropped},
                    {"rows_kept", fit.ingest.rows_kept},
                    {"normalization_forced", fit.ingest.normalization_forced},
                    {"rows_rescaled", fit.ingest.rows_rescaled},
                    {"zero_rows", fit.ingest.zero_rows},
                    {"zero_replacements", fit.ingest.zero_replacements}};
  j["model"] = {{"components", fit.ctx.Y.component_names},
                {"reference", fit.ctx.layout.reference + 1},
                {"mean_columns", fit.ctx.X.column_names},
                {"precision_columns", fit.ctx.Z.column_names},
                {"free_parameters", fit.free_names},
                {"n", fit.ctx.n()},
                {"C", fit.ctx.layout.C}};

  if (fit.ml) {
    nlohmann::ordered_json ml;
    ml["converged"] = fit.ml->converged;
    ml["iterations"] = fit.ml->iterations;
    ml["log_likelihood"] = fit.ml->log_likelihood_at_max;
    ml["free_estimates"] = std::vector<double>(fit.ml->free.data(),
                                               fit.ml->free.data() + fit.ml->free.size());
    if (fit.ml->std_errors) {
      ml["std_errors"] = std::vector<double>(
          fit.ml->std_errors->data(), fit.ml->std_errors->data() + fit.ml->std_errors->size());
      ml["hessian_condition"] = fit.ml->hessian_condition;
    } else {
      ml["std_errors"] = nullptr;
      ml["std_error_note"] = fit.ml->std_error_note;
    }
    j["ml"] = std::move(ml);
  }

  if (fit.draws) {
    const Diagnostics& diag = *fit.diagnostics;
    nlohmann::ordered_json bayes;
    bayes["post_warmup_draws"] = fit.draws->S();
    bayes["divergences"] = fit.draws->divergence_count;
    bayes["treedepth_saturations"] = fit.draws->treedepth_saturation_count;
    bayes["step_sizes"] = fit.draws->step_sizes;
    bayes["accept_mean"] = fit.draws->accept_mean;
    nlohmann::ordered_json mass = nlohmann::ordered_json::array();
    for (const auto& m : fit.draws->mass_diag)
      mass.push_back(std::vector<double>(m.data(), m.data() + m.size()));
    bayes["mass_diag"] = std::move(mass);
    nlohmann::ordered_json rhat, ess, means;
    for (std::size_t k = 0; k < fit.free_names.size(); ++k) {
      rhat[fit.free_names[k]] = diag.rhat[static_cast<Eigen::Index>(k)];
      ess[fit.free_names[k]] = diag.ess_bulk[static_cast<Eigen::Index>(k)];
      means[fit.free_names[k]] = fit.draws->draws.col(static_cast<Eigen::Index>(k)).mean();
    }
    bayes["rhat"] = std::move(rhat);
    bayes["ess_bulk"] = std::move(ess);
    bayes["posterior_mean"] = std::move(means);
    bayes["max_rhat"] = diag.max_rhat();
    j["bayes"] = std::move(bayes);
  }
  return j;
}

inline std::string summary_csv(const FitResult& fit) {
  std::string out = "method,quantity,lower,estimate,upper\n";
  auto row = [&](const std::string& method, const std::string& name, double lo, double est,
                 double hi) {
    out += method + "," + name + "," + fmt_double(lo) + "," + fmt_double(est) + "," +
           fmt_double(hi) + "\n";
  };
  if (fit.ml_intervals)
    for (const auto& r : *fit.ml_intervals) row("ml", r.name, r.lower, r.estimate, r.upper);
  if (fit.bayes_summary)
    for (const auto& r : fit.bayes_summary->rows)
      row("bayes", r.name, r.lower, r.mean, r.upper);
  return out;
}

inline std::string draws_csv(const FitResult& fit) {
  const PosteriorDraws& draws = *fit.draws;
  std::string out = "chain,iteration";
  for (const auto& name : fit.free_names) out += "," + name;
  out += "\n";
  const Eigen::Index per_chain = draws.draws_per_chain();
  for (Eigen::Index s = 0; s < draws.S(); ++s) {
    out += std::to_string(draws.chain_ids[static_cast<std::size_t>(s)] + 1);
    out += "," + std::to_string(s % per_chain + 1);
    for (Eigen::Index k = 0; k < draws.dim(); ++k) out += "," + fmt_double(draws.draws(s, k));
    out += "\n";
  }
  return out;
}

inline std::string expected_values_csv(const FitResult& fit, double level) {
  std::string out = "setting,component,mean,lower,upper\n";
  for (const auto& setting : fit.settings) {
    if (fit.draws) {
      const ExpectedValueDraws ev =
          expected_values_per_draw(fit.draws->draws, setting.x, fit.ctx.layout, setting.label);
      for (int c = 0; c < fit.ctx.layout.C; ++c) {
        auto [lo, hi] = credible_interval(ev.values.col(c), level);
        out += setting.label + "," + fit.ctx.Y.component_names[c] + "," +
               fmt_double(ev.values.col(c).mean()) + "," + fmt_double(lo) + "," +
               fmt_double(hi) + "\n";
      }
    } else if (fit.ml) {
      const Eigen::VectorXd mu = softmax(fit.ml->coefficients.beta * setting.x);
      for (int c = 0; c < fit.ctx.layout.C; ++c)
        out += setting.label + "," + fit.ctx.Y.component_names[c] + "," + fmt_double(mu[c]) +
               "," + fmt_double(mu[c]) + "," + fmt_double(mu[c]) + "\n";
    }
  }
  return out;
}

}  // namespace rundetail

// Full pipeline: fit per config, write fit.json / summary.csv /
// expected_values.csv (+ draws.csv).  Exit code 0 on success, 2 when the
// sampler ran but any split R-hat exceeds 1.05, 1 on error (fit.json then
// carries a machine-readable code).
inline int run(const RunConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.out_dir);
  try {
    FitResult fit = execute_fit(config);
    rundetail::write_file(fs::path(config.out_dir) / "fit.json",
                          rundetail::fit_json(config, fit).dump(2) + "\n");
    rundetail::write_file(fs::path(config.out_dir) / "summary.csv",
                          rundetail::summary_csv(fit));
    rundetail::write_file(fs::path(config.out_dir) / "expected_values.csv",
                          rundetail::expected_values_csv(fit, config.level));
    if (fit.draws && config.write_draws)
      rundetail::write_file(fs::path(config.out_dir) / "draws.csv",
                            rundetail::draws_csv(fit));
    if (fit.diagnostics && fit.diagnostics->max_rhat() > 1.05) return 2;
    return 0;
  } catch (const Error& e) {
    nlohmann::ordered_json j;
    j["config"] = rundetail::config_json(config);
    j["error"] = {{"code", e.code()}, {"message", e.what()}};
    rundetail::write_file(fs::path(config.out_dir) / "fit.json", j.dump(2) + "\n");
    return 1;
  }
}

struct PlotConfig {
  std::string fit_dir;
  double level = 0.0;  // 0 = reuse the fit's level
  std::string out_dir; // empty = fit_dir
};

// Renders one SVG panel per covariate setting from a completed Bayesian fit
// directory (fit.json + draws.csv + the original data file).
inline std::vector<std::string> plot_figures(const PlotConfig& plot_config) {
  namespace fs = std::filesystem;
  const fs::path fit_path = fs::path(plot_config.fit_dir) / "fit.json";
  require(fs::exists(fit_path), "MissingArtifacts", "no fit.json in " + plot_config.fit_dir);

  nlohmann::json meta;
  {
    std::ifstream in(fit_path);
    in >> meta;
  }
  require(!meta.contains("error"), "MissingArtifacts", "fit.json records a failed run");
  require(fs::exists(fs::path(plot_config.fit_dir) / "draws.csv"), "MissingArtifacts",
          "no draws.csv in " + plot_config.fit_dir + " (plotting needs a Bayesian fit)");

  RunConfig config;
  config.input_path = meta["config"]["input"].get<std::string>();
  config.formula_text = meta["config"]["formula"].get<std::string>();
  config.response_cols = meta["config"]["response_cols"].get<std::vector<std::string>>();
  config.reference = meta["config"]["reference"].get<int>();
  const double level =
      (plot_config.level > 0.0) ? plot_config.level : meta["config"]["level"].get<double>();

  // Rebuild context and settings, then take the draws from disk.
  config.method = "ml";  // placeholder; no fitting below
  const FormulaSpec formula = parse_formula(config.formula_text);
  std::vector<std::string> covariates = formula.mean_terms;
  for (const auto& t : formula.precision_terms)
    if (std::find(covariates.begin(), covariates.end(), t) == covariates.end())
      covariates.push_back(t);
  const DataTable header_probe = read_csv(config.input_path);
  const std::vector<std::string> response =
      rundetail::resolve_response_columns(header_probe, config.response_cols);
  IngestedData ingested = ingest_csv(config.input_path, response, covariates);
  DesignMatrix X = build_design_matrix(formula.mean_terms, ingested.table);
  DesignMatrix Z = build_design_matrix(formula.precision_terms, ingested.table);
  ModelSpec spec;
  spec.formula = formula;
  spec.reference = (config.reference == 0) ? -1 : config.reference - 1;
  EvalContext ctx = EvalContext::make(std::move(ingested.response), std::move(X), std::move(Z),
                                      std::move(spec));
  const auto settings =
      rundetail::covariate_settings(ctx.X, formula.mean_terms, ingested.table);

  const DataTable draw_table =
      read_csv((fs::path(plot_config.fit_dir) / "draws.csv").string());
  const Eigen::Index S = static_cast<Eigen::Index>(draw_table.n_rows);
  const int dim = ctx.layout.free_size();
  require(static_cast<int>(draw_table.columns.size()) == dim + 2, "MissingArtifacts",
          "draws.csv does not match the fitted model");
  Eigen::MatrixXd draws(S, dim);
  for (int k = 0; k < dim; ++k) {
    const Column& col = draw_table.columns[static_cast<std::size_t>(k + 2)];
    for (Eigen::Index s = 0; s < S; ++s) draws(s, k) = col.num[static_cast<std::size_t>(s)];
  }

  const fs::path out_dir =
      plot_config.out_dir.empty() ? fs::path(plot_config.fit_dir) : fs::path(plot_config.out_dir);
  fs::create_directories(out_dir);

  std::vector<std::string> files;
  int index = 0;
  for (const auto& setting : settings) {
    const ExpectedValueDraws ev =
        expected_values_per_draw(draws, setting.x, ctx.layout, setting.label);
    FigurePanel panel;
    panel.title = setting.label;
    panel.component_names = ctx.Y.component_names;
    panel.interval_level = level;
    panel.observations.resize(static_cast<Eigen::Index>(setting.rows.size()), ctx.layout.C);
    for (std::size_t r = 0; r < setting.rows.size(); ++r)
      panel.observations.row(static_cast<Eigen::Index>(r)) = ctx.Y.values.row(setting.rows[r]);
    panel.estimate.resize(ctx.layout.C);
    panel.lower.resize(ctx.layout.C);
    panel.upper.resize(ctx.layout.C);
    for (int c = 0; c < ctx.layout.C; ++c) {
      panel.estimate[c] = ev.values.col(c).mean();
      auto [lo, hi] = credible_interval(ev.values.col(c), level);
      panel.lower[c] = lo;
      panel.upper[c] = hi;
    }
    char prefix[24];
    std::snprintf(prefix, sizeof(prefix), "figure_%02d_", ++index);
    const fs::path file = out_dir / (prefix + rundetail::sanitize(setting.label) + ".svg");
    rundetail::write_file(file, render_figure_svg(panel));
    files.push_back(file.string());
  }
  return files;
}

}  // namespace dirreg

#endif  // DIRREG_RUN_HPP
