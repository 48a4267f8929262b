// Copyright 2026 The mamba Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mamba/commands.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "mamba/bandit.hpp"
#include "mamba/errors.hpp"
#include "mamba/io.hpp"
#include "mamba/stein.hpp"

namespace mamba {

namespace {

using nlohmann::json;

constexpr double kDiagnosticDelta = 0.05;

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json vector_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

std::string budget_mode_name(BudgetMode mode) {
  return mode == BudgetMode::kIterations ? "iterations" : "seconds";
}

json config_json(const SamplerConfig& c) {
  return json{{"sampler", to_string(c.kind)},
              {"use_cv", c.use_cv},
              {"step_size", c.step_size},
              {"log10_h", std::log10(c.step_size)},
              {"batch_fraction", c.batch_fraction},
              {"leapfrog", c.leapfrog},
              {"friction", c.friction},
              {"noise_estimate", c.noise_estimate},
              {"thermostat", c.thermostat},
              {"resample_momentum", c.resample_momentum},
              {"seed", c.seed}};
}

SamplerConfig config_from_json(const json& j) {
  try {
    SamplerConfig c;
    c.kind = parse_sampler_kind(j.at("sampler").get<std::string>());
    c.use_cv = j.at("use_cv").get<bool>();
    c.step_size = j.at("step_size").get<double>();
    c.batch_fraction = j.at("batch_fraction").get<double>();
    c.leapfrog = j.at("leapfrog").get<int>();
    c.friction = j.at("friction").get<double>();
    c.noise_estimate = j.at("noise_estimate").get<double>();
    c.thermostat = j.at("thermostat").get<double>();
    c.resample_momentum = j.at("resample_momentum").get<bool>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("selection config: ") + e.what());
  }
}

std::ofstream open_output(const RunConfig& config, const std::string& name) {
  std::filesystem::create_directories(config.output_dir);
  const auto path = config.output_dir / name;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

struct Prepared {
  std::shared_ptr<const TargetModel> model;
  MapResult map;
};

Prepared prepare(const RunConfig& config, std::ostream& log) {
  Prepared p;
  p.model = build_model(config.model);
  p.map = find_map(*p.model, Vector::Zero(static_cast<Eigen::Index>(p.model->dim())),
                   config.map.adam, config.map.max_iters, config.map.tol);
  fmt::print(log, "model {} N={} d={}; MAP after {} iterations, |grad U|={:.3g}{}\n",
             p.model->kind(), p.model->num_data(), p.model->dim(), p.map.iterations,
             p.map.grad_norm, p.map.converged ? "" : " (not converged)");
  return p;
}

const MapResult* map_for(const SamplerConfig& c, const MapResult& map) {
  return c.use_cv ? &map : nullptr;
}

json chain_metrics(const RunConfig& config, const TargetModel& model, const Chain& chain,
                   const std::optional<ReferenceMoments>& ref) {
  if (!chain.empty() && chain.dim() != model.dim()) {
    throw InvalidArgument(fmt::format("chain dimension {} does not match model dimension {}",
                                      chain.dim(), model.dim()));
  }
  const auto& st = config.stein;
  const Chain thinned = thin_chain(chain, st.thin, st.burn_in);
  json m;
  m["ksd"] = number(ksd_reward(chain, model, st.thin, st.burn_in, st.grad_mode, st.kernel));
  if (config.tuner.metric == Metric::kFssd) {
    RandomStream rng(derive_seed(config.seed, 0xF55D));
    m["fssd"] = number(fssd_reward(chain, model, st.thin, st.burn_in, st.grad_mode, st.fssd,
                                   st.fssd_bandwidth, rng));
  }
  if (ref && !chain.diverged && !chain.empty()) {
    if (static_cast<std::size_t>(ref->mean.size()) != chain.dim()) {
      throw InvalidArgument(fmt::format("reference dimension {} does not match chain dimension {}",
                                        ref->mean.size(), chain.dim()));
    }
    m["xi_std"] = number(relative_std_error(chain, *ref, st.burn_in));
  }
  m["n_samples"] = thinned.size();
  m["diverged"] = chain.diverged;
  return m;
}

Chain final_chain(const RunConfig& config, const Prepared& p, const SamplerConfig& selected) {
  return run_chain(*p.model, selected, map_for(selected, p.map), p.map.theta_map,
                   config.final_budget, config.tuner.record_every);
}

std::vector<Arm> tuner_arms(const RunConfig& config) {
  SamplerConfig base = config.sampler;
  return enumerate_arms(base, config.tuner.log10_step_sizes, config.tuner.batch_fractions,
                        config.tuner.leapfrog, config.seed);
}

json diagnostics_json(const RunConfig& config, const Prepared& p, const std::vector<Arm>& arms,
                      const MambaResult& result) {
  const auto& first = result.rounds.front();
  std::vector<ArmReward> rewards;
  for (const auto& a : first.arms) rewards.push_back({a.arm_id, a.reward});
  std::vector<double> ranked;
  for (const auto& r : rank_rewards(rewards)) ranked.push_back(r.reward);

  std::vector<SteinSampleSet> sets;
  for (const auto& run : result.runs) {
    if (run.chain.diverged || run.chain.empty()) continue;
    const Chain thinned = thin_chain(run.chain, config.stein.thin, config.stein.burn_in);
    sets.push_back(make_sample_set(thinned, *p.model, config.stein.grad_mode));
  }
  const double sigma2 = sets.empty() ? 0.0 : estimate_sigma2_ksd(sets, config.stein.kernel);
  const auto d = diagnostics(ranked, sigma2, config.tuner.eta, arms.size(), kDiagnosticDelta);

  json j{{"gaps", vector_json(d.gaps)},
         {"h2_defined", d.h2_defined},
         {"h2", number(d.h2)},
         {"sigma2_ksd", number(sigma2)},
         {"delta", kDiagnosticDelta},
         {"budget_bound_T", number(d.budget_bound_T)}};
  j["failure_bound"] =
      d.h2_defined && config.tuner.budget.mode == BudgetMode::kIterations
          ? number(best_arm_failure_bound(config.tuner.eta, arms.size(),
                                          config.tuner.budget.amount, sigma2, d.h2))
          : json(nullptr);
  return j;
}

void log_rounds(std::ostream& log, const std::vector<RoundRecord>& rounds) {
  for (const auto& r : rounds) {
    const double budget = r.arms.empty() ? 0.0 : r.arms.front().budget;
    fmt::print(log, "round {}: {} arms at budget {}; survivors [{}]\n", r.round, r.arms.size(),
               format_double(budget), fmt::join(r.survivors, ", "));
  }
}

json selection_base(const RunConfig& config, const std::string& method) {
  const bool reproducible = config.tuner.budget.mode == BudgetMode::kIterations &&
                            config.final_budget.mode == BudgetMode::kIterations;
  return json{{"method", method},
              {"metric", to_string(config.tuner.metric)},
              {"budget_mode", budget_mode_name(config.tuner.budget.mode)},
              {"total_budget", config.tuner.budget.amount},
              {"final_budget", config.final_budget.amount},
              {"eta", config.tuner.eta},
              {"seed", config.seed},
              {"reproducible", reproducible}};
}

void finish_selection(const RunConfig& config, const Prepared& p, const SamplerConfig& selected,
                      json selection, std::ostream& log) {
  const Chain chain = final_chain(config, p, selected);
  {
    auto out = open_output(config, "chain.csv");
    write_chain_csv(out, chain);
  }
  const auto ref = load_reference(config, *p.model);
  selection["config"] = config_json(selected);
  selection["final"] = chain_metrics(config, *p.model, chain, ref);
  auto out = open_output(config, "selection.json");
  out << selection.dump(2) << '\n';
  fmt::print(log, "selected {} h={} tau={} leapfrog={}; final {}\n", selected.label(),
             format_double(selected.step_size), format_double(selected.batch_fraction),
             selected.leapfrog, selection["final"].dump());
}

void tune_mamba(const RunConfig& config, const Prepared& p, std::ostream& log) {
  const auto arms = tuner_arms(config);
  MambaOptions opt;
  opt.metric = config.tuner.metric;
  opt.total_budget = config.tuner.budget;
  opt.eta = config.tuner.eta;
  opt.stein = config.stein;
  opt.record_every = config.tuner.record_every;
  opt.seed = config.seed;
  opt.workers = config.workers;
  const MambaResult result = mamba_run(*p.model, arms, &p.map, p.map.theta_map, opt);
  log_rounds(log, result.rounds);
  {
    auto out = open_output(config, "rounds.csv");
    write_rounds_csv(out, result.rounds, arms);
  }
  json selection = selection_base(config, "mamba");
  selection["num_arms"] = arms.size();
  selection["best_arm"] = result.best_arm;
  selection["best_reward"] = number(result.best_reward);
  selection["diagnostics"] = diagnostics_json(config, p, arms, result);
  finish_selection(config, p, result.best_config, std::move(selection), log);
}

void tune_grid(const RunConfig& config, const Prepared& p, std::ostream& log) {
  static constexpr double kTenPercent[] = {0.1};
  const auto arms = enumerate_arms(config.sampler, config.tuner.log10_step_sizes, kTenPercent,
                                   config.tuner.leapfrog, config.seed);
  GridOptions opt;
  opt.iterations = config.tuner.grid_iterations;
  opt.noise_scale = config.tuner.grid_noise_scale;
  opt.objective = config.tuner.grid_objective;
  opt.stein = config.stein;
  opt.seed = config.seed;
  opt.workers = config.workers;
  const GridResult result = grid_search_tune(*p.model, arms, p.map, opt);

  RoundRecord round;
  for (const auto& pt : result.points) {
    round.arms.push_back({pt.arm_id, static_cast<double>(opt.iterations), -pt.metric,
                          pt.arm_id != result.best_arm});
    if (pt.arm_id != result.best_arm) round.pruned.push_back(pt.arm_id);
  }
  round.survivors = {result.best_arm};
  const std::vector<RoundRecord> rounds{round};
  log_rounds(log, rounds);
  {
    auto out = open_output(config, "rounds.csv");
    write_rounds_csv(out, rounds, arms);
  }
  json selection = selection_base(config, "grid");
  selection["num_arms"] = arms.size();
  selection["best_arm"] = result.best_arm;
  selection["grid_objective"] =
      config.tuner.grid_objective == GridObjective::kKsd ? "ksd" : "log_loss";
  finish_selection(config, p, result.best_config, std::move(selection), log);
}

void tune_heuristic(const RunConfig& config, const Prepared& p, std::ostream& log) {
  SamplerConfig base = config.sampler;
  base.seed = derive_seed(config.seed, 0);
  if (base.kind == SamplerKind::kSghmc) base.leapfrog = config.tuner.leapfrog.back();
  const SamplerConfig selected = heuristic_tune(p.model->num_data(), base);
  const Arm arm{0, std::log10(selected.step_size), selected};
  const Chain chain = final_chain(config, p, selected);
  const double reward = -ksd_reward(chain, *p.model, config.stein.thin, config.stein.burn_in,
                                    config.stein.grad_mode, config.stein.kernel);
  RoundRecord round;
  round.arms.push_back({0, config.final_budget.amount, reward, false});
  round.survivors = {0};
  {
    auto out = open_output(config, "rounds.csv");
    write_rounds_csv(out, {round}, {arm});
  }
  json selection = selection_base(config, "heuristic");
  selection["num_arms"] = 1;
  selection["best_arm"] = 0;
  finish_selection(config, p, selected, std::move(selection), log);
}

void tune_compare(const RunConfig& config, const Prepared& p, std::ostream& log) {
  CompareOptions opt;
  opt.tuners = config.tuner.compare_tuners;
  opt.samplers = config.tuner.compare_samplers;
  opt.base = config.sampler;
  opt.log10_steps = config.tuner.log10_step_sizes;
  opt.batch_fractions = config.tuner.batch_fractions;
  opt.leapfrogs = config.tuner.leapfrog;
  opt.mamba_budget = config.tuner.budget;
  opt.eta = config.tuner.eta;
  opt.grid.iterations = config.tuner.grid_iterations;
  opt.grid.noise_scale = config.tuner.grid_noise_scale;
  opt.grid.objective = config.tuner.grid_objective;
  opt.grid.stein = config.stein;
  opt.final_budget = config.final_budget;
  opt.stein = config.stein;
  opt.reference = load_reference(config, *p.model);
  opt.seed = config.seed;
  opt.workers = config.workers;
  const auto table = compare_tuners(*p.model, p.map, opt);
  {
    auto out = open_output(config, "table.csv");
    write_table_csv(out, table);
  }
  write_table_text(log, table);
}

}  // namespace

std::shared_ptr<const TargetModel> build_model(const ModelSpec& spec) {
  const double pv = spec.resolved_prior_var();
  if (spec.kind == "gaussian") {
    return build_gaussian_conjugate_model(spec.num_data, spec.dim, spec.obs_noise, pv, spec.seed);
  }
  if (spec.kind == "logistic") {
    if (spec.data_file) return load_logistic_csv(*spec.data_file, pv);
    return build_synthetic_logistic_model(spec.num_data, spec.dim, pv, spec.seed);
  }
  throw ConfigError("unknown model kind '" + spec.kind + "'");
}

std::optional<ReferenceMoments> load_reference(const RunConfig& config, const TargetModel& model) {
  if (config.reference_file) return read_reference_csv(*config.reference_file);
  return reference_from_model(model);
}

void cmd_tune(const RunConfig& config, std::ostream& log) {
  const Prepared p = prepare(config, log);
  const auto& method = config.tuner.method;
  if (method == "mamba") {
    tune_mamba(config, p, log);
  } else if (method == "grid") {
    tune_grid(config, p, log);
  } else if (method == "heuristic") {
    tune_heuristic(config, p, log);
  } else if (method == "compare") {
    tune_compare(config, p, log);
  } else {
    throw ConfigError("unknown tuner.method '" + method + "'");
  }
}

void cmd_curve(const RunConfig& config, std::ostream& log) {
  const Prepared p = prepare(config, log);
  SamplerConfig c = config.sampler;
  c.step_size = std::pow(10.0, config.curve.log10_step);
  c.batch_fraction = config.curve.batch_fraction;
  c.leapfrog = config.curve.leapfrog;
  c.seed = config.seed;
  c.validate();
  const RewardCurve curve =
      reward_curve(*p.model, c, map_for(c, p.map), p.map.theta_map, config.tuner.budget.mode,
                   config.curve.checkpoints, config.tuner.metric, config.stein,
                   config.curve.repeats, config.tuner.record_every);
  auto out = open_output(config, "curve.csv");
  write_curve_csv(out, curve);
  for (const auto& pt : curve.points) {
    if (pt.missing()) {
      fmt::print(log, "checkpoint {}: all repeats diverged\n", format_double(pt.checkpoint));
    } else {
      fmt::print(log, "checkpoint {}: {} {:.6g} [{:.6g}, {:.6g}] over {} repeats\n",
                 format_double(pt.checkpoint), to_string(curve.metric), pt.mean, pt.lower,
                 pt.upper, pt.available);
    }
  }
}

void cmd_evaluate(const RunConfig& config, const std::filesystem::path& input, std::ostream& out) {
  if (!std::filesystem::exists(input)) {
    throw InvalidArgument("input file does not exist: " + input.string());
  }
  std::ostringstream quiet;
  Chain chain;
  std::shared_ptr<const TargetModel> model;
  if (input.extension() == ".json") {
    std::ifstream in(input);
    json selection;
    try {
      selection = json::parse(in);
    } catch (const json::exception& e) {
      throw InvalidArgument(input.string() + ": " + e.what());
    }
    if (!selection.contains("config")) {
      throw InvalidArgument(input.string() + ": missing 'config' object");
    }
    const SamplerConfig selected = config_from_json(selection["config"]);
    const Prepared p = prepare(config, quiet);
    chain = final_chain(config, p, selected);
    model = p.model;
  } else {
    chain = read_chain_csv(input);
    model = build_model(config.model);
  }
  const json metrics = chain_metrics(config, *model, chain, load_reference(config, *model));
  {
    auto file = open_output(config, "metrics.json");
    file << metrics.dump(2) << '\n';
  }
  out << metrics.dump(2) << '\n';
}

void cmd_schedule(std::size_t num_arms, std::size_t eta, double total_budget, std::ostream& out) {
  const auto rounds = mamba_schedule(num_arms, eta, total_budget);
  out << "round,arms,budget_per_arm,round_total\n";
  for (const auto& r : rounds) {
    out << r.round << ',' << r.arms << ',' << format_double(r.budget) << ','
        << format_double(static_cast<double>(r.arms) * r.budget) << '\n';
  }
}

int exit_code_for(const std::exception_ptr& error, std::ostream& err) {
  try {
    std::rethrow_exception(error);
  } catch (const AllDiverged& e) {
    err << "error: " << e.what() << '\n';
    return kExitAllDiverged;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (...) {
    err << "error: unknown failure\n";
    return kExitFailure;
  }
}

}  // namespace mamba
