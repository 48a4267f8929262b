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

#include "mamba/config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

namespace mamba {

namespace {

struct KeyContext {
  const YAML::Node& node;
  const std::string& key;

  int line() const { return node.Mark().line + 1; }
  std::string text() const {
    if (node.IsScalar()) return node.Scalar();
    if (node.IsSequence()) return "<list>";
    if (node.IsMap()) return "<mapping>";
    return "<null>";
  }

  [[noreturn]] void fail(const std::string& expected) const {
    throw ConfigError(fmt::format("config line {}: key '{}': expected {}, got '{}'", line(), key,
                                  expected, text()));
  }

  template <typename T>
  T scalar(const std::string& expected) const {
    if (!node.IsScalar()) fail(expected);
    try {
      return node.as<T>();
    } catch (const YAML::Exception&) {
      fail(expected);
    }
  }

  double real() const { return scalar<double>("a real number"); }

  double positive() const {
    const double v = real();
    if (!(v > 0.0)) fail("a positive real number");
    return v;
  }

  long long integer(long long min_value) const {
    const auto v = scalar<long long>(fmt::format("an integer >= {}", min_value));
    if (v < min_value) fail(fmt::format("an integer >= {}", min_value));
    return v;
  }

  bool boolean() const { return scalar<bool>("a boolean (true/false)"); }
  std::string string() const { return scalar<std::string>("a string"); }

  template <typename T, typename Convert>
  std::vector<T> list(const std::string& expected, Convert convert) const {
    if (!node.IsSequence() || node.size() == 0) fail("a non-empty list of " + expected);
    std::vector<T> out;
    for (const auto& item : node) {
      KeyContext inner{item, key};
      out.push_back(convert(inner));
    }
    return out;
  }

  template <typename Fn>
  auto parsed(const std::string& expected, Fn fn) const {
    try {
      return fn(string());
    } catch (const InvalidArgument&) {
      fail(expected);
    }
  }
};

using Handler = std::function<void(RunConfig&, const KeyContext&)>;

struct KeyInfo {
  Handler apply;
  std::string default_text;
};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

std::map<std::string, KeyInfo> key_table(const std::filesystem::path& base) {
  std::map<std::string, KeyInfo> t;
  t["model.kind"] = {[](RunConfig& c, const KeyContext& k) {
                       c.model.kind = k.string();
                       if (c.model.kind != "gaussian" && c.model.kind != "logistic") {
                         k.fail("one of gaussian, logistic");
                       }
                     },
                     "gaussian"};
  t["model.n"] = {[](RunConfig& c, const KeyContext& k) {
                    c.model.num_data = static_cast<std::size_t>(k.integer(1));
                  },
                  "1000"};
  t["model.d"] = {[](RunConfig& c, const KeyContext& k) {
                    c.model.dim = static_cast<std::size_t>(k.integer(1));
                  },
                  "2"};
  t["model.obs_noise"] = {[](RunConfig& c, const KeyContext& k) { c.model.obs_noise = k.positive(); },
                          "1.0"};
  t["model.prior_var"] = {[](RunConfig& c, const KeyContext& k) { c.model.prior_var = k.positive(); },
                          "1.0 (gaussian), 10.0 (logistic)"};
  t["model.data_file"] = {[base](RunConfig& c, const KeyContext& k) {
                            const auto p = resolve(base, k.string());
                            if (!std::filesystem::exists(p)) k.fail("an existing file");
                            c.model.data_file = p;
                          },
                          "(none: synthetic data)"};
  t["model.seed"] = {[](RunConfig& c, const KeyContext& k) {
                       c.model.seed = static_cast<std::uint64_t>(k.integer(0));
                     },
                     "1"};

  t["sampler.kind"] = {[](RunConfig& c, const KeyContext& k) {
                         c.sampler.kind = k.parsed("one of sgld, sghmc, sgnht", parse_sampler_kind);
                       },
                       "sgld"};
  t["sampler.use_cv"] = {[](RunConfig& c, const KeyContext& k) { c.sampler.use_cv = k.boolean(); },
                         "false"};
  t["sampler.friction"] = {[](RunConfig& c, const KeyContext& k) { c.sampler.friction = k.positive(); },
                           "0.01"};
  t["sampler.noise_estimate"] = {[](RunConfig& c, const KeyContext& k) {
                                   const double v = k.real();
                                   if (!(v >= 0.0)) k.fail("a nonnegative real number");
                                   c.sampler.noise_estimate = v;
                                 },
                                 "0"};
  t["sampler.thermostat"] = {[](RunConfig& c, const KeyContext& k) {
                               c.sampler.thermostat = k.positive();
                             },
                             "0.01"};
  t["sampler.resample_momentum"] = {[](RunConfig& c, const KeyContext& k) {
                                      c.sampler.resample_momentum = k.boolean();
                                    },
                                    "true"};

  t["tuner.method"] = {[](RunConfig& c, const KeyContext& k) {
                         const auto m = k.string();
                         if (m != "mamba" && m != "grid" && m != "heuristic" && m != "compare") {
                           k.fail("one of mamba, grid, heuristic, compare");
                         }
                         c.tuner.method = m;
                       },
                       "mamba"};
  t["tuner.metric"] = {[](RunConfig& c, const KeyContext& k) {
                         c.tuner.metric = k.parsed("one of ksd, fssd", parse_metric);
                       },
                       "ksd"};
  t["tuner.eta"] = {[](RunConfig& c, const KeyContext& k) {
                      c.tuner.eta = static_cast<std::size_t>(k.integer(2));
                    },
                    "3"};
  t["tuner.budget"] = {[](RunConfig& c, const KeyContext& k) { c.tuner.budget.amount = k.positive(); },
                       "10000"};
  t["budget_mode"] = {[](RunConfig& c, const KeyContext& k) {
                        const auto m = k.string();
                        BudgetMode mode;
                        if (m == "iterations") {
                          mode = BudgetMode::kIterations;
                        } else if (m == "seconds") {
                          mode = BudgetMode::kWallClockSeconds;
                        } else {
                          k.fail("one of seconds, iterations");
                        }
                        c.tuner.budget.mode = mode;
                        c.final_budget.mode = mode;
                      },
                      "iterations"};
  t["tuner.log10_step_sizes"] = {[](RunConfig& c, const KeyContext& k) {
                                   c.tuner.log10_step_sizes = k.list<double>(
                                       "real numbers", [](const KeyContext& i) { return i.real(); });
                                 },
                                 "[-1, -1.5, ..., -7.5]"};
  t["tuner.batch_fractions"] = {[](RunConfig& c, const KeyContext& k) {
                                  c.tuner.batch_fractions = k.list<double>(
                                      "fractions in (0, 1]", [](const KeyContext& i) {
                                        const double v = i.real();
                                        if (!(v > 0.0 && v <= 1.0)) i.fail("a fraction in (0, 1]");
                                        return v;
                                      });
                                },
                                "[1, 0.1, 0.01, 0.001] (grid search fixes 0.1)"};
  t["tuner.leapfrog"] = {[](RunConfig& c, const KeyContext& k) {
                           c.tuner.leapfrog = k.list<int>("positive integers", [](const KeyContext& i) {
                             return static_cast<int>(i.integer(1));
                           });
                         },
                         "[5, 10]"};
  t["tuner.record_every"] = {[](RunConfig& c, const KeyContext& k) {
                               c.tuner.record_every = static_cast<std::size_t>(k.integer(1));
                             },
                             "1"};
  t["tuner.grid_iterations"] = {[](RunConfig& c, const KeyContext& k) {
                                  c.tuner.grid_iterations = static_cast<std::size_t>(k.integer(1));
                                },
                                "5000"};
  t["tuner.grid_noise_scale"] = {[](RunConfig& c, const KeyContext& k) {
                                   const double v = k.real();
                                   if (!(v >= 0.0)) k.fail("a nonnegative real number");
                                   c.tuner.grid_noise_scale = v;
                                 },
                                 "0.2"};
  t["tuner.grid_objective"] = {[](RunConfig& c, const KeyContext& k) {
                                 const auto m = k.string();
                                 if (m == "ksd") {
                                   c.tuner.grid_objective = GridObjective::kKsd;
                                 } else if (m == "log_loss") {
                                   c.tuner.grid_objective = GridObjective::kLogLoss;
                                 } else {
                                   k.fail("one of ksd, log_loss");
                                 }
                               },
                               "ksd"};
  t["tuner.compare_tuners"] = {[](RunConfig& c, const KeyContext& k) {
                                 c.tuner.compare_tuners = k.list<TunerKind>(
                                     "tuner names", [](const KeyContext& i) {
                                       return i.parsed("one of mamba-ksd, mamba-fssd, grid, heuristic",
                                                       parse_tuner_kind);
                                     });
                               },
                               "[mamba-ksd, mamba-fssd, grid, heuristic]"};
  t["tuner.compare_samplers"] = {[](RunConfig& c, const KeyContext& k) {
                                   c.tuner.compare_samplers = k.list<SamplerVariant>(
                                       "sampler names", [](const KeyContext& i) {
                                         std::string name = i.string();
                                         SamplerVariant v;
                                         if (name.size() > 3 && name.ends_with("-cv")) {
                                           v.use_cv = true;
                                           name.resize(name.size() - 3);
                                         }
                                         try {
                                           v.kind = parse_sampler_kind(name);
                                         } catch (const InvalidArgument&) {
                                           i.fail("a sampler name such as sgld or sghmc-cv");
                                         }
                                         return v;
                                       });
                                 },
                                 "[sgld]"};

  t["stein.kernel"] = {[](RunConfig& c, const KeyContext& k) {
                         const auto m = k.string();
                         if (m == "imq") {
                           c.stein.kernel.family = KernelFamily::kImq;
                         } else if (m == "gaussian") {
                           c.stein.kernel.family = KernelFamily::kGaussian;
                         } else {
                           k.fail("one of imq, gaussian");
                         }
                       },
                       "imq"};
  t["stein.c"] = {[](RunConfig& c, const KeyContext& k) { c.stein.kernel.c = k.positive(); }, "1.0"};
  t["stein.beta"] = {[](RunConfig& c, const KeyContext& k) {
                       const double v = k.real();
                       if (!(v > -1.0 && v < 0.0)) {
                         k.fail("a real number in (-1, 0), the IMQ range that detects non-convergence");
                       }
                       c.stein.kernel.beta = v;
                     },
                     "-0.5"};
  t["stein.bandwidth"] = {[](RunConfig& c, const KeyContext& k) {
                            c.stein.kernel.bandwidth = k.positive();
                          },
                          "1.0 (Gaussian KSD kernel)"};
  t["stein.thin"] = {[](RunConfig& c, const KeyContext& k) {
                       c.stein.thin = static_cast<std::size_t>(k.integer(1));
                     },
                     "10"};
  t["stein.burn_in"] = {[](RunConfig& c, const KeyContext& k) {
                          const double v = k.real();
                          if (!(v >= 0.0 && v < 1.0)) k.fail("a fraction in [0, 1)");
                          c.stein.burn_in = v;
                        },
                        "0.1"};
  t["stein.grad_mode"] = {[](RunConfig& c, const KeyContext& k) {
                            c.stein.grad_mode = k.parsed("one of fullbatch, stochastic", parse_grad_mode);
                          },
                          "fullbatch"};
  t["stein.J"] = {[](RunConfig& c, const KeyContext& k) {
                    c.stein.fssd.num_locations = static_cast<std::size_t>(k.integer(1));
                  },
                  "10"};
  t["stein.opt_steps"] = {[](RunConfig& c, const KeyContext& k) {
                            c.stein.fssd.opt_steps = static_cast<std::size_t>(k.integer(0));
                          },
                          "20"};
  t["stein.opt_lr"] = {[](RunConfig& c, const KeyContext& k) { c.stein.fssd.opt_lr = k.positive(); },
                       "0.1"};
  t["stein.fssd_bandwidth"] = {[](RunConfig& c, const KeyContext& k) {
                                 if (k.node.IsScalar() && k.node.Scalar() == "median") {
                                   c.stein.fssd_bandwidth = 0.0;
                                 } else {
                                   const double v = k.real();
                                   if (!(v > 0.0)) k.fail("'median' or a positive real number");
                                   c.stein.fssd_bandwidth = v;
                                 }
                               },
                               "median"};

  t["map.max_iters"] = {[](RunConfig& c, const KeyContext& k) {
                          c.map.max_iters = static_cast<std::size_t>(k.integer(1));
                        },
                        "10000"};
  t["map.tol"] = {[](RunConfig& c, const KeyContext& k) { c.map.tol = k.positive(); }, "1e-6"};
  t["map.learning_rate"] = {[](RunConfig& c, const KeyContext& k) {
                              c.map.adam.learning_rate = k.positive();
                            },
                            "0.01"};

  t["curve.log10_step"] = {[](RunConfig& c, const KeyContext& k) { c.curve.log10_step = k.real(); },
                           "-4"};
  t["curve.batch_fraction"] = {[](RunConfig& c, const KeyContext& k) {
                                 const double v = k.real();
                                 if (!(v > 0.0 && v <= 1.0)) k.fail("a fraction in (0, 1]");
                                 c.curve.batch_fraction = v;
                               },
                               "0.1"};
  t["curve.leapfrog"] = {[](RunConfig& c, const KeyContext& k) {
                           c.curve.leapfrog = static_cast<int>(k.integer(1));
                         },
                         "5"};
  t["curve.checkpoints"] = {[](RunConfig& c, const KeyContext& k) {
                              c.curve.checkpoints = k.list<double>(
                                  "positive numbers", [](const KeyContext& i) { return i.positive(); });
                            },
                            "[1000, 2000, 5000, 10000]"};
  t["curve.repeats"] = {[](RunConfig& c, const KeyContext& k) {
                          c.curve.repeats = static_cast<std::size_t>(k.integer(1));
                        },
                        "10"};

  t["eval.final_budget"] = {[](RunConfig& c, const KeyContext& k) {
                              c.final_budget.amount = k.positive();
                            },
                            "10000"};
  t["eval.reference_file"] = {[base](RunConfig& c, const KeyContext& k) {
                                const auto p = resolve(base, k.string());
                                if (!std::filesystem::exists(p)) k.fail("an existing file");
                                c.reference_file = p;
                              },
                              "(none: analytic moments when the model has them)"};
  t["output.dir"] = {[](RunConfig& c, const KeyContext& k) { c.output_dir = k.string(); },
                     "out"};
  t["seed"] = {[](RunConfig& c, const KeyContext& k) {
                 c.seed = static_cast<std::uint64_t>(k.integer(0));
               },
               "0"};
  t["workers"] = {[](RunConfig& c, const KeyContext& k) {
                    c.workers = static_cast<int>(k.integer(1));
                  },
                  "1"};
  return t;
}

RunConfig defaults() {
  RunConfig c;
  c.stein.fssd.opt_steps = 20;
  return c;
}

}  // namespace

void RunConfig::validate() const {
  if (tuner.eta < 2) throw ConfigError("tuner.eta must be >= 2");
  stein.kernel.validate();
  stein.fssd.validate();
  if (stein.thin < 1) throw ConfigError("stein.thin must be >= 1");
  if (!(stein.burn_in >= 0.0 && stein.burn_in < 1.0)) {
    throw ConfigError("stein.burn_in must lie in [0, 1)");
  }
  if ((tuner.method == "mamba" || tuner.method == "grid" || tuner.method == "compare") &&
      (tuner.log10_step_sizes.empty() || tuner.batch_fractions.empty())) {
    throw ConfigError("tuner grids must be non-empty for method " + tuner.method);
  }
  if (sampler.kind == SamplerKind::kSghmc && sampler.friction < sampler.noise_estimate) {
    throw ConfigError("sampler.friction must be >= sampler.noise_estimate");
  }
  if (model.data_file && model.kind != "logistic") {
    throw ConfigError("model.data_file is only supported for the logistic model");
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
  for (std::size_t i = 1; i < curve.checkpoints.size(); ++i) {
    if (!(curve.checkpoints[i] > curve.checkpoints[i - 1])) {
      throw ConfigError("curve.checkpoints must be strictly increasing");
    }
  }
}

RunConfig parse_config_text(const std::string& text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("config line {}: malformed YAML: {}", e.mark.line + 1, e.msg));
  }
  RunConfig config = defaults();
  if (root.IsNull()) {
    config.validate();
    return config;
  }
  if (!root.IsMap()) throw ConfigError("config must be a flat mapping of key: value pairs");

  const auto table = key_table(base_dir);
  for (const auto& entry : root) {
    const std::string key = entry.first.as<std::string>();
    const auto it = table.find(key);
    if (it == table.end()) {
      throw ConfigError(fmt::format("config line {}: unknown key '{}'", entry.first.Mark().line + 1, key));
    }
    it->second.apply(config, KeyContext{entry.second, key});
  }
  config.validate();
  return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.parent_path());
}

std::string documented_keys() {
  std::string out;
  for (const auto& [key, info] : key_table(".")) {
    out += fmt::format("{:<26} default {}\n", key, info.default_text);
  }
  return out;
}

}  // namespace mamba
