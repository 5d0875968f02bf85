#include "htsgd/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "htsgd/convergence_bench.hpp"
#include "htsgd/errors.hpp"
#include "htsgd/metastability.hpp"
#include "htsgd/nn_harness.hpp"
#include "htsgd/sde_sim.hpp"
#include "htsgd/stability_test.hpp"
#include "htsgd/stable_dist.hpp"
#include "htsgd/stats.hpp"
#include "htsgd/tail_index.hpp"

namespace htsgd::cli {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------- schema

std::vector<KeySpec> shared_keys(const std::string& format) {
  return {
      {"seed", ValueType::kInt, "1", "master seed (key of every random stream)"},
      {"output", ValueType::kText, "", "result file; empty writes to $HTSGD_OUTPUT_DIR/<command>.<format> or stdout"},
      {"format", ValueType::kText, format, "csv or json"},
      {"threads", ValueType::kInt, "1", "worker threads for replicates (0 = all cores)"},
      {"max_diverged_fraction", ValueType::kReal, "0.05", "divergence share above which the run exits with status 3"},
  };
}

std::vector<KeySpec> with_shared(const std::string& format, std::vector<KeySpec> own) {
  auto keys = shared_keys(format);
  keys.insert(keys.end(), own.begin(), own.end());
  return keys;
}

std::vector<KeySpec> sde_keys(const std::string& alpha, const std::string& eps, const std::string& eta) {
  return {
      {"alpha", ValueType::kReal, alpha, "tail index of the Levy noise"},
      {"eps", ValueType::kReal, eps, "noise level epsilon"},
      {"sigma_brownian", ValueType::kReal, "0", "Brownian amplitude sigma"},
      {"eta", ValueType::kReal, eta, "Euler step"},
      {"jump_scale", ValueType::kText, "levy_measure", "characteristic or levy_measure"},
  };
}

std::vector<KeySpec> well_keys() {
  return {
      {"m1", ValueType::kReal, "-1", "left minimum of the double well"},
      {"m2", ValueType::kReal, "2", "right minimum of the double well"},
      {"well_scale", ValueType::kReal, "1", "gradient scale of the double well"},
  };
}

std::vector<KeySpec> train_keys() {
  return {
      {"data", ValueType::kText, "synthetic", "IDX directory, or 'synthetic' for Gaussian blobs"},
      {"n_train", ValueType::kInt, "0", "use the first n training samples (0 = all)"},
      {"synthetic_n", ValueType::kInt, "2000", "synthetic training samples"},
      {"synthetic_dim", ValueType::kInt, "20", "synthetic input dimension"},
      {"synthetic_classes", ValueType::kInt, "4", "synthetic classes"},
      {"synthetic_spread", ValueType::kReal, "1.5", "within-class standard deviation"},
      {"init", ValueType::kText, "fan_in", "fan_in or mean_field"},
      {"loss", ValueType::kText, "nll", "nll or hinge"},
      {"iters", ValueType::kInt, "2000", "SGD iterations"},
      {"log_every", ValueType::kInt, "100", "logging period"},
      {"inject_alpha", ValueType::kReal, "0", "replace measured noise by SaS(alpha) draws (0 = off)"},
      {"stability", ValueType::kBool, "false", "also log the stability condition number"},
      {"stop_at_full", ValueType::kBool, "true", "stop at 100% training accuracy"},
  };
}

template <class... Parts>
std::vector<KeySpec> concat(Parts... parts) {
  std::vector<KeySpec> out;
  (out.insert(out.end(), parts.begin(), parts.end()), ...);
  return out;
}

const std::map<std::string, std::vector<KeySpec>>& schemas() {
  static const std::map<std::string, std::vector<KeySpec>> table = {
      {"sample", with_shared("csv", {{"alpha", ValueType::kReal, "1.5", "tail index"},
                                     {"sigma", ValueType::kReal, "1", "scale"},
                                     {"n", ValueType::kInt, "10000", "number of draws"}})},
      {"estimate", with_shared("csv", {{"alpha", ValueType::kReal, "1.5", "tail index of generated samples"},
                                       {"sigma", ValueType::kReal, "1", "scale of generated samples"},
                                       {"n", ValueType::kInt, "100000", "number of generated samples"},
                                       {"k1", ValueType::kInt, "0", "block length (0 = automatic)"},
                                       {"input", ValueType::kText, "", "read samples from this file instead"}})},
      {"stability", with_shared("csv", {{"alpha", ValueType::kReal, "1.5", "tail index of generated samples"},
                                        {"sigma", ValueType::kReal, "1", "scale of generated samples"},
                                        {"n", ValueType::kInt, "120000", "number of generated samples"},
                                        {"threshold", ValueType::kReal, "0.05", "acceptance threshold on c_st"},
                                        {"input", ValueType::kText, "", "read samples from this file instead"}})},
      {"exit-time",
       with_shared("csv", concat(std::vector<KeySpec>{{"objective", ValueType::kText, "quadratic",
                                                       "quadratic or double_well"},
                                                      {"dim", ValueType::kInt, "1", "dimension of the quadratic"}},
                                 well_keys(), sde_keys("1.5", "0.01", "0.001"),
                                 std::vector<KeySpec>{
                                     {"a", ValueType::kReal, "1", "exit radius"},
                                     {"xi", ValueType::kReal, "0", "exit margin"},
                                     {"center", ValueType::kList, "", "ball center (empty = first minimum)"},
                                     {"w0", ValueType::kList, "", "start point (empty = center)"},
                                     {"reps", ValueType::kInt, "500", "replicates"},
                                     {"max_steps", ValueType::kInt, "100000000", "step cap per replicate"}}))},
      {"transition",
       with_shared("csv", concat(well_keys(), sde_keys("1.2", "0.05", "0.001"),
                                 std::vector<KeySpec>{
                                     {"delta", ValueType::kReal, "0.25", "neighbourhood radius"},
                                     {"w0", ValueType::kList, "", "start point (empty = m1)"},
                                     {"reps", ValueType::kInt, "4", "replicates"},
                                     {"max_steps", ValueType::kInt, "1000000", "steps per replicate"}}))},
      {"metastability", with_shared("json", {{"minima", ValueType::kList, "-1,2", "ordered minima m_1 < ... < m_r"},
                                             {"saddles", ValueType::kList, "0", "separating maxima s_1 < ... < s_{r-1}"},
                                             {"alpha", ValueType::kReal, "1", "tail index"}})},
      {"converge",
       with_shared("csv", {{"dim", ValueType::kInt, "10", "dimension of the quadratic objective"},
                           {"w0_value", ValueType::kReal, "1", "every coordinate of the start point"},
                           {"alpha", ValueType::kReal, "1.5", "noise tail index (2 = Gaussian)"},
                           {"noise_scale", ValueType::kReal, "1", "noise scale"},
                           {"gamma", ValueType::kReal, "0", "moment exponent (0 = 0.8 (alpha - 1), or 1 at alpha = 2)"},
                           {"Ks", ValueType::kList, "100,1000,10000", "iteration counts"},
                           {"reps", ValueType::kInt, "100", "replicates per K"},
                           {"M", ValueType::kReal, "0", "Hoelder constant (0 = estimate on a ball)"},
                           {"sigma_gamma", ValueType::kReal, "0", "moment bound (0 = Monte Carlo at w0)"},
                           {"step_rule", ValueType::kText, "optimal", "optimal, c or eta"},
                           {"c", ValueType::kReal, "1", "step constant for step_rule = c"},
                           {"eta", ValueType::kReal, "0.1", "step for step_rule = eta"},
                           {"holder_pairs", ValueType::kInt, "20000", "probe pairs for the Hoelder estimate"},
                           {"sigma_draws", ValueType::kInt, "200000", "draws for the sigma_gamma estimate"}})},
      {"train", with_shared("csv", concat(train_keys(), std::vector<KeySpec>{
                                                           {"width", ValueType::kInt, "128", "hidden width"},
                                                           {"depth", ValueType::kInt, "3", "number of weight layers"},
                                                           {"batch", ValueType::kInt, "100", "minibatch size"},
                                                           {"eta", ValueType::kReal, "0.1", "step size"}}))},
      {"sweep", with_shared("csv", concat(train_keys(), std::vector<KeySpec>{
                                                           {"widths", ValueType::kList, "32", "hidden widths"},
                                                           {"depths", ValueType::kList, "2", "weight-layer counts"},
                                                           {"batches", ValueType::kList, "50", "minibatch sizes"},
                                                           {"etas", ValueType::kList, "0.1", "step sizes"}}))},
  };
  return table;
}

// ---------------------------------------------------------------- values

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_real(const std::string& text, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) {
      throw std::invalid_argument(text);
    }
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'", key);
  }
}

Value parse_value(const KeySpec& spec, const std::string& raw) {
  const std::string text = trim(raw);
  switch (spec.type) {
    case ValueType::kBool:
      if (text == "true" || text == "1" || text == "yes") {
        return true;
      }
      if (text == "false" || text == "0" || text == "no") {
        return false;
      }
      throw ConfigError("key '" + spec.name + "': expected true or false, got '" + text + "'", spec.name);
    case ValueType::kInt: {
      try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size()) {
          throw std::invalid_argument(text);
        }
        return static_cast<std::int64_t>(v);
      } catch (const std::exception&) {
        throw ConfigError("key '" + spec.name + "': expected an integer, got '" + text + "'", spec.name);
      }
    }
    case ValueType::kReal:
      return parse_real(text, spec.name);
    case ValueType::kText:
      return text;
    case ValueType::kList: {
      std::vector<double> out;
      if (text.empty()) {
        return out;
      }
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        out.push_back(parse_real(trim(item), spec.name));
      }
      return out;
    }
  }
  throw ConfigError("unsupported value type", spec.name);
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_value(const Value& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, bool>) {
          return x ? "true" : "false";
        } else if constexpr (std::is_same_v<T, std::int64_t>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<T, double>) {
          return format_real(x);
        } else if constexpr (std::is_same_v<T, std::string>) {
          return x;
        } else {
          std::string s;
          for (std::size_t i = 0; i < x.size(); ++i) {
            s += (i ? "," : "") + format_real(x[i]);
          }
          return s;
        }
      },
      v);
}

template <class T>
const T& get_typed(const ExperimentConfig& c, const std::string& key) {
  const auto it = c.params.find(key);
  if (it == c.params.end()) {
    throw ConfigError("missing key '" + key + "'", key);
  }
  const T* v = std::get_if<T>(&it->second);
  if (!v) {
    throw ConfigError("key '" + key + "' has an unexpected type", key);
  }
  return *v;
}

// ---------------------------------------------------------------- results

struct Result {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
  json summary = json::object();
  json document;  // replaces the table when set (nested outputs)
  double diverged_fraction = 0.0;
};

std::string cell_text(const json& v) {
  if (v.is_null()) {
    return "";
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::isnan(d)) {
      return "nan";
    }
    if (std::isinf(d)) {
      return d > 0 ? "inf" : "-inf";
    }
  }
  if (v.is_string()) {
    return v.get<std::string>();
  }
  return v.dump();
}

json number(double d) { return std::isfinite(d) ? json(d) : json(nullptr); }

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_result(std::ostream& os, const ExperimentConfig& config, const Result& result, const std::string& started,
                  double wall_seconds, bool partial) {
  const std::string fmt = config.text("format");
  if (fmt == "json") {
    json prov = {{"command", config.command},
                 {"seed", config.integer("seed")},
                 {"config_hash", config_hash(config)},
                 {"started_utc", started},
                 {"wall_time_s", wall_seconds},
                 {"config", json::object()}};
    for (const auto& spec : command_schema(config.command)) {
      prov["config"][spec.name] = format_value(config.params.at(spec.name));
    }
    json doc = {{"provenance", prov}, {"partial", partial}, {"summary", result.summary}};
    if (!result.document.is_null()) {
      doc["result"] = result.document;
    } else {
      json rows = json::array();
      for (const auto& r : result.rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < result.columns.size(); ++i) {
          obj[result.columns[i]] = r[i];
        }
        rows.push_back(obj);
      }
      doc["rows"] = rows;
    }
    os << doc.dump(2) << '\n';
    return;
  }

  os << "# htsgd " << config.command << '\n';
  os << "# seed: " << config.integer("seed") << '\n';
  os << "# config_hash: " << config_hash(config) << '\n';
  os << "# started_utc: " << started << '\n';
  os << "# wall_time_s: " << wall_seconds << '\n';
  for (const auto& spec : command_schema(config.command)) {
    os << "# config: " << spec.name << " = " << format_value(config.params.at(spec.name)) << '\n';
  }
  for (const auto& [key, value] : result.summary.items()) {
    os << "# summary: " << key << " = " << (value.is_string() ? value.get<std::string>() : value.dump()) << '\n';
  }
  if (partial) {
    os << "# partial: diverged fraction " << result.diverged_fraction << " exceeds max_diverged_fraction\n";
  }
  if (!result.document.is_null() && result.columns.empty()) {
    os << "# result: " << result.document.dump() << '\n';
    return;
  }
  for (std::size_t i = 0; i < result.columns.size(); ++i) {
    os << (i ? "," : "") << result.columns[i];
  }
  os << '\n';
  for (const auto& r : result.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      os << (i ? "," : "") << cell_text(r[i]);
    }
    os << '\n';
  }
}

std::vector<double> read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open input file '" + path + "'", "input");
  }
  std::vector<double> out;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    std::stringstream ss(line.substr(0, hash));
    for (std::string tok; std::getline(ss, tok, ',');) {
      std::stringstream words(tok);
      for (std::string w; words >> w;) {
        out.push_back(parse_real(w, "input"));
      }
    }
  }
  return out;
}

std::size_t to_count(const ExperimentConfig& c, const std::string& key, std::int64_t min = 0) {
  const auto v = c.integer(key);
  if (v < min) {
    throw ConfigError("key '" + key + "' must be at least " + std::to_string(min), key);
  }
  return static_cast<std::size_t>(v);
}

RngStream stream(const ExperimentConfig& c, std::uint64_t id) {
  return {static_cast<std::uint64_t>(c.integer("seed")), id};
}

std::vector<double> input_samples(const ExperimentConfig& c, double& alpha_true) {
  if (!c.text("input").empty()) {
    alpha_true = std::numeric_limits<double>::quiet_NaN();
    return read_samples(c.text("input"));
  }
  alpha_true = c.real("alpha");
  return sample_sas({c.real("alpha"), c.real("sigma")}, to_count(c, "n", 1), stream(c, 1));
}

// ---------------------------------------------------------------- commands

Result cmd_sample(const ExperimentConfig& c) {
  Result r;
  r.columns = {"x"};
  for (double x : sample_sas({c.real("alpha"), c.real("sigma")}, to_count(c, "n", 1), stream(c, 1))) {
    r.rows.push_back({x});
  }
  return r;
}

Result cmd_estimate(const ExperimentConfig& c) {
  double alpha_true = 0.0;
  const auto samples = input_samples(c, alpha_true);
  const auto k1 = to_count(c, "k1");
  const auto est = k1 == 0 ? estimate_alpha(samples) : estimate_alpha(samples, k1);
  Result r;
  r.columns = {"alpha_true", "alpha_hat", "k1", "k2", "n_used", "n_dropped"};
  r.rows.push_back({number(alpha_true), est.alpha_hat, est.k1, est.k2, est.n_used, est.n_dropped});
  return r;
}

Result cmd_stability(const ExperimentConfig& c) {
  double alpha_true = 0.0;
  const auto samples = input_samples(c, alpha_true);
  const auto rep = stability_condition(samples, stream(c, 2), c.real("threshold"));
  Result r;
  r.columns = {"alpha_true", "alpha_x", "alpha_12", "alpha_xp", "alpha_123", "c_st", "threshold", "pass"};
  r.rows.push_back({number(alpha_true), rep.alpha_x, rep.alpha_12, rep.alpha_xp, rep.alpha_123, rep.c_st,
                    rep.threshold, is_alpha_stable(rep) ? 1 : 0});
  return r;
}

SdeConfig sde_config(const ExperimentConfig& c) {
  SdeConfig s;
  s.alpha = c.real("alpha");
  s.epsilon = c.real("eps");
  s.sigma_brownian = c.real("sigma_brownian");
  s.eta = c.real("eta");
  s.jump_scale = jump_scale_from_string(c.text("jump_scale"));
  s.max_steps = to_count(c, "max_steps", 1);
  return s;
}

ObjectiveSpec well_objective(const ExperimentConfig& c) {
  return double_well(c.real("m1"), c.real("m2"), c.real("well_scale"));
}

Result cmd_exit_time(const ExperimentConfig& c) {
  const std::string name = c.text("objective");
  if (name != "quadratic" && name != "double_well") {
    throw ConfigError("key 'objective': expected quadratic or double_well", "objective");
  }
  const ObjectiveSpec spec = name == "quadratic" ? quadratic(to_count(c, "dim", 1)) : well_objective(c);
  SdeConfig s = sde_config(c);
  s.dim = spec.dim();
  std::vector<double> center = c.list("center");
  if (center.empty()) {
    center = name == "quadratic" ? std::vector<double>(spec.dim(), 0.0) : std::vector<double>{spec.minima()[0]};
  }
  s.w0 = c.list("w0").empty() ? center : c.list("w0");
  const auto records = first_exit_replicates(s, spec, center, c.real("a"), c.real("xi"), stream(c, 3),
                                             to_count(c, "reps", 1), to_count(c, "threads"));
  const auto summary = summarize_exits(records);

  Result r;
  r.columns = {"replicate", "exited", "diverged", "exit_step", "exit_time"};
  std::vector<double> scaled;
  for (const auto& rec : records) {
    r.rows.push_back({rec.replicate, rec.exited ? 1 : 0, rec.diverged ? 1 : 0, rec.exit_step, rec.exit_time});
    if (rec.exited) {
      scaled.push_back(std::pow(s.epsilon, s.alpha) * rec.exit_time);
    }
  }
  r.diverged_fraction = summary.diverged_fraction();
  r.summary["replicates"] = summary.replicates;
  r.summary["exited"] = summary.exited;
  r.summary["diverged"] = summary.diverged;
  r.summary["diverged_fraction"] = summary.diverged_fraction();
  r.summary["mean_exit_time"] = summary.mean_exit_time;
  if (s.epsilon > 0.0) {
    const double a = c.real("a") + c.real("xi");
    r.summary["predicted_mean_exit_time"] = expected_exit_time(a, s.epsilon, s.alpha);
    if (!scaled.empty()) {
      const double rate = 2.0 / std::pow(a, s.alpha) / s.alpha;
      r.summary["ks_distance"] = ks_distance(scaled, [rate](double u) { return 1.0 - std::exp(-rate * u); });
    }
  }
  return r;
}

Result cmd_transition(const ExperimentConfig& c) {
  const ObjectiveSpec spec = well_objective(c);
  SdeConfig s = sde_config(c);
  s.w0 = c.list("w0").empty() ? std::vector<double>{spec.minima()[0]} : c.list("w0");
  const auto reps = to_count(c, "reps", 1);
  const auto base = stream(c, 4);
  const double delta = c.real("delta");
  const auto traces = run_replicates<std::vector<TransitionRecord>>(reps, to_count(c, "threads"), [&](std::size_t i) {
    return transition_trace(s, spec, delta, base.replicate(static_cast<std::uint32_t>(i)), i);
  });

  Result r;
  r.columns = {"replicate", "start_basin", "end_basin", "transition_step", "transition_time", "sojourn_time"};
  std::map<std::size_t, std::vector<double>> sojourns;
  for (const auto& trace : traces) {
    for (const auto& rec : trace) {
      r.rows.push_back({rec.replicate, rec.start_basin, rec.end_basin, rec.transition_step, rec.transition_time,
                        rec.sojourn_time});
      sojourns[rec.start_basin].push_back(rec.sojourn_time);
    }
  }
  r.summary["transitions"] = r.rows.size();
  for (const auto& [basin, times] : sojourns) {
    r.summary["mean_sojourn_from_" + std::to_string(basin)] = mean(times);
  }
  return r;
}

Result cmd_metastability(const ExperimentConfig& c) {
  auto model = generator_matrix(c.list("minima"), c.list("saddles"), c.real("alpha"));
  model.pi = stationary_distribution(model);
  Result r;
  r.document = model.to_json();
  r.columns = {"valley", "minimum", "pi"};
  for (Eigen::Index j = 0; j < model.Q.cols(); ++j) {
    r.columns.push_back("q_" + std::to_string(j));
  }
  for (Eigen::Index i = 0; i < model.Q.rows(); ++i) {
    std::vector<json> row = {i, model.minima[static_cast<std::size_t>(i)], model.pi(i)};
    for (Eigen::Index j = 0; j < model.Q.cols(); ++j) {
      row.push_back(model.Q(i, j));
    }
    r.rows.push_back(row);
  }
  return r;
}

Result cmd_converge(const ExperimentConfig& c) {
  const auto dim = to_count(c, "dim", 1);
  const ObjectiveSpec spec = quadratic(dim);
  const std::vector<double> w0(dim, c.real("w0_value"));
  const NoiseModel noise{c.real("alpha"), c.real("noise_scale")};

  ConvergenceConfig cfg;
  cfg.gamma = c.real("gamma") > 0.0 ? c.real("gamma") : (noise.alpha == 2.0 ? 1.0 : default_gamma(noise.alpha));
  cfg.replicates = to_count(c, "reps", 1);
  cfg.Ks.clear();
  for (double k : c.list("Ks")) {
    if (!(k >= 1.0) || k != std::floor(k)) {
      throw ConfigError("key 'Ks': entries must be positive integers", "Ks");
    }
    cfg.Ks.push_back(static_cast<std::size_t>(k));
  }
  const std::string rule = c.text("step_rule");
  if (rule == "optimal") {
    cfg.rule = StepRule::kOptimal;
  } else if (rule == "c") {
    cfg.rule = StepRule::kUserConstant;
  } else if (rule == "eta") {
    cfg.rule = StepRule::kFixedEta;
  } else {
    throw ConfigError("key 'step_rule': expected optimal, c or eta", "step_rule");
  }
  cfg.c = c.real("c");
  cfg.eta = c.real("eta");

  const std::vector<double> origin(dim, 0.0);
  double norm0 = 0.0;
  for (double x : w0) {
    norm0 += x * x;
  }
  norm0 = std::sqrt(norm0);
  cfg.M = c.real("M") > 0.0 ? c.real("M")
                             : estimate_holder_on_ball(spec, origin, std::max(2.0 * norm0, 1.0), cfg.gamma,
                                                       to_count(c, "holder_pairs", 1), stream(c, 5));
  cfg.sigma_gamma = c.real("sigma_gamma") > 0.0
                        ? c.real("sigma_gamma")
                        : estimate_sigma_gamma(spec, w0, noise, cfg.gamma, to_count(c, "sigma_draws", 1), stream(c, 6));

  const auto rows = run_convergence(spec, w0, noise, cfg, stream(c, 7), to_count(c, "threads"));
  const double gap = spec.value(w0) - *spec.f_star();
  const double a = a_gamma_bound(cfg.gamma, cfg.sigma_gamma, cfg.M, gap);

  Result r;
  r.columns = {"K", "eta", "gamma", "alpha", "min_grad_sq_mean", "min_grad_sq_stderr", "bound", "diverged_fraction",
               "a_gamma_bound"};
  std::vector<double> ks;
  std::vector<double> ms;
  for (const auto& row : rows) {
    const double rate_bound = a / std::pow(static_cast<double>(row.K), cfg.gamma / (1.0 + cfg.gamma));
    r.rows.push_back({row.K, row.eta, row.gamma, row.alpha, number(row.min_grad_sq_mean),
                      number(row.min_grad_sq_stderr), row.bound, row.diverged_fraction, rate_bound});
    r.diverged_fraction = std::max(r.diverged_fraction, row.diverged_fraction);
    if (std::isfinite(row.min_grad_sq_mean)) {
      ks.push_back(static_cast<double>(row.K));
      ms.push_back(row.min_grad_sq_mean);
    }
  }
  r.summary["M"] = cfg.M;
  r.summary["sigma_gamma"] = cfg.sigma_gamma;
  r.summary["gap"] = gap;
  r.summary["a_gamma"] = a;
  r.summary["predicted_slope"] = -cfg.gamma / (1.0 + cfg.gamma);
  if (ks.size() >= 2) {
    r.summary["fitted_slope"] = loglog_slope(ks, ms);
  }
  return r;
}

DatasetSplit load_data(const ExperimentConfig& c) {
  DatasetSplit data;
  if (c.text("data") == "synthetic") {
    data = synthetic_blobs(to_count(c, "synthetic_n", 1), to_count(c, "synthetic_dim", 1),
                           to_count(c, "synthetic_classes", 2), c.real("synthetic_spread"), stream(c, 8));
  } else {
    data = load_mnist_dir(c.text("data"));
  }
  const auto n = to_count(c, "n_train");
  if (n > 0 && n < data.train.size()) {
    data.train = data.train.slice(0, n);
  }
  return data;
}

TrainOptions train_options(const ExperimentConfig& c) {
  TrainOptions o;
  o.iterations = to_count(c, "iters", 1);
  o.log_every = to_count(c, "log_every", 1);
  o.loss = loss_kind_from_string(c.text("loss"));
  o.stop_at_full_accuracy = c.flag("stop_at_full");
  o.stability_check = c.flag("stability");
  if (c.real("inject_alpha") > 0.0) {
    o.inject_alpha = c.real("inject_alpha");
  }
  o.threads = to_count(c, "threads");
  return o;
}

Result cmd_train(const ExperimentConfig& c) {
  const auto data = load_data(c);
  const auto depth = to_count(c, "depth", 1);
  std::vector<std::size_t> sizes = {data.train.input_dim()};
  for (std::size_t h = 1; h < depth; ++h) {
    sizes.push_back(to_count(c, "width", 1));
  }
  sizes.push_back(data.n_classes);
  MlpModel model(sizes, init_scheme_from_string(c.text("init")), stream(c, 9));
  TrainOptions o = train_options(c);
  o.batch_size = to_count(c, "batch", 1);
  o.eta = c.real("eta");
  const auto run = train_with_tail_logging(model, data, o, stream(c, 10));

  Result r;
  std::stringstream header(TrainLogRow::csv_header(model.depth()));
  for (std::string col; std::getline(header, col, ',');) {
    r.columns.push_back(col);
  }
  for (const auto& row : run.log) {
    std::vector<json> cells = {row.iteration, row.train_acc, row.test_acc, number(row.loss), number(row.alpha_whole)};
    for (double a : row.alpha_layers) {
      cells.push_back(number(a));
    }
    cells.push_back(row.c_st ? number(*row.c_st) : json(nullptr));
    r.rows.push_back(cells);
  }
  r.summary["parameters"] = model.parameter_count();
  r.summary["iterations_run"] = run.iterations_run;
  r.summary["diverged"] = run.diverged;
  r.diverged_fraction = run.diverged ? 1.0 : 0.0;
  return r;
}

std::vector<std::size_t> counts(const ExperimentConfig& c, const std::string& key) {
  std::vector<std::size_t> out;
  for (double v : c.list(key)) {
    if (!(v >= 1.0) || v != std::floor(v)) {
      throw ConfigError("key '" + key + "': entries must be positive integers", key);
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

Result cmd_sweep(const ExperimentConfig& c) {
  const auto data = load_data(c);
  SweepGrid grid;
  grid.widths = counts(c, "widths");
  grid.depths = counts(c, "depths");
  grid.batch_sizes = counts(c, "batches");
  grid.etas = c.list("etas");
  const auto sweep =
      noise_scale_sweep(grid, data, init_scheme_from_string(c.text("init")), train_options(c), stream(c, 11));

  Result r;
  r.columns = {"width", "depth", "batch_size", "eta", "eta_over_b", "test_error", "alpha_hat", "diverged"};
  std::size_t diverged = 0;
  for (const auto& cell : sweep.cells) {
    r.rows.push_back({cell.width, cell.depth, cell.batch_size, cell.eta, cell.eta_over_b, cell.test_error,
                      number(cell.alpha_hat), cell.diverged ? 1 : 0});
    diverged += cell.diverged ? 1 : 0;
  }
  json groups = json::array();
  for (const auto& g : sweep.groups) {
    groups.push_back({{"eta_over_b", g.eta_over_b},
                      {"cells", g.cells},
                      {"test_error", g.test_error},
                      {"alpha_hat", number(g.alpha_hat)},
                      {"diverged", g.diverged}});
  }
  r.summary["groups"] = groups;
  r.diverged_fraction = static_cast<double>(diverged) / static_cast<double>(sweep.cells.size());
  return r;
}

Result execute(const ExperimentConfig& c) {
  const auto& cmd = c.command;
  if (cmd == "sample") return cmd_sample(c);
  if (cmd == "estimate") return cmd_estimate(c);
  if (cmd == "stability") return cmd_stability(c);
  if (cmd == "exit-time") return cmd_exit_time(c);
  if (cmd == "transition") return cmd_transition(c);
  if (cmd == "metastability") return cmd_metastability(c);
  if (cmd == "converge") return cmd_converge(c);
  if (cmd == "train") return cmd_train(c);
  if (cmd == "sweep") return cmd_sweep(c);
  throw ConfigError("unknown command '" + cmd + "'");
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message, const std::string& key = {}) {
  json rec = {{"error", kind}, {"message", message}};
  if (!key.empty()) {
    rec["key"] = key;
  }
  err << rec.dump() << '\n';
}

}  // namespace

// ---------------------------------------------------------------- public API

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"sample",        "estimate", "stability", "exit-time", "transition",
                                                 "metastability", "converge", "train",     "sweep"};
  return names;
}

const std::vector<KeySpec>& command_schema(const std::string& command) {
  const auto& table = schemas();
  const auto it = table.find(command);
  if (it == table.end()) {
    throw ConfigError(command.empty() ? "no command given" : "unknown command '" + command + "'", "command");
  }
  return it->second;
}

bool ExperimentConfig::flag(const std::string& key) const { return get_typed<bool>(*this, key); }
std::int64_t ExperimentConfig::integer(const std::string& key) const { return get_typed<std::int64_t>(*this, key); }
double ExperimentConfig::real(const std::string& key) const { return get_typed<double>(*this, key); }
const std::string& ExperimentConfig::text(const std::string& key) const { return get_typed<std::string>(*this, key); }
const std::vector<double>& ExperimentConfig::list(const std::string& key) const {
  return get_typed<std::vector<double>>(*this, key);
}

ParsedText split_config_text(const std::string& text) {
  ParsedText out;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    const std::string body = trim(line.substr(0, hash));
    if (body.empty()) {
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("duplicate key '" + key + "'", key);
    }
    if (key == "command") {
      out.command = value;
    } else {
      out.entries.emplace_back(key, value);
    }
  }
  return out;
}

ExperimentConfig resolve_config(const std::string& command, const Entries& file_entries,
                                const Entries& flag_entries) {
  const auto& schema = command_schema(command);
  std::map<std::string, const KeySpec*> by_name;
  for (const auto& spec : schema) {
    by_name[spec.name] = &spec;
  }
  std::map<std::string, std::string> raw;
  for (const auto* source : {&file_entries, &flag_entries}) {
    for (const auto& [key, value] : *source) {
      if (!by_name.count(key)) {
        throw ConfigError("unknown key '" + key + "' for command '" + command + "'", key);
      }
      raw[key] = value;
    }
  }
  ExperimentConfig config;
  config.command = command;
  for (const auto& spec : schema) {
    const auto it = raw.find(spec.name);
    config.params[spec.name] = parse_value(spec, it != raw.end() ? it->second : spec.default_text);
  }
  const auto& fmt = config.text("format");
  if (fmt != "csv" && fmt != "json") {
    throw ConfigError("key 'format': expected csv or json", "format");
  }
  if (config.integer("seed") < 0) {
    throw ConfigError("key 'seed' must be non-negative", "seed");
  }
  if (command == "metastability" && config.list("minima").empty()) {
    throw ConfigError("missing required key 'minima'", "minima");
  }
  return config;
}

ExperimentConfig parse_config(const std::string& text) {
  const auto parsed = split_config_text(text);
  if (parsed.command.empty()) {
    throw ConfigError("config does not name a command (add 'command = <name>')", "command");
  }
  return resolve_config(parsed.command, parsed.entries, {});
}

std::string serialize(const ExperimentConfig& config) {
  std::string out = "command = " + config.command + "\n";
  for (const auto& spec : command_schema(config.command)) {
    out += spec.name + " = " + format_value(config.params.at(spec.name)) + "\n";
  }
  return out;
}

std::string config_hash(const ExperimentConfig& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : serialize(config)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

int run(const ExperimentConfig& config, std::ostream& out, std::ostream& err) {
  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  Result result;
  try {
    result = execute(config);
  } catch (const ConfigError& e) {
    report_error(err, "config", e.what(), e.key());
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    report_error(err, "config", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    report_error(err, "runtime", e.what());
    return kExitFailure;
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool partial = result.diverged_fraction > config.real("max_diverged_fraction");

  std::filesystem::path target = config.text("output");
  if (target.empty()) {
    if (const char* dir = std::getenv("HTSGD_OUTPUT_DIR"); dir && *dir) {
      target = std::filesystem::path(dir) / (config.command + "." + config.text("format"));
    }
  }
  if (target.empty()) {
    write_result(out, config, result, started, wall, partial);
  } else {
    if (target.has_parent_path()) {
      std::filesystem::create_directories(target.parent_path());
    }
    std::ofstream file(target);
    if (!file) {
      report_error(err, "io", "cannot write " + target.string());
      return kExitFailure;
    }
    write_result(file, config, result, started, wall, partial);
  }
  if (partial) {
    report_error(err, "diverged",
                 "diverged fraction " + format_real(result.diverged_fraction) + " exceeds max_diverged_fraction");
    return kExitDiverged;
  }
  return kExitOk;
}

int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heavy-tailed SGD noise laboratory"};
  app.require_subcommand(1);
  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> config_files;
  for (const auto& name : command_names()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_files[name], "key = value config file");
    for (const auto& spec : command_schema(name)) {
      sub->add_option("--" + spec.name, values[name][spec.name], spec.help + " [" + spec.default_text + "]");
    }
  }

  // Glue list values that start with '-' to their option ("--minima -1,2")
  // so they are not mistaken for flags.
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a.rfind("--", 0) == 0 && a.find('=') == std::string::npos && i + 1 < argc) {
      const std::string next = argv[i + 1];
      if (next.size() > 1 && next[0] == '-' && (std::isdigit(static_cast<unsigned char>(next[1])) || next[1] == '.')) {
        a += "=" + next;
        ++i;
      }
    }
    args.push_back(a);
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "config", e.what());
    err << app.help();
    return kExitConfig;
  }

  const auto* chosen = app.get_subcommands().front();
  const std::string command = chosen->get_name();
  try {
    ParsedText file;
    const auto& path = config_files[command];
    if (!path.empty()) {
      std::ifstream in(path);
      if (!in) {
        throw ConfigError("cannot open config file '" + path + "'", "config");
      }
      std::stringstream buf;
      buf << in.rdbuf();
      file = split_config_text(buf.str());
      if (!file.command.empty() && file.command != command) {
        throw ConfigError("config file is for command '" + file.command + "', not '" + command + "'", "command");
      }
    }
    Entries flags;
    for (const auto& spec : command_schema(command)) {
      if (chosen->get_option("--" + spec.name)->count() > 0) {
        flags.emplace_back(spec.name, values[command][spec.name]);
      }
    }
    return run(resolve_config(command, file.entries, flags), out, err);
  } catch (const ConfigError& e) {
    report_error(err, "config", e.what(), e.key());
    return kExitConfig;
  }
}

}  // namespace htsgd::cli
