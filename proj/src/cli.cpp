#include "oprisk/cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "oprisk/errors.hpp"
#include "oprisk/invariance.hpp"
#include "oprisk/montecarlo.hpp"

namespace oprisk::cli {
namespace {

using nlohmann::json;

const std::vector<std::string> kCommands = {"phase-diagram", "schedule",        "simulate",
                                            "fluctuations",  "diversification", "correlation"};

const char* describe(const std::string& command) {
  if (command == "phase-diagram") return "curves A-D of the (rho, lambda) plane";
  if (command == "schedule") return "mu_N, t_N and rho_N over an N list";
  if (command == "simulate") return "bank-loss moments and VaR at one N";
  if (command == "fluctuations") return "law of the normalized fluctuation eps_N";
  if (command == "diversification") return "VaR diversification ratio, Monte Carlo and asymptotic";
  return "cell-pair correlation under the one-factor model";
}

enum class Kind { Real, Count, Text, Flag, List, Seed };

struct Key {
  const char* name;
  Kind kind;
  const char* help;
};

const Key kKeys[] = {
    {"rho", Kind::Real, "tail index of the latent variable (gaussian fixes 2)"},
    {"lambda", Kind::Real, "speed parameter lambda"},
    {"family", Kind::Text, "gaussian | weibull"},
    {"c", Kind::Real, "Weibull tail scale (default 1/rho)"},
    {"schedule", Kind::Text, "asymptotic | exact-lognormal | exact-normalized"},
    {"a", Kind::Real, "target expected bank loss"},
    {"b", Kind::Real, "target bank-loss variance (exact-lognormal)"},
    {"c0", Kind::Real, "correlation constant, rho_N = min(1, c0/ln N)"},
    {"q", Kind::Real, "quantile level"},
    {"n", Kind::Count, "number of cells"},
    {"n-list", Kind::List, "comma-separated cell counts"},
    {"reps", Kind::Count, "Monte Carlo replications per N"},
    {"seed", Kind::Seed, "master seed (decimal or 0x hex)"},
    {"output", Kind::Text, "output file (default: stdout)"},
    {"format", Kind::Text, "csv | json"},
    {"workers", Kind::Count, "worker threads (default: OPRISK_WORKERS or all cores)"},
    {"eq15-printed-sign", Kind::Flag, "report the asymptotic ratio with the printed sub-leading sign"},
    {"exponent-printed-forms", Kind::Flag, "use the printed forms of curves B-D and the variance exponent"},
    {"rho-min", Kind::Real, "phase diagram: smallest rho"},
    {"rho-max", Kind::Real, "phase diagram: largest rho"},
    {"steps", Kind::Count, "phase diagram: grid points"},
};

const Key* find_key(const std::string& name) {
  for (const Key& key : kKeys) {
    if (name == key.name) return &key;
  }
  return nullptr;
}

double parse_real(const std::string& key, const json& value) {
  if (value.is_number()) return value.get<double>();
  if (value.is_string()) {
    const std::string text = value.get<std::string>();
    double out = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    if (ec == std::errc() && end == text.data() + text.size() && !text.empty()) return out;
  }
  throw ConfigError("'" + key + "' must be a number, got " + value.dump());
}

std::uint64_t parse_count(const std::string& key, const json& value, int base = 10) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer() && value.get<std::int64_t>() >= 0) return value.get<std::uint64_t>();
  if (value.is_string()) {
    std::string text = value.get<std::string>();
    if (base == 0 && (text.rfind("0x", 0) == 0 || text.rfind("0X", 0) == 0)) {
      text = text.substr(2);
      base = 16;
    } else if (base == 0) {
      base = 10;
    }
    std::uint64_t out = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), out, base);
    if (ec == std::errc() && end == text.data() + text.size() && !text.empty()) return out;
  }
  throw ConfigError("'" + key + "' must be a non-negative integer, got " + value.dump());
}

std::vector<std::uint64_t> parse_list(const std::string& key, const json& value) {
  std::vector<std::uint64_t> out;
  if (value.is_array()) {
    for (const json& item : value) out.push_back(parse_count(key, item));
  } else if (value.is_string()) {
    std::stringstream in(value.get<std::string>());
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_count(key, json(item)));
  } else {
    throw ConfigError("'" + key + "' must be a list of integers");
  }
  return out;
}

bool parse_flag(const std::string& key, const json& value) {
  if (value.is_boolean()) return value.get<bool>();
  throw ConfigError("'" + key + "' must be true or false");
}

std::string parse_text(const std::string& key, const json& value) {
  if (value.is_string()) return value.get<std::string>();
  throw ConfigError("'" + key + "' must be a string");
}

RunConfig config_from_json(const std::string& command, const json& doc) {
  RunConfig cfg;
  cfg.command = command;
  for (const auto& [name, value] : doc.items()) {
    if (name == "command") continue;
    if (!find_key(name)) throw ConfigError("unknown configuration key '" + name + "'");
    if (name == "rho") cfg.rho = parse_real(name, value);
    else if (name == "lambda") cfg.lambda = parse_real(name, value);
    else if (name == "family") cfg.family = parse_text(name, value);
    else if (name == "c") cfg.c = parse_real(name, value);
    else if (name == "schedule") cfg.schedule = parse_text(name, value);
    else if (name == "a") cfg.a = parse_real(name, value);
    else if (name == "b") cfg.b = parse_real(name, value);
    else if (name == "c0") cfg.c0 = parse_real(name, value);
    else if (name == "q") cfg.q = parse_real(name, value);
    else if (name == "n") cfg.n = parse_count(name, value);
    else if (name == "n-list") cfg.n_list = parse_list(name, value);
    else if (name == "reps") cfg.reps = parse_count(name, value);
    else if (name == "seed") cfg.seed = parse_count(name, value, 0);
    else if (name == "output") cfg.output = parse_text(name, value);
    else if (name == "format") cfg.format = parse_text(name, value);
    else if (name == "workers") cfg.workers = static_cast<unsigned>(std::min<std::uint64_t>(parse_count(name, value), 4096));
    else if (name == "eq15-printed-sign") cfg.eq15_printed_sign = parse_flag(name, value);
    else if (name == "exponent-printed-forms") cfg.exponent_printed_forms = parse_flag(name, value);
    else if (name == "rho-min") cfg.rho_min = parse_real(name, value);
    else if (name == "rho-max") cfg.rho_max = parse_real(name, value);
    else if (name == "steps") cfg.steps = static_cast<int>(std::min<std::uint64_t>(parse_count(name, value), 1u << 24));
  }
  return cfg;
}

std::vector<std::uint64_t> effective_n_list(const RunConfig& cfg) {
  if (!cfg.n_list.empty()) return cfg.n_list;
  if (cfg.command == "simulate") return {cfg.n};
  return default_n_list(cfg.command);
}

json config_to_json(const RunConfig& cfg) {
  return json{{"command", cfg.command},
              {"rho", cfg.rho},
              {"lambda", cfg.lambda},
              {"family", cfg.family},
              {"c", cfg.c},
              {"schedule", cfg.schedule},
              {"a", cfg.a},
              {"b", cfg.b},
              {"c0", cfg.c0},
              {"q", cfg.q},
              {"n", cfg.n},
              {"n-list", effective_n_list(cfg)},
              {"reps", cfg.reps},
              {"seed", cfg.seed},
              {"format", cfg.format},
              {"workers", cfg.workers},
              {"eq15-printed-sign", cfg.eq15_printed_sign},
              {"exponent-printed-forms", cfg.exponent_printed_forms},
              {"rho-min", cfg.rho_min},
              {"rho-max", cfg.rho_max},
              {"steps", cfg.steps}};
}

ScheduleMode parse_mode(const std::string& name) {
  if (name == "asymptotic") return ScheduleMode::Asymptotic;
  if (name == "exact-lognormal") return ScheduleMode::ExactLognormal;
  if (name == "exact-normalized") return ScheduleMode::ExactNormalized;
  throw ConfigError("unknown schedule '" + name + "'");
}

ModelSpec make_spec(const RunConfig& cfg) {
  ModelSpec spec;
  if (cfg.family == "gaussian") {
    if (cfg.rho != 2.0) throw ConfigError("the gaussian family fixes rho = 2");
    spec.schedule.family = SeverityFamily::gaussian();
  } else if (cfg.family == "weibull") {
    if (!(cfg.c >= 0.0)) throw ConfigError("Weibull scale c must be positive (0 selects 1/rho)");
    try {
      spec.schedule.family =
          cfg.c == 0.0 ? SeverityFamily::weibull(cfg.rho) : SeverityFamily::weibull(cfg.rho, cfg.c);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  } else {
    throw ConfigError("unknown family '" + cfg.family + "'");
  }
  spec.schedule.mode = parse_mode(cfg.schedule);
  spec.schedule.lambda = cfg.lambda;
  spec.schedule.a = cfg.a;
  spec.schedule.b = cfg.b;
  spec.schedule.c0 = cfg.c0;
  spec.q = cfg.q;
  spec.validate();
  return spec;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

bool integer_column(const std::string& name) { return name == "N" || name == "n_reps" || name == "overflows"; }

void write_table(std::ostream& out, const Table& table, const RunConfig& cfg) {
  if (cfg.format == "csv") {
    for (std::size_t i = 0; i < table.header.size(); ++i) out << (i ? "," : "") << table.header[i];
    out << '\n';
    for (const auto& row : table.rows) {
      for (std::size_t i = 0; i < row.size(); ++i) {
        out << (i ? "," : "");
        if (integer_column(table.header[i])) out << static_cast<std::uint64_t>(row[i]);
        else out << format_double(row[i]);
      }
      out << '\n';
    }
  } else {
    json rows = json::array();
    for (const auto& row : table.rows) {
      json obj = json::object();
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (integer_column(table.header[i])) obj[table.header[i]] = static_cast<std::uint64_t>(row[i]);
        else obj[table.header[i]] = std::isfinite(row[i]) ? json(row[i]) : json(nullptr);
      }
      rows.push_back(std::move(obj));
    }
    const json doc{{"config", config_to_json(cfg)}, {"rows", rows}, {"seed", cfg.seed}, {"version", kVersion}};
    out << doc.dump(2) << '\n';
  }
  if (!out) throw IoError("failed while writing the output table");
}

double as_real(std::uint64_t v) { return static_cast<double>(v); }

Table compute(const RunConfig& cfg) {
  Table table;
  const ExponentForm form = cfg.exponent_printed_forms ? ExponentForm::Printed : ExponentForm::Derived;
  if (cfg.command == "phase-diagram") {
    table.header = {"rho", "lambda_A", "lambda_C", "lambda_B", "lambda_D"};
    for (const PhaseRow& r : phase_grid(cfg.rho_min, cfg.rho_max, cfg.steps, form)) {
      table.rows.push_back({r.rho, r.lambda_a, r.lambda_c, r.lambda_b, r.lambda_d});
    }
    return table;
  }

  const ModelSpec spec = make_spec(cfg);
  const std::vector<std::uint64_t> n_list = effective_n_list(cfg);
  const unsigned workers = cfg.workers;

  if (cfg.command == "schedule") {
    table.header = {"N", "mu_N", "t_N", "rho_N"};
    for (std::uint64_t n : n_list) {
      const ScheduleRow r = spec.schedule.evaluate(as_real(n));
      table.rows.push_back({as_real(n), r.mu, r.t, r.rho_n});
    }
  } else if (cfg.command == "simulate") {
    table.header = {"N",  "n_reps", "mean",  "mean_se", "variance", "variance_se", "mean_analytic", "variance_analytic",
                    "q", "var_q", "var_q_se", "overflows"};
    const double levels[] = {cfg.q};
    for (std::uint64_t n : n_list) {
      const SimEstimate e = simulate_bank_loss(spec, n, cfg.reps, cfg.seed, workers, levels);
      const LossMoments exact = loss_moments(spec.schedule, as_real(n));
      table.rows.push_back({as_real(n), as_real(e.n_reps), e.mean, e.mean_se, e.variance, e.variance_se, exact.mean,
                            exact.variance, cfg.q, e.quantiles[0].value, e.quantiles[0].se,
                            static_cast<double>(e.overflows)});
    }
  } else if (cfg.command == "fluctuations") {
    table.header = {"N", "eps_var_mc", "eps_var_analytic", "ks_stable", "ks_normal", "gamma_fit", "delta_fit"};
    for (const FluctuationRow& r : fluctuation_study(spec, n_list, cfg.reps, cfg.seed, workers)) {
      table.rows.push_back({as_real(r.n), r.eps_var_mc, r.eps_var_analytic, r.ks_stable, r.ks_normal, r.gamma_fit,
                            r.delta_fit});
    }
  } else if (cfg.command == "diversification") {
    table.header = {"N",     "var_bank_mc", "var_bank_se",     "sum_cell_var_analytic",
                    "dr_mc", "dr_se",       "dr_eq15_derived", "dr_eq15_printed"};
    for (const DRRow& r : dr_study(spec, n_list, cfg.reps, cfg.seed, workers)) {
      table.rows.push_back({as_real(r.n), r.var_bank_mc, r.var_bank_se, r.sum_cell_var_analytic, r.dr_mc, r.dr_se,
                            r.dr_derived, r.dr_printed});
    }
  } else if (cfg.command == "correlation") {
    table.header = {"N", "rho_N", "corr_mc", "corr_se", "corr_closed_form", "bank_mean", "bank_var"};
    for (const CorrRow& r : correlation_study(spec, n_list, cfg.reps, cfg.seed, workers)) {
      table.rows.push_back(
          {as_real(r.n), r.rho_n, r.corr_mc, r.corr_se, r.corr_closed_form, r.bank_mean, r.bank_var});
    }
  }
  return table;
}

}  // namespace

std::vector<std::uint64_t> default_n_list(const std::string& command) {
  std::vector<std::uint64_t> out;
  auto powers = [&](int lo, int hi, int step) {
    for (int k = lo; k <= hi; k += step) out.push_back(std::uint64_t{1} << k);
  };
  if (command == "fluctuations") powers(8, 14, 2);
  else if (command == "diversification") powers(6, 14, 1);
  else if (command == "correlation") powers(4, 14, 1);
  else if (command == "schedule") powers(1, 20, 1);
  return out;
}

void validate(const RunConfig& cfg) {
  if (std::find(kCommands.begin(), kCommands.end(), cfg.command) == kCommands.end()) {
    throw ConfigError("unknown command '" + cfg.command + "'");
  }
  if (cfg.format != "csv" && cfg.format != "json") throw ConfigError("format must be csv or json");
  if (cfg.command == "phase-diagram") {
    if (!(cfg.rho_min > 1.0) || !(cfg.rho_max > cfg.rho_min) || !std::isfinite(cfg.rho_max)) {
      throw ConfigError("phase-diagram needs 1 < rho-min < rho-max");
    }
    if (cfg.steps < 2) throw ConfigError("phase-diagram needs steps >= 2");
    return;
  }
  const ModelSpec spec = make_spec(cfg);
  const std::vector<std::uint64_t> n_list = effective_n_list(cfg);
  double min_n = cfg.command == "schedule" || cfg.command == "simulate" || cfg.command == "diversification"
                     ? spec.schedule.min_n()
                     : 2.0;
  if (spec.schedule.c0 > 0.0) min_n = std::max(min_n, 2.0);
  for (std::uint64_t n : n_list) {
    if (as_real(n) < min_n) {
      throw ConfigError("N=" + std::to_string(n) + " is below the minimum " + format_double(min_n) +
                        " for this command and schedule");
    }
  }
  if (cfg.command == "schedule") return;
  if (cfg.reps < 100) throw ConfigError("reps must be at least 100");
  if (cfg.command == "diversification") {
    if (!(cfg.q > 0.5)) throw ConfigError("diversification needs q in (0.5, 1)");
    if (as_real(cfg.reps) < 20.0 / (1.0 - cfg.q)) {
      throw ConfigError("reps must leave at least 20 replications beyond the quantile level");
    }
  }
  if (cfg.command == "correlation" && cfg.family != "gaussian") {
    throw ConfigError("correlation requires the gaussian family");
  }
  if (cfg.command == "fluctuations") {
    // Fitting needs a finite normalizer at every N.
    for (std::uint64_t n : n_list) bbm_normalizers(spec.schedule, as_real(n));
  }
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, end);
}

RunSummary run(const RunConfig& cfg) {
  validate(cfg);
  std::ofstream file;
  if (!cfg.output.empty()) {
    file.open(cfg.output, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open output file '" + cfg.output + "'");
  }
  const auto start = std::chrono::steady_clock::now();
  const Table table = compute(cfg);
  write_table(cfg.output.empty() ? std::cout : file, table, cfg);
  if (file.is_open()) {
    file.close();
    if (!file) throw IoError("cannot write output file '" + cfg.output + "'");
  }
  return {table.rows.size(), std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()};
}

int main(int argc, char** argv) {
  CLI::App app{"Classification-invariant operational-risk laboratory"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::map<std::string, std::string> raw;
  std::map<std::string, bool> flags;
  std::map<std::string, CLI::Option*> options;
  std::string config_path;
  for (const std::string& name : kCommands) {
    CLI::App* sub = app.add_subcommand(name, describe(name));
    sub->add_option("--config", config_path, "JSON file with the same keys as the flags");
    for (const Key& key : kKeys) {
      const std::string flag = std::string("--") + key.name;
      if (key.kind == Kind::Flag) {
        sub->add_flag(flag, flags[key.name], key.help);
      } else {
        const std::string spelling = std::string(key.name) == "output" ? "-o," + flag : flag;
        sub->add_option(spelling, raw[key.name], key.help);
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  try {
    json doc = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw IoError("cannot read config file '" + config_path + "'");
      try {
        doc = json::parse(in);
      } catch (const json::parse_error& e) {
        throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
      }
      // A previous JSON output can be passed back as its own config.
      if (doc.is_object() && doc.contains("config") && doc.contains("rows")) doc = doc["config"];
      if (!doc.is_object()) throw ConfigError("config file must hold a JSON object");
    }
    for (const Key& key : kKeys) {
      const std::string flag = std::string("--") + key.name;
      if (sub->get_option(flag)->count() == 0) continue;
      if (key.kind == Kind::Flag) doc[key.name] = flags[key.name];
      else doc[key.name] = raw[key.name];
    }
    const RunConfig cfg = config_from_json(command, doc);
    const RunSummary summary = run(cfg);
    std::ostream& report = cfg.output.empty() ? std::cerr : std::cout;
    std::ostringstream seed_hex;
    seed_hex << std::hex << cfg.seed;
    report << command << ": " << summary.rows << " rows in " << format_double(std::round(summary.elapsed * 1e3) / 1e3)
           << " s, seed " << cfg.seed << " (0x" << seed_hex.str() << ")";
    if (!cfg.output.empty()) report << " -> " << cfg.output;
    report << '\n';
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace oprisk::cli
