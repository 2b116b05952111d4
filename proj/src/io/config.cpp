#include "apollo/io/config.hpp"

#include <fmt/format.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>

#include "apollo/error.hpp"
#include "apollo/forecast/reference.hpp"
#include "apollo/forecast/subprocess.hpp"

namespace apollo::io {
namespace {

using nlohmann::json;

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

// Walks one JSON object, recording which keys were consumed so leftovers
// can be reported.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("expected an object", path_.empty() ? "<root>" : path_);
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const { return join(path_, key); }

  void read(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError("expected a number", path(key));
      out = v->get<double>();
    }
  }

  void read(const std::string& key, std::size_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError("expected a non-negative integer", path(key));
      out = v->get<std::size_t>();
    }
  }

  void read(const std::string& key, std::uint32_t& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || v->get<std::int64_t>() < 0 ||
          v->get<std::uint64_t>() > 0xFFFFFFFFULL) {
        throw ConfigError("expected an integer in [0, 2^32)", path(key));
      }
      out = v->get<std::uint32_t>();
    }
  }

  void read(const std::string& key, int& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || v->get<std::int64_t>() < std::numeric_limits<int>::min() ||
          (v->is_number_unsigned() && v->get<std::uint64_t>() > std::numeric_limits<int>::max())) {
        throw ConfigError("expected an integer", path(key));
      }
      out = v->get<int>();
    }
  }

  void read(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError("expected a string", path(key));
      out = v->get<std::string>();
    }
  }

  void read(const std::string& key, std::optional<std::string>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        throw ConfigError("expected a string or null", path(key));
      }
    }
  }

  void read(const std::string& key, std::optional<std::size_t>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      std::size_t tmp = 0;
      read(key, tmp);
      out = tmp;
    }
  }

  void read(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError("expected an array of numbers", path(key));
      out.clear();
      for (std::size_t i = 0; i < v->size(); ++i) {
        if (!(*v)[i].is_number()) throw ConfigError("expected a number", fmt::format("{}[{}]", path(key), i));
        out.push_back((*v)[i].get<double>());
      }
    }
  }

  template <typename Fn>
  void object(const std::string& key, Fn&& fn) {
    if (const json* v = find(key)) {
      ObjectReader child(*v, path(key));
      fn(child);
      child.finish();
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw ConfigError("unknown key", join(path_, it.key()));
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json predictor_json(const PredictorConfig& p) {
  return {{"kind", p.kind},       {"season_length", p.season_length}, {"ar_order", p.ar_order},
          {"command", p.command}, {"per_frame_delay", p.per_frame_delay}, {"jitter", p.jitter}};
}

void read_predictor(ObjectReader& r, PredictorConfig& p) {
  r.read("kind", p.kind);
  r.read("season_length", p.season_length);
  r.read("ar_order", p.ar_order);
  r.read("command", p.command);
  r.read("per_frame_delay", p.per_frame_delay);
  r.read("jitter", p.jitter);
}

void validate_predictor(const PredictorConfig& p, const std::string& path) {
  if (p.kind == "external") {
    if (p.command.empty()) throw ConfigError("external predictor needs a command", path + ".command");
  } else if (p.kind != "persistence" && p.kind != "seasonal_naive" && p.kind != "ar") {
    throw ConfigError("unknown predictor kind '" + p.kind + "'", path + ".kind");
  }
  if (p.season_length < 1) throw ConfigError("must be >= 1", path + ".season_length");
  if (p.ar_order < 1) throw ConfigError("must be >= 1", path + ".ar_order");
  if (!std::isfinite(p.per_frame_delay) || p.per_frame_delay < 0.0) {
    throw ConfigError("must be >= 0", path + ".per_frame_delay");
  }
  if (!std::isfinite(p.jitter) || p.jitter < 0.0) throw ConfigError("must be >= 0", path + ".jitter");
}

}  // namespace

void validate(const RunConfig& cfg) {
  dsp::validate(cfg.filter);
  codec::validate(cfg.quant);
  race::validate(cfg.race);
  validate_predictor(cfg.predictors.main, "predictors.main");
  validate_predictor(cfg.predictors.draft, "predictors.draft");

  const auto& levels = cfg.eval.quantile_levels;
  if (levels.empty()) throw ConfigError("needs at least one level", "eval.quantile_levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto field = fmt::format("eval.quantile_levels[{}]", i);
    if (!(levels[i] > 0.0 && levels[i] < 1.0)) throw ConfigError("must lie in (0, 1)", field);
    if (i > 0 && !(levels[i] > levels[i - 1])) throw ConfigError("levels must be sorted and distinct", field);
  }
  if (cfg.eval.baseline.empty()) throw ConfigError("must not be empty", "eval.baseline");

  const auto& d = cfg.data;
  if (d.value_column.empty()) throw ConfigError("must not be empty", "data.value_column");
  if (d.context_length < 1) throw ConfigError("must be >= 1", "data.context_length");
  if (d.horizon < 1) throw ConfigError("must be >= 1", "data.horizon");
  if (d.season_length < 1) throw ConfigError("must be >= 1", "data.season_length");
  if (d.context_length <= d.season_length) {
    throw ConfigError("must exceed data.season_length", "data.context_length");
  }
  if (d.num_samples < 1) throw ConfigError("must be >= 1", "data.num_samples");
  if (cfg.race.effective_min_overlap(d.horizon) > d.horizon) {
    throw ConfigError("exceeds data.horizon", "race.min_overlap");
  }
}

json to_json(const RunConfig& cfg) {
  json race_min = cfg.race.min_overlap ? json(*cfg.race.min_overlap) : json(nullptr);
  json ts_col = cfg.data.timestamp_column ? json(*cfg.data.timestamp_column) : json(nullptr);
  return {
      {"filter",
       {{"order", cfg.filter.order},
        {"cutoff_hz", cfg.filter.cutoff_hz},
        {"sample_rate_hz", cfg.filter.sample_rate_hz}}},
      {"quant",
       {{"quant_factor", cfg.quant.quant_factor}, {"rounding", codec::to_string(cfg.quant.rounding)}}},
      {"race",
       {{"gamma", cfg.race.gamma},
        {"min_overlap", race_min},
        {"norm_kind", race::to_string(cfg.race.norm_kind)},
        {"compare_on", race::to_string(cfg.race.compare_on)},
        {"clock", cfg.race.clock == forecast::ClockMode::wall ? "wall" : "simulated"}}},
      {"predictors",
       {{"main", predictor_json(cfg.predictors.main)}, {"draft", predictor_json(cfg.predictors.draft)}}},
      {"eval", {{"quantile_levels", cfg.eval.quantile_levels}, {"baseline", cfg.eval.baseline}}},
      {"data",
       {{"value_column", cfg.data.value_column},
        {"timestamp_column", ts_col},
        {"context_length", cfg.data.context_length},
        {"horizon", cfg.data.horizon},
        {"season_length", cfg.data.season_length},
        {"num_samples", cfg.data.num_samples},
        {"seed", cfg.data.seed}}},
  };
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  ObjectReader root(j, "");
  root.object("filter", [&](ObjectReader& r) {
    r.read("order", cfg.filter.order);
    r.read("cutoff_hz", cfg.filter.cutoff_hz);
    r.read("sample_rate_hz", cfg.filter.sample_rate_hz);
  });
  root.object("quant", [&](ObjectReader& r) {
    r.read("quant_factor", cfg.quant.quant_factor);
    std::string rounding(codec::to_string(cfg.quant.rounding));
    r.read("rounding", rounding);
    cfg.quant.rounding = codec::parse_rounding_mode(rounding);
  });
  root.object("race", [&](ObjectReader& r) {
    r.read("gamma", cfg.race.gamma);
    r.read("min_overlap", cfg.race.min_overlap);
    std::string norm(race::to_string(cfg.race.norm_kind));
    std::string compare(race::to_string(cfg.race.compare_on));
    std::string clock = cfg.race.clock == forecast::ClockMode::wall ? "wall" : "simulated";
    r.read("norm_kind", norm);
    r.read("compare_on", compare);
    r.read("clock", clock);
    cfg.race.norm_kind = race::parse_norm_kind(norm);
    cfg.race.compare_on = race::parse_summary_path(compare);
    if (clock == "wall") {
      cfg.race.clock = forecast::ClockMode::wall;
    } else if (clock == "simulated") {
      cfg.race.clock = forecast::ClockMode::simulated;
    } else {
      throw ConfigError("expected 'wall' or 'simulated'", "race.clock");
    }
  });
  root.object("predictors", [&](ObjectReader& r) {
    r.object("main", [&](ObjectReader& p) { read_predictor(p, cfg.predictors.main); });
    r.object("draft", [&](ObjectReader& p) { read_predictor(p, cfg.predictors.draft); });
  });
  root.object("eval", [&](ObjectReader& r) {
    r.read("quantile_levels", cfg.eval.quantile_levels);
    r.read("baseline", cfg.eval.baseline);
  });
  root.object("data", [&](ObjectReader& r) {
    r.read("value_column", cfg.data.value_column);
    r.read("timestamp_column", cfg.data.timestamp_column);
    r.read("context_length", cfg.data.context_length);
    r.read("horizon", cfg.data.horizon);
    r.read("season_length", cfg.data.season_length);
    r.read("num_samples", cfg.data.num_samples);
    r.read("seed", cfg.data.seed);
  });
  root.finish();
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), path.string());
  }
  return config_from_json(j);
}

void save_config(const RunConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open " + path.string() + " for writing");
  out << to_json(cfg).dump(2) << '\n';
}

forecast::PredictorHandle build_predictor(const PredictorConfig& cfg, forecast::Role role) {
  forecast::PredictorHandle h;
  if (cfg.kind == "external") {
    h = forecast::make_subprocess_predictor(cfg.command, role);
  } else {
    forecast::ReferenceParams params;
    params.season_length = cfg.season_length;
    params.ar_order = cfg.ar_order;
    h = forecast::make_reference_predictor(forecast::parse_reference_kind(cfg.kind), params, role);
  }
  return forecast::with_simulated_latency(std::move(h), cfg.per_frame_delay, cfg.jitter);
}

EnvOverrides read_env_overrides() {
  EnvOverrides env;
  if (const char* dir = std::getenv("APOLLO_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
    env.output_dir = dir;
  }
  if (const char* threads = std::getenv("APOLLO_THREADS"); threads != nullptr && *threads != '\0') {
    char* end = nullptr;
    const long n = std::strtol(threads, &end, 10);
    if (*end != '\0' || n < 1) throw ConfigError("must be a positive integer", "APOLLO_THREADS");
    env.threads = static_cast<std::size_t>(n);
  }
  return env;
}

void save_reports_csv(std::span<const metrics::MetricReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open " + path.string() + " for writing");
  out << metrics::kCsvHeader << '\n';
  for (const auto& r : reports) out << metrics::to_csv_row(r) << '\n';
}

void save_reports_json(std::span<const metrics::MetricReport> reports, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot open " + path.string() + " for writing");
  json arr = json::array();
  for (const auto& r : reports) arr.push_back(metrics::to_json(r));
  out << arr.dump(2) << '\n';
}

}  // namespace apollo::io
