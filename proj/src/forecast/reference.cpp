#include "apollo/forecast/reference.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "apollo/error.hpp"

namespace apollo::forecast {
namespace {

std::vector<double> context_values(const ForecastRequest& req) {
  std::vector<double> v;
  v.reserve(req.context.tokens.size());
  for (Token t : req.context.tokens) v.push_back(codec::token_value(t, req.context.config.quant_factor));
  return v;
}

Token to_token(double v, std::uint32_t quant_factor) {
  if (!std::isfinite(v)) v = 0.5;
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<Token>(std::lround(clamped * static_cast<double>(quant_factor)));
}

class RepeatGenerator final : public FrameGenerator {
 public:
  explicit RepeatGenerator(std::vector<Token> cycle) : cycle_(std::move(cycle)) {}

  void next(std::span<Token> frame) override {
    std::fill(frame.begin(), frame.end(), cycle_[pos_ % cycle_.size()]);
    ++pos_;
  }

 private:
  std::vector<Token> cycle_;
  std::size_t pos_ = 0;
};

class PersistencePredictor final : public Predictor {
 public:
  std::string describe() const override { return "persistence"; }

  std::unique_ptr<FrameGenerator> start(const ForecastRequest& req) const override {
    validate(req);
    return std::make_unique<RepeatGenerator>(std::vector<Token>{req.context.tokens.back()});
  }
};

class SeasonalNaivePredictor final : public Predictor {
 public:
  explicit SeasonalNaivePredictor(std::size_t period) : period_(period) {}

  std::string describe() const override { return "seasonal_naive(" + std::to_string(period_) + ")"; }

  std::unique_ptr<FrameGenerator> start(const ForecastRequest& req) const override {
    validate(req);
    const auto& ctx = req.context.tokens;
    if (ctx.size() < period_) {
      throw InputError("seasonal_naive needs at least " + std::to_string(period_) +
                       " context tokens, got " + std::to_string(ctx.size()));
    }
    return std::make_unique<RepeatGenerator>(
        std::vector<Token>(ctx.end() - static_cast<std::ptrdiff_t>(period_), ctx.end()));
  }

 private:
  std::size_t period_;
};

class ArGenerator final : public FrameGenerator {
 public:
  ArGenerator(ArModel model, const std::vector<double>& context, const ForecastRequest& req)
      : model_(std::move(model)), quant_factor_(req.context.config.quant_factor) {
    const std::size_t p = model_.coeffs.size();
    std::vector<double> tail(context.end() - static_cast<std::ptrdiff_t>(p), context.end());
    for (std::size_t s = 0; s < req.num_samples; ++s) {
      histories_.push_back(tail);
      // SplitMix-style mixing keeps neighbouring path seeds uncorrelated.
      std::uint64_t z = req.seed + 0x9E3779B97F4A7C15ULL * (s + 1);
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      rngs_.emplace_back(z ^ (z >> 31));
    }
  }

  void next(std::span<Token> frame) override {
    std::normal_distribution<double> innovation(0.0, 1.0);
    for (std::size_t s = 0; s < frame.size(); ++s) {
      auto& h = histories_[s];
      double v = model_.predict_next(h) + model_.sigma * innovation(rngs_[s]);
      v = std::clamp(v, 0.0, 1.0);
      if (!h.empty()) {
        std::rotate(h.begin(), h.begin() + 1, h.end());
        h.back() = v;
      }
      frame[s] = to_token(v, quant_factor_);
    }
  }

 private:
  ArModel model_;
  std::uint32_t quant_factor_;
  std::vector<std::vector<double>> histories_;
  std::vector<std::mt19937_64> rngs_;
};

class ArPredictor final : public Predictor {
 public:
  explicit ArPredictor(std::size_t order) : order_(order) {}

  std::string describe() const override { return "ar(" + std::to_string(order_) + ")"; }

  std::unique_ptr<FrameGenerator> start(const ForecastRequest& req) const override {
    validate(req);
    const auto values = context_values(req);
    return std::make_unique<ArGenerator>(fit_ar(values, order_), values, req);
  }

 private:
  std::size_t order_;
};

}  // namespace

std::string_view to_string(ReferenceKind kind) {
  switch (kind) {
    case ReferenceKind::persistence: return "persistence";
    case ReferenceKind::seasonal_naive: return "seasonal_naive";
    case ReferenceKind::ar: return "ar";
  }
  return "unknown";
}

ReferenceKind parse_reference_kind(std::string_view name) {
  if (name == "persistence") return ReferenceKind::persistence;
  if (name == "seasonal_naive") return ReferenceKind::seasonal_naive;
  if (name == "ar") return ReferenceKind::ar;
  throw ConfigError("unknown predictor kind '" + std::string(name) + "'", "kind");
}

double ArModel::predict_next(std::span<const double> history) const {
  double v = intercept;
  const std::size_t n = history.size();
  for (std::size_t i = 0; i < coeffs.size() && i < n; ++i) v += coeffs[i] * history[n - 1 - i];
  return v;
}

ArModel fit_ar(std::span<const double> series, std::size_t order) {
  if (order < 1) throw ConfigError("AR order must be >= 1", "ar_order");
  const std::size_t n = series.size();
  if (n < 2 * order + 2) {
    throw InputError("AR(" + std::to_string(order) + ") needs at least " +
                     std::to_string(2 * order + 2) + " observations, got " + std::to_string(n));
  }
  const auto rows = static_cast<Eigen::Index>(n - order);
  const auto cols = static_cast<Eigen::Index>(order + 1);
  Eigen::MatrixXd design(rows, cols);
  Eigen::VectorXd target(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const std::size_t t = order + static_cast<std::size_t>(r);
    design(r, 0) = 1.0;
    for (std::size_t i = 0; i < order; ++i) design(r, static_cast<Eigen::Index>(i + 1)) = series[t - 1 - i];
    target(r) = series[t];
  }
  const Eigen::VectorXd beta = design.colPivHouseholderQr().solve(target);
  const double rss = (design * beta - target).squaredNorm();

  ArModel m;
  m.intercept = beta(0);
  m.coeffs.assign(beta.data() + 1, beta.data() + beta.size());
  m.sigma = std::sqrt(rss / static_cast<double>(rows - cols));
  return m;
}

PredictorHandle make_reference_predictor(ReferenceKind kind, const ReferenceParams& params,
                                         Role role) {
  std::shared_ptr<const Predictor> model;
  switch (kind) {
    case ReferenceKind::persistence:
      model = std::make_shared<PersistencePredictor>();
      break;
    case ReferenceKind::seasonal_naive:
      if (params.season_length < 1) throw ConfigError("must be >= 1", "season_length");
      model = std::make_shared<SeasonalNaivePredictor>(params.season_length);
      break;
    case ReferenceKind::ar:
      if (params.ar_order < 1) throw ConfigError("must be >= 1", "ar_order");
      model = std::make_shared<ArPredictor>(params.ar_order);
      break;
  }
  PredictorHandle h;
  h.model_id = model->describe();
  h.role = role;
  h.model = std::move(model);
  return h;
}

}  // namespace apollo::forecast
