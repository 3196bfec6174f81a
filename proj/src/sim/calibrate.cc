// Copyright 2026 The HybridNMT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sim/calibrate.h"

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "common/errors.h"
#include "common/format.h"
#include "model/params.h"

namespace hnmt {

std::string to_string(CostParam p) {
  switch (p) {
    case CostParam::kComputePerSentence: return "compute";
    case CostParam::kTaskOverhead: return "overhead";
    case CostParam::kTransferPerByte: return "transfer";
    case CostParam::kSyncPerParam: return "sync";
  }
  return "?";
}

CostParam parse_cost_param(const std::string& s) {
  for (CostParam p : {CostParam::kComputePerSentence, CostParam::kTaskOverhead, CostParam::kTransferPerByte,
                      CostParam::kSyncPerParam})
    if (s == to_string(p)) return p;
  throw ConfigError("unknown cost parameter '" + s + "' (expected compute, overhead, transfer or sync)");
}

double get_param(const CostModel& model, CostParam p) {
  switch (p) {
    case CostParam::kComputePerSentence: return model.compute_per_sentence;
    case CostParam::kTaskOverhead: return model.task_overhead;
    case CostParam::kTransferPerByte: return model.transfer_per_byte;
    case CostParam::kSyncPerParam: return model.sync_per_param;
  }
  return 0.0;
}

void set_param(CostModel& model, CostParam p, double value) {
  switch (p) {
    case CostParam::kComputePerSentence: model.compute_per_sentence = value; break;
    case CostParam::kTaskOverhead: model.task_overhead = value; break;
    case CostParam::kTransferPerByte: model.transfer_per_byte = value; break;
    case CostParam::kSyncPerParam: model.sync_per_param = value; break;
  }
}

ModelConfig full_size_config() {
  ModelConfig c;
  c.vocab_size = 32000;
  c.embed_size = 512;
  c.hidden_size = 1024;
  c.depth = 4;
  c.variant = FeedVariant::kInputFeeding;
  return c;
}

std::map<Strategy, double> predict_scaling(const CalibrationSetup& setup, const CostModel& model,
                                           const std::vector<Strategy>& strategies) {
  std::map<Strategy, double> out;
  for (Strategy s : strategies)
    out[s] = simulate_strategy(s, model, setup.config, setup.src_len, setup.tgt_len).scaling_factor;
  return out;
}

namespace {

// Typical magnitude of each parameter, so the optimizer works on O(1) values.
double param_scale(const CalibrationSetup& setup, CostParam p) {
  const CostModel& m = setup.initial;
  const double compute = m.compute_per_sentence > 0.0 ? m.compute_per_sentence : 1.0;
  switch (p) {
    case CostParam::kComputePerSentence: return compute;
    case CostParam::kTaskOverhead: return 64.0 * compute;
    case CostParam::kTransferPerByte:
      return compute / (static_cast<double>(setup.config.hidden_size) * static_cast<double>(m.bytes_per_value));
    case CostParam::kSyncPerParam: {
      CostModel base = m;
      base.task_overhead = 0.0;
      base.transfer_per_byte = 0.0;
      base.sync_per_param = 0.0;
      base.compute_per_sentence = compute;
      const SimReport serial = simulate_strategy(Strategy::kSerial, base, setup.config, setup.src_len, setup.tgt_len);
      return serial.makespan / static_cast<double>(param_count(setup.config).total);
    }
  }
  return 1.0;
}

// Each free parameter is s_i * x_i^2, which keeps it nonnegative.
struct Residuals {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const CalibrationSetup* setup;
  std::vector<Strategy> strategies;
  Eigen::VectorXd target;
  std::vector<double> scale;
  int* evaluations;

  int inputs() const { return static_cast<int>(scale.size()); }
  int values() const { return static_cast<int>(strategies.size()); }

  CostModel model_at(const Eigen::VectorXd& x) const {
    CostModel m = setup->initial;
    for (std::size_t i = 0; i < scale.size(); ++i) set_param(m, setup->free[i], scale[i] * x[i] * x[i]);
    return m;
  }
  Eigen::VectorXd predict(const CostModel& m) const {
    ++*evaluations;
    const auto sf = predict_scaling(*setup, m, strategies);
    Eigen::VectorXd out(strategies.size());
    for (std::size_t i = 0; i < strategies.size(); ++i) out[i] = sf.at(strategies[i]);
    return out;
  }
  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& fvec) const {
    fvec = predict(model_at(x)) - target;
    return 0;
  }
};

// Rank of the target Jacobian with respect to the normalized parameters at
// the starting point, by one-sided differences.
Eigen::Index jacobian_rank(const Residuals& f) {
  const Eigen::Index n = f.inputs();
  CostModel base = f.model_at(Eigen::VectorXd::Ones(n));
  const Eigen::VectorXd y0 = f.predict(base);
  Eigen::MatrixXd jac(f.values(), n);
  const double h = 1e-6;
  for (Eigen::Index i = 0; i < n; ++i) {
    CostModel step = base;
    set_param(step, f.setup->free[i], f.scale[i] * (1.0 + h));
    jac.col(i) = (f.predict(step) - y0) / h;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] <= 0.0) return 0;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > 1e-4 * sv[0]) ++rank;
  return rank;
}

}  // namespace

CalibrationResult calibrate(const std::map<Strategy, double>& targets, const CalibrationSetup& setup) {
  setup.initial.validate();
  if (setup.free.empty()) throw ValueError("calibration needs at least one free parameter");
  for (std::size_t i = 0; i < setup.free.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (setup.free[i] == setup.free[j]) throw ValueError("free parameter listed twice: " + to_string(setup.free[i]));
  if (targets.size() < setup.free.size()) {
    throw ValueError("calibration needs at least as many targets (" + std::to_string(targets.size()) +
                     ") as free parameters (" + std::to_string(setup.free.size()) + ")");
  }

  CalibrationResult result;
  result.targets = targets;
  Residuals f{&setup, {}, Eigen::VectorXd(targets.size()), {}, &result.evaluations};
  for (const auto& [s, sf] : targets) {
    if (!(sf > 0.0) || !std::isfinite(sf)) throw ValueError("target scaling factor of " + to_string(s) + " must be positive");
    f.target[static_cast<Eigen::Index>(f.strategies.size())] = sf;
    f.strategies.push_back(s);
  }
  for (CostParam p : setup.free) f.scale.push_back(param_scale(setup, p));
  if (jacobian_rank(f) < static_cast<Eigen::Index>(setup.free.size()))
    throw ValueError("degenerate fit: the targets do not determine every free parameter");

  const Eigen::Index n = f.inputs();
  Eigen::VectorXd best_x = Eigen::VectorXd::Ones(n);
  double best = std::numeric_limits<double>::infinity();
  for (double start : {1.0, 0.5, 2.0, 0.2, 5.0}) {
    Eigen::VectorXd x = Eigen::VectorXd::Constant(n, start);
    Eigen::NumericalDiff<Residuals> diff(f);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Residuals>> lm(diff);
    lm.parameters.ftol = 1e-14;
    lm.parameters.xtol = 1e-14;
    lm.parameters.maxfev = 400;
    lm.minimize(x);
    Eigen::VectorXd r;
    f(x, r);
    if (r.norm() < best) {
      best = r.norm();
      best_x = x;
    }
    if (best < 1e-10) break;
  }

  result.model = f.model_at(best_x);
  result.fitted = predict_scaling(setup, result.model, f.strategies);
  double sq = 0.0;
  for (const auto& [s, sf] : targets) sq += (result.fitted.at(s) - sf) * (result.fitted.at(s) - sf);
  result.residual = std::sqrt(sq);
  return result;
}

std::string cost_model_to_json(const CostModel& m) {
  // Per-byte and per-parameter costs are tiny; keep every digit.
  auto exact = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::ostringstream out;
  out << "{\"compute_per_sentence\": " << fixed4(m.compute_per_sentence)
      << ", \"task_overhead\": " << fixed4(m.task_overhead) << ", \"transfer_per_byte\": " << exact(m.transfer_per_byte)
      << ", \"sync_per_param\": " << exact(m.sync_per_param) << ", \"backward_factor\": " << fixed4(m.backward_factor)
      << ", \"bytes_per_value\": " << m.bytes_per_value << ", \"part_sizes\": {\"embedding\": "
      << fixed4(m.sizes.embedding) << ", \"lstm_layer\": " << fixed4(m.sizes.lstm_layer)
      << ", \"attention_softmax\": " << fixed4(m.sizes.attention_softmax) << "}, \"batch_caps\": {";
  bool first = true;
  for (const auto& [s, cap] : m.batch_caps) {
    out << (first ? "" : ", ") << "\"" << to_string(s) << "\": " << cap;
    first = false;
  }
  out << "}}";
  return out.str();
}

std::string CalibrationResult::to_json() const {
  auto table = [](const std::map<Strategy, double>& values) {
    std::string s = "{";
    for (const auto& [k, v] : values) s += (s.size() > 1 ? ", \"" : "\"") + to_string(k) + "\": " + fixed4(v);
    return s + "}";
  };
  std::ostringstream out;
  out << "{\"cost_model\": " << cost_model_to_json(model) << ", \"targets\": " << table(targets)
      << ", \"fitted\": " << table(fitted) << ", \"residual\": " << fixed4(residual)
      << ", \"evaluations\": " << evaluations << "}";
  return out.str();
}

}  // namespace hnmt
