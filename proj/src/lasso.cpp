// Copyright 2026 The seld Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "seld/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "json.hpp"
#include "seld/common.hpp"
#include "seld/eval.hpp"

namespace seld::lasso {
namespace {

using json = nlohmann::json;
using features::NegativeKind;

// Gradients within rounding error of the threshold count as inside it, so
// lambda equal to lambda_max yields an exactly zero solution.
inline constexpr double kThresholdSlack = 1e-12;

double SoftThreshold(double u, double t) {
  if (std::abs(u) <= t * (1.0 + kThresholdSlack)) return 0.0;
  return u > 0.0 ? u - t : u + t;
}

double LogisticLoss(double eta, double y01) {
  const double soft = eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
  return soft - y01 * eta;
}

std::vector<std::size_t> AllRows(std::size_t n, std::span<const std::size_t> rows) {
  if (!rows.empty()) return {rows.begin(), rows.end()};
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

// Standardized design and logistic state for one path fit.
class Solver {
 public:
  Solver(const SampleMatrix& x, std::span<const int> y, std::span<const double> w,
         std::span<const std::size_t> rows_in, const FitOptions& options)
      : options_(options) {
    const auto rows = AllRows(x.rows, rows_in);
    n_ = rows.size();
    d_ = x.cols;
    if (n_ == 0) Fail(ErrorCode::kInvalidArgument, "no training samples");
    if (y.size() != x.rows || w.size() != x.rows)
      Fail(ErrorCode::kMismatch, "labels or weights do not match the sample matrix");
    w_.resize(n_);
    y_.resize(n_);
    double wsum = 0.0, pos = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t r = rows[i];
      if (!(w[r] >= 0.0) || !std::isfinite(w[r])) Fail(ErrorCode::kInvalidArgument, "invalid sample weight");
      if (y[r] != 1 && y[r] != -1) Fail(ErrorCode::kInvalidArgument, "labels must be +1 or -1");
      w_[i] = w[r];
      y_[i] = y[r] > 0 ? 1.0 : 0.0;
      wsum += w[r];
      pos += w[r] * y_[i];
    }
    if (!(wsum > 0.0)) Fail(ErrorCode::kInvalidArgument, "sample weights sum to zero");
    w_ /= wsum;
    ybar_ = pos / wsum;
    if (ybar_ <= 0.0 || ybar_ >= 1.0)
      Fail(ErrorCode::kInvalidArgument, "training labels contain a single class");
    mean_.assign(d_, 0.0);
    scale_.assign(d_, 1.0);
    constant_.assign(d_, 0);
    z_.resize(n_, d_);
    for (std::size_t j = 0; j < d_; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double v = x.values[rows[i] * d_ + j];
        if (!std::isfinite(v)) Fail(ErrorCode::kInvalidArgument, "non-finite feature value");
        m += w_[i] * v;
      }
      double var = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        const double dv = x.values[rows[i] * d_ + j] - m;
        var += w_[i] * dv * dv;
      }
      mean_[j] = m;
      const double s = std::sqrt(var);
      if (!(s > 1e-12 * std::max(1.0, std::abs(m)))) {
        constant_[j] = 1;
        z_.col(j).setZero();
        continue;
      }
      scale_[j] = s;
      for (std::size_t i = 0; i < n_; ++i) z_(i, j) = (x.values[rows[i] * d_ + j] - m) / s;
    }
    beta_.assign(d_, 0.0);
    beta0_ = std::log(ybar_ / (1.0 - ybar_));
    eta_ = Eigen::VectorXd::Constant(n_, beta0_);
    null_deviance_ = Deviance();
    grad_ = Gradient();
  }

  double LambdaMax() const {
    double m = 0.0;
    for (std::size_t j = 0; j < d_; ++j)
      if (!constant_[j]) m = std::max(m, std::abs(grad_[j]));
    return m;
  }

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }
  double intercept() const { return beta0_; }
  const std::vector<double>& beta() const { return beta_; }
  double DevianceRatio() const { return 1.0 - Deviance() / null_deviance_; }

  // Solves at `lambda`, warm-started from the current state. `previous` is
  // the lambda of the last solution (for the strong rule).
  void Solve(double lambda, double previous) {
    sweeps_ = 0;
    tolerance_scale_ = std::min(1.0, 100.0 * tolerance_scale_);
    std::vector<char> in_set(d_, 0);
    for (std::size_t j = 0; j < d_; ++j)
      in_set[j] = !constant_[j] &&
                  (beta_[j] != 0.0 || std::abs(grad_[j]) >= 2.0 * lambda - previous);
    for (;;) {
      NewtonLoop(lambda, in_set);
      grad_ = Gradient();
      bool violated = false;
      for (std::size_t j = 0; j < d_; ++j) {
        if (in_set[j] || constant_[j]) continue;
        if (std::abs(grad_[j]) > lambda * (1.0 + kThresholdSlack)) {
          in_set[j] = 1;
          violated = true;
        }
      }
      if (violated) continue;
      // The objective-change rule can stop short of the optimality bound on
      // ill-conditioned data; tighten it until the bound holds.
      if (KktResidual(lambda) <= options_.kkt_tolerance || tolerance_scale_ < 1e-8) break;
      tolerance_scale_ *= 0.01;
    }
  }

 private:
  Eigen::VectorXd Probabilities() const {
    return eta_.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
  }

  std::vector<double> Gradient() const {
    const Eigen::VectorXd u = w_.cwiseProduct(y_ - Probabilities());
    const Eigen::VectorXd g = z_.transpose() * u;
    return {g.data(), g.data() + g.size()};
  }

  double KktResidual(double lambda) const {
    double r = std::abs((w_.cwiseProduct(y_ - Probabilities())).sum());
    for (std::size_t j = 0; j < d_; ++j) {
      if (constant_[j]) continue;
      if (beta_[j] == 0.0) r = std::max(r, std::abs(grad_[j]) - lambda);
      else r = std::max(r, std::abs(grad_[j] - (beta_[j] > 0.0 ? lambda : -lambda)));
    }
    return r;
  }

  double Deviance() const {
    double dev = 0.0;
    for (std::size_t i = 0; i < n_; ++i) dev += w_[i] * LogisticLoss(eta_[i], y_[i]);
    return 2.0 * dev;
  }

  double Objective(double lambda) const {
    double l1 = 0.0;
    for (double b : beta_) l1 += std::abs(b);
    return 0.5 * Deviance() + lambda * l1;
  }

  void RecomputeEta() {
    eta_.setConstant(beta0_);
    for (std::size_t j = 0; j < d_; ++j)
      if (beta_[j] != 0.0) eta_.noalias() += beta_[j] * z_.col(j);
  }

  void CountSweep() {
    if (++sweeps_ > options_.max_sweeps)
      Fail(ErrorCode::kNumeric, "coordinate descent did not converge");
  }

  // Cycles over the nonzero coordinates of `set` until the quadratic model
  // converges. Updates go through the Gram matrix of those coordinates, so
  // each costs O(active) rather than O(samples); `vr` is synced at the end.
  void ActiveLoop(double lambda, const std::vector<std::size_t>& set, const Eigen::VectorXd& v,
                  double vsum, Eigen::VectorXd& vr, const std::vector<double>& xv, double tol) {
    std::vector<std::size_t> active;
    for (std::size_t j : set)
      if (beta_[j] != 0.0 && xv[j] > 0.0) active.push_back(j);
    const auto a = static_cast<Eigen::Index>(active.size());
    Eigen::MatrixXd za(n_, a);
    for (Eigen::Index k = 0; k < a; ++k) za.col(k) = z_.col(active[k]);
    const Eigen::MatrixXd root = za.array().colwise() * v.array().sqrt();
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(a, a);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(root.transpose());
    gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
    const Eigen::VectorXd cross = za.transpose() * v;
    Eigen::VectorXd g = za.transpose() * vr;
    double s = vr.sum();
    Eigen::VectorXd moved = Eigen::VectorXd::Zero(a);
    double moved0 = 0.0;
    auto apply = [&](Eigen::Index k, double delta) {
      beta_[active[k]] += delta;
      moved[k] += delta;
      g.noalias() -= delta * gram.col(k);
      s -= delta * cross[k];
    };
    int wait = 1, next_try = 2;
    for (int pass = 1;; ++pass) {
      CountSweep();
      const double d0 = s / vsum;
      beta0_ += d0;
      moved0 += d0;
      g.noalias() -= d0 * cross;
      s = 0.0;
      double change = vsum * d0 * d0;
      bool stable = true;
      for (Eigen::Index k = 0; k < a; ++k) {
        const std::size_t j = active[k];
        const double h = gram(k, k);
        const double old = beta_[j];
        const double delta = SoftThreshold(g[k] + h * old, lambda) / h - old;
        if (delta == 0.0) continue;
        apply(k, delta);
        stable = stable && (old > 0.0) == (beta_[j] > 0.0) && (old < 0.0) == (beta_[j] < 0.0);
        change = std::max(change, h * delta * delta);
      }
      if (change < tol) break;
      // Clipped steps back off exponentially; each costs a factorization.
      if (stable && pass >= next_try) {
        const bool full = SignedStep(lambda, active, gram, cross, vsum, g, s, apply, moved0);
        wait = full ? 1 : 2 * wait;
        next_try = pass + wait;
      }
    }
    vr.noalias() -= v.cwiseProduct(za * moved + Eigen::VectorXd::Constant(n_, moved0));
  }

  // With the sign pattern of the nonzero coordinates fixed, the quadratic
  // model is minimized by one linear solve over them and the intercept. The
  // step runs up to the first coordinate that would change sign, which is
  // set to zero; the next sweep then confirms convergence. Returns whether
  // the full step was taken.
  template <typename Apply>
  bool SignedStep(double lambda, const std::vector<std::size_t>& active, const Eigen::MatrixXd& gram,
                  const Eigen::VectorXd& cross, double vsum, Eigen::VectorXd& g, double& s,
                  Apply& apply, double& moved0) {
    std::vector<Eigen::Index> nz;
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(active.size()); ++k)
      if (beta_[active[k]] != 0.0) nz.push_back(k);
    const auto m = static_cast<Eigen::Index>(nz.size());
    Eigen::MatrixXd h(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    h(0, 0) = vsum;
    rhs[0] = s;
    for (Eigen::Index r = 0; r < m; ++r) {
      const double sign = beta_[active[nz[r]]] > 0.0 ? 1.0 : -1.0;
      h(r + 1, 0) = h(0, r + 1) = cross[nz[r]];
      rhs[r + 1] = g[nz[r]] - sign * lambda;
      for (Eigen::Index c = 0; c < m; ++c) h(r + 1, c + 1) = gram(nz[r], nz[c]);
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) return false;
    Eigen::VectorXd step = llt.solve(rhs);
    if (!step.allFinite() || (h * step - rhs).norm() > 1e-10 * std::max(1.0, rhs.norm())) return false;
    double t = 1.0;
    Eigen::Index hit = -1;
    for (Eigen::Index r = 0; r < m; ++r) {
      const double b = beta_[active[nz[r]]];
      if ((b > 0.0 && b + step[r + 1] <= 0.0) || (b < 0.0 && b + step[r + 1] >= 0.0)) {
        const double tr = -b / step[r + 1];
        if (tr < t) {
          t = tr;
          hit = r;
        }
      }
    }
    step *= t;
    if (hit >= 0) step[hit + 1] = -beta_[active[nz[hit]]];
    beta0_ += step[0];
    moved0 += step[0];
    g.noalias() -= step[0] * cross;
    s -= step[0] * vsum;
    for (Eigen::Index r = 0; r < m; ++r) apply(nz[r], step[r + 1]);
    return hit < 0;
  }

  // Proximal Newton: quadratic approximation of the loss, solved by
  // coordinate descent, with step halving if the objective does not drop.
  void NewtonLoop(double lambda, const std::vector<char>& in_set) {
    std::vector<std::size_t> set;
    for (std::size_t j = 0; j < d_; ++j)
      if (in_set[j]) set.push_back(j);
    for (int outer = 0; outer < 500; ++outer) {
      const double obj_old = Objective(lambda);
      const std::vector<double> beta_old = beta_;
      const double beta0_old = beta0_;
      const Eigen::VectorXd p = Probabilities();
      Eigen::VectorXd v(n_);
      for (std::size_t i = 0; i < n_; ++i) {
        const double pi = std::clamp(p[i], 1e-5, 1.0 - 1e-5);
        v[i] = w_[i] * pi * (1.0 - pi);
      }
      const double vsum = v.sum();
      Eigen::VectorXd vr = w_.cwiseProduct(y_ - p);
      std::vector<double> xv(d_, -1.0);
      auto update = [&](std::size_t j) {
        if (xv[j] < 0.0) xv[j] = v.dot(z_.col(j).cwiseAbs2());
        if (xv[j] <= 0.0) return 0.0;
        const double g = z_.col(j).dot(vr);
        const double nb = SoftThreshold(g + xv[j] * beta_[j], lambda) / xv[j];
        const double delta = nb - beta_[j];
        if (delta != 0.0) {
          beta_[j] = nb;
          vr.noalias() -= delta * v.cwiseProduct(z_.col(j));
        }
        return xv[j] * delta * delta;
      };
      auto intercept = [&]() {
        const double delta = vr.sum() / vsum;
        beta0_ += delta;
        vr.noalias() -= delta * v;
        return vsum * delta * delta;
      };
      const double tol = tolerance_scale_ * options_.tolerance * null_deviance_;
      for (;;) {
        CountSweep();
        double change = intercept();
        for (std::size_t j : set) change = std::max(change, update(j));
        if (change < tol) break;
        ActiveLoop(lambda, set, v, vsum, vr, xv, tol);
      }
      const std::vector<double> beta_new = beta_;
      const double beta0_new = beta0_;
      RecomputeEta();
      double step = 1.0;
      for (int halving = 0; Objective(lambda) > obj_old + 1e-13 * std::abs(obj_old) && halving < 40;
           ++halving) {
        step *= 0.5;
        for (std::size_t j = 0; j < d_; ++j) beta_[j] = beta_old[j] + step * (beta_new[j] - beta_old[j]);
        beta0_ = beta0_old + step * (beta0_new - beta0_old);
        RecomputeEta();
      }
      double moved = vsum * (beta0_ - beta0_old) * (beta0_ - beta0_old);
      for (std::size_t j : set) {
        const double dj = beta_[j] - beta_old[j];
        if (dj != 0.0) moved = std::max(moved, xv[j] * dj * dj);
      }
      if (moved < tol) return;
    }
  }

  FitOptions options_;
  std::size_t n_ = 0, d_ = 0;
  Eigen::VectorXd w_, y_, eta_;
  Eigen::MatrixXd z_;
  double ybar_ = 0.0;
  std::vector<double> mean_, scale_;
  std::vector<char> constant_;
  std::vector<double> beta_;
  double beta0_ = 0.0;
  double null_deviance_ = 0.0;
  std::vector<double> grad_;
  std::size_t sweeps_ = 0;
  double tolerance_scale_ = 1.0;
};

}  // namespace

std::string_view KindName(ModelKind kind) {
  return kind == ModelKind::kFullstream ? "fullstream" : "segregated";
}

ModelKind ParseKind(std::string_view name) {
  if (name == "fullstream") return ModelKind::kFullstream;
  if (name == "segregated") return ModelKind::kSegregated;
  Fail(ErrorCode::kConfig, "unknown model kind: " + std::string(name));
}

void SampleMatrix::AppendRow(std::span<const float> row) {
  if (rows == 0 && cols == 0) cols = row.size();
  if (row.size() != cols) Fail(ErrorCode::kMismatch, "sample row has the wrong dimension");
  values.insert(values.end(), row.begin(), row.end());
  ++rows;
}

double DetectionModel::Margin(std::span<const float> x) const {
  if (x.size() != weights.size()) Fail(ErrorCode::kMismatch, "feature vector does not match the model layout");
  double m = intercept;
  for (std::size_t j = 0; j < weights.size(); ++j)
    if (weights[j] != 0.0) m += weights[j] * (x[j] - mean[j]) / scale[j];
  return m;
}

std::size_t DetectionModel::NonZero() const {
  return static_cast<std::size_t>(std::count_if(weights.begin(), weights.end(), [](double v) { return v != 0.0; }));
}

std::vector<double> DetectionModel::RawWeights() const {
  std::vector<double> out(weights.size());
  for (std::size_t j = 0; j < weights.size(); ++j) out[j] = weights[j] / scale[j];
  return out;
}

double DetectionModel::RawIntercept() const {
  double b = intercept;
  for (std::size_t j = 0; j < weights.size(); ++j) b -= weights[j] * mean[j] / scale[j];
  return b;
}

std::vector<double> ComputeSampleWeights(std::span<const int> labels,
                                         std::span<const NegativeKind> kinds,
                                         std::span<const int> source_counts, ModelKind kind) {
  const std::size_t n = labels.size();
  if (kinds.size() != n || source_counts.size() != n)
    Fail(ErrorCode::kMismatch, "weight inputs differ in length");
  // Category per sample: 0 positive, 1 pp negative, 2 npp negative (or any
  // negative for fullstream samples).
  std::vector<int> category(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] > 0) category[i] = 0;
    else if (kind == ModelKind::kFullstream) category[i] = 1;
    else if (kinds[i] == NegativeKind::kPresentPositive) category[i] = 1;
    else if (kinds[i] == NegativeKind::kNonPresentPositive) category[i] = 2;
    else Fail(ErrorCode::kInvalidArgument, "segregated negative without a negative kind");
  }
  const std::vector<double> share = kind == ModelKind::kFullstream
                                        ? std::vector<double>{0.5, 0.5}
                                        : std::vector<double>{0.5, 0.25, 0.25};
  static const char* kNames[] = {"positive", "pp negative", "npp negative"};
  std::vector<std::map<int, std::size_t>> groups(share.size());
  for (std::size_t i = 0; i < n; ++i) ++groups[category[i]][source_counts[i]];
  for (std::size_t c = 0; c < share.size(); ++c)
    if (groups[c].empty())
      Fail(ErrorCode::kInvalidArgument, std::string("empty weight group: ") +
                                            (kind == ModelKind::kFullstream && c == 1 ? "negative" : kNames[c]));
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = groups[category[i]];
    w[i] = share[category[i]] / g.size() / g.at(source_counts[i]) * n;
  }
  return w;
}

double LambdaMax(const SampleMatrix& x, std::span<const int> y, std::span<const double> w,
                 std::span<const std::size_t> rows) {
  Solver s(x, y, w, rows, FitOptions{});
  return s.LambdaMax();
}

std::vector<double> LambdaGrid(double lambda_max, std::size_t count, double ratio) {
  if (count == 0 || !(lambda_max > 0.0) || !(ratio > 0.0 && ratio < 1.0))
    Fail(ErrorCode::kInvalidArgument, "invalid lambda grid parameters");
  std::vector<double> g(count);
  for (std::size_t k = 0; k < count; ++k)
    g[k] = count == 1 ? lambda_max
                      : lambda_max * std::pow(ratio, static_cast<double>(k) / (count - 1));
  return g;
}

LassoPath FitLassoPath(const SampleMatrix& x, std::span<const int> y, std::span<const double> w,
                       std::span<const double> lambdas, const FitOptions& options,
                       std::span<const std::size_t> rows) {
  if (lambdas.empty()) Fail(ErrorCode::kInvalidArgument, "empty lambda list");
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (!(lambdas[k] >= 0.0)) Fail(ErrorCode::kInvalidArgument, "lambdas must be nonnegative");
    if (k > 0 && !(lambdas[k] < lambdas[k - 1]))
      Fail(ErrorCode::kInvalidArgument, "lambdas must be strictly descending");
  }
  Solver solver(x, y, w, rows, options);
  LassoPath path;
  path.mean = solver.mean();
  path.scale = solver.scale();
  path.lambda_max = solver.LambdaMax();
  double previous = std::max(path.lambda_max, lambdas[0]);
  double last_ratio = 0.0;
  bool stopped = false;
  for (double lambda : lambdas) {
    if (stopped) {
      PathPoint copy = path.points.back();
      copy.lambda = lambda;
      copy.fitted = false;
      path.points.push_back(copy);
      continue;
    }
    solver.Solve(lambda, previous);
    previous = lambda;
    PathPoint pt;
    pt.lambda = lambda;
    pt.intercept = solver.intercept();
    pt.weights = solver.beta();
    pt.deviance_ratio = solver.DevianceRatio();
    if (options.early_stop && path.points.size() >= 2 &&
        (pt.deviance_ratio >= 0.999 || pt.deviance_ratio - last_ratio < 1e-5 * pt.deviance_ratio))
      stopped = true;
    last_ratio = pt.deviance_ratio;
    path.points.push_back(std::move(pt));
  }
  return path;
}

DetectionModel ModelFromPath(const LassoPath& path, std::size_t index) {
  const PathPoint& pt = path.points.at(index);
  DetectionModel m;
  m.lambda = pt.lambda;
  m.intercept = pt.intercept;
  m.weights = pt.weights;
  m.mean = path.mean;
  m.scale = path.scale;
  return m;
}

CvPlan BuildCvPlan(std::span<const std::string> sample_class,
                   std::span<const std::string> sample_file, std::size_t folds,
                   std::uint64_t seed) {
  if (folds < 2) Fail(ErrorCode::kInvalidArgument, "need at least two folds");
  if (sample_class.size() != sample_file.size())
    Fail(ErrorCode::kMismatch, "sample classes and files differ in length");
  std::map<std::string, std::vector<std::string>> files;  // class -> distinct files
  std::map<std::string, std::string> file_class;
  for (std::size_t i = 0; i < sample_file.size(); ++i) {
    auto [it, inserted] = file_class.emplace(sample_file[i], sample_class[i]);
    if (inserted) files[sample_class[i]].push_back(sample_file[i]);
    else if (it->second != sample_class[i])
      Fail(ErrorCode::kInvalidArgument, "file " + sample_file[i] + " appears under two classes");
  }
  std::map<std::string, int> file_fold;
  std::size_t offset = 0;
  for (auto& [cls, list] : files) {
    std::sort(list.begin(), list.end());
    std::mt19937_64 rng(DeriveSeed(seed, Fnv1a64(cls)));
    std::shuffle(list.begin(), list.end(), rng);
    // Rotating the starting fold per class keeps total fold sizes balanced.
    for (std::size_t k = 0; k < list.size(); ++k)
      file_fold[list[k]] = static_cast<int>((k + offset) % folds);
    offset += list.size();
  }
  CvPlan plan;
  plan.folds = folds;
  for (const auto& f : sample_file) plan.sample_fold.push_back(file_fold.at(f));
  return plan;
}

double ScorePredictions(std::span<const int> y, std::span<const int> prediction,
                        std::span<const double> w, std::span<const NegativeKind> kinds,
                        CvMetric metric) {
  if (metric == CvMetric::kBac) {
    eval::DetectionCounts c;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] > 0) (prediction[i] > 0 ? c.tp : c.fn) += w[i];
      else (prediction[i] > 0 ? c.fp : c.tn) += w[i];
    }
    auto m = eval::ComputeDetection(c);
    if (!m.bac) Fail(ErrorCode::kNumeric, "balanced accuracy undefined on a fold");
    return *m.bac;
  }
  eval::StreamConfusion c;
  for (std::size_t i = 0; i < y.size(); ++i) c.Add(y[i], prediction[i], kinds[i], w[i]);
  auto m = eval::ComputeStreamwise(c);
  if (m.bac_sw) return *m.bac_sw;
  // A fold without pp negatives scores on the remaining terms.
  if (m.sens && m.spec_npp) return 0.5 * *m.sens + 0.5 * *m.spec_npp;
  Fail(ErrorCode::kNumeric, "stream-wise balanced accuracy undefined on a fold");
}

CvResult SelectLambdaCv(const SampleMatrix& x, std::span<const int> y, std::span<const double> w,
                        std::span<const NegativeKind> kinds, const CvPlan& plan,
                        std::span<const double> lambdas, CvMetric metric,
                        const FitOptions& options, int threads) {
  if (plan.sample_fold.size() != x.rows) Fail(ErrorCode::kMismatch, "CV plan does not match the samples");
  if (lambdas.empty()) Fail(ErrorCode::kInvalidArgument, "empty lambda list");
  std::vector<std::vector<double>> scores(plan.folds);
  ParallelFor(plan.folds, threads, [&](std::size_t f) {
    std::vector<std::size_t> train, test;
    bool train_pos = false, train_neg = false, test_pos = false, test_neg = false;
    for (std::size_t i = 0; i < x.rows; ++i) {
      if (plan.sample_fold[i] == static_cast<int>(f)) {
        test.push_back(i);
        (y[i] > 0 ? test_pos : test_neg) = true;
      } else {
        train.push_back(i);
        (y[i] > 0 ? train_pos : train_neg) = true;
      }
    }
    if (!(train_pos && train_neg && test_pos && test_neg))
      Fail(ErrorCode::kNumeric, "cross-validation fold " + std::to_string(f) + " has one class only");
    LassoPath path = FitLassoPath(x, y, w, lambdas, options, train);
    std::vector<int> ty, tp;
    std::vector<double> tw;
    std::vector<NegativeKind> tk;
    for (std::size_t i : test) {
      ty.push_back(y[i]);
      tw.push_back(w[i]);
      tk.push_back(kinds.empty() ? NegativeKind::kNone : kinds[i]);
    }
    for (std::size_t k = 0; k < path.points.size(); ++k) {
      DetectionModel m = ModelFromPath(path, k);
      tp.clear();
      for (std::size_t i : test) tp.push_back(m.Predict(x.Row(i)));
      scores[f].push_back(ScorePredictions(ty, tp, tw, tk, metric));
    }
  });
  CvResult r;
  r.lambdas.assign(lambdas.begin(), lambdas.end());
  r.mean_score.assign(lambdas.size(), 0.0);
  for (const auto& s : scores)
    for (std::size_t k = 0; k < s.size(); ++k) r.mean_score[k] += s[k] / plan.folds;
  r.best_index = static_cast<std::size_t>(
      std::max_element(r.mean_score.begin(), r.mean_score.end()) - r.mean_score.begin());
  LassoPath full = FitLassoPath(x, y, w, lambdas.first(r.best_index + 1), options);
  r.model = ModelFromPath(full, r.best_index);
  r.model.cv_lambdas = r.lambdas;
  r.model.cv_scores = r.mean_score;
  return r;
}

std::vector<std::size_t> SubsampleByFile(std::span<const std::string> sample_file,
                                         std::size_t cap, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_file;
  for (std::size_t i = 0; i < sample_file.size(); ++i) by_file[sample_file[i]].push_back(i);
  if (sample_file.size() <= cap) return AllRows(sample_file.size(), {});
  // Water-filling: the largest per-file quota q with sum(min(n_f, q)) <= cap.
  std::size_t lo = 0, hi = sample_file.size();
  auto total = [&](std::size_t q) {
    std::size_t t = 0;
    for (const auto& [f, rows] : by_file) t += std::min(rows.size(), q);
    return t;
  };
  while (lo < hi) {
    std::size_t mid = (lo + hi + 1) / 2;
    if (total(mid) <= cap) lo = mid;
    else hi = mid - 1;
  }
  std::vector<std::size_t> out;
  for (auto& [f, rows] : by_file) {
    std::mt19937_64 rng(DeriveSeed(seed, Fnv1a64(f)));
    std::shuffle(rows.begin(), rows.end(), rng);
    out.insert(out.end(), rows.begin(), rows.begin() + std::min(rows.size(), lo));
  }
  std::sort(out.begin(), out.end());
  return out;
}

void SaveModel(const std::filesystem::path& path, const DetectionModel& m) {
  json j;
  j["format"] = "seld-detection-model/1";
  j["target_class"] = m.target_class;
  j["kind"] = KindName(m.kind);
  j["lambda"] = m.lambda;
  j["intercept"] = m.intercept;
  j["dimension"] = m.weights.size();
  j["layout_hash"] = m.layout_hash;
  j["config_hash"] = m.config_hash;
  j["mean"] = m.mean;
  j["scale"] = m.scale;
  json sparse = json::array();
  for (std::size_t k = 0; k < m.weights.size(); ++k)
    if (m.weights[k] != 0.0) sparse.push_back({k, m.weights[k]});
  j["weights"] = sparse;
  j["cv"] = {{"lambdas", m.cv_lambdas}, {"scores", m.cv_scores}};
  std::ofstream f(path);
  if (!f) Fail(ErrorCode::kIo, "cannot write detection model " + path.string());
  f << j.dump(1) << '\n';
}

DetectionModel LoadModel(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) Fail(ErrorCode::kIo, "cannot open detection model " + path.string());
  DetectionModel m;
  try {
    json j;
    f >> j;
    m.target_class = j.at("target_class").get<std::string>();
    m.kind = ParseKind(j.at("kind").get<std::string>());
    m.lambda = j.at("lambda").get<double>();
    m.intercept = j.at("intercept").get<double>();
    const auto dim = j.at("dimension").get<std::size_t>();
    m.layout_hash = j.value("layout_hash", std::string());
    m.config_hash = j.value("config_hash", std::string());
    m.mean = j.at("mean").get<std::vector<double>>();
    m.scale = j.at("scale").get<std::vector<double>>();
    if (m.mean.size() != dim || m.scale.size() != dim)
      Fail(ErrorCode::kConfig, "standardization does not match the model dimension");
    m.weights.assign(dim, 0.0);
    for (const auto& e : j.at("weights")) {
      const auto k = e.at(0).get<std::size_t>();
      if (k >= dim) Fail(ErrorCode::kConfig, "weight index out of range");
      m.weights[k] = e.at(1).get<double>();
    }
    if (j.contains("cv")) {
      m.cv_lambdas = j["cv"].value("lambdas", std::vector<double>{});
      m.cv_scores = j["cv"].value("scores", std::vector<double>{});
    }
  } catch (const json::exception& e) {
    Fail(ErrorCode::kConfig, "malformed detection model " + path.string() + ": " + e.what());
  }
  return m;
}

}  // namespace seld::lasso
