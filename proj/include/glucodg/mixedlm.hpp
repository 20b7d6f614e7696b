// Copyright (c) 2026 The glucodg Authors. All rights reserved.
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
//
// Random-intercept linear mixed model
//
//   y = X beta + Z gamma + eps,   gamma_g ~ N(0, sigma2_group),
//                                 eps     ~ N(0, sigma2_resid)
//
// fitted by REML (or ML). With lambda = sigma2_group / sigma2_resid the
// covariance is sigma2_resid * H, H = I + lambda Z Z'. H is block diagonal
// with per-group blocks I + lambda 1 1', whose inverse and determinant are
// closed-form (Woodbury), so each candidate lambda costs O(n p^2) through
// per-group sufficient statistics. beta is profiled out by GLS and the
// remaining one-dimensional criterion is minimized over log(lambda) by
// Brent's method. Fixed-effect inference is Wald: se from (X' V^-1 X)^-1,
// p = 2 (1 - Phi(|beta/se|)).
//
// Subjects enter as the grouping factor; sweep frequencies enter as fixed
// effects, and the features whose coefficients clear p < threshold form the
// selected set.

#ifndef GLUCODG_MIXEDLM_HPP_
#define GLUCODG_MIXEDLM_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "glucodg/core.hpp"

namespace glucodg {

struct DesignMatrices {
  Eigen::VectorXd y;               // response (normalized glucose)
  Eigen::MatrixXd X;               // intercept column plus predictors
  std::vector<int> group;          // 0-based group index per row
  std::vector<std::string> column_names;
  std::vector<std::string> group_ids;
};

struct MixedLMOptions {
  bool reml = true;                // false = maximum likelihood
  double lambda_min = 1e-8;        // search bounds for sigma2_group/sigma2_resid
  double lambda_max = 1e8;
  double tol = 1e-9;               // absolute tolerance on log(lambda)
  int max_iter = 200;
};

struct MixedLMFit {
  std::vector<std::string> column_names;
  Eigen::VectorXd beta;
  Eigen::VectorXd se;
  Eigen::VectorXd z;
  Eigen::VectorXd p;
  Eigen::VectorXd ci_low;          // beta - 1.96 se
  Eigen::VectorXd ci_high;         // beta + 1.96 se
  double sigma2_resid = 0.0;
  double sigma2_group = 0.0;
  double lambda = 0.0;
  double loglik = 0.0;
  bool converged = false;
  bool boundary = false;           // variance ratio pinned at a search bound
  std::size_t n_obs = 0;
  std::size_t n_groups = 0;
};

inline double wald_p_from_z(double z) {
  return std::erfc(std::abs(z) / std::numbers::sqrt2);
}

namespace detail {

struct GroupStats {
  Eigen::MatrixXd sxx;   // X_g' X_g
  Eigen::VectorXd sx;    // X_g' 1
  Eigen::VectorXd sxy;   // X_g' y_g
  double sy = 0.0;       // 1' y_g
  double syy = 0.0;      // y_g' y_g
  std::size_t n = 0;
};

struct ProfiledFit {
  Eigen::MatrixXd A;     // X' H^-1 X
  Eigen::VectorXd beta;
  double rss = 0.0;      // r' H^-1 r,  r = y - X beta
  double logdet_a = 0.0;
  double logdet_h = 0.0;
  double criterion = 0.0;
};

class MixedLMWork {
 public:
  MixedLMWork(const DesignMatrices& d) : p_(static_cast<std::size_t>(d.X.cols())) {
    const std::size_t n = static_cast<std::size_t>(d.X.rows());
    int max_g = -1;
    for (int g : d.group) max_g = std::max(max_g, g);
    groups_.resize(static_cast<std::size_t>(max_g + 1));
    for (auto& gs : groups_) {
      gs.sxx = Eigen::MatrixXd::Zero(static_cast<long>(p_), static_cast<long>(p_));
      gs.sx = Eigen::VectorXd::Zero(static_cast<long>(p_));
      gs.sxy = Eigen::VectorXd::Zero(static_cast<long>(p_));
    }
    for (std::size_t i = 0; i < n; ++i) {
      GroupStats& gs = groups_[static_cast<std::size_t>(d.group[i])];
      const auto xi = d.X.row(static_cast<long>(i)).transpose();
      gs.sxx.noalias() += xi * xi.transpose();
      gs.sx += xi;
      gs.sxy += xi * d.y[static_cast<long>(i)];
      gs.sy += d.y[static_cast<long>(i)];
      gs.syy += d.y[static_cast<long>(i)] * d.y[static_cast<long>(i)];
      ++gs.n;
    }
    n_ = n;
  }

  std::size_t n() const { return n_; }
  std::size_t p() const { return p_; }
  std::size_t n_groups() const { return groups_.size(); }

  // GLS at a fixed variance ratio; lambda = 0 degenerates to OLS exactly.
  ProfiledFit profile(double lambda, bool reml) const {
    ProfiledFit out;
    out.A = Eigen::MatrixXd::Zero(static_cast<long>(p_), static_cast<long>(p_));
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<long>(p_));
    double q = 0.0;
    out.logdet_h = 0.0;
    for (const auto& gs : groups_) {
      const double ng = static_cast<double>(gs.n);
      const double c = lambda / (1.0 + lambda * ng);
      out.A.noalias() += gs.sxx - c * (gs.sx * gs.sx.transpose());
      b += gs.sxy - c * gs.sx * gs.sy;
      q += gs.syy - c * gs.sy * gs.sy;
      out.logdet_h += std::log1p(lambda * ng);
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(out.A);
    require(ldlt.info() == Eigen::Success, "NonConvergence",
            "GLS normal equations could not be factorized");
    out.beta = ldlt.solve(b);
    out.rss = q - b.dot(out.beta);
    require(std::isfinite(out.rss), "NonConvergence", "non-finite residual sum");
    require(out.rss > 0.0, "NonConvergence",
            "residual variance vanished (perfect fit); model is degenerate");
    out.logdet_a = 0.0;
    const auto& dvec = ldlt.vectorD();
    for (long i = 0; i < dvec.size(); ++i) {
      require(dvec[i] > 0.0, "NonConvergence", "normal equations not positive definite");
      out.logdet_a += std::log(dvec[i]);
    }
    const double dof = static_cast<double>(n_) - (reml ? static_cast<double>(p_) : 0.0);
    out.criterion = dof * std::log(out.rss) + out.logdet_h +
                    (reml ? out.logdet_a : 0.0);
    return out;
  }

 private:
  std::vector<GroupStats> groups_;
  std::size_t n_ = 0;
  std::size_t p_ = 0;
};

// Brent's bounded scalar minimizer (golden section with parabolic steps).
template <typename F>
inline std::pair<double, int> brent_minimize(F f, double a, double b,
                                             double tol, int max_iter) {
  constexpr double kGolden = 0.3819660112501051;  // (3 - sqrt(5)) / 2
  double x = a + kGolden * (b - a);
  double w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  for (int iter = 0; iter < max_iter; ++iter) {
    const double m = 0.5 * (a + b);
    const double tol1 = tol;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) return {x, iter};
    double step;
    bool parabolic_ok = false;
    if (std::abs(e) > tol1) {
      const double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double pnum = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) pnum = -pnum;
      q = std::abs(q);
      const double e_prev = e;
      e = d;
      if (std::abs(pnum) < std::abs(0.5 * q * e_prev) && pnum > q * (a - x) &&
          pnum < q * (b - x)) {
        d = pnum / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (m > x) ? tol1 : -tol1;
        parabolic_ok = true;
      }
    }
    if (!parabolic_ok) {
      e = (x < m) ? b - x : a - x;
      d = kGolden * e;
    }
    step = (std::abs(d) >= tol1) ? d : (d > 0.0 ? tol1 : -tol1);
    const double u = x + step;
    const double fu = f(u);
    if (fu <= fx) {
      if (u < x) b = x; else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u; else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  return {x, max_iter};
}

}  // namespace detail

inline void validate_design(const DesignMatrices& d) {
  const std::size_t n = static_cast<std::size_t>(d.X.rows());
  const std::size_t p = static_cast<std::size_t>(d.X.cols());
  require(n == static_cast<std::size_t>(d.y.size()) && n == d.group.size(),
          "LengthMismatch", "y, X and group index must agree on row count");
  require(p >= 1, "InvalidConfig", "design matrix has no columns");
  require(n > p + 2, "TooFewSamples",
          "need more than p + 2 = " + std::to_string(p + 2) + " rows, got " +
              std::to_string(n));
  int max_g = -1;
  for (int g : d.group) {
    require(g >= 0, "OutOfRange", "negative group index");
    max_g = std::max(max_g, g);
  }
  require(max_g >= 1, "TooFewGroups", "random intercepts need at least two groups");
  std::vector<std::size_t> counts(static_cast<std::size_t>(max_g + 1), 0);
  for (int g : d.group) ++counts[static_cast<std::size_t>(g)];
  for (std::size_t g = 0; g < counts.size(); ++g)
    require(counts[g] > 0, "EmptyDataset",
            "group " + std::to_string(g) + " has no rows");
  if (!d.column_names.empty())
    require(d.column_names.size() == p, "LengthMismatch",
            "column_names does not match design width");
}

// Rejects designs whose X'X condition number exceeds 1e10; the message names
// the columns a pivoted QR puts last, which is where the collinearity sits.
inline void check_design_conditioning(const DesignMatrices& d) {
  const Eigen::MatrixXd xtx = d.X.transpose() * d.X;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(xtx);
  require(eig.info() == Eigen::Success, "NonConvergence",
          "eigendecomposition of X'X failed");
  const double ev_min = eig.eigenvalues().minCoeff();
  const double ev_max = eig.eigenvalues().maxCoeff();
  if (ev_min > 0.0 && ev_max / ev_min <= 1e10) return;

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(d.X);
  const long rank = qr.rank();
  const auto perm = qr.colsPermutation().indices();
  std::string cols;
  const long first_bad = std::min<long>(rank, d.X.cols() - 1);
  for (long i = first_bad; i < d.X.cols(); ++i) {
    if (!cols.empty()) cols += ", ";
    const std::size_t col = static_cast<std::size_t>(perm[i]);
    cols += d.column_names.size() == static_cast<std::size_t>(d.X.cols())
                ? d.column_names[col]
                : "column " + std::to_string(col);
  }
  fail("RankDeficient",
       "design is collinear (cond(X'X) > 1e10); implicated columns: " + cols);
}

inline double mixedlm_criterion(const DesignMatrices& d, double lambda,
                                bool reml = true) {
  validate_design(d);
  detail::MixedLMWork work(d);
  return work.profile(lambda, reml).criterion;
}

inline MixedLMFit fit_mixedlm(const DesignMatrices& d,
                              const MixedLMOptions& opt = {}) {
  validate_design(d);
  check_design_conditioning(d);
  require(opt.lambda_min > 0.0 && opt.lambda_min <= opt.lambda_max,
          "InvalidConfig", "bad lambda bounds");

  detail::MixedLMWork work(d);
  const bool reml = opt.reml;
  const double lo = std::log(opt.lambda_min);
  const double hi = std::log(opt.lambda_max);
  const auto objective = [&](double u) {
    return work.profile(std::exp(u), reml).criterion;
  };

  double u_hat = lo;
  int iters = 0;
  if (hi > lo) {
    const auto [u, it] = detail::brent_minimize(objective, lo, hi, opt.tol,
                                                opt.max_iter);
    u_hat = u;
    iters = it;
  }
  const bool hit_max_iter = iters >= opt.max_iter;

  // A minimum at the lower bound means the between-group variance wants to be
  // negative; the estimate is clamped to zero and flagged. The final fit is
  // evaluated at lambda = 0 exactly, which is plain OLS.
  const double edge = 4.0 * opt.tol;
  const bool at_lower = u_hat <= lo + edge || objective(lo) <= objective(u_hat);
  const bool at_upper = !at_lower && u_hat >= hi - edge;
  double lambda = std::exp(u_hat);
  if (at_lower) lambda = 0.0;
  if (at_upper) lambda = opt.lambda_max;

  const detail::ProfiledFit fit = work.profile(lambda, reml);
  const std::size_t n = work.n();
  const std::size_t p = work.p();
  const double dof = static_cast<double>(n) - (reml ? static_cast<double>(p) : 0.0);

  MixedLMFit out;
  out.column_names = d.column_names;
  out.beta = fit.beta;
  out.lambda = lambda;
  out.sigma2_resid = fit.rss / dof;
  out.sigma2_group = lambda * out.sigma2_resid;
  out.converged = !hit_max_iter;
  out.boundary = at_lower || at_upper;
  out.n_obs = n;
  out.n_groups = work.n_groups();

  Eigen::LDLT<Eigen::MatrixXd> ldlt(fit.A);
  const Eigen::MatrixXd cov =
      out.sigma2_resid *
      ldlt.solve(Eigen::MatrixXd::Identity(static_cast<long>(p), static_cast<long>(p)));
  out.se.resize(static_cast<long>(p));
  out.z.resize(static_cast<long>(p));
  out.p.resize(static_cast<long>(p));
  out.ci_low.resize(static_cast<long>(p));
  out.ci_high.resize(static_cast<long>(p));
  for (long i = 0; i < static_cast<long>(p); ++i) {
    const double var = cov(i, i);
    require(var > 0.0, "NonConvergence", "non-positive coefficient variance");
    out.se[i] = std::sqrt(var);
    out.z[i] = out.beta[i] / out.se[i];
    out.p[i] = wald_p_from_z(out.z[i]);
    out.ci_low[i] = out.beta[i] - 1.96 * out.se[i];
    out.ci_high[i] = out.beta[i] + 1.96 * out.se[i];
  }

  out.loglik = -0.5 * (dof * (std::log(2.0 * std::numbers::pi) + 1.0 +
                              std::log(out.sigma2_resid)) +
                       fit.logdet_h + (reml ? fit.logdet_a : 0.0));
  return out;
}

// ---------------------------------------------------------------------------
// Feature selection

struct FeatureEffect {
  std::string name;
  double beta = 0.0;
  double se = 0.0;
  double p = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  bool selected = false;
};

struct FeatureSelection {
  double threshold = 0.05;
  bool univariate = false;
  std::vector<FeatureEffect> effects;          // candidate features only
  std::vector<std::string> selected;
  std::vector<std::string> removed;
  double sigma2_resid = 0.0;
  double sigma2_group = 0.0;
  bool boundary = false;
};

// Builds y (z-scored pooled labels), an intercept-plus-candidates X and the
// per-row subject index.
inline DesignMatrices build_design(std::span<const DomainDataset> datasets,
                                   const FeatureSchema& schema,
                                   std::span<const std::string> candidates) {
  validate_schema(schema);
  require(!candidates.empty(), "InvalidConfig", "no candidate features given");
  std::size_t n = 0;
  for (const auto& ds : datasets) {
    validate_dataset(ds, schema);
    n += ds.samples.size();
  }
  require(n > 0, "EmptyDataset", "no samples across datasets");

  std::vector<std::size_t> cols;
  cols.reserve(candidates.size());
  for (const auto& name : candidates) cols.push_back(schema.index_of(name));

  DesignMatrices d;
  d.y.resize(static_cast<long>(n));
  d.X.resize(static_cast<long>(n), static_cast<long>(1 + cols.size()));
  d.group.reserve(n);
  d.column_names.push_back("(intercept)");
  for (const auto& name : candidates) d.column_names.push_back(name);

  long row = 0;
  int g = 0;
  for (const auto& ds : datasets) {
    d.group_ids.push_back(ds.domain_id);
    for (const auto& s : ds.samples) {
      d.y[row] = s.label;
      d.X(row, 0) = 1.0;
      for (std::size_t c = 0; c < cols.size(); ++c)
        d.X(row, static_cast<long>(1 + c)) = s.features.values[cols[c]];
      d.group.push_back(g);
      ++row;
    }
    ++g;
  }

  const double mean = d.y.mean();
  const double sd = std::sqrt((d.y.array() - mean).square().sum() /
                              static_cast<double>(n));
  require(sd > 0.0, "ZeroVariance", "labels are constant; nothing to model");
  d.y = (d.y.array() - mean) / sd;
  return d;
}

// One joint model over all candidates by default: each coefficient is then
// adjusted for every other frequency, which is the point of using a mixed
// model rather than per-feature correlations. The univariate flag refits one
// candidate at a time for comparison.
inline FeatureSelection select_features(std::span<const DomainDataset> datasets,
                                        const FeatureSchema& schema,
                                        std::span<const std::string> candidates,
                                        double threshold = 0.05,
                                        bool univariate = false,
                                        const MixedLMOptions& opt = {}) {
  require(threshold > 0.0 && threshold <= 1.0, "InvalidConfig",
          "selection threshold must lie in (0, 1]");
  FeatureSelection sel;
  sel.threshold = threshold;
  sel.univariate = univariate;

  const auto record = [&](const std::string& name, const MixedLMFit& fit,
                          long col) {
    FeatureEffect e;
    e.name = name;
    e.beta = fit.beta[col];
    e.se = fit.se[col];
    e.p = fit.p[col];
    e.ci_low = fit.ci_low[col];
    e.ci_high = fit.ci_high[col];
    e.selected = e.p < threshold;
    sel.effects.push_back(e);
    (e.selected ? sel.selected : sel.removed).push_back(name);
  };

  if (univariate) {
    for (const auto& name : candidates) {
      const std::string one[] = {name};
      const DesignMatrices d = build_design(datasets, schema, one);
      const MixedLMFit fit = fit_mixedlm(d, opt);
      record(name, fit, 1);
      sel.sigma2_resid = fit.sigma2_resid;
      sel.sigma2_group = fit.sigma2_group;
      sel.boundary = sel.boundary || fit.boundary;
    }
  } else {
    const DesignMatrices d = build_design(datasets, schema, candidates);
    const MixedLMFit fit = fit_mixedlm(d, opt);
    for (std::size_t c = 0; c < candidates.size(); ++c)
      record(candidates[c], fit, static_cast<long>(c + 1));
    sel.sigma2_resid = fit.sigma2_resid;
    sel.sigma2_group = fit.sigma2_group;
    sel.boundary = fit.boundary;
  }
  return sel;
}

// ---------------------------------------------------------------------------
// Pearson correlation diagnostics (per subject plus pooled)

struct PearsonReport {
  std::vector<std::pair<std::string, double>> per_domain;
  double pooled = 0.0;
};

namespace detail {

inline double pearson(std::span<const double> x, std::span<const double> y,
                      const std::string& what) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  require(sxx > 0.0 && syy > 0.0, "ZeroVariance",
          "no variance in " + what + "; correlation undefined");
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace detail

inline PearsonReport pearson_per_domain(std::span<const DomainDataset> datasets,
                                        const FeatureSchema& schema,
                                        const std::string& feature_name) {
  const std::size_t col = schema.index_of(feature_name);
  PearsonReport report;
  std::vector<double> all_x, all_y;
  for (const auto& ds : datasets) {
    validate_dataset(ds, schema);
    require(ds.samples.size() >= 3, "TooFewSamples",
            "domain '" + ds.domain_id + "' needs at least 3 samples");
    std::vector<double> x, y;
    x.reserve(ds.samples.size());
    y.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
      x.push_back(s.features.values[col]);
      y.push_back(s.label);
    }
    report.per_domain.emplace_back(
        ds.domain_id,
        detail::pearson(x, y, "'" + feature_name + "' within '" + ds.domain_id + "'"));
    all_x.insert(all_x.end(), x.begin(), x.end());
    all_y.insert(all_y.end(), y.begin(), y.end());
  }
  require(!report.per_domain.empty(), "EmptyDataset", "no domains given");
  report.pooled = detail::pearson(all_x, all_y, "'" + feature_name + "' pooled");
  return report;
}

}  // namespace glucodg

#endif  // GLUCODG_MIXEDLM_HPP_
