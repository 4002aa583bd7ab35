#include "hyperspline/solver.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iostream>
#include <limits>
#include <string>
#include <thread>

#include "hyperspline/error.hpp"

namespace hyperspline {

namespace {

constexpr double kStepTol = 1e-12;
constexpr double kMultiplierTol = 1e-10;
constexpr double kRidgeRatio = 1e-12;
constexpr double kActiveTol = 1e-9;

// Problem restricted to the free parameters.
struct Reduced {
  std::vector<int> free;
  Eigen::MatrixXd a;
  Eigen::MatrixXd penalty;
  Eigen::MatrixXd g;         // constraint rows kept after elimination
  std::vector<int> g_index;  // original row of each kept constraint
};

Reduced reduce(const CalibrationProblem& p) {
  const int np = p.parameter_count();
  std::vector<bool> fixed(np, false);
  for (int k : p.fixed_zero) fixed[k] = true;

  Reduced r;
  for (int k = 0; k < np; ++k) {
    if (!fixed[k]) r.free.push_back(k);
  }
  const auto nf = static_cast<Eigen::Index>(r.free.size());
  r.a.resize(p.a.rows(), nf);
  r.penalty.resize(p.penalty.rows(), nf);
  Eigen::MatrixXd g(p.ineq.rows(), nf);
  for (Eigen::Index c = 0; c < nf; ++c) {
    r.a.col(c) = p.a.col(r.free[c]);
    if (p.penalty.rows() > 0) r.penalty.col(c) = p.penalty.col(r.free[c]);
    if (p.ineq.rows() > 0) g.col(c) = p.ineq.col(r.free[c]);
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    if (g.row(i).norm() > 1e-14) {
      keep.push_back(i);
      r.g_index.push_back(static_cast<int>(i));
    }
  }
  r.g.resize(static_cast<Eigen::Index>(keep.size()), nf);
  for (std::size_t i = 0; i < keep.size(); ++i) r.g.row(static_cast<Eigen::Index>(i)) = g.row(keep[i]);
  return r;
}

Eigen::MatrixXd stacked(const Eigen::MatrixXd& a, const Eigen::MatrixXd& pen, double lambda) {
  Eigen::MatrixXd m(a.rows() + pen.rows(), a.cols());
  m.topRows(a.rows()) = a;
  if (pen.rows() > 0) m.bottomRows(pen.rows()) = std::sqrt(lambda) * pen;
  return m;
}

Eigen::VectorXd free_part(const Eigen::VectorXd& theta, const std::vector<int>& free) {
  Eigen::VectorXd x(static_cast<Eigen::Index>(free.size()));
  for (std::size_t c = 0; c < free.size(); ++c) x(static_cast<Eigen::Index>(c)) = theta(free[c]);
  return x;
}

// Compressed objective ||r x - c||^2 + const.
struct Compressed {
  Eigen::MatrixXd r;
  Eigen::VectorXd c;
  bool ridge = false;
};

Compressed compress(const Eigen::MatrixXd& m, const Eigen::VectorXd& d) {
  const Eigen::Index nf = m.cols();
  Compressed out;
  if (nf == 0) return out;

  Eigen::MatrixXd work = m;
  Eigen::VectorXd rhs = d;
  if (work.rows() < nf) {
    work.conservativeResize(nf, Eigen::NoChange);
    work.bottomRows(nf - m.rows()).setZero();
    rhs.conservativeResize(nf);
    rhs.tail(nf - d.size()).setZero();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(work);
  Eigen::MatrixXd r = qr.matrixQR().topRows(nf).triangularView<Eigen::Upper>();
  Eigen::VectorXd qtd = qr.householderQ().transpose() * rhs;

  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXd>(r).singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  const double smin = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
  if (!(smax > 0.0)) throw NumericalError("solve: design and penalty are identically zero");
  if (smin < kRidgeRatio * smax) {
    // rho ||x||^2 with rho = 1e-12 ||M||_2^2.
    Eigen::MatrixXd aug(2 * nf, nf);
    aug.topRows(nf) = r;
    aug.bottomRows(nf) = std::sqrt(kRidgeRatio) * smax * Eigen::MatrixXd::Identity(nf, nf);
    Eigen::VectorXd aug_rhs = Eigen::VectorXd::Zero(2 * nf);
    aug_rhs.head(nf) = qtd.head(nf);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr2(aug);
    r = qr2.matrixQR().topRows(nf).triangularView<Eigen::Upper>();
    qtd = qr2.householderQ().transpose() * aug_rhs;
    out.ridge = true;
  }
  out.r = std::move(r);
  out.c = qtd.head(nf);
  return out;
}

struct ActiveSetResult {
  Eigen::VectorXd x;
  std::vector<int> working;  // rows of the reduced constraint matrix
  Eigen::VectorXd mu;        // aligned with `working`
  int iterations = 0;
  bool converged = false;
};

// Least-squares multipliers of the working set: G_W^T mu = -grad.
Eigen::VectorXd working_multipliers(const Eigen::MatrixXd& gw, const Eigen::VectorXd& grad) {
  if (gw.rows() == 0) return {};
  return gw.transpose().colPivHouseholderQr().solve(-grad);
}

// Primal active-set iterations from a feasible x whose working set `w` holds
// linearly independent rows that are active at x.
ActiveSetResult active_set(const Compressed& obj, const Eigen::MatrixXd& g, Eigen::VectorXd x, std::vector<int> w,
                           DropRule rule, int max_iter) {
  const Eigen::Index nf = obj.r.cols();
  ActiveSetResult res;
  std::vector<bool> in_w(static_cast<std::size_t>(g.rows()), false);
  for (int i : w) in_w[i] = true;

  for (int it = 0; it < max_iter; ++it) {
    res.iterations = it + 1;
    Eigen::MatrixXd gw(static_cast<Eigen::Index>(w.size()), nf);
    for (std::size_t k = 0; k < w.size(); ++k) gw.row(static_cast<Eigen::Index>(k)) = g.row(w[k]);

    // Null space of the working set.
    Eigen::MatrixXd z;
    if (w.empty()) {
      z = Eigen::MatrixXd::Identity(nf, nf);
    } else {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(gw.transpose());
      const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(nf, nf);
      z = q.rightCols(nf - static_cast<Eigen::Index>(w.size()));
    }

    Eigen::VectorXd p = Eigen::VectorXd::Zero(nf);
    if (z.cols() > 0) {
      const Eigen::MatrixXd rz = obj.r * z;
      const Eigen::VectorXd zstep = rz.colPivHouseholderQr().solve(obj.c - obj.r * x);
      p = z * zstep;
    }

    const double scale = 1.0 + x.lpNorm<Eigen::Infinity>();
    if (p.lpNorm<Eigen::Infinity>() <= kStepTol * scale) {
      const Eigen::VectorXd grad = 2.0 * obj.r.transpose() * (obj.r * x - obj.c);
      const Eigen::VectorXd mu = working_multipliers(gw, grad);
      const double mu_tol = kMultiplierTol * (1.0 + (mu.size() > 0 ? mu.lpNorm<Eigen::Infinity>() : 0.0));
      int drop = -1;
      for (Eigen::Index k = 0; k < mu.size(); ++k) {
        if (mu(k) >= -mu_tol) continue;
        if (rule == DropRule::Bland) {
          if (drop < 0 || w[k] < w[drop]) drop = static_cast<int>(k);
        } else if (drop < 0 || mu(k) < mu(drop)) {
          drop = static_cast<int>(k);
        }
      }
      if (drop < 0) {
        res.x = std::move(x);
        res.working = w;
        res.mu = mu;
        res.converged = true;
        return res;
      }
      in_w[w[drop]] = false;
      w.erase(w.begin() + drop);
      continue;
    }

    // Ratio test; ties resolve to the lowest constraint index.
    double alpha = 1.0;
    int block = -1;
    const double pnorm = p.norm();
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      if (in_w[i]) continue;
      const double gp = g.row(i).dot(p);
      if (!(gp > 1e-12 * pnorm)) continue;
      const double ratio = std::max(0.0, -g.row(i).dot(x)) / gp;
      if (ratio < alpha) {
        alpha = ratio;
        block = static_cast<int>(i);
      }
    }
    x += alpha * p;
    if (block >= 0) {
      in_w[block] = true;
      w.push_back(block);
    }
  }
  res.x = std::move(x);
  res.working = w;
  return res;
}

// Lawson-Hanson NNLS: min ||e w - t|| subject to w >= 0.
struct NnlsResult {
  Eigen::VectorXd w;
  int iterations = 0;
  bool converged = false;
};

NnlsResult nnls(const Eigen::MatrixXd& e, const Eigen::VectorXd& t, int max_iter) {
  const Eigen::Index n = e.cols();
  NnlsResult out;
  out.w = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  const double tol = 1e-12 * (1.0 + e.lpNorm<Eigen::Infinity>()) * (1.0 + t.lpNorm<Eigen::Infinity>());

  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (passive[j]) cols.push_back(j);
    }
    Eigen::MatrixXd ep(e.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) ep.col(static_cast<Eigen::Index>(k)) = e.col(cols[k]);
    const Eigen::VectorXd zp = ep.colPivHouseholderQr().solve(t);
    z.setZero(n);
    for (std::size_t k = 0; k < cols.size(); ++k) z(cols[k]) = zp(static_cast<Eigen::Index>(k));
  };

  // Columns whose entry would be undone at once by round-off are skipped
  // until the iterate changes.
  std::vector<bool> skip(static_cast<std::size_t>(n), false);
  Eigen::VectorXd z(n);
  double best = std::numeric_limits<double>::infinity();
  int stalled = 0;
  while (out.iterations < max_iter) {
    const Eigen::VectorXd resid = t - e * out.w;
    // Degenerate duals can cycle; give up after a run without progress.
    const double rn = resid.norm();
    if (rn < best * (1.0 - 1e-12)) {
      best = rn;
      stalled = 0;
    } else if (++stalled > 50) {
      return out;
    }
    const Eigen::VectorXd grad = e.transpose() * resid;
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[j] && !skip[j] && grad(j) > tol && (enter < 0 || grad(j) > grad(enter))) enter = j;
    }
    if (enter < 0) {
      out.converged = true;
      return out;
    }
    passive[enter] = true;
    for (bool first = true;; first = false) {
      ++out.iterations;
      solve_passive(z);
      if (first && !(z(enter) > 0.0)) {
        passive[enter] = false;
        skip[enter] = true;
        break;
      }
      bool positive = true;
      double alpha = std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && z(j) <= 0.0) {
          positive = false;
          alpha = std::min(alpha, out.w(j) / (out.w(j) - z(j)));
        }
      }
      std::fill(skip.begin(), skip.end(), false);
      if (positive) {
        out.w = z;
        break;
      }
      out.w += alpha * (z - out.w);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (passive[j] && out.w(j) <= tol) {
          passive[j] = false;
          out.w(j) = 0.0;
        }
      }
      if (out.iterations >= max_iter) return out;
    }
  }
  return out;
}

// Working-set guess from the least-distance dual of
// min ||r x - c|| s.t. g x <= 0: with u = r x - c the problem becomes
// min ||u|| s.t. e u >= f, e = -g r^-1, f = g r^-1 c, which is solved through
// NNLS on [e^T; f^T]. Rows are filtered to a linearly independent subset.
std::vector<int> dual_seed(const Compressed& obj, const Eigen::MatrixXd& g, int max_iter, int& iterations) {
  const Eigen::Index nf = obj.r.cols();
  const Eigen::MatrixXd grinv =
      obj.r.triangularView<Eigen::Upper>().transpose().solve(g.transpose()).transpose();  // g r^-1
  Eigen::MatrixXd lhs(nf + 1, g.rows());
  lhs.topRows(nf) = -grinv.transpose();
  lhs.row(nf) = (grinv * obj.c).transpose();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf + 1);
  rhs(nf) = 1.0;
  const NnlsResult dual = nnls(lhs, rhs, max_iter);
  // A stalled dual still gives a usable guess.
  iterations = dual.iterations;

  std::vector<int> seed;
  Eigen::MatrixXd basis(nf, 0);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    if (!(dual.w(i) > 0.0) || static_cast<Eigen::Index>(seed.size()) >= nf) continue;
    Eigen::VectorXd v = g.row(i).transpose();
    for (int pass = 0; pass < 2; ++pass) v -= basis * (basis.transpose() * v);
    if (v.norm() <= 1e-8 * g.row(i).norm()) continue;
    basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
    basis.col(basis.cols() - 1) = v.normalized();
    seed.push_back(static_cast<int>(i));
  }
  return seed;
}

double kkt_scale(const CalibrationProblem& p) {
  return 1.0 + std::sqrt(p.a.squaredNorm() + p.lambda_pen * p.penalty.squaredNorm());
}

}  // namespace

void CalibrationProblem::validate() const {
  const Eigen::Index np = a.cols();
  if (np == 0) throw InputError("problem: design matrix has no columns");
  if (y.size() != a.rows()) throw InputError("problem: y length does not match design rows");
  if (penalty.rows() > 0 && penalty.cols() != np) throw InputError("problem: penalty column count mismatch");
  if (!(lambda_pen >= 0.0) || !std::isfinite(lambda_pen)) throw InputError("problem: lambda_pen must be finite and >= 0");
  if (ineq.rows() > 0 && ineq.cols() != np) throw InputError("problem: inequality column count mismatch");
  if (ineq_rhs.size() != ineq.rows()) throw InputError("problem: inequality rhs length mismatch");
  if (ineq_rhs.size() > 0 && ineq_rhs.lpNorm<Eigen::Infinity>() != 0.0) {
    throw InputError("problem: inequality rhs must be zero");
  }
  if (!a.allFinite() || !y.allFinite() || !penalty.allFinite() || !ineq.allFinite()) {
    throw InputError("problem: non-finite entries");
  }
  std::vector<bool> seen(static_cast<std::size_t>(np), false);
  for (int k : fixed_zero) {
    if (k < 0 || k >= np) throw InputError("problem: fixed index out of range");
    if (seen[k]) throw InputError("problem: duplicate fixed index");
    seen[k] = true;
  }
}

Solution solve(const CalibrationProblem& problem, const SolveOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  problem.validate();
  const Reduced red = reduce(problem);
  const auto nf = static_cast<Eigen::Index>(red.free.size());

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(nf);
  if (options.start) {
    const Eigen::VectorXd& s = *options.start;
    if (s.size() != problem.parameter_count()) throw InputError("solve: start has wrong length");
    for (int k : problem.fixed_zero) {
      if (s(k) != 0.0) throw InputError("solve: start violates a fixed parameter");
    }
    x0 = free_part(s, red.free);
    if (red.g.rows() > 0 && (red.g * x0).maxCoeff() > kActiveTol) throw InputError("solve: start is infeasible");
  }

  Solution sol;
  sol.theta = Eigen::VectorXd::Zero(problem.parameter_count());
  sol.multipliers = Eigen::VectorXd::Zero(problem.ineq.rows());

  ActiveSetResult res;
  if (nf > 0) {
    Eigen::VectorXd d = Eigen::VectorXd::Zero(red.a.rows() + red.penalty.rows());
    d.head(problem.y.size()) = problem.y;
    const Compressed obj = compress(stacked(red.a, red.penalty, problem.lambda_pen), d);
    sol.ridge_applied = obj.ridge;
    if (obj.ridge) std::clog << "warning: rank-deficient least-squares system, micro-ridge applied\n";

    const int cap = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(10 * nf + 100);
    // At a start where constraints hold with equality any independent subset
    // of them is a valid initial working set; the dual guess is only used
    // from the origin, where every row is active.
    std::vector<int> w0;
    int used = 0;
    if (options.dual_seed && red.g.rows() > 0 && x0.lpNorm<Eigen::Infinity>() == 0.0) {
      w0 = dual_seed(obj, red.g, 3 * static_cast<int>(red.g.rows()) + 100, used);
    }
    res = active_set(obj, red.g, x0, w0, options.drop_rule, cap);
    used += res.iterations;
    if (!res.converged && options.retry_with_bland && options.drop_rule != DropRule::Bland) {
      res = active_set(obj, red.g, x0, {}, DropRule::Bland, cap);
      used += res.iterations;
    }
    res.iterations = used;
    if (!res.converged) {
      throw NumericalError("solve: active-set iteration limit reached (" + std::to_string(cap) + ")");
    }
    for (Eigen::Index c = 0; c < nf; ++c) sol.theta(red.free[c]) = res.x(c);
    for (std::size_t k = 0; k < res.working.size(); ++k) {
      const int row = red.g_index[res.working[k]];
      sol.active_set.push_back(row);
      sol.multipliers(row) = std::max(0.0, res.mu(static_cast<Eigen::Index>(k)));
    }
    std::sort(sol.active_set.begin(), sol.active_set.end());
  }
  if (!sol.theta.allFinite()) throw NumericalError("solve: non-finite solution");

  const Eigen::VectorXd resid = problem.a * sol.theta - problem.y;
  sol.objective = resid.squaredNorm();
  if (problem.penalty.rows() > 0) sol.objective += problem.lambda_pen * (problem.penalty * sol.theta).squaredNorm();
  sol.iterations = res.iterations;
  sol.kkt_residual = kkt_check(problem, sol.theta, sol.multipliers).max();
  sol.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return sol;
}

double KktResiduals::max() const { return std::max({stationarity, feasibility, complementarity}); }

KktResiduals kkt_check(const CalibrationProblem& problem, const Eigen::VectorXd& theta,
                       const Eigen::VectorXd& multipliers) {
  problem.validate();
  if (theta.size() != problem.parameter_count()) throw InputError("kkt_check: theta has wrong length");
  if (multipliers.size() != problem.ineq.rows()) throw InputError("kkt_check: multiplier length mismatch");
  const Reduced red = reduce(problem);
  const double scale = kkt_scale(problem);

  KktResiduals out;
  Eigen::VectorXd grad = 2.0 * problem.a.transpose() * (problem.a * theta - problem.y);
  if (problem.penalty.rows() > 0) {
    grad += 2.0 * problem.lambda_pen * problem.penalty.transpose() * (problem.penalty * theta);
  }
  if (problem.ineq.rows() > 0) grad += problem.ineq.transpose() * multipliers;
  const Eigen::VectorXd gfree = free_part(grad, red.free);
  out.stationarity = gfree.size() > 0 ? gfree.lpNorm<Eigen::Infinity>() / scale : 0.0;

  for (int k : problem.fixed_zero) out.feasibility = std::max(out.feasibility, std::abs(theta(k)));
  if (problem.ineq.rows() > 0) {
    const Eigen::VectorXd slack = problem.ineq * theta - problem.ineq_rhs;
    out.feasibility = std::max(out.feasibility, std::max(0.0, slack.maxCoeff()));
    double comp = 0.0;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      comp = std::max(comp, std::abs(multipliers(i) * slack(i)));
      // Negative multipliers count against stationarity of the sign condition.
      comp = std::max(comp, std::max(0.0, -multipliers(i)));
    }
    out.complementarity = comp / scale;
  }
  return out;
}

KktResiduals kkt_check(const CalibrationProblem& problem, const Eigen::VectorXd& theta) {
  problem.validate();
  if (theta.size() != problem.parameter_count()) throw InputError("kkt_check: theta has wrong length");
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(problem.ineq.rows());
  if (problem.ineq.rows() > 0) {
    const Reduced red = reduce(problem);
    Eigen::VectorXd grad = 2.0 * problem.a.transpose() * (problem.a * theta - problem.y);
    if (problem.penalty.rows() > 0) {
      grad += 2.0 * problem.lambda_pen * problem.penalty.transpose() * (problem.penalty * theta);
    }
    const Eigen::VectorXd slack = problem.ineq * theta - problem.ineq_rhs;
    std::vector<int> act;
    for (Eigen::Index i = 0; i < slack.size(); ++i) {
      if (slack(i) >= -kActiveTol * (1.0 + theta.lpNorm<Eigen::Infinity>())) act.push_back(static_cast<int>(i));
    }
    if (!act.empty()) {
      Eigen::MatrixXd gat(static_cast<Eigen::Index>(red.free.size()), static_cast<Eigen::Index>(act.size()));
      for (std::size_t k = 0; k < act.size(); ++k) {
        gat.col(static_cast<Eigen::Index>(k)) = free_part(problem.ineq.row(act[k]).transpose(), red.free);
      }
      const Eigen::VectorXd m = gat.completeOrthogonalDecomposition().solve(-free_part(grad, red.free));
      for (std::size_t k = 0; k < act.size(); ++k) mu(act[k]) = std::max(0.0, m(static_cast<Eigen::Index>(k)));
    }
  }
  return kkt_check(problem, theta, mu);
}

double discrete_curvature(LCurvePoint p0, LCurvePoint p1, LCurvePoint p2) {
  const double d01 = std::hypot(p1.x - p0.x, p1.y - p0.y);
  const double d12 = std::hypot(p2.x - p1.x, p2.y - p1.y);
  const double d02 = std::hypot(p2.x - p0.x, p2.y - p0.y);
  const double denom = d01 * d12 * d02;
  if (!(denom > 0.0)) return 0.0;
  const double area2 = std::abs((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
  return 2.0 * (0.5 * area2) / denom;
}

LCurveResult lcurve(const CalibrationProblem& problem, std::span<const double> lambda_grid) {
  problem.validate();
  const std::size_t n = lambda_grid.size();
  if (n < 5) throw InputError("lcurve: need at least five candidate values");
  for (std::size_t k = 0; k < n; ++k) {
    if (!(lambda_grid[k] > 0.0) || !std::isfinite(lambda_grid[k])) throw InputError("lcurve: candidates must be positive");
    if (k > 0 && !(lambda_grid[k] > lambda_grid[k - 1])) throw InputError("lcurve: candidates must be increasing");
  }
  if (problem.penalty.rows() == 0) throw InputError("lcurve: problem has no penalty operator");

  LCurveResult out;
  out.lambdas.assign(lambda_grid.begin(), lambda_grid.end());
  out.misfits.assign(n, 0.0);
  out.seminorms.assign(n, 0.0);
  out.kappas.assign(n, 0.0);
  out.iterations.assign(n, 0);

  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        CalibrationProblem p = problem;
        p.lambda_pen = lambda_grid[k];
        const Solution s = solve(p);
        out.misfits[k] = (problem.a * s.theta - problem.y).squaredNorm();
        out.seminorms[k] = (problem.penalty * s.theta).squaredNorm();
        out.iterations[k] = s.iterations;
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();
  for (std::size_t k = 0; k < n; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const std::exception& e) {
      throw NumericalError("lcurve: solve failed at lambda " + std::to_string(lambda_grid[k]) + ": " + e.what());
    }
  }

  constexpr double kFloor = 1e-300;
  std::vector<LCurvePoint> pts(n);
  for (std::size_t k = 0; k < n; ++k) {
    pts[k] = {std::log10(std::max(out.misfits[k], kFloor)), std::log10(std::max(out.seminorms[k], kFloor))};
  }
  for (std::size_t k = 1; k + 1 < n; ++k) out.kappas[k] = discrete_curvature(pts[k - 1], pts[k], pts[k + 1]);
  out.corner_index = static_cast<std::size_t>(std::max_element(out.kappas.begin(), out.kappas.end()) - out.kappas.begin());
  out.lambda_corner = out.lambdas[out.corner_index];
  out.lambda_chosen = out.lambda_corner / 10.0;
  return out;
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi > lo) || count < 2) throw InputError("log_grid: need 0 < lo < hi and count >= 2");
  std::vector<double> g(static_cast<std::size_t>(count));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int k = 0; k < count; ++k) g[k] = std::pow(10.0, a + (b - a) * k / (count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

std::vector<double> default_lambda_grid() { return log_grid(1e-10, 1e2, 25); }

}  // namespace hyperspline
