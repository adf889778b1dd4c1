#include "tensorsat/extract/milp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace tensorsat {

std::uint32_t LinearProgram::add_var(Variable v) {
  if (v.type == VarType::Binary) {
    v.lower = std::max(v.lower, 0.0);
    v.upper = std::min(v.upper, 1.0);
  }
  vars.push_back(std::move(v));
  return static_cast<std::uint32_t>(vars.size() - 1);
}

void LinearProgram::add_constraint(Constraint c) { constraints.push_back(std::move(c)); }

double LinearProgram::evaluate(const std::vector<double>& x) const {
  double s = 0;
  for (std::size_t j = 0; j < vars.size(); ++j) s += vars[j].objective * x[j];
  return s;
}

double LinearProgram::violation(const std::vector<double>& x) const {
  double worst = 0;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    worst = std::max(worst, vars[j].lower - x[j]);
    worst = std::max(worst, x[j] - vars[j].upper);
    if (vars[j].type != VarType::Continuous) worst = std::max(worst, std::abs(x[j] - std::round(x[j])));
  }
  for (const auto& c : constraints) {
    double a = 0;
    for (const auto& t : c.terms) a += t.coef * x[t.var];
    if (c.sense != Sense::LessEqual) worst = std::max(worst, c.rhs - a);
    if (c.sense != Sense::GreaterEqual) worst = std::max(worst, a - c.rhs);
  }
  return worst;
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr double kFeasTol = 1e-7;
constexpr std::size_t kMaxPivots = 200000;

// Tableau with the objective in the last row and the right-hand side in the
// last column; the corner holds minus the objective value.
class Tableau {
 public:
  Tableau(Eigen::MatrixXd t, std::vector<std::size_t> basis) : t_(std::move(t)), basis_(std::move(basis)) {}

  Eigen::MatrixXd& data() { return t_; }
  std::vector<std::size_t>& basis() { return basis_; }
  std::size_t rows() const { return static_cast<std::size_t>(t_.rows()) - 1; }
  std::size_t rhs_col() const { return static_cast<std::size_t>(t_.cols()) - 1; }
  std::size_t pivots() const { return pivots_; }

  void pivot(std::size_t r, std::size_t c) {
    t_.row(r) /= t_(r, c);
    Eigen::VectorXd col = t_.col(c);
    col(r) = 0;
    Eigen::RowVectorXd prow = t_.row(r);
    t_.noalias() -= col * prow;
    basis_[r] = c;
    ++pivots_;
  }

  // Minimizes the objective row over columns [0, enter_limit).
  LpResult::Status optimize(std::size_t enter_limit) {
    std::size_t degenerate = 0;
    const std::size_t m = rows();
    const std::size_t rhs = rhs_col();
    for (;;) {
      if (pivots_ >= kMaxPivots) return LpResult::Status::IterationLimit;
      bool bland = degenerate > 50;
      std::size_t enter = enter_limit;
      double most = -kCostTol;
      for (std::size_t j = 0; j < enter_limit; ++j) {
        double d = t_(m, j);
        if (d < most) {
          enter = j;
          if (bland) break;
          most = d;
        }
      }
      if (enter == enter_limit) return LpResult::Status::Optimal;
      std::size_t leave = m;
      double best = 0;
      for (std::size_t i = 0; i < m; ++i) {
        double a = t_(i, enter);
        if (a <= kPivotTol) continue;
        double ratio = t_(i, rhs) / a;
        if (leave == m || ratio < best - 1e-12 || (ratio <= best + 1e-12 && basis_[i] < basis_[leave])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave == m) return LpResult::Status::Unbounded;
      degenerate = best <= 1e-12 ? degenerate + 1 : 0;
      pivot(leave, enter);
    }
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<std::size_t> basis_;
  std::size_t pivots_ = 0;
};

struct Row {
  std::vector<std::pair<std::size_t, double>> terms;  // free column, coefficient
  Sense sense;
  double rhs;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp) {
  LpResult result;
  const std::size_t nv = lp.vars.size();
  std::vector<std::int64_t> col_of(nv, -1);
  std::vector<std::size_t> var_of;
  for (std::size_t j = 0; j < nv; ++j) {
    const auto& v = lp.vars[j];
    if (v.upper < v.lower - kFeasTol) return result;
    if (v.upper - v.lower > kFeasTol) {
      col_of[j] = static_cast<std::int64_t>(var_of.size());
      var_of.push_back(j);
    }
  }
  const std::size_t n = var_of.size();

  std::vector<Row> rows;
  for (const auto& c : lp.constraints) {
    Row r{{}, c.sense, c.rhs};
    for (const auto& t : c.terms) {
      const auto& v = lp.vars[t.var];
      r.rhs -= t.coef * v.lower;
      if (col_of[t.var] >= 0) r.terms.emplace_back(static_cast<std::size_t>(col_of[t.var]), t.coef);
    }
    if (r.terms.empty()) {
      bool ok = (r.sense == Sense::LessEqual && r.rhs >= -kFeasTol) ||
                (r.sense == Sense::GreaterEqual && r.rhs <= kFeasTol) ||
                (r.sense == Sense::Equal && std::abs(r.rhs) <= kFeasTol);
      if (!ok) return result;
      continue;
    }
    rows.push_back(std::move(r));
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& v = lp.vars[var_of[k]];
    if (std::isfinite(v.upper)) rows.push_back(Row{{{k, 1.0}}, Sense::LessEqual, v.upper - v.lower});
  }
  for (auto& r : rows) {
    if (r.rhs < 0) {
      r.rhs = -r.rhs;
      for (auto& t : r.terms) t.second = -t.second;
      if (r.sense == Sense::LessEqual) {
        r.sense = Sense::GreaterEqual;
      } else if (r.sense == Sense::GreaterEqual) {
        r.sense = Sense::LessEqual;
      }
    }
  }

  const std::size_t m = rows.size();
  std::size_t n_slack = 0, n_art = 0;
  for (const auto& r : rows) {
    if (r.sense != Sense::Equal) ++n_slack;
    if (r.sense != Sense::LessEqual) ++n_art;
  }
  const std::size_t art0 = n + n_slack;
  const std::size_t total = art0 + n_art;
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m + 1), static_cast<Eigen::Index>(total + 1));
  std::vector<std::size_t> basis(m);
  std::size_t s = n, a = art0;
  for (std::size_t i = 0; i < m; ++i) {
    const Row& r = rows[i];
    for (const auto& [k, coef] : r.terms) t(i, k) += coef;
    t(i, total) = r.rhs;
    if (r.sense == Sense::LessEqual) {
      t(i, s) = 1;
      basis[i] = s++;
    } else {
      if (r.sense == Sense::GreaterEqual) t(i, s++) = -1;
      t(i, a) = 1;
      basis[i] = a++;
    }
  }

  Tableau tab(std::move(t), std::move(basis));
  Eigen::MatrixXd& T = tab.data();
  const auto M = static_cast<Eigen::Index>(m);
  if (n_art > 0) {
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis()[i] >= art0) T.row(M) -= T.row(static_cast<Eigen::Index>(i));
    }
    for (std::size_t j = art0; j < total; ++j) T(M, static_cast<Eigen::Index>(j)) = 0;
    auto st = tab.optimize(total);
    result.pivots = tab.pivots();
    if (st == LpResult::Status::IterationLimit) {
      result.status = st;
      return result;
    }
    double infeas = -T(M, static_cast<Eigen::Index>(total));
    double scale = 1;
    for (const auto& r : rows) scale += std::abs(r.rhs);
    if (infeas > kFeasTol * scale) return result;
    for (std::size_t i = 0; i < m; ++i) {
      if (tab.basis()[i] < art0) continue;
      for (std::size_t j = 0; j < art0; ++j) {
        if (std::abs(T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))) > kPivotTol) {
          tab.pivot(i, j);
          break;
        }
      }
    }
  }

  // Phase 2 objective row.
  T.row(M).setZero();
  for (std::size_t k = 0; k < n; ++k) T(M, static_cast<Eigen::Index>(k)) = lp.vars[var_of[k]].objective;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t b = tab.basis()[i];
    double cb = b < n ? lp.vars[var_of[b]].objective : 0.0;
    if (cb != 0) T.row(M) -= cb * T.row(static_cast<Eigen::Index>(i));
  }
  auto st = tab.optimize(art0);
  result.pivots = tab.pivots();
  if (st != LpResult::Status::Optimal) {
    result.status = st;
    return result;
  }

  result.x.resize(nv);
  for (std::size_t j = 0; j < nv; ++j) result.x[j] = lp.vars[j].lower;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t b = tab.basis()[i];
    if (b < n) result.x[var_of[b]] += std::max(0.0, T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(total)));
  }
  result.objective = lp.evaluate(result.x);
  result.status = LpResult::Status::Optimal;
  return result;
}

namespace {

struct Bounds {
  std::vector<double> lower, upper;
};

bool fixed(const Bounds& b, std::size_t j) { return b.upper[j] - b.lower[j] <= kFeasTol; }

// Removes rows that hold for every point within the bounds and fixes columns
// whose direction of improvement is unobstructed. Returns false if infeasible.
bool presolve(const LinearProgram& lp, Bounds& b, std::vector<char>& active) {
  const std::size_t nv = lp.vars.size();
  std::vector<std::vector<std::size_t>> rows_of(nv);
  for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
    for (const auto& t : lp.constraints[i].terms) rows_of[t.var].push_back(i);
  }
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
      if (!active[i]) continue;
      const auto& c = lp.constraints[i];
      double lo = 0, hi = 0, constant = 0;
      std::size_t free_count = 0, free_var = 0;
      double free_coef = 0;
      for (const auto& t : c.terms) {
        if (fixed(b, t.var)) {
          constant += t.coef * b.lower[t.var];
          continue;
        }
        ++free_count;
        free_var = t.var;
        free_coef = t.coef;
        lo += t.coef > 0 ? t.coef * b.lower[t.var] : t.coef * b.upper[t.var];
        hi += t.coef > 0 ? t.coef * b.upper[t.var] : t.coef * b.lower[t.var];
      }
      lo += constant;
      hi += constant;
      if (free_count == 1 && c.sense == Sense::Equal) {
        double v = (c.rhs - constant) / free_coef;
        const auto& var = lp.vars[free_var];
        if (var.type != VarType::Continuous) {
          if (std::abs(v - std::round(v)) > kFeasTol) return false;
          v = std::round(v);
        }
        if (v < b.lower[free_var] - kFeasTol || v > b.upper[free_var] + kFeasTol) return false;
        b.lower[free_var] = b.upper[free_var] = v;
        active[i] = 0;
        changed = true;
        continue;
      }
      bool ge_ok = lo >= c.rhs - kFeasTol;
      bool le_ok = hi <= c.rhs + kFeasTol;
      bool redundant = (c.sense == Sense::GreaterEqual && ge_ok) || (c.sense == Sense::LessEqual && le_ok) ||
                       (c.sense == Sense::Equal && ge_ok && le_ok);
      if (free_count == 0 && !redundant) return false;
      if (redundant) {
        active[i] = 0;
        changed = true;
      }
    }
    for (std::size_t j = 0; j < nv; ++j) {
      if (fixed(b, j)) continue;
      bool up_helps = true, down_helps = true;
      for (std::size_t i : rows_of[j]) {
        if (!active[i]) continue;
        const auto& c = lp.constraints[i];
        double coef = 0;
        for (const auto& t : c.terms) {
          if (t.var == j) coef += t.coef;
        }
        if (coef == 0) continue;
        if (c.sense == Sense::Equal) {
          up_helps = down_helps = false;
          break;
        }
        bool pos_helps = (c.sense == Sense::GreaterEqual) == (coef > 0);
        up_helps = up_helps && pos_helps;
        down_helps = down_helps && !pos_helps;
      }
      double obj = lp.vars[j].objective;
      if (down_helps && obj >= 0) {
        b.upper[j] = b.lower[j];
        changed = true;
      } else if (up_helps && obj <= 0 && std::isfinite(b.upper[j])) {
        b.lower[j] = b.upper[j];
        changed = true;
      }
    }
  }
  return true;
}

struct Open {
  double bound;
  std::size_t seq;
  Bounds bounds;
  bool operator>(const Open& o) const { return bound != o.bound ? bound > o.bound : seq > o.seq; }
};

}  // namespace

MilpResult solve_milp(const LinearProgram& lp, const MilpOptions& opt) {
  auto start = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  MilpResult res;
  const std::size_t nv = lp.vars.size();

  if (opt.incumbent) {
    if (opt.incumbent->size() != nv) throw std::invalid_argument("incumbent has the wrong dimension");
    if (lp.violation(*opt.incumbent) <= 1e-6) {
      res.has_solution = true;
      res.x = *opt.incumbent;
      res.objective = lp.evaluate(res.x);
    }
  }

  Bounds root;
  for (const auto& v : lp.vars) {
    root.lower.push_back(v.lower);
    root.upper.push_back(v.upper);
  }
  std::vector<char> active(lp.constraints.size(), 1);
  if (!presolve(lp, root, active)) {
    res.status = res.has_solution ? MilpResult::Status::Optimal : MilpResult::Status::Infeasible;
    res.seconds = elapsed();
    return res;
  }
  LinearProgram reduced;
  reduced.vars = lp.vars;
  for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
    if (active[i]) reduced.constraints.push_back(lp.constraints[i]);
  }

  auto cutoff = [&](double bound) {
    if (!res.has_solution) return false;
    return bound >= res.objective - opt.gap_tol * std::max(1.0, std::abs(res.objective));
  };

  struct Relaxed {
    bool feasible = false;
    double obj = 0;
    std::vector<double> x;
  };
  auto relax = [&](const Bounds& bounds) {
    for (std::size_t j = 0; j < nv; ++j) {
      reduced.vars[j].lower = bounds.lower[j];
      reduced.vars[j].upper = bounds.upper[j];
      if (opt.implicit_binary_upper && lp.vars[j].type == VarType::Binary && !fixed(bounds, j)) {
        reduced.vars[j].upper = std::numeric_limits<double>::infinity();
      }
    }
    LpResult r = solve_lp(reduced);
    ++res.lp_solves;
    Relaxed out;
    if (r.status == LpResult::Status::Infeasible) return out;
    if (r.status != LpResult::Status::Optimal) {
      throw std::runtime_error(r.status == LpResult::Status::Unbounded ? "LP relaxation is unbounded"
                                                                       : "LP iteration limit reached");
    }
    out.feasible = true;
    out.x = std::move(r.x);
    if (opt.implicit_binary_upper) {
      for (std::size_t j = 0; j < nv; ++j) {
        if (lp.vars[j].type == VarType::Binary) out.x[j] = std::min(out.x[j], 1.0);
      }
    }
    out.obj = lp.evaluate(out.x);
    return out;
  };
  auto fractional = [&](const std::vector<double>& x, std::size_t j) {
    double f = x[j] - std::floor(x[j]);
    return std::min(f, 1 - f);
  };

  std::priority_queue<Open, std::vector<Open>, std::greater<>> open;
  std::size_t seq = 0;
  open.push(Open{-std::numeric_limits<double>::infinity(), seq++, root});
  bool timed_out = false;
  while (!open.empty()) {
    if (opt.time_limit_seconds > 0 && elapsed() >= opt.time_limit_seconds) {
      timed_out = true;
      break;
    }
    Open node = open.top();
    open.pop();
    if (cutoff(node.bound)) continue;
    ++res.nodes;
    Relaxed here = relax(node.bounds);
    if (!here.feasible || cutoff(here.obj)) continue;
    const std::vector<double>& x = here.x;

    // Candidates: fractional binaries, or fractional integers when no binary
    // is fractional; most fractional first.
    std::vector<std::size_t> cands;
    for (int pass = 0; pass < 2 && cands.empty(); ++pass) {
      VarType want = pass == 0 ? VarType::Binary : VarType::Integer;
      for (std::size_t j = 0; j < nv; ++j) {
        if (lp.vars[j].type == want && fractional(x, j) > opt.integrality_tol) cands.push_back(j);
      }
    }
    if (cands.empty()) {
      std::vector<double> xi = x;
      for (std::size_t j = 0; j < nv; ++j) {
        if (lp.vars[j].type != VarType::Continuous) xi[j] = std::round(xi[j]);
      }
      double value = lp.evaluate(xi);
      if (!res.has_solution || value < res.objective) {
        res.has_solution = true;
        res.objective = value;
        res.x = std::move(xi);
      }
      continue;
    }
    std::stable_sort(cands.begin(), cands.end(),
                     [&](std::size_t a, std::size_t b) { return fractional(x, a) > fractional(x, b); });

    auto child = [&](std::size_t j, bool up) {
      Open c{here.obj, 0, node.bounds};
      if (up) {
        c.bounds.lower[j] = std::ceil(x[j]);
      } else {
        c.bounds.upper[j] = std::floor(x[j]);
      }
      return c;
    };

    // Strong branching: try both sides of the leading candidates and keep the
    // variable whose weaker side moves the bound most. Children inherit the
    // objective of their trial relaxation.
    std::size_t branch = cands.front();
    double down_obj = here.obj, up_obj = here.obj;
    bool down_ok = true, up_ok = true;
    if (opt.strong_branching_candidates > 1 && cands.size() > 1) {
      double best_score = -1;
      const double eps = 1e-9 * std::max(1.0, std::abs(here.obj));
      std::size_t tried = std::min(cands.size(), opt.strong_branching_candidates);
      for (std::size_t k = 0; k < tried; ++k) {
        if (k > 0 && opt.time_limit_seconds > 0 && elapsed() >= opt.time_limit_seconds) break;
        std::size_t j = cands[k];
        Relaxed d = relax(child(j, false).bounds);
        Relaxed u = relax(child(j, true).bounds);
        double dg = d.feasible ? std::max(d.obj - here.obj, 0.0) : INFINITY;
        double ug = u.feasible ? std::max(u.obj - here.obj, 0.0) : INFINITY;
        double score = std::max(dg, eps) * std::max(ug, eps);
        if (score > best_score) {
          best_score = score;
          branch = j;
          down_ok = d.feasible;
          up_ok = u.feasible;
          down_obj = d.feasible ? d.obj : INFINITY;
          up_obj = u.feasible ? u.obj : INFINITY;
        }
        if (!d.feasible && !u.feasible) break;  // node is infeasible
      }
    }
    Open down = child(branch, false);
    Open up = child(branch, true);
    down.bound = down_obj;
    up.bound = up_obj;
    // Ties in the queue go to the side the relaxation leans towards.
    if (x[branch] - std::floor(x[branch]) >= 0.5) {
      up.seq = seq++;
      down.seq = seq++;
    } else {
      down.seq = seq++;
      up.seq = seq++;
    }
    if (down_ok && !cutoff(down.bound)) open.push(std::move(down));
    if (up_ok && !cutoff(up.bound)) open.push(std::move(up));
  }
  res.seconds = elapsed();
  if (timed_out) {
    res.status = MilpResult::Status::TimeLimit;
  } else {
    res.status = res.has_solution ? MilpResult::Status::Optimal : MilpResult::Status::Infeasible;
  }
  return res;
}

}  // namespace tensorsat
