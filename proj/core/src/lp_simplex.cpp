#include "paratransit/lp_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace paratransit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPivotTolerance = 1e-9;
constexpr double kPrimalTolerance = 1e-7;
constexpr double kDualTolerance = 1e-9;
constexpr double kHarrisTolerance = 1e-9;
constexpr double kDegenerateStep = 1e-12;

enum class VarState : unsigned char { basic, at_lower, at_upper };

struct Entry {
  int row;
  double value;
};

// Working state of one solve. Columns are structural variables, then one
// slack per inequality row, then artificials.
class BoundedSimplex {
 public:
  BoundedSimplex(const LpProblem& problem, const LpOptions& options)
      : problem_(problem), options_(options) {
    m_ = static_cast<int>(problem.rows.size());
    n_struct_ = problem.num_vars();
    build();
  }

  LpSolution run() {
    LpSolution out;
    if (artificial_begin_ < num_cols()) {
      set_phase_one_costs();
      const LpStatus s = iterate();
      if (s != LpStatus::optimal) return finish(s);
      double infeasibility = 0.0;
      for (int j = artificial_begin_; j < num_cols(); ++j) infeasibility += x_[static_cast<std::size_t>(j)];
      if (infeasibility > kPrimalTolerance) return finish(LpStatus::infeasible);
      drive_out_artificials();
    }
    set_phase_two_costs();
    LpStatus s = iterate();
    if (s == LpStatus::optimal) {
      refactor();
      if (max_basic_violation() > kPrimalTolerance) {
        if (options_.verbose) std::cerr << "[lp] primal drift after refactor; continuing\n";
        clamp_basics();
        s = iterate();
      }
    }
    return finish(s);
  }

 private:
  int num_cols() const { return static_cast<int>(cols_.size()); }
  double& binv(int r, int c) { return binv_[static_cast<std::size_t>(r) * static_cast<std::size_t>(m_) + static_cast<std::size_t>(c)]; }

  void build() {
    const auto& p = problem_;
    cols_.assign(static_cast<std::size_t>(n_struct_), {});
    for (int i = 0; i < m_; ++i) {
      for (const auto& t : p.rows[static_cast<std::size_t>(i)].terms) {
        if (t.coef != 0.0) cols_[static_cast<std::size_t>(t.var)].push_back({i, t.coef});
      }
    }
    lo_ = p.lower;
    hi_ = p.upper;
    x_ = p.lower;
    state_.assign(static_cast<std::size_t>(n_struct_), VarState::at_lower);
    rhs_.resize(static_cast<std::size_t>(m_));

    std::vector<double> activity(static_cast<std::size_t>(m_), 0.0);
    for (int j = 0; j < n_struct_; ++j) {
      for (const auto& e : cols_[static_cast<std::size_t>(j)]) {
        activity[static_cast<std::size_t>(e.row)] += e.value * x_[static_cast<std::size_t>(j)];
      }
    }

    basis_.assign(static_cast<std::size_t>(m_), -1);
    std::vector<double> basis_coef(static_cast<std::size_t>(m_), 1.0);
    std::vector<std::pair<int, double>> artificial_rows;  // (row, coefficient)

    for (int i = 0; i < m_; ++i) {
      const auto& row = p.rows[static_cast<std::size_t>(i)];
      rhs_[static_cast<std::size_t>(i)] = row.rhs;
      const double residual = row.rhs - activity[static_cast<std::size_t>(i)];
      if (row.sense == Sense::equal) {
        artificial_rows.push_back({i, residual >= 0.0 ? 1.0 : -1.0});
        continue;
      }
      const double coef = row.sense == Sense::less_equal ? 1.0 : -1.0;
      const int slack = add_column({{i, coef}}, 0.0, kInf);
      const double slack_value = residual * coef;
      if (slack_value >= 0.0) {
        x_[static_cast<std::size_t>(slack)] = slack_value;
        state_[static_cast<std::size_t>(slack)] = VarState::basic;
        basis_[static_cast<std::size_t>(i)] = slack;
        basis_coef[static_cast<std::size_t>(i)] = coef;
      } else {
        artificial_rows.push_back({i, residual >= 0.0 ? 1.0 : -1.0});
      }
    }
    artificial_begin_ = num_cols();
    for (const auto& [row, coef] : artificial_rows) {
      const double residual = rhs_[static_cast<std::size_t>(row)] - activity[static_cast<std::size_t>(row)];
      const int a = add_column({{row, coef}}, 0.0, kInf);
      x_[static_cast<std::size_t>(a)] = std::abs(residual);
      state_[static_cast<std::size_t>(a)] = VarState::basic;
      basis_[static_cast<std::size_t>(row)] = a;
      basis_coef[static_cast<std::size_t>(row)] = coef;
    }

    binv_.assign(static_cast<std::size_t>(m_) * static_cast<std::size_t>(m_), 0.0);
    for (int i = 0; i < m_; ++i) binv(i, i) = 1.0 / basis_coef[static_cast<std::size_t>(i)];
  }

  int add_column(std::vector<Entry> entries, double lo, double hi) {
    cols_.push_back(std::move(entries));
    lo_.push_back(lo);
    hi_.push_back(hi);
    x_.push_back(lo);
    state_.push_back(VarState::at_lower);
    return num_cols() - 1;
  }

  void set_phase_one_costs() {
    cost_.assign(static_cast<std::size_t>(num_cols()), 0.0);
    for (int j = artificial_begin_; j < num_cols(); ++j) cost_[static_cast<std::size_t>(j)] = 1.0;
  }

  void set_phase_two_costs() {
    cost_.assign(static_cast<std::size_t>(num_cols()), 0.0);
    for (int j = 0; j < n_struct_; ++j) cost_[static_cast<std::size_t>(j)] = problem_.objective[static_cast<std::size_t>(j)];
    for (int j = artificial_begin_; j < num_cols(); ++j) {
      hi_[static_cast<std::size_t>(j)] = 0.0;
      if (state_[static_cast<std::size_t>(j)] != VarState::basic) {
        x_[static_cast<std::size_t>(j)] = 0.0;
        state_[static_cast<std::size_t>(j)] = VarState::at_lower;
      }
    }
  }

  void compute_column(int j, std::vector<double>& alpha) {
    alpha.assign(static_cast<std::size_t>(m_), 0.0);
    for (const auto& e : cols_[static_cast<std::size_t>(j)]) {
      for (int r = 0; r < m_; ++r) alpha[static_cast<std::size_t>(r)] += binv(r, e.row) * e.value;
    }
  }

  void pivot(int row, int entering, const std::vector<double>& alpha) {
    const double inv = 1.0 / alpha[static_cast<std::size_t>(row)];
    double* prow = &binv(row, 0);
    for (int c = 0; c < m_; ++c) prow[c] *= inv;
    for (int r = 0; r < m_; ++r) {
      if (r == row) continue;
      const double f = alpha[static_cast<std::size_t>(r)];
      if (f == 0.0) continue;
      double* dst = &binv(r, 0);
      for (int c = 0; c < m_; ++c) dst[c] -= f * prow[c];
    }
    basis_[static_cast<std::size_t>(row)] = entering;
    state_[static_cast<std::size_t>(entering)] = VarState::basic;
  }

  // Replaces binv_ by a fresh inverse of the current basis and recomputes
  // basic values from the nonbasic ones.
  void refactor() {
    const auto mm = static_cast<std::size_t>(m_);
    std::vector<double> b(mm * mm, 0.0);
    for (int r = 0; r < m_; ++r) {
      for (const auto& e : cols_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])]) {
        b[static_cast<std::size_t>(e.row) * mm + static_cast<std::size_t>(r)] = e.value;
      }
    }
    std::vector<double> inv(mm * mm, 0.0);
    for (std::size_t i = 0; i < mm; ++i) inv[i * mm + i] = 1.0;
    for (std::size_t c = 0; c < mm; ++c) {
      std::size_t best = c;
      for (std::size_t r = c + 1; r < mm; ++r) {
        if (std::abs(b[r * mm + c]) > std::abs(b[best * mm + c])) best = r;
      }
      if (std::abs(b[best * mm + c]) < 1e-12) return;  // keep the product-form inverse
      if (best != c) {
        std::swap_ranges(b.begin() + static_cast<long>(best * mm), b.begin() + static_cast<long>((best + 1) * mm),
                         b.begin() + static_cast<long>(c * mm));
        std::swap_ranges(inv.begin() + static_cast<long>(best * mm), inv.begin() + static_cast<long>((best + 1) * mm),
                         inv.begin() + static_cast<long>(c * mm));
      }
      const double p = 1.0 / b[c * mm + c];
      for (std::size_t k = 0; k < mm; ++k) {
        b[c * mm + k] *= p;
        inv[c * mm + k] *= p;
      }
      for (std::size_t r = 0; r < mm; ++r) {
        if (r == c) continue;
        const double f = b[r * mm + c];
        if (f == 0.0) continue;
        for (std::size_t k = 0; k < mm; ++k) {
          b[r * mm + k] -= f * b[c * mm + k];
          inv[r * mm + k] -= f * inv[c * mm + k];
        }
      }
    }
    binv_ = std::move(inv);

    std::vector<double> residual = rhs_;
    for (int j = 0; j < num_cols(); ++j) {
      if (state_[static_cast<std::size_t>(j)] == VarState::basic) continue;
      const double xj = x_[static_cast<std::size_t>(j)];
      if (xj == 0.0) continue;
      for (const auto& e : cols_[static_cast<std::size_t>(j)]) residual[static_cast<std::size_t>(e.row)] -= e.value * xj;
    }
    for (int r = 0; r < m_; ++r) {
      double v = 0.0;
      for (int k = 0; k < m_; ++k) v += binv(r, k) * residual[static_cast<std::size_t>(k)];
      x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])] = v;
    }
  }

  double max_basic_violation() const {
    double worst = 0.0;
    for (int r = 0; r < m_; ++r) {
      const auto j = static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)]);
      worst = std::max({worst, lo_[j] - x_[j], x_[j] - hi_[j]});
    }
    return worst;
  }

  void clamp_basics() {
    for (int r = 0; r < m_; ++r) {
      const auto j = static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)]);
      x_[j] = std::clamp(x_[j], lo_[j], hi_[j]);
    }
  }

  // Pivots zero-valued basic artificials out of the basis where a
  // non-artificial column can take their place.
  void drive_out_artificials() {
    std::vector<double> alpha;
    for (int r = 0; r < m_; ++r) {
      if (basis_[static_cast<std::size_t>(r)] < artificial_begin_) continue;
      int best = -1;
      double best_mag = 1e-7;
      for (int j = 0; j < artificial_begin_; ++j) {
        if (state_[static_cast<std::size_t>(j)] == VarState::basic) continue;
        double rho = 0.0;
        for (const auto& e : cols_[static_cast<std::size_t>(j)]) rho += binv(r, e.row) * e.value;
        if (std::abs(rho) > best_mag) {
          best_mag = std::abs(rho);
          best = j;
        }
      }
      if (best < 0) continue;  // redundant row; artificial stays basic, fixed at zero
      compute_column(best, alpha);
      const int leaving = basis_[static_cast<std::size_t>(r)];
      pivot(r, best, alpha);
      x_[static_cast<std::size_t>(leaving)] = 0.0;
      state_[static_cast<std::size_t>(leaving)] = VarState::at_lower;
      ++iterations_;
    }
    refactor();
  }

  LpStatus iterate() {
    std::vector<double> y(static_cast<std::size_t>(m_));
    std::vector<double> alpha;
    int stall = 0;
    bool bland = false;
    long since_refactor = 0;

    while (true) {
      if (iterations_ >= options_.max_iterations) return LpStatus::iteration_limit;
      if (options_.deadline && std::chrono::steady_clock::now() >= *options_.deadline) {
        return LpStatus::time_limit;
      }
      if (since_refactor >= options_.refactor_every) {
        refactor();
        clamp_basics();
        since_refactor = 0;
      }

      std::fill(y.begin(), y.end(), 0.0);
      for (int r = 0; r < m_; ++r) {
        const double cb = cost_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])];
        if (cb == 0.0) continue;
        const double* row = &binv(r, 0);
        for (int k = 0; k < m_; ++k) y[static_cast<std::size_t>(k)] += cb * row[k];
      }

      int entering = -1;
      double best_score = 0.0;
      double entering_d = 0.0;
      for (int j = 0; j < num_cols(); ++j) {
        const auto ju = static_cast<std::size_t>(j);
        const VarState st = state_[ju];
        if (st == VarState::basic || hi_[ju] - lo_[ju] <= 0.0) continue;
        double d = cost_[ju];
        for (const auto& e : cols_[ju]) d -= y[static_cast<std::size_t>(e.row)] * e.value;
        const bool eligible = (st == VarState::at_lower && d < -kDualTolerance) ||
                              (st == VarState::at_upper && d > kDualTolerance);
        if (!eligible) continue;
        if (bland) {
          entering = j;
          entering_d = d;
          break;
        }
        if (std::abs(d) > best_score) {
          best_score = std::abs(d);
          entering = j;
          entering_d = d;
        }
      }
      if (entering < 0) return LpStatus::optimal;

      const auto q = static_cast<std::size_t>(entering);
      const double dir = state_[q] == VarState::at_lower ? 1.0 : -1.0;
      compute_column(entering, alpha);

      // Ratio test. Basic r moves at rate -dir * alpha_r per unit step.
      int leave_row = -1;
      double step = kInf;
      bool leave_to_upper = false;
      if (!bland) {
        double relaxed = kInf;
        for (int r = 0; r < m_; ++r) {
          const double rate = -dir * alpha[static_cast<std::size_t>(r)];
          if (std::abs(rate) <= kPivotTolerance) continue;
          const auto b = static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)]);
          const double lim = rate < 0.0 ? (x_[b] - lo_[b] + kHarrisTolerance) / -rate
                                        : (hi_[b] - x_[b] + kHarrisTolerance) / rate;
          relaxed = std::min(relaxed, lim);
        }
        double best_alpha = 0.0;
        for (int r = 0; r < m_; ++r) {
          const double rate = -dir * alpha[static_cast<std::size_t>(r)];
          if (std::abs(rate) <= kPivotTolerance) continue;
          const auto b = static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)]);
          const double lim = rate < 0.0 ? (x_[b] - lo_[b]) / -rate : (hi_[b] - x_[b]) / rate;
          if (lim <= relaxed && std::abs(rate) > best_alpha) {
            best_alpha = std::abs(rate);
            leave_row = r;
            step = std::max(lim, 0.0);
            leave_to_upper = rate > 0.0;
          }
        }
      } else {
        for (int r = 0; r < m_; ++r) {
          const double rate = -dir * alpha[static_cast<std::size_t>(r)];
          if (std::abs(rate) <= kPivotTolerance) continue;
          const auto b = static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)]);
          const double lim = std::max(0.0, rate < 0.0 ? (x_[b] - lo_[b]) / -rate : (hi_[b] - x_[b]) / rate);
          const bool better = lim < step - kDegenerateStep ||
                              (lim <= step + kDegenerateStep && leave_row >= 0 &&
                               basis_[static_cast<std::size_t>(r)] < basis_[static_cast<std::size_t>(leave_row)]);
          if (leave_row < 0 || better) {
            leave_row = r;
            step = lim;
            leave_to_upper = rate > 0.0;
          }
        }
      }

      const double range = hi_[q] - lo_[q];
      const bool flip = range <= step;
      if (flip) step = range;
      if (!std::isfinite(step)) throw std::logic_error("solve_lp: unbounded direction in a bounded LP");

      for (int r = 0; r < m_; ++r) {
        const double a = alpha[static_cast<std::size_t>(r)];
        if (a != 0.0) x_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(r)])] -= dir * step * a;
      }
      ++iterations_;
      ++since_refactor;

      if (flip) {
        state_[q] = dir > 0 ? VarState::at_upper : VarState::at_lower;
        x_[q] = dir > 0 ? hi_[q] : lo_[q];
      } else {
        x_[q] += dir * step;
        const auto leaving = static_cast<std::size_t>(basis_[static_cast<std::size_t>(leave_row)]);
        pivot(leave_row, entering, alpha);
        state_[leaving] = leave_to_upper ? VarState::at_upper : VarState::at_lower;
        x_[leaving] = leave_to_upper ? hi_[leaving] : lo_[leaving];
      }

      if (step * std::abs(entering_d) > kDegenerateStep) {
        stall = 0;
        bland = false;
      } else if (++stall >= options_.bland_after) {
        if (!bland && options_.verbose) std::cerr << "[lp] stalled, switching to Bland's rule\n";
        bland = true;
      }
      if (options_.verbose && iterations_ % 1000 == 0) {
        std::cerr << "[lp] it=" << iterations_ << " m=" << m_ << " cols=" << num_cols()
                  << (bland ? " bland" : "") << "\n";
      }
    }
  }

  LpSolution finish(LpStatus status) {
    LpSolution out;
    out.status = status;
    out.iterations = iterations_;
    out.values.assign(x_.begin(), x_.begin() + n_struct_);
    for (int j = 0; j < n_struct_; ++j) {
      auto& v = out.values[static_cast<std::size_t>(j)];
      v = std::clamp(v, problem_.lower[static_cast<std::size_t>(j)], problem_.upper[static_cast<std::size_t>(j)]);
      out.objective += problem_.objective[static_cast<std::size_t>(j)] * v;
    }
    return out;
  }

  const LpProblem& problem_;
  const LpOptions& options_;
  int m_ = 0;
  int n_struct_ = 0;
  int artificial_begin_ = 0;
  long iterations_ = 0;

  std::vector<std::vector<Entry>> cols_;
  std::vector<double> lo_, hi_, x_, cost_, rhs_;
  std::vector<VarState> state_;
  std::vector<int> basis_;
  std::vector<double> binv_;
};

}  // namespace

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::iteration_limit: return "iteration-limit";
    case LpStatus::time_limit: return "time-limit";
  }
  return "unknown";
}

LpProblem relax(const MilpModel& model, const std::vector<BoundFixing>& fixings) {
  LpProblem p;
  p.objective = model.objective();
  p.rows = model.rows();
  p.lower = model.lower();
  p.upper = model.upper();
  for (const auto& f : fixings) {
    if (!model.is_arc_var(f.var)) {
      throw std::invalid_argument("relax: fixing on non-arc variable " + model.var_name(f.var));
    }
    auto& lo = p.lower[static_cast<std::size_t>(f.var)];
    auto& hi = p.upper[static_cast<std::size_t>(f.var)];
    lo = std::max(lo, f.lower);
    hi = std::min(hi, f.upper);
    if (lo > hi) p.trivially_infeasible = true;
  }
  return p;
}

LpSolution solve_lp(const LpProblem& problem, const LpOptions& options) {
  const auto n = static_cast<std::size_t>(problem.num_vars());
  if (problem.lower.size() != n || problem.upper.size() != n) {
    throw std::invalid_argument("solve_lp: bound vectors do not match the objective length");
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!std::isfinite(problem.lower[j]) || !std::isfinite(problem.upper[j])) {
      throw std::invalid_argument("solve_lp: variable " + std::to_string(j) + " has an infinite bound");
    }
  }
  for (const auto& row : problem.rows) {
    for (const auto& t : row.terms) {
      if (t.var < 0 || static_cast<std::size_t>(t.var) >= n) {
        throw std::invalid_argument("solve_lp: row references unknown variable " + std::to_string(t.var));
      }
    }
  }
  if (problem.trivially_infeasible) {
    LpSolution s;
    s.status = LpStatus::infeasible;
    return s;
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (problem.lower[j] > problem.upper[j]) {
      LpSolution s;
      s.status = LpStatus::infeasible;
      return s;
    }
  }
  BoundedSimplex engine(problem, options);
  return engine.run();
}

}  // namespace paratransit
