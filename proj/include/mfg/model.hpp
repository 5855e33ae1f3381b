#pragma once

#include "mfg/polynomial.hpp"
#include "mfg/types.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace mfg {

/// Quadratic-below-delta regularization of the identity; keeps log rewards
/// finite on the boundary of the simplex (f_delta(0) = delta/2 > 0).
inline double f_delta(double y, double delta) {
    if (y <= delta) return y * y / (2.0 * delta) + delta / 2.0;
    return y;
}

struct RewardTerm {
    enum class Kind { poly, reglog };

    Kind kind = Kind::poly;
    Polynomial poly;                         // kind == poly
    double coef = 0.0;                       // kind == reglog: coef * ln(f_delta(m_state)) + offset
    int state = 0;
    double offset = 0.0;

    static RewardTerm polynomial(Polynomial p) {
        RewardTerm t;
        t.kind = Kind::poly;
        t.poly = std::move(p);
        return t;
    }
    static RewardTerm reglog(int num_states, double coef, int state, double offset) {
        if (state < 0 || state >= num_states)
            throw MalformedModel("reglog term references state index " + std::to_string(state + 1) +
                                 " outside 1.." + std::to_string(num_states));
        RewardTerm t;
        t.kind = Kind::reglog;
        t.coef = coef;
        t.state = state;
        t.offset = offset;
        return t;
    }
};

/// A finite state/action game with population-dependent transition rates and
/// rewards. Rates are polynomials in m; rewards are sums of polynomial and
/// regularized-log terms. Immutable in spirit: build once, then evaluate.
class ModelSpec {
public:
    ModelSpec(int num_states, int num_actions, double beta, double delta = 1e-6)
        : S_(num_states), A_(num_actions), beta_(beta), delta_(delta) {
        if (S_ <= 1) throw MalformedModel("model requires at least two states");
        if (A_ < 1) throw MalformedModel("model requires at least one action");
        if (!(beta_ > 0.0 && beta_ < 1.0))
            throw MalformedModel("discount beta must lie in (0,1)");
        if (!(delta_ > 0.0)) throw MalformedModel("regularization delta must be positive");
        rates_.assign(static_cast<std::size_t>(S_) * S_ * A_, Polynomial(S_));
        rewards_.resize(static_cast<std::size_t>(S_) * A_);
    }

    int num_states() const { return S_; }
    int num_actions() const { return A_; }
    double beta() const { return beta_; }
    double delta() const { return delta_; }

    void set_rate(int i, int j, int a, Polynomial p) {
        check_indices(i, j, a);
        if (p.num_vars() != S_)
            throw MalformedModel("rate polynomial arity mismatch at (" + idx(i, j, a) + ")");
        rates_[rate_index(i, j, a)] = std::move(p);
    }

    const Polynomial& rate(int i, int j, int a) const {
        check_indices(i, j, a);
        return rates_[rate_index(i, j, a)];
    }

    /// Set the diagonal entry (i,i,a) to minus the sum of the off-diagonal
    /// polynomials in row i, making the row conservative identically in m.
    void complete_diagonal(int i, int a) {
        Polynomial diag(S_);
        for (int j = 0; j < S_; ++j)
            if (j != i) diag += -rates_[rate_index(i, j, a)];
        rates_[rate_index(i, i, a)] = std::move(diag);
        completed_diagonals_.emplace_back(i, a);
    }

    const std::vector<std::pair<int, int>>& completed_diagonals() const {
        return completed_diagonals_;
    }

    void add_reward_term(int i, int a, RewardTerm term) {
        check_state_action(i, a);
        if (term.kind == RewardTerm::Kind::poly && term.poly.num_vars() != S_)
            throw MalformedModel("reward polynomial arity mismatch at (" + std::to_string(i + 1) +
                                 "," + std::to_string(a + 1) + ")");
        if (term.kind == RewardTerm::Kind::reglog && (term.state < 0 || term.state >= S_))
            throw MalformedModel("reglog term references out-of-range state");
        rewards_[reward_index(i, a)].push_back(std::move(term));
    }

    const std::vector<RewardTerm>& reward_terms(int i, int a) const {
        check_state_action(i, a);
        return rewards_[reward_index(i, a)];
    }

    bool constant_dynamics() const {
        for (const auto& p : rates_)
            if (!p.is_constant()) return false;
        return true;
    }

private:
    void check_indices(int i, int j, int a) const {
        if (i < 0 || i >= S_ || j < 0 || j >= S_ || a < 0 || a >= A_)
            throw MalformedModel("rate index (" + idx(i, j, a) + ") out of range");
    }
    void check_state_action(int i, int a) const {
        if (i < 0 || i >= S_ || a < 0 || a >= A_)
            throw MalformedModel("reward index (" + std::to_string(i + 1) + "," +
                                 std::to_string(a + 1) + ") out of range");
    }
    static std::string idx(int i, int j, int a) {
        return std::to_string(i + 1) + "," + std::to_string(j + 1) + "," + std::to_string(a + 1);
    }
    std::size_t rate_index(int i, int j, int a) const {
        return (static_cast<std::size_t>(i) * S_ + j) * A_ + a;
    }
    std::size_t reward_index(int i, int a) const {
        return static_cast<std::size_t>(i) * A_ + a;
    }

    int S_;
    int A_;
    double beta_;
    double delta_;
    std::vector<Polynomial> rates_;
    std::vector<std::vector<RewardTerm>> rewards_;
    std::vector<std::pair<int, int>> completed_diagonals_;
};

/// Q_{ija}(m) for all (i,j,a), one S-by-S matrix per action.
inline std::vector<Matrix> evaluate_rates(const ModelSpec& model,
                                          const PopulationDistribution& m) {
    const int S = model.num_states();
    std::vector<Matrix> slices(static_cast<std::size_t>(model.num_actions()));
    for (int a = 0; a < model.num_actions(); ++a) {
        Matrix& q = slices[static_cast<std::size_t>(a)];
        q.resize(S, S);
        for (int i = 0; i < S; ++i)
            for (int j = 0; j < S; ++j) q(i, j) = model.rate(i, j, a).eval(m.probs());
    }
    return slices;
}

/// r_{ia}(m); log terms go through f_delta, so the result is finite on all of
/// the simplex including its boundary.
inline Matrix evaluate_rewards(const ModelSpec& model, const PopulationDistribution& m) {
    const int S = model.num_states();
    const int A = model.num_actions();
    Matrix r = Matrix::Zero(S, A);
    for (int i = 0; i < S; ++i)
        for (int a = 0; a < A; ++a)
            for (const auto& t : model.reward_terms(i, a)) {
                if (t.kind == RewardTerm::Kind::poly) {
                    r(i, a) += t.poly.eval(m.probs());
                } else {
                    r(i, a) += t.coef * std::log(f_delta(m[t.state], model.delta())) + t.offset;
                }
            }
    return r;
}

struct ValidationIssue {
    std::string where;
    double magnitude = 0.0;
};

struct ValidationReport {
    std::vector<ValidationIssue> violations;
    double worst = 0.0;
    std::string worst_location;
    std::vector<std::pair<int, int>> completed_diagonals;  // (state, action), 0-based
    int samples_checked = 0;

    bool passed() const { return violations.empty(); }
};

/// Samples the simplex (all vertices, the barycenter, then random points) and
/// checks that every action slice is a conservative generator: off-diagonals
/// nonnegative, rows summing to zero. Violations are reported, not thrown.
inline ValidationReport validate_model(const ModelSpec& model, int num_samples,
                                       unsigned long long seed = 0) {
    if (num_samples < 1) throw std::invalid_argument("validate_model: num_samples must be >= 1");
    const int S = model.num_states();
    ValidationReport report;
    report.completed_diagonals = model.completed_diagonals();

    std::vector<std::pair<Vector, std::string>> points;
    for (int k = 0; k < S; ++k)
        points.emplace_back(simplex_vertex(S, k), "vertex e_" + std::to_string(k + 1));
    points.emplace_back(Vector::Constant(S, 1.0 / S), "barycenter");
    std::mt19937_64 rng(seed);
    while (static_cast<int>(points.size()) < std::max(num_samples, S + 1))
        points.emplace_back(random_simplex_point(rng, S),
                            "sample " + std::to_string(points.size() - S));

    auto record = [&](double magnitude, const std::string& where) {
        report.violations.push_back({where, magnitude});
        if (magnitude > report.worst) {
            report.worst = magnitude;
            report.worst_location = where;
        }
    };

    for (const auto& [mvec, label] : points) {
        PopulationDistribution m(mvec);
        std::vector<Matrix> slices;
        try {
            slices = evaluate_rates(model, m);
        } catch (const MalformedModel& e) {
            record(std::numeric_limits<double>::infinity(), std::string(e.what()));
            return report;
        }
        for (int a = 0; a < model.num_actions(); ++a) {
            const Matrix& q = slices[static_cast<std::size_t>(a)];
            for (int i = 0; i < S; ++i) {
                double row_sum = q.row(i).sum();
                if (std::abs(row_sum) > tol::row_sum) {
                    std::ostringstream os;
                    os << "row sum " << row_sum << " at state " << i + 1 << ", action " << a + 1
                       << ", " << label;
                    record(std::abs(row_sum), os.str());
                }
                for (int j = 0; j < S; ++j) {
                    if (i != j && q(i, j) < tol::off_diag) {
                        std::ostringstream os;
                        os << "negative off-diagonal at " << label << " (entry " << i + 1 << ","
                           << j + 1 << ", action " << a + 1 << ")";
                        record(-q(i, j), os.str());
                    }
                }
            }
        }
        ++report.samples_checked;
    }
    return report;
}

}  // namespace mfg
