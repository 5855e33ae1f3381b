#pragma once

#include "mfg/model.hpp"

#include <limits>

namespace mfg {

/// Discrete-time MDP obtained by uniformizing the continuous-time problem at a
/// frozen population distribution. Values of this MDP coincide with the
/// continuous-time discounted values because the rewards are rescaled too.
struct DiscreteMDP {
    double alpha = 0.0;                   // discount ||Q|| / (beta + ||Q||)
    std::vector<Matrix> transition;       // per action, rows are distributions
    Matrix rewards;                       // S x A, rescaled by 1/(beta + ||Q||)
    double uniformization_rate = 0.0;     // ||Q(m)|| = sup_{i,a} -Q_iia(m)
};

inline DiscreteMDP uniformize(const ModelSpec& model, const PopulationDistribution& m) {
    const int S = model.num_states();
    const int A = model.num_actions();
    std::vector<Matrix> rates = evaluate_rates(model, m);

    double norm = 0.0;
    for (int a = 0; a < A; ++a)
        for (int i = 0; i < S; ++i) norm = std::max(norm, -rates[static_cast<std::size_t>(a)](i, i));
    if (norm <= tol::edge)
        throw DegenerateDynamics("all transition rates vanish at this distribution; "
                                 "no uniformization possible");

    DiscreteMDP mdp;
    mdp.uniformization_rate = norm;
    mdp.alpha = norm / (model.beta() + norm);
    mdp.transition.resize(static_cast<std::size_t>(A));
    for (int a = 0; a < A; ++a)
        mdp.transition[static_cast<std::size_t>(a)] =
            rates[static_cast<std::size_t>(a)] / norm + Matrix::Identity(S, S);
    mdp.rewards = evaluate_rewards(model, m) / (model.beta() + norm);
    return mdp;
}

namespace detail {

inline Matrix mix_generator(const std::vector<Matrix>& rates, const StationaryStrategy& pi) {
    const int S = static_cast<int>(rates[0].rows());
    Matrix q = Matrix::Zero(S, S);
    for (int a = 0; a < pi.num_actions(); ++a) {
        const Matrix& slice = rates[static_cast<std::size_t>(a)];
        for (int i = 0; i < S; ++i)
            if (pi(i, a) != 0.0) q.row(i) += pi(i, a) * slice.row(i);
    }
    return q;
}

inline Vector mix_rewards(const Matrix& rewards, const StationaryStrategy& pi) {
    const int S = static_cast<int>(rewards.rows());
    Vector r = Vector::Zero(S);
    for (int i = 0; i < S; ++i) r[i] = rewards.row(i).dot(pi.probs().row(i));
    return r;
}

/// Solve (beta I - Q) V = r. The matrix is strictly row diagonally dominant
/// for conservative Q and beta > 0, so the solve cannot legitimately fail.
inline Vector discounted_solve(double beta, const Matrix& q, const Vector& r) {
    const int S = static_cast<int>(q.rows());
    Matrix lhs = beta * Matrix::Identity(S, S) - q;
    Vector v = lhs.partialPivLu().solve(r);
    if (!v.allFinite())
        throw SingularSystem("discounted linear system produced non-finite values; "
                             "the model is likely malformed");
    return v;
}

}  // namespace detail

/// Expected discounted reward of a fixed stationary strategy:
/// V solves (beta I - Q^pi(m)) V = r^pi(m).
inline Vector policy_value(const ModelSpec& model, const PopulationDistribution& m,
                           const StationaryStrategy& pi) {
    if (pi.num_states() != model.num_states() || pi.num_actions() != model.num_actions())
        throw std::invalid_argument("policy_value: strategy shape mismatch");
    std::vector<Matrix> rates = evaluate_rates(model, m);
    Matrix rewards = evaluate_rewards(model, m);
    return detail::discounted_solve(model.beta(), detail::mix_generator(rates, pi),
                                    detail::mix_rewards(rewards, pi));
}

/// Optimal value vector, computed by policy iteration on the uniformized
/// discrete MDP with exact linear-solve policy evaluation. The deterministic
/// policy space is finite, so iteration terminates; the incumbent action is
/// kept on ties to avoid cycling.
inline Vector solve_optimal_value(const ModelSpec& model, const PopulationDistribution& m,
                                  double tolerance = 1e-10) {
    if (!(tolerance > 0.0)) throw std::invalid_argument("solve_optimal_value: tol must be > 0");
    DiscreteMDP mdp = uniformize(model, m);
    const int S = model.num_states();
    const int A = model.num_actions();

    std::vector<int> policy(static_cast<std::size_t>(S), 0);
    for (int i = 0; i < S; ++i) {
        Eigen::Index best;
        mdp.rewards.row(i).maxCoeff(&best);
        policy[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }

    auto evaluate = [&](const std::vector<int>& d) {
        Matrix p(S, S);
        Vector r(S);
        for (int i = 0; i < S; ++i) {
            p.row(i) = mdp.transition[static_cast<std::size_t>(d[static_cast<std::size_t>(i)])].row(i);
            r[i] = mdp.rewards(i, d[static_cast<std::size_t>(i)]);
        }
        Matrix lhs = Matrix::Identity(S, S) - mdp.alpha * p;
        Vector v = lhs.partialPivLu().solve(r);
        if (!v.allFinite()) throw SingularSystem("policy evaluation failed");
        return v;
    };

    Vector value = evaluate(policy);
    const double improve_band = std::max(1e-14, 1e-4 * tolerance);
    const int max_sweeps = 100000;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool changed = false;
        for (int i = 0; i < S; ++i) {
            int incumbent = policy[static_cast<std::size_t>(i)];
            double incumbent_q =
                mdp.rewards(i, incumbent) +
                mdp.alpha * mdp.transition[static_cast<std::size_t>(incumbent)].row(i).dot(value);
            int best = incumbent;
            double best_q = incumbent_q;
            for (int a = 0; a < A; ++a) {
                if (a == incumbent) continue;
                double q = mdp.rewards(i, a) +
                           mdp.alpha * mdp.transition[static_cast<std::size_t>(a)].row(i).dot(value);
                if (q > best_q + improve_band * (1.0 + std::abs(best_q))) {
                    best = a;
                    best_q = q;
                }
            }
            if (best != incumbent) {
                policy[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        if (!changed) break;
        value = evaluate(policy);
    }
    return value;
}

/// Per-state optimal action sets at a frozen distribution, plus the optimal
/// value. The deterministic optimal strategies are exactly the product
/// O_1 x ... x O_S, which is what `action_sets` represents.
struct OptimalitySummary {
    Vector value;
    std::vector<std::vector<int>> action_sets;  // O_i(m), each sorted ascending

    bool contains(const DeterministicStrategy& d) const {
        if (d.num_states() != static_cast<int>(action_sets.size())) return false;
        for (std::size_t i = 0; i < action_sets.size(); ++i) {
            const auto& set = action_sets[i];
            if (std::find(set.begin(), set.end(), d.actions[i]) == set.end()) return false;
        }
        return true;
    }

    std::size_t num_deterministic() const {
        std::size_t n = 1;
        for (const auto& set : action_sets) n *= set.size();
        return n;
    }
};

/// Enumerate the product of per-state action sets as strategies. `cap` guards
/// against combinatorial blowup; 0 means no cap.
inline std::vector<DeterministicStrategy> enumerate_product(
    const std::vector<std::vector<int>>& action_sets, std::size_t cap = 0) {
    std::size_t total = 1;
    for (const auto& set : action_sets) {
        if (set.empty()) throw std::invalid_argument("enumerate_product: empty action set");
        total *= set.size();
        if (cap != 0 && total > cap)
            throw std::runtime_error("enumerate_product: more than " + std::to_string(cap) +
                                     " tied strategies");
    }
    std::vector<DeterministicStrategy> out;
    out.reserve(total);
    DeterministicStrategy cur;
    cur.actions.assign(action_sets.size(), 0);
    std::vector<std::size_t> pos(action_sets.size(), 0);
    for (std::size_t n = 0; n < total; ++n) {
        for (std::size_t i = 0; i < action_sets.size(); ++i) cur.actions[i] = action_sets[i][pos[i]];
        out.push_back(cur);
        for (std::size_t i = action_sets.size(); i-- > 0;) {
            if (++pos[i] < action_sets[i].size()) break;
            pos[i] = 0;
        }
    }
    return out;
}

inline std::vector<DeterministicStrategy> all_deterministic(int num_states, int num_actions) {
    std::vector<std::vector<int>> sets(static_cast<std::size_t>(num_states));
    for (auto& s : sets) {
        s.resize(static_cast<std::size_t>(num_actions));
        for (int a = 0; a < num_actions; ++a) s[static_cast<std::size_t>(a)] = a;
    }
    return enumerate_product(sets);
}

/// O_i(m): all actions whose Q-value r_ia(m) + sum_j Q_ija(m) V*_j(m) lies
/// within tie_tol * (1 + |max|) of the per-state maximum.
inline OptimalitySummary optimal_action_sets(const ModelSpec& model,
                                             const PopulationDistribution& m,
                                             double tie_tol = 1e-8) {
    if (!(tie_tol > 0.0)) throw std::invalid_argument("optimal_action_sets: tie_tol must be > 0");
    const int S = model.num_states();
    const int A = model.num_actions();

    OptimalitySummary summary;
    summary.value = solve_optimal_value(model, m, std::min(tie_tol, 1e-10));
    std::vector<Matrix> rates = evaluate_rates(model, m);
    Matrix rewards = evaluate_rewards(model, m);

    summary.action_sets.resize(static_cast<std::size_t>(S));
    for (int i = 0; i < S; ++i) {
        Vector qvals(A);
        for (int a = 0; a < A; ++a)
            qvals[a] = rewards(i, a) +
                       rates[static_cast<std::size_t>(a)].row(i).dot(summary.value);
        double top = qvals.maxCoeff();
        double band = tie_tol * (1.0 + std::abs(top));
        for (int a = 0; a < A; ++a)
            if (qvals[a] >= top - band)
                summary.action_sets[static_cast<std::size_t>(i)].push_back(a);
    }
    return summary;
}

}  // namespace mfg
