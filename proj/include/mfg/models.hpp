#pragma once

#include "mfg/equilibrium.hpp"
#include "mfg/model.hpp"

namespace mfg {

// ---------------------------------------------------------------------------
// Consumer choice model: two providers, utility ln(m_i) + s_i, switching cost
// c, constant switch rates (b when changing, epsilon drift when staying).
// Actions: 0 = change, 1 = stay. Constant dynamics.
// ---------------------------------------------------------------------------

struct ConsumerParams {
    double b = 1.0;
    double epsilon = 0.2;
    double beta = 0.5;
    double c = 0.5;
    double s1 = 0.0;
    double s2 = 0.0;
    double delta = 1e-6;
};

inline constexpr int kChange = 0;
inline constexpr int kStay = 1;

inline ModelSpec consumer_model(const ConsumerParams& p) {
    if (!(p.epsilon > 0.0 && p.epsilon < p.b))
        throw InvalidParams("consumer model requires 0 < epsilon < b");
    if (!(p.c > 0.0)) throw InvalidParams("consumer model requires c > 0");
    if (!(p.beta > 0.0 && p.beta < 1.0))
        throw InvalidParams("consumer model requires beta in (0,1)");
    if (!(p.delta > 0.0)) throw InvalidParams("consumer model requires delta > 0");

    ModelSpec model(2, 2, p.beta, p.delta);
    auto constant = [](double v) { return Polynomial::constant(2, v); };
    for (int i = 0; i < 2; ++i) {
        int j = 1 - i;
        model.set_rate(i, j, kChange, constant(p.b));
        model.set_rate(i, i, kChange, constant(-p.b));
        model.set_rate(i, j, kStay, constant(p.epsilon));
        model.set_rate(i, i, kStay, constant(-p.epsilon));
    }
    const double s[2] = {p.s1, p.s2};
    for (int i = 0; i < 2; ++i) {
        model.add_reward_term(i, kChange, RewardTerm::reglog(2, 1.0, i, s[i] - p.c));
        model.add_reward_term(i, kStay, RewardTerm::reglog(2, 1.0, i, s[i]));
    }
    return model;
}

struct ConsumerEquilibrium {
    Vector m;
    Matrix pi;
    EquilibriumKind kind;
};

struct ConsumerReference {
    double d1 = 0.0;  // change optimal in state 1 iff m1 <= d1
    double d2 = 0.0;  // change optimal in state 2 iff m1 >= d2
    int case_label = 0;  // 1..8
    std::vector<ConsumerEquilibrium> equilibria;  // sorted by m1
};

/// Closed-form solution of the consumer model: logistic thresholds d1 < d2,
/// the case classification, and the exact equilibrium list with mixing
/// probabilities from the balance equation. Threshold formulas use the
/// unregularized log, valid for small delta.
inline ConsumerReference consumer_reference(const ConsumerParams& p) {
    if (!(p.epsilon > 0.0 && p.epsilon < p.b) || !(p.c > 0.0))
        throw InvalidParams("consumer_reference: invalid parameters");
    ConsumerReference ref;
    const double k = p.c * (p.beta + 2.0 * p.epsilon) / (p.b - p.epsilon);
    auto sigmoid = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    ref.d1 = sigmoid(-k - p.s1 + p.s2);
    ref.d2 = sigmoid(k - p.s1 + p.s2);

    const double lo = p.epsilon / (p.b + p.epsilon);
    const double hi = p.b / (p.b + p.epsilon);
    const int r1 = ref.d1 < lo ? 0 : (ref.d1 <= 0.5 ? 1 : 2);
    const int r2 = ref.d2 < 0.5 ? 0 : (ref.d2 <= hi ? 1 : 2);
    static const int case_table[3][3] = {{1, 2, 3}, {4, 5, 6}, {0, 7, 8}};
    ref.case_label = case_table[r1][r2];
    if (ref.case_label == 0)
        throw std::logic_error("consumer_reference: d1 > 1/2 with d2 < 1/2 cannot occur");

    auto pure_pi = [](int a1, int a2) {
        Matrix pi = Matrix::Zero(2, 2);
        pi(0, a1) = 1.0;
        pi(1, a2) = 1.0;
        return pi;
    };
    auto point = [](double m1) { return (Vector(2) << m1, 1.0 - m1).finished(); };

    if (ref.d1 >= lo)
        ref.equilibria.push_back({point(lo), pure_pi(kChange, kStay), EquilibriumKind::pure});
    if (ref.d1 <= 0.5 && ref.d2 >= 0.5)
        ref.equilibria.push_back({point(0.5), pure_pi(kStay, kStay), EquilibriumKind::pure});
    if (ref.d2 <= hi)
        ref.equilibria.push_back({point(hi), pure_pi(kStay, kChange), EquilibriumKind::pure});

    // Mixing probability that balances flow when only state `which` randomizes:
    // m_w (pi_c b + (1-pi_c) eps) = m_other * eps.
    auto mixing = [&](double m_w, double m_other) {
        return p.epsilon * (m_other / m_w - 1.0) / (p.b - p.epsilon);
    };
    const double coincide = 1e-12;
    if (ref.d1 >= lo && ref.d1 <= 0.5 && ref.d1 > lo + coincide && ref.d1 < 0.5 - coincide) {
        double pc = mixing(ref.d1, 1.0 - ref.d1);
        Matrix pi = Matrix::Zero(2, 2);
        pi(0, kChange) = pc;
        pi(0, kStay) = 1.0 - pc;
        pi(1, kStay) = 1.0;
        ref.equilibria.push_back({point(ref.d1), pi, EquilibriumKind::mixed});
    }
    if (ref.d2 >= 0.5 && ref.d2 <= hi && ref.d2 > 0.5 + coincide && ref.d2 < hi - coincide) {
        double pc = mixing(1.0 - ref.d2, ref.d2);
        Matrix pi = Matrix::Zero(2, 2);
        pi(0, kStay) = 1.0;
        pi(1, kChange) = pc;
        pi(1, kStay) = 1.0 - pc;
        ref.equilibria.push_back({point(ref.d2), pi, EquilibriumKind::mixed});
    }
    std::sort(ref.equilibria.begin(), ref.equilibria.end(),
              [](const ConsumerEquilibrium& a, const ConsumerEquilibrium& b) {
                  return a.m[0] < b.m[0];
              });
    return ref;
}

// ---------------------------------------------------------------------------
// Corruption model: states C (corrupt), H (honest), R (reserved), in this
// order. Actions: 0 = change, 1 = stay; state R is uncontrolled (identical
// rows under both actions). Conviction rate grows with the honest share,
// infection with the corrupt share.
// ---------------------------------------------------------------------------

struct CorruptionParams {
    double b = 0.3;
    double q_inf = 1.0;
    double q_soc = 2.0;
    double r = 0.5;
    double beta = 0.3;
};

inline constexpr int kStateC = 0;
inline constexpr int kStateH = 1;
inline constexpr int kStateR = 2;

inline ModelSpec corruption_model(const CorruptionParams& p) {
    if (!(p.b > 0.0 && p.q_inf > 0.0 && p.q_soc > 0.0 && p.r > 0.0))
        throw InvalidParams("corruption model requires b, q_inf, q_soc, r > 0");
    if (!(p.beta > 0.0 && p.beta < 1.0))
        throw InvalidParams("corruption model requires beta in (0,1)");

    ModelSpec model(3, 2, p.beta);
    auto constant = [](double v) { return Polynomial::constant(3, v); };
    auto times_mH = [&](double coef) { return Polynomial::linear(3, kStateH, coef); };
    auto times_mC = [&](double coef) { return Polynomial::linear(3, kStateC, coef); };

    // change: C -> H at b plus conviction; H -> C at b plus infection
    model.set_rate(kStateC, kStateH, kChange, constant(p.b));
    model.set_rate(kStateC, kStateR, kChange, times_mH(p.q_soc));
    model.complete_diagonal(kStateC, kChange);
    {
        Polynomial hc = constant(p.b);
        hc += times_mC(p.q_inf);
        model.set_rate(kStateH, kStateC, kChange, std::move(hc));
    }
    model.complete_diagonal(kStateH, kChange);

    // stay: conviction and infection still act
    model.set_rate(kStateC, kStateR, kStay, times_mH(p.q_soc));
    model.complete_diagonal(kStateC, kStay);
    model.set_rate(kStateH, kStateC, kStay, times_mC(p.q_inf));
    model.complete_diagonal(kStateH, kStay);

    // recovery is the same under both actions
    for (int a : {kChange, kStay}) {
        model.set_rate(kStateR, kStateH, a, constant(p.r));
        model.set_rate(kStateR, kStateR, a, constant(-p.r));
    }

    const double wage[3] = {10.0, 5.0, 0.0};
    for (int i = 0; i < 3; ++i)
        for (int a : {kChange, kStay})
            model.add_reward_term(i, a, RewardTerm::polynomial(Polynomial::constant(3, wage[i])));
    return model;
}

struct CorruptionReference {
    double threshold = 0.0;  // change in C optimal iff m_H > threshold

    double r = 0.0, q_soc = 0.0;

    double manifold_m_H(double m_C) const { return r * (1.0 - m_C) / (q_soc * m_C + r); }
    Vector manifold_point(double m_C) const {
        double mh = manifold_m_H(m_C);
        return (Vector(3) << m_C, mh, 1.0 - m_C - mh).finished();
    }
    /// Residual of the stationarity manifold at an arbitrary distribution.
    double manifold_residual(const Vector& m) const {
        return m[kStateH] - manifold_m_H(m[kStateC]);
    }

    struct Candidate {
        std::string label;
        bool defined = false;         // false when a denominator vanishes
        bool inside_simplex = false;
        bool optimal = false;         // candidate sits in its strategy's optimality region
        Vector m;
        DeterministicStrategy d;
    };
    std::vector<Candidate> pure_candidates;

    struct MixedCandidate {
        bool exists = false;     // tie set intersects the simplex and m_C >= 0
        bool feasible = false;   // some (pi_C, pi_H) in [0,1]^2 balances the flows
        Vector m;
        double pi_c_change = 0.0;
        double pi_h_change = 0.0;
    } mixed;
};

/// Closed-form relations for the corruption model: the optimality threshold
/// in m_H, the one-parameter stationarity manifold, the pure fixed-point
/// candidates with their optimality tests, and the tie-manifold candidate
/// with its strategy feasibility condition.
inline CorruptionReference corruption_reference(const CorruptionParams& p) {
    if (!(p.b > 0.0 && p.q_inf > 0.0 && p.q_soc > 0.0 && p.r > 0.0))
        throw InvalidParams("corruption_reference: invalid parameters");
    CorruptionReference ref;
    ref.r = p.r;
    ref.q_soc = p.q_soc;
    ref.threshold = (p.r + p.beta) / p.q_soc;

    auto in01 = [](double x) { return x >= -1e-12 && x <= 1.0 + 1e-12; };
    auto stay_change = DeterministicStrategy{{kStay, kChange, kStay}};
    auto change_stay = DeterministicStrategy{{kChange, kStay, kStay}};

    {
        CorruptionReference::Candidate cand;
        cand.label = "stay-change with m_H = 0";
        cand.defined = true;
        cand.m = (Vector(3) << 1.0, 0.0, 0.0).finished();
        cand.inside_simplex = true;
        cand.optimal = 0.0 <= ref.threshold;  // m_H = 0 is below or on the tie
        cand.d = stay_change;
        ref.pure_candidates.push_back(std::move(cand));
    }
    {
        CorruptionReference::Candidate cand;
        cand.label = "stay-change with m_C = b/(q_soc - q_inf)";
        cand.defined = std::abs(p.q_soc - p.q_inf) > 1e-14;
        cand.d = stay_change;
        if (cand.defined) {
            double mc = p.b / (p.q_soc - p.q_inf);
            cand.inside_simplex = in01(mc);
            if (cand.inside_simplex) {
                cand.m = ref.manifold_point(mc);
                cand.optimal = cand.m[kStateH] <= ref.threshold + 1e-12;
            }
        }
        ref.pure_candidates.push_back(std::move(cand));
    }
    {
        CorruptionReference::Candidate cand;
        cand.label = "change-stay with m_C = 0";
        cand.defined = true;
        cand.m = (Vector(3) << 0.0, 1.0, 0.0).finished();
        cand.inside_simplex = true;
        cand.optimal = 1.0 >= ref.threshold - 1e-12;
        cand.d = change_stay;
        ref.pure_candidates.push_back(std::move(cand));
    }
    {
        CorruptionReference::Candidate cand;
        cand.label = "change-stay with m_H = b/(q_inf - q_soc)";
        cand.defined = std::abs(p.q_inf - p.q_soc) > 1e-14;
        cand.d = change_stay;
        if (cand.defined) {
            double mh = p.b / (p.q_inf - p.q_soc);
            cand.inside_simplex = in01(mh);
            if (cand.inside_simplex) {
                double mc = p.r * (1.0 - mh) / (p.q_soc * mh + p.r);
                cand.m = (Vector(3) << mc, mh, 1.0 - mc - mh).finished();
                cand.optimal = mh >= ref.threshold - 1e-12;
            }
        }
        ref.pure_candidates.push_back(std::move(cand));
    }

    // Tie-manifold candidate: m_H equals the threshold on the stationarity
    // manifold, and the flow balance must admit per-state change probabilities
    // in [0,1].
    double mc = p.r * (p.q_soc - p.r - p.beta) / ((2.0 * p.r + p.beta) * p.q_soc);
    if (ref.threshold <= 1.0 + 1e-12 && mc >= -1e-12) {
        ref.mixed.exists = true;
        ref.mixed.m = ref.manifold_point(std::max(0.0, mc));
        double m_C = ref.mixed.m[kStateC];
        double m_H = ref.mixed.m[kStateH];
        // pi2(pi1) = (m_C (pi1 b + q_soc m_H) - q_inf m_C m_H) / (b m_H)
        auto pi2_of = [&](double pi1) {
            return (m_C * (pi1 * p.b + p.q_soc * m_H) - p.q_inf * m_C * m_H) / (p.b * m_H);
        };
        double at0 = pi2_of(0.0);
        double at1 = pi2_of(1.0);
        if (at0 <= 1.0 + 1e-12 && at1 >= -1e-12) {
            ref.mixed.feasible = true;
            if (at0 >= 0.0) {
                ref.mixed.pi_c_change = 0.0;
                ref.mixed.pi_h_change = std::min(1.0, at0);
            } else {
                double slope = m_C / m_H;
                ref.mixed.pi_c_change = std::min(1.0, -at0 / slope);
                ref.mixed.pi_h_change = std::max(0.0, pi2_of(ref.mixed.pi_c_change));
            }
        }
    }
    return ref;
}

}  // namespace mfg
