// Acceptance suite: every release-gating check, one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include "mfg/mfg.hpp"

#include "test_support.hpp"

#include <chrono>
#include <functional>
#include <iostream>

using namespace mfg;

namespace {

struct Harness {
    int failures = 0;

    void criterion(int number, const std::string& description,
                   const std::function<bool(std::string&)>& body) {
        std::string detail;
        bool ok = false;
        try {
            ok = body(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        std::cout << (ok ? "[PASS]" : "[FAIL]") << " criterion " << number << ": " << description;
        if (!detail.empty()) std::cout << "  -- " << detail;
        std::cout << std::endl;
        if (!ok) ++failures;
    }
};

bool approx_vec(const Vector& a, const Vector& b, double tolerance) {
    return a.size() == b.size() && (a - b).cwiseAbs().maxCoeff() < tolerance;
}

// match solver output against a consumer reference entry by distribution,
// kind, and strategy labels (pure tuple, or which state randomizes)
bool matches_reference(const EquilibriumCertificate& cert, const ConsumerEquilibrium& ref,
                       double m_tol, double pi_tol) {
    if (!approx_vec(cert.m.probs(), ref.m, m_tol)) return false;
    if (cert.kind != ref.kind) return false;
    return (cert.pi.probs() - ref.pi).cwiseAbs().maxCoeff() < pi_tol;
}

ConsumerParams consumer_case_params(int label) {
    ConsumerParams p;  // b=1, eps=0.2, beta=0.5
    switch (label) {
        case 1: p.c = 0.5; p.s1 = 2.0; break;
        case 2: p.c = 16.0 / 9.0; p.s1 = 0.6; break;
        case 3: p.c = 20.0 / 9.0; break;
        case 4: p.c = 0.24; p.s1 = 0.8; break;
        case 5: break;
        case 6: p.c = 4.0 / 3.0; p.s2 = 0.5; break;
        case 7: p.c = 0.24; p.s2 = 0.8; break;
        case 8: p.c = 0.5; p.s2 = 2.0; break;
    }
    return p;
}

}  // namespace

int main() {
    Harness h;

    // ------------------------------------------------------------------
    h.criterion(1,
                "consumer case (v): exactly the 3 pure + 2 mixed equilibria, "
                "1e-6/1e-5 tolerances, < 10 s single-threaded",
                [&](std::string& detail) {
        ConsumerParams p;  // b=1, eps=0.2, beta=0.5, c=0.5, s1=s2=0
        auto start = std::chrono::steady_clock::now();
        SearchConfig cfg;
        cfg.threads = 1;
        SearchResult res = solve_all(consumer_model(p), cfg);
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        ConsumerReference ref = consumer_reference(p);
        if (ref.case_label != 5 || ref.equilibria.size() != 5) {
            detail = "reference is not case (v)";
            return false;
        }
        if (res.equilibria.size() != 5) {
            detail = "solver returned " + std::to_string(res.equilibria.size()) + " equilibria";
            return false;
        }
        for (const auto& expected : ref.equilibria) {
            bool found = false;
            for (const auto& cert : res.equilibria)
                if (matches_reference(cert, expected, 1e-6, 1e-5)) found = true;
            if (!found) {
                detail = "missing equilibrium at m1 = " + std::to_string(expected.m[0]);
                return false;
            }
        }
        detail = "runtime " + std::to_string(seconds) + " s";
        return seconds < 10.0;
    });

    // ------------------------------------------------------------------
    h.criterion(2, "consumer classification: counts and strategy labels match in all 8 cases",
                [&](std::string& detail) {
        for (int label = 1; label <= 8; ++label) {
            ConsumerParams p = consumer_case_params(label);
            ConsumerReference ref = consumer_reference(p);
            if (ref.case_label != label) {
                detail = "parameter set " + std::to_string(label) + " classified as case " +
                         std::to_string(ref.case_label);
                return false;
            }
            SearchConfig cfg;
            SearchResult res = solve_all(consumer_model(p), cfg);
            if (res.equilibria.size() != ref.equilibria.size()) {
                detail = "case " + std::to_string(label) + ": solver " +
                         std::to_string(res.equilibria.size()) + " vs reference " +
                         std::to_string(ref.equilibria.size());
                return false;
            }
            for (const auto& expected : ref.equilibria) {
                bool found = false;
                for (const auto& cert : res.equilibria)
                    if (matches_reference(cert, expected, 1e-6, 1e-5)) found = true;
                if (!found) {
                    detail = "case " + std::to_string(label) + ": unmatched equilibrium at m1 = " +
                             std::to_string(expected.m[0]);
                    return false;
                }
            }
        }
        return true;
    });

    // ------------------------------------------------------------------
    h.criterion(3,
                "corruption optimality sets switch at m_H = 0.4 with the tie resolved "
                "within 1e-8",
                [&](std::string& detail) {
        CorruptionParams p{0.3, 1.0, 2.0, 0.5, 0.3};  // (r+beta)/q_soc = 0.4
        ModelSpec model = corruption_model(p);
        const double tie_tol = 1e-9;
        auto sets_at = [&](double mh) {
            PopulationDistribution m((Vector(3) << 0.3, mh, 0.4 - mh + 0.3).finished());
            return optimal_action_sets(model, m, tie_tol).action_sets;
        };
        auto tie = sets_at(0.4);
        if (tie[kStateC].size() != 2 || tie[kStateH].size() != 2) {
            detail = "no tie at the threshold";
            return false;
        }
        auto above = sets_at(0.4 + 1e-8);
        if (above[kStateC] != std::vector<int>{kChange} ||
            above[kStateH] != std::vector<int>{kStay}) {
            detail = "above the threshold: expected change in C, stay in H";
            return false;
        }
        auto below = sets_at(0.4 - 1e-8);
        if (below[kStateC] != std::vector<int>{kStay} ||
            below[kStateH] != std::vector<int>{kChange}) {
            detail = "below the threshold: expected stay in C, change in H";
            return false;
        }
        return true;
    });

    // ------------------------------------------------------------------
    h.criterion(4,
                "corruption equilibria sit on the stationarity manifold (1e-8) with "
                "R-cut residual < 1e-10",
                [&](std::string& detail) {
        std::vector<CorruptionParams> params = {
            {0.3, 1.0, 2.0, 0.5, 0.3},   // threshold 0.4, all regimes present
            {0.2, 0.5, 1.0, 0.5, 0.6},   // threshold > 1
            {0.5, 2.0, 1.2, 0.4, 0.4},   // q_inf > q_soc
        };
        int total = 0;
        for (const auto& p : params) {
            ModelSpec model = corruption_model(p);
            CorruptionReference ref = corruption_reference(p);
            SearchConfig cfg;
            SearchResult res = solve_all(model, cfg);
            if (res.equilibria.empty()) {
                detail = "no equilibria returned for one parameter set";
                return false;
            }
            for (const auto& cert : res.equilibria) {
                ++total;
                double manifold = std::abs(ref.manifold_residual(cert.m.probs()));
                if (manifold >= 1e-8) {
                    detail = "manifold residual " + std::to_string(manifold);
                    return false;
                }
                GeneratorMatrix q = assemble_generator(model, cert.m, cert.pi);
                double cut = std::abs(cut_residual(q, cert.m, {kStateR}));
                if (cut >= 1e-10) {
                    detail = "cut residual " + std::to_string(cut);
                    return false;
                }
            }
        }
        detail = std::to_string(total) + " equilibria checked";
        return total > 0;
    });

    // ------------------------------------------------------------------
    h.criterion(5,
                "random models: convex combinations of optimal strategies reach V* "
                "within 1e-8; 0.01 off-support mass costs a positive margin",
                [&](std::string& detail) {
        std::mt19937_64 rng(101);
        int margin_checks = 0;
        for (int model_idx = 0; model_idx < 50; ++model_idx) {
            int S = 2 + static_cast<int>(rng() % 2);
            int A = 2 + static_cast<int>(rng() % 2);
            ModelSpec model = testing::random_model(rng, S, A, 2, false);
            for (int k = 0; k < 20; ++k) {
                PopulationDistribution m(random_simplex_point(rng, S));
                OptimalitySummary opt;
                try {
                    opt = optimal_action_sets(model, m);
                } catch (const DegenerateDynamics&) {
                    continue;
                }
                auto ds = enumerate_product(opt.action_sets);
                StationaryStrategy pi = testing::random_convex_combo(rng, ds, A);
                Vector v = policy_value(model, m, pi);
                if ((v - opt.value).cwiseAbs().maxCoeff() >= 1e-8) {
                    detail = "optimal mixture misses V*";
                    return false;
                }

                // clearly suboptimal action required for the margin check
                std::vector<Matrix> rates = evaluate_rates(model, m);
                Matrix rewards = evaluate_rewards(model, m);
                int state = -1, bad = -1;
                for (int i = 0; i < S && state < 0; ++i) {
                    const auto& set = opt.action_sets[static_cast<std::size_t>(i)];
                    for (int a = 0; a < A; ++a) {
                        if (std::find(set.begin(), set.end(), a) != set.end()) continue;
                        double qa = rewards(i, a) +
                                    rates[static_cast<std::size_t>(a)].row(i).dot(opt.value);
                        double qb = rewards(i, set[0]) +
                                    rates[static_cast<std::size_t>(set[0])].row(i).dot(opt.value);
                        if (qb - qa > 1e-4) {
                            state = i;
                            bad = a;
                            break;
                        }
                    }
                }
                if (state < 0) continue;
                Matrix probs = pi.probs();
                probs.row(state) *= 0.99;
                probs(state, bad) += 0.01;
                Vector voff = policy_value(model, m, StationaryStrategy(probs));
                if ((opt.value - voff).maxCoeff() <= 1e-8) {
                    detail = "off-support strategy did not fall short";
                    return false;
                }
                ++margin_checks;
            }
        }
        detail = std::to_string(margin_checks) + " margin checks";
        return margin_checks > 500;
    });

    // ------------------------------------------------------------------
    h.criterion(6,
                "random irreducible models: 1000 mixed optimal strategies have their "
                "stationary points inside the best-response hull (null-space oracle, 1e-8)",
                [&](std::string& detail) {
        std::mt19937_64 rng(103);
        int done = 0;
        for (int model_idx = 0; model_idx < 50; ++model_idx) {
            int S = 2 + static_cast<int>(rng() % 2);
            int A = 2 + static_cast<int>(rng() % 2);
            ModelSpec model = testing::random_model(rng, S, A, 2, true);
            PopulationDistribution m(random_simplex_point(rng, S));
            BestResponseHull hull = best_response_vertices(model, m);
            for (int t = 0; t < 20; ++t) {
                StationaryStrategy pi = testing::random_convex_combo(rng, hull.strategies, A);
                GeneratorMatrix q = assemble_generator(model, m, pi);
                Vector x = testing::nullspace_stationary(q.entries());
                HullDistance hd = hull_distance(PopulationDistribution(x), hull);
                if (hd.distance >= 1e-8) {
                    detail = "hull distance " + std::to_string(hd.distance);
                    return false;
                }
                ++done;
            }
        }
        detail = std::to_string(done) + " strategies checked";
        return done == 1000;
    });

    // ------------------------------------------------------------------
    h.criterion(7,
                "uniformization equivalence: continuous-time policy values equal the "
                "discrete uniformized values within 1e-8",
                [&](std::string& detail) {
        std::mt19937_64 rng(107);
        int checked = 0;
        for (int model_idx = 0; model_idx < 50; ++model_idx) {
            int S = 2 + static_cast<int>(rng() % 2);
            int A = 1 + static_cast<int>(rng() % 3);
            ModelSpec model = testing::random_model(rng, S, A, 2, false);
            for (int k = 0; k < 4; ++k) {
                PopulationDistribution m(random_simplex_point(rng, S));
                DiscreteMDP mdp;
                try {
                    mdp = uniformize(model, m);
                } catch (const DegenerateDynamics&) {
                    continue;
                }
                for (const auto& d : all_deterministic(S, A)) {
                    Vector ct = policy_value(model, m, StationaryStrategy::pure(d, A));
                    Vector disc = testing::discrete_policy_value(mdp, d);
                    if ((ct - disc).cwiseAbs().maxCoeff() >= 1e-8) {
                        detail = "value mismatch " +
                                 std::to_string((ct - disc).cwiseAbs().maxCoeff());
                        return false;
                    }
                    ++checked;
                }
            }
        }
        detail = std::to_string(checked) + " policies checked";
        return checked > 1000;
    });

    // ------------------------------------------------------------------
    h.criterion(8,
                "linear algebra invariants on 500 random generators (rank, minor sign, "
                "stationary residual, cofactor agreement) plus uniform determinant sign",
                [&](std::string& detail) {
        std::mt19937_64 rng(109);
        for (int t = 0; t < 500; ++t) {
            int S = 2 + t % 5;
            GeneratorMatrix q = testing::random_generator(rng, S);

            Eigen::JacobiSVD<Matrix> svd(q.entries());
            int rank = 0;
            for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
                if (svd.singularValues()[i] > svd.singularValues()[0] * S * 1e-12) ++rank;
            if (rank != S - 1) {
                detail = "rank " + std::to_string(rank) + " for S = " + std::to_string(S);
                return false;
            }
            if (!minor_sign_check(q)) {
                detail = "minor sign check failed";
                return false;
            }
            StationaryPoint x = stationary_distribution(q);
            if (x.dist.probs().minCoeff() < 0.0 ||
                std::abs(x.dist.probs().sum() - 1.0) > 1e-12 || x.residual >= 1e-9) {
                detail = "stationary distribution invalid";
                return false;
            }
            Vector cof = cofactor_stationary(q);
            double rel = (x.dist.probs() - cof).cwiseAbs().maxCoeff() /
                         std::max(1.0, cof.cwiseAbs().maxCoeff());
            if (rel >= 1e-8) {
                detail = "cofactor disagreement " + std::to_string(rel);
                return false;
            }
        }

        auto det_qtilde = [](const Matrix& q) {
            Matrix qt = q.transpose();
            qt.row(q.rows() - 1).setOnes();
            return qt.determinant();
        };
        for (int trial = 0; trial < 10; ++trial) {
            int S = 2 + static_cast<int>(rng() % 2);
            int A = 2 + static_cast<int>(rng() % 2);
            ModelSpec model = testing::random_model(rng, S, A, 1, true);
            PopulationDistribution m(random_simplex_point(rng, S));
            double reference = det_qtilde(
                assemble_generator(model, m, all_deterministic(S, A).front()).entries());
            for (int t = 0; t < 200; ++t) {
                Matrix rows(S, A);
                for (int i = 0; i < S; ++i)
                    rows.row(i) = testing::random_weights(rng, A).transpose();
                double det =
                    det_qtilde(assemble_generator(model, m, StationaryStrategy(rows)).entries());
                if (det * reference <= 0.0) {
                    detail = "determinant sign flip";
                    return false;
                }
            }
        }
        return true;
    });

    // ------------------------------------------------------------------
    h.criterion(9,
                "existence: 50 randomized valid models each yield at least one "
                "verified equilibrium",
                [&](std::string& detail) {
        std::mt19937_64 rng(113);
        for (int model_idx = 0; model_idx < 50; ++model_idx) {
            int S = 2 + static_cast<int>(rng() % 2);
            int A = 2 + static_cast<int>(rng() % 2);
            ModelSpec model = testing::random_model(rng, S, A, 2, true);
            SearchConfig cfg;
            cfg.grid = 24;
            SearchResult res = find_pure_equilibria(model, cfg);
            if (res.equilibria.empty()) res = solve_all(model, cfg);
            bool verified = false;
            for (const auto& cert : res.equilibria) {
                EquilibriumCertificate re = verify_equilibrium(model, cert.m, cert.pi, 1e-7);
                if (re.passed()) verified = true;
            }
            if (!verified) {
                detail = "model " + std::to_string(model_idx) + " (S=" + std::to_string(S) +
                         ", A=" + std::to_string(A) + ") yielded none";
                return false;
            }
        }
        return true;
    });

    std::cout << (h.failures == 0 ? "acceptance: all criteria passed"
                                  : "acceptance: " + std::to_string(h.failures) +
                                        " criteria failed")
              << std::endl;
    return h.failures;
}
