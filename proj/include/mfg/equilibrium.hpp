#pragma once

#include "mfg/parallel.hpp"
#include "mfg/simplex_qp.hpp"
#include "mfg/stationary.hpp"

#include <map>
#include <optional>
#include <sstream>

namespace mfg {

/// The vertices of the best-response set phi(m): one stationary point per
/// deterministic optimal strategy. phi(m) is their convex hull.
struct BestResponseHull {
    std::vector<StationaryPoint> vertices;
    std::vector<DeterministicStrategy> strategies;
    OptimalitySummary optimality;
};

inline BestResponseHull best_response_vertices(const ModelSpec& model,
                                               const PopulationDistribution& m,
                                               double tie_tol = 1e-8,
                                               std::size_t max_vertices = 4096) {
    BestResponseHull hull;
    hull.optimality = optimal_action_sets(model, m, tie_tol);
    hull.strategies = enumerate_product(hull.optimality.action_sets, max_vertices);
    hull.vertices.reserve(hull.strategies.size());
    for (const auto& d : hull.strategies) {
        try {
            hull.vertices.push_back(stationary_distribution(assemble_generator(model, m, d)));
        } catch (const ReducibleGenerator&) {
            std::ostringstream os;
            os << "reducible generator for optimal strategy (";
            for (std::size_t i = 0; i < d.actions.size(); ++i)
                os << (i ? "," : "") << d.actions[i] + 1;
            os << ")";
            throw ReducibleGenerator(os.str());
        }
    }
    return hull;
}

struct HullDistance {
    double distance = 0.0;
    Vector weights;
};

/// Euclidean distance from a point to conv(vertices of the hull), with the
/// minimizing convex weights. Distance zero certifies m in phi(m).
inline HullDistance hull_distance(const PopulationDistribution& point,
                                  const BestResponseHull& hull) {
    if (hull.vertices.empty()) throw std::invalid_argument("hull_distance: empty hull");
    std::vector<Vector> vertices;
    vertices.reserve(hull.vertices.size());
    for (const auto& v : hull.vertices) vertices.push_back(v.dist.probs());
    HullProjection proj = project_to_hull(point.probs(), vertices);
    return {proj.distance, proj.weights};
}

/// Find a strategy pi supported on the optimal action sets whose induced
/// dynamics make m stationary. Works through the occupation variables
/// z_ia = m_i * pi_ia, which make the balance equations linear; rows of states
/// with m_i = 0 are filled uniformly over O_i(m).
inline StationaryStrategy recover_strategy(const ModelSpec& model,
                                           const PopulationDistribution& m,
                                           const OptimalitySummary& opt, double tolerance = 1e-9) {
    const int S = model.num_states();
    const int A = model.num_actions();
    const double zero_state = 1e-13;
    std::vector<Matrix> rates = evaluate_rates(model, m);

    std::vector<std::pair<int, int>> vars;  // (state, action)
    std::vector<int> state_row(static_cast<std::size_t>(S), -1);
    int live_states = 0;
    for (int i = 0; i < S; ++i) {
        if (m[i] <= zero_state) continue;
        state_row[static_cast<std::size_t>(i)] = live_states++;
        for (int a : opt.action_sets[static_cast<std::size_t>(i)]) vars.emplace_back(i, a);
    }
    const int n = static_cast<int>(vars.size());

    Matrix balance(S, n);
    Matrix constraints = Matrix::Zero(live_states, n);
    Vector masses(live_states);
    Vector z0(n);
    for (int k = 0; k < n; ++k) {
        auto [i, a] = vars[static_cast<std::size_t>(k)];
        for (int j = 0; j < S; ++j) balance(j, k) = rates[static_cast<std::size_t>(a)](i, j);
        int row = state_row[static_cast<std::size_t>(i)];
        constraints(row, k) = 1.0;
        z0[k] = m[i] / static_cast<double>(opt.action_sets[static_cast<std::size_t>(i)].size());
    }
    for (int i = 0; i < S; ++i)
        if (state_row[static_cast<std::size_t>(i)] >= 0)
            masses[state_row[static_cast<std::size_t>(i)]] = m[i];

    EqNnlsResult sol = eq_nnls(balance, Vector::Zero(S), constraints, masses, z0);
    if (sol.residual.cwiseAbs().maxCoeff() > tolerance)
        throw Infeasible("no optimal strategy keeps this distribution stationary "
                         "(balance residual " +
                         std::to_string(sol.residual.cwiseAbs().maxCoeff()) + ")");

    Matrix pi = Matrix::Zero(S, A);
    for (int k = 0; k < n; ++k) {
        auto [i, a] = vars[static_cast<std::size_t>(k)];
        pi(i, a) = std::max(0.0, sol.x[k]) / m[i];
    }
    for (int i = 0; i < S; ++i) {
        if (state_row[static_cast<std::size_t>(i)] >= 0) continue;
        const auto& set = opt.action_sets[static_cast<std::size_t>(i)];
        for (int a : set) pi(i, a) = 1.0 / static_cast<double>(set.size());
    }
    return StationaryStrategy(std::move(pi));
}

enum class EquilibriumKind { pure, mixed };

inline const char* to_string(EquilibriumKind k) {
    return k == EquilibriumKind::pure ? "pure" : "mixed";
}

/// A candidate equilibrium with its certification data. `passed()` means all
/// three checks held at the verification tolerance.
struct EquilibriumCertificate {
    PopulationDistribution m;
    StationaryStrategy pi;
    double stationarity_residual = 0.0;  // ||m^T Q^pi(m)||_inf
    double optimality_gap = 0.0;         // ||V* - V^pi||_inf
    Vector hull_weights;                 // over hull_strategies; empty if unavailable
    std::vector<DeterministicStrategy> hull_strategies;
    EquilibriumKind kind = EquilibriumKind::pure;
    bool stationarity_ok = false;
    bool optimality_ok = false;
    bool support_ok = false;

    bool passed() const { return stationarity_ok && optimality_ok && support_ok; }
};

/// Check the two equilibrium conditions directly: m stationary under Q^pi(m),
/// and pi optimal from every start state (value gap plus support inside the
/// optimal action sets). Never throws; reducible or degenerate dynamics are
/// handled by the direct balance check and the reward-only value fallback.
inline EquilibriumCertificate verify_equilibrium(const ModelSpec& model,
                                                 const PopulationDistribution& m,
                                                 const StationaryStrategy& pi, double tolerance,
                                                 double tie_tol = 1e-8) {
    EquilibriumCertificate cert{m, pi};
    std::vector<Matrix> rates = evaluate_rates(model, m);
    Matrix rewards = evaluate_rewards(model, m);
    Matrix qpi = detail::mix_generator(rates, pi);
    cert.stationarity_residual = (m.probs().transpose() * qpi).cwiseAbs().maxCoeff();
    cert.stationarity_ok = cert.stationarity_residual < tolerance;

    Vector vstar;
    std::vector<std::vector<int>> action_sets;
    try {
        OptimalitySummary opt = optimal_action_sets(model, m, tie_tol);
        vstar = opt.value;
        action_sets = opt.action_sets;
    } catch (const DegenerateDynamics&) {
        // No transitions anywhere: values decouple, V*_i = max_a r_ia / beta.
        vstar = rewards.rowwise().maxCoeff() / model.beta();
        action_sets.resize(static_cast<std::size_t>(model.num_states()));
        for (int i = 0; i < model.num_states(); ++i) {
            double top = rewards.row(i).maxCoeff();
            for (int a = 0; a < model.num_actions(); ++a)
                if (rewards(i, a) >= top - tie_tol * (1.0 + std::abs(top)))
                    action_sets[static_cast<std::size_t>(i)].push_back(a);
        }
    }
    Vector vpi = detail::discounted_solve(model.beta(), qpi, detail::mix_rewards(rewards, pi));
    cert.optimality_gap = (vstar - vpi).cwiseAbs().maxCoeff();
    cert.optimality_ok = cert.optimality_gap < tolerance;

    cert.support_ok = true;
    for (int i = 0; i < model.num_states(); ++i) {
        const auto& set = action_sets[static_cast<std::size_t>(i)];
        for (int a = 0; a < model.num_actions(); ++a) {
            if (pi(i, a) > 1e-9 && std::find(set.begin(), set.end(), a) == set.end())
                cert.support_ok = false;
        }
    }

    cert.kind = pi.is_deterministic() ? EquilibriumKind::pure : EquilibriumKind::mixed;
    try {
        BestResponseHull hull = best_response_vertices(model, m, tie_tol);
        HullDistance hd = hull_distance(m, hull);
        if (hd.distance < std::max(tolerance, 1e-7)) {
            cert.hull_weights = hd.weights;
            cert.hull_strategies = hull.strategies;
        }
    } catch (const std::exception&) {
        // hull unavailable (reducible or degenerate); certificate stands on the
        // direct checks above
    }
    return cert;
}

struct SearchIncident {
    std::string context;
    std::string reason;
};

struct SearchReport {
    std::vector<SearchIncident> nonconvergence;
    std::vector<std::string> warnings;

    void merge(SearchReport other) {
        nonconvergence.insert(nonconvergence.end(),
                              std::make_move_iterator(other.nonconvergence.begin()),
                              std::make_move_iterator(other.nonconvergence.end()));
        warnings.insert(warnings.end(), std::make_move_iterator(other.warnings.begin()),
                        std::make_move_iterator(other.warnings.end()));
    }
};

struct SearchConfig {
    int grid = 0;          // simplex grid resolution; 0 picks a default by state count
    int multistart = 32;   // random seeds per deterministic strategy
    double damping = 0.5;  // fixed-point damping in (0,1]
    double tie_tol = 1e-8;
    double tol = 1e-9;          // residual target for solutions
    double certify_tol = 1e-7;  // verification gate for returned certificates
    double dedup_radius = 1e-6;
    int threads = 1;
    unsigned long long seed = 9001;
    int max_fp_iter = 400;
    std::size_t max_hull = 4096;

    int resolved_grid(int num_states) const {
        if (grid >= 2) return grid;
        switch (num_states) {
            case 2: return 200;
            case 3: return 60;
            case 4: return 16;
            default: return 8;
        }
    }
};

struct SearchResult {
    std::vector<EquilibriumCertificate> equilibria;
    SearchReport report;
};

namespace detail {

inline std::string strategy_label(const DeterministicStrategy& d) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < d.actions.size(); ++i) os << (i ? "," : "") << d.actions[i] + 1;
    os << ")";
    return os.str();
}

inline Vector chart_point(const Vector& u) {
    Vector m(u.size() + 1);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        m[i] = std::max(0.0, u[i]);
        sum += m[i];
    }
    if (sum > 1.0) {
        m.head(u.size()) /= sum;
        sum = 1.0;
    }
    m[u.size()] = 1.0 - sum;
    return m;
}

inline Vector stationary_of(const ModelSpec& model, const DeterministicStrategy& d,
                            const Vector& m) {
    GeneratorMatrix q = assemble_generator(model, PopulationDistribution(m), d);
    return stationary_distribution(q).dist.probs();
}

/// Damped iteration m <- (1-lambda) m + lambda x^d(m). Returns the final
/// iterate and whether the fixed-point gap fell below the threshold.
inline std::pair<Vector, bool> damped_fixed_point(const ModelSpec& model,
                                                  const DeterministicStrategy& d, Vector m,
                                                  double damping, int max_iter) {
    for (int it = 0; it < max_iter; ++it) {
        Vector x = stationary_of(model, d, m);
        double gap = (m - x).cwiseAbs().maxCoeff();
        m = (1.0 - damping) * m + damping * x;
        if (gap < 1e-11) return {m, true};
    }
    return {m, false};
}

/// Newton refinement of m = x^d(m) on the affine chart of the simplex.
/// Returns nothing if the iteration leaves the domain or stalls.
inline std::optional<Vector> polish_fixed_point(const ModelSpec& model,
                                                const DeterministicStrategy& d, const Vector& m0) {
    const int S = static_cast<int>(m0.size());
    auto displacement = [&](const Vector& u) -> Vector {
        Vector m = chart_point(u);
        Vector x = stationary_of(model, d, m);
        return (m - x).head(S - 1);
    };
    Vector u = m0.head(S - 1);
    try {
        Vector f = displacement(u);
        double best_norm = f.cwiseAbs().maxCoeff();
        Vector best_u = u;
        const double h = 1e-7;
        for (int it = 0; it < 8 && best_norm > 1e-14; ++it) {
            Matrix jac(S - 1, S - 1);
            for (int k = 0; k < S - 1; ++k) {
                Vector up = u;
                up[k] += h;
                jac.col(k) = (displacement(up) - f) / h;
            }
            Vector du = jac.completeOrthogonalDecomposition().solve(-f);
            u += du;
            f = displacement(u);
            double norm = f.cwiseAbs().maxCoeff();
            if (norm < best_norm) {
                best_norm = norm;
                best_u = u;
            } else {
                break;
            }
        }
        if (best_norm > 1e-9) return std::nullopt;
        return chart_point(best_u);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

struct SimplexGrid {
    int resolution = 0;
    std::vector<Vector> points;
    std::vector<std::vector<int>> neighbors;
    std::vector<std::pair<int, int>> edges;
};

inline SimplexGrid build_grid(int num_states, int resolution) {
    SimplexGrid grid;
    grid.resolution = resolution;
    std::vector<std::vector<int>> comps;
    std::vector<int> cur(static_cast<std::size_t>(num_states), 0);
    std::function<void(int, int)> rec = [&](int pos, int remaining) {
        if (pos == num_states - 1) {
            cur[static_cast<std::size_t>(pos)] = remaining;
            comps.push_back(cur);
            return;
        }
        for (int k = remaining; k >= 0; --k) {
            cur[static_cast<std::size_t>(pos)] = k;
            rec(pos + 1, remaining - k);
        }
    };
    rec(0, resolution);

    std::map<std::vector<int>, int> index;
    for (std::size_t n = 0; n < comps.size(); ++n) index[comps[n]] = static_cast<int>(n);
    grid.points.reserve(comps.size());
    for (const auto& c : comps) {
        Vector m(num_states);
        for (int i = 0; i < num_states; ++i)
            m[i] = static_cast<double>(c[static_cast<std::size_t>(i)]) / resolution;
        grid.points.push_back(std::move(m));
    }
    grid.neighbors.resize(comps.size());
    for (std::size_t n = 0; n < comps.size(); ++n) {
        for (int u = 0; u < num_states; ++u) {
            if (comps[n][static_cast<std::size_t>(u)] == 0) continue;
            for (int v = 0; v < num_states; ++v) {
                if (v == u) continue;
                std::vector<int> other = comps[n];
                --other[static_cast<std::size_t>(u)];
                ++other[static_cast<std::size_t>(v)];
                int idx = index.at(other);
                grid.neighbors[n].push_back(idx);
                if (idx > static_cast<int>(n))
                    grid.edges.emplace_back(static_cast<int>(n), idx);
            }
        }
    }
    return grid;
}

/// Q-value gaps between action pairs in each state, under the optimal value.
/// Gap channel (i, a, a') vanishes exactly where both actions tie in state i.
struct GapChannel {
    int state;
    int a;
    int b;
};

inline std::vector<GapChannel> all_channels(int num_states, int num_actions) {
    std::vector<GapChannel> channels;
    for (int i = 0; i < num_states; ++i)
        for (int a = 0; a < num_actions; ++a)
            for (int b = a + 1; b < num_actions; ++b) channels.push_back({i, a, b});
    return channels;
}

inline Vector gap_values(const ModelSpec& model, const Vector& m,
                         const std::vector<GapChannel>& channels, double* qscale = nullptr) {
    PopulationDistribution dist(m);
    Vector v = solve_optimal_value(model, dist, 1e-12);
    std::vector<Matrix> rates = evaluate_rates(model, dist);
    Matrix rewards = evaluate_rewards(model, dist);
    Matrix qvals(model.num_states(), model.num_actions());
    for (int i = 0; i < model.num_states(); ++i)
        for (int a = 0; a < model.num_actions(); ++a)
            qvals(i, a) = rewards(i, a) + rates[static_cast<std::size_t>(a)].row(i).dot(v);
    if (qscale) *qscale = 1.0 + qvals.cwiseAbs().maxCoeff();
    Vector gaps(static_cast<Eigen::Index>(channels.size()));
    for (std::size_t c = 0; c < channels.size(); ++c)
        gaps[static_cast<Eigen::Index>(c)] =
            qvals(channels[c].state, channels[c].a) - qvals(channels[c].state, channels[c].b);
    return gaps;
}

inline bool near_duplicate(const Vector& a, const Vector& b, double radius) {
    return (a - b).cwiseAbs().maxCoeff() < radius;
}

}  // namespace detail

/// Search for equilibria in deterministic strategies. For constant dynamics
/// the fixed point of each strategy is a single exact linear solve; otherwise
/// damped multistart iteration locates attracting fixed points, a coarse
/// displacement scan plus Newton polishing covers the rest, and exactly
/// stationary simplex vertices are tested directly (they can carry boundary
/// equilibria whose generators are reducible).
inline SearchResult find_pure_equilibria(const ModelSpec& model, const SearchConfig& cfg) {
    const int S = model.num_states();
    const bool constant = model.constant_dynamics();
    std::vector<DeterministicStrategy> all = all_deterministic(S, model.num_actions());

    detail::SimplexGrid seed_grid;
    if (!constant) seed_grid = detail::build_grid(S, std::min(cfg.resolved_grid(S), 24));

    std::vector<SearchResult> partial(all.size());
    parallel_for(all.size(), cfg.threads, [&](std::size_t di) {
        const DeterministicStrategy& d = all[di];
        SearchResult& out = partial[di];
        std::string label = detail::strategy_label(d);
        std::vector<Vector> candidates;
        auto add_candidate = [&](const Vector& c) {
            for (const auto& existing : candidates)
                if (detail::near_duplicate(existing, c, cfg.dedup_radius)) return;
            candidates.push_back(c);
        };

        // Simplex vertices that are exactly stationary (absorbing states); they
        // are tested first so exact boundary points win deduplication.
        for (int k = 0; k < S; ++k) {
            Vector vertex = simplex_vertex(S, k);
            try {
                std::vector<Matrix> rates = evaluate_rates(model, PopulationDistribution(vertex));
                double scale = 1.0;
                for (const auto& q : rates) scale = std::max(scale, q.cwiseAbs().maxCoeff());
                double res = rates[static_cast<std::size_t>(d[k])].row(k).cwiseAbs().maxCoeff();
                if (res < tol::edge * scale) add_candidate(vertex);
            } catch (const MalformedModel&) {
            }
        }

        if (constant) {
            try {
                Vector bary = Vector::Constant(S, 1.0 / S);
                add_candidate(detail::stationary_of(model, d, bary));
            } catch (const ReducibleGenerator&) {
                out.report.warnings.push_back("strategy " + label +
                                              ": reducible constant dynamics, skipped");
            } catch (const SingularSystem& e) {
                out.report.warnings.push_back("strategy " + label + ": " + e.what());
            }
        } else {
            std::mt19937_64 rng(cfg.seed + 7919 * di);
            bool reducible_seen = false;
            for (int s = 0; s < cfg.multistart; ++s) {
                Vector seed_point = s == 0 ? Vector::Constant(S, 1.0 / S)
                                           : random_simplex_point(rng, S);
                try {
                    auto [m, ok] = detail::damped_fixed_point(model, d, seed_point, cfg.damping,
                                                              cfg.max_fp_iter);
                    if (!ok) {
                        out.report.nonconvergence.push_back(
                            {"strategy " + label + ", seed " + std::to_string(s),
                             "fixed-point iteration did not converge"});
                        continue;
                    }
                    if (auto polished = detail::polish_fixed_point(model, d, m))
                        add_candidate(*polished);
                    else
                        add_candidate(m);
                } catch (const ReducibleGenerator&) {
                    reducible_seen = true;
                } catch (const SingularSystem& e) {
                    out.report.nonconvergence.push_back(
                        {"strategy " + label + ", seed " + std::to_string(s), e.what()});
                }
            }
            // Coarse displacement scan: polish from local minima of |m - x^d(m)|.
            std::vector<double> disp(seed_grid.points.size(),
                                     std::numeric_limits<double>::infinity());
            for (std::size_t n = 0; n < seed_grid.points.size(); ++n) {
                try {
                    disp[n] = (seed_grid.points[n] -
                               detail::stationary_of(model, d, seed_grid.points[n]))
                                  .cwiseAbs()
                                  .maxCoeff();
                } catch (const std::exception&) {
                    reducible_seen = true;
                }
            }
            for (std::size_t n = 0; n < seed_grid.points.size(); ++n) {
                if (!std::isfinite(disp[n]) || disp[n] > 0.5) continue;
                bool local_min = true;
                for (int nb : seed_grid.neighbors[n])
                    if (disp[static_cast<std::size_t>(nb)] < disp[n]) local_min = false;
                if (!local_min) continue;
                if (auto polished = detail::polish_fixed_point(model, d, seed_grid.points[n]))
                    add_candidate(*polished);
            }
            if (reducible_seen)
                out.report.warnings.push_back("strategy " + label +
                                              ": reducible generators encountered in parts of "
                                              "the simplex; search there is not exhaustive");
        }

        for (const Vector& c : candidates) {
            PopulationDistribution m(c);
            std::vector<Matrix> rates = evaluate_rates(model, m);
            Matrix qd = Matrix::Zero(S, S);
            for (int i = 0; i < S; ++i) qd.row(i) = rates[static_cast<std::size_t>(d[i])].row(i);
            double scale = std::max(1.0, qd.cwiseAbs().maxCoeff());
            double residual = (m.probs().transpose() * qd).cwiseAbs().maxCoeff();
            if (residual > cfg.tol * scale) {
                if (residual < 1e-6 * scale)
                    out.report.nonconvergence.push_back(
                        {"strategy " + label, "near-stationary candidate with residual " +
                                                  std::to_string(residual) + " rejected"});
                continue;
            }
            OptimalitySummary opt;
            try {
                opt = optimal_action_sets(model, m, cfg.tie_tol);
            } catch (const DegenerateDynamics&) {
                continue;
            }
            if (!opt.contains(d)) continue;
            EquilibriumCertificate cert = verify_equilibrium(
                model, m, StationaryStrategy::pure(d, model.num_actions()), cfg.certify_tol,
                cfg.tie_tol);
            cert.kind = EquilibriumKind::pure;
            if (cert.passed())
                out.equilibria.push_back(std::move(cert));
            else
                out.report.warnings.push_back("strategy " + label +
                                              ": candidate failed verification");
        }
    });

    SearchResult result;
    for (auto& p : partial) {
        result.report.merge(std::move(p.report));
        for (auto& cert : p.equilibria) result.equilibria.push_back(std::move(cert));
    }
    return result;
}

namespace detail {

/// Gauss-Newton solve for a mixed equilibrium: drive the tie gaps of the
/// bracketed channels and the best-feasible-strategy balance residual to zero
/// simultaneously. Zero-residual least squares, so convergence is quadratic
/// near a solution.
inline std::optional<Vector> refine_mixed_candidate(const ModelSpec& model, const Vector& m0,
                                                    const std::vector<GapChannel>& channels,
                                                    const std::vector<std::vector<int>>& support,
                                                    const SearchConfig& cfg) {
    const int S = model.num_states();

    auto residual = [&](const Vector& u) -> Vector {
        Vector m = chart_point(u);
        double qscale = 1.0;
        Vector gaps = gap_values(model, m, channels, &qscale);
        Vector r(static_cast<Eigen::Index>(channels.size()) + S);
        r.head(static_cast<Eigen::Index>(channels.size())) = gaps / qscale;

        PopulationDistribution dist(m);
        std::vector<Matrix> rates = evaluate_rates(model, dist);
        std::vector<std::pair<int, int>> vars;
        std::vector<int> state_row(static_cast<std::size_t>(S), -1);
        int live = 0;
        for (int i = 0; i < S; ++i) {
            if (dist[i] <= 1e-13) continue;
            state_row[static_cast<std::size_t>(i)] = live++;
            for (int a : support[static_cast<std::size_t>(i)]) vars.emplace_back(i, a);
        }
        const int n = static_cast<int>(vars.size());
        Matrix balance(S, n);
        Matrix constraints = Matrix::Zero(live, n);
        Vector masses(live);
        Vector z0(n);
        for (int k = 0; k < n; ++k) {
            auto [i, a] = vars[static_cast<std::size_t>(k)];
            for (int j = 0; j < S; ++j) balance(j, k) = rates[static_cast<std::size_t>(a)](i, j);
            constraints(state_row[static_cast<std::size_t>(i)], k) = 1.0;
            z0[k] = dist[i] /
                    static_cast<double>(support[static_cast<std::size_t>(i)].size());
        }
        for (int i = 0; i < S; ++i)
            if (state_row[static_cast<std::size_t>(i)] >= 0)
                masses[state_row[static_cast<std::size_t>(i)]] = dist[i];
        EqNnlsResult sol = eq_nnls(balance, Vector::Zero(S), constraints, masses, z0);
        r.tail(S) = sol.residual;
        return r;
    };

    Vector u = m0.head(S - 1);
    try {
        Vector f = residual(u);
        double best_norm = f.cwiseAbs().maxCoeff();
        Vector best_u = u;
        const double h = 1e-7;
        double lm = 1e-12;
        for (int it = 0; it < 30 && best_norm > 1e-13; ++it) {
            Matrix jac(f.size(), S - 1);
            for (int k = 0; k < S - 1; ++k) {
                Vector up = u;
                up[k] += h;
                jac.col(k) = (residual(up) - f) / h;
            }
            Matrix jtj = jac.transpose() * jac;
            Vector jtf = jac.transpose() * f;
            bool stepped = false;
            for (int tries = 0; tries < 12; ++tries) {
                Matrix lhs = jtj + lm * Matrix::Identity(S - 1, S - 1);
                Vector du = lhs.ldlt().solve(-jtf);
                Vector candidate = u + du;
                Vector fc;
                try {
                    fc = residual(candidate);
                } catch (const std::exception&) {
                    lm *= 10.0;
                    continue;
                }
                if (fc.cwiseAbs().maxCoeff() < best_norm) {
                    u = candidate;
                    f = fc;
                    best_norm = fc.cwiseAbs().maxCoeff();
                    best_u = u;
                    lm = std::max(lm * 0.1, 1e-14);
                    stepped = true;
                    break;
                }
                lm *= 10.0;
            }
            if (!stepped) break;
        }
        if (best_norm > cfg.tol) return std::nullopt;
        return chart_point(best_u);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace detail

/// Search for equilibria in properly mixed strategies. Randomization is only
/// optimal where at least two actions tie, so the search scans a simplex grid
/// for sign changes of the per-state Q-value gaps, bisects each bracketing
/// edge onto the tie manifold, and refines along it until the distribution is
/// also a fixed point of the best-response dynamics. Candidates that collapse
/// onto pure equilibria are dropped.
inline SearchResult find_mixed_equilibria(const ModelSpec& model, const SearchConfig& cfg,
                                          const std::vector<EquilibriumCertificate>& pure) {
    SearchResult result;
    const int S = model.num_states();
    const int A = model.num_actions();
    if (A < 2) return result;

    detail::SimplexGrid grid = detail::build_grid(S, cfg.resolved_grid(S));
    std::vector<detail::GapChannel> channels = detail::all_channels(S, A);

    std::vector<Vector> gaps(grid.points.size());
    std::vector<double> scales(grid.points.size(), 1.0);
    std::vector<char> usable(grid.points.size(), 1);
    parallel_for(grid.points.size(), cfg.threads, [&](std::size_t n) {
        try {
            gaps[n] = detail::gap_values(model, grid.points[n], channels, &scales[n]);
        } catch (const std::exception&) {
            usable[n] = 0;
        }
    });
    for (std::size_t n = 0; n < grid.points.size(); ++n)
        if (!usable[n]) {
            result.report.warnings.push_back(
                "grid point skipped (degenerate or singular dynamics)");
            break;
        }

    // Grid points already sitting on a tie manifold (the gap vanishes there;
    // this happens whenever a tie set aligns with the grid). A channel counts
    // only if its gap is non-negligible at some neighbor, which screens out
    // channels between identical actions, whose gap vanishes everywhere.
    std::vector<char> point_candidates(grid.points.size(), 0);
    parallel_for(grid.points.size(), cfg.threads, [&](std::size_t n) {
        if (!usable[n]) return;
        for (std::size_t c = 0; c < channels.size(); ++c) {
            double band = 1e-10 * scales[n];
            if (std::abs(gaps[n][static_cast<Eigen::Index>(c)]) > band) continue;
            for (int nb : grid.neighbors[n]) {
                if (!usable[static_cast<std::size_t>(nb)]) continue;
                if (std::abs(gaps[static_cast<std::size_t>(nb)][static_cast<Eigen::Index>(c)]) >
                    1e3 * band) {
                    point_candidates[n] = 1;
                    return;
                }
            }
        }
    });

    // Bracketed tie crossings, one bisection per (edge, channel).
    struct Crossing {
        Vector m;
        int channel;
    };
    std::vector<std::vector<Crossing>> edge_crossings(grid.edges.size());
    parallel_for(grid.edges.size(), cfg.threads, [&](std::size_t e) {
        auto [p0, p1] = grid.edges[e];
        if (!usable[static_cast<std::size_t>(p0)] || !usable[static_cast<std::size_t>(p1)])
            return;
        for (std::size_t c = 0; c < channels.size(); ++c) {
            double g0 = gaps[static_cast<std::size_t>(p0)][static_cast<Eigen::Index>(c)];
            double g1 = gaps[static_cast<std::size_t>(p1)][static_cast<Eigen::Index>(c)];
            double noise = 1e-10 * std::max(scales[static_cast<std::size_t>(p0)],
                                            scales[static_cast<std::size_t>(p1)]);
            if (std::abs(g0) < noise || std::abs(g1) < noise || g0 * g1 > 0.0) continue;
            Vector a = grid.points[static_cast<std::size_t>(p0)];
            Vector b = grid.points[static_cast<std::size_t>(p1)];
            std::vector<detail::GapChannel> one{channels[c]};
            double lo = 0.0, hi = 1.0, glo = g0;
            Vector mid;
            for (int it = 0; it < 80; ++it) {
                double t = 0.5 * (lo + hi);
                mid = (1.0 - t) * a + t * b;
                double qs = 1.0;
                double g;
                try {
                    g = detail::gap_values(model, mid, one, &qs)[0];
                } catch (const std::exception&) {
                    return;
                }
                if (std::abs(g) < 1e-14 * qs) break;
                if ((g > 0.0) == (glo > 0.0)) {
                    lo = t;
                    glo = g;
                } else {
                    hi = t;
                }
            }
            edge_crossings[e].push_back({mid, static_cast<int>(c)});
        }
    });

    std::vector<EquilibriumCertificate> found;
    auto consider = [&](const Vector& m_tie) {
        OptimalitySummary opt;
        try {
            opt = optimal_action_sets(model, PopulationDistribution(m_tie), cfg.tie_tol);
        } catch (const std::exception&) {
            return;
        }
        std::vector<detail::GapChannel> tie_channels;
        bool any_tie = false;
        for (int i = 0; i < S; ++i) {
            const auto& set = opt.action_sets[static_cast<std::size_t>(i)];
            for (std::size_t k = 1; k < set.size(); ++k)
                tie_channels.push_back({i, set[0], set[k]});
            if (set.size() >= 2) any_tie = true;
        }
        if (!any_tie) return;

        std::optional<Vector> refined =
            detail::refine_mixed_candidate(model, m_tie, tie_channels, opt.action_sets, cfg);
        if (!refined) {
            std::ostringstream os;
            os << "tie candidate near m=(";
            for (Eigen::Index i = 0; i < m_tie.size(); ++i) os << (i ? "," : "") << m_tie[i];
            os << ")";
            result.report.nonconvergence.push_back({os.str(),
                                                    "refinement did not reach tolerance"});
            return;
        }
        PopulationDistribution m(*refined);
        for (const auto& cert : found)
            // same distribution twice is fine only with a different strategy;
            // recover_strategy is deterministic, so drop early
            if (detail::near_duplicate(cert.m.probs(), m.probs(), cfg.dedup_radius)) return;

        OptimalitySummary opt_final;
        StationaryStrategy pi = StationaryStrategy::uniform(S, A);
        try {
            opt_final = optimal_action_sets(model, m, cfg.tie_tol);
            bool still_tied = false;
            for (const auto& set : opt_final.action_sets)
                if (set.size() >= 2) still_tied = true;
            if (!still_tied) return;
            pi = recover_strategy(model, m, opt_final, cfg.tol);
        } catch (const Infeasible&) {
            return;
        } catch (const std::exception&) {
            return;
        }

        try {
            BestResponseHull hull = best_response_vertices(model, m, cfg.tie_tol, cfg.max_hull);
            if (hull_distance(m, hull).distance > std::max(100.0 * cfg.tol, 1e-7)) return;
        } catch (const ReducibleGenerator&) {
            result.report.warnings.push_back(
                "mixed candidate accepted via direct balance only (reducible hull)");
        } catch (const std::exception&) {
            return;
        }

        EquilibriumCertificate cert = verify_equilibrium(model, m, pi, cfg.certify_tol,
                                                         cfg.tie_tol);
        if (!cert.passed()) return;
        // candidates that land on a pure-search distribution are duplicates
        for (const auto& p : pure)
            if (detail::near_duplicate(p.m.probs(), cert.m.probs(), cfg.dedup_radius)) return;
        cert.kind = cert.pi.is_deterministic(1e-6) ? EquilibriumKind::pure
                                                   : EquilibriumKind::mixed;
        found.push_back(std::move(cert));
    };

    for (std::size_t n = 0; n < grid.points.size(); ++n)
        if (point_candidates[n]) consider(grid.points[n]);
    for (const auto& per_edge : edge_crossings)
        for (const auto& crossing : per_edge) consider(crossing.m);

    result.equilibria = std::move(found);
    return result;
}

inline void sort_certificates(std::vector<EquilibriumCertificate>& certs) {
    std::sort(certs.begin(), certs.end(),
              [](const EquilibriumCertificate& a, const EquilibriumCertificate& b) {
                  for (int i = 0; i < a.m.num_states(); ++i) {
                      if (a.m[i] < b.m[i] - 1e-12) return true;
                      if (a.m[i] > b.m[i] + 1e-12) return false;
                  }
                  for (int i = 0; i < a.pi.num_states(); ++i)
                      for (int j = 0; j < a.pi.num_actions(); ++j) {
                          if (a.pi(i, j) < b.pi(i, j) - 1e-12) return true;
                          if (a.pi(i, j) > b.pi(i, j) + 1e-12) return false;
                      }
                  return false;
              });
}

/// Full search: pure equilibria first, then mixed ones on the tie manifolds,
/// deduplicated and sorted lexicographically by distribution.
inline SearchResult solve_all(const ModelSpec& model, const SearchConfig& cfg) {
    SearchResult pure = find_pure_equilibria(model, cfg);
    SearchResult mixed = find_mixed_equilibria(model, cfg, pure.equilibria);

    SearchResult result;
    result.report = std::move(pure.report);
    result.report.merge(std::move(mixed.report));
    result.equilibria = std::move(pure.equilibria);
    for (auto& cert : mixed.equilibria) {
        bool dup = false;
        for (const auto& existing : result.equilibria) {
            if (detail::near_duplicate(existing.m.probs(), cert.m.probs(), cfg.dedup_radius) &&
                detail::near_duplicate(Vector(existing.pi.probs().reshaped()),
                                       Vector(cert.pi.probs().reshaped()), cfg.dedup_radius))
                dup = true;
        }
        if (!dup) result.equilibria.push_back(std::move(cert));
    }
    sort_certificates(result.equilibria);
    return result;
}

}  // namespace mfg
