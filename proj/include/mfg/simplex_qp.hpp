#pragma once

#include "mfg/types.hpp"

namespace mfg {

struct EqNnlsResult {
    Vector x;
    Vector residual;       // A x - b
    double residual_norm = 0.0;
    bool converged = false;
};

/// Minimize ||A x - b||_2 subject to C x = d and x >= 0, by a primal
/// active-set method on the bound constraints. The caller must supply a
/// feasible starting point (C x0 = d, x0 >= 0). Problem sizes here are tiny
/// (tens of variables), so dense KKT solves are fine.
inline EqNnlsResult eq_nnls(const Matrix& A, const Vector& b, const Matrix& C, const Vector& d,
                            Vector x, int max_iter = 0) {
    const int n = static_cast<int>(x.size());
    const int p = static_cast<int>(C.rows());
    if (max_iter <= 0) max_iter = 100 + 40 * n;

    Matrix G = A.transpose() * A;
    Vector g = -A.transpose() * b;
    const double reg = 1e-13 * (1.0 + G.trace() / std::max(1, n));
    const double grad_scale = 1.0 + b.norm() * A.norm();

    std::vector<bool> active(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n; ++i)
        if (x[i] <= 1e-14) {
            x[i] = 0.0;
            active[static_cast<std::size_t>(i)] = true;
        }

    EqNnlsResult best;
    best.x = x;
    best.residual = A * x - b;
    best.residual_norm = best.residual.norm();

    for (int iter = 0; iter < max_iter; ++iter) {
        std::vector<int> free_idx;
        for (int i = 0; i < n; ++i)
            if (!active[static_cast<std::size_t>(i)]) free_idx.push_back(i);
        const int f = static_cast<int>(free_idx.size());

        Vector grad = G * x + g;
        Vector step = Vector::Zero(n);
        if (f > 0) {
            Matrix kkt = Matrix::Zero(f + p, f + p);
            Vector rhs(f + p);
            for (int r = 0; r < f; ++r) {
                for (int c = 0; c < f; ++c) kkt(r, c) = G(free_idx[r], free_idx[c]);
                kkt(r, r) += reg;
                for (int c = 0; c < p; ++c) {
                    kkt(r, f + c) = C(c, free_idx[r]);
                    kkt(f + c, r) = C(c, free_idx[r]);
                }
                rhs[r] = -grad[free_idx[r]];
            }
            rhs.tail(p).setZero();
            Vector sol = kkt.completeOrthogonalDecomposition().solve(rhs);
            for (int r = 0; r < f; ++r) step[free_idx[r]] = sol[r];
        }

        if (step.cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + x.cwiseAbs().maxCoeff())) {
            // Stationary on the current face: check multipliers of the active bounds.
            Vector lambda = Vector::Zero(p);
            if (f > 0) {
                Matrix cf(f, p);
                Vector gf(f);
                for (int r = 0; r < f; ++r) {
                    cf.row(r) = C.col(free_idx[r]).transpose();
                    gf[r] = grad[free_idx[r]];
                }
                lambda = cf.completeOrthogonalDecomposition().solve(-gf);
            } else {
                lambda = C.transpose().completeOrthogonalDecomposition().solve(-grad);
            }
            int worst = -1;
            double worst_mu = -1e-10 * grad_scale;
            for (int i = 0; i < n; ++i) {
                if (!active[static_cast<std::size_t>(i)]) continue;
                double mu = grad[i] + C.col(i).dot(lambda);
                if (mu < worst_mu) {
                    worst_mu = mu;
                    worst = i;
                }
            }
            if (worst < 0) {
                best.x = x;
                best.residual = A * x - b;
                best.residual_norm = best.residual.norm();
                best.converged = true;
                return best;
            }
            active[static_cast<std::size_t>(worst)] = false;
            continue;
        }

        double alpha = 1.0;
        int blocker = -1;
        for (int i : free_idx) {
            if (step[i] < -1e-16) {
                double cand = x[i] / -step[i];
                if (cand < alpha) {
                    alpha = cand;
                    blocker = i;
                }
            }
        }
        x += alpha * step;
        if (blocker >= 0) {
            x[blocker] = 0.0;
            active[static_cast<std::size_t>(blocker)] = true;
        }
        for (int i = 0; i < n; ++i)
            if (x[i] < 0.0) x[i] = 0.0;

        Vector res = A * x - b;
        if (res.norm() < best.residual_norm) {
            best.x = x;
            best.residual = res;
            best.residual_norm = res.norm();
        }
    }
    return best;  // iteration cap hit; best point found, converged = false
}

/// Euclidean distance from a point to the convex hull of the given vertices,
/// with the minimizing convex weights.
struct HullProjection {
    double distance = 0.0;
    Vector weights;
    Vector closest_point;
};

inline HullProjection project_to_hull(const Vector& point, const std::vector<Vector>& vertices) {
    if (vertices.empty()) throw std::invalid_argument("project_to_hull: no vertices");
    const int dim = static_cast<int>(point.size());
    const int n = static_cast<int>(vertices.size());
    Matrix A(dim, n);
    for (int k = 0; k < n; ++k) A.col(k) = vertices[static_cast<std::size_t>(k)];
    Matrix C = Matrix::Ones(1, n);
    Vector d = Vector::Ones(1);
    Vector w0 = Vector::Zero(n);
    w0[0] = 1.0;
    EqNnlsResult r = eq_nnls(A, point, C, d, w0);

    HullProjection proj;
    proj.weights = r.x;
    proj.closest_point = A * r.x;
    proj.distance = (proj.closest_point - point).norm();
    return proj;
}

}  // namespace mfg
