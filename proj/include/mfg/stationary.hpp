#pragma once

#include "mfg/ctmdp.hpp"

#include <set>

namespace mfg {

/// A conservative rate matrix Q^pi(m): nonnegative off-diagonals, zero row
/// sums (both up to the shared tolerances).
class GeneratorMatrix {
public:
    explicit GeneratorMatrix(Matrix entries) : q_(std::move(entries)) {
        if (q_.rows() != q_.cols() || q_.rows() < 2)
            throw std::invalid_argument("generator: must be square, at least 2x2");
        for (Eigen::Index i = 0; i < q_.rows(); ++i) {
            double row_sum = q_.row(i).sum();
            if (std::abs(row_sum) > tol::row_sum * std::max(1.0, q_.row(i).cwiseAbs().maxCoeff()))
                throw std::invalid_argument("generator: row " + std::to_string(i + 1) +
                                            " sums to " + std::to_string(row_sum));
            for (Eigen::Index j = 0; j < q_.cols(); ++j)
                if (i != j && q_(i, j) < tol::off_diag)
                    throw std::invalid_argument("generator: negative off-diagonal at (" +
                                                std::to_string(i + 1) + "," +
                                                std::to_string(j + 1) + ")");
        }
    }

    const Matrix& entries() const { return q_; }
    double operator()(int i, int j) const { return q_(i, j); }
    int size() const { return static_cast<int>(q_.rows()); }

private:
    Matrix q_;
};

/// Entrywise mixture of the action slices by the strategy; conservative by
/// linearity of the slices.
inline GeneratorMatrix assemble_generator(const ModelSpec& model,
                                          const PopulationDistribution& m,
                                          const StationaryStrategy& pi) {
    if (pi.num_states() != model.num_states() || pi.num_actions() != model.num_actions())
        throw std::invalid_argument("assemble_generator: strategy shape mismatch");
    std::vector<Matrix> rates = evaluate_rates(model, m);
    return GeneratorMatrix(detail::mix_generator(rates, pi));
}

inline GeneratorMatrix assemble_generator(const ModelSpec& model,
                                          const PopulationDistribution& m,
                                          const DeterministicStrategy& d) {
    return assemble_generator(model, m, StationaryStrategy::pure(d, model.num_actions()));
}

/// True iff the directed graph with an edge (i,j) whenever Q_ij exceeds the
/// edge threshold is strongly connected.
inline bool is_irreducible(const GeneratorMatrix& q) {
    const int S = q.size();
    auto reaches_all = [&](bool transpose) {
        std::vector<bool> seen(static_cast<std::size_t>(S), false);
        std::vector<int> stack{0};
        seen[0] = true;
        int count = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < S; ++v) {
                if (v == u || seen[static_cast<std::size_t>(v)]) continue;
                double rate = transpose ? q(v, u) : q(u, v);
                if (rate > tol::edge) {
                    seen[static_cast<std::size_t>(v)] = true;
                    stack.push_back(v);
                    ++count;
                }
            }
        }
        return count == S;
    };
    return reaches_all(false) && reaches_all(true);
}

/// A stationary distribution together with its balance residual ||x^T Q||_inf.
struct StationaryPoint {
    PopulationDistribution dist;
    double residual = 0.0;
};

namespace detail {

inline Matrix minor_without(const Matrix& q, int drop_row, int drop_col) {
    const int S = static_cast<int>(q.rows());
    Matrix m(S - 1, S - 1);
    for (int i = 0, r = 0; i < S; ++i) {
        if (i == drop_row) continue;
        for (int j = 0, c = 0; j < S; ++j) {
            if (j == drop_col) continue;
            m(r, c++) = q(i, j);
        }
        ++r;
    }
    return m;
}

}  // namespace detail

/// Cofactor representation of the stationary distribution:
/// x_i proportional to (-1)^(S+i) det of Q with row i and the last column
/// deleted. Exact up to determinant round-off; meant for small S.
inline Vector cofactor_stationary(const GeneratorMatrix& q) {
    const int S = q.size();
    Vector numerators(S);
    for (int i = 0; i < S; ++i) {
        double det = detail::minor_without(q.entries(), i, S - 1).determinant();
        double sign = ((S + i + 1) % 2 == 0) ? 1.0 : -1.0;
        numerators[i] = sign * det;
    }
    double denom = numerators.sum();  // = det of the Q-tilde system matrix
    if (denom == 0.0 || !std::isfinite(denom))
        throw SingularSystem("cofactor stationary distribution: zero determinant");
    return numerators / denom;
}

/// Unique stationary distribution of an irreducible generator, from the
/// linear system Q-tilde x = e_S where Q-tilde is Q^T with the last row
/// replaced by ones. For small S the cofactor formula is run as a cross-check.
inline StationaryPoint stationary_distribution(const GeneratorMatrix& q) {
    if (!is_irreducible(q))
        throw ReducibleGenerator("generator is reducible; stationary distribution not unique");
    const int S = q.size();
    Matrix qtilde = q.entries().transpose();
    qtilde.row(S - 1).setOnes();
    Vector rhs = Vector::Zero(S);
    rhs[S - 1] = 1.0;

    Eigen::PartialPivLU<Matrix> lu(qtilde);
    Vector x = lu.solve(rhs);
    x += lu.solve(rhs - qtilde * x);  // one step of iterative refinement
    if (!x.allFinite())
        throw SingularSystem("stationary solve produced non-finite values");

    if (S <= 6) {
        Vector xc = cofactor_stationary(q);
        double scale = std::max(1.0, x.cwiseAbs().maxCoeff());
        if ((x - xc).cwiseAbs().maxCoeff() > 1e-6 * scale)
            throw SingularSystem("stationary solve disagrees with cofactor formula; "
                                 "numerical breakdown");
    }

    Vector clamped = x.cwiseMax(0.0);
    clamped /= clamped.sum();
    double residual = (clamped.transpose() * q.entries()).cwiseAbs().maxCoeff();
    double scale = std::max(1.0, q.entries().cwiseAbs().maxCoeff());
    if (residual > tol::stationary * scale)
        throw SingularSystem("stationary distribution residual " + std::to_string(residual) +
                             " exceeds tolerance");
    return {PopulationDistribution(clamped), residual};
}

/// Net probability flow into the set T minus flow out of it under x; zero for
/// every stationary x, whatever the strategy behind q.
inline double cut_residual(const GeneratorMatrix& q, const PopulationDistribution& x,
                           const std::vector<int>& t_set) {
    const int S = q.size();
    if (x.num_states() != S) throw std::invalid_argument("cut_residual: dimension mismatch");
    std::set<int> t(t_set.begin(), t_set.end());
    for (int s : t)
        if (s < 0 || s >= S) throw InvalidCut("cut set contains out-of-range state");
    if (t.empty() || static_cast<int>(t.size()) == S)
        throw InvalidCut("cut set must be a proper nonempty subset of the states");

    double flow_in = 0.0, flow_out = 0.0;
    for (int j : t)
        for (int i = 0; i < S; ++i) {
            if (t.count(i)) continue;
            flow_in += x[i] * q(i, j);
            flow_out += x[j] * q(j, i);
        }
    return flow_in - flow_out;
}

namespace detail {

inline int numerical_rank(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    double threshold = sv[0] * static_cast<double>(m.rows()) * 1e-12;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > threshold) ++rank;
    return rank;
}

}  // namespace detail

/// Structural checks on an irreducible conservative generator: the leading
/// principal minor (last row and column deleted) has determinant of sign
/// (-1)^(S+1), and Q itself has rank S-1.
inline bool minor_sign_check(const GeneratorMatrix& q) {
    if (!is_irreducible(q)) throw ReducibleGenerator("minor_sign_check requires irreducibility");
    const int S = q.size();
    double det = detail::minor_without(q.entries(), S - 1, S - 1).determinant();
    double expected_sign = ((S + 1) % 2 == 0) ? 1.0 : -1.0;
    if (det * expected_sign <= 0.0) return false;
    return detail::numerical_rank(q.entries()) == S - 1;
}

}  // namespace mfg
