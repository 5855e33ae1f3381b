#pragma once

#include <Eigen/Dense>

#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Numeric conventions shared across the library.
namespace tol {
inline constexpr double simplex = 1e-12;     // probability vectors: entry/sum slack
inline constexpr double row_sum = 1e-10;     // conservative generators: |row sum| bound
inline constexpr double off_diag = -1e-12;   // smallest admissible off-diagonal rate
inline constexpr double edge = 1e-12;        // rate threshold for transition-graph edges
inline constexpr double stationary = 1e-9;   // balance residual bound for stationary points
}  // namespace tol

struct MalformedModel : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateDynamics : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SingularSystem : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ReducibleGenerator : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidCut : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct Infeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidParams : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A probability vector over states. Entries are clamped at zero if they are
/// within the simplex tolerance of it; anything worse is rejected.
class PopulationDistribution {
public:
    explicit PopulationDistribution(Vector probs) : probs_(std::move(probs)) {
        if (probs_.size() < 1) throw std::invalid_argument("distribution: empty vector");
        double sum = 0.0;
        for (Eigen::Index i = 0; i < probs_.size(); ++i) {
            double v = probs_[i];
            if (!std::isfinite(v) || v < -tol::simplex)
                throw std::invalid_argument("distribution: negative entry at index " +
                                            std::to_string(i));
            probs_[i] = v < 0.0 ? 0.0 : v;
            sum += probs_[i];
        }
        // sum slack widens by one tolerance per entry to absorb the clamping
        if (std::abs(sum - 1.0) > (probs_.size() + 1) * tol::simplex)
            throw std::invalid_argument("distribution: entries sum to " + std::to_string(sum));
        probs_ /= sum;
    }

    const Vector& probs() const { return probs_; }
    int num_states() const { return static_cast<int>(probs_.size()); }
    double operator[](int i) const { return probs_[i]; }

private:
    Vector probs_;
};

/// A state-indexed action assignment; actions are 0-based internally.
struct DeterministicStrategy {
    std::vector<int> actions;

    int operator[](int i) const { return actions[static_cast<std::size_t>(i)]; }
    int num_states() const { return static_cast<int>(actions.size()); }

    friend bool operator==(const DeterministicStrategy& a, const DeterministicStrategy& b) {
        return a.actions == b.actions;
    }
    friend bool operator<(const DeterministicStrategy& a, const DeterministicStrategy& b) {
        return a.actions < b.actions;
    }
};

/// Per-state distributions over actions; row i is the action mix used in state i.
class StationaryStrategy {
public:
    explicit StationaryStrategy(Matrix probs) : probs_(std::move(probs)) {
        for (Eigen::Index i = 0; i < probs_.rows(); ++i) {
            double sum = 0.0;
            for (Eigen::Index a = 0; a < probs_.cols(); ++a) {
                double v = probs_(i, a);
                if (!std::isfinite(v) || v < -tol::simplex)
                    throw std::invalid_argument("strategy: negative probability in state " +
                                                std::to_string(i));
                probs_(i, a) = v < 0.0 ? 0.0 : v;
                sum += probs_(i, a);
            }
            if (std::abs(sum - 1.0) > (probs_.cols() + 1) * tol::simplex)
                throw std::invalid_argument("strategy: row " + std::to_string(i) +
                                            " sums to " + std::to_string(sum));
            probs_.row(i) /= sum;
        }
    }

    static StationaryStrategy pure(const DeterministicStrategy& d, int num_actions) {
        Matrix p = Matrix::Zero(d.num_states(), num_actions);
        for (int i = 0; i < d.num_states(); ++i) {
            if (d[i] < 0 || d[i] >= num_actions)
                throw std::invalid_argument("strategy: action index out of range");
            p(i, d[i]) = 1.0;
        }
        return StationaryStrategy(std::move(p));
    }

    static StationaryStrategy uniform(int num_states, int num_actions) {
        return StationaryStrategy(
            Matrix::Constant(num_states, num_actions, 1.0 / num_actions));
    }

    const Matrix& probs() const { return probs_; }
    double operator()(int i, int a) const { return probs_(i, a); }
    int num_states() const { return static_cast<int>(probs_.rows()); }
    int num_actions() const { return static_cast<int>(probs_.cols()); }

    bool is_deterministic(double eps = 1e-9) const {
        for (Eigen::Index i = 0; i < probs_.rows(); ++i)
            if (probs_.row(i).maxCoeff() < 1.0 - eps) return false;
        return true;
    }

    /// The action assignment of a (near-)deterministic strategy.
    DeterministicStrategy to_deterministic() const {
        DeterministicStrategy d;
        d.actions.resize(static_cast<std::size_t>(probs_.rows()));
        for (Eigen::Index i = 0; i < probs_.rows(); ++i) {
            Eigen::Index a;
            probs_.row(i).maxCoeff(&a);
            d.actions[static_cast<std::size_t>(i)] = static_cast<int>(a);
        }
        return d;
    }

private:
    Matrix probs_;
};

/// Uniform sample from the probability simplex (normalized exponentials).
inline Vector random_simplex_point(std::mt19937_64& rng, int num_states) {
    std::exponential_distribution<double> expo(1.0);
    Vector v(num_states);
    double sum = 0.0;
    for (int i = 0; i < num_states; ++i) {
        v[i] = expo(rng);
        sum += v[i];
    }
    return v / sum;
}

inline Vector simplex_vertex(int num_states, int k) {
    Vector v = Vector::Zero(num_states);
    v[k] = 1.0;
    return v;
}

}  // namespace mfg
