#pragma once

#include "mfg/types.hpp"

#include <algorithm>
#include <numeric>

namespace mfg {

struct Monomial {
    double coef = 0.0;
    std::vector<int> powers;  // one exponent per state variable
};

/// Multivariate polynomial in the components of a population distribution.
class Polynomial {
public:
    Polynomial() = default;
    explicit Polynomial(int num_vars) : num_vars_(num_vars) {}

    static Polynomial constant(int num_vars, double c) {
        Polynomial p(num_vars);
        if (c != 0.0) p.terms_.push_back({c, std::vector<int>(num_vars, 0)});
        return p;
    }

    /// c * m_var
    static Polynomial linear(int num_vars, int var, double c) {
        Polynomial p(num_vars);
        std::vector<int> pw(num_vars, 0);
        if (var < 0 || var >= num_vars)
            throw MalformedModel("polynomial references state index " + std::to_string(var + 1) +
                                 " outside 1.." + std::to_string(num_vars));
        pw[var] = 1;
        if (c != 0.0) p.terms_.push_back({c, std::move(pw)});
        return p;
    }

    void add_term(double coef, std::vector<int> powers) {
        if (static_cast<int>(powers.size()) != num_vars_)
            throw MalformedModel("polynomial term has " + std::to_string(powers.size()) +
                                 " exponents, expected " + std::to_string(num_vars_));
        for (int e : powers)
            if (e < 0) throw MalformedModel("polynomial term has a negative exponent");
        terms_.push_back({coef, std::move(powers)});
    }

    double eval(const Vector& m) const {
        double result = 0.0;
        for (const auto& t : terms_) {
            double v = t.coef;
            for (std::size_t k = 0; k < t.powers.size(); ++k)
                for (int e = 0; e < t.powers[k]; ++e) v *= m[static_cast<Eigen::Index>(k)];
            result += v;
        }
        return result;
    }

    int degree() const {
        int d = 0;
        for (const auto& t : terms_)
            if (t.coef != 0.0)
                d = std::max(d, std::accumulate(t.powers.begin(), t.powers.end(), 0));
        return d;
    }

    bool is_constant() const { return degree() == 0; }
    bool is_zero() const {
        return std::all_of(terms_.begin(), terms_.end(),
                           [](const Monomial& t) { return t.coef == 0.0; });
    }

    Polynomial& operator+=(const Polynomial& other) {
        if (other.num_vars_ != num_vars_)
            throw MalformedModel("polynomial arity mismatch");
        terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
        return *this;
    }

    Polynomial operator-() const {
        Polynomial p = *this;
        for (auto& t : p.terms_) t.coef = -t.coef;
        return p;
    }

    int num_vars() const { return num_vars_; }
    const std::vector<Monomial>& terms() const { return terms_; }

private:
    int num_vars_ = 0;
    std::vector<Monomial> terms_;
};

}  // namespace mfg
