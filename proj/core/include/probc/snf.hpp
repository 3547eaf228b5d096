#ifndef PROBC_SNF_HPP
#define PROBC_SNF_HPP

#include <functional>
#include <optional>
#include <set>
#include <string>

#include "probc/expr.hpp"

namespace probc::snf {

// Positivity facts, keyed by canonical renderings. Distribution parameters
// and user assumptions land here; the engine consults them for sqrt
// extraction, sign decisions and Gaussian recognition.
struct Facts {
    std::set<std::string> positive;
    bool has(const std::string& k) const { return positive.count(k) > 0; }
};

enum class Sign { Positive, NonNegative, Unknown };

// Scalar normal form: every scalar expression becomes a quotient of
// polynomial sums over atoms (variables, pi, sqrt/pow/indicator/opaque
// subterms) where each product term carries one merged exp factor.
// Canonicalization cancels rational content, identical atoms and exact
// polynomial factors between numerator and denominator; a quotient agrees
// with its input everywhere the input was defined.
class Engine {
public:
    // `child_canon` canonicalizes non-scalar subterms (lambdas, measures)
    // before they are frozen into atoms.
    using ChildCanon = std::function<ExprPtr(const ExprPtr&)>;

    Engine(NameSupply& supply, Facts& facts, ChildCanon child_canon);
    ~Engine();

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    // Canonical form of a scalar expression (idempotent).
    ExprPtr canon_scalar(const ExprPtr& e);
    // Canonical form of a boolean condition (Less / conjunction chains).
    ExprPtr canon_bool(const ExprPtr& c);
    // Must be called whenever the Facts set changes; canonical forms of
    // previously seen subterms may depend on positivity.
    void invalidate_fact_cache();

    bool is_zero(const ExprPtr& e);
    bool is_one(const ExprPtr& e);
    // Literal value if the canonical form is a rational constant.
    std::optional<Rational> constant_value(const ExprPtr& e);

    Sign sign_of(const ExprPtr& e);
    std::string fact_key(const ExprPtr& e);

    // density == mass * NormalPdf(x; mean, sd) with x-free mean/sd. The
    // match requires the exponent to be quadratic in x with a provably
    // negative leading coefficient and no other x dependence.
    struct GaussianForm {
        ExprPtr mean, sd;
    };
    std::optional<GaussianForm> match_gaussian(const ExprPtr& density, const Name& x);

    // density == mass * x^a * (1-x)^b * exp(-rate*x) * indicators, with all
    // of a, b, rate free of x. Indicator conditions are reported verbatim.
    struct PowerExpForm {
        ExprPtr x_exponent;          // a (Lit 0 when absent)
        ExprPtr one_minus_x_exponent;  // b (Lit 0 when absent)
        ExprPtr rate;                // r (Lit 0 when absent)
        std::vector<ExprPtr> indicator_conds;
    };
    std::optional<PowerExpForm> match_power_exp(const ExprPtr& density, const Name& x);

    // Affine decomposition in x: e == slope*x + intercept with x-free parts.
    struct AffineForm {
        ExprPtr slope, intercept;
    };
    std::optional<AffineForm> match_affine(const ExprPtr& e, const Name& x);

private:
    struct Impl;
    Impl* impl_;
};

}  // namespace probc::snf

#endif
