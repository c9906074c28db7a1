#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace instanton {

struct ComplexError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dense integer matrix, desk scale.
struct IntMat {
    int rows = 0, cols = 0;
    std::vector<std::int64_t> data;  // row-major

    IntMat() = default;
    IntMat(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0) {}
    std::int64_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    std::int64_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    static IntMat identity(int n);
    IntMat multiply(const IntMat& other) const;
    bool is_zero() const;
};

struct SmithResult {
    std::vector<std::int64_t> invariant_factors;  // nonzero diagonal, divisibility chain
    int rank = 0;
    IntMat U, V;  // unimodular, U * A * V = diag(invariant_factors)
};

SmithResult smith_normal_form(const IntMat& a);

// Graded integer complex.  Differentials map degree k to k-1 (boundary) or to
// k+1 (coboundary); the flag records which way the arrows point.
struct ChainComplex {
    std::vector<int> ranks;                             // per degree 0..top
    std::vector<std::vector<std::string>> labels;       // generator labels per degree
    // boundary direction: matrices[k] : C_k -> C_{k-1}, shape ranks[k-1] x ranks[k]
    // coboundary direction: matrices[k] : C^k -> C^{k+1}, shape ranks[k+1] x ranks[k]
    std::vector<IntMat> matrices;
    bool coboundary = false;
};

struct HomologyDegree {
    int betti = 0;
    std::vector<std::int64_t> torsion;  // non-unit invariant factors
};

// Fails hard if composable pairs do not multiply to zero.
std::vector<HomologyDegree> homology(const ChainComplex& complex);

// ---- manifolds with corners -------------------------------------------------

// Corner components graded by dimension with the signed incidence function.
struct CornerPoset {
    // components[k] = labels of the k-dimensional components
    std::vector<std::vector<std::string>> components;
    // incidence[k][(a, b)] = I_k(alpha_a, beta_b) with alpha in P_k, beta in P_{k-1};
    // index 0 of the vector corresponds to k = 1.
    std::vector<std::map<std::pair<int, int>, int>> incidence;

    int top_dim() const { return static_cast<int>(components.size()) - 1; }
    int incidence_value(int k, int alpha, int beta) const;
    void set_incidence(int k, int alpha, int beta, int value);
};

struct IncidenceViolation {
    int k;  // degrees (k+1, k-1) pair
    int alpha_prime, alpha_dblprime;
    std::int64_t sum;
};

struct IncidenceReport {
    bool passes = true;
    std::vector<IncidenceViolation> violations;
};

CornerPoset interval_poset();
CornerPoset point_poset();
CornerPoset corner_poset_product(const CornerPoset& p, const CornerPoset& q);
IncidenceReport incidence_check(const CornerPoset& p);

// Flip the declared orientation of one component: negates its row and column
// in the incidence function.
void flip_orientation(CornerPoset& p, int dim, int component);

// Cochain complex over Z built from the incidence function.
ChainComplex incidence_cochain_complex(const CornerPoset& p);
std::vector<HomologyDegree> incidence_cohomology(const CornerPoset& p,
                                                 bool use_rationals = false);

// Morse complex from signed instanton counts: counts[(i, j)] is the signed
// count from generator i (index k) to generator j (index k-1), keyed by label.
ChainComplex build_morse_complex(
    const std::vector<std::pair<std::string, int>>& generators_with_index,
    const std::map<std::pair<std::string, std::string>, std::int64_t>& signed_counts);

// Structured-text serialization, round-trip stable.
std::string poset_to_text(const CornerPoset& p);
CornerPoset poset_from_text(const std::string& text);
std::string complex_to_text(const ChainComplex& c);
ChainComplex complex_from_text(const std::string& text);

}  // namespace instanton
