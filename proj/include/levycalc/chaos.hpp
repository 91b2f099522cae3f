#pragma once

// The random measure M on [0,T] x R, elementary multiple integrals I_n,
// the isometry, finite chaos expansions and the chaos-shift Skorohod
// integral for finitely chaotic fields.

#include <string>
#include <vector>

#include "levycalc/canonical_path.hpp"
#include "levycalc/functionals.hpp"

namespace levycalc {

struct MeasureValue {
    double value = 0.0;
    std::vector<std::string> warnings;
};

/// M(E) = sigma (W(b) - W(a)) on the diffusion slice plus the compensated
/// jump sum over the nonzero part of E.
MeasureValue M_of_set(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition,
                      const ProductRegion& region);

/// [M(E)] = sigma^2 |E_0| + sum of squared jumps in E.
double quadratic_variation(const CanonicalPath& path, const LevyModel& model, const ProductRegion& region);

/// sum_i a_i 1_{A_{i_1} x ... x A_{i_n}} over pairwise disjoint regions A.
class ElementaryKernel {
public:
    struct Term {
        std::vector<int> indices;
        double coefficient = 0.0;
    };

    /// Order-0 kernel (a constant).
    static ElementaryKernel constant(double c);
    /// Throws InvalidArgument on overlapping regions, wrong arity, or a
    /// nonzero coefficient on a tuple with a repeated index.
    ElementaryKernel(int order, std::vector<ProductRegion> regions, std::vector<Term> terms);

    int order() const { return order_; }
    const std::vector<ProductRegion>& regions() const { return regions_; }
    const std::vector<Term>& terms() const { return terms_; }
    double constant_value() const { return constant_; }

private:
    ElementaryKernel() = default;
    int order_ = 0;
    double constant_ = 0.0;
    std::vector<ProductRegion> regions_;
    std::vector<Term> terms_;
};

/// Average over all n! slot permutations (n <= 5).
ElementaryKernel symmetrize(const ElementaryKernel& kernel);

double multiple_integral(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition,
                         const ElementaryKernel& kernel);

/// E[I_n(f) I_m(g)] = delta_{nm} n! <f~, g~> under the control measure of
/// the simulated (truncated) model.
double isometry_analytic(const LevyModel& model, const ShellPartition& partition, const ElementaryKernel& f,
                         const ElementaryKernel& g);

struct IsometryCheck {
    double estimate = 0.0;
    double std_error = 0.0;
    double analytic = 0.0;
};

IsometryCheck isometry_check(const PathEnsemble& ensemble, const ElementaryKernel& f, const ElementaryKernel& g,
                             unsigned workers = 1);

/// c + sum_n I_n(f_n).
class ChaosExpansion {
public:
    ChaosExpansion(double constant, std::vector<ElementaryKernel> kernels);

    double constant() const { return constant_; }
    const std::vector<ElementaryKernel>& kernels() const { return kernels_; }
    double operator()(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition) const;
    /// As a RandomFunctional with exact Brownian gradient and Hessian.
    RandomFunctional functional(const LevyModel& model, const ShellPartition& partition,
                                std::string name = "chaos") const;

private:
    double constant_ = 0.0;
    std::vector<ElementaryKernel> kernels_;
};

/// u(z, omega) = sum_k c_k 1_{E_k}(z) I_{n_k}(f_k)(omega).
struct ChaosField {
    struct Term {
        ProductRegion z_region;
        double coefficient = 1.0;
        ElementaryKernel kernel = ElementaryKernel::constant(1.0);
    };
    std::vector<Term> terms;
};

/// delta(u) = sum_k c_k I_{n_k+1}(sym(1_{E_k} x f_k)). A z-region equal to
/// a kernel region uses I_2(1_{ExE}) = M(E)^2 - [M(E)]; other overlaps
/// throw UnsupportedOperation.
double skorohod_chaos(const CanonicalPath& path, const LevyModel& model, const ShellPartition& partition,
                      const ChaosField& field);

}  // namespace levycalc
