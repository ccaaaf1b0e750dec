#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace spdekit {

constexpr int kMaxDim = 4;
constexpr int kMaxJetOrder = 12;

using MultiIndex = std::array<std::uint8_t, kMaxDim>;

/// Enumeration of multi-indices |alpha| <= order in dim variables, graded
/// lexicographic, plus the precomputed machinery jet arithmetic runs on:
/// Leibniz product triples and derivative-shift maps.
///
/// Grading means the entries of the (dim, order-1) table are a prefix of the
/// (dim, order) table, so truncating a jet is just taking a prefix.
class MultiIndexTable {
public:
    static const MultiIndexTable& get(int dim, int order);

    int dim() const { return dim_; }
    int order() const { return order_; }
    int size() const { return static_cast<int>(alphas_.size()); }

    const MultiIndex& alpha(int i) const { return alphas_[i]; }
    int degree(int i) const { return degree_[i]; }

    /// entries with |alpha| <= q; q <= order
    int size_at_order(int q) const { return size_at_order_[q]; }

    int index_of(const MultiIndex& a) const;

    struct ProdTerm {
        std::int32_t a, b, out;
        double w; // product of per-axis binomials C(out, a)
    };
    /// all (a, b) with deg a + deg b <= order
    const std::vector<ProdTerm>& prod_terms() const { return prod_; }

    /// Index in this table of alpha(i) + e_axis, for i with degree(i) < order.
    /// shifted(axis)[i] drives d/dx_axis extraction: (D_axis f)^[alpha] = f^[alpha+e_axis].
    const std::vector<std::int32_t>& shifted(int axis) const { return shift_[axis]; }

private:
    MultiIndexTable(int dim, int order);

    int dim_, order_;
    std::vector<MultiIndex> alphas_;
    std::vector<int> degree_;
    std::vector<int> size_at_order_;
    std::vector<std::int32_t> key_to_index_; // mixed radix (order+1)^dim
    std::vector<ProdTerm> prod_;
    std::array<std::vector<std::int32_t>, kMaxDim> shift_;

    int key(const MultiIndex& a) const;
};

/// C(n+k, k) table size helper
long binom(int n, int k);

} // namespace spdekit
