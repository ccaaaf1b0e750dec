#include "spdekit/multi_index.hpp"

#include "spdekit/errors.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <mutex>

namespace spdekit {

long binom(int n, int k) {
    if (k < 0 || k > n) return 0;
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

namespace {

void enumerate_degree(int dim, int deg, MultiIndex& cur, int axis, std::vector<MultiIndex>& out) {
    if (axis == dim - 1) {
        cur[axis] = static_cast<std::uint8_t>(deg);
        out.push_back(cur);
        cur[axis] = 0;
        return;
    }
    for (int v = deg; v >= 0; --v) {
        cur[axis] = static_cast<std::uint8_t>(v);
        enumerate_degree(dim, deg - v, cur, axis + 1, out);
    }
    cur[axis] = 0;
}

} // namespace

MultiIndexTable::MultiIndexTable(int dim, int order) : dim_(dim), order_(order) {
    size_at_order_.assign(order + 1, 0);
    MultiIndex cur{};
    for (int g = 0; g <= order; ++g) {
        enumerate_degree(dim, g, cur, 0, alphas_);
        size_at_order_[g] = static_cast<int>(alphas_.size());
    }
    degree_.resize(alphas_.size());
    for (std::size_t i = 0; i < alphas_.size(); ++i) {
        int g = 0;
        for (int a = 0; a < dim; ++a) g += alphas_[i][a];
        degree_[i] = g;
    }

    int radix = order + 1;
    long nkeys = 1;
    for (int a = 0; a < dim; ++a) nkeys *= radix;
    key_to_index_.assign(static_cast<std::size_t>(nkeys), -1);
    for (std::size_t i = 0; i < alphas_.size(); ++i)
        key_to_index_[static_cast<std::size_t>(key(alphas_[i]))] = static_cast<std::int32_t>(i);

    // Leibniz: D^g(fh) = sum_{a+b=g} prod_i C(g_i, a_i) D^a f D^b h
    for (int i = 0; i < size(); ++i) {
        for (int j = 0; j < size(); ++j) {
            if (degree_[i] + degree_[j] > order) continue;
            MultiIndex sum{};
            double w = 1.0;
            for (int a = 0; a < dim; ++a) {
                sum[a] = static_cast<std::uint8_t>(alphas_[i][a] + alphas_[j][a]);
                w *= static_cast<double>(binom(sum[a], alphas_[i][a]));
            }
            prod_.push_back({static_cast<std::int32_t>(i), static_cast<std::int32_t>(j),
                             key_to_index_[static_cast<std::size_t>(key(sum))], w});
        }
    }
    // Group by output for cache-friendlier accumulation.
    std::stable_sort(prod_.begin(), prod_.end(),
                     [](const ProdTerm& x, const ProdTerm& y) { return x.out < y.out; });

    for (int axis = 0; axis < dim; ++axis) {
        int n = order > 0 ? size_at_order_[order - 1] : 0;
        shift_[axis].resize(n);
        for (int i = 0; i < n; ++i) {
            MultiIndex a = alphas_[i];
            a[axis] = static_cast<std::uint8_t>(a[axis] + 1);
            shift_[axis][i] = key_to_index_[static_cast<std::size_t>(key(a))];
        }
    }
}

int MultiIndexTable::key(const MultiIndex& a) const {
    int radix = order_ + 1;
    int k = 0;
    for (int i = dim_ - 1; i >= 0; --i) k = k * radix + a[i];
    return k;
}

int MultiIndexTable::index_of(const MultiIndex& a) const {
    for (int i = 0; i < dim_; ++i)
        if (a[i] > order_) return -1;
    int g = 0;
    for (int i = 0; i < dim_; ++i) g += a[i];
    if (g > order_) return -1;
    return key_to_index_[static_cast<std::size_t>(key(a))];
}

const MultiIndexTable& MultiIndexTable::get(int dim, int order) {
    if (dim < 1 || dim > kMaxDim)
        throw ValidationError("multi-index table: dimension " + std::to_string(dim) +
                              " outside [1, " + std::to_string(kMaxDim) + "]");
    if (order < 0 || order > kMaxJetOrder)
        throw ValidationError("multi-index table: order " + std::to_string(order) +
                              " outside [0, " + std::to_string(kMaxJetOrder) + "]");
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::unique_ptr<MultiIndexTable>> cache;
    std::lock_guard<std::mutex> lk(mu);
    auto& slot = cache[{dim, order}];
    if (!slot) slot.reset(new MultiIndexTable(dim, order));
    return *slot;
}

} // namespace spdekit
