#pragma once

#include "lssp/common.hpp"
#include "lssp/feature_map.hpp"
#include "lssp/ssp.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace lssp {

/// One-hot features over the non-goal pairs: d = (S-1)*A, goal rows zero.
/// Non-goal states are ranked in index order with the goal skipped.
FeatureMap tabular_features(int n_states, int n_actions, StateId goal);
inline FeatureMap tabular_features(int n_states, int n_actions) {
    return tabular_features(n_states, n_actions, n_states - 1);
}

/// Orthonormal re-embedding of a feature map.
///
/// The distinct non-goal feature vectors phi_1..phi_{d'} (in order of first
/// appearance) are stacked as Xi = [Phi | 0] (d x d''). `basis` is an
/// orthogonal d'' x d'' matrix Phi~ and `r_matrix` = Xi Phi~^T, so that
/// Xi = R Phi~. Pair (s,a) is routed to column index_map[(s,a)] of Phi~, which
/// becomes its new feature vector; only the first d' columns are ever used.
struct OrthonormalizeResult {
    FeatureMap new_features;
    Matrix r_matrix;               ///< d x d''
    Matrix basis;                  ///< d'' x d'', orthogonal
    std::vector<int> index_map;    ///< per FeatureMap row; -1 for goal rows
    int distinct = 0;              ///< d'
};

/// Online Gram-Schmidt over the stream of observed feature vectors. A vector
/// seen for the first time appends one orthonormal column; emitted columns
/// never change afterwards.
class StreamingOrthonormalizer {
public:
    StreamingOrthonormalizer(int input_dim, int capacity);

    struct Step {
        int column = -1;         ///< column assigned to the observed vector
        bool new_column = false;
    };

    /// Throws CapacityError when a (capacity+1)-th distinct vector arrives.
    Step observe(const Eigen::Ref<const Vector>& phi);

    int input_dim() const noexcept { return input_dim_; }
    int capacity() const noexcept { return capacity_; }
    int size() const noexcept { return static_cast<int>(sources_.size()); }

    /// Emitted orthonormal columns, capacity x size().
    Matrix columns() const;
    Vector column(int i) const { return columns_[static_cast<std::size_t>(i)]; }
    /// Distinct input vectors in the order they were assigned columns, d x size().
    Matrix sources() const;

    /// Completes the emitted columns to an orthogonal capacity x capacity matrix.
    Matrix completed_basis() const;

private:
    using Key = std::vector<std::int64_t>;
    Key canonical_key(const Eigen::Ref<const Vector>& phi) const;
    Vector next_orthonormal(Vector candidate, const std::vector<Vector>& existing) const;

    int input_dim_;
    int capacity_;
    std::map<Key, int> seen_;
    std::vector<Vector> sources_;
    std::vector<Vector> columns_;
};

/// Throws CapacityError when the number of distinct non-goal vectors exceeds d_cap.
OrthonormalizeResult orthonormalize(const FeatureMap& features, int d_cap);

/// The same SSP expressed in orthonormalized features: (phi~, R^T theta, R^T mu).
LinearSsp transform_model(const LinearSsp& ssp, const OrthonormalizeResult& ortho);

}  // namespace lssp
