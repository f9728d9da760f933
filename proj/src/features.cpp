#include "lssp/features.hpp"

#include <cmath>

namespace lssp {

namespace {

constexpr double kDedupQuantum = 1e-12;
constexpr double kResidualFloor = 1e-10;

void orthogonalize_against(Vector& v, const std::vector<Vector>& basis) {
    // Two MGS sweeps; the second removes what cancellation left behind.
    for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : basis) v -= q.dot(v) * q;
    }
}

}  // namespace

FeatureMap tabular_features(int n_states, int n_actions, StateId goal) {
    if (n_states < 2 || n_actions < 1) {
        throw std::invalid_argument("tabular_features: need n_states >= 2 and n_actions >= 1");
    }
    const int d = (n_states - 1) * n_actions;
    Matrix table = Matrix::Zero(static_cast<Eigen::Index>(n_states) * n_actions, d);
    int rank = 0;
    for (StateId s = 0; s < n_states; ++s) {
        if (s == goal) continue;
        for (ActionId a = 0; a < n_actions; ++a) {
            table(static_cast<Eigen::Index>(s) * n_actions + a, rank * n_actions + a) = 1.0;
        }
        ++rank;
    }
    return FeatureMap(n_states, n_actions, goal, std::move(table));
}

StreamingOrthonormalizer::StreamingOrthonormalizer(int input_dim, int capacity)
    : input_dim_(input_dim), capacity_(capacity) {
    if (input_dim < 1 || capacity < 1) {
        throw std::invalid_argument("StreamingOrthonormalizer: dimensions must be positive");
    }
}

StreamingOrthonormalizer::Key StreamingOrthonormalizer::canonical_key(const Eigen::Ref<const Vector>& phi) const {
    Key key(static_cast<std::size_t>(phi.size()));
    for (Eigen::Index i = 0; i < phi.size(); ++i) {
        key[static_cast<std::size_t>(i)] = std::llround(phi(i) / kDedupQuantum);
    }
    return key;
}

Vector StreamingOrthonormalizer::next_orthonormal(Vector candidate, const std::vector<Vector>& existing) const {
    orthogonalize_against(candidate, existing);
    double norm = candidate.norm();
    if (norm >= kResidualFloor) {
        candidate /= norm;
        orthogonalize_against(candidate, existing);
        return candidate / candidate.norm();
    }
    // Dependent input: fill with the canonical basis vector that keeps the
    // largest residual against the current columns.
    Vector best;
    double best_norm = -1.0;
    for (int j = 0; j < capacity_; ++j) {
        Vector e = Vector::Unit(capacity_, j);
        orthogonalize_against(e, existing);
        norm = e.norm();
        if (norm > best_norm + 1e-12) {
            best_norm = norm;
            best = std::move(e);
        }
    }
    best /= best_norm;
    orthogonalize_against(best, existing);
    return best / best.norm();
}

StreamingOrthonormalizer::Step StreamingOrthonormalizer::observe(const Eigen::Ref<const Vector>& phi) {
    if (phi.size() != input_dim_) throw ShapeError("StreamingOrthonormalizer: wrong feature dimension");
    Key key = canonical_key(phi);
    if (auto it = seen_.find(key); it != seen_.end()) return {it->second, false};
    if (size() >= capacity_) {
        throw CapacityError("orthonormalize: more than " + std::to_string(capacity_) +
                                " distinct feature vectors",
                            static_cast<double>(capacity_ + 1));
    }
    Vector embedded = Vector::Zero(capacity_);
    const int shared = std::min(input_dim_, capacity_);
    embedded.head(shared) = phi.head(shared);
    columns_.push_back(next_orthonormal(std::move(embedded), columns_));
    sources_.emplace_back(phi);
    const int column = size() - 1;
    seen_.emplace(std::move(key), column);
    return {column, true};
}

Matrix StreamingOrthonormalizer::columns() const {
    Matrix m(capacity_, size());
    for (int i = 0; i < size(); ++i) m.col(i) = columns_[static_cast<std::size_t>(i)];
    return m;
}

Matrix StreamingOrthonormalizer::sources() const {
    Matrix m(input_dim_, size());
    for (int i = 0; i < size(); ++i) m.col(i) = sources_[static_cast<std::size_t>(i)];
    return m;
}

Matrix StreamingOrthonormalizer::completed_basis() const {
    std::vector<Vector> cols = columns_;
    while (static_cast<int>(cols.size()) < capacity_) {
        cols.push_back(next_orthonormal(Vector::Zero(capacity_), cols));
    }
    Matrix m(capacity_, capacity_);
    for (int i = 0; i < capacity_; ++i) m.col(i) = cols[static_cast<std::size_t>(i)];
    return m;
}

OrthonormalizeResult orthonormalize(const FeatureMap& features, int d_cap) {
    StreamingOrthonormalizer stream(features.dim(), d_cap);
    OrthonormalizeResult out;
    out.index_map.assign(static_cast<std::size_t>(features.table().rows()), -1);
    for (StateId s = 0; s < features.n_states(); ++s) {
        if (s == features.goal()) continue;
        for (ActionId a = 0; a < features.n_actions(); ++a) {
            const auto row = features.row(s, a);
            out.index_map[row] = stream.observe(features.table().row(static_cast<Eigen::Index>(row)).transpose()).column;
        }
    }
    out.distinct = stream.size();
    out.basis = stream.completed_basis();
    out.r_matrix = stream.sources() * out.basis.leftCols(out.distinct).transpose();

    Matrix table = Matrix::Zero(features.table().rows(), d_cap);
    for (std::size_t row = 0; row < out.index_map.size(); ++row) {
        if (out.index_map[row] < 0) continue;
        table.row(static_cast<Eigen::Index>(row)) = out.basis.col(out.index_map[row]).transpose();
    }
    out.new_features = FeatureMap(features.n_states(), features.n_actions(), features.goal(), std::move(table));
    return out;
}

LinearSsp transform_model(const LinearSsp& ssp, const OrthonormalizeResult& ortho) {
    if (ortho.r_matrix.rows() != ssp.dim()) throw ShapeError("transform_model: R does not match model dimension");
    LinearSsp out;
    out.features = ortho.new_features;
    out.theta = ortho.r_matrix.transpose() * ssp.theta;
    out.mu = ssp.mu * ortho.r_matrix;
    return out;
}

}  // namespace lssp
