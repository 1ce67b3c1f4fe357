#pragma once
// Domain types shared by every lfx module: embeddings, vote matrices, labels,
// radius configurations and label-model parameters.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace lfx {

// Error categories map one-to-one onto CLI exit codes.
enum class ErrorKind : int { Usage = 1, Data = 2, Numeric = 3 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct UsageError : Error {
    explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

struct DataError : Error {
    explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

// Degenerate or vacuous numerics (zero denominators, empty overlaps, ...).
struct NumericError : Error {
    explicit NumericError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

inline const char* to_string(ErrorKind k) {
    switch (k) {
        case ErrorKind::Usage: return "usage";
        case ErrorKind::Data: return "data";
        case ErrorKind::Numeric: return "numeric";
    }
    return "unknown";
}

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Distance { Cosine, Euclidean };

inline const char* to_string(Distance d) { return d == Distance::Cosine ? "cosine" : "euclidean"; }

inline Distance parse_distance(std::string_view s) {
    if (s == "cosine") return Distance::Cosine;
    if (s == "euclidean") return Distance::Euclidean;
    throw UsageError("unknown distance '" + std::string(s) + "' (expected cosine|euclidean)");
}

// 1 - <u,v> / (|u||v|), clamped to [0, 2] against rounding.
inline double cosine_distance(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw DataError("cosine_distance: dimension mismatch");
    double dot = 0.0, uu = 0.0, vv = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        dot += u[k] * v[k];
        uu += u[k] * u[k];
        vv += v[k] * v[k];
    }
    if (uu == 0.0 || vv == 0.0) throw std::domain_error("cosine_distance: zero-norm vector");
    const double d = 1.0 - dot / (std::sqrt(uu) * std::sqrt(vv));
    return std::clamp(d, 0.0, 2.0);
}

inline double euclidean_distance(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw DataError("euclidean_distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const double t = u[k] - v[k];
        s += t * t;
    }
    return std::sqrt(s);
}

// n x d embedding matrix. Rows must be finite and nonzero; unit-normalised
// copies are kept alongside for the cosine kernels.
class EmbeddingSet {
public:
    EmbeddingSet() = default;

    explicit EmbeddingSet(RowMatrix data) : data_(std::move(data)) {
        unit_.resize(data_.rows(), data_.cols());
        for (Eigen::Index i = 0; i < data_.rows(); ++i) {
            for (Eigen::Index k = 0; k < data_.cols(); ++k) {
                if (!std::isfinite(data_(i, k)))
                    throw DataError("embeddings: non-finite entry at row " + std::to_string(i));
            }
            const double norm = data_.row(i).norm();
            if (norm == 0.0) throw DataError("embeddings: zero vector at row " + std::to_string(i));
            unit_.row(i) = data_.row(i) / norm;
        }
    }

    std::size_t n() const noexcept { return static_cast<std::size_t>(data_.rows()); }
    std::size_t d() const noexcept { return static_cast<std::size_t>(data_.cols()); }
    const RowMatrix& data() const noexcept { return data_; }
    const RowMatrix& unit_rows() const noexcept { return unit_; }

    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * d(), d()};
    }

    double distance(std::size_t i, std::size_t k, Distance metric) const {
        if (metric == Distance::Cosine) {
            const double dot = unit_.row(static_cast<Eigen::Index>(i)).dot(unit_.row(static_cast<Eigen::Index>(k)));
            return std::clamp(1.0 - dot, 0.0, 2.0);
        }
        return euclidean_distance(row(i), row(k));
    }

private:
    RowMatrix data_;
    RowMatrix unit_;
};

// n x m matrix over {-1, 0, +1}; 0 is an abstain.
class VoteMatrix {
public:
    VoteMatrix() = default;
    VoteMatrix(std::size_t n, std::size_t m) : n_(n), m_(m), votes_(n * m, 0) {}

    VoteMatrix(std::size_t n, std::size_t m, std::vector<std::int8_t> votes)
        : n_(n), m_(m), votes_(std::move(votes)) {
        if (votes_.size() != n_ * m_) throw DataError("votes: payload size does not match n*m");
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < m_; ++j) check(i, j, votes_[i * m_ + j]);
    }

    std::size_t n() const noexcept { return n_; }
    std::size_t m() const noexcept { return m_; }

    int operator()(std::size_t i, std::size_t j) const { return votes_[i * m_ + j]; }

    void set(std::size_t i, std::size_t j, int v) {
        check(i, j, v);
        votes_[i * m_ + j] = static_cast<std::int8_t>(v);
    }

    std::span<const std::int8_t> row(std::size_t i) const { return {votes_.data() + i * m_, m_}; }
    std::span<const std::int8_t> raw() const noexcept { return votes_; }

    std::vector<std::int8_t> column(std::size_t j) const {
        std::vector<std::int8_t> c(n_);
        for (std::size_t i = 0; i < n_; ++i) c[i] = votes_[i * m_ + j];
        return c;
    }

    void set_column(std::size_t j, std::span<const std::int8_t> col) {
        if (col.size() != n_) throw DataError("votes: column length mismatch");
        for (std::size_t i = 0; i < n_; ++i) set(i, j, col[i]);
    }

    // Indices i with votes(i, j) != 0, ascending.
    std::vector<std::size_t> support(std::size_t j) const {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < n_; ++i)
            if (votes_[i * m_ + j] != 0) s.push_back(i);
        return s;
    }

    friend bool operator==(const VoteMatrix&, const VoteMatrix&) = default;

private:
    static void check(std::size_t i, std::size_t j, int v) {
        if (v < -1 || v > 1)
            throw DataError("votes: entry " + std::to_string(v) + " outside {-1,0,1} at (row " +
                            std::to_string(i) + ", col " + std::to_string(j) + ")");
    }

    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<std::int8_t> votes_;
};

// Hard labels in {-1, +1}.
class LabelVector {
public:
    LabelVector() = default;
    explicit LabelVector(std::vector<std::int8_t> labels) : labels_(std::move(labels)) {
        for (std::size_t i = 0; i < labels_.size(); ++i) check(i, labels_[i]);
    }

    std::size_t size() const noexcept { return labels_.size(); }
    int operator[](std::size_t i) const { return labels_[i]; }
    std::span<const std::int8_t> values() const noexcept { return labels_; }

    // Leading `count` entries.
    LabelVector head(std::size_t count) const {
        count = std::min(count, labels_.size());
        return LabelVector(std::vector<std::int8_t>(labels_.begin(), labels_.begin() + static_cast<std::ptrdiff_t>(count)));
    }

    double positive_fraction() const {
        if (labels_.empty()) return 0.0;
        return static_cast<double>(std::count(labels_.begin(), labels_.end(), std::int8_t{1})) /
               static_cast<double>(labels_.size());
    }

    friend bool operator==(const LabelVector&, const LabelVector&) = default;

private:
    static void check(std::size_t i, int v) {
        if (v != -1 && v != 1)
            throw DataError("labels: entry " + std::to_string(v) + " outside {-1,1} at (row " +
                            std::to_string(i) + ", col 0)");
    }

    std::vector<std::int8_t> labels_;
};

enum class Weighting { OneNearestNeighbor, ThresholdedWeightedSum };

inline const char* to_string(Weighting w) {
    return w == Weighting::OneNearestNeighbor ? "1nn" : "wsum";
}

inline Weighting parse_weighting(std::string_view s) {
    if (s == "1nn") return Weighting::OneNearestNeighbor;
    if (s == "wsum") return Weighting::ThresholdedWeightedSum;
    throw UsageError("unknown weighting '" + std::string(s) + "' (expected 1nn|wsum)");
}

// Per-source extension radii in distance units. Radius 0 disables extension.
struct RadiusConfig {
    std::vector<double> radii;
    Weighting weighting = Weighting::OneNearestNeighbor;

    void validate() const {
        for (std::size_t j = 0; j < radii.size(); ++j)
            if (!(radii[j] >= 0.0) || !std::isfinite(radii[j]))
                throw DataError("radius " + std::to_string(j) + " must be a finite nonnegative number");
    }

    static RadiusConfig uniform(std::size_t m, double r, Weighting w = Weighting::OneNearestNeighbor) {
        return {std::vector<double>(m, r), w};
    }
};

// Similarity thresholds s are converted to radii 1 - s.
inline std::vector<double> radii_from_similarities(std::span<const double> sims) {
    std::vector<double> r(sims.size());
    for (std::size_t i = 0; i < sims.size(); ++i) {
        if (sims[i] < -1.0 || sims[i] > 1.0)
            throw UsageError("similarity threshold " + std::to_string(sims[i]) + " outside [-1, 1]");
        r[i] = 1.0 - sims[i];
    }
    return r;
}

struct LabelModelParams {
    std::vector<double> accuracies;     // a_i = Pr(lambda_i = Y | lambda_i != 0)
    std::vector<double> abstain_rates;  // Pr(lambda_i = 0)
    double prior = 0.5;                 // Pr(Y = 1)

    std::size_t m() const noexcept { return accuracies.size(); }

    void validate() const {
        if (accuracies.size() != abstain_rates.size())
            throw DataError("params: accuracies and abstain_rates differ in length");
        if (!(prior > 0.0 && prior < 1.0)) throw DataError("params: prior must lie in (0, 1)");
        for (std::size_t i = 0; i < accuracies.size(); ++i) {
            if (!(accuracies[i] > 0.0 && accuracies[i] < 1.0))
                throw DataError("params: accuracy " + std::to_string(i) + " must lie in (0, 1)");
            if (!(abstain_rates[i] >= 0.0 && abstain_rates[i] <= 1.0))
                throw DataError("params: abstain rate " + std::to_string(i) + " must lie in [0, 1]");
        }
    }
};

}  // namespace lfx
