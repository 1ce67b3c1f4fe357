#pragma once
// Nearest-neighbour extension of labeling-function votes through an embedding
// space, plus the coverage and overlap statistics that describe its effect.
//
// Every neighbourhood is found by an exhaustive scan over the source's
// original support. Newly labeled points never seed further extension.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lfx/core.hpp"
#include "lfx/parallel.hpp"

namespace lfx {

struct Neighbor {
    std::size_t index;
    double distance;
};

// Support points of one source within radius of a query, sorted by
// (distance, index).
struct NeighborSet {
    std::size_t query_index = 0;
    std::vector<Neighbor> neighbors;
};

struct ExtensionOptions {
    Distance distance = Distance::Cosine;
    unsigned threads = 1;
};

struct SourceExtension {
    double radius = 0.0;
    double coverage_before = 0.0;
    double coverage_after = 0.0;
    double newly_labeled = 0.0;  // |B_r(lambda_j)| / n
};

struct ExtensionReport {
    std::vector<SourceExtension> sources;
    std::optional<double> min_overlap_before;  // absent when m < 2
    std::optional<double> min_overlap_after;
    Weighting weighting = Weighting::OneNearestNeighbor;
    Distance distance = Distance::Cosine;
};

inline nlohmann::json to_json(const ExtensionReport& r) {
    nlohmann::json sources = nlohmann::json::array();
    for (std::size_t j = 0; j < r.sources.size(); ++j) {
        const auto& s = r.sources[j];
        sources.push_back({{"source", j},
                           {"radius", s.radius},
                           {"coverage_before", s.coverage_before},
                           {"coverage_after", s.coverage_after},
                           {"newly_labeled", s.newly_labeled}});
    }
    nlohmann::json j = {{"weighting", to_string(r.weighting)}, {"distance", to_string(r.distance)}, {"sources", sources}};
    j["min_overlap_before"] = r.min_overlap_before ? nlohmann::json(*r.min_overlap_before) : nlohmann::json(nullptr);
    j["min_overlap_after"] = r.min_overlap_after ? nlohmann::json(*r.min_overlap_after) : nlohmann::json(nullptr);
    return j;
}

// Fraction of rows with a nonzero vote, per column.
inline std::vector<double> coverage(const VoteMatrix& votes) {
    std::vector<double> cov(votes.m(), 0.0);
    if (votes.n() == 0) return cov;
    std::vector<std::size_t> count(votes.m(), 0);
    for (std::size_t i = 0; i < votes.n(); ++i)
        for (std::size_t j = 0; j < votes.m(); ++j) count[j] += votes(i, j) != 0;
    for (std::size_t j = 0; j < votes.m(); ++j)
        cov[j] = static_cast<double>(count[j]) / static_cast<double>(votes.n());
    return cov;
}

// Empirical fraction of rows where both sources vote, as an m x m row-major table.
inline std::vector<double> overlap_table(const VoteMatrix& votes) {
    const std::size_t m = votes.m();
    std::vector<std::size_t> both(m * m, 0);
    for (std::size_t i = 0; i < votes.n(); ++i) {
        const auto row = votes.row(i);
        for (std::size_t a = 0; a < m; ++a) {
            if (row[a] == 0) continue;
            for (std::size_t b = a; b < m; ++b) both[a * m + b] += row[b] != 0;
        }
    }
    std::vector<double> o(m * m, 0.0);
    const double n = votes.n() ? static_cast<double>(votes.n()) : 1.0;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a; b < m; ++b) o[a * m + b] = o[b * m + a] = static_cast<double>(both[a * m + b]) / n;
    return o;
}

// o_min = min_i max_{j != i} Pr(X in supp_i and supp_j), empirically.
inline double min_overlap(const VoteMatrix& votes) {
    const std::size_t m = votes.m();
    if (m < 2) throw DataError("min_overlap requires at least 2 sources");
    const auto o = overlap_table(votes);
    double result = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < m; ++i) {
        double best = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) best = std::max(best, o[i * m + j]);
        result = std::min(result, best);
    }
    return result;
}

namespace detail {

inline constexpr std::size_t kQueryBlock = 128;

using FloatRowMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Gathers rows (unit rows for cosine, raw rows otherwise) into a dense matrix.
inline RowMatrix gather_rows(const EmbeddingSet& emb, std::span<const std::size_t> idx, Distance metric) {
    const RowMatrix& src = metric == Distance::Cosine ? emb.unit_rows() : emb.data();
    RowMatrix out(static_cast<Eigen::Index>(idx.size()), src.cols());
    for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = src.row(static_cast<Eigen::Index>(idx[r]));
    return out;
}

inline FloatRowMatrix gather_unit_float(const EmbeddingSet& emb, std::span<const std::size_t> idx) {
    FloatRowMatrix out(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(emb.d()));
    for (std::size_t r = 0; r < idx.size(); ++r)
        out.row(static_cast<Eigen::Index>(r)) = emb.unit_rows().row(static_cast<Eigen::Index>(idx[r])).cast<float>();
    return out;
}

// The support side of a scan. Decisions are always made on the exact
// distances of EmbeddingSet::distance; for cosine a single-precision GEMM
// screens candidates first and only pairs within `margin` of a decision
// boundary are recomputed in double.
struct SupportSet {
    std::span<const std::size_t> index;
    Distance metric;
    FloatRowMatrix unit_f;  // cosine
    RowMatrix raw;          // euclidean
    double margin = 0.0;
};

inline SupportSet make_support(const EmbeddingSet& emb, std::span<const std::size_t> support, Distance metric) {
    SupportSet s{support, metric, {}, {}, 0.0};
    if (metric == Distance::Cosine) {
        s.unit_f = gather_unit_float(emb, support);
        // Bound on |float dot - double dot| for unit rows, with headroom.
        s.margin = 4.0 * static_cast<double>(emb.d() + 2) * std::numeric_limits<float>::epsilon();
    } else {
        s.raw = gather_rows(emb, support, metric);
    }
    return s;
}

// Approximate distances for a query block against the whole support, with
// exact() available for refinement. |approx - exact| <= margin.
struct ScreenedBlock {
    const EmbeddingSet& emb;
    const SupportSet& sup;
    std::span<const std::size_t> queries;  // global row ids of this block
    FloatRowMatrix dot;                    // cosine
    RowMatrix dist;                        // euclidean

    bool cosine() const { return sup.metric == Distance::Cosine; }
    double margin() const { return sup.margin; }
    std::size_t cols() const { return sup.index.size(); }
    double approx(std::size_t q, std::size_t s) const {
        const auto r = static_cast<Eigen::Index>(q), c = static_cast<Eigen::Index>(s);
        return cosine() ? std::clamp(1.0 - static_cast<double>(dot(r, c)), 0.0, 2.0) : dist(r, c);
    }
    double row_min(std::size_t q) const {
        const auto r = static_cast<Eigen::Index>(q);
        return cosine() ? std::clamp(1.0 - static_cast<double>(dot.row(r).maxCoeff()), 0.0, 2.0) : dist.row(r).minCoeff();
    }
    double exact(std::size_t q, std::size_t s) const { return emb.distance(queries[q], sup.index[s], sup.metric); }

    // Exact nearest support point; ties keep the smaller support index.
    std::pair<double, std::size_t> nearest(std::size_t q) const {
        const auto r = static_cast<Eigen::Index>(q);
        const std::size_t S = cols();
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        if (!cosine()) {
            const double* d = dist.data() + q * S;
            for (std::size_t s = 0; s < S; ++s)
                if (d[s] < best) {
                    best = d[s];
                    arg = s;
                }
            return {best, arg};
        }
        // Only dots within 2 * margin of the largest can hold the exact minimum.
        const float* f = dot.data() + q * S;
        const double cut = static_cast<double>(dot.row(r).maxCoeff()) - 2.0 * margin();
        for (std::size_t s = 0; s < S; ++s) {
            if (static_cast<double>(f[s]) < cut) continue;
            const double e = exact(q, s);
            if (e < best) {
                best = e;
                arg = s;
            }
        }
        return {best, arg};
    }
};

inline void fill_block(ScreenedBlock& blk) {
    const auto rows = static_cast<Eigen::Index>(blk.queries.size());
    if (blk.cosine()) {
        const FloatRowMatrix q = gather_unit_float(blk.emb, blk.queries);
        blk.dot.resize(rows, blk.sup.unit_f.rows());
        blk.dot.noalias() = q * blk.sup.unit_f.transpose();
        return;
    }
    const RowMatrix q = gather_rows(blk.emb, blk.queries, Distance::Euclidean);
    const RowMatrix& s = blk.sup.raw;
    blk.dist.resize(rows, s.rows());
    const Eigen::Index d = q.cols();
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double* x = q.data() + i * d;
        for (Eigen::Index k = 0; k < s.rows(); ++k) {
            const double* y = s.data() + k * d;
            double acc = 0.0;
            for (Eigen::Index c = 0; c < d; ++c) {
                const double t = x[c] - y[c];
                acc += t * t;
            }
            blk.dist(i, k) = std::sqrt(acc);
        }
    }
}

// Visits each query block of `queries`. fn(block_begin, block) runs on worker
// threads; blocks are formed identically regardless of thread count.
template <class Fn>
void for_each_query_block(const EmbeddingSet& emb, std::span<const std::size_t> queries, const SupportSet& sup,
                          std::size_t threads, Fn&& fn) {
    const std::size_t blocks = (queries.size() + kQueryBlock - 1) / kQueryBlock;
    parallel_for(blocks, threads, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t b = b0; b < b1; ++b) {
            const std::size_t begin = b * kQueryBlock;
            const std::size_t size = std::min(kQueryBlock, queries.size() - begin);
            ScreenedBlock blk{emb, sup, queries.subspan(begin, size), {}, {}};
            fill_block(blk);
            fn(begin, static_cast<const ScreenedBlock&>(blk));
        }
    });
}

inline int sign_of(long long s) { return (s > 0) - (s < 0); }

}  // namespace detail

inline NeighborSet neighbors_in_support(const EmbeddingSet& emb, const VoteMatrix& votes, std::size_t source,
                                        std::size_t query, double radius, Distance metric = Distance::Cosine) {
    if (emb.n() != votes.n()) throw DataError("embeddings and votes disagree on n");
    if (source >= votes.m() || query >= votes.n()) throw UsageError("neighbors_in_support: index out of range");
    if (votes(query, source) != 0) throw UsageError("neighbors_in_support: query point is in the source's support");
    if (!(radius >= 0.0)) throw UsageError("neighbors_in_support: radius must be nonnegative");

    const auto support = votes.support(source);
    NeighborSet out{query, {}};
    for (std::size_t s : support) {
        const double d = emb.distance(query, s, metric);
        if (d <= radius) out.neighbors.push_back({s, d});
    }
    std::stable_sort(out.neighbors.begin(), out.neighbors.end(),
                     [](const Neighbor& a, const Neighbor& b) { return a.distance < b.distance; });
    return out;
}

// Extends one column at a single radius. Returns the new column.
inline std::vector<std::int8_t> extend_column(const EmbeddingSet& emb, const VoteMatrix& votes, std::size_t source,
                                              double radius, Weighting weighting, const ExtensionOptions& opt) {
    std::vector<std::int8_t> col = votes.column(source);
    if (radius <= 0.0) return col;
    std::vector<std::size_t> support, abstain;
    for (std::size_t i = 0; i < votes.n(); ++i) (col[i] != 0 ? support : abstain).push_back(i);
    if (support.empty() || abstain.empty()) return col;

    const detail::SupportSet sup = detail::make_support(emb, support, opt.distance);
    std::vector<std::int8_t> support_votes(support.size());
    for (std::size_t s = 0; s < support.size(); ++s) support_votes[s] = col[support[s]];

    std::vector<std::int8_t> out = col;
    detail::for_each_query_block(emb, abstain, sup, opt.threads, [&](std::size_t begin, const detail::ScreenedBlock& blk) {
        const double margin = blk.margin();
        for (std::size_t q = 0; q < blk.queries.size(); ++q) {
            int vote = 0;
            if (weighting == Weighting::OneNearestNeighbor) {
                if (blk.row_min(q) - margin <= radius) {
                    const auto [best, arg] = blk.nearest(q);
                    if (best <= radius) vote = support_votes[arg];
                }
            } else {
                long long sum = 0;
                for (std::size_t s = 0; s < support.size(); ++s) {
                    const double d = blk.approx(q, s);
                    if (d > radius + margin) continue;
                    if (d >= radius - margin && blk.exact(q, s) > radius) continue;
                    sum += support_votes[s];
                }
                vote = detail::sign_of(sum);
            }
            out[abstain[begin + q]] = static_cast<std::int8_t>(vote);
        }
    });
    return out;
}

// Algorithm: for each source and each abstaining point, adopt W(neighbourhood)
// when the neighbourhood within r_j is nonempty; otherwise keep abstaining.
inline std::pair<VoteMatrix, ExtensionReport> extend_votes(const EmbeddingSet& emb, const VoteMatrix& votes,
                                                          const RadiusConfig& config,
                                                          const ExtensionOptions& opt = {}) {
    if (emb.n() != votes.n())
        throw DataError("embeddings have " + std::to_string(emb.n()) + " rows but votes have " +
                        std::to_string(votes.n()));
    if (config.radii.size() != votes.m())
        throw UsageError("radius config has " + std::to_string(config.radii.size()) + " radii for " +
                         std::to_string(votes.m()) + " sources");
    config.validate();

    VoteMatrix out = votes;
    for (std::size_t j = 0; j < votes.m(); ++j) {
        if (config.radii[j] > 0.0)
            out.set_column(j, extend_column(emb, votes, j, config.radii[j], config.weighting, opt));
    }

    ExtensionReport report;
    report.weighting = config.weighting;
    report.distance = opt.distance;
    const auto before = coverage(votes);
    const auto after = coverage(out);
    for (std::size_t j = 0; j < votes.m(); ++j)
        report.sources.push_back({config.radii[j], before[j], after[j], after[j] - before[j]});
    if (votes.m() >= 2) {
        report.min_overlap_before = min_overlap(votes);
        report.min_overlap_after = min_overlap(out);
    }
    return {std::move(out), std::move(report)};
}

// Extended columns of one source for every radius of an ascending grid, from a
// single scan. Column g equals extend_column(..., grid[g], ...) exactly.
inline std::vector<std::vector<std::int8_t>> extend_source_over_grid(const EmbeddingSet& emb, const VoteMatrix& votes,
                                                                     std::size_t source, std::span<const double> grid,
                                                                     Weighting weighting,
                                                                     const ExtensionOptions& opt = {}) {
    if (emb.n() != votes.n()) throw DataError("embeddings and votes disagree on n");
    if (!std::is_sorted(grid.begin(), grid.end())) throw UsageError("radius grid must be ascending");
    if (!grid.empty() && grid.front() < 0.0) throw UsageError("radius grid must be nonnegative");

    const std::vector<std::int8_t> col = votes.column(source);
    std::vector<std::vector<std::int8_t>> out(grid.size(), col);
    std::vector<std::size_t> support, abstain;
    for (std::size_t i = 0; i < votes.n(); ++i) (col[i] != 0 ? support : abstain).push_back(i);
    if (support.empty() || abstain.empty() || grid.empty() || grid.back() <= 0.0) return out;

    const detail::SupportSet sup = detail::make_support(emb, support, opt.distance);
    std::vector<std::int8_t> support_votes(support.size());
    for (std::size_t s = 0; s < support.size(); ++s) support_votes[s] = col[support[s]];
    const std::size_t first_positive =
        static_cast<std::size_t>(std::upper_bound(grid.begin(), grid.end(), 0.0) - grid.begin());
    const double max_radius = grid.back();

    detail::for_each_query_block(emb, abstain, sup, opt.threads, [&](std::size_t begin, const detail::ScreenedBlock& blk) {
        const double margin = blk.margin();
        std::vector<long long> bins(grid.size());
        for (std::size_t q = 0; q < blk.queries.size(); ++q) {
            const std::size_t point = abstain[begin + q];
            if (weighting == Weighting::OneNearestNeighbor) {
                if (blk.row_min(q) - margin > max_radius) continue;
                const auto [best, arg] = blk.nearest(q);
                for (std::size_t g = first_positive; g < grid.size(); ++g)
                    if (best <= grid[g]) out[g][point] = support_votes[arg];
            } else {
                std::fill(bins.begin(), bins.end(), 0);
                for (std::size_t s = 0; s < support.size(); ++s) {
                    double d = blk.approx(q, s);
                    if (d > max_radius + margin) continue;
                    auto b = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), d - margin) - grid.begin());
                    // Near a grid value the bin is decided on the exact distance.
                    if (margin > 0.0 && b < grid.size() && grid[b] <= d + margin) {
                        d = blk.exact(q, s);
                        b = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), d) - grid.begin());
                    }
                    if (b == grid.size()) continue;
                    bins[b] += support_votes[s];
                }
                long long running = 0;
                for (std::size_t g = 0; g < grid.size(); ++g) {
                    running += bins[g];
                    if (g >= first_positive) out[g][point] = static_cast<std::int8_t>(detail::sign_of(running));
                }
            }
        }
    });
    return out;
}

}  // namespace lfx
