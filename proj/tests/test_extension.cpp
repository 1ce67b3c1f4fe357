#include <gtest/gtest.h>

#include <cmath>

#include "lfx/diagnostics.hpp"
#include "lfx/experiments.hpp"
#include "lfx/extension.hpp"
#include "lfx/random.hpp"
#include "oracles.hpp"

namespace {

lfx::VoteMatrix column(std::initializer_list<int> values) {
    lfx::VoteMatrix v(values.size(), 1);
    std::size_t i = 0;
    for (int x : values) v.set(i++, 0, x);
    return v;
}

lfx::EmbeddingSet line_points(std::initializer_list<double> xs) {
    lfx::RowMatrix x(static_cast<Eigen::Index>(xs.size()), 2);
    Eigen::Index i = 0;
    for (double v : xs) {
        x(i, 0) = v;
        x(i, 1) = 1.0;
        ++i;
    }
    return lfx::EmbeddingSet(std::move(x));
}

constexpr auto kEuclid = lfx::Distance::Euclidean;

}  // namespace

TEST(Coverage, Examples) {
    EXPECT_EQ(lfx::coverage(column({0, 0, 0}))[0], 0.0);
    EXPECT_EQ(lfx::coverage(column({1, -1, 1}))[0], 1.0);
    EXPECT_EQ(lfx::coverage(column({1, 0, -1, 0}))[0], 0.5);
}

TEST(MinOverlap, Examples) {
    lfx::VoteMatrix same(4, 2);
    for (std::size_t i = 0; i < 4; ++i) same.set(i, 0, 1), same.set(i, 1, -1);
    EXPECT_EQ(lfx::min_overlap(same), 1.0);

    lfx::VoteMatrix disjoint(4, 2);
    disjoint.set(0, 0, 1);
    disjoint.set(1, 0, 1);
    disjoint.set(2, 1, 1);
    disjoint.set(3, 1, 1);
    EXPECT_EQ(lfx::min_overlap(disjoint), 0.0);

    lfx::VoteMatrix partial(4, 2);
    for (std::size_t i : {0, 1, 2}) partial.set(i, 0, 1);
    for (std::size_t i : {2, 3}) partial.set(i, 1, -1);
    EXPECT_EQ(lfx::min_overlap(partial), 0.25);

    EXPECT_THROW(lfx::min_overlap(column({1, 1})), lfx::DataError);
}

TEST(Neighbors, SortedByDistanceThenIndex) {
    // Points at x = 0, 1, 2, 3, 4 with the query at x = 2 abstaining.
    const auto emb = line_points({0, 1, 2, 3, 4});
    const auto votes = column({1, -1, 0, 1, -1});
    const auto set = lfx::neighbors_in_support(emb, votes, 0, 2, 1.0, kEuclid);
    ASSERT_EQ(set.neighbors.size(), 2u);
    EXPECT_EQ(set.neighbors[0].index, 1u);
    EXPECT_EQ(set.neighbors[1].index, 3u);
    EXPECT_EQ(set.neighbors[0].distance, 1.0);

    const auto all = lfx::neighbors_in_support(emb, votes, 0, 2, 10.0, kEuclid);
    ASSERT_EQ(all.neighbors.size(), 4u);
    EXPECT_EQ(all.neighbors[2].index, 0u);
    EXPECT_EQ(all.neighbors[3].index, 4u);

    EXPECT_THROW(lfx::neighbors_in_support(emb, votes, 0, 1, 1.0, kEuclid), lfx::UsageError);
    EXPECT_THROW(lfx::neighbors_in_support(emb, votes, 0, 2, -1.0, kEuclid), lfx::UsageError);
}

TEST(Neighbors, MatchesBruteForceScan) {
    lfx::Rng rng = lfx::make_rng(21, 0);
    const auto emb = oracle::random_embeddings(80, 6, rng);
    const auto votes = oracle::random_votes(80, 2, 0.6, rng);
    for (std::size_t q = 0; q < 80; ++q) {
        if (votes(q, 1) != 0) continue;
        const auto set = lfx::neighbors_in_support(emb, votes, 1, q, 0.8);
        std::size_t expected = 0;
        for (std::size_t s = 0; s < 80; ++s)
            expected += votes(s, 1) != 0 && oracle::direct_distance(emb, q, s, lfx::Distance::Cosine) <= 0.8;
        EXPECT_EQ(set.neighbors.size(), expected);
        for (std::size_t k = 1; k < set.neighbors.size(); ++k)
            EXPECT_LE(set.neighbors[k - 1].distance, set.neighbors[k].distance);
    }
}

TEST(Extend, ZeroRadiiIsIdentity) {
    lfx::Rng rng = lfx::make_rng(1, 0);
    const auto emb = oracle::random_embeddings(50, 4, rng);
    const auto votes = oracle::random_votes(50, 3, 0.5, rng);
    const auto [ext, report] = lfx::extend_votes(emb, votes, lfx::RadiusConfig::uniform(3, 0.0));
    EXPECT_TRUE(ext == votes);
    for (const auto& s : report.sources) {
        EXPECT_EQ(s.coverage_before, s.coverage_after);
        EXPECT_EQ(s.newly_labeled, 0.0);
    }
}

TEST(Extend, SingleSupportPointPropagates) {
    const auto emb = line_points({0, 0.1, 0.2, 0.3});
    const auto votes = column({0, 1, 0, 0});
    for (auto w : {lfx::Weighting::OneNearestNeighbor, lfx::Weighting::ThresholdedWeightedSum}) {
        const auto [ext, report] = lfx::extend_votes(emb, votes, {{1.0}, w}, {kEuclid, 1});
        for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(ext(i, 0), 1);
        EXPECT_EQ(report.sources[0].coverage_after, 1.0);
        EXPECT_EQ(report.sources[0].newly_labeled, 0.75);
    }
}

TEST(Extend, OneNearestNeighborTieKeepsSmallerIndex) {
    // Query at x = 2 is equidistant from x = 1 (index 0, +1) and x = 3 (index 2, -1).
    const auto emb = line_points({1, 2, 3});
    const auto votes = column({1, 0, -1});
    const auto ext = lfx::extend_votes(emb, votes, {{1.0}, lfx::Weighting::OneNearestNeighbor}, {kEuclid, 1}).first;
    EXPECT_EQ(ext(1, 0), 1);
    const auto flipped = column({-1, 0, 1});
    EXPECT_EQ(lfx::extend_votes(emb, flipped, {{1.0}, lfx::Weighting::OneNearestNeighbor}, {kEuclid, 1}).first(1, 0), -1);
}

TEST(Extend, WeightedSumZeroAbstains) {
    const auto emb = line_points({1, 2, 3});
    const auto votes = column({1, 0, -1});
    const auto ext = lfx::extend_votes(emb, votes, {{1.0}, lfx::Weighting::ThresholdedWeightedSum}, {kEuclid, 1}).first;
    EXPECT_EQ(ext(1, 0), 0);
}

TEST(Extend, NoChainingFromNewlyLabeledPoints) {
    // x = 0 votes; x = 1 is within reach, x = 2 only via x = 1.
    const auto emb = line_points({0, 1, 2});
    const auto votes = column({1, 0, 0});
    const auto ext = lfx::extend_votes(emb, votes, {{1.0}, lfx::Weighting::OneNearestNeighbor}, {kEuclid, 1}).first;
    EXPECT_EQ(ext(1, 0), 1);
    EXPECT_EQ(ext(2, 0), 0);
}

TEST(Extend, DimensionMismatch) {
    const auto emb = line_points({0, 1, 2});
    EXPECT_THROW(lfx::extend_votes(emb, column({1, 0}), lfx::RadiusConfig::uniform(1, 1.0)), lfx::DataError);
    EXPECT_THROW(lfx::extend_votes(emb, column({1, 0, 0}), lfx::RadiusConfig::uniform(2, 1.0)), lfx::UsageError);
}

TEST(Extend, PropertiesOnRandomInstances) {
    lfx::Rng rng = lfx::make_rng(99, 0);
    for (int inst = 0; inst < 30; ++inst) {
        const std::size_t n = 30 + lfx::uniform_index(rng, 150);
        const std::size_t m = 2 + lfx::uniform_index(rng, 3);
        const auto metric = inst % 2 ? lfx::Distance::Cosine : kEuclid;
        const auto emb = oracle::random_embeddings(n, 3 + lfx::uniform_index(rng, 5), rng);
        const auto votes = oracle::random_votes(n, m, 0.4 + 0.5 * lfx::uniform01(rng), rng);
        std::vector<double> radii(m), bigger(m);
        for (std::size_t j = 0; j < m; ++j) {
            radii[j] = lfx::uniform01(rng);
            bigger[j] = radii[j] + 0.5 * lfx::uniform01(rng);
        }
        for (auto w : {lfx::Weighting::OneNearestNeighbor, lfx::Weighting::ThresholdedWeightedSum}) {
            const auto [ext, report] = lfx::extend_votes(emb, votes, {radii, w}, {metric, 1});
            EXPECT_TRUE(ext == oracle::brute_extend(emb, votes, radii, w, metric));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < m; ++j)
                    if (votes(i, j) != 0) EXPECT_EQ(ext(i, j), votes(i, j));
            for (const auto& s : report.sources) EXPECT_GE(s.coverage_after, s.coverage_before);
            EXPECT_GE(*report.min_overlap_after, *report.min_overlap_before);
            if (w == lfx::Weighting::OneNearestNeighbor) {
                const auto c1 = lfx::coverage(ext);
                const auto c2 = lfx::coverage(lfx::extend_votes(emb, votes, {bigger, w}, {metric, 1}).first);
                for (std::size_t j = 0; j < m; ++j) EXPECT_LE(c1[j], c2[j]);
            }
        }
    }
}

TEST(Extend, ThreadCountDoesNotChangeOutput) {
    lfx::Rng rng = lfx::make_rng(7, 0);
    // Enough rows for several query blocks.
    const auto emb = oracle::random_embeddings(900, 8, rng);
    const auto votes = oracle::random_votes(900, 3, 0.7, rng);
    for (auto w : {lfx::Weighting::OneNearestNeighbor, lfx::Weighting::ThresholdedWeightedSum}) {
        const lfx::RadiusConfig cfg{{0.3, 0.6, 0.9}, w};
        const auto one = lfx::extend_votes(emb, votes, cfg, {lfx::Distance::Cosine, 1}).first;
        const auto four = lfx::extend_votes(emb, votes, cfg, {lfx::Distance::Cosine, 4}).first;
        EXPECT_TRUE(one == four);
    }
}

TEST(Extend, CosineScreenAgreesWithExactScanNearBoundaries) {
    // Radii placed exactly on realised distances exercise the refinement path.
    lfx::Rng rng = lfx::make_rng(17, 0);
    const auto emb = oracle::random_embeddings(300, 64, rng);
    const auto votes = oracle::random_votes(300, 2, 0.5, rng);
    const auto support = votes.support(0);
    std::size_t query = 0;
    while (votes(query, 0) != 0) ++query;
    for (std::size_t k = 0; k < 10; ++k) {
        const double r = emb.distance(query, support[k], lfx::Distance::Cosine);
        for (auto w : {lfx::Weighting::OneNearestNeighbor, lfx::Weighting::ThresholdedWeightedSum}) {
            const std::vector<double> radii{r, r};
            EXPECT_TRUE(lfx::extend_votes(emb, votes, {radii, w}).first ==
                        oracle::brute_extend(emb, votes, radii, w, lfx::Distance::Cosine));
        }
    }
}

TEST(ExtendOverGrid, EqualsPerRadiusExtension) {
    lfx::Rng rng = lfx::make_rng(4, 0);
    const auto emb = oracle::random_embeddings(400, 5, rng);
    const auto votes = oracle::random_votes(400, 2, 0.6, rng);
    std::vector<double> grid = lfx::log_grid(0.01, 1.5, 12);
    grid.insert(grid.begin(), 0.0);
    // A realised distance as a grid point.
    grid.push_back(emb.distance(votes.support(1)[0], votes.support(1)[1], lfx::Distance::Cosine));
    std::sort(grid.begin(), grid.end());
    for (auto metric : {lfx::Distance::Cosine, kEuclid})
        for (auto w : {lfx::Weighting::OneNearestNeighbor, lfx::Weighting::ThresholdedWeightedSum}) {
            const auto cols = lfx::extend_source_over_grid(emb, votes, 1, grid, w, {metric, 2});
            for (std::size_t g = 0; g < grid.size(); ++g)
                EXPECT_EQ(cols[g], lfx::extend_column(emb, votes, 1, grid[g], w, {metric, 1}));
        }
    EXPECT_THROW(lfx::extend_source_over_grid(emb, votes, 0, std::vector<double>{0.5, 0.1},
                                              lfx::Weighting::OneNearestNeighbor),
                 lfx::UsageError);
}

TEST(Extend, CheckerboardCoverageIncreasesWithRadius) {
    lfx::SyntheticConfig cfg;
    cfg.seed = 3;
    const auto task = lfx::generate_synthetic(cfg);
    const auto grid = lfx::log_grid(0.001, 1.0, 32);
    const lfx::ExtensionOptions opt{lfx::Distance::Euclidean, 1};
    for (std::size_t j = 0; j < task.votes.m(); ++j) {
        const auto cols = lfx::extend_source_over_grid(task.embeddings, task.votes, j, grid,
                                                       lfx::Weighting::OneNearestNeighbor, opt);
        std::size_t prev = 0;
        for (const auto& col : cols) {
            const auto covered = static_cast<std::size_t>(std::count_if(col.begin(), col.end(), [](auto v) { return v != 0; }));
            EXPECT_GE(covered, prev);
            prev = covered;
        }
        EXPECT_EQ(prev, task.votes.n());
    }
    const auto first = lfx::extend_votes(task.embeddings, task.votes, lfx::RadiusConfig::uniform(3, 0.01), opt).second;
    const auto second = lfx::extend_votes(task.embeddings, task.votes, lfx::RadiusConfig::uniform(3, 0.02), opt).second;
    for (std::size_t j = 0; j < 3; ++j) EXPECT_GT(second.sources[j].coverage_after, first.sources[j].coverage_after);
}

TEST(Extend, NewlyLabeledRegionRespectsLipschitzFloor) {
    // |B_r| / n >= L * p_d * p_i - 0.05 with the profile measured on the same data.
    lfx::SyntheticConfig cfg;
    cfg.n = 3000;
    cfg.seed = 8;
    const auto task = lfx::generate_synthetic(cfg);
    const std::vector<double> grid{0.005, 0.01, 0.02, 0.05, 0.1};
    lfx::ProfileOptions popt;
    popt.distance = lfx::Distance::Euclidean;
    popt.budget = 200000;
    const auto dev = task.dev_labels();
    const auto profile = lfx::estimate_profile(task.embeddings, task.votes, &dev, grid, popt);
    const double p0 = lfx::coverage(task.votes)[0];
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const auto report = lfx::extend_votes(task.embeddings, task.votes,
                                              {{grid[g], 0.0, 0.0}, lfx::Weighting::OneNearestNeighbor},
                                              {lfx::Distance::Euclidean, 1})
                                .second;
        const double L = profile.L[0][g];
        if (std::isnan(L)) continue;
        EXPECT_GE(report.sources[0].newly_labeled, L * profile.p_d[g] * p0 - 0.05);
    }
}

TEST(ExtensionReport, Json) {
    const auto emb = line_points({0, 1, 2});
    lfx::VoteMatrix votes(3, 2);
    votes.set(0, 0, 1);
    votes.set(0, 1, 1);
    votes.set(2, 1, -1);
    const auto report = lfx::extend_votes(emb, votes, {{1.5, 0.0}, lfx::Weighting::OneNearestNeighbor}, {kEuclid, 1}).second;
    const auto j = lfx::to_json(report);
    EXPECT_EQ(j["weighting"], "1nn");
    EXPECT_EQ(j["distance"], "euclidean");
    EXPECT_EQ(j["sources"].size(), 2u);
    EXPECT_DOUBLE_EQ(j["sources"][0]["coverage_after"].get<double>(), 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(j["min_overlap_before"].get<double>(), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(j["min_overlap_after"].get<double>(), 1.0 / 3.0);
}
