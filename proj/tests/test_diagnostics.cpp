#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "lfx/diagnostics.hpp"
#include "lfx/experiments.hpp"
#include "lfx/random.hpp"
#include "oracles.hpp"

namespace {

// Points (1,1), (2,1), (4,1), (8,1): pair distances 1, 3, 7, 2, 6, 4.
lfx::EmbeddingSet four_points() {
    lfx::RowMatrix x(4, 2);
    x << 1, 1, 2, 1, 4, 1, 8, 1;
    return lfx::EmbeddingSet(std::move(x));
}

lfx::ProfileOptions euclid_profile() {
    lfx::ProfileOptions o;
    o.distance = lfx::Distance::Euclidean;
    return o;
}

lfx::LipschitzProfile manual_profile(std::vector<double> radii, std::vector<double> p_d, std::vector<double> L,
                                     std::vector<double> M) {
    lfx::LipschitzProfile p;
    p.radii = std::move(radii);
    p.p_d = std::move(p_d);
    p.L = {std::move(L)};
    p.M_Y = std::move(M);
    return p;
}

}  // namespace

TEST(LogGrid, Endpoints) {
    const auto g = lfx::log_grid(0.01, 1.0, 32);
    ASSERT_EQ(g.size(), 32u);
    EXPECT_EQ(g.front(), 0.01);
    EXPECT_EQ(g.back(), 1.0);
    EXPECT_TRUE(std::is_sorted(g.begin(), g.end()));
    EXPECT_NEAR(g[1] / g[0], g[31] / g[30], 1e-12);
    EXPECT_THROW(lfx::log_grid(0.0, 1.0, 4), lfx::UsageError);
}

TEST(Profile, FourPointEnumeration) {
    const auto emb = four_points();
    lfx::VoteMatrix votes(4, 2);
    votes.set(0, 0, 1);
    votes.set(1, 0, -1);
    for (std::size_t i = 0; i < 4; ++i) votes.set(i, 1, 1);
    const auto dev = lfx::io::parse_labels("1\n1\n-1\n-1\n");
    const std::vector<double> grid{1.5, 3.5, 10.0};
    const auto p = lfx::estimate_profile(emb, votes, &dev, grid, euclid_profile());
    EXPECT_TRUE(p.exhaustive);
    EXPECT_EQ(p.pairs, 6u);
    EXPECT_DOUBLE_EQ(p.p_d[0], 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(p.p_d[1], 3.0 / 6.0);
    EXPECT_DOUBLE_EQ(p.p_d[2], 1.0);
    EXPECT_DOUBLE_EQ(p.M_Y[0], 0.0);
    EXPECT_DOUBLE_EQ(p.M_Y[1], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(p.M_Y[2], 4.0 / 6.0);
    // Source 0 covers {0, 1}: pairs (0,2) and (1,2) disagree at 3.5.
    EXPECT_DOUBLE_EQ(p.L[0][0], 0.0);
    EXPECT_DOUBLE_EQ(p.L[0][1], 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(p.L[0][2], 4.0 / 6.0);
    for (double l : p.L[1]) EXPECT_EQ(l, 0.0);
}

TEST(Profile, UndefinedBelowSmallestDistance) {
    const auto emb = four_points();
    lfx::VoteMatrix votes(4, 1);
    const auto dev = lfx::io::parse_labels("1\n1\n1\n1\n");
    const std::vector<double> grid{0.5, 2.0};
    const auto p = lfx::estimate_profile(emb, votes, &dev, grid, euclid_profile());
    EXPECT_EQ(p.p_d[0], 0.0);
    EXPECT_TRUE(std::isnan(p.M_Y[0]));
    EXPECT_TRUE(std::isnan(p.L[0][0]));
    EXPECT_EQ(p.M_Y[1], 0.0);  // constant labels
    EXPECT_EQ(lfx::profile_csv(p), "radius,p_d,M_Y,L_0\n0.5,0,NA,NA\n2,0.3333333333333333,0,0\n");
}

TEST(Profile, Errors) {
    const auto emb = four_points();
    lfx::VoteMatrix votes(4, 1);
    EXPECT_THROW(lfx::estimate_profile(emb, votes, nullptr, std::vector<double>{}, euclid_profile()), lfx::UsageError);
    EXPECT_THROW(lfx::estimate_profile(emb, votes, nullptr, std::vector<double>{2.0, 1.0}, euclid_profile()),
                 lfx::UsageError);
    auto opt = euclid_profile();
    opt.budget = 0;
    EXPECT_THROW(lfx::estimate_profile(emb, votes, nullptr, std::vector<double>{1.0}, opt), lfx::UsageError);
}

TEST(Profile, SampledIsSeededAndThreadIndependent) {
    lfx::Rng rng = lfx::make_rng(41, 0);
    const auto emb = oracle::random_embeddings(600, 4, rng);
    const auto votes = oracle::random_votes(600, 2, 0.5, rng);
    std::vector<std::int8_t> y(300);
    for (std::size_t i = 0; i < 300; ++i) y[i] = static_cast<std::int8_t>(i % 3 ? 1 : -1);
    const lfx::LabelVector labels(y);
    lfx::ProfileOptions opt;
    opt.budget = 5000;
    opt.seed = 9;
    const auto grid = lfx::log_grid(0.05, 1.5, 10);
    const auto a = lfx::estimate_profile(emb, votes, &labels, grid, opt);
    opt.threads = 4;
    const auto b = lfx::estimate_profile(emb, votes, &labels, grid, opt);
    EXPECT_FALSE(a.exhaustive);
    EXPECT_EQ(a.pairs, 5000u);
    EXPECT_EQ(lfx::profile_csv(a), lfx::profile_csv(b));
    EXPECT_TRUE(std::is_sorted(a.p_d.begin(), a.p_d.end()));
    for (std::size_t g = 0; g < grid.size(); ++g) {
        for (const auto& l : a.L)
            if (!std::isnan(l[g])) EXPECT_TRUE(l[g] >= 0.0 && l[g] <= 1.0);
        if (!std::isnan(a.M_Y[g])) EXPECT_TRUE(a.M_Y[g] >= 0.0 && a.M_Y[g] <= 1.0);
    }
    opt.seed = 10;
    EXPECT_NE(lfx::profile_csv(lfx::estimate_profile(emb, votes, &labels, grid, opt)), lfx::profile_csv(a));
}

TEST(Bounds, Prop1) {
    EXPECT_NEAR(lfx::prop1_bound(0.9, 0.05, 0.5, 0.4, 0.3), 0.7571428571428571, 1e-12);
    EXPECT_EQ(lfx::prop1_bound(0.5, 0.3, 0.4, 0.2, 0.1), 0.5);
    EXPECT_THROW(lfx::prop1_bound(0.9, 0.05, 0.0, 0.4, 0.3), lfx::NumericError);
    lfx::Rng rng = lfx::make_rng(51, 0);
    for (int t = 0; t < 1000; ++t) {
        const double a = lfx::uniform01(rng);
        EXPECT_EQ(lfx::prop1_bound(a, 0.0, 0.01 + 0.99 * lfx::uniform01(rng), lfx::uniform01(rng), lfx::uniform01(rng)), a);
    }
}

TEST(Bounds, Thm1Lift) {
    EXPECT_NEAR(lfx::thm1_lift_bound(0.5, 0.2, 0.5, 0.9, 0.9, 0.6), 0.0028, 1e-12);
    EXPECT_NEAR(lfx::thm1_lift_bound(0.5, 0.2, 0.5, 0.5, 0.5, 0.5), -0.00625, 1e-12);
    EXPECT_EQ(lfx::thm1_lift_bound(0.0, 0.2, 0.5, 0.9, 0.9, 0.6), 0.0);
}

TEST(Bounds, Thm1LiftNondecreasingInABar) {
    lfx::Rng rng = lfx::make_rng(52, 0);
    for (int t = 0; t < 1000; ++t) {
        const double L = lfx::uniform01(rng), pd = lfx::uniform01(rng), pi = lfx::uniform01(rng);
        const double at = 0.5 + 0.5 * lfx::uniform01(rng), C = lfx::uniform01(rng);
        const double ab = 0.999 * lfx::uniform01(rng);
        EXPECT_GE(lfx::thm1_lift_bound(L, pd, pi, at, ab + 1e-3, C), lfx::thm1_lift_bound(L, pd, pi, at, ab, C) - 1e-15);
    }
}

TEST(Bounds, EstimationError) {
    lfx::EstimationConstants k;
    k.n = 10'000;
    k.m = 3;
    k.delta = 0.05;
    k.o_min = 0.25;
    k.e_min = 0.5;
    k.c_1 = 0.2;
    k.c_2 = 0.5;
    k.c_p = 0.1;
    EXPECT_NEAR(lfx::epsilon_n(k.n, k.delta), 0.013581015157406196, 1e-15);
    EXPECT_NEAR(lfx::thm1_estimation_bound(k, false), 2492.0442398723153, 1e-12 * 2492.0);
    EXPECT_EQ(lfx::thm1_estimation_bound(k, true), lfx::thm1_estimation_bound(k, false));
    k.L_min = 0.3;
    k.p_d_rmin = 0.2;
    EXPECT_NEAR(lfx::thm1_estimation_bound(k, true), 2373.91755481312, 1e-12 * 2373.0);
    EXPECT_LT(lfx::thm1_estimation_bound(k, true), lfx::thm1_estimation_bound(k, false));

    // Quadrupling n at least halves the first term.
    auto first = [](lfx::EstimationConstants c) {
        const double eps = lfx::epsilon_n(c.n, c.delta);
        return lfx::thm1_estimation_bound(c, false) * (c.c_p - eps) - eps * c.c_2;
    };
    lfx::EstimationConstants k4 = k;
    k4.n *= 4;
    EXPECT_LE(first(k4), 0.5 * first(k) + 1e-9);

    k.c_p = 0.01;
    try {
        lfx::thm1_estimation_bound(k, false);
        FAIL();
    } catch (const lfx::NumericError& e) {
        EXPECT_NE(std::string(e.what()).find("bound vacuous at this n"), std::string::npos);
    }
}

TEST(Bounds, Prop2AndExtendedRisk) {
    EXPECT_EQ(lfx::prop2_smoothness(0.0, 0.0), 0.0);
    EXPECT_NEAR(lfx::prop2_smoothness(0.1, 0.2), 0.5, 1e-15);
    EXPECT_EQ(lfx::prop2_smoothness(0.8, 0.3), 1.0);
    EXPECT_EQ(lfx::extended_risk_bound(0.5, 0.3, 0.2, 0.4, 0.5, 0.5), 0.5);
    EXPECT_NEAR(lfx::extended_risk_bound(1.0, 0.0, 0.15, 0.7, 0.0, 0.3), 0.3 / 0.49, 1e-15);
    EXPECT_NEAR(lfx::extended_risk_bound(1.0, 0.0, 0.15, 1.0, 0.0, 0.3), 0.3, 1e-15);
    EXPECT_NEAR(lfx::extended_risk_bound(0.9, 0.05, 0.1, 0.5, 0.4, 0.3), 0.8142857142857143, 1e-12);
    EXPECT_THROW(lfx::extended_risk_bound(0.9, 0.05, 0.1, 0.0, 0.4, 0.3), lfx::NumericError);
}

TEST(Bounds, Thm2Ensemble) {
    const std::vector<double> zero{0.0, 0.0}, full{0.5, 0.5};
    EXPECT_EQ(lfx::thm2_ensemble_bound(full, zero, 0.5, 0.0), 0.0);
    EXPECT_EQ(lfx::thm2_ensemble_bound(std::vector<double>{}, std::vector<double>{}, 0.5, 1.0), 0.5);
    EXPECT_NEAR(lfx::thm2_ensemble_bound(std::vector<double>{0.6, 0.4}, std::vector<double>{0.2, 0.3}, 0.6, 0.0), 0.72,
                1e-12);
    EXPECT_NEAR(lfx::thm2_ensemble_bound(std::vector<double>{0.5, 0.3}, std::vector<double>{0.2, 0.3}, 0.5, 0.2), 0.48,
                1e-12);
    EXPECT_THROW(lfx::thm2_ensemble_bound(full, zero, 1.0, 0.0), lfx::NumericError);
    EXPECT_THROW(lfx::thm2_ensemble_bound(full, zero, 0.5, 0.3), lfx::UsageError);
    EXPECT_EQ(lfx::max_odds(0.2), 4.0);
}

TEST(Bounds, PureFunctions) {
    for (int t = 0; t < 3; ++t) {
        EXPECT_EQ(lfx::prop1_bound(0.83, 0.07, 0.31, 0.22, 0.13), lfx::prop1_bound(0.83, 0.07, 0.31, 0.22, 0.13));
        EXPECT_EQ(lfx::thm1_lift_bound(0.3, 0.1, 0.2, 0.7, 0.8, 0.6), lfx::thm1_lift_bound(0.3, 0.1, 0.2, 0.7, 0.8, 0.6));
    }
}

TEST(OtherSourcesConstant, AveragesQualifyingPositives) {
    // Sources 1 and 2 vote (+1, +1), (+1, -1), (-1, -1) on three positives.
    lfx::VoteMatrix v(4, 3);
    const int rows[4][3] = {{1, 1, 1}, {-1, 1, -1}, {1, -1, -1}, {1, 1, 1}};
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 3; ++j) v.set(i, j, rows[i][j]);
    const lfx::LabelModelParams p{{0.7, 0.8, 0.6}, {0, 0, 0}, 0.5};
    const auto dev = lfx::io::parse_labels("1\n1\n1\n-1\n");
    const double q_pp = 0.8 * 0.6 / (0.8 * 0.6 + 0.2 * 0.4);
    const double q_pm = 0.8 * 0.4 / (0.8 * 0.4 + 0.2 * 0.6);
    EXPECT_NEAR(lfx::other_sources_constant(v, p, 0, dev), 0.5 * (q_pp + q_pm), 1e-15);
    const auto negatives = lfx::io::parse_labels("-1\n-1\n");
    EXPECT_TRUE(std::isnan(lfx::other_sources_constant(v, p, 0, negatives)));
}

TEST(TheoryRadius, ZeroBoundsFlagged) {
    const auto profile = manual_profile({0.1, 0.2, 0.3}, {0.1, 0.2, 0.4}, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0});
    lfx::VoteMatrix votes(2, 1);
    votes.set(0, 0, 1);
    const std::vector<std::vector<std::int8_t>> cols(3, votes.column(0));
    const auto curve = lfx::lift_bound_curve(votes, 0, cols, profile.radii, profile, nullptr, {0.9, 0.5, 0.6, {}});
    const auto t = lfx::theory_guided_radius(curve);
    EXPECT_TRUE(t.non_positive);
    EXPECT_EQ(t.radius, 0.0);
}

TEST(TheoryRadius, SmoothLabelsPickLargestRadius) {
    const auto profile = manual_profile({0.1, 0.2, 0.3}, {0.1, 0.2, 0.4}, {0.2, 0.3, 0.5}, {0.0, 0.0, 0.0});
    lfx::VoteMatrix votes(2, 1);
    votes.set(0, 0, 1);
    const std::vector<std::vector<std::int8_t>> cols(3, votes.column(0));
    const auto curve = lfx::lift_bound_curve(votes, 0, cols, profile.radii, profile, nullptr, {0.9, 0.5, 0.6, {}});
    for (const auto& p : curve.points) {
        EXPECT_EQ(p.a_bar, 0.9);
        EXPECT_EQ(p.a_bar_source, "prop1");
        EXPECT_EQ(p.a_tilde_source, "chain");
    }
    const auto t = lfx::theory_guided_radius(curve);
    EXPECT_FALSE(t.non_positive);
    EXPECT_EQ(t.index, 2u);
    EXPECT_EQ(t.radius, 0.3);
}

TEST(TheoryRadius, UndefinedCIsNumericError) {
    const auto profile = manual_profile({0.1}, {0.1}, {0.2}, {0.0});
    lfx::VoteMatrix votes(2, 1);
    const std::vector<std::vector<std::int8_t>> cols(1, votes.column(0));
    EXPECT_THROW(lfx::lift_bound_curve(votes, 0, cols, profile.radii, profile, nullptr, {0.9, 0.5, lfx::kUndefined, {}}),
                 lfx::NumericError);
}

TEST(CoveringRadius, LargestNearestSupportDistance) {
    const auto emb = four_points();
    lfx::VoteMatrix votes(4, 1);
    votes.set(0, 0, 1);
    const lfx::ExtensionOptions opt{lfx::Distance::Euclidean, 1};
    EXPECT_EQ(lfx::detail::covering_radius(emb, votes, 0, opt), 7.0);
    votes.set(3, 0, 1);
    EXPECT_EQ(lfx::detail::covering_radius(emb, votes, 0, opt), 3.0);
}

namespace {

struct DiagnoseFixture {
    lfx::SyntheticTask task;
    lfx::LabelVector dev;
    lfx::LabelModelParams params;
    lfx::DiagnoseOptions opt;
    lfx::ExtensionOptions eopt{lfx::Distance::Euclidean, 1};

    DiagnoseFixture() {
        lfx::SyntheticConfig cfg;
        cfg.n = 10000;
        cfg.seed = 5;
        task = lfx::generate_synthetic(cfg);
        dev = task.dev_labels();
        params = lfx::estimate_accuracies(task.votes, 0.5);
        opt.grid = lfx::log_grid(0.005, 0.5, 16);
        opt.profile.budget = 100000;
    }
};

}  // namespace

TEST(Diagnose, ZeroRadiiReportsNoChange) {
    DiagnoseFixture f;
    const auto cfg = lfx::RadiusConfig::uniform(3, 0.0);
    const auto rep = lfx::diagnose(f.task.embeddings, f.task.votes, f.task.votes, &f.dev, f.params, cfg, f.opt, f.eopt);
    for (const auto& s : rep.json["sources"]) {
        EXPECT_EQ(s["coverage_before"], s["coverage_after"]);
        EXPECT_EQ(s["lift_bound"]["value"].get<double>(), 0.0);
        EXPECT_FALSE(s["recommend_extension"].get<bool>());
    }
    EXPECT_EQ(rep.json["min_overlap_before"], rep.json["min_overlap_after"]);
    EXPECT_EQ(rep.json["estimation_bound"]["extended"]["constants"]["L_min"].get<double>(), 0.0);
}

TEST(Diagnose, MissingDevLabels) {
    DiagnoseFixture f;
    const auto cfg = lfx::RadiusConfig::uniform(3, 0.0);
    try {
        lfx::diagnose(f.task.embeddings, f.task.votes, f.task.votes, nullptr, f.params, cfg, f.opt, f.eopt);
        FAIL();
    } catch (const lfx::UsageError& e) {
        EXPECT_NE(std::string(e.what()).find("requires labeled dev set or Prop. 2 inputs"), std::string::npos);
    }
    // Model inputs stand in for dev labels.
    f.opt.model_smoothness = 0.1;
    f.opt.model_risk = 0.05;
    const auto rep = lfx::diagnose(f.task.embeddings, f.task.votes, f.task.votes, nullptr, f.params, cfg, f.opt, f.eopt);
    EXPECT_FALSE(rep.json["ensemble_bound"]["value"].is_null());
    EXPECT_TRUE(rep.json["sources"][0]["lift_bound"]["value"].is_null());
}

TEST(Diagnose, MaximizerMatchesTheoryGuidedRadius) {
    DiagnoseFixture f;
    const lfx::RadiusConfig cfg{{0.03, 0.0, 0.0}, lfx::Weighting::ThresholdedWeightedSum};
    const auto ext = lfx::extend_votes(f.task.embeddings, f.task.votes, cfg, f.eopt).first;
    const auto rep = lfx::diagnose(f.task.embeddings, f.task.votes, ext, &f.dev, f.params, cfg, f.opt, f.eopt);
    lfx::ProfileOptions popt = f.opt.profile;
    popt.distance = lfx::Distance::Euclidean;
    const auto t = lfx::theory_guided_radius(f.task.embeddings, f.task.votes, f.dev, 0.5, 0, f.opt.grid,
                                             cfg.weighting, popt);
    const auto& best = rep.json["sources"][0]["lift_maximizer"];
    EXPECT_EQ(best["radius"].get<double>(), t.radius);
    EXPECT_EQ(best["index"].get<std::size_t>(), t.index);
    EXPECT_EQ(best["bound"].get<double>(), t.bound);
    EXPECT_FALSE(t.non_positive);
    EXPECT_GT(rep.json["sources"][0]["coverage_after"].get<double>(), rep.json["sources"][0]["coverage_before"].get<double>());
}
