#pragma once
// Empirical (L, M)-Lipschitz profiles and the computable bound expressions for
// extended sources: accuracy degradation, lift, estimation error, and risk.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lfx/core.hpp"
#include "lfx/extension.hpp"
#include "lfx/io.hpp"
#include "lfx/label_model.hpp"
#include "lfx/parallel.hpp"
#include "lfx/random.hpp"

namespace lfx {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

// `count` log-spaced radii from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0 && hi >= lo) || count == 0) throw UsageError("log_grid: need 0 < lo <= hi and count >= 1");
    std::vector<double> g(count);
    if (count == 1) {
        g[0] = lo;
        return g;
    }
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) g[i] = lo * std::exp(step * static_cast<double>(i));
    g.back() = hi;
    return g;
}

inline std::vector<double> default_grid() { return log_grid(0.01, 1.0, 32); }

// ---- pair-sampled disagreement rates ---------------------------------------

struct ProfileOptions {
    std::size_t budget = 500'000;
    std::uint64_t seed = 0;
    Distance distance = Distance::Cosine;
    unsigned threads = 1;
};

// Tallies over a set of unordered pairs, cumulative in the radius grid.
struct PairProfile {
    std::vector<double> radii;
    std::size_t pairs = 0;
    bool exhaustive = false;
    std::vector<std::uint64_t> within;                 // pairs with distance <= r
    std::vector<std::vector<std::uint64_t>> disagree;  // per series

    double p_d(std::size_t g) const { return pairs ? static_cast<double>(within[g]) / static_cast<double>(pairs) : 0.0; }
    double rate(std::size_t series, std::size_t g) const {
        return within[g] ? static_cast<double>(disagree[series][g]) / static_cast<double>(within[g]) : kUndefined;
    }
};

// Pairs are drawn among the first `rows` points. Each series holds one value
// per point; a pair disagrees on a series when the two values differ.
inline PairProfile pair_profile(const EmbeddingSet& emb, std::size_t rows,
                                const std::vector<std::vector<std::int8_t>>& series, std::span<const double> grid,
                                const ProfileOptions& opt) {
    if (grid.empty()) throw UsageError("radius grid is empty");
    if (!std::is_sorted(grid.begin(), grid.end())) throw UsageError("radius grid must be ascending");
    if (opt.budget == 0) throw UsageError("pair budget must be at least 1");
    if (rows > emb.n()) throw DataError("profile: more rows requested than embeddings");
    for (const auto& s : series)
        if (s.size() < rows) throw DataError("profile: series shorter than the row count");

    PairProfile out;
    out.radii.assign(grid.begin(), grid.end());
    const std::size_t K = grid.size(), S = series.size();
    out.within.assign(K, 0);
    out.disagree.assign(S, std::vector<std::uint64_t>(K, 0));
    if (rows < 2) return out;

    const std::uint64_t total = static_cast<std::uint64_t>(rows) * (rows - 1) / 2;
    out.exhaustive = total <= opt.budget;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    if (!out.exhaustive) {
        Rng rng = make_rng(opt.seed, 0x70616972);
        pairs.resize(opt.budget);
        for (auto& p : pairs) {
            const auto a = uniform_index(rng, rows);
            auto b = uniform_index(rng, rows - 1);
            if (b >= a) ++b;
            p = {static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
        }
    }
    out.pairs = out.exhaustive ? static_cast<std::size_t>(total) : pairs.size();

    // Fixed blocks with private integer tallies: totals do not depend on threads.
    const std::size_t units = out.exhaustive ? rows : pairs.size();
    const std::size_t blocks = std::min<std::size_t>(units, 256);
    const std::size_t width = K * (S + 1);
    std::vector<std::uint64_t> tallies(blocks * width, 0);
    parallel_for(blocks, opt.threads, [&](std::size_t b0, std::size_t b1) {
        for (std::size_t blk = b0; blk < b1; ++blk) {
            std::uint64_t* t = tallies.data() + blk * width;
            const std::size_t u0 = units * blk / blocks, u1 = units * (blk + 1) / blocks;
            auto visit = [&](std::size_t a, std::size_t c) {
                const double d = emb.distance(a, c, opt.distance);
                const auto g = static_cast<std::size_t>(std::lower_bound(grid.begin(), grid.end(), d) - grid.begin());
                if (g == K) return;
                ++t[g];
                for (std::size_t s = 0; s < S; ++s) t[K * (s + 1) + g] += series[s][a] != series[s][c];
            };
            for (std::size_t u = u0; u < u1; ++u) {
                if (out.exhaustive) {
                    for (std::size_t c = u + 1; c < rows; ++c) visit(u, c);
                } else {
                    visit(pairs[u].first, pairs[u].second);
                }
            }
        }
    });
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        const std::uint64_t* t = tallies.data() + blk * width;
        for (std::size_t g = 0; g < K; ++g) {
            out.within[g] += t[g];
            for (std::size_t s = 0; s < S; ++s) out.disagree[s][g] += t[K * (s + 1) + g];
        }
    }
    for (std::size_t g = 1; g < K; ++g) {
        out.within[g] += out.within[g - 1];
        for (std::size_t s = 0; s < S; ++s) out.disagree[s][g] += out.disagree[s][g - 1];
    }
    return out;
}

// Support-membership indicator of a vote column (the abstention function).
inline std::vector<std::int8_t> support_indicator(std::span<const std::int8_t> column) {
    std::vector<std::int8_t> s(column.size());
    for (std::size_t i = 0; i < column.size(); ++i) s[i] = column[i] != 0;
    return s;
}

struct LipschitzProfile {
    std::vector<double> radii;
    std::vector<double> p_d;             // over all points
    std::vector<std::vector<double>> L;  // per source, support-membership disagreement
    std::vector<double> M_Y;             // label disagreement among dev pairs
    std::vector<double> p_d_dev;
    std::size_t pairs = 0, dev_pairs = 0;
    bool exhaustive = false, dev_exhaustive = false;
    bool has_labels = false;

    std::size_t index_of(double r) const {
        const auto it = std::lower_bound(radii.begin(), radii.end(), r);
        if (it == radii.end() || *it != r) throw UsageError("radius " + io::format_double(r) + " not in profile grid");
        return static_cast<std::size_t>(it - radii.begin());
    }
};

// L and p_d use every point; M_Y uses the labeled leading rows.
inline LipschitzProfile estimate_profile(const EmbeddingSet& emb, const VoteMatrix& votes,
                                         const LabelVector* dev_labels, std::span<const double> grid,
                                         const ProfileOptions& opt = {}) {
    if (emb.n() != votes.n()) throw DataError("embeddings and votes disagree on n");
    std::vector<std::vector<std::int8_t>> series;
    for (std::size_t j = 0; j < votes.m(); ++j) series.push_back(support_indicator(votes.column(j)));
    const PairProfile all = pair_profile(emb, emb.n(), series, grid, opt);

    LipschitzProfile p;
    p.radii = all.radii;
    p.pairs = all.pairs;
    p.exhaustive = all.exhaustive;
    p.L.assign(votes.m(), {});
    for (std::size_t g = 0; g < grid.size(); ++g) {
        p.p_d.push_back(all.p_d(g));
        for (std::size_t j = 0; j < votes.m(); ++j) p.L[j].push_back(all.rate(j, g));
    }
    p.M_Y.assign(grid.size(), kUndefined);
    p.p_d_dev.assign(grid.size(), kUndefined);
    if (dev_labels && dev_labels->size() > 0) {
        if (dev_labels->size() > emb.n()) throw DataError("more dev labels than data points");
        const auto v = dev_labels->values();
        const std::vector<std::vector<std::int8_t>> ys{std::vector<std::int8_t>(v.begin(), v.end())};
        const PairProfile dev = pair_profile(emb, dev_labels->size(), ys, grid, opt);
        p.has_labels = true;
        p.dev_pairs = dev.pairs;
        p.dev_exhaustive = dev.exhaustive;
        for (std::size_t g = 0; g < grid.size(); ++g) {
            p.M_Y[g] = dev.rate(0, g);
            p.p_d_dev[g] = dev.p_d(g);
        }
    }
    return p;
}

inline std::string profile_csv(const LipschitzProfile& p) {
    auto cell = [](double v) { return std::isnan(v) ? std::string("NA") : io::format_double(v); };
    std::string out = "radius,p_d,M_Y";
    for (std::size_t j = 0; j < p.L.size(); ++j) out += ",L_" + std::to_string(j);
    out += '\n';
    for (std::size_t g = 0; g < p.radii.size(); ++g) {
        out += cell(p.radii[g]) + ',' + cell(p.p_d[g]) + ',' + cell(p.M_Y[g]);
        for (const auto& l : p.L) out += ',' + cell(l[g]);
        out += '\n';
    }
    return out;
}

// ---- bound expressions -----------------------------------------------------

// Lower bound on the accuracy of an extended source.
inline double prop1_bound(double a, double M_Y, double p_i, double L, double p_d) {
    if (!(p_i > 0.0)) throw NumericError("prop1_bound: coverage p_i must be positive");
    return a - (2.0 * a - 1.0) * M_Y / (p_i * p_i * (1.0 + L * p_d));
}

// Lower bound on the asymptotic generalization lift from extending one source.
inline double thm1_lift_bound(double L, double p_d, double p_i, double a_tilde, double a_bar, double C) {
    const double agree = a_tilde * a_bar + (1.0 - a_tilde) * (1.0 - a_bar);
    return L * p_d * p_i * (0.5 * (C + 1.0) * agree - C);
}

// Accuracy on the newly labeled region implied by the Prop. 1 chain.
inline double a_tilde_chain(double a_bar, double a, double M_Y, double p_i, double L, double p_d) {
    const double lp = L * p_d;
    if (!(lp > 0.0) || !(p_i > 0.0)) return a_bar;
    return a_bar - (2.0 * a - 1.0) * M_Y / (lp * p_i * p_i * (1.0 + lp));
}

struct EstimationConstants {
    std::size_t n = 0;
    std::size_t m = 0;
    double delta = 0.05;
    double o_min = 0.0;
    double e_min = 0.0;
    double c_1 = 0.0;
    double c_2 = 0.0;
    double c_p = 0.0;
    double L_min = 0.0;     // extended form only
    double p_d_rmin = 0.0;  // extended form only
};

inline double epsilon_n(std::size_t n, double delta) {
    return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
}

inline double thm1_estimation_bound(const EstimationConstants& k, bool extended) {
    if (k.n == 0 || k.m == 0) throw UsageError("estimation bound: n and m must be positive");
    if (!(k.delta > 0.0 && k.delta < 1.0)) throw UsageError("estimation bound: delta must lie in (0, 1)");
    const double eps = epsilon_n(k.n, k.delta);
    if (k.c_p <= eps) throw NumericError("bound vacuous at this n, \xce\xb4");
    if (!(k.e_min > 0.0) || !(k.c_1 > 0.0) || !(k.o_min > 0.0))
        throw NumericError("estimation bound: e_min, c_1 and o_min must be positive");
    double eff = static_cast<double>(k.n) * k.o_min;
    if (extended) eff *= 1.0 + (2.0 * k.L_min - k.L_min * k.L_min) * k.p_d_rmin;
    const double first = 81.0 * std::sqrt(std::numbers::pi) / (2.0 * k.e_min * k.c_1 * k.c_1) *
                         static_cast<double>(k.m) / std::sqrt(eff);
    return (first + eps * k.c_2) / (k.c_p - eps);
}

// Smoothness of Y implied by a model f_z with smoothness M_f and risk R.
inline double prop2_smoothness(double M_f, double risk) { return std::min(M_f + 2.0 * risk, 1.0); }

inline double extended_risk_bound(double a, double M_fz, double R_fz, double p_i, double L, double p_d) {
    if (!(p_i > 0.0)) throw NumericError("extended_risk_bound: coverage p_i must be positive");
    return 1.0 - a + (2.0 * a - 1.0) * (M_fz + 2.0 * R_fz) / (p_i * p_i * (1.0 + L * p_d));
}

inline double max_odds(double prior) {
    if (!(prior > 0.0 && prior < 1.0)) throw NumericError("prior must lie strictly between 0 and 1");
    return std::max(prior / (1.0 - prior), (1.0 - prior) / prior);
}

// weights[i] = Pr(X in X_i); together with pr_x0 they must sum to 1.
inline double thm2_ensemble_bound(std::span<const double> weights, std::span<const double> terms, double prior,
                                  double pr_x0) {
    if (weights.size() != terms.size()) throw UsageError("ensemble bound: weights and terms differ in length");
    const double b = max_odds(prior);
    double total = pr_x0, acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] < 0.0) throw UsageError("ensemble bound: negative weight");
        total += weights[i];
        acc += weights[i] * terms[i];
    }
    if (std::abs(total - 1.0) > 1e-9) throw UsageError("ensemble bound: weights plus Pr(X in X_0) must sum to 1");
    return 2.0 * b * acc + 2.0 * pr_x0 * prior * (1.0 - prior);
}

// ---- plug-in estimates -----------------------------------------------------

// C = E[p(X) | p(X) >= 0.5, Y = 1] with p(X) the posterior from the sources
// other than `source`, averaged over labeled leading rows. NaN if no row qualifies.
inline double other_sources_constant(const VoteMatrix& votes, const LabelModelParams& params, std::size_t source,
                                     const LabelVector& dev_labels) {
    LabelModelParams others;
    others.prior = params.prior;
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < params.m(); ++j) {
        if (j == source) continue;
        keep.push_back(j);
        others.accuracies.push_back(params.accuracies[j]);
        others.abstain_rates.push_back(params.abstain_rates[j]);
    }
    std::vector<std::int8_t> row(keep.size());
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < std::min(dev_labels.size(), votes.n()); ++i) {
        if (dev_labels[i] != 1) continue;
        for (std::size_t t = 0; t < keep.size(); ++t) row[t] = static_cast<std::int8_t>(votes(i, keep[t]));
        const double q = posterior(row, others);
        if (q >= 0.5) {
            sum += q;
            ++count;
        }
    }
    return count ? sum / static_cast<double>(count) : kUndefined;
}

struct LiftPoint {
    double radius = 0.0;
    double L = 0.0;
    double p_d = 0.0;
    double M_Y = kUndefined;
    double a_bar = 0.0;
    double a_tilde = 0.0;
    std::string a_bar_source;    // "dev" | "prop1"
    std::string a_tilde_source;  // "dev" | "chain"
    double bound = 0.0;
};

struct LiftCurve {
    std::size_t source = 0;
    double a = 0.0;    // accuracy of the unextended source
    double p_i = 0.0;  // original coverage
    double C = 0.0;
    std::vector<LiftPoint> points;
};

struct LiftInputs {
    double a = 0.0;
    double p_i = 0.0;
    double C = 0.0;
    std::optional<double> M_Y_fallback;  // smoothness from model inputs when no dev estimate
};

// Plug-in lift bound for each extended column of `source`. Extended
// accuracies are measured on labeled leading rows when any fall in the
// relevant region, otherwise derived from the bounds.
inline LiftCurve lift_bound_curve(const VoteMatrix& votes, std::size_t source,
                                  std::span<const std::vector<std::int8_t>> extended_columns,
                                  std::span<const double> radii, const LipschitzProfile& profile,
                                  const LabelVector* dev_labels, const LiftInputs& in) {
    if (extended_columns.size() != radii.size()) throw UsageError("lift curve: columns and radii differ in length");
    if (std::isnan(in.C)) throw NumericError("C undefined: no positive dev point has other-source posterior >= 0.5");
    LiftCurve curve{source, in.a, in.p_i, in.C, {}};
    const std::size_t n_dev = dev_labels ? std::min(dev_labels->size(), votes.n()) : 0;
    for (std::size_t g = 0; g < radii.size(); ++g) {
        LiftPoint pt;
        pt.radius = radii[g];
        const std::size_t pg = profile.index_of(radii[g]);
        pt.L = profile.L[source][pg];
        if (std::isnan(pt.L)) pt.L = 0.0;
        pt.p_d = profile.p_d[pg];
        pt.M_Y = profile.M_Y[pg];
        if (std::isnan(pt.M_Y) && in.M_Y_fallback) pt.M_Y = *in.M_Y_fallback;

        const auto& col = extended_columns[g];
        std::size_t ext = 0, ext_ok = 0, fresh = 0, fresh_ok = 0;
        for (std::size_t i = 0; i < n_dev; ++i) {
            if (col[i] == 0) continue;
            const bool ok = col[i] == (*dev_labels)[i];
            ++ext;
            ext_ok += ok;
            if (votes(i, source) == 0) {
                ++fresh;
                fresh_ok += ok;
            }
        }
        const double m_y = std::isnan(pt.M_Y) ? 0.0 : pt.M_Y;
        if (ext) {
            pt.a_bar = static_cast<double>(ext_ok) / static_cast<double>(ext);
            pt.a_bar_source = "dev";
        } else {
            pt.a_bar = std::clamp(prop1_bound(in.a, m_y, in.p_i, pt.L, pt.p_d), 0.0, 1.0);
            pt.a_bar_source = "prop1";
        }
        if (fresh) {
            pt.a_tilde = static_cast<double>(fresh_ok) / static_cast<double>(fresh);
            pt.a_tilde_source = "dev";
        } else {
            pt.a_tilde = std::clamp(a_tilde_chain(pt.a_bar, in.a, m_y, in.p_i, pt.L, pt.p_d), 0.0, 1.0);
            pt.a_tilde_source = "chain";
        }
        pt.bound = radii[g] > 0.0 ? thm1_lift_bound(pt.L, pt.p_d, in.p_i, pt.a_tilde, pt.a_bar, in.C) : 0.0;
        curve.points.push_back(std::move(pt));
    }
    return curve;
}

struct LiftMaximizer {
    std::size_t index = 0;
    double radius = 0.0;
    double bound = 0.0;
    bool non_positive = false;  // best bound <= 0: radius 0 recommended
};

// First grid point with the largest bound; radius 0 when no bound is positive.
inline LiftMaximizer lift_bound_maximizer(const LiftCurve& curve) {
    LiftMaximizer best;
    if (curve.points.empty()) {
        best.non_positive = true;
        return best;
    }
    best.bound = curve.points[0].bound;
    for (std::size_t g = 1; g < curve.points.size(); ++g) {
        if (curve.points[g].bound > best.bound) {
            best.bound = curve.points[g].bound;
            best.index = g;
        }
    }
    best.radius = curve.points[best.index].radius;
    if (!(best.bound > 0.0)) {
        best.non_positive = true;
        best.radius = 0.0;
    }
    return best;
}

// ---- estimation-error constants --------------------------------------------

// Constants of the estimation-error bound measured on one vote matrix.
inline EstimationConstants estimation_constants(const VoteMatrix& votes, const AccuracyEstimate& est,
                                                std::span<const double> posteriors, double delta) {
    EstimationConstants k;
    k.n = votes.n();
    k.m = votes.m();
    k.delta = delta;
    k.e_min = *std::min_element(est.a_e.begin(), est.a_e.end());
    const PairwiseStats s = pairwise_stats(votes);
    k.c_1 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k.m; ++i) {
        const auto& t = est.triplets.partners[i];
        k.c_1 = std::min({k.c_1, std::abs(s.e(i, t.j)), std::abs(s.e(i, t.k)), std::abs(s.e(t.j, t.k))});
    }
    double sum = 0.0;
    for (double q : posteriors) sum += q;
    k.c_2 = posteriors.empty() ? 0.0 : sum / static_cast<double>(posteriors.size());

    // Smallest empirical frequency among observed vote patterns.
    std::vector<std::string> patterns(votes.n());
    for (std::size_t i = 0; i < votes.n(); ++i) {
        const auto row = votes.row(i);
        patterns[i].assign(reinterpret_cast<const char*>(row.data()), row.size());
    }
    std::sort(patterns.begin(), patterns.end());
    std::size_t smallest = votes.n(), run = 0;
    for (std::size_t i = 0; i < patterns.size(); ++i) {
        ++run;
        if (i + 1 == patterns.size() || patterns[i + 1] != patterns[i]) {
            smallest = std::min(smallest, run);
            run = 0;
        }
    }
    k.c_p = votes.n() ? static_cast<double>(smallest) / static_cast<double>(votes.n()) : 0.0;
    return k;
}

// ---- report ----------------------------------------------------------------

struct DiagnoseOptions {
    std::vector<double> grid = default_grid();
    ProfileOptions profile;
    double delta = 0.05;
    std::optional<double> model_smoothness;  // M_{f_z}
    std::optional<double> model_risk;        // R(f_z)
    AccuracyOptions accuracy;
};

namespace detail {

inline nlohmann::json num(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

template <class Fn>
nlohmann::json guarded(Fn&& fn) {
    try {
        return {{"value", fn()}, {"reason", nullptr}};
    } catch (const NumericError& e) {
        return {{"value", nullptr}, {"reason", e.what()}};
    }
}

inline std::vector<double> merged_grid(std::span<const double> grid, std::span<const double> extra) {
    std::vector<double> g(grid.begin(), grid.end());
    for (double r : extra)
        if (r > 0.0) g.push_back(r);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    return g;
}

// Largest nearest-support distance over abstaining points: the radius at
// which extension covers every point.
inline double covering_radius(const EmbeddingSet& emb, const VoteMatrix& votes, std::size_t source,
                              const ExtensionOptions& opt) {
    std::vector<std::size_t> support, abstain;
    for (std::size_t i = 0; i < votes.n(); ++i) (votes(i, source) != 0 ? support : abstain).push_back(i);
    if (support.empty()) return kUndefined;
    if (abstain.empty()) return 0.0;
    const SupportSet sup = make_support(emb, support, opt.distance);
    const std::size_t blocks = (abstain.size() + kQueryBlock - 1) / kQueryBlock;
    std::vector<double> block_max(blocks, 0.0);
    for_each_query_block(emb, abstain, sup, opt.threads, [&](std::size_t begin, const ScreenedBlock& blk) {
        double worst = 0.0;
        for (std::size_t q = 0; q < blk.queries.size(); ++q) worst = std::max(worst, blk.nearest(q).first);
        block_max[begin / kQueryBlock] = worst;
    });
    return *std::max_element(block_max.begin(), block_max.end());
}

}  // namespace detail

// Aggregates profiles, coverage and overlap changes, and every bound into one
// JSON report. Dev labels cover the leading rows.
struct DiagnosticsReport {
    nlohmann::json json;
    LipschitzProfile profile;
    std::vector<LiftCurve> curves;
};

inline DiagnosticsReport diagnose(const EmbeddingSet& emb, const VoteMatrix& votes, const VoteMatrix& extended,
                                  const LabelVector* dev_labels, const LabelModelParams& params,
                                  const RadiusConfig& config, const DiagnoseOptions& opt,
                                  const ExtensionOptions& ext_opt) {
    const bool has_dev = dev_labels && dev_labels->size() > 0;
    const bool has_model = opt.model_smoothness && opt.model_risk;
    if (!has_dev && !has_model) throw UsageError("M\xcc\x82_Y requires labeled dev set or Prop. 2 inputs");
    if (emb.n() != votes.n() || extended.n() != votes.n() || extended.m() != votes.m())
        throw DataError("embeddings, votes and extended votes disagree in shape");
    if (config.radii.size() != votes.m() || params.m() != votes.m())
        throw DataError("radius config and params must have one entry per source");
    if (has_dev && dev_labels->size() > votes.n()) throw DataError("more dev labels than data points");

    const std::size_t m = votes.m();
    const auto cov = coverage(votes);
    const auto cov_ext = coverage(extended);

    std::vector<double> d_v(m);
    for (std::size_t j = 0; j < m; ++j) d_v[j] = detail::covering_radius(emb, votes, j, ext_opt);
    std::vector<double> extra = config.radii;
    for (double r : d_v)
        if (!std::isnan(r)) extra.push_back(r);
    const auto grid = detail::merged_grid(opt.grid, extra);
    ProfileOptions popt = opt.profile;
    popt.distance = ext_opt.distance;
    popt.threads = ext_opt.threads;

    DiagnosticsReport rep;
    rep.profile = estimate_profile(emb, votes, has_dev ? dev_labels : nullptr, grid, popt);
    const auto& prof = rep.profile;
    std::optional<double> m_y_model;
    if (has_model) m_y_model = prop2_smoothness(*opt.model_smoothness, *opt.model_risk);
    auto at = [&](const std::vector<double>& series, double r) -> double {
        return r <= 0.0 ? 0.0 : series[prof.index_of(r)];
    };

    nlohmann::json& j = rep.json;
    j["n"] = votes.n();
    j["m"] = m;
    j["n_dev"] = has_dev ? dev_labels->size() : 0;
    j["distance"] = to_string(ext_opt.distance);
    j["weighting"] = to_string(config.weighting);
    j["delta"] = opt.delta;
    j["loss_scale"] = "half_abs (1/2|Y - Y'|); extended_risk_bound evaluated verbatim";
    j["profile"] = {{"pairs", prof.pairs},
                    {"exhaustive", prof.exhaustive},
                    {"dev_pairs", prof.dev_pairs},
                    {"dev_exhaustive", prof.dev_exhaustive},
                    {"seed", popt.seed},
                    {"budget", popt.budget}};
    j["min_overlap_before"] = m >= 2 ? nlohmann::json(min_overlap(votes)) : nlohmann::json(nullptr);
    j["min_overlap_after"] = m >= 2 ? nlohmann::json(min_overlap(extended)) : nlohmann::json(nullptr);

    // Grid-wide extended columns per source, for the lift curves.
    nlohmann::json sources = nlohmann::json::array();
    std::vector<double> risk_terms(m, kUndefined);
    for (std::size_t s = 0; s < m; ++s) {
        const double r = config.radii[s];
        nlohmann::json src = {{"source", s},
                              {"radius", r},
                              {"accuracy", params.accuracies[s]},
                              {"coverage_before", cov[s]},
                              {"coverage_after", cov_ext[s]},
                              {"newly_labeled", cov_ext[s] - cov[s]},
                              {"covering_radius", detail::num(d_v[s])}};
        const double L_r = r > 0.0 ? at(prof.L[s], r) : kUndefined;
        const double pd_r = r > 0.0 ? at(prof.p_d, r) : 0.0;
        double my_r = r > 0.0 ? at(prof.M_Y, r) : kUndefined;
        if (std::isnan(my_r) && m_y_model) my_r = *m_y_model;
        src["L"] = detail::num(L_r);
        src["p_d"] = pd_r;
        src["M_Y"] = detail::num(my_r);
        const double L0 = std::isnan(L_r) ? 0.0 : L_r;
        src["prop1_bound"] = detail::guarded([&] {
            if (r <= 0.0) return params.accuracies[s];
            if (std::isnan(my_r)) throw NumericError("M_Y undefined at this radius");
            return prop1_bound(params.accuracies[s], my_r, cov[s], L0, pd_r);
        });

        if (has_model && !std::isnan(d_v[s])) {
            const double dv = d_v[s];
            const double L_dv = dv > 0.0 ? at(prof.L[s], dv) : 0.0;
            const double pd_dv = dv > 0.0 ? at(prof.p_d, dv) : 0.0;
            src["extended_risk_bound"] = detail::guarded([&] {
                return extended_risk_bound(params.accuracies[s], *opt.model_smoothness, *opt.model_risk, cov[s],
                                           std::isnan(L_dv) ? 0.0 : L_dv, pd_dv);
            });
            if (!src["extended_risk_bound"]["value"].is_null())
                risk_terms[s] = src["extended_risk_bound"]["value"].get<double>();
        } else {
            src["extended_risk_bound"] = {{"value", nullptr}, {"reason", "requires Prop. 2 inputs"}};
        }

        if (has_dev) {
            const double C = other_sources_constant(votes, params, s, *dev_labels);
            src["C"] = detail::num(C);
            try {
                const auto cols =
                    extend_source_over_grid(emb, votes, s, opt.grid, config.weighting, ext_opt);
                LiftInputs in{params.accuracies[s], cov[s], C, m_y_model};
                LiftCurve curve = lift_bound_curve(votes, s, cols, opt.grid, prof, dev_labels, in);
                const auto best = lift_bound_maximizer(curve);
                nlohmann::json pts = nlohmann::json::array();
                for (const auto& p : curve.points)
                    pts.push_back({{"radius", p.radius},
                                   {"bound", p.bound},
                                   {"a_bar", p.a_bar},
                                   {"a_tilde", p.a_tilde},
                                   {"a_bar_source", p.a_bar_source},
                                   {"a_tilde_source", p.a_tilde_source}});
                src["lift_curve"] = pts;
                src["lift_maximizer"] = {{"radius", best.radius},
                                         {"bound", best.bound},
                                         {"index", best.index},
                                         {"non_positive", best.non_positive}};
                double lift_r = 0.0;
                if (r > 0.0) {
                    const std::vector<double> rr{r};
                    const std::vector<std::vector<std::int8_t>> cc{extended.column(s)};
                    lift_r = lift_bound_curve(votes, s, cc, rr, prof, dev_labels, in).points[0].bound;
                }
                src["lift_bound"] = {{"value", lift_r}, {"reason", nullptr}};
                src["recommend_extension"] = lift_r > 0.0;
                rep.curves.push_back(std::move(curve));
            } catch (const NumericError& e) {
                src["lift_bound"] = {{"value", nullptr}, {"reason", e.what()}};
                src["recommend_extension"] = false;
            }
        } else {
            src["C"] = nullptr;
            src["lift_bound"] = {{"value", nullptr}, {"reason", "C requires dev labels"}};
            src["recommend_extension"] = false;
        }
        sources.push_back(std::move(src));
    }
    j["sources"] = std::move(sources);

    // Estimation-error bounds for the unextended and extended label models.
    auto est_bound = [&](const VoteMatrix& v, bool ext) -> nlohmann::json {
        try {
            const auto est = estimate_accuracies_detailed(v, params.prior, opt.accuracy);
            const auto pred = predict(v, est.params, ext_opt.threads);
            EstimationConstants k = estimation_constants(v, est, pred.posteriors, opt.delta);
            k.o_min = min_overlap(votes);
            if (ext) {
                double L_min = std::numeric_limits<double>::infinity();
                double r_min = std::numeric_limits<double>::infinity();
                for (std::size_t s = 0; s < m; ++s) {
                    const double r = config.radii[s];
                    const double L = r > 0.0 ? at(prof.L[s], r) : kUndefined;
                    L_min = std::min(L_min, std::isnan(L) ? 0.0 : L);
                    r_min = std::min(r_min, r);
                }
                k.L_min = L_min;
                k.p_d_rmin = r_min > 0.0 ? at(prof.p_d, r_min) : 0.0;
            }
            nlohmann::json out = {{"constants",
                                   {{"n", k.n},
                                    {"m", k.m},
                                    {"o_min", k.o_min},
                                    {"e_min", k.e_min},
                                    {"c_1", k.c_1},
                                    {"c_2", k.c_2},
                                    {"c_p", k.c_p},
                                    {"epsilon_n", epsilon_n(k.n, k.delta)},
                                    {"L_min", k.L_min},
                                    {"p_d_rmin", k.p_d_rmin}}}};
            const auto g = detail::guarded([&] { return thm1_estimation_bound(k, ext); });
            out["value"] = g["value"];
            out["reason"] = g["reason"];
            return out;
        } catch (const Error& e) {
            return {{"value", nullptr}, {"reason", e.what()}};
        }
    };
    j["estimation_bound"] = {{"unextended", est_bound(votes, false)}, {"extended", est_bound(extended, true)}};

    // Ensemble bound: rows nobody votes on form X_0; the rest is split in
    // proportion to extended coverage.
    if (has_model) {
        std::size_t none = 0;
        for (std::size_t i = 0; i < extended.n(); ++i) {
            bool any = false;
            for (auto v : extended.row(i)) any |= v != 0;
            none += !any;
        }
        const double pr_x0 = extended.n() ? static_cast<double>(none) / static_cast<double>(extended.n()) : 1.0;
        double cov_sum = 0.0;
        for (double c : cov_ext) cov_sum += c;
        std::vector<double> w(m, 0.0), terms(m, 0.0);
        bool ok = true;
        for (std::size_t s = 0; s < m; ++s) {
            w[s] = cov_sum > 0.0 ? (1.0 - pr_x0) * cov_ext[s] / cov_sum : 0.0;
            if (w[s] > 0.0 && std::isnan(risk_terms[s])) ok = false;
            terms[s] = std::isnan(risk_terms[s]) ? 0.0 : risk_terms[s];
        }
        if (ok) {
            j["ensemble_bound"] = detail::guarded([&] {
                const double x0 = cov_sum > 0.0 ? pr_x0 : 1.0;
                return thm2_ensemble_bound(w, terms, params.prior, x0);
            });
            j["ensemble_bound"]["weights"] = w;
            j["ensemble_bound"]["pr_x0"] = pr_x0;
        } else {
            j["ensemble_bound"] = {{"value", nullptr}, {"reason", "extended risk bound unavailable for a weighted source"}};
        }
    } else {
        j["ensemble_bound"] = {{"value", nullptr}, {"reason", "requires Prop. 2 inputs"}};
    }
    return rep;
}

}  // namespace lfx
