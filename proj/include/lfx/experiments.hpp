#pragma once
// Synthetic tasks, radius sweeps, radius tuning and evaluation metrics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfx/core.hpp"
#include "lfx/diagnostics.hpp"
#include "lfx/extension.hpp"
#include "lfx/io.hpp"
#include "lfx/label_model.hpp"
#include "lfx/parallel.hpp"
#include "lfx/random.hpp"

namespace lfx {

// ---- metrics ---------------------------------------------------------------

struct Metrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t n = 0;
};

// Positive class is +1. Precision, recall and F1 are 0 when undefined.
inline Metrics evaluate(std::span<const std::int8_t> pred, std::span<const std::int8_t> gold) {
    if (pred.size() != gold.size())
        throw DataError("evaluate: " + std::to_string(pred.size()) + " predictions for " +
                        std::to_string(gold.size()) + " gold labels");
    std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        correct += pred[i] == gold[i];
        tp += pred[i] == 1 && gold[i] == 1;
        fp += pred[i] == 1 && gold[i] != 1;
        fn += pred[i] != 1 && gold[i] == 1;
    }
    Metrics m;
    m.n = pred.size();
    m.accuracy = m.n ? static_cast<double>(correct) / static_cast<double>(m.n) : 0.0;
    m.precision = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    return m;
}

inline Metrics evaluate(const LabelVector& pred, const LabelVector& gold) { return evaluate(pred.values(), gold.values()); }

inline nlohmann::json to_json(const Metrics& m) {
    return {{"accuracy", m.accuracy}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"n", m.n}};
}

enum class Metric { Auto, Accuracy, F1 };

inline Metric parse_metric(std::string_view s) {
    if (s == "auto") return Metric::Auto;
    if (s == "accuracy") return Metric::Accuracy;
    if (s == "f1") return Metric::F1;
    throw UsageError("unknown metric '" + std::string(s) + "' (expected accuracy|f1|auto)");
}

inline const char* to_string(Metric m) {
    return m == Metric::Accuracy ? "accuracy" : m == Metric::F1 ? "f1" : "auto";
}

// Auto picks F1 for skewed gold labels (positive rate below 0.35).
inline Metric resolve_metric(Metric m, const LabelVector& gold) {
    if (m != Metric::Auto) return m;
    return gold.positive_fraction() < 0.35 ? Metric::F1 : Metric::Accuracy;
}

inline double metric_value(const Metrics& m, Metric which) { return which == Metric::F1 ? m.f1 : m.accuracy; }

// ---- pipeline step used by sweeps and tuning --------------------------------

struct FitOutcome {
    std::vector<std::int8_t> labels;
    std::optional<LabelModelParams> params;
    bool degenerate = false;  // label model failed numerically; majority vote used
};

inline FitOutcome fit_and_predict(const VoteMatrix& votes, double prior, const AccuracyOptions& acc = {},
                                  unsigned threads = 1) {
    FitOutcome out;
    try {
        auto params = estimate_accuracies(votes, prior, acc);
        auto pred = predict(votes, params, threads);
        out.labels.assign(pred.labels.values().begin(), pred.labels.values().end());
        out.params = std::move(params);
    } catch (const NumericError&) {
        const auto mv = majority_vote(votes, prior);
        out.labels.assign(mv.values().begin(), mv.values().end());
        out.degenerate = true;
    }
    return out;
}

// ---- synthetic tasks -------------------------------------------------------

enum class LabelPattern { Checkerboard, Random };

struct SyntheticConfig {
    std::size_t n = 10'000;
    std::size_t k = 10;
    std::vector<double> accuracies{0.89, 0.8, 0.8};
    std::vector<double> supports{0.3, 0.2, 0.2};
    LabelPattern pattern = LabelPattern::Checkerboard;
    double dev_fraction = 0.1;
    std::uint64_t seed = 0;
};

// Points uniform on the unit square. Dev labels are the leading n_dev rows;
// rows are i.i.d., so that split is random.
struct SyntheticTask {
    EmbeddingSet embeddings;
    LabelVector gold;
    VoteMatrix votes;
    std::size_t n_dev = 0;
    SyntheticConfig config;

    LabelVector dev_labels() const { return gold.head(n_dev); }
};

inline int checkerboard_label(double x, double y, std::size_t k) {
    const auto cx = static_cast<long long>(std::floor(x * static_cast<double>(k)));
    const auto cy = static_cast<long long>(std::floor(y * static_cast<double>(k)));
    return (cx + cy) % 2 == 0 ? 1 : -1;
}

namespace detail {

// Streams: 0 points, 1 random labels, 100+j support of source j, 200+j the
// per-point uniforms deciding whether source j is correct. Variants that
// differ only in accuracies therefore share points, labels and supports.
inline VoteMatrix synthetic_votes(const LabelVector& gold, std::span<const double> acc, std::span<const double> sup,
                                  std::uint64_t seed) {
    const std::size_t n = gold.size(), m = acc.size();
    VoteMatrix votes(n, m);
    std::vector<std::size_t> idx(n);
    for (std::size_t j = 0; j < m; ++j) {
        Rng srng = make_rng(seed, 100 + j);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        shuffle(std::span<std::size_t>(idx), srng);
        const auto count = static_cast<std::size_t>(std::llround(sup[j] * static_cast<double>(n)));
        Rng urng = make_rng(seed, 200 + j);
        std::vector<double> u(n);
        for (auto& x : u) x = uniform01(urng);
        for (std::size_t t = 0; t < count; ++t) {
            const std::size_t i = idx[t];
            votes.set(i, j, u[i] < acc[j] ? gold[i] : -gold[i]);
        }
    }
    return votes;
}

inline void check_fractions(std::span<const double> acc, std::span<const double> sup) {
    if (acc.size() != sup.size()) throw UsageError("accuracies and support fractions differ in length");
    for (std::size_t j = 0; j < acc.size(); ++j) {
        if (!(acc[j] >= 0.0 && acc[j] <= 1.0)) throw UsageError("accuracy " + std::to_string(j) + " outside [0, 1]");
        if (!(sup[j] >= 0.0 && sup[j] <= 1.0))
            throw UsageError("support fraction " + std::to_string(j) + " outside [0, 1]");
    }
}

}  // namespace detail

inline SyntheticTask generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n < 1 || cfg.k < 1) throw UsageError("synthetic task needs n >= 1 and k >= 1");
    if (cfg.accuracies.size() < 3) throw UsageError("synthetic task needs m >= 3 sources");
    detail::check_fractions(cfg.accuracies, cfg.supports);
    if (!(cfg.dev_fraction >= 0.0 && cfg.dev_fraction < 1.0)) throw UsageError("dev fraction must lie in [0, 1)");

    RowMatrix pts(static_cast<Eigen::Index>(cfg.n), 2);
    Rng prng = make_rng(cfg.seed, 0);
    for (std::size_t i = 0; i < cfg.n; ++i) {
        pts(static_cast<Eigen::Index>(i), 0) = uniform01(prng);
        pts(static_cast<Eigen::Index>(i), 1) = uniform01(prng);
    }
    std::vector<std::int8_t> y(cfg.n);
    if (cfg.pattern == LabelPattern::Checkerboard) {
        for (std::size_t i = 0; i < cfg.n; ++i)
            y[i] = static_cast<std::int8_t>(
                checkerboard_label(pts(static_cast<Eigen::Index>(i), 0), pts(static_cast<Eigen::Index>(i), 1), cfg.k));
    } else {
        Rng lrng = make_rng(cfg.seed, 1);
        for (auto& v : y) v = static_cast<std::int8_t>(uniform01(lrng) < 0.5 ? 1 : -1);
    }
    SyntheticTask task;
    task.config = cfg;
    task.gold = LabelVector(std::move(y));
    task.votes = detail::synthetic_votes(task.gold, cfg.accuracies, cfg.supports, cfg.seed);
    task.embeddings = EmbeddingSet(std::move(pts));
    task.n_dev = static_cast<std::size_t>(std::floor(cfg.dev_fraction * static_cast<double>(cfg.n)));
    return task;
}

inline SyntheticTask generate_checkerboard(std::size_t n, std::size_t k, std::size_t m, std::span<const double> accuracies,
                                           std::span<const double> support_fractions, std::uint64_t seed) {
    if (accuracies.size() != m || support_fractions.size() != m)
        throw UsageError("accuracies and support fractions must have length m");
    SyntheticConfig cfg;
    cfg.n = n;
    cfg.k = k;
    cfg.accuracies.assign(accuracies.begin(), accuracies.end());
    cfg.supports.assign(support_fractions.begin(), support_fractions.end());
    cfg.seed = seed;
    return generate_synthetic(cfg);
}

// Sources conditionally independent given Y, without embeddings.
struct IndependentSources {
    LabelVector gold;
    VoteMatrix votes;
};

inline IndependentSources generate_independent_sources(std::size_t n, std::span<const double> accuracies,
                                                       std::span<const double> supports, double prior,
                                                       std::uint64_t seed) {
    detail::check_fractions(accuracies, supports);
    if (!(prior > 0.0 && prior < 1.0)) throw UsageError("prior must lie in (0, 1)");
    Rng lrng = make_rng(seed, 1);
    std::vector<std::int8_t> y(n);
    for (auto& v : y) v = static_cast<std::int8_t>(uniform01(lrng) < prior ? 1 : -1);
    IndependentSources out;
    out.gold = LabelVector(std::move(y));
    out.votes = detail::synthetic_votes(out.gold, accuracies, supports, seed);
    return out;
}

// ---- radius sweep ----------------------------------------------------------

struct SweepOptions {
    Weighting weighting = Weighting::ThresholdedWeightedSum;
    Distance distance = Distance::Euclidean;
    double prior = 0.5;
    unsigned threads = 1;
    bool with_bound = true;
    ProfileOptions profile;
};

struct SweepResult {
    std::vector<double> radii;
    std::vector<double> coverage;           // extended coverage of the swept source
    std::vector<double> dev_metric;         // accuracy on the labeled leading rows
    std::vector<double> test_metric;        // accuracy on the remaining rows
    std::vector<double> lift;               // test_metric minus the unextended baseline
    std::vector<double> bound;              // plug-in lift bound (NaN when not computed)
    std::vector<double> extended_accuracy;  // accuracy of the extended source on its support, all rows
    std::vector<bool> degenerate;
    double baseline_test = 0.0;
    double baseline_dev = 0.0;
    double source_accuracy = 0.0;  // accuracy of the unextended source on its support, all rows
    double support_fraction = 0.0;  // coverage of the unextended source
    std::optional<LipschitzProfile> profile;
};

namespace detail {

inline double support_accuracy(std::span<const std::int8_t> col, const LabelVector& gold) {
    std::size_t on = 0, ok = 0;
    for (std::size_t i = 0; i < col.size(); ++i) {
        if (col[i] == 0) continue;
        ++on;
        ok += col[i] == gold[i];
    }
    return on ? static_cast<double>(ok) / static_cast<double>(on) : kUndefined;
}

inline std::pair<double, double> split_accuracy(std::span<const std::int8_t> pred, const LabelVector& gold,
                                                std::size_t n_dev) {
    const auto g = gold.values();
    const double dev = n_dev ? evaluate(pred.first(n_dev), g.first(n_dev)).accuracy : kUndefined;
    const double test = n_dev < g.size() ? evaluate(pred.subspan(n_dev), g.subspan(n_dev)).accuracy : kUndefined;
    return {dev, test};
}

}  // namespace detail

// Extends only `source` at each grid radius, refits and records accuracy.
inline SweepResult sweep_radius(const SyntheticTask& task, std::size_t source, std::span<const double> grid,
                                const SweepOptions& opt = {}) {
    if (source >= task.votes.m()) throw UsageError("sweep: source " + std::to_string(source) + " does not exist");
    if (grid.empty()) throw UsageError("radius grid is empty");
    std::vector<double> sorted(grid.begin(), grid.end());
    if (!std::is_sorted(sorted.begin(), sorted.end())) throw UsageError("radius grid must be ascending");

    SweepResult res;
    res.radii = sorted;
    const ExtensionOptions eopt{opt.distance, opt.threads};
    const auto base = fit_and_predict(task.votes, opt.prior);
    std::tie(res.baseline_dev, res.baseline_test) = detail::split_accuracy(base.labels, task.gold, task.n_dev);
    res.source_accuracy = detail::support_accuracy(task.votes.column(source), task.gold);
    res.support_fraction = coverage(task.votes)[source];

    const auto cols = extend_source_over_grid(task.embeddings, task.votes, source, sorted, opt.weighting, eopt);
    const std::size_t K = sorted.size();
    res.coverage.resize(K);
    res.dev_metric.resize(K);
    res.test_metric.resize(K);
    res.lift.resize(K);
    res.bound.assign(K, kUndefined);
    res.extended_accuracy.resize(K);
    res.degenerate.resize(K);
    std::vector<char> degenerate(K, 0);
    parallel_for(K, opt.threads, [&](std::size_t g0, std::size_t g1) {
        for (std::size_t g = g0; g < g1; ++g) {
            VoteMatrix v = task.votes;
            v.set_column(source, cols[g]);
            const auto out = fit_and_predict(v, opt.prior);
            std::tie(res.dev_metric[g], res.test_metric[g]) = detail::split_accuracy(out.labels, task.gold, task.n_dev);
            res.lift[g] = res.test_metric[g] - res.baseline_test;
            std::size_t on = 0;
            for (auto x : cols[g]) on += x != 0;
            res.coverage[g] = static_cast<double>(on) / static_cast<double>(cols[g].size());
            res.extended_accuracy[g] = detail::support_accuracy(cols[g], task.gold);
            degenerate[g] = out.degenerate;
        }
    });
    for (std::size_t g = 0; g < K; ++g) res.degenerate[g] = degenerate[g];

    if (opt.with_bound && task.n_dev > 0) {
        ProfileOptions popt = opt.profile;
        popt.distance = opt.distance;
        popt.threads = opt.threads;
        const LabelVector dev = task.dev_labels();
        res.profile = estimate_profile(task.embeddings, task.votes, &dev, sorted, popt);
        try {
            const auto params = estimate_accuracies(task.votes, opt.prior);
            const double C = other_sources_constant(task.votes, params, source, dev);
            const auto cov = coverage(task.votes);
            const LiftInputs in{params.accuracies[source], cov[source], C, std::nullopt};
            const auto curve = lift_bound_curve(task.votes, source, cols, sorted, *res.profile, &dev, in);
            for (std::size_t g = 0; g < K; ++g) res.bound[g] = curve.points[g].bound;
        } catch (const NumericError&) {
            // bound stays undefined
        }
    }
    return res;
}

inline std::string sweep_csv(const SweepResult& r) {
    auto cell = [](double v) { return std::isnan(v) ? std::string("NA") : io::format_double(v); };
    std::string out = "radius,coverage,dev_metric,test_metric,lift,bound,extended_accuracy,degenerate\n";
    for (std::size_t g = 0; g < r.radii.size(); ++g) {
        out += cell(r.radii[g]) + ',' + cell(r.coverage[g]) + ',' + cell(r.dev_metric[g]) + ',' +
               cell(r.test_metric[g]) + ',' + cell(r.lift[g]) + ',' + cell(r.bound[g]) + ',' +
               cell(r.extended_accuracy[g]) + ',' + (r.degenerate[g] ? "1" : "0") + '\n';
    }
    return out;
}

// ---- tuning ----------------------------------------------------------------

struct TuneOptions {
    Weighting weighting = Weighting::OneNearestNeighbor;
    Distance distance = Distance::Cosine;
    Metric metric = Metric::Auto;
    unsigned threads = 1;
    AccuracyOptions accuracy;
    std::vector<bool> extend_mask;  // sources allowed to extend; empty means all
};

struct TuneResult {
    double radius = 0.0;
    std::size_t index = 0;
    double metric = 0.0;
    Metric metric_kind = Metric::Accuracy;
    std::vector<double> radii;
    std::vector<double> metrics;
    std::vector<bool> degenerate;
    std::string note;
};

namespace detail {

inline bool allowed(const std::vector<bool>& mask, std::size_t j) { return mask.empty() || mask.at(j); }

inline bool has_abstain(const VoteMatrix& v, std::size_t j) {
    for (std::size_t i = 0; i < v.n(); ++i)
        if (v(i, j) == 0) return true;
    return false;
}

inline double dev_score(const VoteMatrix& v, const LabelVector& dev, double prior, Metric metric,
                        const TuneOptions& opt, bool* degenerate = nullptr) {
    const auto out = fit_and_predict(v, prior, opt.accuracy);
    if (degenerate) *degenerate = out.degenerate;
    const auto pred = std::span<const std::int8_t>(out.labels).first(dev.size());
    return metric_value(evaluate(pred, dev.values()), metric);
}

inline void check_tune_inputs(const EmbeddingSet& emb, const VoteMatrix& votes, const LabelVector& dev) {
    if (dev.size() == 0) throw UsageError("tuning requires dev labels");
    if (dev.size() > votes.n()) throw DataError("more dev labels than data points");
    if (emb.n() != votes.n()) throw DataError("embeddings and votes disagree on n");
}

}  // namespace detail

// Grid search over one radius shared by every (allowed) source; ties go to
// the smaller radius.
inline TuneResult tune_shared_radius(const EmbeddingSet& emb, const VoteMatrix& votes, const LabelVector& dev,
                                     double prior, std::span<const double> grid, const TuneOptions& opt = {}) {
    if (grid.empty()) throw UsageError("radius grid is empty");
    detail::check_tune_inputs(emb, votes, dev);
    TuneResult res;
    res.metric_kind = resolve_metric(opt.metric, dev);
    res.radii.assign(grid.begin(), grid.end());
    std::sort(res.radii.begin(), res.radii.end());
    for (double r : res.radii)
        if (!(r >= 0.0)) throw UsageError("radius grid must be nonnegative");

    const std::size_t m = votes.m(), K = res.radii.size();
    bool any_abstain = false;
    for (std::size_t j = 0; j < m; ++j) any_abstain |= detail::allowed(opt.extend_mask, j) && detail::has_abstain(votes, j);
    if (!any_abstain) {
        res.radius = 0.0;
        res.note = "no abstains to extend";
        res.metric = detail::dev_score(votes, dev, prior, res.metric_kind, opt);
        res.metrics.assign(K, res.metric);
        res.degenerate.assign(K, false);
        return res;
    }

    const ExtensionOptions eopt{opt.distance, opt.threads};
    std::vector<std::vector<std::vector<std::int8_t>>> cols(m);
    for (std::size_t j = 0; j < m; ++j)
        if (detail::allowed(opt.extend_mask, j))
            cols[j] = extend_source_over_grid(emb, votes, j, res.radii, opt.weighting, eopt);

    res.metrics.resize(K);
    std::vector<char> degenerate(K, 0);
    parallel_for(K, opt.threads, [&](std::size_t g0, std::size_t g1) {
        for (std::size_t g = g0; g < g1; ++g) {
            VoteMatrix v = votes;
            for (std::size_t j = 0; j < m; ++j)
                if (!cols[j].empty()) v.set_column(j, cols[j][g]);
            bool deg = false;
            res.metrics[g] = detail::dev_score(v, dev, prior, res.metric_kind, opt, &deg);
            degenerate[g] = deg;
        }
    });
    res.degenerate.assign(degenerate.begin(), degenerate.end());
    res.index = 0;
    for (std::size_t g = 1; g < K; ++g)
        if (res.metrics[g] > res.metrics[res.index]) res.index = g;
    res.radius = res.radii[res.index];
    res.metric = res.metrics[res.index];
    return res;
}

struct RefineOptions {
    TuneOptions tune;
    std::size_t passes = 1;
    std::vector<double> factors{0.0, 0.5, 0.7071067811865476, 1.0, 1.4142135623730951, 2.0};
};

struct RefineResult {
    RadiusConfig config;
    double metric_before = 0.0;
    double metric_after = 0.0;
    Metric metric_kind = Metric::Accuracy;
};

// Coordinate search over sources in index order. Each source tries its local
// grid (explicit, or factors times its current radius) with the others held
// fixed and keeps its current radius unless a candidate scores strictly higher.
inline RefineResult refine_radii(const EmbeddingSet& emb, const VoteMatrix& votes, const LabelVector& dev,
                                 double prior, const RadiusConfig& start,
                                 const std::vector<std::vector<double>>& local_grids = {},
                                 const RefineOptions& opt = {}) {
    detail::check_tune_inputs(emb, votes, dev);
    if (start.radii.size() != votes.m()) throw UsageError("refine: start config needs one radius per source");
    if (!local_grids.empty() && local_grids.size() != votes.m())
        throw UsageError("refine: need one local grid per source");
    start.validate();
    const std::size_t m = votes.m();
    const ExtensionOptions eopt{opt.tune.distance, opt.tune.threads};

    RefineResult res;
    res.metric_kind = resolve_metric(opt.tune.metric, dev);
    res.config = start;
    res.config.weighting = opt.tune.weighting;
    for (std::size_t j = 0; j < m; ++j)
        if (!detail::has_abstain(votes, j) || !detail::allowed(opt.tune.extend_mask, j)) res.config.radii[j] = 0.0;

    VoteMatrix current = votes;
    for (std::size_t j = 0; j < m; ++j)
        if (res.config.radii[j] > 0.0)
            current.set_column(j, extend_column(emb, votes, j, res.config.radii[j], res.config.weighting, eopt));
    res.metric_before = detail::dev_score(current, dev, prior, res.metric_kind, opt.tune);
    double best = res.metric_before;

    for (std::size_t pass = 0; pass < opt.passes; ++pass) {
        for (std::size_t j = 0; j < m; ++j) {
            if (!detail::has_abstain(votes, j) || !detail::allowed(opt.tune.extend_mask, j)) continue;
            std::vector<double> cands;
            if (!local_grids.empty()) {
                cands = local_grids[j];
            } else {
                for (double f : opt.factors) cands.push_back(f * res.config.radii[j]);
            }
            std::sort(cands.begin(), cands.end());
            cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
            if (cands.empty()) continue;
            const auto cols = extend_source_over_grid(emb, votes, j, cands, res.config.weighting, eopt);
            std::vector<double> scores(cands.size());
            parallel_for(cands.size(), opt.tune.threads, [&](std::size_t c0, std::size_t c1) {
                for (std::size_t c = c0; c < c1; ++c) {
                    VoteMatrix v = current;
                    v.set_column(j, cols[c]);
                    scores[c] = detail::dev_score(v, dev, prior, res.metric_kind, opt.tune);
                }
            });
            std::size_t pick = cands.size();
            for (std::size_t c = 0; c < cands.size(); ++c)
                if (scores[c] > best && (pick == cands.size() || scores[c] > scores[pick])) pick = c;
            if (pick == cands.size()) continue;
            best = scores[pick];
            res.config.radii[j] = cands[pick];
            current.set_column(j, cols[pick]);
        }
    }
    res.metric_after = best;
    return res;
}

// ---- theory-guided radius --------------------------------------------------

struct TheoryRadius {
    double radius = 0.0;
    std::size_t index = 0;
    double bound = 0.0;
    bool non_positive = false;
    LiftCurve curve;
};

inline TheoryRadius theory_guided_radius(const LiftCurve& curve) {
    const auto best = lift_bound_maximizer(curve);
    return {best.radius, best.index, best.bound, best.non_positive, curve};
}

// Plug-in lift bound over the grid for `source`, using the label model fit on
// the unextended votes and the dev labels on the leading rows.
inline TheoryRadius theory_guided_radius(const EmbeddingSet& emb, const VoteMatrix& votes, const LabelVector& dev,
                                         double prior, std::size_t source, std::span<const double> grid,
                                         Weighting weighting, const ProfileOptions& popt_in,
                                         const AccuracyOptions& acc = {}) {
    if (grid.empty()) throw UsageError("radius grid is empty");
    if (source >= votes.m()) throw UsageError("source " + std::to_string(source) + " does not exist");
    const auto params = estimate_accuracies(votes, prior, acc);
    const auto profile = estimate_profile(emb, votes, &dev, grid, popt_in);
    const double C = other_sources_constant(votes, params, source, dev);
    const auto cov = coverage(votes);
    const ExtensionOptions eopt{popt_in.distance, popt_in.threads};
    const auto cols = extend_source_over_grid(emb, votes, source, grid, weighting, eopt);
    const LiftInputs in{params.accuracies[source], cov[source], C, std::nullopt};
    return theory_guided_radius(lift_bound_curve(votes, source, cols, grid, profile, &dev, in));
}

}  // namespace lfx
