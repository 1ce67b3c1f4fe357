#pragma once
// Single-task label model: triplet-method accuracy recovery and posterior
// inference under conditional independence given Y, plus majority vote.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfx/core.hpp"
#include "lfx/extension.hpp"
#include "lfx/parallel.hpp"

namespace lfx {

// Pairwise overlap Pr(both vote) and conditional moment E[l_a l_b | both vote].
struct PairwiseStats {
    std::size_t m = 0;
    std::vector<double> overlap;  // m x m
    std::vector<double> moment;   // m x m; 0 where the pair never co-votes
    std::vector<std::size_t> both;

    double o(std::size_t a, std::size_t b) const { return overlap[a * m + b]; }
    double e(std::size_t a, std::size_t b) const { return moment[a * m + b]; }
};

inline PairwiseStats pairwise_stats(const VoteMatrix& votes) {
    const std::size_t m = votes.m();
    PairwiseStats s;
    s.m = m;
    s.both.assign(m * m, 0);
    std::vector<long long> prod(m * m, 0);
    for (std::size_t i = 0; i < votes.n(); ++i) {
        const auto row = votes.row(i);
        for (std::size_t a = 0; a < m; ++a) {
            if (row[a] == 0) continue;
            for (std::size_t b = a; b < m; ++b) {
                if (row[b] == 0) continue;
                ++s.both[a * m + b];
                prod[a * m + b] += row[a] * row[b];
            }
        }
    }
    s.overlap.assign(m * m, 0.0);
    s.moment.assign(m * m, 0.0);
    const double n = votes.n() ? static_cast<double>(votes.n()) : 1.0;
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a; b < m; ++b) {
            const std::size_t c = s.both[a * m + b];
            s.both[b * m + a] = c;
            s.overlap[a * m + b] = s.overlap[b * m + a] = static_cast<double>(c) / n;
            const double e = c ? static_cast<double>(prod[a * m + b]) / static_cast<double>(c) : 0.0;
            s.moment[a * m + b] = s.moment[b * m + a] = e;
        }
    }
    return s;
}

struct TripletChoice {
    std::size_t j = 0;
    std::size_t k = 0;
    double min_overlap = 0.0;
};

struct TripletAssignment {
    std::vector<TripletChoice> partners;  // indexed by source
};

inline TripletAssignment select_triplets(const PairwiseStats& s) {
    const std::size_t m = s.m;
    if (m < 3) throw DataError("triplet method requires \xe2\x89\xa5 3 sources (got " + std::to_string(m) + ")");
    TripletAssignment out;
    out.partners.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double best = -1.0;
        TripletChoice choice;
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            for (std::size_t k = j + 1; k < m; ++k) {
                if (k == i) continue;
                const double v = std::min({s.o(i, j), s.o(i, k), s.o(j, k)});
                if (v > best) {  // strict: lexicographically smallest (j, k) wins ties
                    best = v;
                    choice = {j, k, v};
                }
            }
        }
        if (!(best > 0.0))
            throw NumericError("no triplet with positive pairwise overlap for source " + std::to_string(i));
        out.partners[i] = choice;
    }
    return out;
}

inline TripletAssignment select_triplets(const VoteMatrix& votes) { return select_triplets(pairwise_stats(votes)); }

struct AccuracyOptions {
    double clamp = 0.001;
    std::vector<std::size_t> flip_sources;  // sources assumed worse than random
};

struct AccuracyEstimate {
    LabelModelParams params;
    TripletAssignment triplets;
    std::vector<double> a_e;  // clamped |a_i^E| before conversion
};

inline AccuracyEstimate estimate_accuracies_detailed(const VoteMatrix& votes, double prior,
                                                     const AccuracyOptions& opt = {}) {
    if (!(prior > 0.0 && prior < 1.0)) throw UsageError("prior must lie in (0, 1)");
    const PairwiseStats s = pairwise_stats(votes);
    AccuracyEstimate est;
    est.triplets = select_triplets(s);
    for (std::size_t f : opt.flip_sources)
        if (f >= votes.m()) throw UsageError("--flip-source " + std::to_string(f) + " out of range");

    const std::size_t m = votes.m();
    const auto cov = coverage(votes);
    est.params.prior = prior;
    est.params.accuracies.resize(m);
    est.params.abstain_rates.resize(m);
    est.a_e.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        const auto [j, k, mo] = est.triplets.partners[i];
        const double ejk = s.e(j, k);
        if (ejk == 0.0)
            throw NumericError("degenerate triplet (" + std::to_string(i) + ", " + std::to_string(j) + ", " +
                               std::to_string(k) + "): E[l_j l_k] = 0");
        double ae = std::sqrt(std::abs(s.e(i, j) * s.e(i, k) / ejk));
        ae = std::clamp(ae, opt.clamp, 1.0 - opt.clamp);
        est.a_e[i] = ae;
        const bool flip = std::find(opt.flip_sources.begin(), opt.flip_sources.end(), i) != opt.flip_sources.end();
        est.params.accuracies[i] = 0.5 * ((flip ? -ae : ae) + 1.0);
        est.params.abstain_rates[i] = 1.0 - cov[i];
    }
    return est;
}

inline LabelModelParams estimate_accuracies(const VoteMatrix& votes, double prior, const AccuracyOptions& opt = {}) {
    return estimate_accuracies_detailed(votes, prior, opt).params;
}

// Pr(Y = 1 | votes). Abstain factors and Pr(l_i != 0) appear identically in
// both class numerators and cancel, so only voting sources contribute.
inline double posterior(std::span<const std::int8_t> row, const LabelModelParams& params) {
    if (row.size() != params.m())
        throw DataError("posterior: row has " + std::to_string(row.size()) + " votes, params have " +
                        std::to_string(params.m()) + " sources");
    double log_pos = std::log(params.prior);
    double log_neg = std::log1p(-params.prior);
    bool any = false;
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (row[i] == 0) continue;
        any = true;
        const double a = params.accuracies[i];
        if (row[i] > 0) {
            log_pos += std::log(a);
            log_neg += std::log1p(-a);
        } else {
            log_pos += std::log1p(-a);
            log_neg += std::log(a);
        }
    }
    if (!any) return params.prior;
    // q = e^lp / (e^lp + e^ln), evaluated against the larger term.
    if (log_pos >= log_neg) return 1.0 / (1.0 + std::exp(log_neg - log_pos));
    const double t = std::exp(log_pos - log_neg);
    return t / (1.0 + t);
}

inline int hard_label(double q, double prior) {
    if (q > 0.5) return 1;
    if (q < 0.5) return -1;
    return prior >= 0.5 ? 1 : -1;
}

struct Prediction {
    std::vector<double> posteriors;
    LabelVector labels;
};

inline Prediction predict(const VoteMatrix& votes, const LabelModelParams& params, unsigned threads = 1) {
    params.validate();
    if (votes.m() != params.m())
        throw DataError("votes have " + std::to_string(votes.m()) + " sources, params have " +
                        std::to_string(params.m()));
    std::vector<double> q(votes.n());
    std::vector<std::int8_t> y(votes.n());
    parallel_for(votes.n(), threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) {
            q[i] = posterior(votes.row(i), params);
            y[i] = static_cast<std::int8_t>(hard_label(q[i], params.prior));
        }
    });
    return {std::move(q), LabelVector(std::move(y))};
}

inline LabelVector majority_vote(const VoteMatrix& votes, double prior) {
    std::vector<std::int8_t> y(votes.n());
    for (std::size_t i = 0; i < votes.n(); ++i) {
        int sum = 0;
        for (auto v : votes.row(i)) sum += v;
        y[i] = static_cast<std::int8_t>(sum > 0 ? 1 : sum < 0 ? -1 : (prior >= 0.5 ? 1 : -1));
    }
    return LabelVector(std::move(y));
}

inline nlohmann::json to_json(const TripletAssignment& t) {
    nlohmann::json out = nlohmann::json::array();
    for (std::size_t i = 0; i < t.partners.size(); ++i)
        out.push_back({{"source", i},
                       {"partners", {t.partners[i].j, t.partners[i].k}},
                       {"min_overlap", t.partners[i].min_overlap}});
    return out;
}

}  // namespace lfx
