// lfx command-line tool: extend, fit, predict, tune, diagnose, synth, eval, pipeline.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfx/lfx.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Args {
    std::string embeddings, votes, dev_labels, extended_votes, params, gold, predictions;
    std::optional<double> prior;
    std::string radii, similarity_thresholds, radius_config;
    bool threshold_as_similarity = false;
    std::optional<std::string> weighting;
    std::string distance = "cosine";
    std::string metric = "auto";
    std::uint64_t seed = 0;
    double delta = 0.05;
    unsigned threads = lfx::default_threads();
    std::string out = ".";
    std::string flip_sources;
    std::size_t skip_rows = 0;

    // grids
    std::string grid;
    double grid_min = 0.01, grid_max = 1.0;
    std::size_t grid_size = 32;

    // tune
    bool no_refine = false;
    std::size_t passes = 1;
    std::string tune_sources;

    // diagnose
    std::optional<double> model_smoothness, model_risk;
    std::size_t pair_budget = 500'000;

    // synth
    std::size_t n = 10'000, k = 10;
    std::string accuracies = "0.89,0.8,0.8", supports = "0.3,0.2,0.2", pattern = "checkerboard";
    double dev_fraction = 0.1;
};

std::vector<double> parse_doubles(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
        if (item.empty() || used != item.size())
            throw lfx::UsageError(flag + ": cannot parse '" + item + "' as a number");
        out.push_back(v);
    }
    if (out.empty()) throw lfx::UsageError(flag + ": empty list");
    return out;
}

std::vector<std::size_t> parse_indices(const std::string& text, const std::string& flag) {
    std::vector<std::size_t> out;
    if (text.empty()) return out;
    for (double v : parse_doubles(text, flag)) {
        if (v < 0 || v != std::floor(v)) throw lfx::UsageError(flag + ": expected nonnegative integers");
        out.push_back(static_cast<std::size_t>(v));
    }
    return out;
}

fs::path out_dir(const Args& a) {
    fs::path p(a.out);
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw lfx::DataError("cannot create output directory " + p.string());
    return p;
}

void require(const std::string& value, const char* flag) {
    if (value.empty()) throw lfx::UsageError(std::string(flag) + " is required");
}

lfx::VoteMatrix load_votes(const Args& a) {
    require(a.votes, "--votes");
    return lfx::io::load_votes(a.votes);
}

lfx::EmbeddingSet load_embeddings(const Args& a) {
    require(a.embeddings, "--embeddings");
    return lfx::io::load_embeddings(a.embeddings);
}

std::optional<lfx::LabelVector> load_dev(const Args& a, std::size_t n) {
    if (a.dev_labels.empty()) return std::nullopt;
    auto dev = lfx::io::load_labels(a.dev_labels);
    if (dev.size() > n) throw lfx::DataError("dev labels: more rows than data points");
    return dev;
}

double resolve_prior(const Args& a, const lfx::LabelVector* dev) {
    if (a.prior) {
        if (!(*a.prior > 0.0 && *a.prior < 1.0)) throw lfx::UsageError("--prior must lie in (0, 1)");
        return *a.prior;
    }
    if (dev) {
        const double p = dev->positive_fraction();
        if (!(p > 0.0 && p < 1.0)) throw lfx::DataError("dev labels contain a single class; pass --prior");
        return p;
    }
    throw lfx::UsageError("class balance prior required (pass --prior or --dev-labels)");
}

lfx::Distance distance(const Args& a) { return lfx::parse_distance(a.distance); }

lfx::ExtensionOptions extension_options(const Args& a) { return {distance(a), a.threads}; }

// Exactly one radius source when extending; a single value applies to every source.
lfx::RadiusConfig resolve_radii(const Args& a, std::size_t m, bool required) {
    const int given = !a.radii.empty() + !a.similarity_thresholds.empty() + !a.radius_config.empty();
    if (given > 1)
        throw lfx::UsageError("pass exactly one of --radii, --similarity-thresholds, --radius-config");
    lfx::RadiusConfig cfg;
    if (given == 0) {
        if (required) throw lfx::UsageError("one of --radii, --similarity-thresholds, --radius-config is required");
        cfg = lfx::RadiusConfig::uniform(m, 0.0);
    } else if (!a.radius_config.empty()) {
        cfg = lfx::io::radius_config_from_json(lfx::io::load_json(a.radius_config));
    } else {
        const bool sims = !a.similarity_thresholds.empty() || a.threshold_as_similarity;
        auto values = parse_doubles(sims && a.radii.empty() ? a.similarity_thresholds : a.radii,
                                    a.radii.empty() ? "--similarity-thresholds" : "--radii");
        cfg.radii = sims ? lfx::radii_from_similarities(values) : values;
    }
    if (cfg.radii.size() == 1 && m > 1) cfg.radii.assign(m, cfg.radii[0]);
    if (cfg.radii.size() != m)
        throw lfx::UsageError(std::to_string(cfg.radii.size()) + " radii given for " + std::to_string(m) + " sources");
    if (a.weighting) cfg.weighting = lfx::parse_weighting(*a.weighting);
    cfg.validate();
    return cfg;
}

lfx::AccuracyOptions accuracy_options(const Args& a) {
    lfx::AccuracyOptions o;
    o.flip_sources = parse_indices(a.flip_sources, "--flip-source");
    return o;
}

std::vector<double> resolve_grid(const Args& a) {
    if (!a.grid.empty()) {
        auto g = parse_doubles(a.grid, "--grid");
        std::sort(g.begin(), g.end());
        return g;
    }
    return lfx::log_grid(a.grid_min, a.grid_max, a.grid_size);
}

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- commands ---------------------------------------------------------------

int cmd_extend(const Args& a) {
    const auto emb = load_embeddings(a);
    const auto votes = load_votes(a);
    const auto cfg = resolve_radii(a, votes.m(), true);
    const auto t0 = Clock::now();
    const auto [ext, report] = lfx::extend_votes(emb, votes, cfg, extension_options(a));
    const double secs = seconds_since(t0);
    const auto dir = out_dir(a);
    lfx::io::save_votes(dir / "extended_votes.csv", ext);
    lfx::io::save_json(dir / "extension_report.json", lfx::to_json(report));
    lfx::io::save_json(dir / "timing.json", {{"extend_seconds", secs}});
    return 0;
}

int cmd_fit(const Args& a) {
    const auto votes = load_votes(a);
    const auto dev = load_dev(a, votes.n());
    const double prior = resolve_prior(a, dev ? &*dev : nullptr);
    const auto t0 = Clock::now();
    const auto est = lfx::estimate_accuracies_detailed(votes, prior, accuracy_options(a));
    const double secs = seconds_since(t0);
    const auto dir = out_dir(a);
    lfx::io::save_json(dir / "params.json", lfx::io::to_json(est.params));
    lfx::io::save_json(dir / "triplets.json", lfx::to_json(est.triplets));
    lfx::io::save_json(dir / "timing.json", {{"fit_seconds", secs}});
    return 0;
}

int cmd_predict(const Args& a) {
    const auto votes = load_votes(a);
    require(a.params, "--params");
    const auto params = lfx::io::params_from_json(lfx::io::load_json(a.params));
    const auto pred = lfx::predict(votes, params, a.threads);
    const auto dir = out_dir(a);
    lfx::io::save_probabilities(dir / "posteriors.csv", pred.posteriors);
    lfx::io::save_labels(dir / "predictions.csv", pred.labels);
    return 0;
}

int cmd_eval(const Args& a) {
    require(a.predictions, "--predictions");
    require(a.gold, "--gold");
    const auto pred = lfx::io::load_labels(a.predictions);
    const auto gold = lfx::io::load_labels(a.gold);
    if (pred.size() != gold.size())
        throw lfx::DataError("evaluate: " + std::to_string(pred.size()) + " predictions for " +
                             std::to_string(gold.size()) + " gold labels");
    if (a.skip_rows >= gold.size()) throw lfx::UsageError("--skip-rows leaves no rows to evaluate");
    const auto p = pred.values().subspan(a.skip_rows);
    const auto g = gold.values().subspan(a.skip_rows);
    const auto m = lfx::evaluate(p, g);
    const auto kind = lfx::resolve_metric(lfx::parse_metric(a.metric),
                                          lfx::LabelVector(std::vector<std::int8_t>(g.begin(), g.end())));
    json j = lfx::to_json(m);
    j["metric"] = lfx::to_string(kind);
    j["value"] = lfx::metric_value(m, kind);
    lfx::io::save_json(out_dir(a) / "metrics.json", j);
    std::cout << j.dump() << '\n';
    return 0;
}

int cmd_pipeline(const Args& a) {
    const auto emb = load_embeddings(a);
    const auto votes = load_votes(a);
    const auto dev = load_dev(a, votes.n());
    const double prior = resolve_prior(a, dev ? &*dev : nullptr);
    const auto cfg = resolve_radii(a, votes.m(), false);

    const auto t0 = Clock::now();
    const auto [ext, report] = lfx::extend_votes(emb, votes, cfg, extension_options(a));
    const double t_extend = seconds_since(t0);
    const auto t1 = Clock::now();
    const auto params = lfx::estimate_accuracies(ext, prior, accuracy_options(a));
    const double t_fit = seconds_since(t1);
    const auto t2 = Clock::now();
    const auto pred = lfx::predict(ext, params, a.threads);
    const double t_predict = seconds_since(t2);

    const auto dir = out_dir(a);
    lfx::io::save_votes(dir / "extended_votes.csv", ext);
    lfx::io::save_json(dir / "extension_report.json", lfx::to_json(report));
    lfx::io::save_json(dir / "params.json", lfx::io::to_json(params));
    lfx::io::save_probabilities(dir / "posteriors.csv", pred.posteriors);
    lfx::io::save_labels(dir / "predictions.csv", pred.labels);

    json metrics;
    std::optional<lfx::LabelVector> gold;
    std::size_t begin = 0, end = 0;
    if (!a.gold.empty()) {
        gold = lfx::io::load_labels(a.gold);
        if (gold->size() != votes.n()) throw lfx::DataError("gold labels must cover every row");
        begin = a.skip_rows;
        end = gold->size();
    } else if (dev) {
        gold = *dev;
        end = dev->size();
    }
    if (gold && begin < end) {
        const auto g = gold->values().subspan(begin, end - begin);
        const auto m = lfx::evaluate(pred.labels.values().subspan(begin, end - begin), g);
        const auto kind = lfx::resolve_metric(lfx::parse_metric(a.metric),
                                              lfx::LabelVector(std::vector<std::int8_t>(g.begin(), g.end())));
        metrics = lfx::to_json(m);
        metrics["metric"] = lfx::to_string(kind);
        metrics["value"] = lfx::metric_value(m, kind);
        metrics["rows"] = {begin, end};
        lfx::io::save_json(dir / "metrics.json", metrics);
        std::cout << metrics.dump() << '\n';
    }
    lfx::io::save_json(dir / "timing.json", {{"extend_seconds", t_extend},
                                             {"fit_seconds", t_fit},
                                             {"predict_seconds", t_predict},
                                             {"fit_predict_seconds", t_fit + t_predict}});
    return 0;
}

int cmd_tune(const Args& a) {
    const auto emb = load_embeddings(a);
    const auto votes = load_votes(a);
    const auto dev = load_dev(a, votes.n());
    if (!dev) throw lfx::UsageError("--dev-labels is required for tuning");
    const double prior = resolve_prior(a, &*dev);
    const auto grid = resolve_grid(a);

    lfx::TuneOptions opt;
    opt.weighting = lfx::parse_weighting(a.weighting.value_or("1nn"));
    opt.distance = distance(a);
    opt.metric = lfx::parse_metric(a.metric);
    opt.threads = a.threads;
    opt.accuracy = accuracy_options(a);
    if (!a.tune_sources.empty()) {
        opt.extend_mask.assign(votes.m(), false);
        for (auto j : parse_indices(a.tune_sources, "--tune-sources")) {
            if (j >= votes.m()) throw lfx::UsageError("--tune-sources: source out of range");
            opt.extend_mask[j] = true;
        }
    }
    const auto shared = lfx::tune_shared_radius(emb, votes, *dev, prior, grid, opt);
    json report = {{"metric", lfx::to_string(shared.metric_kind)},
                   {"shared", {{"radius", shared.radius},
                               {"index", shared.index},
                               {"metric", shared.metric},
                               {"radii", shared.radii},
                               {"metrics", shared.metrics},
                               {"note", shared.note}}}};
    lfx::RadiusConfig cfg = lfx::RadiusConfig::uniform(votes.m(), shared.radius, opt.weighting);
    for (std::size_t j = 0; j < votes.m(); ++j)
        if (!opt.extend_mask.empty() && !opt.extend_mask[j]) cfg.radii[j] = 0.0;
    if (!a.no_refine && shared.radius > 0.0) {
        lfx::RefineOptions ro;
        ro.tune = opt;
        ro.passes = a.passes;
        const auto refined = lfx::refine_radii(emb, votes, *dev, prior, cfg, {}, ro);
        cfg = refined.config;
        report["refined"] = {{"radii", cfg.radii},
                             {"metric_before", refined.metric_before},
                             {"metric_after", refined.metric_after},
                             {"passes", a.passes}};
    }
    const auto dir = out_dir(a);
    lfx::io::save_json(dir / "radius_config.json", lfx::io::to_json(cfg));
    lfx::io::save_json(dir / "tune_report.json", report);
    return 0;
}

int cmd_diagnose(const Args& a) {
    const auto emb = load_embeddings(a);
    const auto votes = load_votes(a);
    const auto dev = load_dev(a, votes.n());
    const double prior = resolve_prior(a, dev ? &*dev : nullptr);
    const auto cfg = resolve_radii(a, votes.m(), false);
    const auto eopt = extension_options(a);

    lfx::VoteMatrix ext;
    if (!a.extended_votes.empty()) {
        ext = lfx::io::load_votes(a.extended_votes);
    } else {
        ext = lfx::extend_votes(emb, votes, cfg, eopt).first;
    }
    lfx::LabelModelParams params = !a.params.empty()
                                       ? lfx::io::params_from_json(lfx::io::load_json(a.params))
                                       : lfx::estimate_accuracies(votes, prior, accuracy_options(a));

    lfx::DiagnoseOptions opt;
    opt.grid = resolve_grid(a);
    opt.profile.budget = a.pair_budget;
    opt.profile.seed = a.seed;
    opt.delta = a.delta;
    opt.model_smoothness = a.model_smoothness;
    opt.model_risk = a.model_risk;
    opt.accuracy = accuracy_options(a);
    const auto rep = lfx::diagnose(emb, votes, ext, dev ? &*dev : nullptr, params, cfg, opt, eopt);
    const auto dir = out_dir(a);
    lfx::io::save_json(dir / "diagnostics.json", rep.json);
    lfx::io::detail::write_file(dir / "profile.csv", lfx::profile_csv(rep.profile));
    return 0;
}

int cmd_synth(const Args& a) {
    lfx::SyntheticConfig cfg;
    cfg.n = a.n;
    cfg.k = a.k;
    cfg.accuracies = parse_doubles(a.accuracies, "--accuracies");
    cfg.supports = parse_doubles(a.supports, "--supports");
    if (a.pattern == "checkerboard") {
        cfg.pattern = lfx::LabelPattern::Checkerboard;
    } else if (a.pattern == "random") {
        cfg.pattern = lfx::LabelPattern::Random;
    } else {
        throw lfx::UsageError("unknown pattern '" + a.pattern + "' (expected checkerboard|random)");
    }
    cfg.dev_fraction = a.dev_fraction;
    cfg.seed = a.seed;
    const auto task = lfx::generate_synthetic(cfg);
    const auto dir = out_dir(a);
    lfx::io::save_embeddings(dir / "embeddings.emb", task.embeddings);
    lfx::io::save_votes(dir / "votes.csv", task.votes);
    lfx::io::save_labels(dir / "gold.csv", task.gold);
    if (task.n_dev > 0) lfx::io::save_labels(dir / "dev_labels.csv", task.dev_labels());
    lfx::io::save_json(dir / "task.json", {{"n", cfg.n},
                                           {"k", cfg.k},
                                           {"m", cfg.accuracies.size()},
                                           {"accuracies", cfg.accuracies},
                                           {"supports", cfg.supports},
                                           {"pattern", a.pattern},
                                           {"dev_fraction", cfg.dev_fraction},
                                           {"n_dev", task.n_dev},
                                           {"seed", cfg.seed},
                                           {"distance", "euclidean"}});
    return 0;
}

// ---- config file ------------------------------------------------------------

// Turns a flat JSON object into flags placed before the user's own, so that
// explicit flags win under the take-last policy.
std::vector<std::string> config_flags(const fs::path& path) {
    const json j = lfx::io::load_json(path);
    if (!j.is_object()) throw lfx::DataError(path.string() + ": config must be a JSON object");
    std::vector<std::string> out;
    auto scalar = [](const json& v) -> std::string {
        if (v.is_string()) return v.get<std::string>();
        if (v.is_number_integer()) return std::to_string(v.get<long long>());
        if (v.is_number()) return lfx::io::format_double(v.get<double>());
        throw lfx::DataError("config: unsupported value " + v.dump());
    };
    for (const auto& [key, value] : j.items()) {
        if (key == "config") throw lfx::DataError("config: nested config files are not supported");
        const std::string flag = "--" + key;
        if (value.is_boolean()) {
            if (value.get<bool>()) out.push_back(flag);
        } else if (value.is_array()) {
            std::string joined;
            for (std::size_t i = 0; i < value.size(); ++i) joined += (i ? "," : "") + scalar(value[i]);
            out.push_back(flag);
            out.push_back(joined);
        } else if (!value.is_null()) {
            out.push_back(flag);
            out.push_back(scalar(value));
        }
    }
    return out;
}

void add_common(CLI::App* c, Args& a) {
    c->add_option("--threads", a.threads, "Worker threads (outputs do not depend on this)")->check(CLI::PositiveNumber);
    c->add_option("--out", a.out, "Output directory");
    c->add_option("--config", "JSON file of flag values; explicit flags override");
}

void add_extension_flags(CLI::App* c, Args& a) {
    c->add_option("--embeddings", a.embeddings, ".emb embedding file");
    c->add_option("--radii", a.radii, "Comma-separated radii (one per source, or one shared)");
    c->add_option("--similarity-thresholds", a.similarity_thresholds, "Cosine similarities s; radius = 1 - s");
    c->add_flag("--threshold-as-similarity", a.threshold_as_similarity, "Read --radii as similarities");
    c->add_option("--radius-config", a.radius_config, "RadiusConfig JSON");
    c->add_option("--weighting", a.weighting, "1nn|wsum");
    c->add_option("--distance", a.distance, "cosine|euclidean");
}

void add_model_flags(CLI::App* c, Args& a) {
    c->add_option("--votes", a.votes, "Votes CSV");
    c->add_option("--dev-labels", a.dev_labels, "Labels CSV for the leading rows");
    c->add_option("--prior", a.prior, "Class balance Pr(Y = 1)");
    c->add_option("--flip-source", a.flip_sources, "Comma-separated sources assumed worse than random");
}

void add_grid_flags(CLI::App* c, Args& a) {
    c->add_option("--grid", a.grid, "Comma-separated radius grid");
    c->add_option("--grid-min", a.grid_min, "Smallest log-grid radius");
    c->add_option("--grid-max", a.grid_max, "Largest log-grid radius");
    c->add_option("--grid-size", a.grid_size, "Log-grid size");
}

int run(int argc, char** argv) {
    // Locate the subcommand and any --config before parsing.
    std::vector<std::string> args(argv + 1, argv + argc);
    std::vector<std::string> injected;
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        }
        if (!path.empty()) {
            auto flags = config_flags(path);
            injected.insert(injected.end(), flags.begin(), flags.end());
        }
    }
    if (!injected.empty() && !args.empty()) args.insert(args.begin() + 1, injected.begin(), injected.end());

    Args a;
    CLI::App app{"lfx: extend labeling-function votes through embeddings and fit a label model"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    auto* extend = app.add_subcommand("extend", "Extend votes within per-source radii");
    add_common(extend, a);
    add_extension_flags(extend, a);
    extend->add_option("--votes", a.votes, "Votes CSV");

    auto* fit = app.add_subcommand("fit", "Estimate source accuracies by the triplet method");
    add_common(fit, a);
    add_model_flags(fit, a);

    auto* predict = app.add_subcommand("predict", "Posteriors and hard labels from fitted parameters");
    add_common(predict, a);
    predict->add_option("--votes", a.votes, "Votes CSV");
    predict->add_option("--params", a.params, "LabelModelParams JSON");

    auto* eval = app.add_subcommand("eval", "Accuracy, precision, recall and F1");
    add_common(eval, a);
    eval->add_option("--predictions", a.predictions, "Predicted labels CSV");
    eval->add_option("--gold", a.gold, "Gold labels CSV");
    eval->add_option("--skip-rows", a.skip_rows, "Ignore this many leading rows (e.g. the dev split)");
    eval->add_option("--metric", a.metric, "accuracy|f1|auto");

    auto* pipeline = app.add_subcommand("pipeline", "extend, fit, predict and eval in one run");
    add_common(pipeline, a);
    add_extension_flags(pipeline, a);
    add_model_flags(pipeline, a);
    pipeline->add_option("--gold", a.gold, "Gold labels CSV for every row");
    pipeline->add_option("--skip-rows", a.skip_rows, "Leading rows excluded from evaluation against --gold");
    pipeline->add_option("--metric", a.metric, "accuracy|f1|auto");
    pipeline->add_option("--seed", a.seed, "Seed (recorded; the pipeline itself draws no randomness)");

    auto* tune = app.add_subcommand("tune", "Grid-search a shared radius, then refine per source");
    add_common(tune, a);
    add_extension_flags(tune, a);
    add_model_flags(tune, a);
    add_grid_flags(tune, a);
    tune->add_option("--metric", a.metric, "accuracy|f1|auto");
    tune->add_flag("--no-refine", a.no_refine, "Skip per-source refinement");
    tune->add_option("--passes", a.passes, "Coordinate-descent passes")->check(CLI::PositiveNumber);
    tune->add_option("--tune-sources", a.tune_sources, "Comma-separated sources allowed to extend (default all)");

    auto* diag = app.add_subcommand("diagnose", "Lipschitz profiles and bound values");
    add_common(diag, a);
    add_extension_flags(diag, a);
    add_model_flags(diag, a);
    add_grid_flags(diag, a);
    diag->add_option("--extended-votes", a.extended_votes, "Extended votes CSV (default: extend with the given radii)");
    diag->add_option("--params", a.params, "LabelModelParams JSON (default: fit on --votes)");
    diag->add_option("--seed", a.seed, "Pair-sampling seed");
    diag->add_option("--delta", a.delta, "Failure probability for the estimation bound");
    diag->add_option("--pair-budget", a.pair_budget, "Sampled pairs per profile")->check(CLI::PositiveNumber);
    diag->add_option("--model-smoothness", a.model_smoothness, "M_f(r) of an embedding model");
    diag->add_option("--model-risk", a.model_risk, "R(f) of an embedding model");

    auto* synth = app.add_subcommand("synth", "Write a checkerboard synthetic task");
    add_common(synth, a);
    synth->add_option("--n", a.n, "Points")->check(CLI::PositiveNumber);
    synth->add_option("--k", a.k, "Checkerboard cells per side")->check(CLI::PositiveNumber);
    synth->add_option("--accuracies", a.accuracies, "Comma-separated source accuracies");
    synth->add_option("--supports", a.supports, "Comma-separated support fractions");
    synth->add_option("--pattern", a.pattern, "checkerboard|random");
    synth->add_option("--dev-fraction", a.dev_fraction, "Leading fraction of rows given dev labels");
    synth->add_option("--seed", a.seed, "Seed");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        throw lfx::UsageError(e.what());
    }

    if (extend->parsed()) return cmd_extend(a);
    if (fit->parsed()) return cmd_fit(a);
    if (predict->parsed()) return cmd_predict(a);
    if (eval->parsed()) return cmd_eval(a);
    if (pipeline->parsed()) return cmd_pipeline(a);
    if (tune->parsed()) return cmd_tune(a);
    if (diag->parsed()) return cmd_diagnose(a);
    if (synth->parsed()) return cmd_synth(a);
    return 1;
}

std::string one_line(std::string s) {
    for (char& c : s)
        if (c == '\n' || c == '\r') c = ' ';
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const lfx::Error& e) {
        std::cerr << "lfx: error[" << lfx::to_string(e.kind()) << "]: " << one_line(e.what()) << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "lfx: error[data]: " << one_line(e.what()) << '\n';
        return static_cast<int>(lfx::ErrorKind::Data);
    }
}
