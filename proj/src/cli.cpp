#include "tppfit/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "tppfit/conditioning.hpp"
#include "tppfit/dataset.hpp"
#include "tppfit/errors.hpp"
#include "tppfit/evaluation.hpp"
#include "tppfit/fitter.hpp"
#include "tppfit/io.hpp"
#include "tppfit/laws.hpp"
#include "tppfit/planner.hpp"

namespace tppfit {

namespace {

class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

const std::vector<double> kDefaultSizes = {5.0e6,  10.1e6, 14.4e6, 19.4e6, 22.8e6, 28.8e6, 32.5e6,
                                           35.4e6, 40.3e6, 47.9e6, 55.5e6, 63.9e6, 68.1e6, 76.5e6};
const std::vector<double> kDefaultTokens = {10.1e6,  35.1e6,  60.2e6,  80.3e6,  100.4e6, 130.3e6,
                                            150.7e6, 180.6e6, 200.8e6, 225.0e6, 250.9e6, 275.9e6};
const std::vector<double> kDefaultRatios = {1, 1.5, 1.9, 2, 2.5, 2.7, 3, 3.3, 3.5, 4, 4.5, 5};
const std::vector<double> kDefaultPool = {1, 1.5, 2, 3, 4, 5};

Vector default_truth(LawKind kind) {
    switch (kind) {
        case LawKind::Chinchilla: return {406.4, 410.7, 1.69, 0.34, 0.28};
        case LawKind::RepeatedData: return {406.4, 410.7, 1.69, 0.34, 0.28, 15.0, 5.0};
        case LawKind::KaplanAdditive: return {8.8e13, 5.4e13, 0.076, 0.095};
        case LawKind::DroppoElibol: return {1.6, 3e7, 5e8, 0.35, 0.3, 0.8};
        case LawKind::ReducedChinchilla: return {550.0, 0.34, 1.69};
        case LawKind::Interaction: return {406.4, 410.7, 50.0, 1.69, 0.34, 0.28, 0.2, 0.16};
    }
    return {};
}

struct Options {
    std::string law = "chinchilla";
    int restarts = 100;
    std::string seed_protocol = "stride1";
    std::uint64_t seed = 0;
    std::optional<double> sigma;
    double kappa_target = 100.0;
    std::vector<double> kappa_targets;
    double beta_eff = 0.28;
    std::optional<double> epsilon;
    std::string output = "json";
    bool output_set = false;
    std::string out = "-";
    std::optional<std::size_t> max_subsets;
    std::vector<double> params;
    std::string data;
    std::string design = "grid";
    std::vector<double> sizes;
    std::vector<double> tokens;
    std::vector<double> ratios;
    std::optional<double> unique_tokens;
    std::optional<double> unique_params;
    bool serial = false;
    std::size_t samples = 33;
    std::vector<double> k_range = {5.0, 100.0};
    std::vector<double> n_range = {1e7, 1e9};
    int budget = 40;
    int rays = 3;
    std::vector<double> pool;
    std::size_t seeds = 10;
    std::string loss = "default";
    double huber_delta = 0.5;
    std::optional<double> kappa_one;
    bool uncertain = false;
    std::optional<double> holdout_ratio;
    std::optional<double> holdout_tokens;
};

LawKind law_of(const Options& o) {
    auto k = parse_law(o.law);
    if (!k) throw UsageError("unknown law '" + o.law + "'");
    return *k;
}

LawParams params_of(const Options& o, LawKind kind, double min_loss = std::numeric_limits<double>::infinity()) {
    Vector v = o.params.empty() ? default_truth(kind) : Vector(o.params.begin(), o.params.end());
    if (v.size() != parameter_count(kind))
        throw UsageError("--params needs " + std::to_string(parameter_count(kind)) + " values for " +
                         std::string(law_name(kind)));
    LawParams p = LawParams::make(kind, v, min_loss);
    p.repetition = {o.unique_tokens.value_or(std::numeric_limits<double>::infinity()), o.unique_params};
    return p;
}

FitConfig config_of(const Options& o) {
    FitConfig c;
    c.restarts = o.restarts;
    auto sp = parse_seed_protocol(o.seed_protocol);
    if (!sp) throw UsageError("unknown seed protocol '" + o.seed_protocol + "'");
    c.seed_protocol = *sp;
    c.seed_index = o.seed;
    if (o.loss == "squared") c.loss = LossSpec::squared();
    else if (o.loss == "huber") c.loss = LossSpec::huber(o.huber_delta);
    else if (o.loss != "default") throw UsageError("unknown loss '" + o.loss + "'");
    c.execution = o.serial ? Execution::Serial : Execution::Parallel;
    c.repetition = {o.unique_tokens.value_or(std::numeric_limits<double>::infinity()), o.unique_params};
    c.validate();
    return c;
}

ExperimentDataset load_data(const Options& o) {
    if (o.data.empty()) throw UsageError("--data is required");
    return parse_dataset(o.data);
}

void emit(const Options& o, const std::string& text, std::ostream& out) {
    if (o.out == "-") {
        out << text;
        return;
    }
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output file: " + o.out);
    f << text;
}

void require_json(const Options& o, const char* cmd) {
    if (o.output != "json") throw UsageError(std::string(cmd) + " only supports --output json");
}

std::string fmt_short(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

Json diagnostics_json(const FitResult& f, const ExperimentDataset& ds, std::optional<double> sigma) {
    Json d = to_json(diagnose(f.jacobian, f.params));
    const std::size_t m = f.residuals.size(), p = f.params.size();
    std::optional<double> s = sigma;
    if (!s && m > p) s = residual_sigma(f);
    if (s && *s > 0.0) {
        std::optional<FitResult> paired;
        const auto train = ds.train();
        if (f.params.kind != LawKind::ReducedChinchilla && f.params.kind != LawKind::KaplanAdditive &&
            f.params.kind != LawKind::DroppoElibol && train.is_collinear() && train.distinct_ratios().size() == 1 &&
            train.distinct_sizes().size() >= 3) {
            FitConfig pc;
            pc.restarts = 20;
            pc.execution = Execution::Serial;
            pc.loss = LossSpec::squared();
            try {
                paired = profile_reduced_fit(train, pc);
            } catch (const std::exception&) {
                paired.reset();
            }
        }
        d["confidence"] = to_json(ci_report(f, *s, paired ? &*paired : nullptr));
    } else {
        d["confidence"] = nullptr;
    }
    return d;
}

Json evaluation_json(const LawParams& params, const ExperimentDataset& ds) {
    Json e = Json::object();
    for (auto sel : {SplitSelector::Train, SplitSelector::HoldoutCollinear, SplitSelector::HoldoutNonCollinear,
                     SplitSelector::UnifiedHoldout}) {
        bool any = false;
        for (const auto& ob : ds.observations()) any = any || selects(sel, ob.split);
        if (any) e[std::string(selector_name(sel))] = to_json(holdout_metrics(params, ds, sel));
    }
    return e;
}

Json options_json(const Options& o) {
    Json j;
    j["law"] = o.law;
    if (!o.data.empty()) j["data"] = o.data;
    if (!o.params.empty()) j["params"] = json_numbers(o.params);
    j["sigma"] = o.sigma ? json_number(*o.sigma) : Json();
    j["epsilon"] = o.epsilon ? json_number(*o.epsilon) : Json();
    j["kappa_target"] = json_number(o.kappa_target);
    j["beta_eff"] = json_number(o.beta_eff);
    return j;
}

int cmd_fit(const Options& o, std::ostream& out) {
    const LawKind kind = law_of(o);
    const auto ds = load_data(o);
    const FitConfig cfg = config_of(o);
    const FitResult f = fit(ds, kind, cfg);
    if (o.output == "csv") {
        std::ostringstream s;
        s << "parameter,value\n";
        const auto& names = parameter_names(kind);
        for (std::size_t i = 0; i < f.params.size(); ++i) s << names[i] << ',' << format_double(f.params[i]) << '\n';
        emit(o, s.str(), out);
        return 0;
    }
    Json cj = options_json(o);
    cj["fit"] = to_json(cfg);
    Json r = make_report("fit", cj);
    r["fit"] = to_json(f);
    r["diagnostics"] = diagnostics_json(f, ds, o.sigma);
    r["evaluation"] = evaluation_json(f.params, ds);
    emit(o, dump_report(r), out);
    return 0;
}

int cmd_diagnose(const Options& o, std::ostream& out) {
    require_json(o, "diagnose");
    const LawKind kind = law_of(o);
    const auto ds = load_data(o);
    const auto train = ds.train();
    if (train.empty()) throw EmptyTrainError("dataset has no train rows");
    FitResult f;
    Json cj = options_json(o);
    if (o.params.empty()) {
        const FitConfig cfg = config_of(o);
        cj["fit"] = to_json(cfg);
        f = fit(ds, kind, cfg);
    } else {
        f = result_at(ds, params_of(o, kind, train.min_loss()), default_loss(kind));
    }
    Json r = make_report("diagnose", cj);
    r["fit"] = to_json(f);
    r["diagnostics"] = diagnostics_json(f, ds, o.sigma);
    emit(o, dump_report(r), out);
    return 0;
}

int cmd_check_design(const Options& o, std::ostream& out, std::ostream& err) {
    require_json(o, "check-design");
    if (o.ratios.empty()) throw UsageError("--ratios is required");
    const auto rep = diversity_check(o.ratios, o.beta_eff, o.kappa_target);
    const std::string k = std::to_string(rep.k_count);
    const std::string verdict = rep.passes ? "V_" + k + " = " + fmt_short(rep.v_k) + " >= τ_" + k + " = " +
                                                 fmt_short(rep.tau_k)
                                           : "V_" + k + " = " + fmt_short(rep.v_k) + " < τ_" + k + " = " +
                                                 fmt_short(rep.tau_k);
    Json cj = options_json(o);
    cj["ratios"] = json_numbers(o.ratios);
    Json r = make_report("check-design", cj);
    r["design"] = to_json(rep);
    r["design"]["verdict"] = verdict;
    emit(o, dump_report(r), out);
    err << verdict << (rep.passes ? "" : " (design fails the diversity condition)") << '\n';
    return rep.passes ? 0 : 3;
}

int cmd_plan(const Options& o, std::ostream& out, std::ostream& err) {
    if (o.k_range.size() != 2 || o.n_range.size() != 2) throw UsageError("--k-range and --n-range take lo,hi");
    DesignPriors pri;
    if (o.epsilon) pri.epsilon = *o.epsilon;
    pri.beta_eff = o.beta_eff;
    pri.kappa_one = o.kappa_one;
    pri.uncertain = o.uncertain;
    DesignPlan plan;
    try {
        plan = plan_design(o.budget, {o.k_range[0], o.k_range[1]}, {o.n_range[0], o.n_range[1]}, o.rays, o.kappa_target,
                           pri);
    } catch (const InfeasibleDesignError& e) {
        err << "infeasible design: " << e.what() << '\n';
        return 3;
    }
    std::ostringstream table;
    table << "ray,runs\n";
    for (std::size_t i = 0; i < plan.ratios.size(); ++i)
        table << format_double(plan.ratios[i]) << ',' << plan.allocation[i] << '\n';
    if (o.output == "csv") {
        std::ostringstream s;
        s << "n_params,d_tokens,ray\n";
        for (const auto& run : plan.runs)
            s << format_double(run.n) << ',' << format_double(run.d) << ',' << format_double(run.ratio) << '\n';
        emit(o, s.str(), out);
    } else {
        Json cj = options_json(o);
        cj["budget"] = o.budget;
        cj["rays"] = o.rays;
        cj["k_range"] = json_numbers(o.k_range);
        cj["n_range"] = json_numbers(o.n_range);
        Json r = make_report("plan", cj);
        r["design"] = to_json(plan);
        emit(o, dump_report(r), out);
    }
    if (o.out != "-") out << table.str();
    else err << table.str();
    if (!plan.r_min.note.empty()) err << plan.r_min.note << '\n';
    return plan.feasible ? 0 : 3;
}

int cmd_simulate(const Options& o, std::ostream& out) {
    const LawKind kind = law_of(o);
    const LawParams truth = params_of(o, kind);
    const NoiseModel noise{o.sigma.value_or(0.0), o.seed};
    const auto sizes = o.sizes.empty() ? kDefaultSizes : o.sizes;
    ExperimentDataset ds;
    if (o.design == "grid")
        ds = generate_grid(truth, sizes, o.tokens.empty() ? kDefaultTokens : o.tokens, noise);
    else if (o.design == "collinear")
        ds = generate_collinear(truth, sizes, o.ratios.empty() ? kDefaultRatios : o.ratios, noise);
    else
        throw UsageError("--design must be grid or collinear");
    if (o.holdout_ratio || o.holdout_tokens)
        ds = mark_holdout(ds, o.holdout_ratio.value_or(std::numeric_limits<double>::infinity()),
                          o.holdout_tokens.value_or(std::numeric_limits<double>::infinity()));
    const std::string fmt = o.output_set ? o.output : "csv";
    if (fmt == "csv") {
        std::ostringstream s;
        write_dataset(s, ds);
        emit(o, s.str(), out);
        return 0;
    }
    Json cj = options_json(o);
    cj["design"] = o.design;
    cj["seed"] = o.seed;
    Json r = make_report("simulate", cj);
    Json rows = Json::array();
    for (const auto& ob : ds.observations())
        rows.push_back(Json{{"n_params", json_number(ob.n)},
                            {"d_tokens", json_number(ob.d)},
                            {"loss", json_number(ob.loss)},
                            {"split", std::string(split_name(ob.split))},
                            {"ray", ob.ray ? json_number(*ob.ray) : Json()}});
    r["design"] = Json{{"truth", to_json(truth)}, {"observations", rows}};
    emit(o, dump_report(r), out);
    return 0;
}

struct Fitted {
    LawParams params;
    std::optional<FitResult> fit;
};

Fitted params_or_fit(const Options& o, const ExperimentDataset& ds, LawKind kind) {
    if (!o.params.empty()) {
        const double ml = ds.count(Split::Train) ? ds.train().min_loss() : ds.min_loss();
        return {params_of(o, kind, ml), std::nullopt};
    }
    FitResult f = fit(ds, kind, config_of(o));
    return {f.params, f};
}

int cmd_evaluate(const Options& o, std::ostream& out) {
    require_json(o, "evaluate");
    const LawKind kind = law_of(o);
    const auto ds = load_data(o);
    const auto fp = params_or_fit(o, ds, kind);
    Json cj = options_json(o);
    if (fp.fit) cj["fit"] = to_json(config_of(o));
    Json r = make_report("evaluate", cj);
    r["fit"] = fp.fit ? to_json(*fp.fit) : Json{{"params", to_json(fp.params)}};
    r["evaluation"] = evaluation_json(fp.params, ds);
    emit(o, dump_report(r), out);
    return 0;
}

int cmd_isoflop(const Options& o, std::ostream& out) {
    const LawKind kind = law_of(o);
    const auto ds = load_data(o);
    const auto fp = params_or_fit(o, ds, kind);
    std::vector<Observation> hold;
    for (const auto& ob : ds.observations())
        if (ob.split != Split::Train) hold.push_back(ob);
    if (hold.empty()) throw EmptySplitError("isoflop needs holdout rows");
    const ExperimentDataset holdout(hold);
    const auto curves = isoflop_curves(fp.params, holdout, o.samples);
    if (o.output == "csv") {
        std::ostringstream s;
        write_isoflop_csv(s, curves);
        emit(o, s.str(), out);
        return 0;
    }
    const double via_curves = rmse_from_curves(curves);
    const double direct = holdout_metrics(fp.params, holdout, SplitSelector::All).rmse;
    Json cj = options_json(o);
    cj["samples"] = o.samples;
    Json r = make_report("isoflop", cj);
    r["fit"] = fp.fit ? to_json(*fp.fit) : Json{{"params", to_json(fp.params)}};
    Json cs = Json::array();
    for (const auto& c : curves) {
        Json pts = Json::array();
        for (const auto& p : c.points) pts.push_back(Json::array({json_number(p.n), json_number(p.loss)}));
        cs.push_back(Json{{"compute", json_number(c.compute)},
                          {"anchor_n", json_number(c.anchor.n)},
                          {"anchor_d", json_number(c.anchor.d)},
                          {"anchor_index", c.anchor_index},
                          {"points", pts}});
    }
    r["evaluation"] = Json{{"rmse_curves", json_number(via_curves)},
                           {"rmse_direct", json_number(direct)},
                           {"identical", via_curves == direct},
                           {"curves", cs}};
    emit(o, dump_report(r), out);
    return 0;
}

int cmd_subset_sweep(const Options& o, std::ostream& out) {
    require_json(o, "subset-sweep");
    const LawKind kind = law_of(o);
    if (kind != LawKind::Chinchilla) throw UsageError("subset-sweep supports --law chinchilla");
    const LawParams truth = params_of(o, kind);
    const auto pool = o.pool.empty() ? kDefaultPool : o.pool;
    auto syn = synthetic_sweep(truth, pool, o.sizes.empty() ? log_space(1e7, 1e9, 10) : o.sizes);
    SweepDesign& design = syn.design;
    if (!o.tokens.empty()) {
        design.nc_sizes = design.sizes;
        design.nc_tokens = o.tokens;
    }
    design.beta_eff = o.beta_eff;
    design.max_subsets = o.max_subsets;
    if (o.sigma) design.sigma = *o.sigma;
    const ExperimentDataset& holdout = syn.holdout;
    std::vector<std::uint64_t> seeds;
    for (std::size_t s = 0; s < o.seeds; ++s) seeds.push_back(o.seed + s);
    const auto targets = o.kappa_targets.empty() ? std::vector<double>{o.kappa_target} : o.kappa_targets;
    const FitConfig cfg = config_of(o);
    const auto res = regime_a_sweep(truth, pool, holdout, targets, seeds, cfg, design);
    Json cj = options_json(o);
    cj["fit"] = to_json(cfg);
    cj["pool"] = json_numbers(pool);
    cj["seeds"] = o.seeds;
    cj["first_seed"] = o.seed;
    cj["sigma_resolved"] = json_number(design.sigma);
    cj["max_subsets"] = o.max_subsets ? Json(*o.max_subsets) : Json();
    Json r = make_report("subset-sweep", cj);
    r["evaluation"] = to_json(res);
    emit(o, dump_report(r), out);
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Scaling-law fitting, conditioning diagnostics and experiment planning", "tppfit"};
    app.require_subcommand(1, 1);

    auto law_opt = [&](CLI::App* s) {
        s->add_option("--law", o.law, "chinchilla|repeated-data|kaplan|droppo-elibol|reduced|interaction")
            ->capture_default_str();
    };
    auto fit_opts = [&](CLI::App* s) {
        s->add_option("--restarts", o.restarts, "Multi-start count")->capture_default_str();
        s->add_option("--seed-protocol", o.seed_protocol, "stride1|stride137|affine")->capture_default_str();
        s->add_option("--seed", o.seed, "Seed index")->capture_default_str();
        s->add_option("--loss", o.loss, "default|squared|huber")->capture_default_str();
        s->add_option("--huber-delta", o.huber_delta)->capture_default_str();
        s->add_option("--unique-tokens", o.unique_tokens, "Unique token budget (repeated-data)");
        s->add_option("--unique-params", o.unique_params, "Unique parameter budget (repeated-data)");
        s->add_flag("--serial", o.serial, "Run restarts on one thread");
    };
    auto common = [&](CLI::App* s) {
        s->add_option("--output", o.output, "json|csv")->check(CLI::IsMember({"json", "csv"}))->each([&](const std::string&) {
            o.output_set = true;
        });
        s->add_option("--out", o.out, "Output path; - for stdout")->capture_default_str();
        s->add_option("--sigma", o.sigma, "Noise scale");
        s->add_option("--kappa-target", o.kappa_target)->capture_default_str();
        s->add_option("--beta-eff", o.beta_eff)->capture_default_str();
        s->add_option("--epsilon", o.epsilon, "Exponent gap prior");
    };

    auto* fit_cmd = app.add_subcommand("fit", "Multi-start bounded fit of a dataset");
    auto* diag_cmd = app.add_subcommand("diagnose", "Gram conditioning and confidence intervals");
    auto* plan_cmd = app.add_subcommand("plan", "Budgeted multi-ray design");
    auto* check_cmd = app.add_subcommand("check-design", "Ratio diversity check");
    auto* sim_cmd = app.add_subcommand("simulate", "Synthetic dataset");
    auto* eval_cmd = app.add_subcommand("evaluate", "Split-wise RMSE and R^2");
    auto* iso_cmd = app.add_subcommand("isoflop", "isoFLOP curves through holdout anchors");
    auto* sweep_cmd = app.add_subcommand("subset-sweep", "Collinear vs grid win rate over ratio subsets");

    for (auto* s : {fit_cmd, diag_cmd, plan_cmd, check_cmd, sim_cmd, eval_cmd, iso_cmd, sweep_cmd}) common(s);
    for (auto* s : {fit_cmd, diag_cmd, sim_cmd, eval_cmd, iso_cmd, sweep_cmd}) law_opt(s);
    for (auto* s : {fit_cmd, diag_cmd, eval_cmd, iso_cmd, sweep_cmd}) fit_opts(s);
    for (auto* s : {fit_cmd, diag_cmd, eval_cmd, iso_cmd}) s->add_option("--data", o.data, "Dataset CSV");
    for (auto* s : {diag_cmd, sim_cmd, eval_cmd, iso_cmd, sweep_cmd})
        s->add_option("--params", o.params, "Parameter values in law order")->delimiter(',');

    check_cmd->add_option("--ratios", o.ratios, "Tokens-per-parameter ratios")->delimiter(',')->required();

    plan_cmd->add_option("--budget", o.budget, "Total runs")->capture_default_str();
    plan_cmd->add_option("--k-range", o.k_range, "lo,hi ratio range")->delimiter(',')->expected(2);
    plan_cmd->add_option("--n-range", o.n_range, "lo,hi model size range")->delimiter(',')->expected(2);
    plan_cmd->add_option("--rays", o.rays, "Number of rays")->capture_default_str();
    plan_cmd->add_option("--kappa-one", o.kappa_one, "Measured single-ray condition number");
    plan_cmd->add_flag("--uncertain", o.uncertain, "Apply the conservative R_min margin");

    sim_cmd->add_option("--design", o.design, "grid|collinear")->capture_default_str();
    sim_cmd->add_option("--sizes", o.sizes, "Model sizes")->delimiter(',');
    sim_cmd->add_option("--tokens", o.tokens, "Token counts (grid)")->delimiter(',');
    sim_cmd->add_option("--ratios", o.ratios, "Ratios (collinear)")->delimiter(',');
    sim_cmd->add_option("--seed", o.seed, "Noise seed")->capture_default_str();
    sim_cmd->add_option("--unique-tokens", o.unique_tokens);
    sim_cmd->add_option("--unique-params", o.unique_params);
    sim_cmd->add_option("--holdout-ratio", o.holdout_ratio, "Rays at or above become holdout_co");
    sim_cmd->add_option("--holdout-tokens", o.holdout_tokens, "Tokens at or above become holdout_nc");

    iso_cmd->add_option("--samples", o.samples, "Points per curve")->capture_default_str();

    sweep_cmd->add_option("--pool", o.pool, "Ratio pool")->delimiter(',');
    sweep_cmd->add_option("--seeds", o.seeds, "Number of noise seeds")->capture_default_str();
    sweep_cmd->add_option("--max-subsets", o.max_subsets, "Strided subset cap");
    sweep_cmd->add_option("--sizes", o.sizes, "Model sizes")->delimiter(',');
    sweep_cmd->add_option("--tokens", o.tokens, "Grid token counts")->delimiter(',');
    sweep_cmd->add_option("--kappa-targets", o.kappa_targets, "Several kappa targets")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        CLI::App* failed = &app;
        for (auto* s : app.get_subcommands()) failed = s;
        err << failed->help();
        return 1;
    }

    try {
        if (fit_cmd->parsed()) return cmd_fit(o, out);
        if (diag_cmd->parsed()) return cmd_diagnose(o, out);
        if (plan_cmd->parsed()) return cmd_plan(o, out, err);
        if (check_cmd->parsed()) return cmd_check_design(o, out, err);
        if (sim_cmd->parsed()) return cmd_simulate(o, out);
        if (eval_cmd->parsed()) return cmd_evaluate(o, out);
        if (iso_cmd->parsed()) return cmd_isoflop(o, out);
        if (sweep_cmd->parsed()) return cmd_subset_sweep(o, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const InfeasibleDesignError& e) {
        err << "infeasible design: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 1;
}

}  // namespace tppfit
