#include "tppfit/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tppfit/errors.hpp"

namespace tppfit {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (auto& s : out) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
    return out;
}

double parse_number(const std::string& s, std::size_t line, const char* field) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (!s.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ParseError(line, std::string("malformed number in column ") + field + ": '" + s + "'");
    return v;
}

void write_value(std::ostream& os, const Json& j, int depth) {
    const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
    const std::string close(static_cast<std::size_t>(2 * depth), ' ');
    switch (j.type()) {
        case Json::value_t::object: {
            if (j.empty()) {
                os << "{}";
                return;
            }
            os << "{\n";
            std::size_t i = 0;
            for (auto it = j.begin(); it != j.end(); ++it, ++i) {
                os << pad << Json(it.key()).dump() << ": ";
                write_value(os, it.value(), depth + 1);
                os << (i + 1 < j.size() ? ",\n" : "\n");
            }
            os << close << "}";
            return;
        }
        case Json::value_t::array: {
            if (j.empty()) {
                os << "[]";
                return;
            }
            bool scalar = true;
            for (const auto& e : j) scalar = scalar && !e.is_structured();
            if (scalar) {
                os << "[";
                for (std::size_t i = 0; i < j.size(); ++i) {
                    if (i) os << ", ";
                    write_value(os, j[i], depth + 1);
                }
                os << "]";
                return;
            }
            os << "[\n";
            for (std::size_t i = 0; i < j.size(); ++i) {
                os << pad;
                write_value(os, j[i], depth + 1);
                os << (i + 1 < j.size() ? ",\n" : "\n");
            }
            os << close << "]";
            return;
        }
        case Json::value_t::number_float:
            os << format_double(j.get<double>());
            return;
        default:
            os << j.dump();
    }
}

}  // namespace

std::string format_double(double x) {
    if (!std::isfinite(x)) return std::isnan(x) ? "nan" : (x > 0 ? "inf" : "-inf");
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

DatasetFile parse_dataset_file(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    auto next_line = [&](std::string& l) {
        if (!std::getline(in, l)) return false;
        ++lineno;
        if (!l.empty() && l.back() == '\r') l.pop_back();
        return true;
    };
    if (!next_line(line)) throw ParseError(1, "missing header row");
    const auto header = split_csv(line);
    int col_n = -1, col_d = -1, col_l = -1, col_split = -1, col_ray = -1;
    for (std::size_t c = 0; c < header.size(); ++c) {
        int* slot = nullptr;
        if (header[c] == "n_params") slot = &col_n;
        else if (header[c] == "d_tokens") slot = &col_d;
        else if (header[c] == "loss") slot = &col_l;
        else if (header[c] == "split") slot = &col_split;
        else if (header[c] == "ray") slot = &col_ray;
        else throw ParseError(lineno, "unknown column '" + header[c] + "'");
        if (*slot >= 0) throw ParseError(lineno, "duplicate column '" + header[c] + "'");
        *slot = static_cast<int>(c);
    }
    if (col_n < 0 || col_d < 0 || col_l < 0) throw ParseError(lineno, "header must contain n_params,d_tokens,loss");

    std::vector<Observation> obs;
    while (next_line(line)) {
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw ParseError(lineno, "expected " + std::to_string(header.size()) + " fields, found " +
                                         std::to_string(cells.size()));
        Observation o;
        o.n = parse_number(cells[static_cast<std::size_t>(col_n)], lineno, "n_params");
        o.d = parse_number(cells[static_cast<std::size_t>(col_d)], lineno, "d_tokens");
        o.loss = parse_number(cells[static_cast<std::size_t>(col_l)], lineno, "loss");
        if (!(o.n > 0.0) || !(o.d > 0.0) || !(o.loss > 0.0))
            throw ParseError(lineno, "n_params, d_tokens and loss must be positive");
        if (col_split >= 0) {
            const auto& s = cells[static_cast<std::size_t>(col_split)];
            if (!s.empty()) {
                auto sp = parse_split(s);
                if (!sp) throw ParseError(lineno, "unknown split '" + s + "'");
                o.split = *sp;
            }
        }
        if (col_ray >= 0) {
            const auto& s = cells[static_cast<std::size_t>(col_ray)];
            if (!s.empty()) {
                const double k = parse_number(s, lineno, "ray");
                if (!(k > 0.0)) throw ParseError(lineno, "ray must be positive");
                if (std::abs(o.d / o.n - k) / k >= 1e-9) throw ParseError(lineno, "ray disagrees with d_tokens/n_params");
                o.ray = k;
            }
        }
        obs.push_back(o);
    }
    if (obs.empty()) throw ParseError(lineno + 1, "no data rows");
    return {ExperimentDataset(std::move(obs)), {col_split >= 0, col_ray >= 0}};
}

ExperimentDataset parse_dataset(std::istream& in) { return parse_dataset_file(in).data; }

ExperimentDataset parse_dataset(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open dataset file: " + path);
    return parse_dataset(f);
}

void write_dataset(std::ostream& out, const ExperimentDataset& ds, CsvColumns columns) {
    for (const auto& o : ds.observations()) {
        columns.split = columns.split || o.split != Split::Train;
        columns.ray = columns.ray || o.ray.has_value();
    }
    out << "n_params,d_tokens,loss";
    if (columns.split) out << ",split";
    if (columns.ray) out << ",ray";
    out << '\n';
    for (const auto& o : ds.observations()) {
        out << format_double(o.n) << ',' << format_double(o.d) << ',' << format_double(o.loss);
        if (columns.split) out << ',' << split_name(o.split);
        if (columns.ray) out << ',' << (o.ray ? format_double(*o.ray) : std::string());
        out << '\n';
    }
}

Json json_number(double x) {
    if (std::isnan(x)) return "unreliable";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    return x;
}

Json json_numbers(const std::vector<double>& xs) {
    Json a = Json::array();
    for (double x : xs) a.push_back(json_number(x));
    return a;
}

Json to_json(const LawParams& p) {
    Json j;
    j["law"] = std::string(law_name(p.kind));
    const auto& names = parameter_names(p.kind);
    Json values, lower, upper;
    for (std::size_t i = 0; i < p.size(); ++i) {
        values[names[i]] = json_number(p.values[i]);
        lower[names[i]] = json_number(p.lower[i]);
        upper[names[i]] = json_number(p.upper[i]);
    }
    j["values"] = values;
    j["lower"] = lower;
    j["upper"] = upper;
    if (p.kind == LawKind::RepeatedData) {
        j["unique_tokens"] = json_number(p.repetition.unique_tokens);
        j["unique_params"] = p.repetition.unique_params ? json_number(*p.repetition.unique_params) : Json();
    }
    return j;
}

Json to_json(const FitResult& f) {
    Json j;
    j["params"] = to_json(f.params);
    j["objective"] = json_number(f.objective);
    j["loss"] = f.loss.kind == LossSpec::Kind::Huber ? Json{{"kind", "huber"}, {"delta", f.loss.delta}}
                                                     : Json{{"kind", "squared_error"}};
    j["restart_index"] = f.restart_index;
    j["optimizer_seed"] = f.seed;
    j["converged"] = f.converged;
    j["iterations"] = f.iterations;
    j["observations"] = f.residuals.size();
    j["residuals"] = json_numbers(f.residuals);
    return j;
}

Json to_json(const FitConfig& c) {
    Json j;
    j["restarts"] = c.restarts;
    j["seed_protocol"] = std::string(seed_protocol_name(c.seed_protocol));
    j["seed_index"] = c.seed_index;
    j["optimizer_seed"] = protocol_seed(c.seed_protocol, c.seed_index);
    if (c.loss)
        j["loss"] = c.loss->kind == LossSpec::Kind::Huber ? Json{{"kind", "huber"}, {"delta", c.loss->delta}}
                                                          : Json{{"kind", "squared_error"}};
    else
        j["loss"] = "law_default";
    j["max_iterations"] = c.max_iterations;
    j["gradient_tolerance"] = c.gradient_tolerance;
    j["step_tolerance"] = c.step_tolerance;
    j["polish_iterations"] = c.polish_iterations;
    j["polish_scale"] = c.polish_scale;
    j["execution"] = c.execution == Execution::Serial ? "serial" : "parallel";
    j["unique_tokens"] = json_number(c.repetition.unique_tokens);
    j["unique_params"] = c.repetition.unique_params ? json_number(*c.repetition.unique_params) : Json();
    return j;
}

Json to_json(const GramDiagnostics& d) {
    Json j;
    Json gram = Json::array();
    for (std::size_t r = 0; r < d.gram.rows(); ++r) gram.push_back(json_numbers(d.gram.row(r)));
    j["gram"] = gram;
    j["eigenvalues"] = json_numbers(d.eigenvalues);
    j["kappa_full"] = json_number(d.kappa_full);
    j["kappa_full_equilibrated"] = json_number(d.kappa_full_equilibrated);
    j["kappa_scale_pair"] = json_number(d.kappa_scale_pair);
    j["lambda_min_clamped"] = d.lambda_min_clamped;
    const auto& names = parameter_names(d.kind);
    Json sloppy;
    for (std::size_t i = 0; i < d.sloppy_vector.size(); ++i) sloppy[names[i]] = json_number(d.sloppy_vector[i]);
    j["sloppy_vector"] = sloppy;
    j["epsilon"] = d.epsilon ? json_number(*d.epsilon) : Json();
    return j;
}

Json to_json(const CIReport& c) {
    Json j;
    j["sigma"] = json_number(c.sigma);
    j["reliable"] = c.reliable;
    j["kappa_equilibrated"] = json_number(c.kappa_equilibrated);
    Json hw = Json::array();
    for (double h : c.half_widths) hw.push_back(c.reliable ? json_number(h) : Json("unreliable"));
    j["half_widths_95"] = hw;
    j["pair_inflation"] = json_number(c.pair_inflation);
    j["inflation_ratio"] = c.inflation_ratio ? json_number(*c.inflation_ratio) : Json();
    return j;
}

Json to_json(const DiversityReport& r) {
    Json j;
    j["K"] = r.k_count;
    j["v_k"] = json_number(r.v_k);
    j["tau_k"] = json_number(r.tau_k);
    j["s1"] = json_number(r.s1);
    j["s2"] = json_number(r.s2);
    j["passes"] = r.passes;
    j["beta_eff"] = json_number(r.beta_eff);
    j["kappa_target"] = json_number(r.kappa_target);
    j["predicted_kappa"] = json_number(r.predicted_kappa);
    j["regime"] = r.passes ? "B" : "A";
    return j;
}

Json to_json(const DesignPlan& p) {
    Json j;
    j["budget"] = p.budget;
    j["ratios"] = json_numbers(p.ratios);
    j["sizes"] = json_numbers(p.sizes);
    j["allocation"] = p.allocation;
    Json runs = Json::array();
    for (const auto& r : p.runs)
        runs.push_back(Json{{"n_params", json_number(r.n)}, {"d_tokens", json_number(r.d)}, {"ray", json_number(r.ratio)}});
    j["runs"] = runs;
    j["spread"] = json_number(p.spread);
    j["r_min"] = Json{{"feasible", p.r_min.feasible},
                      {"value", json_number(p.r_min.value)},
                      {"radicand", json_number(p.r_min.radicand)},
                      {"note", p.r_min.note}};
    j["kappa_one"] = json_number(p.kappa_one);
    j["feasible"] = p.feasible;
    j["predicted_kappa"] = json_number(p.predicted_kappa);
    j["expected_kappa_scale_pair"] = json_number(p.expected_kappa_scale_pair);
    j["kappa_target"] = json_number(p.kappa_target);
    j["diversity"] = to_json(p.diversity);
    j["priors"] = Json{{"epsilon", json_number(p.priors.epsilon)},
                       {"beta_eff", json_number(p.priors.beta_eff)},
                       {"A", json_number(p.priors.a)},
                       {"B", json_number(p.priors.b)},
                       {"E", json_number(p.priors.e)},
                       {"uncertain", p.priors.uncertain}};
    return j;
}

Json to_json(const HoldoutMetrics& m) {
    Json j;
    j["split"] = std::string(selector_name(m.split));
    j["count"] = m.count;
    j["rmse"] = json_number(m.rmse);
    j["r2"] = m.r2 ? json_number(*m.r2) : Json("undefined");
    return j;
}

Json to_json(const WinRate& w) {
    return Json{{"wins", w.wins},
                {"total", w.total},
                {"fraction", json_number(w.fraction)},
                {"wilson_lower", json_number(w.lower)},
                {"wilson_upper", json_number(w.upper)},
                {"excludes_half", w.total > 0 && w.excludes_half()}};
}

Json to_json(const SweepResult& s) {
    Json j;
    j["overall"] = to_json(s.overall);
    Json per = Json::array();
    for (std::size_t q = 0; q < s.kappa_targets.size(); ++q)
        per.push_back(Json{{"kappa_target", json_number(s.kappa_targets[q])}, {"regime_a", to_json(s.regime_a[q])}});
    j["by_kappa_target"] = per;
    Json recs = Json::array();
    for (const auto& r : s.records) {
        Json tags = Json::array();
        for (auto g : r.regimes) tags.push_back(std::string(regime_name(g)));
        recs.push_back(Json{{"seed", r.seed},
                            {"subset", json_numbers(r.subset)},
                            {"rmse_co", json_number(r.rmse_co)},
                            {"rmse_nc", json_number(r.rmse_nc)},
                            {"nc_wins", r.nc_wins},
                            {"regimes", tags}});
    }
    j["records"] = recs;
    return j;
}

Json to_json(const MsePrediction& m) {
    return Json{{"sloppy", json_number(m.sloppy)},   {"stiff", json_number(m.stiff)},
                {"total", json_number(m.total)},     {"exact_linear", json_number(m.exact_linear)},
                {"leverage", json_number(m.leverage)}, {"epsilon", json_number(m.epsilon)}};
}

Json make_report(const std::string& command, Json config) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["command"] = command;
    j["config"] = std::move(config);
    j["fit"] = nullptr;
    j["diagnostics"] = nullptr;
    j["design"] = nullptr;
    j["evaluation"] = nullptr;
    return j;
}

std::string dump_report(const Json& j) {
    std::ostringstream os;
    write_value(os, j, 0);
    os << '\n';
    return os.str();
}

void write_isoflop_csv(std::ostream& out, const std::vector<IsoFlopCurve>& curves) {
    out << "curve,compute,n_params,predicted_loss,anchor\n";
    for (std::size_t c = 0; c < curves.size(); ++c)
        for (std::size_t i = 0; i < curves[c].points.size(); ++i)
            out << c << ',' << format_double(curves[c].compute) << ',' << format_double(curves[c].points[i].n) << ','
                << format_double(curves[c].points[i].loss) << ',' << (i == curves[c].anchor_index ? 1 : 0) << '\n';
}

}  // namespace tppfit
