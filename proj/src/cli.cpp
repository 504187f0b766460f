#include "srdetect/cli.hpp"

#include "srdetect/calibrate.hpp"
#include "srdetect/errors.hpp"
#include "srdetect/exact_exp.hpp"
#include "srdetect/fredholm.hpp"
#include "srdetect/metrics.hpp"
#include "srdetect/model.hpp"
#include "srdetect/montecarlo.hpp"
#include "srdetect/procedures.hpp"
#include "srdetect/quadrature.hpp"
#include "srdetect/quasi_stationary.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>

#ifndef SRDETECT_VERSION
#define SRDETECT_VERSION "unknown"
#endif

namespace srdetect::cli {

namespace {

using Json = nlohmann::ordered_json;

std::string format_double(double v, int digits) {
    if (std::isnan(v)) {
        return "none";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

std::string csv(double v) { return format_double(v, 12); }

std::optional<double> parse_double(const std::string& s) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        return std::nullopt;
    }
    return v;
}

template <typename T>
std::optional<T> parse_unsigned(const std::string& s) {
    T v = 0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        return std::nullopt;
    }
    return v;
}

std::optional<std::uint64_t> parse_count_or(const std::string& s, const std::string& sentinel) {
    if (s == sentinel) {
        return std::nullopt;
    }
    return parse_unsigned<std::uint64_t>(s);
}

/// One config key: how to print it and how to read it back.
struct Field {
    std::string section;
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<bool(ExperimentConfig&, const std::string&)> set;
};

template <typename T>
Field unsigned_field(std::string section, std::string key, T ExperimentConfig::*member) {
    return {std::move(section), std::move(key),
            [member](const ExperimentConfig& c) { return std::to_string(c.*member); },
            [member](ExperimentConfig& c, const std::string& s) {
                auto v = parse_unsigned<T>(s);
                if (v) c.*member = *v;
                return v.has_value();
            }};
}

Field double_field(std::string section, std::string key, double ExperimentConfig::*member, bool optional = false) {
    return {std::move(section), std::move(key),
            [member](const ExperimentConfig& c) { return format_double(c.*member, 17); },
            [member, optional](ExperimentConfig& c, const std::string& s) {
                if (optional && s == "none") {
                    c.*member = std::numeric_limits<double>::quiet_NaN();
                    return true;
                }
                auto v = parse_double(s);
                if (v) c.*member = *v;
                return v.has_value();
            }};
}

Field string_field(std::string section, std::string key, std::string ExperimentConfig::*member) {
    return {std::move(section), std::move(key), [member](const ExperimentConfig& c) { return c.*member; },
            [member](ExperimentConfig& c, const std::string& s) {
                c.*member = s;
                return true;
            }};
}

Field bool_field(std::string section, std::string key, bool ExperimentConfig::*member) {
    return {std::move(section), std::move(key),
            [member](const ExperimentConfig& c) { return std::string(c.*member ? "true" : "false"); },
            [member](ExperimentConfig& c, const std::string& s) {
                if (s != "true" && s != "false") return false;
                c.*member = s == "true";
                return true;
            }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> all = {
        string_field("model", "name", &ExperimentConfig::model),
        double_field("model", "theta", &ExperimentConfig::theta),
        double_field("model", "mu", &ExperimentConfig::mu),
        string_field("procedure", "kind", &ExperimentConfig::procedure),
        double_field("procedure", "head_start", &ExperimentConfig::head_start),
        double_field("procedure", "threshold", &ExperimentConfig::threshold, true),
        double_field("procedure", "gamma", &ExperimentConfig::gamma),
        bool_field("procedure", "equalize", &ExperimentConfig::equalize),
        unsigned_field("numerics", "nodes", &ExperimentConfig::nodes),
        string_field("numerics", "quadrature", &ExperimentConfig::quadrature),
        double_field("numerics", "tol", &ExperimentConfig::tol),
        unsigned_field("numerics", "nu_max", &ExperimentConfig::nu_max),
        string_field("numerics", "route", &ExperimentConfig::route),
        unsigned_field("numerics", "points", &ExperimentConfig::points),
        unsigned_field("montecarlo", "runs", &ExperimentConfig::runs),
        unsigned_field("montecarlo", "seed", &ExperimentConfig::seed),
        unsigned_field("montecarlo", "cap", &ExperimentConfig::cap),
        unsigned_field("montecarlo", "threads", &ExperimentConfig::threads),
        string_field("montecarlo", "nu", &ExperimentConfig::nu),
        string_field("montecarlo", "estimate", &ExperimentConfig::estimate),
        double_field("montecarlo", "ir_weight", &ExperimentConfig::ir_weight),
        string_field("montecarlo", "iradd_nu_max", &ExperimentConfig::iradd_nu_max),
        string_field("output", "out", &ExperimentConfig::out),
        string_field("output", "plot", &ExperimentConfig::plot),
    };
    return all;
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
        s += (i ? sep : "") + items[i];
    }
    return s;
}

// ---- model and numerics ----

ChangeModel make_model(const ExperimentConfig& c) {
    return c.model == "gaussian" ? gaussian_model(c.mu) : exponential_model(c.theta);
}

GridSpec grid_spec(const ExperimentConfig& c) { return {c.nodes, parse_quadrature_scheme(c.quadrature)}; }

CalibrationOptions calibration_options(const ExperimentConfig& c) {
    CalibrationOptions o;
    o.grid = grid_spec(c);
    o.tol = c.tol;
    return o;
}

MCOptions mc_options(const ExperimentConfig& c) { return {c.runs, c.seed, c.cap, c.threads}; }

Route parse_route(const std::string& s) {
    if (s == "analytic") return Route::analytic;
    if (s == "numeric") return Route::numeric;
    return Route::automatic;
}

// ---- output ----

std::string header_block(const ExperimentConfig& c, const std::string& command) {
    std::ostringstream h;
    h << "# srdetect " << SRDETECT_VERSION << "\n# command = " << command << "\n";
    std::istringstream ini(to_ini(c));
    for (std::string line; std::getline(ini, line);) {
        if (!line.empty()) h << "# " << line << "\n";
    }
    return h.str();
}

Json header_json(const ExperimentConfig& c, const std::string& command) {
    Json j;
    j["version"] = SRDETECT_VERSION;
    j["command"] = command;
    j["config"] = to_ini(c);
    return j;
}

std::filesystem::path resolve_output(const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative()) {
        if (const char* dir = std::getenv(output_dir_env); dir && *dir) {
            return std::filesystem::path(dir) / p;
        }
    }
    return p;
}

void write_file(const std::string& path, const std::string& text) {
    const auto p = resolve_output(path);
    if (p.has_parent_path()) {
        std::filesystem::create_directories(p.parent_path());
    }
    std::ofstream f(p, std::ios::binary);
    if (!f) {
        throw ValidationError("cannot open output file '" + p.string() + "'");
    }
    f << text;
    if (!f) {
        throw NumericFailure("failed writing '" + p.string() + "'");
    }
}

void emit(const ExperimentConfig& c, const std::string& text, std::ostream& out) {
    if (c.out.empty()) {
        out << text;
    } else {
        write_file(c.out, text);
    }
}

Changepoint parse_nu(const std::string& s) {
    auto v = parse_count_or(s, "inf");
    return v ? Changepoint(*v) : std::nullopt;
}

HeadStart make_head_start(const ExperimentConfig& c, const ChangeModel& model, double threshold) {
    if (c.procedure == "srp") {
        return HeadStart::quasi_stationary(
            std::make_shared<const QuasiStationary>(solve_qsd(model, threshold, grid_spec(c))));
    }
    return HeadStart::deterministic(c.procedure == "sr" ? 0.0 : c.head_start);
}

Json estimate_json(const MCEstimate& e) {
    Json j;
    j["mean"] = e.mean;
    j["std_error"] = e.std_error;
    j["n_runs"] = e.n_runs;
    j["n_censored"] = e.n_censored;
    j["seed"] = e.seed;
    j["n_drawn"] = e.n_drawn;
    j["acceptance_rate"] = e.acceptance_rate();
    j["unreliable"] = e.unreliable();
    return j;
}

// ---- subcommands ----

struct Theorem2Reference {
    double B = 1.71828, E0Tsrp = 1.33275, A = 1.66485, rA = 0.63244, JPsrr = 1.31622;
    static constexpr double tolerance = 1e-4;
};

int cmd_theorem2(const ExperimentConfig& c, std::ostream& out, std::ostream& err) {
    const double g0 = exact::ExactRegime::gamma0();
    if (!(c.gamma > 1.0 && c.gamma < g0)) {
        throw ValidationError("gamma: must lie in (1, " + format_double(g0, 12) + "), got " + csv(c.gamma));
    }
    CompareOptions options;
    options.route = parse_route(c.route);
    options.calibration = calibration_options(c);
    const Comparison cmp = compare_at_gamma(make_model(c), c.gamma, options);

    std::ostringstream s;
    s << header_block(c, "theorem2");
    s << "# route = " << to_string(cmp.srr.provenance) << "\n";
    s << "B,E0Tsrp,A,rA,JPsrr,JPsrp,gap\n";
    s << csv(cmp.srp.procedure.threshold) << ',' << csv(cmp.srp.jp) << ',' << csv(cmp.srr.procedure.threshold) << ','
      << csv(cmp.srr.procedure.head_start) << ',' << csv(cmp.srr.jp) << ',' << csv(cmp.srp.jp) << ','
      << csv(cmp.gap()) << '\n';
    emit(c, s.str(), out);

    const bool reference_case = c.gamma == 2.0 && c.model == "exponential" && c.theta == 2.0;
    if (!reference_case) {
        return 0;
    }
    const Theorem2Reference ref;
    const std::pair<const char*, std::pair<double, double>> checks[] = {
        {"B", {cmp.srp.procedure.threshold, ref.B}},
        {"E0Tsrp", {cmp.srp.jp, ref.E0Tsrp}},
        {"A", {cmp.srr.procedure.threshold, ref.A}},
        {"rA", {cmp.srr.procedure.head_start, ref.rA}},
        {"JPsrr", {cmp.srr.jp, ref.JPsrr}},
    };
    std::vector<std::string> bad;
    for (const auto& [name, v] : checks) {
        if (std::abs(v.first - v.second) > Theorem2Reference::tolerance) {
            bad.push_back(std::string(name) + "=" + csv(v.first) + " (reference " + csv(v.second) + ")");
        }
    }
    if (!(cmp.gap() > 0.0)) {
        bad.push_back("gap=" + csv(cmp.gap()) + " is not positive");
    }
    if (!bad.empty()) {
        err << "theorem2: deviation beyond " << Theorem2Reference::tolerance << ": " << join(bad, ", ") << '\n';
        return 3;
    }
    return 0;
}

std::string figure1_svg(const std::vector<Figure1Row>& rows) {
    const double w = 640, h = 420, left = 70, right = 20, top = 30, bottom = 60;
    double x0 = 1.0, x1 = exact::ExactRegime::gamma0();
    double y0 = 1.0, y1 = 1.0;
    for (const auto& r : rows) {
        y1 = std::max({y1, r.jp_srp, r.jp_srr});
    }
    const auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * (w - left - right); };
    const auto py = [&](double y) { return h - bottom - (y - y0) / (y1 - y0) * (h - top - bottom); };
    const auto f3 = [](double v) { return format_double(std::round(v * 1000.0) / 1000.0, 10); };
    const auto polyline = [&](auto member, const char* color) {
        std::string pts;
        for (const auto& r : rows) {
            pts += f3(px(r.arl)) + "," + f3(py(r.*member)) + " ";
        }
        return std::string("<polyline fill=\"none\" stroke=\"") + color + "\" stroke-width=\"2\" points=\"" + pts +
               "\"/>\n";
    };
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = x0 + (x1 - x0) * k / 5.0;
        const double yv = y0 + (y1 - y0) * k / 5.0;
        s << "<text x=\"" << f3(px(xv)) << "\" y=\"" << h - bottom + 18 << "\" font-size=\"11\" text-anchor=\"middle\">"
          << format_double(xv, 3) << "</text>\n";
        s << "<text x=\"" << left - 6 << "\" y=\"" << f3(py(yv) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
          << format_double(yv, 3) << "</text>\n";
    }
    s << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 15
      << "\" font-size=\"13\" text-anchor=\"middle\">ARL to false alarm</text>\n";
    s << "<text x=\"18\" y=\"" << (top + h - bottom) / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (top + h - bottom) / 2 << ")\">supremum ADD</text>\n";
    s << polyline(&Figure1Row::jp_srp, "#c0392b");
    s << polyline(&Figure1Row::jp_srr, "#2471a3");
    s << "<text x=\"" << left + 15 << "\" y=\"" << top + 10 << "\" font-size=\"12\" fill=\"#c0392b\">SRP</text>\n";
    s << "<text x=\"" << left + 15 << "\" y=\"" << top + 26 << "\" font-size=\"12\" fill=\"#2471a3\">SR-r</text>\n";
    s << "</svg>\n";
    return s.str();
}

int cmd_figure1(const ExperimentConfig& c, std::ostream& out) {
    const auto rows = figure1_curves(c.points);
    std::ostringstream s;
    s << header_block(c, "figure1") << "arl,jp_srr,jp_srp\n";
    for (const auto& r : rows) {
        s << csv(r.arl) << ',' << csv(r.jp_srr) << ',' << csv(r.jp_srp) << '\n';
    }
    emit(c, s.str(), out);
    if (!c.plot.empty()) {
        write_file(c.plot, figure1_svg(rows));
    }
    return 0;
}

int cmd_oc(const ExperimentConfig& c, std::ostream& out) {
    const SrrCharacteristics srr(make_model(c), c.threshold, grid_spec(c));
    std::ostringstream s;
    s << header_block(c, "oc") << "r,phi,delta0,psi";
    for (std::size_t nu = 1; nu <= c.nu_max; ++nu) {
        s << ",cadd_" << nu;
    }
    s << '\n';
    const auto& grid = *srr.grid();
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double r = grid.node(j);
        const auto seq = srr.cadd_sequence(r, c.nu_max);
        s << csv(r) << ',' << csv(srr.phi()[j]) << ',' << csv(srr.delta0()[j]) << ',' << csv(srr.psi()[j]);
        for (std::size_t nu = 1; nu <= c.nu_max; ++nu) {
            s << ',' << csv(seq[nu]);
        }
        s << '\n';
    }
    emit(c, s.str(), out);
    return 0;
}

int cmd_qsd(const ExperimentConfig& c, std::ostream& out) {
    const QuasiStationary qsd = solve_qsd(make_model(c), c.threshold, grid_spec(c));
    std::ostringstream s;
    s << header_block(c, "qsd") << "# lambda = " << csv(qsd.lambda()) << "\n# iterations = " << qsd.iterations()
      << "\nx,q,Q\n";
    const auto& grid = *qsd.grid();
    for (std::size_t j = 0; j < grid.size(); ++j) {
        s << csv(grid.node(j)) << ',' << csv(qsd.density()[j]) << ',' << csv(qsd.cdf()[j]) << '\n';
    }
    emit(c, s.str(), out);
    return 0;
}

int cmd_calibrate(const ExperimentConfig& c, std::ostream& out) {
    const ChangeModel model = make_model(c);
    const CalibrationOptions options = calibration_options(c);
    Json j = header_json(c, "calibrate");
    j["procedure"] = c.procedure;
    j["gamma"] = c.gamma;
    if (c.procedure == "sr-r" && c.equalize) {
        const EqualizedCalibration cal = calibrate_equalized_sr_r(model, c.gamma, options);
        j["threshold"] = cal.threshold;
        j["head_start"] = cal.head_start;
        j["arl"] = cal.arl;
        j["cadd_spread"] = cal.spread;
        j["unimodal"] = cal.unimodal;
    } else {
        const ProcedureSpec spec = c.procedure == "srp"  ? ProcedureSpec::srp()
                                   : c.procedure == "sr" ? ProcedureSpec::sr_r(0.0)
                                                         : ProcedureSpec::sr_r(c.head_start);
        const Calibration cal = calibrate_threshold(model, spec, c.gamma, options);
        j["threshold"] = cal.threshold;
        j["head_start"] = spec.kind == ProcedureSpec::Kind::srp ? Json(nullptr) : Json(spec.head_start);
        j["arl"] = cal.arl;
        j["evaluations"] = cal.evaluations;
    }
    emit(c, j.dump(2) + "\n", out);
    return 0;
}

int cmd_simulate(const ExperimentConfig& c, std::ostream& out) {
    const ChangeModel model = make_model(c);
    const HeadStart hs = make_head_start(c, model, c.threshold);
    const MCOptions mc = mc_options(c);
    const Changepoint nu = parse_nu(c.nu);

    if (c.estimate == "none") {
        const auto records = simulate_runs(model, hs, c.threshold, nu, mc);
        std::ostringstream s;
        s << header_block(c, "simulate") << "run,stopping_time,censored\n";
        for (std::size_t i = 0; i < records.size(); ++i) {
            s << i << ',' << records[i].stopping_time << ',' << (records[i].censored ? 1 : 0) << '\n';
        }
        emit(c, s.str(), out);
        return 0;
    }

    Json j = header_json(c, "simulate");
    j["estimate"] = c.estimate;
    if (c.estimate == "arl") {
        j.update(estimate_json(estimate_arl(model, hs, c.threshold, mc)));
    } else if (c.estimate == "cadd") {
        j["nu"] = nu.value_or(0);
        j.update(estimate_json(estimate_cadd(model, hs, c.threshold, nu.value_or(0), mc)));
    } else {
        const auto nmax = parse_count_or(c.iradd_nu_max, "auto");
        const IntegralAddEstimate e = estimate_integral_add(model, hs, c.threshold, c.ir_weight, nmax, mc);
        j.update(estimate_json(e.estimate));
        j["nu_max"] = e.nu_max;
        j["tail_probability"] = e.tail_probability;
        j["truncation_bound"] = e.truncation_bound;
    }
    emit(c, j.dump(2) + "\n", out);
    return 0;
}

/// Flag values land in a scratch config; only flags the user actually
/// passed are copied over the file-derived config.
class FlagBinder {
public:
    template <typename T>
    void add(CLI::App& app, const std::string& name, T ExperimentConfig::*member, const std::string& help) {
        CLI::Option* opt = app.add_option(name, scratch_.*member, help);
        bindings_.push_back({&app, opt, [this, member](ExperimentConfig& c) { c.*member = scratch_.*member; }});
    }
    void add_threshold(CLI::App& app) {
        CLI::Option* opt = app.add_option("--threshold", threshold_, "detection threshold (A or B)");
        bindings_.push_back({&app, opt, [this](ExperimentConfig& c) { c.threshold = threshold_; }});
    }
    void add_flag(CLI::App& app, const std::string& name, bool ExperimentConfig::*member, const std::string& help) {
        CLI::Option* opt = app.add_flag(name, scratch_.*member, help);
        bindings_.push_back({&app, opt, [this, member](ExperimentConfig& c) { c.*member = scratch_.*member; }});
    }
    void apply(const CLI::App* sub, ExperimentConfig& c) const {
        for (const auto& b : bindings_) {
            if (b.app == sub && b.option->count() > 0) b.apply(c);
        }
    }

private:
    struct Binding {
        const CLI::App* app;
        CLI::Option* option;
        std::function<void(ExperimentConfig&)> apply;
    };
    ExperimentConfig scratch_;
    double threshold_ = 0.0;
    std::vector<Binding> bindings_;
};

void add_common(FlagBinder& b, CLI::App& app) {
    b.add(app, "--model", &ExperimentConfig::model, "exponential | gaussian");
    b.add(app, "--theta", &ExperimentConfig::theta, "post-change scale of the exponential model");
    b.add(app, "--mu", &ExperimentConfig::mu, "post-change mean of the Gaussian model");
    b.add(app, "--out", &ExperimentConfig::out, "output file (stdout if empty)");
}

void add_numerics(FlagBinder& b, CLI::App& app) {
    b.add(app, "--nodes", &ExperimentConfig::nodes, "quadrature nodes");
    b.add(app, "--quadrature", &ExperimentConfig::quadrature, "gauss-legendre | trapezoid");
    b.add(app, "--tol", &ExperimentConfig::tol, "root-finding tolerance");
}

void add_mc(FlagBinder& b, CLI::App& app) {
    b.add(app, "--procedure", &ExperimentConfig::procedure, "sr | sr-r | srp");
    b.add(app, "--head-start", &ExperimentConfig::head_start, "deterministic head start r");
    b.add_threshold(app);
    b.add(app, "--nu", &ExperimentConfig::nu, "changepoint: integer or inf");
    b.add(app, "--runs", &ExperimentConfig::runs, "replications");
    b.add(app, "--seed", &ExperimentConfig::seed, "RNG seed");
    b.add(app, "--cap", &ExperimentConfig::cap, "censoring cap on the run length");
    b.add(app, "--threads", &ExperimentConfig::threads, "worker threads (0 = all cores)");
    b.add(app, "--estimate", &ExperimentConfig::estimate, "none | arl | cadd | iradd");
    b.add(app, "--ir-weight", &ExperimentConfig::ir_weight, "weight r of the integral delay");
    b.add(app, "--iradd-nu-max", &ExperimentConfig::iradd_nu_max, "last changepoint in the integral delay, or auto");
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw ValidationError("config: cannot read '" + path + "'");
    }
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

} // namespace

bool ExperimentConfig::operator==(const ExperimentConfig& other) const { return to_ini(*this) == to_ini(other); }

std::string to_ini(const ExperimentConfig& config) {
    std::string out;
    std::string section;
    for (const auto& f : fields()) {
        if (f.section != section) {
            out += (section.empty() ? "[" : "\n[") + f.section + "]\n";
            section = f.section;
        }
        out += f.key + " = " + f.get(config) + "\n";
    }
    return out;
}

ExperimentConfig from_ini(const std::string& text, const ExperimentConfig& base) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    ExperimentConfig c = base;
    std::vector<std::string> problems;
    for (const auto& [section, body] : tree) {
        if (body.empty() && !body.data().empty()) {
            problems.push_back(section + ": key outside any section");
            continue;
        }
        for (const auto& [key, value] : body) {
            const auto it = std::find_if(fields().begin(), fields().end(),
                                         [&](const Field& f) { return f.section == section && f.key == key; });
            if (it == fields().end()) {
                problems.push_back(section + "." + key + ": unknown key");
            } else if (!it->set(c, value.data())) {
                problems.push_back(section + "." + key + ": cannot parse '" + value.data() + "'");
            }
        }
    }
    if (!problems.empty()) {
        throw ValidationError("config: " + join(problems, "; "));
    }
    return c;
}

std::vector<std::string> validate(const ExperimentConfig& c, const std::string& command) {
    std::vector<std::string> p;
    const auto finite = [](double v) { return std::isfinite(v); };
    if (c.model != "exponential" && c.model != "gaussian") {
        p.push_back("model.name: expected exponential or gaussian, got '" + c.model + "'");
    } else if (c.model == "exponential" && !(finite(c.theta) && c.theta > 1.0)) {
        p.push_back("model.theta: must exceed 1, got " + csv(c.theta));
    } else if (c.model == "gaussian" && !(finite(c.mu) && c.mu != 0.0)) {
        p.push_back("model.mu: must be finite and nonzero, got " + csv(c.mu));
    }
    if (c.procedure != "sr" && c.procedure != "sr-r" && c.procedure != "srp") {
        p.push_back("procedure.kind: expected sr, sr-r or srp, got '" + c.procedure + "'");
    }
    if (!(finite(c.head_start) && c.head_start >= 0.0)) {
        p.push_back("procedure.head_start: must be finite and nonnegative, got " + csv(c.head_start));
    }
    if (!std::isnan(c.threshold) && !(finite(c.threshold) && c.threshold > 0.0)) {
        p.push_back("procedure.threshold: must be positive, got " + csv(c.threshold));
    }
    if (!(finite(c.gamma) && c.gamma > 1.0)) {
        p.push_back("procedure.gamma: must exceed 1, got " + csv(c.gamma));
    }
    if (c.nodes < 8) {
        p.push_back("numerics.nodes: need at least 8, got " + std::to_string(c.nodes));
    }
    if (c.quadrature != "gauss-legendre" && c.quadrature != "trapezoid") {
        p.push_back("numerics.quadrature: expected gauss-legendre or trapezoid, got '" + c.quadrature + "'");
    }
    if (!(finite(c.tol) && c.tol > 0.0)) {
        p.push_back("numerics.tol: must be positive, got " + csv(c.tol));
    }
    if (c.route != "auto" && c.route != "analytic" && c.route != "numeric") {
        p.push_back("numerics.route: expected auto, analytic or numeric, got '" + c.route + "'");
    }
    if (c.runs < 1) {
        p.push_back("montecarlo.runs: need at least 1");
    }
    if (c.cap < 1) {
        p.push_back("montecarlo.cap: need at least 1");
    }
    if (c.nu != "inf" && !parse_unsigned<std::uint64_t>(c.nu)) {
        p.push_back("montecarlo.nu: expected inf or a nonnegative integer, got '" + c.nu + "'");
    }
    if (c.estimate != "none" && c.estimate != "arl" && c.estimate != "cadd" && c.estimate != "iradd") {
        p.push_back("montecarlo.estimate: expected none, arl, cadd or iradd, got '" + c.estimate + "'");
    }
    if (!(finite(c.ir_weight) && c.ir_weight >= 0.0)) {
        p.push_back("montecarlo.ir_weight: must be finite and nonnegative, got " + csv(c.ir_weight));
    }
    if (c.iradd_nu_max != "auto" && !parse_unsigned<std::uint64_t>(c.iradd_nu_max)) {
        p.push_back("montecarlo.iradd_nu_max: expected auto or a nonnegative integer, got '" + c.iradd_nu_max + "'");
    }

    const bool needs_threshold = command == "oc" || command == "qsd" || command == "simulate";
    if (needs_threshold && std::isnan(c.threshold)) {
        p.push_back("procedure.threshold: required by " + command);
    }
    if (command == "figure1" && c.points < 2) {
        p.push_back("numerics.points: need at least 2, got " + std::to_string(c.points));
    }
    if (command == "oc" && c.nu_max < 1) {
        p.push_back("numerics.nu_max: need at least 1 for oc");
    }
    if (command == "simulate" && c.procedure != "srp" && !std::isnan(c.threshold) && c.head_start >= c.threshold &&
        c.procedure == "sr-r") {
        p.push_back("procedure.head_start: must be below the threshold");
    }
    if (command == "simulate" && c.estimate == "cadd" && c.nu == "inf") {
        p.push_back("montecarlo.nu: cadd estimate needs a finite changepoint");
    }
    if (command == "calibrate" && c.equalize && c.procedure != "sr-r") {
        p.push_back("procedure.equalize: only applies to sr-r");
    }
    return p;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Shiryaev-Roberts change detection: operating characteristics, calibration, simulation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(SRDETECT_VERSION));
    std::string config_path;
    bool print_config = false;
    app.add_option("--config", config_path, "INI file with [model], [procedure], [numerics], [montecarlo], [output]");
    app.add_flag("--print-config", print_config, "print the effective config instead of running");

    FlagBinder binder;
    auto* theorem2 = app.add_subcommand("theorem2", "closed-form minimax comparison of SRP and SR-r at one ARL");
    add_common(binder, *theorem2);
    add_numerics(binder, *theorem2);
    binder.add(*theorem2, "--gamma", &ExperimentConfig::gamma, "ARL to false alarm");
    binder.add(*theorem2, "--route", &ExperimentConfig::route, "auto | analytic | numeric");

    auto* figure1 = app.add_subcommand("figure1", "supremum delay versus ARL for SRP and SR-r");
    binder.add(*figure1, "--points", &ExperimentConfig::points, "number of ARL values");
    binder.add(*figure1, "--out", &ExperimentConfig::out, "output CSV (stdout if empty)");
    binder.add(*figure1, "--plot", &ExperimentConfig::plot, "optional SVG rendering");

    auto* oc = app.add_subcommand("oc", "SR-r operating characteristics on the quadrature grid");
    add_common(binder, *oc);
    add_numerics(binder, *oc);
    binder.add_threshold(*oc);
    binder.add(*oc, "--nu-max", &ExperimentConfig::nu_max, "last changepoint in the CADD columns");

    auto* qsd = app.add_subcommand("qsd", "quasi-stationary density and CDF");
    add_common(binder, *qsd);
    add_numerics(binder, *qsd);
    binder.add_threshold(*qsd);

    auto* calibrate = app.add_subcommand("calibrate", "threshold (and head start) for a target ARL");
    add_common(binder, *calibrate);
    add_numerics(binder, *calibrate);
    binder.add(*calibrate, "--procedure", &ExperimentConfig::procedure, "sr | sr-r | srp");
    binder.add(*calibrate, "--head-start", &ExperimentConfig::head_start, "head start for sr-r");
    binder.add(*calibrate, "--gamma", &ExperimentConfig::gamma, "target ARL to false alarm");
    binder.add_flag(*calibrate, "--equalize", &ExperimentConfig::equalize, "solve for the equalizing head start");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo runs or estimates");
    add_common(binder, *simulate);
    add_numerics(binder, *simulate);
    add_mc(binder, *simulate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err) == 0 ? 0 : 1;
    }

    try {
        const CLI::App* sub = app.get_subcommands().front();
        const std::string command = sub->get_name();
        ExperimentConfig config;
        if (!config_path.empty()) {
            config = from_ini(read_text_file(config_path));
        }
        binder.apply(sub, config);
        if (const auto problems = validate(config, command); !problems.empty()) {
            throw ValidationError(join(problems, "; "));
        }
        if (print_config) {
            out << to_ini(config);
            return 0;
        }
        if (command == "theorem2") return cmd_theorem2(config, out, err);
        if (command == "figure1") return cmd_figure1(config, out);
        if (command == "oc") return cmd_oc(config, out);
        if (command == "qsd") return cmd_qsd(config, out);
        if (command == "calibrate") return cmd_calibrate(config, out);
        return cmd_simulate(config, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const NumericFailure& e) {
        err << "numeric failure: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "numeric failure: " << e.what() << '\n';
        return 2;
    }
}

} // namespace srdetect::cli
