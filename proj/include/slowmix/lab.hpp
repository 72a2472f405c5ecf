#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "advdiff.hpp"
#include "bounds.hpp"
#include "errors.hpp"
#include "flow.hpp"
#include "mixmeter.hpp"
#include "profile.hpp"
#include "spectral.hpp"
#include "transport.hpp"
#include "twopoint.hpp"

namespace slowmix {

inline constexpr const char* code_version = "0.1.0";

struct ExperimentConfig {
    std::string experiment;
    std::vector<double> kappa_list;
    double amplitude = 50.0;
    std::string profile_name = "cosine_bump";
    int grid = 256;
    std::vector<std::uint64_t> seeds;
    int substeps = 64;
    std::string out_path;
    std::map<std::string, std::string> overrides;
};

namespace lab_detail {

inline const std::set<std::string>& experiment_names() {
    static const std::set<std::string> names = {
        "tdis",      "mix",        "twopoint-drift", "twopoint-minorize",
        "bounds",    "closeness",  "prop-check",     "rescaled-tdis"};
    return names;
}

inline bool power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

inline double get_override(const ExperimentConfig& c, const std::string& key,
                           double fallback) {
    auto it = c.overrides.find(key);
    if (it == c.overrides.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (...) {
        throw ConfigInvalid("override '" + key + "' is not numeric: " +
                            it->second);
    }
}

inline std::shared_ptr<const ShearProfile> profile_by_name(
    const std::string& name) {
    if (name == "cosine_bump")
        return std::make_shared<ShearProfile>(make_cosine_bump());
    if (name == "quartic_bump")
        return std::make_shared<ShearProfile>(make_quartic_bump());
    // anything else is a path to a tabulated CSV
    return std::make_shared<ShearProfile>(load_tabulated_csv(name));
}

struct Row {
    double kappa = 0;
    std::uint64_t seed = 0;
    std::string payload; // key=value pairs joined with ';'
    double wall_time_s = 0;
    bool failed = false;
};

inline std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(12);
    ss << v;
    return ss.str();
}

struct PayloadBuilder {
    std::string s;
    PayloadBuilder& add(const std::string& k, double v) {
        if (!s.empty()) s += ';';
        s += k + '=' + fmt(v);
        return *this;
    }
    PayloadBuilder& add(const std::string& k, const std::string& v) {
        if (!s.empty()) s += ';';
        s += k + '=' + v;
        return *this;
    }
};

} // namespace lab_detail

inline void validate(const ExperimentConfig& c) {
    if (!lab_detail::experiment_names().count(c.experiment))
        throw ConfigInvalid("unknown experiment: '" + c.experiment + "'");
    if (c.kappa_list.empty()) throw ConfigInvalid("kappa_list must be non-empty");
    for (double k : c.kappa_list)
        if (!(k > 0) || k > 0.25)
            throw ConfigInvalid("kappa values must lie in (0, 1/4]");
    if (c.seeds.empty()) throw ConfigInvalid("seeds must be non-empty");
    if (!lab_detail::power_of_two(c.grid))
        throw ConfigInvalid("grid must be a power of two");
    if (c.substeps < 1) throw ConfigInvalid("substeps must be >= 1");
    if (c.out_path.empty()) throw ConfigInvalid("out_path must be set");
    if (!(c.amplitude >= 0)) throw ConfigInvalid("amplitude must be >= 0");
}

// Worker seed for a grid cell; documented and stable.
inline std::uint64_t derive_seed(std::uint64_t master, std::size_t kappa_index,
                                 std::size_t seed_index) {
    return hash3(master, kappa_index, seed_index);
}

namespace lab_detail {

// Flow realizations with amplitude 0 still need a valid kappa; the heat
// baseline runs through the same code path.
inline FlowRealization cell_realization(const ExperimentConfig& c, double kappa,
                                        std::uint64_t seed, long horizon) {
    return realize(kappa, c.amplitude, profile_by_name(c.profile_name), seed,
                   horizon);
}

// user_seed labels the row; seed (the derived worker seed) drives all
// randomness in the cell.
inline std::vector<Row> run_cell(const ExperimentConfig& c, double kappa,
                                 std::uint64_t user_seed, std::uint64_t seed) {
    using clock = std::chrono::steady_clock;
    auto t0 = clock::now();
    std::vector<Row> rows;
    auto finish = [&](PayloadBuilder& pb) {
        Row row;
        row.kappa = kappa;
        row.seed = user_seed;
        row.payload = pb.s;
        row.wall_time_s =
            std::chrono::duration<double>(clock::now() - t0).count();
        rows.push_back(row);
    };

    const double tol = get_override(c, "tol", 0.02);
    const int n_kappa = static_cast<int>(std::ceil(1.0 / kappa));
    // grid must resolve the N_kappa bump lattice
    int M = c.grid;
    while (M < 4 * n_kappa) M *= 2;

    if (c.experiment == "bounds") {
        long q = (1L << 10) * n_kappa;
        FlowRealization r = cell_realization(c, kappa, seed, 4);
        double stream = c.amplitude > 0 ? stream_sup_norm(r, 0, q) : 0.0;
        RateParams rate{get_override(c, "D", 1.0), get_override(c, "gamma", 1.0),
                        get_override(c, "p_poly", 0.0)};
        double g = get_override(c, "grad_u_sup", gradient_sup_bound(r));
        PayloadBuilder pb;
        pb.add("poincare", poincare_bound(kappa));
        if (stream > 0) {
            double c0 = stream / kappa;
            pb.add("c0", c0).add("c1", no_enhancement_constant(c0));
        }
        pb.add("corollary", corollary_bound(rate, g, kappa));
        pb.add("heuristic",
               heuristic_bound(rate, get_override(c, "C_delta", 1.0),
                               get_override(c, "delta", 0.5), 2, kappa));
        finish(pb);
    } else if (c.experiment == "tdis") {
        long horizon =
            static_cast<long>(std::ceil(1.1 * poincare_bound(kappa))) + 2;
        FlowRealization r = cell_realization(c, kappa, seed, horizon);
        TdisResult res =
            dissipation_time(r, kappa, 0.0, M, tol, c.substeps, seed);
        PayloadBuilder pb;
        pb.add("t_dis_hat", res.t_dis_hat)
            .add("op_norm_at_t", res.op_norm_at_t)
            .add("iters", static_cast<double>(res.power_iters))
            .add("s", res.s);
        if (c.amplitude > 0) {
            double stream = stream_sup_norm(r, 0, (1L << 10) * n_kappa);
            double c0 = stream / kappa;
            pb.add("c0", c0).add("c1", no_enhancement_constant(c0));
        }
        finish(pb);
    } else if (c.experiment == "mix") {
        long n_max = static_cast<long>(get_override(c, "n_max", 14));
        int k_init = static_cast<int>(get_override(c, "k_init", 2));
        FlowRealization r = cell_realization(c, kappa, seed, n_max + 2);
        TrigPolynomial init = random_trig(seed, k_init);
        auto records = mix_records(r, init, 0, n_max, M);
        for (const auto& rec : records) {
            PayloadBuilder pb;
            pb.add("s", static_cast<double>(rec.s))
                .add("n", static_cast<double>(rec.n))
                .add("hminus1", rec.hminus1)
                .add("h1_init", rec.h1_init)
                .add("ratio", rec.ratio)
                .add("aliased", rec.aliased ? 1.0 : 0.0);
            finish(pb);
        }
        long w_lo = static_cast<long>(get_override(c, "fit_n_min", 4));
        long w_hi = static_cast<long>(get_override(c, "fit_n_max", 14));
        PayloadBuilder pb;
        try {
            RateFit fit = fit_rate(records, w_lo, w_hi);
            pb.add("fit_ok", 1.0)
                .add("gamma_hat", fit.gamma_hat)
                .add("prefactor_hat", fit.prefactor_hat)
                .add("residual", fit.residual);
        } catch (const InsufficientData&) {
            pb.add("fit_ok", 0.0).add("fit_error", "insufficient_data");
        }
        finish(pb);
    } else if (c.experiment == "twopoint-drift") {
        double p = get_override(c, "p", 1.0 / 16.0);
        double s_star = get_override(c, "s_star", 0.5);
        double band = get_override(c, "band", s_star / n_kappa);
        long samples = static_cast<long>(get_override(c, "samples", 10000));
        int legs = static_cast<int>(get_override(c, "legs", 1));
        DriftEstimate est =
            drift_estimate(kappa, c.amplitude, p, band, samples, legs, seed,
                           profile_by_name(c.profile_name));
        PayloadBuilder pb;
        pb.add("p", est.p)
            .add("band", est.band)
            .add("legs", static_cast<double>(est.n_legs))
            .add("samples", static_cast<double>(est.samples))
            .add("mean_ratio", est.mean_ratio)
            .add("ci95_upper", est.ci95_upper);
        finish(pb);
    } else if (c.experiment == "twopoint-minorize") {
        long samples = static_cast<long>(get_override(c, "samples", 100000));
        int bins = static_cast<int>(get_override(c, "bins", 8));
        MinorizationReport rep =
            minorization_probe(kappa, c.amplitude, samples, bins, seed,
                               profile_by_name(c.profile_name),
                               get_override(c, "eta", 0.5));
        PayloadBuilder pb;
        pb.add("alpha_hat", rep.alpha_hat)
            .add("ci_low", rep.ci_low)
            .add("bins", static_cast<double>(rep.bins))
            .add("samples", static_cast<double>(rep.samples));
        finish(pb);
    } else if (c.experiment == "closeness") {
        long tuples = static_cast<long>(get_override(c, "tuples", 5));
        int k_init = static_cast<int>(get_override(c, "k_init", 2));
        for (long j = 0; j < tuples; ++j) {
            CounterRng rng(hash3(seed, 0xc105eULL, static_cast<std::uint64_t>(j)));
            FlowRealization r =
                cell_realization(c, kappa, rng.next_u64(), 8);
            TrigPolynomial init = random_trig(rng.next_u64(), k_init);
            double dt = 1.0 / c.substeps;
            double t = std::round(rng.uniform(0.5, 6.0) / dt) * dt;
            double slack = closeness_check(r, kappa, init, t, M, c.substeps);
            // scale of the estimate, for the relative tolerance
            SpectralField f0 = pullback_at_time(r, 0, 0, init, M);
            double scale = std::exp(3.0) * std::sqrt(kappa) *
                           sobolev_norm(f0, 1.0);
            PayloadBuilder pb;
            pb.add("t", t).add("slack", slack).add("scale", scale).add(
                "ok", slack >= -1e-8 * scale ? 1.0 : 0.0);
            finish(pb);
        }
    } else if (c.experiment == "prop-check") {
        long horizon = 16;
        FlowRealization r = cell_realization(c, kappa, seed, horizon);
        std::function<double(double)> H;
        double gamma = get_override(c, "gamma", 0.0);
        if (gamma > 0) {
            RateParams rate{get_override(c, "D", 1.0), gamma,
                            get_override(c, "p_poly", 0.0)};
            H = [rate](double T) { return rate_envelope(rate, T); };
        } else {
            // tabulated fallback: monotone envelope of measured ratios
            TrigPolynomial init = random_trig(seed, 2);
            auto records = mix_records(r, init, 0, 14, M);
            auto env = std::make_shared<std::vector<std::pair<double, double>>>();
            double running = 0;
            for (auto it = records.rbegin(); it != records.rend(); ++it) {
                running = std::max(running, it->ratio);
                env->push_back({static_cast<double>(it->n), running});
            }
            std::reverse(env->begin(), env->end());
            H = [env](double T) {
                double v = env->back().second;
                for (const auto& [n, e] : *env)
                    if (T <= n) return e;
                return v;
            };
        }
        int fields = static_cast<int>(get_override(c, "fields", 10));
        std::vector<SpectralField> data;
        for (int i = 0; i < fields; ++i)
            data.push_back(random_bandlimited(hash2(seed, i), 8, M));
        PropCheckReport rep = theorem3_quantities(
            H, gradient_sup_bound(r), kappa, data, r, M, c.substeps);
        PayloadBuilder pb;
        pb.add("tau_kappa", rep.tau_kappa)
            .add("a_kappa", rep.a_kappa)
            .add("b_kappa", rep.b_kappa)
            .add("worst_ratio", rep.worst_ratio)
            .add("threshold", rep.threshold)
            .add("ok", rep.ok ? 1.0 : 0.0);
        finish(pb);
    } else if (c.experiment == "rescaled-tdis") {
        long horizon =
            static_cast<long>(std::ceil(1.1 * poincare_bound(kappa))) + 2;
        FlowRealization r = cell_realization(c, kappa, seed, horizon);
        TdisResult base =
            dissipation_time(r, kappa, 0.0, M, tol, c.substeps, seed);
        RescaledFlow v = rescale(r);
        TdisResult scaled = dissipation_time(v, v.kappa_target(), 0.0, M, tol,
                                             c.substeps, seed);
        double expected = base.t_dis_hat / v.eps;
        PayloadBuilder pb;
        pb.add("kappa_target", v.kappa_target())
            .add("t_dis_base", base.t_dis_hat)
            .add("t_dis_rescaled", scaled.t_dis_hat)
            .add("expected", expected)
            .add("rel_err",
                 std::fabs(scaled.t_dis_hat - expected) / expected);
        double gamma_hat = get_override(c, "gamma_hat", 0.0);
        if (gamma_hat > 0) {
            RateParams rate{1.0, gamma_hat * std::sqrt(v.kappa_target()), 0.0};
            double heur = heuristic_bound(rate, 1.0,
                                          get_override(c, "delta", 0.5), 2,
                                          v.kappa_target());
            pb.add("heuristic", heur).add("gap_ratio",
                                          scaled.t_dis_hat / heur);
        }
        finish(pb);
    }
    return rows;
}

} // namespace lab_detail

struct RunResult {
    std::string path;
    long rows = 0;
    long failures = 0;
};

// Executes the experiment over the (kappa x seed) grid. Cells run in
// parallel; rows are appended by a single writer in grid order, each row
// written and flushed atomically so a killed sweep leaves a parseable file.
inline RunResult run(const ExperimentConfig& config) {
    validate(config);
    struct Cell {
        double kappa;
        std::uint64_t seed;   // user-facing seed from the config
        std::uint64_t worker; // derive_seed(seed, kappa_index, seed_index)
    };
    std::vector<Cell> cells;
    for (std::size_t ki = 0; ki < config.kappa_list.size(); ++ki)
        for (std::size_t si = 0; si < config.seeds.size(); ++si)
            cells.push_back({config.kappa_list[ki], config.seeds[si],
                             derive_seed(config.seeds[si], ki, si)});

    std::vector<std::vector<lab_detail::Row>> results(cells.size());
    unsigned threads = std::thread::hardware_concurrency();
    if (const char* env = std::getenv("SLOWMIX_THREADS"))
        threads = static_cast<unsigned>(std::max(1, std::atoi(env)));
    threads = std::max(1u, std::min<unsigned>(threads, cells.size()));

    auto worker = [&](unsigned tid) {
        for (std::size_t i = tid; i < cells.size(); i += threads) {
            try {
                results[i] = lab_detail::run_cell(config, cells[i].kappa,
                                                  cells[i].seed, cells[i].worker);
            } catch (const std::exception& ex) {
                lab_detail::Row row;
                row.kappa = cells[i].kappa;
                row.seed = cells[i].seed;
                row.payload = std::string("error=") + ex.what();
                row.failed = true;
                results[i] = {row};
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker, t);
    worker(0);
    for (auto& th : pool) th.join();

    bool fresh = !std::ifstream(config.out_path).good();
    std::ofstream out(config.out_path, std::ios::app);
    if (!out) throw ConfigInvalid("cannot open out_path: " + config.out_path);
    if (fresh)
        out << "experiment,kappa,amplitude,seed,payload,wall_time_s,"
               "code_version\n"
            << std::flush;
    RunResult rr;
    rr.path = config.out_path;
    for (const auto& cell_rows : results)
        for (const auto& row : cell_rows) {
            std::ostringstream line;
            line.precision(12);
            line << config.experiment << ',' << row.kappa << ','
                 << config.amplitude << ',' << row.seed << ',' << row.payload
                 << ',' << row.wall_time_s << ',' << code_version << '\n';
            out << line.str() << std::flush;
            ++rr.rows;
            if (row.failed) ++rr.failures;
        }

    // JSON sidecar with the full config
    std::ofstream side(config.out_path + ".json");
    side << "{\n  \"experiment\": \"" << config.experiment << "\",\n"
         << "  \"kappa_list\": [";
    for (std::size_t i = 0; i < config.kappa_list.size(); ++i)
        side << (i ? ", " : "") << config.kappa_list[i];
    side << "],\n  \"amplitude\": " << config.amplitude << ",\n"
         << "  \"profile_name\": \"" << config.profile_name << "\",\n"
         << "  \"grid\": " << config.grid << ",\n  \"seeds\": [";
    for (std::size_t i = 0; i < config.seeds.size(); ++i)
        side << (i ? ", " : "") << config.seeds[i];
    side << "],\n  \"substeps\": " << config.substeps << ",\n"
         << "  \"code_version\": \"" << code_version << "\",\n"
         << "  \"overrides\": {";
    bool first = true;
    for (const auto& [k, v] : config.overrides) {
        side << (first ? "" : ", ") << "\"" << k << "\": \"" << v << "\"";
        first = false;
    }
    side << "}\n}\n";
    return rr;
}

// ---- results parsing and summaries ----

struct ParsedRow {
    std::string experiment;
    double kappa = 0;
    double amplitude = 0;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> payload;

    double num(const std::string& key, double fallback = NAN) const {
        auto it = payload.find(key);
        if (it == payload.end()) return fallback;
        try {
            return std::stod(it->second);
        } catch (...) {
            return fallback;
        }
    }
    bool has(const std::string& key) const { return payload.count(key) > 0; }
};

inline std::vector<ParsedRow> parse_results(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open results file: " + path);
    std::vector<ParsedRow> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line.rfind("experiment,", 0) == 0) continue;
        }
        std::vector<std::string> cells;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() < 5) continue;
        ParsedRow row;
        row.experiment = cells[0];
        try {
            row.kappa = std::stod(cells[1]);
            row.amplitude = std::stod(cells[2]);
            row.seed = std::stoull(cells[3]);
        } catch (...) {
            continue;
        }
        std::istringstream ps(cells[4]);
        std::string kv;
        while (std::getline(ps, kv, ';')) {
            auto eq = kv.find('=');
            if (eq != std::string::npos)
                row.payload[kv.substr(0, eq)] = kv.substr(eq + 1);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

struct SummaryRow {
    std::string experiment;
    std::string metric;
    double value = 0;
};

struct SummaryTable {
    std::vector<SummaryRow> rows;

    double get(const std::string& experiment, const std::string& metric,
               double fallback = NAN) const {
        for (const auto& r : rows)
            if (r.experiment == experiment && r.metric == metric) return r.value;
        return fallback;
    }
};

namespace lab_detail {

inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct SlopeFit {
    double slope = 0;
    double ci95 = 0;
    double residual = 0;
};

inline SlopeFit loglog_slope(const std::vector<std::pair<double, double>>& pts) {
    double n = static_cast<double>(pts.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
        double lx = std::log(x), ly = std::log(y);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double denom = n * sxx - sx * sx;
    SlopeFit f;
    f.slope = (n * sxy - sx * sy) / denom;
    double intercept = (sy - f.slope * sx) / n;
    double rss = 0;
    for (auto [x, y] : pts) {
        double e = std::log(y) - (intercept + f.slope * std::log(x));
        rss += e * e;
    }
    f.residual = std::sqrt(rss / n);
    if (pts.size() > 2) {
        double se = std::sqrt(rss / (n - 2) / (sxx - sx * sx / n));
        f.ci95 = 1.96 * se;
    }
    return f;
}

} // namespace lab_detail

// Per-experiment scaling summaries: log-log slope of t_dis vs kappa, mixing
// rate stability across kappa, drift CI roll-up. Writes <path>.summary.csv.
inline SummaryTable sweep_summary(const std::string& path) {
    auto rows = parse_results(path);
    if (rows.empty()) throw InsufficientData("sweep_summary: no rows");
    SummaryTable table;
    auto add = [&](const std::string& exp, const std::string& metric,
                   double value) { table.rows.push_back({exp, metric, value}); };

    std::set<std::string> experiments;
    for (const auto& r : rows) experiments.insert(r.experiment);
    bool any_slope = false;

    for (const auto& exp : experiments) {
        // group values per kappa
        std::map<double, std::vector<double>> per_kappa;
        std::string key;
        if (exp == "tdis" || exp == "rescaled-tdis")
            key = exp == "tdis" ? "t_dis_hat" : "t_dis_rescaled";
        else if (exp == "mix")
            key = "gamma_hat";
        else if (exp == "twopoint-drift")
            key = "ci95_upper";
        else
            continue;
        for (const auto& r : rows) {
            if (r.experiment != exp || !r.has(key)) continue;
            double v = r.num(key);
            if (std::isfinite(v)) per_kappa[r.kappa].push_back(v);
        }
        if (per_kappa.empty()) continue;
        std::vector<std::pair<double, double>> medians;
        for (auto& [k, vs] : per_kappa)
            medians.push_back({k, lab_detail::median(vs)});
        for (auto [k, m] : medians)
            add(exp, "median@kappa=" + lab_detail::fmt(k), m);
        if (medians.size() >= 2 &&
            (exp == "tdis" || exp == "rescaled-tdis")) {
            auto fit = lab_detail::loglog_slope(medians);
            add(exp, "loglog_slope", fit.slope);
            add(exp, "slope_ci95", fit.ci95);
            add(exp, "curvature_flag", fit.residual > 0.02 ? 1.0 : 0.0);
            any_slope = true;
        }
        if (exp == "mix" && medians.size() >= 2) {
            double lo = medians[0].second, hi = medians[0].second;
            for (auto [k, m] : medians) {
                lo = std::min(lo, m);
                hi = std::max(hi, m);
            }
            add(exp, "median_gamma_max_over_min", lo > 0 ? hi / lo : INFINITY);
            any_slope = true;
        }
        if (exp == "twopoint-drift") {
            double worst = 0;
            for (auto [k, m] : medians) worst = std::max(worst, m);
            add(exp, "max_ci95_upper", worst);
        }
    }
    (void)any_slope;
    if (table.rows.empty())
        throw InsufficientData("sweep_summary: no summarizable rows");

    std::ofstream out(path + ".summary.csv");
    out << "experiment,metric,value\n";
    out.precision(12);
    for (const auto& r : table.rows)
        out << r.experiment << ',' << r.metric << ',' << r.value << '\n';
    return table;
}

// Tidy plot series: (x, y, series) per kind.
inline std::string emit_plotdata(const std::string& path,
                                 const std::string& kind) {
    if (kind != "mix-decay" && kind != "tdis-scaling" && kind != "drift-ci")
        throw UnknownKind("emit_plotdata: unknown kind '" + kind + "'");
    auto rows = parse_results(path);
    std::string out_path = path + "." + kind + ".csv";
    std::ofstream out(out_path);
    out.precision(12);
    out << "x,y,series\n";
    if (kind == "mix-decay") {
        for (const auto& r : rows) {
            if (r.experiment != "mix" || !r.has("ratio")) continue;
            double ratio = r.num("ratio");
            if (!(ratio > 0)) continue;
            out << r.num("n") << ',' << std::log(ratio) << ",kappa="
                << r.kappa << "|seed=" << r.seed << '\n';
        }
    } else if (kind == "tdis-scaling") {
        for (const auto& r : rows) {
            if (r.experiment != "tdis" || !r.has("t_dis_hat")) continue;
            out << 1.0 / r.kappa << ',' << r.num("t_dis_hat") << ",measured\n";
        }
        std::set<double> kappas;
        for (const auto& r : rows)
            if (r.experiment == "tdis") kappas.insert(r.kappa);
        for (double k : kappas) {
            out << 1.0 / k << ',' << poincare_bound(k) << ",poincare\n";
            // lower reference from the measured stream norm when present
            for (const auto& r : rows)
                if (r.experiment == "tdis" && r.kappa == k && r.has("c1")) {
                    out << 1.0 / k << ',' << r.num("c1") / k << ",c1-lower\n";
                    break;
                }
        }
    } else if (kind == "drift-ci") {
        for (const auto& r : rows) {
            if (r.experiment != "twopoint-drift" || !r.has("ci95_upper"))
                continue;
            out << r.kappa << ',' << r.num("ci95_upper") << ",ci95_upper\n";
            out << r.kappa << ',' << r.num("mean_ratio") << ",mean\n";
        }
    }
    return out_path;
}

} // namespace slowmix
