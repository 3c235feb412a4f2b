// Command-line front end: run, dispersion, kernel-dump, compare.
// Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 comparison failure.

#include "asph/asph.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using namespace asph;

enum Exit { ok = 0, usage = 1, runtime = 2, comparison = 3 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string arg_hash(const std::string& text) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(text)));
    return buf;
}

/// Writes to `path`, or to stdout when empty.
template <class F>
void emit(const std::string& path, F&& body) {
    if (path.empty()) {
        body(std::cout);
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    body(f);
    if (!f) throw IoError("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------

struct RunArgs {
    std::string config;
    std::string output_dir;
    double t_end = -1.0;
    bool quiet = false;
};

int cmd_run(const RunArgs& a) {
    RunRequest req;
    try {
        req = parse_config_file(a.config);
    } catch (const IoError& e) {
        throw UsageError(e.what());
    }
    if (a.t_end >= 0.0) req.config.t_end = a.t_end;
    const auto dir = a.output_dir.empty() ? output_directory(req.output_dir) : std::filesystem::path(a.output_dir);
    const auto sc = build_scenario(req.scenario, req.params);
    FileRunWriter writer(dir, req);
    if (!a.quiet)
        std::cerr << "running " << req.scenario << " (" << sc.initial.size() << " particles, "
                  << std::llround(req.config.t_end / req.config.dt) << " steps, config " << writer.hash() << ")\n";
    if (req.config.dt > cfl_limit(req.config, sc.material))
        std::cerr << "warning: dt " << req.config.dt << " exceeds the CFL estimate " << cfl_limit(req.config, sc.material)
                  << '\n';
    RunControl ctl;
    ctl.keep_series = false;
    const auto res = run<2>(sc, req.config, &writer, ctl);
    const auto& s = res.summary;
    if (!a.quiet) {
        std::cerr << "steps " << s.steps << ", t " << s.t_final << " s, wall " << s.wall_seconds << " s\n";
        std::cerr << "min pair distance " << s.min_pair_distance << " dp";
        if (s.first_fracture_time) std::cerr << ", fracture at " << *s.first_fracture_time << " s";
        if (s.measured_period) std::cerr << ", period " << *s.measured_period << " s";
        std::cerr << "\noutput in " << dir.string() << '\n';
    }
    if (s.failed) {
        std::cerr << "run failed: " << s.failure << '\n';
        return runtime;
    }
    return ok;
}

// ---------------------------------------------------------------------------

struct DispersionArgs {
    std::vector<double> knots{1.0};
    std::vector<double> ratios{0.96};
    double h_over_dp = 1.5;
    double b = 2.0;
    int k_samples = 200;
    bool map = false;
    double a_step = 0.01;
    std::string output;
};

int cmd_dispersion(const DispersionArgs& a) {
    DispersionSetup base;
    base.dp = 1.0;
    base.h = a.h_over_dp;
    base.b = a.b;
    std::ostringstream args;
    args << "h_over_dp=" << a.h_over_dp << " b=" << a.b << " k_samples=" << a.k_samples << " map=" << a.map;
    for (double x : a.knots) args << " a=" << x;
    for (double x : a.ratios) args << " r=" << x;
    const std::string hash = arg_hash(args.str());

    if (a.map) {
        std::vector<double> grid;
        const auto n = static_cast<int>(std::floor((a.b - 2.0 * knot_guard) / a.a_step + 1e-9));
        for (int i = 0; i <= n; ++i) grid.push_back(knot_guard + i * a.a_step);
        const auto bands = stable_knot_range(a.ratios, grid, base, a.k_samples);
        emit(a.output, [&](std::ostream& os) {
            os << "# config_hash=" << hash << '\n' << "rho_ratio,a_min,a_max\n";
            for (const auto& band : bands) {
                if (band.intervals.empty()) os << format_real(band.rho_ratio) << ",nan,nan\n";
                for (const auto& iv : band.intervals)
                    os << format_real(band.rho_ratio) << ',' << format_real(iv.a_min) << ',' << format_real(iv.a_max) << '\n';
            }
        });
        return ok;
    }
    emit(a.output, [&](std::ostream& os) {
        for (double ratio : a.ratios)
            for (double knot : a.knots) {
                DispersionSetup s = base;
                s.a = knot;
                s.rho_ratio = ratio;
                s.validate();
                os << "# config_hash=" << hash << " a=" << format_real(knot) << " rho_ratio=" << format_real(ratio)
                   << " dp=1 K=1 rho_bar=1\n"
                   << "k,omega2\n";
                for (int i = 0; i <= a.k_samples; ++i) {
                    const double k = std::numbers::pi * i / a.k_samples;
                    os << format_real(k) << ',' << format_real(omega_squared(k, s)) << '\n';
                }
            }
    });
    return ok;
}

// ---------------------------------------------------------------------------

struct KernelDumpArgs {
    std::string family = "cubic-bspline";
    double a = 1.0, b = 2.0, h = 1.0;
    int dim = 1;
    int samples = 201;
    std::string output;
};

int cmd_kernel_dump(const KernelDumpArgs& a) {
    KernelSpec spec{parse_kernel_family(a.family), a.a, a.b, a.h, a.dim};
    spec.validate();
    if (a.samples < 2) throw ArgumentError("kernel-dump: need at least two samples");
    std::ostringstream args;
    args << a.family << ' ' << a.a << ' ' << a.b << ' ' << a.h << ' ' << a.dim << ' ' << a.samples;
    const double q_max = spec.support_q();
    const double alpha = normalization_constant(spec);
    emit(a.output, [&](std::ostream& os) {
        os << "# config_hash=" << arg_hash(args.str()) << " family=" << a.family << " a=" << format_real(a.a)
           << " b=" << format_real(a.b) << " h=" << format_real(a.h) << " dim=" << a.dim << '\n'
           << "q,W,dW\n";
        for (int i = 0; i < a.samples; ++i) {
            const double q = q_max * i / (a.samples - 1);
            const double w = alpha * shape::value(spec.family, spec.a, spec.b, q);
            const double dw = alpha * shape::d1(spec.family, spec.a, spec.b, q) / spec.h;
            os << format_real(q) << ',' << format_real(w) << ',' << format_real(dw) << '\n';
        }
    });
    return ok;
}

// ---------------------------------------------------------------------------

struct CompareArgs {
    std::string series;
    std::string config;
    double window = -1.0;
    double tolerance = 0.1;
    double period_tolerance = 0.05;
    std::string output_dir;
};

int cmd_compare(const CompareArgs& a) {
    RunRequest req;
    try {
        req = parse_config_file(a.config);
    } catch (const IoError& e) {
        throw UsageError(e.what());
    }
    const auto sc = build_scenario(req.scenario, req.params);
    std::ifstream in(a.series, std::ios::binary);
    if (!in) throw UsageError("cannot open time series '" + a.series + "'");
    auto [t, y] = read_probe_series(in, 0);
    const std::string hash = config_hash(req);

    bool pass = true;
    std::string text;
    if (sc.oracle) {
        const double window = a.window > 0.0 ? a.window : sc.theoretical_period.value_or(t.empty() ? 0.0 : t.back());
        const auto rep = compare_report(t, y, sc.oracle, window, sc.theoretical_period);
        text = compare_summary(rep, hash);
        pass = rep.relative_linf() <= a.tolerance;
        if (!a.output_dir.empty()) {
            std::filesystem::create_directories(a.output_dir);
            emit((std::filesystem::path(a.output_dir) / "compare.csv").string(),
                 [&](std::ostream& os) { write_compare_csv(os, t, y, sc.oracle, hash); });
        }
    } else if (sc.theoretical_period) {
        std::ostringstream os;
        os << "# config_hash=" << hash << '\n' << "reference_period " << format_real(*sc.theoretical_period) << '\n';
        try {
            const double T = measure_period(t, y);
            os << "measured_period  " << format_real(T) << '\n';
            pass = std::abs(T / *sc.theoretical_period - 1.0) <= a.period_tolerance;
        } catch (const InsufficientData& e) {
            os << "warning          " << e.what() << '\n';
            pass = false;
        }
        text = os.str();
    } else {
        throw UsageError("scenario '" + req.scenario + "' has no analytic reference");
    }
    text += std::string("result           ") + (pass ? "pass" : "fail") + '\n';
    std::cout << text;
    if (!a.output_dir.empty()) emit((std::filesystem::path(a.output_dir) / "compare_summary.txt").string(), [&](std::ostream& os) { os << text; });
    return pass ? ok : comparison;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive-kernel SPH toolkit for elastic solids"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run a scenario from a config file");
    run->add_option("config", run_args.config, "config file")->required();
    run->add_option("-o,--output-dir", run_args.output_dir, "output directory (overrides config and ASPH_OUTPUT_DIR)");
    run->add_option("--t-end", run_args.t_end, "override the end time");
    run->add_flag("-q,--quiet", run_args.quiet);

    DispersionArgs disp;
    auto* dis = app.add_subcommand("dispersion", "1D dispersion curves or the stable-knot map");
    dis->add_option("-a,--knot", disp.knots, "intermediate knot(s)")->delimiter(',');
    dis->add_option("-r,--rho-ratio", disp.ratios, "density ratio(s) rho/rho0")->delimiter(',');
    dis->add_option("--h-over-dp", disp.h_over_dp, "smoothing length in particle spacings");
    dis->add_option("-b", disp.b, "support half-width");
    dis->add_option("--k-samples", disp.k_samples, "wave-number samples over (0, pi/dp]")->check(CLI::PositiveNumber);
    dis->add_flag("--map", disp.map, "emit rho_ratio,a_min,a_max instead of curves");
    dis->add_option("--a-step", disp.a_step, "knot grid step for --map")->check(CLI::PositiveNumber);
    dis->add_option("-o,--output", disp.output, "output CSV (default stdout)");

    KernelDumpArgs kd;
    auto* dump = app.add_subcommand("kernel-dump", "sample a kernel as q,W,dW");
    dump->add_option("--family", kd.family, "standard-cubic, cubic-bspline or quadratic-bspline");
    dump->add_option("-a", kd.a, "intermediate knot");
    dump->add_option("-b", kd.b, "support half-width");
    dump->add_option("--smoothing-length", kd.h, "smoothing length");
    dump->add_option("--dim", kd.dim)->check(CLI::Range(1, 3));
    dump->add_option("-n,--samples", kd.samples);
    dump->add_option("-o,--output", kd.output, "output CSV (default stdout)");

    CompareArgs cmp;
    auto* compare = app.add_subcommand("compare", "compare a probe time series with the analytic reference");
    compare->add_option("series", cmp.series, "timeseries.csv from a run")->required();
    compare->add_option("-c,--config", cmp.config, "config the run used")->required();
    compare->add_option("--window", cmp.window, "comparison window in seconds (default one period)");
    compare->add_option("--tolerance", cmp.tolerance, "allowed L-infinity error relative to the reference peak");
    compare->add_option("--period-tolerance", cmp.period_tolerance, "allowed relative period error");
    compare->add_option("-o,--output-dir", cmp.output_dir, "write compare.csv and compare_summary.txt here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return usage;
    }

    try {
        if (*run) return cmd_run(run_args);
        if (*dis) return cmd_dispersion(disp);
        if (*dump) return cmd_kernel_dump(kd);
        if (*compare) return cmd_compare(cmp);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return usage;
    } catch (const ArgumentError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return usage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return runtime;
    }
    return usage;
}
