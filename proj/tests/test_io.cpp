#include "asph/io.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <random>

using namespace asph;

namespace {

int error_line(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return -1;
}

std::string error_text(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("asph_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(Config, MinimalBarUsesTableDefaults) {
    const auto r = parse_config("scenario = bar\n");
    EXPECT_EQ(r.scenario, "bar");
    EXPECT_DOUBLE_EQ(r.config.dp, 5e-4);
    EXPECT_DOUBLE_EQ(r.config.dt, 2e-6);
    EXPECT_DOUBLE_EQ(r.config.viscosity.gamma1, 1.0);
    EXPECT_DOUBLE_EQ(r.config.viscosity.gamma2, 1.0);
    EXPECT_EQ(r.config.family, KernelFamily::CubicBSpline);
    EXPECT_TRUE(r.config.adaptive);
}

TEST(Config, SectionsOverridesAndComments) {
    const auto r = parse_config(R"(# bar at desk scale
[run]
scenario = "bar"
output_every = 50   ; every 50 steps
[time]
dt = 1e-6
t_end = 1e-3
[kernel]
kernel = standard-cubic
[scenario]
dp = 1e-3
speed = 2
[solver]
renormalize = false
)");
    EXPECT_DOUBLE_EQ(r.config.dt, 1e-6);
    EXPECT_DOUBLE_EQ(r.config.t_end, 1e-3);
    EXPECT_EQ(r.config.family, KernelFamily::StandardCubic);
    EXPECT_FALSE(r.config.adaptive);
    EXPECT_DOUBLE_EQ(r.config.dp, 1e-3);
    EXPECT_DOUBLE_EQ(r.params.bar.speed, 2.0);
    EXPECT_FALSE(r.config.renormalize);
    EXPECT_EQ(r.config.output_every, 50);
}

TEST(Config, KernelSwitch) {
    EXPECT_TRUE(parse_config("scenario = bar\nkernel = adaptive-cubic\n").config.adaptive);
    const auto s = parse_config("scenario = bar\nkernel = standard-cubic\n");
    EXPECT_EQ(s.config.family, KernelFamily::StandardCubic);
    const auto q = parse_config("scenario = bar\nkernel = quadratic-bspline\nfixed_a = 0.8\n");
    EXPECT_EQ(q.config.family, KernelFamily::QuadraticBSpline);
    EXPECT_FALSE(q.config.adaptive);
    EXPECT_DOUBLE_EQ(q.config.fixed_a, 0.8);
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line("scenario = bar\n\ndt = \"abc\"\n"), 3);
    EXPECT_NE(error_text("scenario = bar\ndt = abc\n").find("dt"), std::string::npos);
    EXPECT_EQ(error_line("scenario = bar\nfoo = 1\n"), 2);
    EXPECT_EQ(error_line("scenario = bar\n[time]\ndp = 1e-3\n"), 3);
    EXPECT_EQ(error_line("scenario = bar\ndt = 1\ndt = 2\n"), 3);
    EXPECT_EQ(error_line("scenario = bar\nthickness = 0.1\n"), 2);
    EXPECT_EQ(error_line("scenario = bar\nkernel = gaussian\n"), 2);
    EXPECT_EQ(error_line("scenario = bar\nrenormalize = maybe\n"), 2);
    EXPECT_EQ(error_line("scenario = bar\noutput_every = 1.5\n"), 2);
    EXPECT_EQ(error_line("scenario = bar\njunk\n"), 2);
    EXPECT_EQ(error_line("[run\n"), 1);
    EXPECT_EQ(error_line("scenario = sphere\n"), 1);
    EXPECT_NE(error_text("dt = 1e-6\n").find("scenario"), std::string::npos);
    EXPECT_NE(error_text("scenario = bar\ndt = -1\n"), "");
}

TEST(Config, EffectiveConfigAndHash) {
    const auto a = parse_config("scenario = plate\n");
    const auto b = parse_config("scenario = plate\ndt = 5e-8\n");
    const auto c = parse_config("scenario = plate\ndt = 4e-8\n");
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_NE(config_hash(a), config_hash(c));
    EXPECT_EQ(config_hash(a).size(), 16u);
    // The effective listing parses back to the same configuration.
    const auto text = effective_config(c);
    EXPECT_EQ(effective_config(parse_config(text)), text);
}

TEST(Snapshot, RoundTripIsBitExact) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ParticleSet<2> s;
    for (int i = 0; i < 200; ++i) {
        Particle<2> p;
        p.x = Vec<2>{{u(rng) * 1e-3, std::ldexp(u(rng), -40)}};
        p.v = Vec<2>{{u(rng) * 1e3, u(rng)}};
        p.rho = 1000.0 * (1.0 + 0.1 * u(rng));
        p.S[0][0] = 1e8 * u(rng);
        p.S[1][1] = 1e8 * u(rng);
        p.S[0][1] = 1e8 * u(rng);
        p.e = std::nextafter(1.0, 2.0);
        p.a_knot = 1.0 / 3.0;
        p.kind = i % 7 == 0 ? ParticleKind::FixedBoundary : ParticleKind::Interior;
        s.particles.push_back(p);
    }
    const auto mat = MaterialModel::elastic(1000.0, 1e9, 0.3);
    std::stringstream ss;
    write_snapshot<2>(ss, s, mat, 1.25e-4, "abc");
    const auto rows = read_snapshot(ss);
    ASSERT_EQ(rows.size(), s.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& p = s.particles[i];
        const auto& r = rows[i];
        EXPECT_EQ(r.id, i);
        EXPECT_EQ(r.kind, p.kind);
        const double want[] = {p.x[0], p.x[1], p.v[0], p.v[1], p.rho, pressure(p.rho, mat), p.S[0][0], p.S[1][1], p.S[0][1], p.e, p.a_knot};
        const double got[] = {r.x, r.y, r.vx, r.vy, r.rho, r.p, r.sxx, r.syy, r.sxy, r.e, r.a_knot};
        EXPECT_EQ(std::memcmp(want, got, sizeof want), 0) << i;
    }
}

TEST(Snapshot, FormatDetails) {
    std::stringstream ss;
    write_snapshot<2>(ss, ParticleSet<2>{}, MaterialModel{}, 0.0, "0123456789abcdef");
    const std::string text = ss.str();
    EXPECT_EQ(text, "# t=0 step=0 config_hash=0123456789abcdef\n" + std::string(snapshot_header) + "\n");
    EXPECT_TRUE(read_snapshot(ss).empty());

    ParticleSet<1> line;
    line.particles.resize(1);
    line.particles[0].x[0] = 0.5;
    std::stringstream s1;
    write_snapshot<1>(s1, line, MaterialModel{}, 0.0, "h");
    const auto rows = read_snapshot(s1);
    EXPECT_EQ(rows[0].y, 0.0);
    EXPECT_EQ(rows[0].vy, 0.0);
    EXPECT_EQ(s1.str().find('\r'), std::string::npos);

    std::stringstream bad("id,kind\n");
    EXPECT_THROW(read_snapshot(bad), IoError);
}

TEST(Compare, EqualSeriesGivesZeroAndOffsetGivesDelta) {
    auto oracle = [](double t) { return std::sin(1000.0 * t); };
    std::vector<double> t, y, y2;
    for (int i = 0; i <= 1000; ++i) {
        t.push_back(i * 1e-5);
        y.push_back(oracle(t.back()));
        y2.push_back(oracle(t.back()) + 0.125);
    }
    const auto r0 = compare_report(t, y, oracle, 1e-2);
    EXPECT_EQ(r0.linf, 0.0);
    EXPECT_EQ(r0.rms, 0.0);
    EXPECT_TRUE(r0.warning.empty());
    const auto r1 = compare_report(t, y2, oracle, 1e-2);
    EXPECT_NEAR(r1.linf, 0.125, 1e-15);
    EXPECT_NEAR(r1.rms, 0.125, 1e-15);
    const auto r2 = compare_report(t, y, oracle, 2e-2, 2.0 * std::numbers::pi / 1000.0);
    EXPECT_FALSE(r2.warning.empty());
    ASSERT_TRUE(r2.measured_period.has_value());
    EXPECT_NEAR(*r2.measured_period, 2.0 * std::numbers::pi / 1000.0, 1e-6);
    EXPECT_NE(compare_summary(r1, "h").find("linf"), std::string::npos);
}

TEST(Compare, ProbeSeriesRoundTrip) {
    std::stringstream ss;
    TimeSample s;
    s.step = 3;
    s.t = 1.5e-6;
    s.probes = {0.25, -1.0};
    ss << "# scenario=x config_hash=h\n" << time_series_header({{"a", {}, 0}, {"b", {}, 0}}) << '\n';
    write_time_series_row(ss, s);
    auto [t, y] = read_probe_series(ss, 1);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t[0], 1.5e-6);
    EXPECT_EQ(y[0], -1.0);
}

TEST(Manifest, AtomicWriteLeavesNoTemporary) {
    const auto dir = scratch("manifest");
    nlohmann::json j{{"a", 1}};
    write_json_atomic(dir / "manifest.json", j);
    EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
    EXPECT_FALSE(std::filesystem::exists(dir / "manifest.json.tmp"));
    std::ifstream f(dir / "manifest.json");
    EXPECT_EQ(nlohmann::json::parse(f)["a"], 1);
    std::filesystem::remove_all(dir);
}

TEST(Manifest, FileRunWriterOutputs) {
    const auto dir = scratch("writer");
    auto req = parse_config("scenario = stability2d\nn_interior = 5\nt_end = 1e-6\noutput_every = 10\n");
    const auto sc = build_scenario(req.scenario, req.params);
    FileRunWriter w(dir, req);
    const auto res = run<2>(sc, req.config, &w);
    EXPECT_FALSE(res.summary.failed);
    EXPECT_TRUE(std::filesystem::exists(dir / "manifest.json"));
    EXPECT_TRUE(std::filesystem::exists(dir / "timeseries.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "snapshots" / "snap_000000000.csv"));
    EXPECT_TRUE(std::filesystem::exists(dir / "snapshots" / "snap_000000020.csv"));
    EXPECT_FALSE(std::filesystem::exists(dir / "FAILED"));
    std::ifstream f(dir / "manifest.json");
    const auto m = nlohmann::json::parse(f);
    EXPECT_EQ(m["config_hash"], w.hash());
    EXPECT_EQ(m["summary"]["steps"], 20);
    std::ifstream ts(dir / "timeseries.csv");
    std::string first;
    std::getline(ts, first);
    EXPECT_NE(first.find("config_hash=" + w.hash()), std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST(Manifest, DeterministicRunsWriteIdenticalSnapshots) {
    auto req = parse_config("scenario = stability2d\nn_interior = 5\nperturb_speed = 0.01\nt_end = 1e-6\noutput_every = 20\n");
    const auto sc = build_scenario(req.scenario, req.params);
    std::string texts[2];
    for (auto& text : texts) {
        const auto dir = scratch("det");
        FileRunWriter w(dir, req);
        run<2>(sc, req.config, &w);
        std::ifstream f(dir / "snapshots" / "snap_000000020.csv", std::ios::binary);
        text.assign(std::istreambuf_iterator<char>(f), {});
        std::filesystem::remove_all(dir);
    }
    EXPECT_FALSE(texts[0].empty());
    EXPECT_EQ(texts[0], texts[1]);
}

TEST(Manifest, OutputDirectoryOverride) {
    ::setenv("ASPH_OUTPUT_DIR", "/tmp/elsewhere", 1);
    EXPECT_EQ(output_directory("out"), std::filesystem::path("/tmp/elsewhere"));
    ::unsetenv("ASPH_OUTPUT_DIR");
    EXPECT_EQ(output_directory("out"), std::filesystem::path("out"));
}
