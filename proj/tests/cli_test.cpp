#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dlr/cli.hpp"

namespace {

using namespace dlr;
namespace fs = std::filesystem;

const std::string kData = DLR_DATA_DIR;

struct Outcome {
    int code = 0;
    std::string out, err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "dlr");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Outcome r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::path(::testing::TempDir()) / ("dlr_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string file(const std::string& name, const std::string& content) const {
        const fs::path p = dir_ / name;
        std::ofstream(p, std::ios::binary) << content;
        return p.string();
    }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    fs::path dir_;
};

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) out.push_back(line);
    return out;
}

TEST_F(Cli, HelpAndUsageErrors) {
    EXPECT_EQ(run({"--help"}).code, cli::kOk);
    EXPECT_EQ(run({}).code, cli::kInputError);
    EXPECT_EQ(run({"procure", "--grid", kData + "/two_bus.json"}).code, cli::kInputError);
    EXPECT_EQ(run({"bogus"}).code, cli::kInputError);
}

TEST_F(Cli, RateRows) {
    // Drake at 100 degC; the second row reproduces the rating base, the third
    // is the heat-balance worked example.
    Json spec = load_json_file(kData + "/drake_rating.json");
    spec["conductor"]["max_temperature"] = 100.0;
    const std::string conductor = file("conductor.json", spec["conductor"].dump());
    const std::string weather = file("weather.csv",
                                     "wind_speed,wind_angle,ambient_temperature,solar_irradiance\n"
                                     "0.5,22.5,30,900\n"
                                     "0.61,90,40,997.2704\n");
    const Outcome r = run({"rate", "--weather", weather, "--conductor", conductor});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const auto lines = csv_lines(r.out);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0], "row,wind_speed,wind_angle,ambient_temperature,solar_irradiance,ampacity_a,rating_pu");
    EXPECT_NE(lines[1].find(",1.000000"), std::string::npos);
    const double amps = std::stod(lines[2].substr(lines[2].rfind(',', lines[2].rfind(',') - 1) + 1));
    EXPECT_NEAR(amps, 1025.0, 0.01 * 1025.0);

    const Outcome mw = run({"rate", "--weather", weather, "--conductor", kData + "/drake_rating.json"});
    ASSERT_EQ(mw.code, cli::kOk) << mw.err;
    EXPECT_NE(csv_lines(mw.out)[1].find("1.000000,250.000000"), std::string::npos);
}

TEST_F(Cli, RateEdgeCases) {
    const Outcome empty = run({"rate", "--weather", file("empty.csv", ""), "--conductor", kData + "/drake_rating.json"});
    EXPECT_EQ(empty.code, cli::kOk);
    EXPECT_EQ(empty.out, "");
    const Outcome bad = run({"rate", "--weather", file("bad.csv", "wind_speed,wind_angle,ambient_temperature,solar_irradiance\n1,2,3,4\n1,2,x,4\n"),
                         "--conductor", kData + "/drake_rating.json"});
    EXPECT_EQ(bad.code, cli::kInputError);
    EXPECT_NE(bad.err.find("row 3"), std::string::npos) << bad.err;
    const std::string out = path("ratings.csv");
    ASSERT_EQ(run({"rate", "--weather", kData + "/weather_example.csv", "--conductor", kData + "/drake_rating.json", "--out", out}).code,
              cli::kOk);
    EXPECT_EQ(csv_lines(slurp(out)).size(), 5u);
}

TEST_F(Cli, ProcureApproachIHoldsItsInvariants) {
    const Outcome r = run({"procure", "--grid", kData + "/rts96_two_area.json", "--forecast", kData + "/forecast_24h.json",
                       "--out", path("p")});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const GridModel g = load_grid(kData + "/rts96_two_area.json");
    const PtdfMatrices h = compute_ptdf(g);
    const ProcurementResult p = procurement_from_json(g, load_json_file(path("p/procurement.json")));
    EXPECT_NEAR(p.p_gen.sum(), g.total_load(), 1e-4);
    EXPECT_GT(p.procured_mw(), 0.0);
    const PolytopeSet w = build_polytope(build_ellipsoid(load_forecast(kData + "/forecast_24h.json"), 0.95));
    for (const Vector& v : w.vertices) EXPECT_NO_THROW(operate_online(g, h, p, v));
    EXPECT_TRUE(fs::exists(path("p/manifest.toml")));
}

TEST_F(Cli, ProcureApproachIIWithOneGuaranteeIsAPassThrough) {
    const Outcome r = run({"procure", "--grid", kData + "/two_bus.json", "--forecast", kData + "/two_bus_forecast.json",
                       "--approach", "II", "--y", "300", "--out", path("p")});
    ASSERT_EQ(r.code, cli::kOk) << r.err;
    const GridModel g = load_grid(kData + "/two_bus.json");
    const PtdfMatrices h = compute_ptdf(g);
    const PolicyProcurement direct =
        procure_affine(g, h, build_ellipsoid(load_forecast(kData + "/two_bus_forecast.json"), 0.95), Vector::Constant(1, 300.0));
    EXPECT_EQ(slurp(path("p/procurement.json")), to_json(direct).dump(2) + "\n");
    EXPECT_EQ(csv_lines(slurp(path("p/candidates.csv"))).size(), 2u);

    const Outcome act = run({"operate", "--grid", kData + "/two_bus.json", "--procurement", path("p/procurement.json"), "--rating", "1.1"});
    ASSERT_EQ(act.code, cli::kOk) << act.err;
    const Json j = Json::parse(act.out);
    ASSERT_EQ(j["actions"].size(), 2u);
    EXPECT_NEAR(j["actions"][0]["change_mw"].get<double>(), -25.0, 1e-6);
    EXPECT_NEAR(j["actions"][1]["change_mw"].get<double>(), 25.0, 1e-6);
}

TEST_F(Cli, ExitCodes) {
    const std::string rts = kData + "/rts96_two_area.json";
    EXPECT_EQ(run({"procure", "--grid", rts, "--forecast", kData + "/two_bus_forecast.json", "--out", path("a")}).code,
              cli::kInputError);
    EXPECT_EQ(run({"procure", "--grid", rts, "--forecast", kData + "/forecast_3h.json", "--caps", "100,100", "--out", path("b")}).code,
              cli::kInfeasible);
    EXPECT_EQ(run({"procure", "--grid", rts, "--forecast", path("missing.json"), "--out", path("c")}).code, cli::kInputError);
    EXPECT_EQ(run({"procure", "--grid", rts, "--forecast", kData + "/forecast_3h.json", "--gamma", "1.5", "--out", path("d")}).code,
              cli::kInputError);
    ASSERT_EQ(run({"procure", "--grid", rts, "--forecast", kData + "/forecast_3h.json", "--out", path("e")}).code, cli::kOk);
    EXPECT_EQ(run({"operate", "--grid", rts, "--procurement", path("e/procurement.json"), "--rating", "0.5,1.0"}).code,
              cli::kInfeasible);
    EXPECT_EQ(run({"operate", "--grid", kData + "/two_bus.json", "--procurement", path("e/procurement.json"), "--rating", "1.2"}).code,
              cli::kInputError);
    EXPECT_EQ(run({"evaluate", "--grid", rts, "--forecast", kData + "/forecast_3h.json", "--procurement", path("none.json"),
                   "--out", path("f")})
                  .code,
              cli::kInputError);
    EXPECT_EQ(cli::exit_code_for(NumericalError("x")), cli::kNumericalFailure);
    EXPECT_EQ(cli::exit_code_for(Infeasible("x")), cli::kInfeasible);
    EXPECT_EQ(cli::exit_code_for(DegenerateSpec("x")), cli::kInputError);
}

TEST_F(Cli, EvaluateIsDeterministic) {
    const std::string grid = kData + "/two_bus.json", fc = kData + "/two_bus_forecast.json";
    for (const char* approach : {"I", "II"}) {
        const std::string p = path(std::string("p") + approach);
        ASSERT_EQ(run({"procure", "--grid", grid, "--forecast", fc, "--approach", approach, "--y-points", "5", "--out", p}).code, cli::kOk);
        auto eval = [&](const std::string& out, const std::string& seed, const std::string& threads) {
            return run({"--threads", threads, "evaluate", "--grid", grid, "--forecast", fc, "--procurement", p + "/procurement.json",
                        "--samples", "300", "--seed", seed, "--out", out});
        };
        ASSERT_EQ(eval(path("a"), "5", "1").code, cli::kOk);
        ASSERT_EQ(eval(path("b"), "5", "3").code, cli::kOk);
        ASSERT_EQ(eval(path("c"), "6", "1").code, cli::kOk);
        for (const char* f : {"evaluation.csv", "samples.csv"}) {
            EXPECT_EQ(slurp(path("a") + "/" + f), slurp(path("b") + "/" + f)) << approach << " " << f;
            EXPECT_NE(slurp(path("a") + "/" + f), slurp(path("c") + "/" + f)) << approach << " " << f;
        }
        EXPECT_EQ(csv_lines(slurp(path("a/samples.csv"))).size(), 301u);
    }
}

TEST_F(Cli, ManifestReplayReproducesBytes) {
    ASSERT_EQ(run({"sweep", "--grid", kData + "/rts96_two_area.json", "--forecast", kData + "/forecast_24h.json", "--approach", "I",
                   "--caps", "250,300", "--caps", "250", "--samples", "20", "--emit-plot-data", "--out", path("s")})
                  .code,
              cli::kOk);
    const std::string first = slurp(path("s/sweep_flow_limits.csv"));
    const std::string plot = slurp(path("s/plot_flow_limits_I_procured_mw.csv"));
    EXPECT_EQ(csv_lines(first).size(), 3u);
    EXPECT_EQ(csv_lines(plot)[0], "x,y,z");
    fs::copy_file(path("s/manifest.toml"), path("manifest.toml"));
    fs::remove_all(path("s"));
    ASSERT_EQ(run({"--manifest", path("manifest.toml")}).code, cli::kOk);
    EXPECT_EQ(slurp(path("s/sweep_flow_limits.csv")), first);
    EXPECT_EQ(slurp(path("s/plot_flow_limits_I_procured_mw.csv")), plot);
}

TEST_F(Cli, SingleSweepPointAndSummaryLayout) {
    ASSERT_EQ(run({"sweep", "--grid", kData + "/two_bus.json", "--forecast", kData + "/two_bus_forecast.json", "--kind", "mu-sigma",
                   "--approach", "I", "--mu", "1.2", "--sigma", "0.1", "--samples", "10", "--out", path("s")})
                  .code,
              cli::kOk);
    EXPECT_EQ(csv_lines(slurp(path("s/sweep_mu_sigma.csv"))).size(), 2u);
    ASSERT_EQ(run({"evaluate", "--grid", kData + "/two_bus.json", "--summary", "--mu", "1.2", "--sigma-short", "0.05",
                   "--sigma-long", "0.1", "--samples", "50", "--y-points", "5", "--out", path("t")})
                  .code,
              cli::kOk);
    const auto lines = csv_lines(slurp(path("t/summary.csv")));
    ASSERT_EQ(lines.size(), 7u);
    EXPECT_EQ(lines[0], "item,status_quo,II-3h,II-24h,I-3h-a0,I-3h-a0.1,I-24h-a0,I-24h-a0.1");
}

TEST(CliValues, ParsesListsAndRanges) {
    EXPECT_EQ(cli::parse_values("1, 2.5,3", "x"), (std::vector<double>{1.0, 2.5, 3.0}));
    EXPECT_EQ(cli::parse_values("250:300:25", "x"), (std::vector<double>{250.0, 275.0, 300.0}));
    EXPECT_EQ(cli::parse_values("0.1:0.3:0.1", "x").size(), 3u);
    EXPECT_EQ(cli::parse_values("5:5:1,7", "x"), (std::vector<double>{5.0, 7.0}));
    for (const char* bad : {"", "1,,2", "abc", "1x", "3:1:1", "1:2:0", "1:2"}) EXPECT_THROW(cli::parse_values(bad, "x"), InvalidInput) << bad;
    EXPECT_EQ(cli::cartesian({{1, 2}, {3}}).size(), 2u);
}

}  // namespace
