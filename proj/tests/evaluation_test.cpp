#include <gtest/gtest.h>

#include <sstream>

#include "dlr/evaluation.hpp"

namespace {

using namespace dlr;

const std::string kData = DLR_DATA_DIR;

// Golden status-quo dispatch cost of the bundled RTS-96 snapshot.
constexpr double kRtsStatusQuo = 108733.2936;

struct Case {
    GridModel g;
    PtdfMatrices h;
};

Case load_case(const std::string& file) {
    Case c{load_grid(kData + "/" + file), {}};
    c.h = compute_ptdf(c.g);
    return c;
}

Case from_json(const Json& j) {
    Case c{grid_from_json(j), {}};
    c.h = compute_ptdf(c.g);
    return c;
}

ScenarioConfig toy_config(double mean = 1.2, double sd = 0.1) {
    ScenarioConfig c;
    c.forecast = RatingForecast::independent(1, mean, sd);
    c.gamma = chi2_cdf(1, 1.0);
    return c;
}

ScenarioConfig rts_config(double sd, std::size_t samples) {
    ScenarioConfig c;
    c.forecast = RatingForecast::independent(2, 1.5, sd);
    c.sample_count = samples;
    c.seed = 3;
    return c;
}

TEST(Evaluation, StatusQuoTwoBus) {
    Json j = load_json_file(kData + "/two_bus.json");
    EXPECT_NEAR(status_quo_cost(from_json(j).g, from_json(j).h), 250.0 * 10.0 + 50.0 * 50.0, 1e-3);
    j["lines"][0]["limit_mw"] = 400.0;
    const Case loose = from_json(j);
    EXPECT_NEAR(status_quo_cost(loose.g, loose.h), 300.0 * 10.0, 1e-3);
}

TEST(Evaluation, StatusQuoRtsGolden) {
    const Case c = load_case("rts96_two_area.json");
    EXPECT_NEAR(status_quo_cost(c.g, c.h), kRtsStatusQuo, 1e-3);
}

TEST(Evaluation, ZeroSpreadGivesTheSingleRealizationCost) {
    const Case c = load_case("two_bus.json");
    const ScenarioConfig base = toy_config();
    const ProcurementResult pi = procure_approach_i(c.g, c.h, base);
    const PolicyProcurement pii = procure_affine(c.g, c.h, build_ellipsoid(base.forecast, base.gamma),
                                                 Vector::Constant(1, 300.0));
    ScenarioConfig point = toy_config(1.1, 0.0);
    point.sample_count = 1;
    const Vector delta = Vector::Constant(1, 1.1);
    const ApproachReport ri = monte_carlo_eval(c.g, c.h, point, pi);
    EXPECT_EQ(ri.mean_operational, operate_online(c.g, c.h, pi, delta).cost);
    EXPECT_NEAR(ri.mean_operational, 25.0 * 20.0 * 2.0, 1e-2);
    const ApproachReport rii = monte_carlo_eval(c.g, c.h, point, pii);
    EXPECT_NEAR(rii.mean_operational, 25.0 * 20.0 * 2.0, 1e-3);
    point.sample_count = 500;
    EXPECT_NEAR(monte_carlo_eval(c.g, c.h, point, pi).mean_operational, ri.mean_operational, 1e-9 * ri.mean_operational);
    EXPECT_EQ(monte_carlo_eval(c.g, c.h, point, pii).feasibility_rate(), 1.0);
}

TEST(Evaluation, PolicyCostMatchesClosedForm) {
    const Case c = load_case("two_bus.json");
    ScenarioConfig cfg = toy_config();
    cfg.sample_count = 100000;
    cfg.seed = 17;
    const PolicyProcurement p = procure_affine(c.g, c.h, build_ellipsoid(cfg.forecast, cfg.gamma), Vector::Constant(1, 300.0));
    const ApproachReport r = monte_carlo_eval(c.g, c.h, cfg, p);
    ASSERT_GT(r.operational_std_error(), 0.0);
    EXPECT_NEAR(r.mean_operational, p.cost_expected_operation, 3.0 * r.operational_std_error());
}

TEST(Evaluation, ReportArithmeticAndOutsideSamples) {
    const Case c = load_case("two_bus.json");
    ScenarioConfig cfg = toy_config();
    cfg.sample_count = 2000;
    const EvaluationReport r = evaluate(c.g, c.h, cfg);
    for (const auto* a : {&*r.approach_i, &*r.approach_ii}) {
        EXPECT_EQ(a->total(), a->cost_dispatch + a->cost_procurement + a->mean_operational);
        EXPECT_EQ(a->savings_pct, savings_pct(r.status_quo, a->total()));
        EXPECT_EQ(a->feasible.size(), cfg.sample_count);
        EXPECT_EQ(a->operational_cost.size(), cfg.sample_count);
        // About a third of N(mu, sigma) falls outside the one-sigma set.
        EXPECT_GE(a->feasibility_rate(), cfg.gamma - 0.05);
        EXPECT_LT(a->feasibility_rate(), 1.0);
        EXPECT_GT(a->mean_penalty, 0.0);
        EXPECT_NEAR(a->mean_penalty, cfg.penalty_price * a->mean_uncovered_mw, 1e-9 * a->mean_penalty);
    }
}

TEST(Evaluation, DeterministicAndThreadInvariant) {
    const Case c = load_case("rts96_two_area.json");
    ScenarioConfig cfg = rts_config(0.2, 150);
    const ProcurementResult p = procure_approach_i(c.g, c.h, cfg);
    const ApproachReport a = monte_carlo_eval(c.g, c.h, cfg, p);
    const ApproachReport b = monte_carlo_eval(c.g, c.h, cfg, p);
    cfg.threads = 3;
    const ApproachReport t = monte_carlo_eval(c.g, c.h, cfg, p);
    EXPECT_EQ(a.operational_cost, b.operational_cost);
    EXPECT_EQ(a.operational_cost, t.operational_cost);
    EXPECT_EQ(a.mean_operational, t.mean_operational);
    EXPECT_EQ(a.feasible, t.feasible);
    cfg.seed = 4;
    EXPECT_NE(monte_carlo_eval(c.g, c.h, cfg, p).operational_cost, a.operational_cost);
}

TEST(Evaluation, RobustPlanMeetsTheRiskLevel) {
    const Case c = load_case("rts96_two_area.json");
    const ScenarioConfig cfg = rts_config(0.2, 1000);
    const ApproachReport r = monte_carlo_eval(c.g, c.h, cfg, procure_approach_i(c.g, c.h, cfg));
    EXPECT_GE(r.feasibility_rate(), cfg.gamma);
}

TEST(Evaluation, FlowLimitSweep) {
    const Case c = load_case("rts96_two_area.json");
    std::vector<Vector> caps;
    for (double cap : {250.0, 300.0, 350.0}) caps.push_back((Vector(2) << cap, 250.0).finished());
    ScenarioConfig cfg = rts_config(0.2, 20);
    cfg.approach = Approach::I;
    const Table long_lead = sweep_flow_limits(c.g, c.h, cfg, caps);
    cfg.forecast = RatingForecast::independent(2, 1.5, 0.1);
    const Table short_lead = sweep_flow_limits(c.g, c.h, cfg, caps);
    ASSERT_EQ(long_lead.rows.size(), caps.size());
    EXPECT_EQ(long_lead.header.front(), "cap_mw_214-216");
    EXPECT_NEAR(long_lead.value(0, "procured_mw"), 0.0, 1e-3);
    for (std::size_t i = 0; i < caps.size(); ++i) {
        if (i > 0) EXPECT_GE(long_lead.value(i, "procured_mw"), long_lead.value(i - 1, "procured_mw") - 1e-3);
        EXPECT_GE(long_lead.value(i, "procured_mw"), short_lead.value(i, "procured_mw") - 1e-3);
    }
    EXPECT_GT(long_lead.value(2, "procured_mw"), 1.0);
}

TEST(Evaluation, MuSigmaSweep) {
    const Case c = load_case("rts96_two_area.json");
    ScenarioConfig cfg = rts_config(0.2, 30);
    cfg.y_points = 5;
    const std::vector<double> mus{1.25, 1.5, 1.75}, sds{0.05, 0.2};
    const Table t = sweep_mu_sigma(c.g, c.h, cfg, mus, sds);
    ASSERT_EQ(t.rows.size(), mus.size() * sds.size() * 2);
    // Row order: mu, then sigma, then approach.
    auto row = [&](std::size_t m, std::size_t s, std::size_t a) { return (m * sds.size() + s) * 2 + a; };
    for (std::size_t a = 0; a < 2; ++a)
        for (std::size_t m = 0; m < mus.size(); ++m) {
            EXPECT_LE(t.value(row(m, 0, a), "mean_operational"), t.value(row(m, 1, a), "mean_operational") + 1e-6);
            for (std::size_t s = 0; s < sds.size(); ++s)
                if (m > 0) EXPECT_GE(t.value(row(m, s, a), "savings_pct"), t.value(row(m - 1, s, a), "savings_pct") - 1e-6);
        }
}

TEST(Evaluation, ComparisonLayout) {
    const Case c = load_case("two_bus.json");
    ScenarioConfig cfg = toy_config();
    cfg.sample_count = 200;
    ComparisonSettings s;
    s.mu = 1.2;
    s.sigma_short = 0.05;
    s.sigma_long = 0.1;
    const Comparison cmp = compare_approaches(c.g, c.h, cfg, s);
    std::vector<std::string> labels;
    for (const auto& col : cmp.columns) labels.push_back(col.label);
    EXPECT_EQ(labels, (std::vector<std::string>{"II-3h", "II-24h", "I-3h-a0", "I-3h-a0.1", "I-24h-a0", "I-24h-a0.1"}));
    const Table t = cmp.table();
    EXPECT_EQ(t.header.size(), 8u);
    ASSERT_EQ(t.rows.size(), 6u);
    EXPECT_EQ(t.rows[0][0], "dispatch_cost");
    EXPECT_EQ(t.rows[0][1], Table::num(cmp.status_quo));
    EXPECT_EQ(t.rows[4][2], Table::num(cmp.at("II-3h").total()));
    EXPECT_THROW(cmp.at("III"), InvalidInput);
}

TEST(Evaluation, TableFormattingAndPlotTriples) {
    EXPECT_EQ(Table::num(1.5), "1.500000");
    EXPECT_EQ(Table::num(-0.0), "0.000000");
    Table t;
    t.header = {"a", "b", "approach", "z"};
    t.add({"1", "2", "I", "3"});
    t.add({"1", "2", "II", "4"});
    EXPECT_THROW(t.add({"1"}), InvalidInput);
    std::ostringstream os;
    t.write_csv(os);
    EXPECT_EQ(os.str(), "a,b,approach,z\n1,2,I,3\n1,2,II,4\n");
    const Table p = plot_triples(t, "a", "b", "z", "approach", "II");
    ASSERT_EQ(p.rows.size(), 1u);
    EXPECT_EQ(p.rows[0], (std::vector<std::string>{"1", "2", "4"}));
    EXPECT_THROW(plot_triples(t, "a", "q", "z"), InvalidInput);
}

TEST(Evaluation, RejectsBadConfig) {
    const Case c = load_case("two_bus.json");
    ScenarioConfig cfg = toy_config();
    cfg.sample_count = 0;
    EXPECT_THROW(evaluate(c.g, c.h, cfg), InvalidInput);
    cfg = toy_config();
    cfg.schedule_caps_mw = Vector::Constant(1, -5.0);
    EXPECT_THROW(evaluate(c.g, c.h, cfg), InvalidInput);
    cfg = toy_config();
    cfg.gamma = 1.0;
    EXPECT_THROW(evaluate(c.g, c.h, cfg), InvalidInput);
    EXPECT_EQ(approach_from_string("II"), Approach::II);
    EXPECT_THROW(approach_from_string("III"), InvalidInput);
}

}  // namespace
