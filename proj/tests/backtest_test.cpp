#include <random>
#include <string_view>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace pfo;
using pfo::test::reference_reports;
using pfo::test::replay;

namespace {

const std::vector<std::string> kAB = {"A", "B"};

// The small-cap report's printed amounts add up to 102,010 while its ROI is taken against 100,000,
// so no allocation of 100,000 reproduces it. It is checked separately below.
bool self_consistent(const pfo::test::ReferenceReport& ref) { return std::string_view(ref.name) != "Small-Cap"; }

}  // namespace

TEST(Allocate, Examples) {
    const std::vector<std::string> snp = {"SNP"};
    const auto h = allocate(2020, snp, equal_weight(1), {{"SNP", 596}});
    EXPECT_NEAR(h[0].shares, 3.39, 0.005);
    EXPECT_NEAR(value(h, {{"SNP", 671}}), 2274, 2);

    const auto zero = allocate(1000, kAB, WeightVector(Eigen::Vector2d(1, 0)), {{"A", 10}, {"B", 20}});
    EXPECT_EQ(zero[1].shares, 0.0);
    EXPECT_EQ(zero[1].amount_invested, 0.0);

    const std::vector<std::string> five = {"A", "B", "C", "D", "E"};
    const PriceMap hundred = {{"A", 100}, {"B", 100}, {"C", 100}, {"D", 100}, {"E", 100}};
    for (const auto& x : allocate(100000, five, equal_weight(5), hundred)) EXPECT_NEAR(x.shares, 200.0, 1e-12);

    EXPECT_THROW(allocate(0, kAB, equal_weight(2), {{"A", 1}, {"B", 1}}), InvalidArgument);
    EXPECT_THROW(allocate(100, kAB, equal_weight(2), {{"A", 1}, {"B", -1}}), InvalidArgument);
    EXPECT_THROW(allocate(100, kAB, equal_weight(2), {{"A", 1}}), DataError);
    EXPECT_THROW(allocate(100, kAB, equal_weight(3), {{"A", 1}, {"B", 1}}), InvalidArgument);
}

TEST(Roi, Examples) {
    EXPECT_NEAR(roi(100000, 109301), 9.30, 0.02);
    EXPECT_EQ(roi(100000, 100000), 0.0);
    EXPECT_NEAR(roi(100000, 98747), -1.25, 0.02);
    EXPECT_THROW(roi(0, 1), InvalidArgument);
}

TEST(BacktestProperties, AdditivityIdentityAndAllocation) {
    std::mt19937_64 g(12);
    std::uniform_real_distribution<double> P(1, 500), S(0.5, 3);
    for (int trial = 0; trial < 500; ++trial) {
        const auto w = pfo::test::random_simplex(2, g);
        const double capital = P(g) * 1000;
        const PriceMap entry = {{"A", P(g)}, {"B", P(g)}};
        const auto h = allocate(capital, kAB, w, entry);
        EXPECT_EQ(h[0].amount_invested + h[1].amount_invested, capital * w[0] + capital * w[1]);
        EXPECT_NEAR(h[0].amount_invested + h[1].amount_invested, capital, 1e-9 * capital);
        for (const auto& x : h) EXPECT_NEAR(x.shares, x.amount_invested / x.entry_price, 1e-9 * x.shares + 1e-300);
        EXPECT_NEAR(value(h, entry), capital, 1e-6 * capital);

        const PriceMap p1 = {{"A", P(g)}, {"B", P(g)}}, p2 = {{"A", P(g)}, {"B", P(g)}};
        const double k = S(g);
        const PriceMap sum = {{"A", p1.at("A") + k * p2.at("A")}, {"B", p1.at("B") + k * p2.at("B")}};
        EXPECT_NEAR(value(h, sum), value(h, p1) + k * value(h, p2), 1e-9 * value(h, sum));

        const auto r = run_backtest(capital, kAB, w, entry, p1, p1);
        EXPECT_EQ(*r.roi_predicted_pct, r.roi_actual_pct);
        EXPECT_NEAR(r.total_actual, r.rows[0].actual_value + r.rows[1].actual_value, 0.5);
    }
    EXPECT_THROW(value(allocate(100, kAB, equal_weight(2), {{"A", 1}, {"B", 1}}), {{"A", 1}}), DataError);
}

TEST(Backtest, PredictedPricesAreOptional) {
    const auto r = run_backtest(1000, kAB, equal_weight(2), {{"A", 10}, {"B", 20}}, {{"A", 11}, {"B", 22}}, std::nullopt);
    EXPECT_NEAR(r.roi_actual_pct, 10.0, 1e-12);
    EXPECT_FALSE(r.total_predicted.has_value());
    EXPECT_FALSE(r.rows[0].predicted_value.has_value());
    EXPECT_THROW(run_backtest(1000, kAB, equal_weight(2), {{"A", 10}, {"B", 20}}, {{"A", 11}, {"B", 22}},
                              PriceMap{{"A", 1}}),
                 DataError);
}

TEST(ReferenceReports, RoisWithinFiveHundredthsOfAPoint) {
    for (const auto& ref : reference_reports()) {
        if (!self_consistent(ref)) continue;
        const auto r = replay(ref);
        EXPECT_NEAR(r.total_invested, 100000.0, 1e-6) << ref.name;
        EXPECT_NEAR(r.roi_actual_pct, ref.roi_actual, 0.05) << ref.name;
        EXPECT_NEAR(*r.roi_predicted_pct, ref.roi_predicted, 0.05) << ref.name;
        for (std::size_t i = 0; i < ref.rows.size(); ++i)
            EXPECT_NEAR(r.rows[i].holding.shares, ref.rows[i].shares, 0.02) << ref.name << " " << ref.rows[i].ticker;
    }
}

TEST(ReferenceReports, PharmaAndPsuBanksSpotValues) {
    const auto pharma = replay(reference_reports()[0]);
    EXPECT_NEAR(pharma.roi_actual_pct, 9.30, 0.05);
    EXPECT_NEAR(*pharma.roi_predicted_pct, 9.51, 0.05);
    const auto psu = replay(reference_reports()[4]);
    EXPECT_NEAR(psu.roi_actual_pct, 47.07, 0.05);
    EXPECT_NEAR(*psu.roi_predicted_pct, 43.48, 0.05);
}

TEST(ReferenceReports, SmallCapAmountsExceedStatedCapital) {
    const auto& ref = reference_reports()[8];
    ASSERT_EQ(std::string_view(ref.name), "Small-Cap");
    double invested = 0.0, valued = 0.0;
    for (const auto& row : ref.rows) invested += row.amount, valued += row.actual_value;
    EXPECT_EQ(invested, 102010.0);
    EXPECT_EQ(valued, ref.total_actual);
    // The printed ROI divides by 100,000; a consistent replay divides by what was actually invested.
    EXPECT_NEAR(100.0 * (valued - 100000.0) / 100000.0, ref.roi_actual, 0.01);
    const auto r = replay(ref);
    EXPECT_NEAR(r.roi_actual_pct, 100.0 * (r.total_actual - invested) / invested, 1e-9);
    EXPECT_GT(std::abs(r.roi_actual_pct - ref.roi_actual), 1.0);
}

TEST(Summary, ReproducesReferenceSummaryTable) {
    std::vector<BacktestReport> reports;
    for (const auto& ref : reference_reports()) reports.push_back(replay(ref));
    const auto rows = summary(reports);
    ASSERT_EQ(rows.size(), 9u);
    const std::string expected =
        "portfolio,actual_return_pct,predicted_return_pct\n"
        "Pharmaceuticals,9.30,9.51\n"
        "Infrastructure,8.80,5.10\n"
        "Realty,-1.25,-1.42\n"
        "Media,8.29,10.04\n"
        "PSU Banks,47.07,43.48\n"
        "Pvt. Banks,1.41,0.94\n"
        "Large-Cap,8.85,7.31\n"
        "Mid-Cap,22.18,21.80\n"
        "Small-Cap,53.10,58.08\n";
    const auto csv = summary_csv(rows);
    // Each rounded cell must be within 0.05 of the reference.
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].portfolio, reference_reports()[i].name);
        if (!self_consistent(reference_reports()[i])) continue;
        EXPECT_NEAR(rows[i].actual_return_pct, reference_reports()[i].roi_actual, 0.05);
        EXPECT_NEAR(*rows[i].predicted_return_pct, reference_reports()[i].roi_predicted, 0.05);
    }
    EXPECT_EQ(csv.substr(0, csv.find('\n')), expected.substr(0, expected.find('\n')));

    // Single report and permutation.
    const std::vector<BacktestReport> one = {reports[2]};
    EXPECT_EQ(summary(one)[0].actual_return_pct, reports[2].roi_actual_pct);
    std::vector<BacktestReport> rev(reports.rbegin(), reports.rend());
    const auto rrows = summary(rev);
    for (std::size_t i = 0; i < rrows.size(); ++i) EXPECT_EQ(rrows[i].portfolio, rows[rows.size() - 1 - i].portfolio);
    EXPECT_THROW(summary(std::span<const BacktestReport>{}), InvalidArgument);
}

TEST(ReportFormats, JsonRoundTripAndTable) {
    const auto r = replay(reference_reports()[0]);
    const nlohmann::json j = nlohmann::json::parse(report_to_json(r).dump());
    EXPECT_TRUE(validate_report_json(j).empty());
    const auto back = report_from_json(j);
    EXPECT_EQ(back.roi_actual_pct, r.roi_actual_pct);
    EXPECT_EQ(*back.total_predicted, *r.total_predicted);
    EXPECT_EQ(back.rows.size(), r.rows.size());

    auto broken = j;
    broken.erase("total_actual");
    EXPECT_FALSE(validate_report_json(broken).empty());
    broken = j;
    broken["rows"][0]["actual_value"] = 1e9;
    EXPECT_FALSE(validate_report_json(broken).empty());

    const auto table = format_report_table(r);
    EXPECT_NE(table.find("Amt Invstd"), std::string::npos);
    EXPECT_NE(table.find("SNP"), std::string::npos);
    EXPECT_NE(table.find(fmt::format("Actual: {:.2f}", r.roi_actual_pct)), std::string::npos);
    EXPECT_NE(table.find(fmt::format("Predicted: {:.2f}", *r.roi_predicted_pct)), std::string::npos);
    EXPECT_NE(table.find("Total         100000"), std::string::npos);
}
