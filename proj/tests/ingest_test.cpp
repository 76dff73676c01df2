#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>
// Eigen first: the resolver header pulled in by httplib defines a `_res` macro.
#include "test_support.hpp"

#include <httplib.h>

using namespace pfo;
using pfo::test::TempDir;

namespace {

std::vector<PriceSeries> parse(const std::string& text, std::vector<RowDiagnostic>* rejected = nullptr) {
    std::istringstream in(text);
    return read_price_csv(in, rejected);
}

}  // namespace

TEST(Date, ParsesAndRejectsStrictly) {
    EXPECT_EQ(parse_date("2021-01-04").iso(), "2021-01-04");
    EXPECT_TRUE(try_parse_date("2020-02-29").has_value());
    for (const char* bad : {"2021-02-29", "2021-13-01", "2021-1-04", "20210104", "2021-01-04 ", "", "abcd-ef-gh"})
        EXPECT_FALSE(try_parse_date(bad).has_value()) << bad;
    EXPECT_TRUE(Date(2021, 1, 2).is_weekend());
    EXPECT_FALSE(Date(2021, 1, 4).is_weekend());
    EXPECT_EQ(unix_seconds(Date(1970, 1, 2)), 86400);
}

TEST(LoadCsv, TwoRowsOneSeries) {
    const auto s = parse("date,ticker,close\n2021-01-01,SNP,596\n2021-01-04,SNP,600\n");
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].ticker, "SNP");
    ASSERT_EQ(s[0].size(), 2u);
    EXPECT_EQ(s[0].bars[0].close, 596.0);
    EXPECT_EQ(s[0].bars[1].date, Date(2021, 1, 4));
}

TEST(LoadCsv, NegativeCloseNamesTheLine) {
    try {
        parse("date,ticker,close\n2021-01-01,SNP,596\n2021-01-04,SNP,-5\n");
        FAIL() << "expected RowError";
    } catch (const RowError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(LoadCsv, LenientModeCollectsDiagnostics) {
    std::vector<RowDiagnostic> rejected;
    const auto s = parse("date,ticker,close\n2021-01-01,SNP,596\n2021-01-04,SNP,-5\nbad,SNP,1\n2021-01-05,SNP,x\n"
                         "2021-01-06,SNP,0\n2021-01-07,SNP,601\n",
                         &rejected);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].size(), 2u);
    ASSERT_EQ(rejected.size(), 4u);
    EXPECT_EQ(rejected[0].line, 3u);
    EXPECT_EQ(rejected[1].line, 4u);
    EXPECT_EQ(rejected[2].line, 5u);
    EXPECT_EQ(rejected[3].line, 6u);
}

TEST(LoadCsv, HeaderAndFileErrors) {
    EXPECT_THROW(parse("ticker,date,close\n"), RowError);
    EXPECT_THROW(parse(""), DataError);
    EXPECT_THROW(load_csv("/nonexistent/prices.csv"), DataError);
    EXPECT_THROW(parse("date,ticker,close\n2021-01-04,A,1\n2021-01-04,A,2\n"), DataError);
}

TEST(LoadCsv, ToleratesCrlfAndBom) {
    const auto s = parse("\xEF\xBB\xBF" "date,ticker,close\r\n2021-01-04,A,1.5\r\n");
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].bars[0].close, 1.5);
}

TEST(LoadCsv, MissingFileErrorMentionsPath) {
    TempDir dir("ingest");
    std::ofstream(dir / "p.csv") << "date,ticker,close\n2021-01-04,A,oops\n";
    try {
        load_csv(dir / "p.csv");
        FAIL();
    } catch (const RowError& e) {
        EXPECT_NE(std::string(e.what()).find("p.csv"), std::string::npos);
        EXPECT_EQ(e.line(), 2u);
    }
}

// Oracle: split rows by ticker into a map, then sort each group by date string.
TEST(LoadCsv, InterleavedTickersMatchSplitThenSortOracle) {
    const std::vector<std::string> rows = {
        "2021-01-06,BBB,20.5", "2021-01-04,AAA,10",   "2021-01-08,AAA,13",  "2021-01-04,BBB,20",
        "2021-01-05,AAA,11",   "2021-01-07,BBB,21.25", "2021-01-06,AAA,12", "2021-01-05,BBB,19.75",
        "2021-01-08,BBB,22",   "2021-01-07,AAA,12.5"};
    std::string text = "date,ticker,close\n";
    for (const auto& r : rows) text += r + "\n";
    const auto got = parse(text);

    std::map<std::string, std::vector<std::pair<std::string, double>>> oracle;
    for (const auto& r : rows) {
        const auto c1 = r.find(','), c2 = r.rfind(',');
        oracle[r.substr(c1 + 1, c2 - c1 - 1)].emplace_back(r.substr(0, c1), std::stod(r.substr(c2 + 1)));
    }
    for (auto& [t, v] : oracle) std::sort(v.begin(), v.end());

    ASSERT_EQ(got.size(), oracle.size());
    for (const auto& s : got) {
        const auto& expect = oracle.at(s.ticker);
        ASSERT_EQ(s.size(), expect.size());
        for (std::size_t i = 0; i < expect.size(); ++i) {
            EXPECT_EQ(s.bars[i].date.iso(), expect[i].first);
            EXPECT_EQ(s.bars[i].close, expect[i].second);
        }
    }
}

TEST(LoadCsv, WriteThenLoadIsIdentity) {
    std::mt19937_64 g(7);
    TempDir dir("roundtrip");
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<PriceSeries> series;
        std::uniform_int_distribution<int> len(1, 40);
        for (int k = 0; k < 3; ++k) {
            auto closes = pfo::test::random_walk(static_cast<std::size_t>(len(g)), g);
            // The format keeps 6 decimals; values already on that grid round-trip exactly.
            for (auto& c : closes) c = std::round(c * 1e6) / 1e6;
            series.push_back(pfo::test::weekday_series("T" + std::to_string(k), closes));
        }
        const auto path = dir / "rt.csv";
        write_csv(path, series);
        const auto back = load_csv(path);
        ASSERT_EQ(back.size(), series.size());
        for (std::size_t k = 0; k < series.size(); ++k) {
            EXPECT_EQ(back[k].ticker, series[k].ticker);
            ASSERT_EQ(back[k].size(), series[k].size());
            for (std::size_t i = 0; i < series[k].size(); ++i) {
                EXPECT_EQ(back[k].bars[i].date, series[k].bars[i].date);
                EXPECT_EQ(back[k].bars[i].close, series[k].bars[i].close);
            }
        }
        EXPECT_EQ(read_file(path), price_csv_string(back));
    }
}

TEST(FormatClose, TrimsZerosAndKeepsSixDecimals) {
    EXPECT_EQ(format_close(596.0), "596");
    EXPECT_EQ(format_close(600.5), "600.5");
    EXPECT_EQ(format_close(1.23456789), "1.234568");
    EXPECT_EQ(format_close(0.000001), "0.000001");
}

TEST(Align, IdenticalDatesUnchanged) {
    const auto a = pfo::test::weekday_series("A", {1, 2, 3, 4});
    const auto b = pfo::test::weekday_series("B", {5, 6, 7, 8});
    const PriceSeries both[] = {a, b};
    const auto p = align(both);
    EXPECT_EQ(p.dates, a.dates());
    EXPECT_EQ(p.closes(1, 3), 8.0);
}

TEST(Align, ForwardFillsShortInteriorGap) {
    auto a = pfo::test::weekday_series("A", {1, 2, 3, 4});
    const auto b = pfo::test::weekday_series("B", {5, 6, 7, 8});
    a.bars.erase(a.bars.begin() + 2);
    const PriceSeries both[] = {a, b};
    const auto p = align(both);
    ASSERT_EQ(p.dates.size(), 4u);
    EXPECT_EQ(p.closes(0, 2), 2.0);
}

TEST(Align, LongGapDropsDates) {
    // A has a 10-day hole; B trades every weekday.
    std::vector<double> closes(20);
    for (std::size_t i = 0; i < closes.size(); ++i) closes[i] = 100.0 + static_cast<double>(i);
    const auto b = pfo::test::weekday_series("B", closes);
    auto a = b;
    a.ticker = "A";
    a.bars.erase(a.bars.begin() + 5, a.bars.begin() + 13);
    const PriceSeries both[] = {a, b};
    const auto p = align(both);
    for (const auto& d : p.dates) {
        bool in_a = std::any_of(a.bars.begin(), a.bars.end(), [&](const PriceBar& x) { return x.date == d; });
        if (!in_a) {
            // Anything kept but not observed must be within 5 days of A's previous close.
            auto prev = std::find_if(a.bars.rbegin(), a.bars.rend(), [&](const PriceBar& x) { return x.date < d; });
            ASSERT_NE(prev, a.bars.rend());
            EXPECT_LE(prev->date.days_until(d), 5);
        }
    }
    EXPECT_LT(p.dates.size(), b.size());
    EXPECT_EQ(p.closes.rows(), 2);
    EXPECT_TRUE((p.closes.array() > 0).all());
}

TEST(Align, Errors) {
    const auto a = pfo::test::weekday_series("A", {1, 2}, Date(2016, 1, 4));
    const auto b = pfo::test::weekday_series("B", {1, 2}, Date(2019, 1, 7));
    const PriceSeries disjoint[] = {a, b};
    EXPECT_THROW(align(disjoint), DataError);
    const PriceSeries dup[] = {a, a};
    EXPECT_THROW(align(dup), DataError);
    EXPECT_THROW(align(std::span<const PriceSeries>{}), DataError);
}

TEST(Align, PermutationEquivariantAndComplete) {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<PriceSeries> series;
        for (int k = 0; k < 4; ++k) {
            auto s = pfo::test::weekday_series("S" + std::to_string(k), pfo::test::random_walk(60, g));
            // Punch random holes of 1-3 bars.
            for (int h = 0; h < 3; ++h) {
                std::uniform_int_distribution<std::size_t> pos(1, s.size() - 5);
                const auto at = pos(g);
                s.bars.erase(s.bars.begin() + static_cast<std::ptrdiff_t>(at),
                             s.bars.begin() + static_cast<std::ptrdiff_t>(at + 1 + g() % 3));
            }
            series.push_back(s);
        }
        const auto base = align(series);
        std::vector<std::size_t> perm = {0, 1, 2, 3};
        std::shuffle(perm.begin(), perm.end(), g);
        std::vector<PriceSeries> shuffled;
        for (auto i : perm) shuffled.push_back(series[i]);
        const auto p = align(shuffled);
        ASSERT_EQ(p.dates, base.dates);
        for (std::size_t r = 0; r < perm.size(); ++r) {
            EXPECT_EQ(p.tickers[r], base.tickers[perm[r]]);
            EXPECT_EQ(p.closes.row(static_cast<Eigen::Index>(r)), base.closes.row(static_cast<Eigen::Index>(perm[r])));
        }
        EXPECT_EQ(p.closes.cols(), static_cast<Eigen::Index>(p.dates.size()));
        EXPECT_TRUE((base.closes.array() > 0).all());
    }
}

// ---- remote fetching ----

namespace {

const char* kRecorded =
    "Date,Open,High,Low,Close,Adj Close,Volume\n"
    "2020-12-30,590,600,588,595.5,590.1,1000\n"
    "2020-12-31,596,599,590,596.25,591,900\n"
    "2021-01-01,null,null,null,null,null,null\n"
    "2021-01-04,597,605,596,600,594.7,1200\n"
    "2021-01-05,601,610,600,604.123456789,599,1100\n";

class FakeSource : public PriceSource {
public:
    std::string body;
    std::string fetch_raw(const std::string&, Date, Date) override { return body; }
};

}  // namespace

TEST(FetchRemote, ParsesFiltersAndCaches) {
    TempDir dir("fetch");
    FakeSource src;
    src.body = kRecorded;
    const auto s = fetch_remote(src, "SNP", Date(2020, 12, 31), Date(2021, 1, 5), dir.path());
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.bars.front().close, 596.25);
    EXPECT_EQ(read_file(dir / "SNP.csv"),
              "date,ticker,close\n2020-12-31,SNP,596.25\n2021-01-04,SNP,600\n2021-01-05,SNP,604.123457\n");
}

TEST(FetchRemote, RecordedFixtureReplaysToGoldenCache) {
    const std::filesystem::path fixtures = PFO_TEST_DATA_DIR;
    TempDir dir("replay");
    RecordedPriceSource src(fixtures / "recorded");
    const auto s = fetch_remote(src, "SNP", Date(2021, 1, 1), Date(2021, 1, 29), dir.path());
    EXPECT_GT(s.size(), 10u);
    EXPECT_EQ(read_file(dir / "SNP.csv"), read_file(fixtures / "SNP.cache.csv"));
    // Replaying again is byte-identical.
    fetch_remote(src, "SNP", Date(2021, 1, 1), Date(2021, 1, 29), dir.path());
    EXPECT_EQ(read_file(dir / "SNP.csv"), read_file(fixtures / "SNP.cache.csv"));
}

TEST(FetchRemote, DistinctErrors) {
    TempDir dir("errors");
    FakeSource src;
    src.body = kRecorded;
    EXPECT_THROW(fetch_remote(src, "SNP", Date(2021, 1, 5), Date(2021, 1, 5), dir.path()), InvalidArgument);
    EXPECT_THROW(fetch_remote(src, "SNP", Date(2022, 1, 1), Date(2022, 2, 1), dir.path()), EmptyResponseError);
    src.body = "";
    EXPECT_THROW(fetch_remote(src, "SNP", Date(2021, 1, 1), Date(2021, 2, 1), dir.path()), EmptyResponseError);
    RecordedPriceSource none(dir.path() / "nothing");
    EXPECT_THROW(fetch_remote(none, "ZZZ", Date(2021, 1, 1), Date(2021, 2, 1), dir.path()), UnknownTickerError);
}

TEST(FetchRemote, HttpSourceAgainstLocalServer) {
    httplib::Server server;
    std::string last_query;
    server.Get(R"(/v7/finance/download/(\w+))", [&](const httplib::Request& req, httplib::Response& res) {
        const auto ticker = req.matches[1].str();
        last_query = req.get_param_value("period1") + ":" + req.get_param_value("period2");
        if (ticker == "SNP") res.set_content(kRecorded, "text/csv");
        else if (ticker == "EMPTY") res.set_content("Date,Open,High,Low,Close,Adj Close,Volume\n", "text/csv");
        else if (ticker == "BOOM") res.status = 500;
        else res.status = 404;
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    TempDir dir("http");
    HttpPriceSource src("http://127.0.0.1:" + std::to_string(port), 5);
    const auto s = fetch_remote(src, "SNP", Date(2020, 12, 30), Date(2021, 1, 5), dir.path());
    EXPECT_EQ(s.size(), 4u);
    EXPECT_EQ(last_query, std::to_string(unix_seconds(Date(2020, 12, 30))) + ":" +
                              std::to_string(unix_seconds(Date(2021, 1, 6))));
    EXPECT_THROW(fetch_remote(src, "NOPE", Date(2021, 1, 1), Date(2021, 2, 1), dir.path()), UnknownTickerError);
    EXPECT_THROW(fetch_remote(src, "EMPTY", Date(2021, 1, 1), Date(2021, 2, 1), dir.path()), EmptyResponseError);
    EXPECT_THROW(fetch_remote(src, "BOOM", Date(2021, 1, 1), Date(2021, 2, 1), dir.path()), NetworkError);
    server.stop();
    t.join();

    HttpPriceSource dead("http://127.0.0.1:" + std::to_string(port), 1);
    EXPECT_THROW(fetch_remote(dead, "SNP", Date(2021, 1, 1), Date(2021, 2, 1), dir.path()), NetworkError);
}
