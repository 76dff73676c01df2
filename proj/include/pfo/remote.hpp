#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>

#include "pfo/date.hpp"
#include "pfo/error.hpp"
#include "pfo/ingest.hpp"
#include "pfo/io.hpp"

namespace pfo {

/// Supplies raw daily-history CSV (Date,Open,High,Low,Close,Adj Close,Volume) for a ticker.
class PriceSource {
public:
    virtual ~PriceSource() = default;
    virtual std::string fetch_raw(const std::string& ticker, Date start, Date end) = 0;
};

/// Replays responses recorded as `<dir>/<ticker>.csv`.
class RecordedPriceSource final : public PriceSource {
public:
    explicit RecordedPriceSource(std::filesystem::path dir) : dir_(std::move(dir)) {}

    std::string fetch_raw(const std::string& ticker, Date, Date) override {
        const auto path = dir_ / (ticker + ".csv");
        if (!std::filesystem::exists(path)) throw UnknownTickerError("no recorded response for " + ticker);
        return read_file(path);
    }

private:
    std::filesystem::path dir_;
};

/// Yahoo-style history download over HTTP(S):
/// GET <base>/v7/finance/download/<ticker>?period1=..&period2=..&interval=1d&events=history
class HttpPriceSource final : public PriceSource {
public:
    explicit HttpPriceSource(std::string base_url, time_t timeout_sec = 20)
        : base_url_(std::move(base_url)), timeout_sec_(timeout_sec) {}

    std::string fetch_raw(const std::string& ticker, Date start, Date end) override {
        httplib::Client client(base_url_);
        client.set_connection_timeout(timeout_sec_, 0);
        client.set_read_timeout(timeout_sec_, 0);
        client.set_follow_location(true);
        // period2 is exclusive upstream; ask for the day after `end`.
        const std::string target = "/v7/finance/download/" + ticker + "?period1=" +
                                   std::to_string(unix_seconds(start)) + "&period2=" +
                                   std::to_string(unix_seconds(end.plus_days(1))) +
                                   "&interval=1d&events=history";
        auto res = client.Get(target);
        if (!res) throw NetworkError("request for " + ticker + " failed: " + httplib::to_string(res.error()));
        if (res->status == 404) throw UnknownTickerError("unknown ticker " + ticker);
        if (res->status != 200)
            throw NetworkError("request for " + ticker + " returned HTTP " + std::to_string(res->status));
        return res->body;
    }

private:
    std::string base_url_;
    time_t timeout_sec_;
};

/// Parse a raw history response into closes within [start, end]. Rows carrying `null` are skipped.
inline PriceSeries parse_history_response(const std::string& ticker, std::string_view body, Date start, Date end) {
    std::istringstream in{std::string(body)};
    std::string line;
    if (!std::getline(in, line)) throw EmptyResponseError("empty response for " + ticker);
    detail::strip_cr(line);
    const auto header = detail::split_commas(line);
    std::optional<std::size_t> date_col, close_col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "Date") date_col = i;
        if (header[i] == "Close") close_col = i;
    }
    if (!date_col || !close_col)
        throw DataError("unexpected response header for " + ticker + ": '" + line + "'");

    PriceSeries out{ticker, {}};
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty()) continue;
        const auto fields = detail::split_commas(line);
        if (fields.size() != header.size()) throw RowError(lineno, "field count mismatch", ticker + " response");
        if (fields[*close_col] == "null") continue;
        const auto date = try_parse_date(fields[*date_col]);
        double close = 0.0;
        if (!date) throw RowError(lineno, "unparsable date", ticker + " response");
        if (!detail::parse_double(fields[*close_col], close) || close <= 0.0)
            throw RowError(lineno, "bad close '" + std::string(fields[*close_col]) + "'", ticker + " response");
        if (*date < start || end < *date) continue;
        out.bars.push_back({*date, close});
    }
    std::sort(out.bars.begin(), out.bars.end(), [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
    out.bars.erase(std::unique(out.bars.begin(), out.bars.end(),
                               [](const PriceBar& a, const PriceBar& b) { return a.date == b.date; }),
                   out.bars.end());
    if (out.bars.empty()) throw EmptyResponseError("no prices for " + ticker + " in " + start.iso() + ".." + end.iso());
    return out;
}

/// Fetches through a PriceSource and persists each result as a long-format price CSV.
/// At most one request per ticker is in flight at a time.
class RemoteFetcher {
public:
    RemoteFetcher(std::shared_ptr<PriceSource> source, std::filesystem::path cache_dir)
        : source_(std::move(source)), cache_dir_(std::move(cache_dir)) {}

    std::filesystem::path cache_path(const std::string& ticker) const { return cache_dir_ / (ticker + ".csv"); }

    PriceSeries fetch(const std::string& ticker, Date start, Date end) {
        if (!(start < end)) throw InvalidArgument("fetch: start " + start.iso() + " must precede end " + end.iso());
        std::lock_guard lock(ticker_mutex(ticker));
        auto series = parse_history_response(ticker, source_->fetch_raw(ticker, start, end), start, end);
        const PriceSeries one[] = {series};
        write_csv(cache_path(ticker), one);
        return series;
    }

private:
    std::mutex& ticker_mutex(const std::string& ticker) {
        std::lock_guard lock(map_mutex_);
        return per_ticker_[ticker];
    }

    std::shared_ptr<PriceSource> source_;
    std::filesystem::path cache_dir_;
    std::mutex map_mutex_;
    std::map<std::string, std::mutex> per_ticker_;
};

inline PriceSeries fetch_remote(PriceSource& source, const std::string& ticker, Date start, Date end,
                                const std::filesystem::path& cache_dir) {
    RemoteFetcher fetcher(std::shared_ptr<PriceSource>(&source, [](PriceSource*) {}), cache_dir);
    return fetcher.fetch(ticker, start, end);
}

}  // namespace pfo
