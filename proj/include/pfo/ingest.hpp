#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <Eigen/Dense>

#include "pfo/date.hpp"
#include "pfo/error.hpp"
#include "pfo/io.hpp"

namespace pfo {

struct PriceBar {
    Date date;
    double close = 0.0;

    bool operator==(const PriceBar&) const = default;
};

/// Dated closes for one instrument, strictly increasing by date.
struct PriceSeries {
    std::string ticker;
    std::vector<PriceBar> bars;

    std::size_t size() const { return bars.size(); }

    std::vector<double> closes() const {
        std::vector<double> out;
        out.reserve(bars.size());
        for (const auto& b : bars) out.push_back(b.close);
        return out;
    }

    std::vector<Date> dates() const {
        std::vector<Date> out;
        out.reserve(bars.size());
        for (const auto& b : bars) out.push_back(b.date);
        return out;
    }

    /// Throws DataError unless closes are positive and dates strictly increasing.
    void validate() const {
        if (ticker.empty()) throw DataError("price series has an empty ticker");
        for (std::size_t i = 0; i < bars.size(); ++i) {
            if (!(bars[i].close > 0.0) || !std::isfinite(bars[i].close))
                throw DataError(ticker + ": non-positive close on " + bars[i].date.iso());
            if (i > 0 && !(bars[i - 1].date < bars[i].date))
                throw DataError(ticker + ": dates not strictly increasing at " + bars[i].date.iso());
        }
    }

    bool operator==(const PriceSeries&) const = default;
};

/// n tickers on a common date axis; closes is n x T.
struct AlignedPanel {
    std::vector<std::string> tickers;
    std::vector<Date> dates;
    Eigen::MatrixXd closes;

    PriceSeries row(std::size_t i) const {
        PriceSeries s{tickers.at(i), {}};
        s.bars.reserve(dates.size());
        for (std::size_t t = 0; t < dates.size(); ++t)
            s.bars.push_back({dates[t], closes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t))});
        return s;
    }
};

/// A rejected CSV row in lenient loading mode.
struct RowDiagnostic {
    std::size_t line = 0;
    std::string message;
};

inline constexpr std::string_view kPriceCsvHeader = "date,ticker,close";

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline bool parse_double(std::string_view s, double& out) {
    if (s.empty() || s.front() == '+') return false;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, out, std::chars_format::fixed);
    return ec == std::errc{} && ptr == end && std::isfinite(out);
}

inline bool valid_ticker(std::string_view t) {
    if (t.empty()) return false;
    return std::none_of(t.begin(), t.end(), [](char c) {
        return c == ' ' || c == '\t' || c == '"' || static_cast<unsigned char>(c) < 0x20;
    });
}

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

/// Parse the long-format price CSV. With `rejected == nullptr` the first bad row throws
/// RowError; otherwise bad rows are skipped and recorded. Header problems always throw.
inline std::vector<PriceSeries> read_price_csv(std::istream& in, std::vector<RowDiagnostic>* rejected = nullptr) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("empty price CSV (missing header)");
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    detail::strip_cr(line);
    if (line != kPriceCsvHeader)
        throw RowError(1, "malformed header '" + line + "' (expected '" + std::string(kPriceCsvHeader) + "')");

    std::vector<std::string> order;
    std::map<std::string, std::vector<PriceBar>> by_ticker;
    std::size_t lineno = 1;

    auto reject = [&](std::size_t ln, const std::string& msg) {
        if (!rejected) throw RowError(ln, msg);
        rejected->push_back({ln, msg});
    };

    while (std::getline(in, line)) {
        ++lineno;
        detail::strip_cr(line);
        if (line.empty()) continue;
        const auto fields = detail::split_commas(line);
        if (fields.size() != 3) {
            reject(lineno, "expected 3 fields, got " + std::to_string(fields.size()));
            continue;
        }
        const auto date = try_parse_date(fields[0]);
        if (!date) {
            reject(lineno, "unparsable date '" + std::string(fields[0]) + "'");
            continue;
        }
        if (!detail::valid_ticker(fields[1])) {
            reject(lineno, "invalid ticker '" + std::string(fields[1]) + "'");
            continue;
        }
        double close = 0.0;
        if (!detail::parse_double(fields[2], close)) {
            reject(lineno, "unparsable close '" + std::string(fields[2]) + "'");
            continue;
        }
        if (close <= 0.0) {
            reject(lineno, "non-positive close " + std::string(fields[2]));
            continue;
        }
        std::string ticker(fields[1]);
        auto [it, inserted] = by_ticker.try_emplace(ticker);
        if (inserted) order.push_back(ticker);
        it->second.push_back({*date, close});
    }

    std::vector<PriceSeries> out;
    out.reserve(order.size());
    for (const auto& t : order) {
        auto bars = std::move(by_ticker[t]);
        std::stable_sort(bars.begin(), bars.end(), [](const PriceBar& a, const PriceBar& b) { return a.date < b.date; });
        for (std::size_t i = 1; i < bars.size(); ++i)
            if (bars[i].date == bars[i - 1].date)
                throw DataError(t + ": duplicate date " + bars[i].date.iso());
        out.push_back({t, std::move(bars)});
    }
    return out;
}

inline std::vector<PriceSeries> load_csv(const std::filesystem::path& path,
                                         std::vector<RowDiagnostic>* rejected = nullptr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open price file " + path.string());
    try {
        return read_price_csv(in, rejected);
    } catch (const RowError& e) {
        throw RowError(e.line(), e.detail(), path.string());
    }
}

/// Decimal with at most 6 fractional digits, trailing zeros trimmed ("596", "600.5").
inline std::string format_close(double close) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", close);
    std::string s(buf);
    const auto dot = s.find('.');
    if (dot != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

/// Emit series in the given order, each in date order.
inline void write_price_csv(std::ostream& out, std::span<const PriceSeries> series) {
    out << kPriceCsvHeader << '\n';
    for (const auto& s : series)
        for (const auto& b : s.bars) out << b.date.iso() << ',' << s.ticker << ',' << format_close(b.close) << '\n';
}

inline std::string price_csv_string(std::span<const PriceSeries> series) {
    std::ostringstream os;
    write_price_csv(os, series);
    return os.str();
}

inline void write_csv(const std::filesystem::path& path, std::span<const PriceSeries> series) {
    write_file_atomic(path, price_csv_string(series));
}

/// Bars with from <= date <= to.
inline PriceSeries slice(const PriceSeries& s, Date from, Date to) {
    PriceSeries out{s.ticker, {}};
    for (const auto& b : s.bars)
        if (!(b.date < from) && !(to < b.date)) out.bars.push_back(b);
    return out;
}

/// First bar dated on or after `d`; DataError if none.
inline const PriceBar& bar_on_or_after(const PriceSeries& s, Date d) {
    auto it = std::lower_bound(s.bars.begin(), s.bars.end(), d,
                               [](const PriceBar& b, Date x) { return b.date < x; });
    if (it == s.bars.end()) throw DataError(s.ticker + ": no price on or after " + d.iso());
    return *it;
}

inline constexpr int kMaxForwardFillDays = 5;

/// Common-date panel. Interior gaps of at most `max_fill_days` calendar days are filled with the
/// previous close; dates still missing from any series are dropped.
inline AlignedPanel align(std::span<const PriceSeries> series, int max_fill_days = kMaxForwardFillDays) {
    if (series.empty()) throw DataError("align: no series given");
    std::unordered_set<std::string> seen;
    for (const auto& s : series) {
        if (!seen.insert(s.ticker).second) throw DataError("align: duplicate ticker " + s.ticker);
        s.validate();
        if (s.bars.empty()) throw DataError("align: series " + s.ticker + " is empty");
    }

    std::set<Date> all_dates;
    for (const auto& s : series)
        for (const auto& b : s.bars) all_dates.insert(b.date);

    const std::vector<Date> axis_all(all_dates.begin(), all_dates.end());
    std::vector<std::vector<double>> filled(series.size(), std::vector<double>(axis_all.size(), 0.0));
    std::vector<bool> keep(axis_all.size(), true);

    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& bars = series[i].bars;
        std::size_t k = 0;  // index of the latest bar with date <= axis date
        for (std::size_t t = 0; t < axis_all.size(); ++t) {
            const Date d = axis_all[t];
            while (k + 1 < bars.size() && !(d < bars[k + 1].date)) ++k;
            if (bars[k].date == d) {
                filled[i][t] = bars[k].close;
            } else if (bars[k].date < d && k + 1 < bars.size() && bars[k].date.days_until(d) <= max_fill_days) {
                filled[i][t] = bars[k].close;
            } else {
                keep[t] = false;
            }
        }
    }

    AlignedPanel panel;
    for (const auto& s : series) panel.tickers.push_back(s.ticker);
    std::vector<std::size_t> cols;
    for (std::size_t t = 0; t < axis_all.size(); ++t)
        if (keep[t]) cols.push_back(t);
    if (cols.empty()) throw DataError("align: empty date intersection");

    panel.closes.resize(static_cast<Eigen::Index>(series.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
        panel.dates.push_back(axis_all[cols[c]]);
        for (std::size_t i = 0; i < series.size(); ++i)
            panel.closes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = filled[i][cols[c]];
    }
    return panel;
}

}  // namespace pfo
