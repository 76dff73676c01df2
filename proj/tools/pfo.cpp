// pfo: sector portfolio construction, LSTM price forecasting and hold-out backtesting.
//
//   pfo --config run.toml --out out/ ingest
//   pfo --config run.toml --out out/ stats | frontier | optimize | train | predict | backtest
//   pfo summary out/a/backtest.json out/b/backtest.json -o summary.csv
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric/runtime error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "pfo/config_file.hpp"
#include "pfo/pfo.hpp"

namespace fs = std::filesystem;
using namespace pfo;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

struct Context {
    RunConfig cfg;
    fs::path out;

    fs::path prices() const { return out / "prices.csv"; }
    fs::path portfolio() const { return out / "portfolio.json"; }
    fs::path models() const { return out / "models"; }
    fs::path predicted() const { return out / "predicted.csv"; }

    ojson meta(const std::string& command) const {
        return {{"command", command}, {"config_hash", cfg.hash()}, {"seed", cfg.seed}};
    }

    /// Write a text output plus a `<name>.meta.json` sidecar carrying provenance.
    void write_with_sidecar(const fs::path& path, const std::string& body, const std::string& command) const {
        write_file_atomic(path, body);
        write_file_atomic(fs::path(path.string() + ".meta.json"), meta(command).dump(2) + "\n");
    }

    void write_json_output(const fs::path& path, ojson j, const std::string& command) const {
        j["meta"] = meta(command);
        write_file_atomic(path, j.dump(2) + "\n");
    }
};

void require_artifact(const fs::path& path, const std::string& producer) {
    if (!fs::exists(path))
        throw DataError("missing " + path.string() + "; run `pfo " + producer + "` first");
}

/// Configured tickers from the ingested price file, in configured order.
std::vector<PriceSeries> load_universe(const Context& ctx) {
    require_artifact(ctx.prices(), "ingest");
    auto all = load_csv(ctx.prices());
    std::vector<PriceSeries> out;
    for (const auto& t : ctx.cfg.tickers) {
        auto it = std::find_if(all.begin(), all.end(), [&](const PriceSeries& s) { return s.ticker == t; });
        if (it == all.end()) throw DataError(ctx.prices().string() + " has no prices for " + t);
        out.push_back(*it);
    }
    return out;
}

std::vector<PriceSeries> training_slice(const Context& ctx, const std::vector<PriceSeries>& universe) {
    std::vector<PriceSeries> out;
    for (const auto& s : universe) out.push_back(slice(s, ctx.cfg.train_start, ctx.cfg.train_end));
    return out;
}

struct TrainingStats {
    ReturnMatrix returns;
    std::vector<StockStats> stats;
    CovarianceMatrix daily_cov;
    CovarianceMatrix correlation;
    Eigen::VectorXd expected;
};

TrainingStats compute_training_stats(const Context& ctx) {
    const auto universe = training_slice(ctx, load_universe(ctx));
    const auto panel = align(universe);
    TrainingStats ts;
    ts.returns = return_matrix(panel);
    for (Eigen::Index i = 0; i < ts.returns.values.rows(); ++i)
        ts.stats.push_back(stock_stats(row_series(ts.returns, i), ctx.cfg.annual_return_method));
    ts.daily_cov = covariance_matrix(ts.returns);
    ts.correlation = correlation_matrix(ts.returns);
    ts.expected.resize(static_cast<Eigen::Index>(ts.stats.size()));
    for (std::size_t i = 0; i < ts.stats.size(); ++i) ts.expected(static_cast<Eigen::Index>(i)) = ts.stats[i].annual_return;
    return ts;
}

FrontierResult run_frontier(const Context& ctx, const TrainingStats& ts) {
    FrontierOptions opt;
    opt.samples = ctx.cfg.samples;
    opt.risk_free = ctx.cfg.risk_free;
    opt.seed = ctx.cfg.seed;
    opt.threads = ctx.cfg.threads;
    return monte_carlo_frontier(ts.expected, annualize_covariance(ts.daily_cov), opt);
}

// --- subcommands ---------------------------------------------------------------------------------

void cmd_ingest(const Context& ctx) {
    const auto& c = ctx.cfg;
    std::vector<PriceSeries> series;
    if (c.source == "csv") {
        std::vector<RowDiagnostic> rejected;
        auto all = load_csv(c.prices_path, &rejected);
        for (const auto& r : rejected) std::cerr << c.prices_path << ": line " << r.line << ": " << r.message << "\n";
        for (const auto& t : c.tickers) {
            auto it = std::find_if(all.begin(), all.end(), [&](const PriceSeries& s) { return s.ticker == t; });
            if (it == all.end()) throw DataError(c.prices_path + " has no prices for " + t);
            series.push_back(slice(*it, c.train_start, c.horizon.plus_days(7)));
        }
    } else {
        std::shared_ptr<PriceSource> source;
        if (c.source == "remote") source = std::make_shared<HttpPriceSource>(c.remote_url);
        else source = std::make_shared<RecordedPriceSource>(c.recorded_dir);
        RemoteFetcher fetcher(source, ctx.out / "cache");
        for (const auto& t : c.tickers) series.push_back(fetcher.fetch(t, c.train_start, c.horizon.plus_days(7)));
    }
    for (const auto& s : series) {
        s.validate();
        std::cout << fmt::format("{}: {} bars {}..{}\n", s.ticker, s.size(), s.bars.front().date.iso(),
                                 s.bars.back().date.iso());
    }
    ctx.write_with_sidecar(ctx.prices(), price_csv_string(series), "ingest");
}

void cmd_stats(const Context& ctx) {
    const auto ts = compute_training_stats(ctx);
    ctx.write_with_sidecar(ctx.out / "stats.csv", stats_csv(ts.stats), "stats");
    ctx.write_with_sidecar(ctx.out / "covariance.csv", matrix_csv(ts.daily_cov), "stats");
    ctx.write_with_sidecar(ctx.out / "correlation.csv", matrix_csv(ts.correlation), "stats");
    std::cout << stats_csv(ts.stats);
}

void cmd_frontier(const Context& ctx) {
    const auto ts = compute_training_stats(ctx);
    const auto fr = run_frontier(ctx, ts);
    ctx.write_with_sidecar(ctx.out / "frontier.csv", frontier_csv(fr, ctx.cfg.tickers), "frontier");
    std::cout << fmt::format("{} candidates, {} on the efficient frontier\n", fr.candidates.size(),
                             efficient_frontier(fr).size());
}

void cmd_optimize(const Context& ctx) {
    const auto ts = compute_training_stats(ctx);
    const auto annual_cov = annualize_covariance(ts.daily_cov);
    const auto fr = run_frontier(ctx, ts);
    const auto& tickers = ctx.cfg.tickers;
    const auto eq = evaluate_candidate(0, equal_weight(tickers.size()), ts.expected, annual_cov.values,
                                       ctx.cfg.risk_free);
    ojson j = {{"name", ctx.cfg.name},
               {"tickers", tickers},
               {"samples", ctx.cfg.samples},
               {"risk_free", ctx.cfg.risk_free},
               {"equal_weight", portfolio_entry_json(eq, tickers)},
               {"min_risk", portfolio_entry_json(min_risk_portfolio(fr), tickers)},
               {"opt_risk", portfolio_entry_json(max_sharpe_portfolio(fr), tickers)}};
    j["equal_weight"].erase("sample_id");
    ctx.write_json_output(ctx.portfolio(), j, "optimize");
    std::cout << fmt::format("{:<8}{:>10}{:>10}\n", "Stock", "Min Risk", "Opt Risk");
    const auto& mn = min_risk_portfolio(fr);
    const auto& op = max_sharpe_portfolio(fr);
    for (std::size_t i = 0; i < tickers.size(); ++i)
        std::cout << fmt::format("{:<8}{:>10.4f}{:>10.4f}\n", tickers[i], mn.weights[static_cast<Eigen::Index>(i)],
                                 op.weights[static_cast<Eigen::Index>(i)]);
    std::cout << fmt::format("{:<18}{:>10.2f}{:>10.2f}\n", "Annual Return (%)", mn.annual_return * 100,
                             op.annual_return * 100);
    std::cout << fmt::format("{:<18}{:>10.2f}{:>10.2f}\n", "Annual Risk (%)", mn.annual_vol * 100, op.annual_vol * 100);
}

forecast::ModelConfig model_config(const Context& ctx) {
    auto m = ctx.cfg.model;
    m.seed = ctx.cfg.seed;
    return m;
}

void cmd_train(const Context& ctx) {
    const auto universe = training_slice(ctx, load_universe(ctx));
    const auto mc = model_config(ctx);
    for (const auto& s : universe) {
        const auto data = forecast::window(s, mc.lookback, mc.train_fraction, mc.horizon);
        const auto result = forecast::train(data, mc);
        const auto& last = result.history.epochs.back();
        const double range = result.model.scaler.max - result.model.scaler.min;
        ojson meta = ctx.meta("train");
        meta["ticker"] = s.ticker;
        meta["final_metrics"] = {{"train_loss", last.train_loss},
                                 {"train_mae_scaled", last.train_mae},
                                 {"train_mae_price", last.train_mae * range},
                                 {"val_loss", last.val_loss},
                                 {"val_mae_scaled", last.val_mae},
                                 {"val_mae_price", last.val_mae * range}};
        forecast::save_checkpoint(ctx.models() / (s.ticker + ".json"), result.model, meta);
        ctx.write_with_sidecar(ctx.models() / (s.ticker + ".history.csv"), history_csv(result.history), "train");
        std::cout << fmt::format("{}: {} epochs, train MAE {:.5f} ({:.3f} price), val MAE {:.5f} ({:.3f} price)\n",
                                 s.ticker, last.epoch, last.train_mae, last.train_mae * range, last.val_mae,
                                 last.val_mae * range);
    }
}

/// Last `lookback` closes strictly before `before`.
std::vector<double> window_before(const PriceSeries& s, Date before, int lookback) {
    std::vector<double> closes;
    for (const auto& b : s.bars)
        if (b.date < before) closes.push_back(b.close);
    if (static_cast<int>(closes.size()) < lookback)
        throw DataError(s.ticker + ": only " + std::to_string(closes.size()) + " closes before " + before.iso() +
                        ", need " + std::to_string(lookback));
    return {closes.end() - lookback, closes.end()};
}

Date next_weekday(Date d) {
    do d = d.plus_days(1);
    while (d.is_weekend());
    return d;
}

struct PredictArgs {
    std::string model;
    std::string window;
    std::string date;
};

void cmd_predict(const Context* ctx, const PredictArgs& args) {
    std::string body = predicted_csv_header();
    if (!args.model.empty()) {
        if (args.window.empty()) throw ConfigError("--window", "required together with --model");
        const auto model = forecast::load_checkpoint(args.model);
        const auto series = load_csv(args.window);
        if (series.size() != 1) throw DataError(args.window + ": expected prices for exactly one ticker");
        const auto& s = series.front();
        const Date date = args.date.empty() ? next_weekday(s.bars.back().date) : parse_date(args.date);
        const auto closes = window_before(s, date, model.config.lookback);
        body += fmt::format("{},{},{}\n", s.ticker, date.iso(), format_close(forecast::predict_next(model, closes)));
        std::cout << body;
        return;
    }
    if (!ctx) throw ConfigError("--config", "predict needs --config or --model/--window");
    const auto universe = load_universe(*ctx);
    for (const auto& s : universe) {
        const auto path = ctx->models() / (s.ticker + ".json");
        require_artifact(path, "train");
        const auto model = forecast::load_checkpoint(path);
        const Date target = ctx->cfg.horizon;
        const auto closes = window_before(s, target, model.config.lookback);
        body += fmt::format("{},{},{}\n", s.ticker, target.iso(), format_close(forecast::predict_next(model, closes)));
    }
    ctx->write_with_sidecar(ctx->predicted(), body, "predict");
    std::cout << body;
}

struct BacktestArgs {
    std::string portfolio;
    std::string entry;
    std::string horizon;
    std::string predicted;
};

PriceMap prices_on_or_after(const std::vector<PriceSeries>& universe, Date d, std::string& csv) {
    PriceMap out;
    csv = std::string(kPriceCsvHeader) + "\n";
    for (const auto& s : universe) {
        const auto& bar = bar_on_or_after(s, d);
        out[s.ticker] = bar.close;
        csv += bar.date.iso() + "," + s.ticker + "," + format_close(bar.close) + "\n";
    }
    return out;
}

void cmd_backtest(const Context& ctx, const BacktestArgs& args) {
    const fs::path portfolio_path = args.portfolio.empty() ? ctx.portfolio() : fs::path(args.portfolio);
    require_artifact(portfolio_path, "optimize");
    const auto pj = nlohmann::json::parse(read_file(portfolio_path));
    const auto pw = read_portfolio_weights(pj, ctx.cfg.invest_in);

    PriceMap entry, horizon;
    if (args.entry.empty() || args.horizon.empty()) {
        const auto universe = load_universe(ctx);
        std::string csv;
        if (args.entry.empty()) {
            entry = prices_on_or_after(universe, ctx.cfg.holdout_start, csv);
            ctx.write_with_sidecar(ctx.out / "entry_prices.csv", csv, "backtest");
        }
        if (args.horizon.empty()) {
            horizon = prices_on_or_after(universe, ctx.cfg.horizon, csv);
            ctx.write_with_sidecar(ctx.out / "horizon_prices.csv", csv, "backtest");
        }
    }
    if (!args.entry.empty()) entry = load_price_points(args.entry);
    if (!args.horizon.empty()) horizon = load_price_points(args.horizon);

    std::optional<PriceMap> predicted;
    const fs::path pred_path = args.predicted.empty() ? ctx.predicted() : fs::path(args.predicted);
    if (!args.predicted.empty() || fs::exists(pred_path)) predicted = load_price_points(pred_path);

    const std::string name = pj.value("name", ctx.cfg.name);
    const auto report = run_backtest(ctx.cfg.capital, pw.tickers, pw.weights, entry, horizon, predicted, name);
    ctx.write_json_output(ctx.out / "backtest.json", report_to_json(report), "backtest");
    const auto table = format_report_table(report);
    ctx.write_with_sidecar(ctx.out / "backtest.txt", table, "backtest");
    std::cout << table;
}

void cmd_summary(const std::vector<std::string>& paths, const std::string& out) {
    std::vector<BacktestReport> reports;
    for (const auto& p : paths) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(p));
        } catch (const nlohmann::json::exception& e) {
            throw DataError(p + ": " + e.what());
        }
        reports.push_back(report_from_json(j));
    }
    const auto rows = summary(reports);
    const auto csv = summary_csv(rows);
    if (!out.empty()) {
        // No run config here; provenance is the hash of the input reports.
        std::string inputs;
        for (const auto& p : paths) inputs += read_file(p);
        const ojson meta = {{"command", "summary"}, {"inputs", paths}, {"inputs_hash", hex64(fnv1a64(inputs))}};
        write_file_atomic(out, csv);
        write_file_atomic(out + ".meta.json", meta.dump(2) + "\n");
    }
    std::cout << csv;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sector portfolio optimization, LSTM forecasting and hold-out backtesting"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "Run configuration file (TOML-style sections)");
    app.add_option("--seed", seed, "Override the configured RNG seed");
    app.add_option("--out", out_dir, "Output directory for artifacts")->capture_default_str();
    app.add_option("--set", overrides, "Override a setting, e.g. --set optimizer.samples=2000");

    std::map<std::string, CLI::App*> subs;
    for (const char* name : {"ingest", "stats", "frontier", "optimize", "train", "predict", "backtest", "summary"})
        subs[name] = app.add_subcommand(name);
    subs["ingest"]->description("Load or fetch prices for the configured tickers into <out>/prices.csv");
    subs["stats"]->description("Per-stock volatility/return statistics, covariance and correlation");
    subs["frontier"]->description("Monte Carlo portfolio samples as CSV");
    subs["optimize"]->description("Equal-weight, minimum-risk and optimum-risk portfolios as JSON");
    subs["train"]->description("Train one LSTM per ticker; writes checkpoints and loss history");
    subs["predict"]->description("Predict next-day closes");
    subs["backtest"]->description("Value the invested portfolio at the horizon date");
    subs["summary"]->description("Aggregate backtest reports into a summary CSV");

    PredictArgs predict_args;
    subs["predict"]->add_option("--model", predict_args.model, "Checkpoint to use instead of <out>/models");
    subs["predict"]->add_option("--window", predict_args.window, "Price CSV supplying the input window");
    subs["predict"]->add_option("--date", predict_args.date, "Date being predicted (default: next weekday)");

    BacktestArgs bt;
    subs["backtest"]->add_option("--portfolio", bt.portfolio, "Portfolio JSON from `optimize`");
    subs["backtest"]->add_option("--entry", bt.entry, "Entry-price CSV");
    subs["backtest"]->add_option("--horizon", bt.horizon, "Horizon-price CSV");
    subs["backtest"]->add_option("--predicted", bt.predicted, "Predicted-price CSV from `predict`");

    std::vector<std::string> reports;
    std::string summary_out;
    subs["summary"]->add_option("reports", reports, "Backtest report JSON files")->required();
    subs["summary"]->add_option("-o,--output", summary_out, "Write the CSV here as well as to stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (subs["summary"]->parsed()) {
            cmd_summary(reports, summary_out);
            return 0;
        }
        const bool standalone_predict =
            subs["predict"]->parsed() && !predict_args.model.empty() && config_path.empty();
        if (standalone_predict) {
            cmd_predict(nullptr, predict_args);
            return 0;
        }

        if (config_path.empty()) throw ConfigError("--config", "a configuration file is required");
        Context ctx;
        ctx.cfg = load_run_config(config_path);
        for (const auto& o : overrides) apply_override(ctx.cfg, o);
        if (seed) ctx.cfg.seed = *seed;
        ctx.cfg.validate();
        ctx.out = out_dir;

        if (subs["ingest"]->parsed()) cmd_ingest(ctx);
        else if (subs["stats"]->parsed()) cmd_stats(ctx);
        else if (subs["frontier"]->parsed()) cmd_frontier(ctx);
        else if (subs["optimize"]->parsed()) cmd_optimize(ctx);
        else if (subs["train"]->parsed()) cmd_train(ctx);
        else if (subs["predict"]->parsed()) cmd_predict(&ctx, predict_args);
        else if (subs["backtest"]->parsed()) cmd_backtest(ctx, bt);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const InvalidArgument& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}
