#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "pfo/error.hpp"
#include "pfo/forecaster/lstm.hpp"
#include "pfo/io.hpp"

namespace pfo::forecast {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointFormat = "pfo.lstm-checkpoint";

inline nlohmann::json config_to_json(const ModelConfig& c) {
    return {{"lookback", c.lookback},         {"lstm_units", c.lstm_units},
            {"lstm_layers", c.lstm_layers},   {"dropout_rate", c.dropout_rate},
            {"dense_units", c.dense_units},   {"batch_size", c.batch_size},
            {"epochs", c.epochs},             {"huber_delta", c.huber_delta},
            {"learning_rate", c.learning_rate}, {"seed", c.seed},
            {"horizon", c.horizon},           {"train_fraction", c.train_fraction}};
}

inline ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.lookback = j.at("lookback").get<int>();
    c.lstm_units = j.at("lstm_units").get<int>();
    c.lstm_layers = j.at("lstm_layers").get<int>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.dense_units = j.at("dense_units").get<int>();
    c.batch_size = j.at("batch_size").get<int>();
    c.epochs = j.at("epochs").get<int>();
    c.huber_delta = j.at("huber_delta").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.horizon = j.at("horizon").get<int>();
    c.train_fraction = j.at("train_fraction").get<double>();
    return c;
}

/// Self-describing checkpoint: config, scaler and every tensor with its shape (row-major data).
inline nlohmann::json checkpoint_to_json(const LstmModel& model, const nlohmann::json& meta = nullptr) {
    nlohmann::json tensors = nlohmann::json::array();
    for (const auto& [name, t] : model.params.tensors()) {
        nlohmann::json data = nlohmann::json::array();
        for (Eigen::Index i = 0; i < t->rows(); ++i)
            for (Eigen::Index j = 0; j < t->cols(); ++j) data.push_back((*t)(i, j));
        tensors.push_back({{"name", name}, {"shape", {t->rows(), t->cols()}}, {"data", std::move(data)}});
    }
    nlohmann::json j = {{"format", kCheckpointFormat},
                        {"version", kCheckpointVersion},
                        {"config", config_to_json(model.config)},
                        {"scaler", {{"min", model.scaler.min}, {"max", model.scaler.max}}},
                        {"tensors", std::move(tensors)}};
    if (!meta.is_null()) j["meta"] = meta;
    return j;
}

inline LstmModel checkpoint_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kCheckpointFormat) throw DataError("checkpoint: unknown format");
        if (j.at("version").get<int>() != kCheckpointVersion)
            throw DataError("checkpoint: unsupported version " + j.at("version").dump());
        LstmModel m;
        m.config = config_from_json(j.at("config"));
        m.config.validate();
        m.scaler = {j.at("scaler").at("min").get<double>(), j.at("scaler").at("max").get<double>()};
        m.scaler.check();
        m.params = zero_params(m.config);
        const auto& tensors = j.at("tensors");
        auto expected = m.params.tensors();
        if (tensors.size() != expected.size()) throw DataError("checkpoint: tensor count does not match config");
        for (std::size_t k = 0; k < expected.size(); ++k) {
            const auto& tj = tensors[k];
            auto& [name, t] = expected[k];
            if (tj.at("name").get<std::string>() != name) throw DataError("checkpoint: expected tensor " + name);
            const auto rows = tj.at("shape").at(0).get<Eigen::Index>();
            const auto cols = tj.at("shape").at(1).get<Eigen::Index>();
            if (rows != t->rows() || cols != t->cols()) throw DataError("checkpoint: bad shape for " + name);
            const auto& data = tj.at("data");
            if (static_cast<Eigen::Index>(data.size()) != rows * cols)
                throw DataError("checkpoint: wrong element count for " + name);
            for (Eigen::Index i = 0; i < rows; ++i)
                for (Eigen::Index c = 0; c < cols; ++c)
                    (*t)(i, c) = data[static_cast<std::size_t>(i * cols + c)].get<double>();
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint: ") + e.what());
    }
}

inline void save_checkpoint(const std::filesystem::path& path, const LstmModel& model,
                            const nlohmann::json& meta = nullptr) {
    write_file_atomic(path, checkpoint_to_json(model, meta).dump(1) + "\n");
}

inline LstmModel load_checkpoint(const std::filesystem::path& path) {
    const auto text = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace pfo::forecast
