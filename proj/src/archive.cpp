#include "sbn/archive.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "sbn/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "archive weight blobs are little-endian");

namespace sbn {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    std::uint32_t crc = 0xFFFFFFFFu;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return crc ^ 0xFFFFFFFFu;
}

const char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const unsigned char* data, std::size_t len) {
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        const std::uint32_t b0 = data[i];
        const std::uint32_t b1 = i + 1 < len ? data[i + 1] : 0;
        const std::uint32_t b2 = i + 2 < len ? data[i + 2] : 0;
        const std::uint32_t triple = (b0 << 16) | (b1 << 8) | b2;
        out.push_back(kB64Alphabet[(triple >> 18) & 0x3F]);
        out.push_back(kB64Alphabet[(triple >> 12) & 0x3F]);
        out.push_back(i + 1 < len ? kB64Alphabet[(triple >> 6) & 0x3F] : '=');
        out.push_back(i + 2 < len ? kB64Alphabet[triple & 0x3F] : '=');
    }
    return out;
}

std::vector<unsigned char> base64_decode(const std::string& text) {
    std::array<int, 256> rev;
    rev.fill(-1);
    for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(kB64Alphabet[i])] = i;

    std::vector<unsigned char> out;
    out.reserve(text.size() / 4 * 3);
    std::uint32_t acc = 0;
    int bits = 0;
    for (const char c : text) {
        if (c == '=') break;
        const int v = rev[static_cast<unsigned char>(c)];
        if (v < 0) throw DataError("weights.data: invalid base64 character");
        acc = (acc << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<unsigned char>((acc >> bits) & 0xFFu));
        }
    }
    return out;
}

const char* activation_name(Activation a) {
    return a == Activation::relu ? "relu" : "linear";
}

Activation activation_from(const std::string& name, const std::string& field) {
    if (name == "relu") return Activation::relu;
    if (name == "linear") return Activation::linear;
    throw DataError("archive field '" + field + "': unknown activation '" + name + "'");
}

json layer_to_json(const DenseLayer& layer) {
    return json{{"in_dim", layer.in_dim},
                {"out_dim", layer.out_dim},
                {"activation", activation_name(layer.activation)},
                {"dropout_rate", layer.dropout_rate}};
}

DenseLayer layer_from_json(const json& j, const std::string& field) {
    try {
        DenseLayer layer(j.at("in_dim").get<std::size_t>(), j.at("out_dim").get<std::size_t>(),
                         activation_from(j.at("activation").get<std::string>(), field),
                         j.at("dropout_rate").get<double>());
        return layer;
    } catch (const json::exception& e) {
        throw DataError("archive field '" + field + "': " + e.what());
    }
}

StageKind stage_kind_from(const std::string& name) {
    if (name == "weekly") return StageKind::weekly;
    if (name == "daily") return StageKind::daily;
    if (name == "hourly") return StageKind::hourly;
    throw DataError("archive field 'stages.kind': unknown kind '" + name + "'");
}

} // namespace

std::string serialize_model(const SbnModel& model, const TrainConfig* train_cfg) {
    json j;
    j["format_version"] = kFormatVersion;

    json instant;
    instant["temp_reducer"] = layer_to_json(model.instant.temp_reducer);
    json head = json::array();
    for (const auto& l : model.instant.head.layers) head.push_back(layer_to_json(l));
    instant["head"] = head;

    json stages = json::array();
    for (const auto& s : model.stages) {
        json net = json::array();
        for (const auto& l : s.net.layers) net.push_back(layer_to_json(l));
        stages.push_back(json{{"kind", stage_kind_name(s.kind)},
                              {"period_hours", s.period_hours()},
                              {"n_inputs", s.n_inputs},
                              {"net", net}});
    }

    j["model"] = json{{"instant", instant},
                      {"stages", stages},
                      {"loss_weight_earlier", model.loss_weight_earlier},
                      {"loss_weight_final", model.loss_weight_final},
                      {"parameter_count", model.parameter_count()},
                      {"layer_count", model.layer_count()}};

    j["normalizer"] = json{{"energy_mean", model.normalizer.energy_mean},
                           {"energy_std", model.normalizer.energy_std},
                           {"temp_mean", model.normalizer.temp_mean},
                           {"temp_std", model.normalizer.temp_std}};

    if (train_cfg) {
        j["training"] = json{{"mode", train_mode_name(train_cfg->mode)},
                             {"loss_weight_final", train_cfg->loss_weight_final},
                             {"loss_weight_earlier", train_cfg->loss_weight_earlier},
                             {"base_lr", train_cfg->base_lr},
                             {"batch_size", train_cfg->batch_size},
                             {"epochs", train_cfg->epochs},
                             {"reference_epoch_decay", train_cfg->reference_epoch_decay},
                             {"reference_batches_per_epoch", train_cfg->reference_batches_per_epoch},
                             {"seed", train_cfg->seed},
                             {"detach_historical_residuals",
                              train_cfg->detach_historical_residuals}};
    }

    std::vector<double> flat;
    flat.reserve(model.parameter_count());
    visit_layers(model, [&](const DenseLayer& layer) {
        flat.insert(flat.end(), layer.weights.begin(), layer.weights.end());
        flat.insert(flat.end(), layer.bias.begin(), layer.bias.end());
    });
    const auto* bytes = reinterpret_cast<const unsigned char*>(flat.data());
    const std::size_t n_bytes = flat.size() * sizeof(double);
    char crc_hex[16];
    std::snprintf(crc_hex, sizeof crc_hex, "%08x", crc32(bytes, n_bytes));
    j["weights"] = json{{"encoding", "base64/float64-le"},
                        {"order", "per layer [weights row-major, bias]; instant.temp_reducer, "
                                  "instant.head, stages in stacking order"},
                        {"data", base64_encode(bytes, n_bytes)},
                        {"crc32", crc_hex}};

    return j.dump(2) + "\n";
}

SbnModel parse_model(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("archive is not valid JSON: ") + e.what());
    }

    try {
        const int version = j.at("format_version").get<int>();
        if (version != kFormatVersion)
            throw DataError("archive field 'format_version': got " + std::to_string(version) +
                            ", expected " + std::to_string(kFormatVersion));

        SbnModel model;
        const json& jm = j.at("model");
        model.instant.temp_reducer =
            layer_from_json(jm.at("instant").at("temp_reducer"), "instant.temp_reducer");
        for (const auto& jl : jm.at("instant").at("head"))
            model.instant.head.layers.push_back(layer_from_json(jl, "instant.head"));
        for (const auto& js : jm.at("stages")) {
            BoosterStage stage;
            stage.kind = stage_kind_from(js.at("kind").get<std::string>());
            stage.n_inputs = js.at("n_inputs").get<int>();
            for (const auto& jl : js.at("net"))
                stage.net.layers.push_back(layer_from_json(jl, "stages.net"));
            if (stage.net.layers.empty() ||
                stage.net.layers.front().in_dim != static_cast<std::size_t>(stage.n_inputs))
                throw DataError("archive field 'stages.net': first layer in_dim != n_inputs");
            model.stages.push_back(std::move(stage));
        }
        model.loss_weight_earlier = jm.at("loss_weight_earlier").get<double>();
        model.loss_weight_final = jm.at("loss_weight_final").get<double>();

        if (model.instant.temp_reducer.in_dim != kTempWindowHours ||
            model.instant.temp_reducer.out_dim != 1)
            throw DataError("archive field 'instant.temp_reducer': expected a 12->1 layer");
        auto check_chain = [](const DenseNet& net, const std::string& field) {
            for (std::size_t i = 0; i + 1 < net.layers.size(); ++i)
                if (net.layers[i].out_dim != net.layers[i + 1].in_dim)
                    throw DataError("archive field '" + field + "': layer dims do not chain");
        };
        check_chain(model.instant.head, "instant.head");
        for (const auto& s : model.stages) check_chain(s.net, "stages.net");

        const json& jn = j.at("normalizer");
        model.normalizer.energy_mean = jn.at("energy_mean").get<double>();
        model.normalizer.energy_std = jn.at("energy_std").get<double>();
        model.normalizer.temp_mean = jn.at("temp_mean").get<double>();
        model.normalizer.temp_std = jn.at("temp_std").get<double>();

        const json& jw = j.at("weights");
        const std::size_t expected = jm.at("parameter_count").get<std::size_t>();
        if (model.parameter_count() != expected)
            throw DataError("archive field 'model.parameter_count': " + std::to_string(expected) +
                            " does not match layer shapes (" +
                            std::to_string(model.parameter_count()) + ")");
        const auto bytes = base64_decode(jw.at("data").get<std::string>());
        if (bytes.size() != expected * sizeof(double))
            throw DataError("archive field 'weights.data': blob holds " +
                            std::to_string(bytes.size() / sizeof(double)) + " values, expected " +
                            std::to_string(expected));
        char crc_hex[16];
        std::snprintf(crc_hex, sizeof crc_hex, "%08x", crc32(bytes.data(), bytes.size()));
        if (jw.at("crc32").get<std::string>() != crc_hex)
            throw DataError("archive field 'weights.crc32': checksum mismatch");

        std::vector<double> flat(expected);
        std::memcpy(flat.data(), bytes.data(), bytes.size());
        std::size_t offset = 0;
        visit_layers(model, [&](DenseLayer& layer) {
            std::memcpy(layer.weights.data(), flat.data() + offset,
                        layer.weights.size() * sizeof(double));
            offset += layer.weights.size();
            std::memcpy(layer.bias.data(), flat.data() + offset, layer.bias.size() * sizeof(double));
            offset += layer.bias.size();
        });
        return model;
    } catch (const json::exception& e) {
        throw DataError(std::string("archive is missing a field: ") + e.what());
    }
}

void save_model(const SbnModel& model, const std::string& path, const TrainConfig* train_cfg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << serialize_model(model, train_cfg);
    if (!out) throw DataError("write failed for '" + path + "'");
}

SbnModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_model(buf.str());
}

} // namespace sbn
