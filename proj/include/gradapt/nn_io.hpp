#pragma once

// JSON checkpoint round-trip for networks. Kept out of nn.hpp so hot
// translation units do not pull the JSON header.

#include <fstream>
#include <string>

#include <json.hpp>

#include "gradapt/nn.hpp"

namespace gradapt {

inline nlohmann::json layers_to_json(const std::vector<DenseLayer<float>>& layers) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : layers) {
        nlohmann::json jl;
        jl["in"] = l.in_dim();
        jl["out"] = l.out_dim();
        jl["act"] = act_name(l.act);
        jl["w"] = l.w.data;
        jl["b"] = l.b;
        arr.push_back(std::move(jl));
    }
    return arr;
}

inline std::vector<DenseLayer<float>> layers_from_json(const nlohmann::json& arr) {
    std::vector<DenseLayer<float>> layers;
    for (const auto& jl : arr) {
        DenseLayer<float> l;
        const int in = jl.at("in").get<int>();
        const int out = jl.at("out").get<int>();
        if (in < 1 || out < 1) throw ConfigError("checkpoint layer has nonpositive dimension");
        l.w = MatF(out, in);
        l.w.data = jl.at("w").get<std::vector<float>>();
        if (static_cast<int>(l.w.data.size()) != in * out) throw ConfigError("checkpoint weight count mismatch");
        l.b = jl.at("b").get<std::vector<float>>();
        if (static_cast<int>(l.b.size()) != out) throw ConfigError("checkpoint bias count mismatch");
        l.act = act_from_name(jl.at("act").get<std::string>());
        layers.push_back(std::move(l));
    }
    return layers;
}

inline nlohmann::json network_to_json(const NetworkF& net) {
    nlohmann::json j;
    j["format"] = "gradapt-net";
    j["version"] = 1;
    j["init_scheme"] = "uniform-fan-in";
    j["layers"] = layers_to_json(net.layers);
    j["init_snapshot"] = layers_to_json(net.init_snapshot);
    return j;
}

inline NetworkF network_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "gradapt-net") throw ConfigError("not a network checkpoint");
    if (j.value("version", 0) != 1) throw ConfigError("unsupported checkpoint version");
    NetworkF net;
    net.layers = layers_from_json(j.at("layers"));
    net.init_snapshot = layers_from_json(j.at("init_snapshot"));
    if (net.layers.empty()) throw ConfigError("checkpoint has no layers");
    if (net.init_snapshot.size() != net.layers.size()) throw ConfigError("checkpoint snapshot layer count mismatch");
    for (std::size_t i = 0; i + 1 < net.layers.size(); ++i)
        if (net.layers[i].out_dim() != net.layers[i + 1].in_dim())
            throw ConfigError("checkpoint layer dimensions do not chain");
    return net;
}

inline void save_network(const NetworkF& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);
    out << network_to_json(net).dump(2) << '\n';
}

inline NetworkF load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open checkpoint: " + path);
    nlohmann::json j;
    in >> j;
    return network_from_json(j);
}

}  // namespace gradapt
