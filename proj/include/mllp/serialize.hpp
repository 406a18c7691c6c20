#ifndef MLLP_SERIALIZE_HPP
#define MLLP_SERIALIZE_HPP

#include <fstream>
#include <string>

#include <json.hpp>

#include "mllp/crs.hpp"
#include "mllp/data.hpp"
#include "mllp/model.hpp"

namespace mllp {

using json = nlohmann::json;

inline json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.data}};
}

inline Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
    m.data = j.at("data").get<std::vector<double>>();
    require(m.data.size() == m.rows * m.cols, "matrix_from_json: inconsistent shape");
    return m;
}

inline json model_to_json(const MllpModel& model) {
    json layers = json::array();
    for (const auto& lw : model.layers)
        layers.push_back({{"kind", lw.kind == LayerKind::Conjunction ? "conjunction" : "disjunction"},
                          {"layer_index", lw.layer_index},
                          {"w", matrix_to_json(lw.w)}});
    json gates = json::array();
    for (const auto& gp : model.gates)
        gates.push_back({{"log_alpha", gp.log_alpha},
                         {"group_sizes", gp.group_sizes},
                         {"beta", gp.beta},
                         {"gamma", gp.gamma},
                         {"zeta", gp.zeta}});
    return json{{"input_width", model.input_width},
                {"class_count", model.class_count},
                {"layers", layers},
                {"gates", gates},
                {"gate_config",
                 {{"enabled", model.gate_config.enabled},
                  {"input_drop_rate", model.gate_config.input_drop_rate},
                  {"hidden_drop_rate", model.gate_config.hidden_drop_rate},
                  {"gate_output_layer", model.gate_config.gate_output_layer},
                  {"beta", model.gate_config.beta},
                  {"gamma", model.gate_config.gamma},
                  {"zeta", model.gate_config.zeta}}}};
}

inline MllpModel model_from_json(const json& j) {
    MllpModel model;
    model.input_width = j.at("input_width").get<std::size_t>();
    model.class_count = j.at("class_count").get<std::size_t>();
    for (const auto& jl : j.at("layers")) {
        LayerWeights lw;
        lw.kind = jl.at("kind").get<std::string>() == "conjunction" ? LayerKind::Conjunction
                                                                    : LayerKind::Disjunction;
        lw.layer_index = jl.at("layer_index").get<int>();
        lw.w = matrix_from_json(jl.at("w"));
        model.layers.push_back(std::move(lw));
    }
    for (const auto& jg : j.at("gates")) {
        GateParams gp;
        gp.log_alpha = jg.at("log_alpha").get<std::vector<double>>();
        gp.group_sizes = jg.at("group_sizes").get<std::vector<int>>();
        gp.beta = jg.at("beta").get<double>();
        gp.gamma = jg.at("gamma").get<double>();
        gp.zeta = jg.at("zeta").get<double>();
        model.gates.push_back(std::move(gp));
    }
    const json& gc = j.at("gate_config");
    model.gate_config.enabled = gc.at("enabled").get<bool>();
    model.gate_config.input_drop_rate = gc.at("input_drop_rate").get<double>();
    model.gate_config.hidden_drop_rate = gc.at("hidden_drop_rate").get<double>();
    model.gate_config.gate_output_layer = gc.at("gate_output_layer").get<bool>();
    model.gate_config.beta = gc.at("beta").get<double>();
    model.gate_config.gamma = gc.at("gamma").get<double>();
    model.gate_config.zeta = gc.at("zeta").get<double>();
    return model;
}

/// CRS as a layer list of sparse row sets.
inline json crs_to_json(const CrsModel& crs) {
    return json{{"input_width", crs.input_width},
                {"layers", crs.layers},
                {"feature_names", crs.feature_names},
                {"class_names", crs.class_names}};
}

inline CrsModel crs_from_json(const json& j) {
    CrsModel crs;
    crs.input_width = j.at("input_width").get<std::size_t>();
    crs.layers = j.at("layers").get<std::vector<std::vector<std::vector<std::size_t>>>>();
    crs.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    crs.class_names = j.at("class_names").get<std::vector<std::string>>();
    return crs;
}

/// Binarized dataset cache with provenance, for reuse across runs.
inline json dataset_to_json(const BinaryDataset& ds) {
    json prov = json::array();
    for (const auto& p : ds.provenance)
        prov.push_back({{"source_column", p.source_column},
                        {"value", p.value},
                        {"lo", p.lo},
                        {"hi", p.hi},
                        {"is_interval", p.is_interval}});
    return json{{"X", matrix_to_json(ds.X)},
                {"Y", matrix_to_json(ds.Y)},
                {"labels", ds.labels},
                {"feature_names", ds.feature_names},
                {"class_names", ds.class_names},
                {"provenance", prov},
                {"warnings", ds.warnings}};
}

inline BinaryDataset dataset_from_json(const json& j) {
    BinaryDataset ds;
    ds.X = matrix_from_json(j.at("X"));
    ds.Y = matrix_from_json(j.at("Y"));
    ds.labels = j.at("labels").get<std::vector<std::size_t>>();
    ds.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    ds.class_names = j.at("class_names").get<std::vector<std::string>>();
    for (const auto& jp : j.at("provenance")) {
        BinaryDataset::Provenance p;
        p.source_column = jp.at("source_column").get<std::size_t>();
        p.value = jp.at("value").get<std::string>();
        p.lo = jp.at("lo").get<double>();
        p.hi = jp.at("hi").get<double>();
        p.is_interval = jp.at("is_interval").get<bool>();
        ds.provenance.push_back(std::move(p));
    }
    ds.warnings = j.at("warnings").get<std::vector<std::string>>();
    return ds;
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    return json::parse(in);
}

} // namespace mllp

#endif
