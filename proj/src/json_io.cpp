#include "qstab/json_io.hpp"

#include <charconv>
#include <ostream>
#include <stdexcept>

namespace qstab {

using nlohmann::json;

nlohmann::json complex_to_json(const Complex& z) { return json::array({z.real(), z.imag()}); }

Complex complex_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw std::invalid_argument("complex entries must be [re, im] number pairs");
    return Complex(j[0].get<double>(), j[1].get<double>());
}

json matrix_to_json(const Matrix& M) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(complex_to_json(M(r, c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const json& j) {
    if (!j.is_array() || j.empty()) throw std::invalid_argument("matrix must be a nonempty array of rows");
    const std::size_t nrows = j.size();
    if (!j[0].is_array() || j[0].empty())
        throw std::invalid_argument("matrix rows must be nonempty arrays");
    const std::size_t ncols = j[0].size();
    Matrix M(nrows, ncols);
    for (std::size_t r = 0; r < nrows; ++r) {
        if (!j[r].is_array() || j[r].size() != ncols)
            throw std::invalid_argument("matrix rows must all have the same length");
        for (std::size_t c = 0; c < ncols; ++c) M(r, c) = complex_from_json(j[r][c]);
    }
    return M;
}

json channel_to_json(const Channel& E) {
    json out;
    out["dims"] = E.space().factor_dims();
    out["label"] = E.label();
    json kraus = json::array();
    for (const Matrix& K : E.kraus()) kraus.push_back(matrix_to_json(K));
    out["kraus"] = std::move(kraus);
    return out;
}

Channel channel_from_json(const json& j, ChannelKind kind) {
    if (!j.is_object() || !j.contains("dims") || !j.contains("kraus"))
        throw std::invalid_argument("channel objects need dims and kraus fields");
    const HilbertSpace H(j.at("dims").get<std::vector<std::size_t>>());
    std::vector<Matrix> kraus;
    for (const auto& k : j.at("kraus")) kraus.push_back(matrix_from_json(k));
    return Channel::from_kraus(H, std::move(kraus), j.value("label", std::string()), kind);
}

json qls_report_to_json(const QlsReport& rep) {
    json out;
    out["decision"] = rep.decision;
    out["intersection_dim"] = rep.intersection_dim;
    out["support_dims"] = rep.support_dims;
    out["support_condition"] = rep.support_condition;
    if (rep.witness) {
        out["witness"] = {{"dims", rep.witness->space().factor_dims()},
                          {"matrix", matrix_to_json(rep.witness->mat())}};
    }
    return out;
}

json block_decomposition_to_json(const BlockDecomposition& bd) {
    json blocks = json::array();
    for (const Block& b : bd.blocks) {
        blocks.push_back({{"commutant_dim", b.s},
                          {"factor_dim", b.f},
                          {"weight", b.p},
                          {"fixed_factor_state", matrix_to_json(b.tau_f)}});
    }
    return json{{"dims", bd.space.factor_dims()},
                {"blocks", std::move(blocks)},
                {"factor_residual", bd.factor_residual},
                {"reassembly_residual", bd.reassembly_residual}};
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
    os << "step,map_index,trace_dist,lyapunov\n";
    for (const StepRecord& r : tr.metrics) {
        os << r.step << ',' << r.map_index << ',' << format_double(r.trace_dist) << ','
           << format_double(r.lyapunov) << '\n';
    }
}

namespace {

const char* type_name(const json& v) {
    switch (v.type()) {
        case json::value_t::object: return "object";
        case json::value_t::array: return "array";
        case json::value_t::string: return "string";
        case json::value_t::boolean: return "boolean";
        case json::value_t::number_integer:
        case json::value_t::number_unsigned: return "integer";
        case json::value_t::number_float: return "number";
        case json::value_t::null: return "null";
        default: return "unknown";
    }
}

bool type_matches(const std::string& want, const json& v) {
    if (want == "number") return v.is_number();
    if (want == "integer") return v.is_number_integer() || v.is_number_unsigned();
    return want == type_name(v);
}

void check(const json& schema, const json& doc, const std::string& path,
           std::vector<std::string>& out) {
    if (!schema.is_object()) return;

    if (schema.contains("type") && !type_matches(schema["type"].get<std::string>(), doc)) {
        out.push_back(path + ": expected " + schema["type"].get<std::string>() + ", got " +
                      type_name(doc));
        return;
    }
    if (schema.contains("enum")) {
        bool found = false;
        for (const auto& option : schema["enum"])
            if (option == doc) found = true;
        if (!found) out.push_back(path + ": value not in enum");
    }
    if (schema.contains("minimum") && doc.is_number() &&
        doc.get<double>() < schema["minimum"].get<double>())
        out.push_back(path + ": below minimum");

    if (doc.is_object()) {
        if (schema.contains("required"))
            for (const auto& key : schema["required"])
                if (!doc.contains(key.get<std::string>()))
                    out.push_back(path + ": missing required field " + key.get<std::string>());
        const json props = schema.value("properties", json::object());
        for (auto it = doc.begin(); it != doc.end(); ++it) {
            if (props.contains(it.key()))
                check(props[it.key()], it.value(), path + "/" + it.key(), out);
            else if (schema.value("additionalProperties", json(true)) == json(false))
                out.push_back(path + ": unexpected field " + it.key());
        }
    }
    if (doc.is_array() && schema.contains("items")) {
        std::size_t i = 0;
        for (const auto& item : doc)
            check(schema["items"], item, path + "/" + std::to_string(i++), out);
    }
}

}  // namespace

std::vector<std::string> schema_violations(const json& schema, const json& doc) {
    std::vector<std::string> out;
    check(schema, doc, "", out);
    return out;
}

}  // namespace qstab
