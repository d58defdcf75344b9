#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "qstab/channel.hpp"
#include "qstab/engine.hpp"
#include "qstab/fixpoint.hpp"
#include "qstab/qls.hpp"

// Wire formats shared by the scenario runner and its report files. Complex
// numbers are [re, im] pairs; matrices are row-major arrays of rows. All
// float formatting is locale-independent.

namespace qstab {

nlohmann::json complex_to_json(const Complex& z);
Complex complex_from_json(const nlohmann::json& j);

nlohmann::json matrix_to_json(const Matrix& M);
Matrix matrix_from_json(const nlohmann::json& j);

// {dims, label, kraus}; the factor dimensions reconstruct the space.
nlohmann::json channel_to_json(const Channel& E);
Channel channel_from_json(const nlohmann::json& j,
                          ChannelKind kind = ChannelKind::Schrodinger);

// Decision, dimensions, flags, and the witness state when one exists.
nlohmann::json qls_report_to_json(const QlsReport& rep);

// Block sizes, weights, and fixed factor states; isometries are omitted.
nlohmann::json block_decomposition_to_json(const BlockDecomposition& bd);

// 17 significant digits (round-trip exact), '.' decimal point regardless of
// locale, trailing zeros trimmed as in printf %g.
std::string format_double(double v);

// Header "step,map_index,trace_dist,lyapunov" plus one row per record.
void write_trajectory_csv(std::ostream& os, const Trajectory& tr);

// Minimal structural validator for the report schemas shipped in schemas/.
// Supports: type, properties, required, additionalProperties (bool), items
// (single schema), enum, minimum. Returns one message per violation, empty
// when the document conforms.
std::vector<std::string> schema_violations(const nlohmann::json& schema,
                                           const nlohmann::json& doc);

}  // namespace qstab
