#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>

#include "qevent/bounds.hpp"
#include "qevent/measurement.hpp"
#include "qevent/protocols.hpp"
#include "qevent/qla.hpp"

namespace qevent {

// All emission goes through ordered_json so identical inputs produce
// byte-identical output.
using Json = nlohmann::ordered_json;

// Matrix wire format: {"dim": d, "entries": [[re, im], ...]} row-major,
// d*d entries. Shared by the CLI and the instance files.
Json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const Json& j);

Json density_to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const Json& j);

// Ensemble: {"dim": d, "measurements": [matrix, ...], "labels": [...]}.
Json ensemble_to_json(const MeasurementEnsemble& ens);
MeasurementEnsemble ensemble_from_json(const Json& j);

// OR/event instance:
// {"dim", "rho", "ensemble", "case": "one"|"two"|"unknown", "eps", "delta"}.
Json or_instance_to_json(const OrInstance& inst);
OrInstance or_instance_from_json(const Json& j);

std::string case_tag_name(CaseTag tag);
CaseTag case_tag_from_name(const std::string& name);

Json check_report_to_json(const CheckReport& report);

// One trajectory as a single JSON object; dumps are emitted as JSON lines,
// one record per shot.
Json trajectory_to_json(const TrajectoryRecord& record);

// FNV-1a over the compact dump; stable across runs for identical content.
std::uint64_t fnv1a(std::string_view bytes);
std::string json_hash_hex(const Json& j);

// Load/parse helpers used by the CLI; raise std::runtime_error with the
// offending path or field in the message.
Json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace qevent
