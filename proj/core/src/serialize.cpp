#include "qevent/serialize.hpp"

#include <fstream>
#include <sstream>

namespace qevent {

namespace {

[[noreturn]] void fail_field(const std::string& field, const std::string& why) {
  throw std::runtime_error("invalid instance JSON: field '" + field + "' " + why);
}

}  // namespace

Json matrix_to_json(const ComplexMatrix& m) {
  if (m.rows() != m.cols()) {
    throw std::invalid_argument("matrix_to_json: square matrices only");
  }
  Json entries = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      entries.push_back(Json::array({m(r, c).real(), m(r, c).imag()}));
    }
  }
  Json j;
  j["dim"] = m.rows();
  j["entries"] = std::move(entries);
  return j;
}

ComplexMatrix matrix_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("dim") || !j.contains("entries")) {
    fail_field("matrix", "must be an object with 'dim' and 'entries'");
  }
  if (!j["dim"].is_number_integer() || j["dim"].get<std::int64_t>() < 1) {
    fail_field("dim", "must be a positive integer");
  }
  const Eigen::Index d = j["dim"].get<Eigen::Index>();
  const Json& entries = j["entries"];
  if (!entries.is_array() ||
      entries.size() != static_cast<std::size_t>(d * d)) {
    fail_field("entries", "must hold dim*dim [re, im] pairs");
  }
  ComplexMatrix m(d, d);
  std::size_t idx = 0;
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c, ++idx) {
      const Json& e = entries[idx];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
          !e[1].is_number()) {
        fail_field("entries", "each entry must be an [re, im] number pair");
      }
      m(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
    }
  }
  if (!is_finite(m)) fail_field("entries", "must be finite");
  return m;
}

Json density_to_json(const DensityMatrix& rho) {
  return matrix_to_json(rho.matrix());
}

DensityMatrix density_from_json(const Json& j) {
  return DensityMatrix(matrix_from_json(j));
}

Json ensemble_to_json(const MeasurementEnsemble& ens) {
  Json j;
  j["dim"] = ens.dim();
  Json ms = Json::array();
  for (const auto& m : ens.measurements()) {
    ms.push_back(matrix_to_json(m.op().matrix()));
  }
  j["measurements"] = std::move(ms);
  j["labels"] = ens.labels();
  return j;
}

MeasurementEnsemble ensemble_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("measurements")) {
    fail_field("ensemble", "must be an object with 'measurements'");
  }
  const Json& ms = j["measurements"];
  if (!ms.is_array() || ms.empty()) {
    fail_field("measurements", "must be a non-empty array of matrices");
  }
  std::vector<TwoOutcomeMeasurement> out;
  out.reserve(ms.size());
  for (const auto& mj : ms) {
    out.emplace_back(PsdOperator(matrix_from_json(mj), true));
  }
  std::vector<std::string> labels;
  if (j.contains("labels")) {
    if (!j["labels"].is_array()) fail_field("labels", "must be an array");
    for (const auto& l : j["labels"]) labels.push_back(l.get<std::string>());
  }
  return MeasurementEnsemble(std::move(out), std::move(labels));
}

std::string case_tag_name(CaseTag tag) {
  switch (tag) {
    case CaseTag::One: return "one";
    case CaseTag::Two: return "two";
    case CaseTag::Unknown: return "unknown";
  }
  return "unknown";
}

CaseTag case_tag_from_name(const std::string& name) {
  if (name == "one") return CaseTag::One;
  if (name == "two") return CaseTag::Two;
  if (name == "unknown") return CaseTag::Unknown;
  fail_field("case", "must be one of 'one', 'two', 'unknown'");
}

Json or_instance_to_json(const OrInstance& inst) {
  Json j;
  j["dim"] = inst.state().dim();
  j["rho"] = density_to_json(inst.state());
  j["ensemble"] = ensemble_to_json(inst.ensemble());
  j["case"] = case_tag_name(inst.tag());
  j["eps"] = inst.eps();
  j["delta"] = inst.delta();
  return j;
}

OrInstance or_instance_from_json(const Json& j) {
  if (!j.is_object()) fail_field("instance", "must be a JSON object");
  for (const char* field : {"rho", "ensemble", "case", "eps", "delta"}) {
    if (!j.contains(field)) {
      fail_field(field, "is required");
    }
  }
  if (!j["eps"].is_number() || !j["delta"].is_number()) {
    fail_field("eps/delta", "must be numbers");
  }
  return OrInstance(ensemble_from_json(j["ensemble"]),
                    density_from_json(j["rho"]),
                    case_tag_from_name(j["case"].get<std::string>()),
                    j["eps"].get<double>(), j["delta"].get<double>());
}

Json check_report_to_json(const CheckReport& report) {
  Json j;
  j["bound"] = bound_id_name(report.id);
  j["lhs"] = report.lhs;
  j["rhs"] = report.rhs;
  j["margin"] = report.margin;
  j["pass"] = report.pass;
  j["tight"] = report.tight;
  j["instance"] = report.label;
  if (!report.detail.empty()) j["detail"] = report.detail;
  return j;
}

Json trajectory_to_json(const TrajectoryRecord& record) {
  Json j;
  Json outcomes = Json::array();
  for (const auto& o : record.outcomes) {
    outcomes.push_back(Json::array({o.outcome, o.accepted}));
  }
  j["outcomes"] = std::move(outcomes);
  j["first_accept_round"] = record.first_accept_round
                                ? Json(*record.first_accept_round)
                                : Json(nullptr);
  j["first_accept_index"] = record.first_accept_index
                                ? Json(*record.first_accept_index)
                                : Json(nullptr);
  j["final_state"] = density_to_json(record.final_state);
  return j;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= static_cast<std::uint64_t>(c);
    h *= 1099511628211ull;
  }
  return h;
}

std::string json_hash_hex(const Json& j) {
  const std::string dump = j.dump();
  std::ostringstream out;
  out << std::hex << fnv1a(dump);
  return out.str();
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path);
  }
  Json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("malformed JSON in " + path + ": " + e.what());
  }
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("cannot write file: " + path);
  }
  out << content;
}

}  // namespace qevent
