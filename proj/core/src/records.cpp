#include "tipgrade/records.hpp"

namespace tipgrade {

const char* method_id(Method method) {
    switch (method) {
        case Method::JudgeLM: return "judgelm";
        case Method::ReferenceAided: return "reference_aided";
        case Method::NoReference: return "no_reference";
        case Method::Additive: return "additive";
        case Method::Adaptive: return "adaptive";
    }
    return "unknown";
}

const char* method_display_name(Method method) {
    switch (method) {
        case Method::JudgeLM: return "JudgeLM";
        case Method::ReferenceAided: return "Reference Aided";
        case Method::NoReference: return "No Reference";
        case Method::Additive: return "Additive";
        case Method::Adaptive: return "Adaptive";
    }
    return "Unknown";
}

std::optional<Method> method_from_id(const std::string& id) {
    if (id == "judgelm") return Method::JudgeLM;
    if (id == "reference_aided") return Method::ReferenceAided;
    if (id == "no_reference") return Method::NoReference;
    if (id == "additive") return Method::Additive;
    if (id == "adaptive") return Method::Adaptive;
    return std::nullopt;
}

const char* record_status_name(RecordStatus status) {
    switch (status) {
        case RecordStatus::Ok: return "ok";
        case RecordStatus::Overflow: return "overflow";
        case RecordStatus::ParseFailed: return "parse_failed";
    }
    return "unknown";
}

std::string EvaluationRecord::cell_key() const {
    std::string key;
    key.reserve(question_id.size() + student_id.size() + model_name.size() + 24);
    key += question_id;
    key += '\x1f';
    key += student_id;
    key += '\x1f';
    key += method_id(method);
    key += '\x1f';
    key += model_name;
    return key;
}

} // namespace tipgrade
