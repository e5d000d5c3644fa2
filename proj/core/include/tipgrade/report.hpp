#pragma once

#include "tipgrade/dataset.hpp"
#include "tipgrade/metrics.hpp"
#include "tipgrade/records.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace tipgrade {

/// One (method, model) slice of a run store.
struct MethodModelGroup {
    Method method = Method::ReferenceAided;
    std::string model_name;
    std::vector<EvaluationRecord> records;
};

/// Splits records into per-(method, model) groups, ordered by method then
/// model name, so downstream output is deterministic.
std::vector<MethodModelGroup> group_records(std::span<const EvaluationRecord> records);

/// Writes the full report bundle into out_dir:
///   stats.csv                  method,n,mean,median,std_*,model
///   agreement.csv              method,n_paired,mad,rmse,model
///   heatmap.csv                question_id,score,count,method,model
///   histogram.csv              score,count,method,model
///   deviations.csv             question_id,student_id,deviation,method,model
///   criterion_frequencies.csv  criterion,count,percentage,model
///   criterion_combinations.csv c1,c2,c3,count,model
///   summary.txt                human-readable rendering of all of the above
/// Every file exists even when the record set is empty. Means and std are
/// printed to 3 decimals, medians to 1, percentages to 2; the unrounded
/// values stay in the metrics structs.
void emit_report(std::span<const EvaluationRecord> records, const Dataset& dataset,
                 const std::filesystem::path& out_dir,
                 StdConvention convention = StdConvention::Sample);

} // namespace tipgrade
