#pragma once

#include "tipgrade/dataset.hpp"
#include "tipgrade/records.hpp"

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tipgrade {

enum class StdConvention { Sample, Population };

// Building blocks shared by the record-level statistics. median_of sorts a
// copy; std_dev_of needs at least two values under the Sample convention.
double mean_of(std::span<const double> values);
double median_of(std::span<const double> values);
double std_dev_of(std::span<const double> values, StdConvention convention);

/// Distribution summary over ok records only; sentinel records never enter.
/// All stats absent when n is 0 (std also absent for n = 1 under Sample).
struct ScoreStats {
    std::size_t n = 0;
    std::optional<double> mean;
    std::optional<double> median;
    std::optional<double> std_dev;
};

ScoreStats score_statistics(std::span<const EvaluationRecord> records,
                            StdConvention convention = StdConvention::Sample);
ScoreStats score_statistics_over(std::span<const int> scores,
                                 StdConvention convention = StdConvention::Sample);

struct DeviationEntry {
    std::string question_id;
    std::string student_id;
    int deviation = 0;   // model score minus human score
};

/// Deviation from human scoring over answers that have both an ok record
/// and a human score. Excluded records are counted, not silently dropped.
struct AgreementStats {
    std::size_t n_paired = 0;
    std::optional<double> mad;    // mean absolute deviation
    std::optional<double> rmse;   // root mean square deviation
    std::vector<DeviationEntry> deviations;
    std::size_t excluded_sentinels = 0;   // records with non-ok status
    std::size_t excluded_unpaired = 0;    // ok records without a human score
};

AgreementStats agreement(std::span<const EvaluationRecord> records, const Dataset& dataset);

/// Criterion fulfilment over Additive records: per-criterion counts with
/// percentages against the total answer count, the full combination table,
/// and how often the model's own total disagreed with the flag sum.
struct CriterionAnalysis {
    std::size_t total_answers = 0;
    std::size_t ok_records = 0;
    std::array<std::size_t, 3> criterion_counts{};
    std::array<double, 3> criterion_percentages{};   // rounded to 2 decimals
    std::map<std::array<bool, 3>, std::size_t> combinations;   // all 8 keys present
    std::size_t inconsistencies = 0;
    double inconsistency_percentage = 0.0;           // rounded to 2 decimals
};

/// Throws std::invalid_argument when a non-Additive record is present.
CriterionAnalysis criterion_analysis(std::span<const EvaluationRecord> records,
                                     std::size_t total_answers);

/// Per-question score counts over the six columns -1,0,1,2,3,4 (sentinels
/// included), plus the marginal histogram. Rows follow dataset question
/// order.
struct ScoreMatrix {
    static constexpr int kColumns = 6;   // scores -1..4
    std::vector<std::string> question_ids;
    std::vector<std::array<std::size_t, kColumns>> cells;
    std::array<std::size_t, kColumns> histogram{};

    static std::size_t column_of(int score) { return static_cast<std::size_t>(score + 1); }
};

/// Throws std::invalid_argument when a record references a question absent
/// from the dataset.
ScoreMatrix score_matrix(std::span<const EvaluationRecord> records, const Dataset& dataset);

} // namespace tipgrade
